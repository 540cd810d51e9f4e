"""B-spline basis evaluation with clamped uniform knots (Cox-de Boor)."""

from __future__ import annotations

import numpy as np

__all__ = ["bspline_knots", "bspline_design"]


def bspline_knots(n_basis: int, order: int, a: float, b: float) -> np.ndarray:
    """Clamped knot vector with uniformly spaced interior knots.

    The first and last knots repeat ``order`` times; ``n_basis - order``
    interior knots are equally spaced inside ``(a, b)``.
    """
    if order < 2:
        raise ValueError("order must be at least 2")
    if n_basis < order:
        raise ValueError("n_basis must be at least the order")
    if not a < b:
        raise ValueError("need a < b")
    n_interior = n_basis - order
    interior = np.linspace(a, b, n_interior + 2)[1:-1]
    return np.concatenate([np.full(order, a), interior, np.full(order, b)])


def bspline_design(x, n_basis: int, order: int, a: float, b: float) -> np.ndarray:
    """Evaluate all basis functions at the points ``x``.

    Returns
    -------
    ndarray, shape (len(x), n_basis)
        Row j holds the basis values at ``x[j]``. Rows sum to 1 for x in
        ``[a, b]`` (partition of unity).
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    t = bspline_knots(n_basis, order, a, b)
    n_knots = t.size

    # Degree 0: indicator of [t_i, t_{i+1}), right-closed at the domain end.
    B = np.zeros((x.size, n_knots - 1))
    for i in range(n_knots - 1):
        B[:, i] = (t[i] <= x) & (x < t[i + 1])
    B[x == b, n_basis - 1] = 1.0

    for k in range(2, order + 1):
        new = np.zeros((x.size, n_knots - k))
        for i in range(n_knots - k):
            left_den = t[i + k - 1] - t[i]
            right_den = t[i + k] - t[i + 1]
            term = np.zeros(x.size)
            if left_den > 0:
                term = term + (x - t[i]) / left_den * B[:, i]
            if right_den > 0:
                term = term + (t[i + k] - x) / right_den * B[:, i + 1]
            new[:, i] = term
        B = new
    return B[:, :n_basis]
