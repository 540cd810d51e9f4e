"""Functional principal component analysis on a quadrature grid.

The sample covariance surface is diagonalized through the symmetric matrix
``W^{1/2} C W^{1/2}`` where ``W`` is the diagonal of quadrature weights, so
the recovered eigenfunctions are orthonormal in the quadrature inner product
and the component scores have variance equal to the eigenvalues.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .fdata import FunctionalSample, Grid, center

__all__ = ["FpcBasis", "fpc_decompose", "project_scores", "reconstruct"]

# Relative cutoff below which trailing eigenvalues are treated as zero.
_EIGVAL_RTOL = 1e-10


@dataclass(frozen=True)
class FpcBasis:
    """Leading eigenfunctions of a sample covariance operator.

    Parameters
    ----------
    grid : Grid
        Grid the eigenfunctions are evaluated on.
    mean : ndarray, shape (p,)
        Sample mean curve removed before the decomposition.
    eigenfunctions : ndarray, shape (K, p)
        Eigenfunctions, orthonormal under the grid's quadrature weights.
    eigenvalues : ndarray, shape (K,)
        Matching eigenvalues in decreasing order, all nonnegative.
    rank_deficient : bool
        True when a requested component had a (numerically) zero eigenvalue.
    """

    grid: Grid
    mean: np.ndarray
    eigenfunctions: np.ndarray
    eigenvalues: np.ndarray
    rank_deficient: bool

    @property
    def n_components(self) -> int:
        return self.eigenfunctions.shape[0]


def fpc_decompose(sample: FunctionalSample, n_components: int) -> tuple[FpcBasis, np.ndarray]:
    """Extract leading principal components of a functional sample.

    Parameters
    ----------
    sample : FunctionalSample
        ``n`` curves on a common grid of ``p`` points.
    n_components : int
        Number of components requested; at most ``min(n - 1, p)``.

    Returns
    -------
    basis : FpcBasis
        Eigenfunctions, eigenvalues and the removed mean curve.
    scores : ndarray, shape (n, K)
        Quadrature projections of the centered curves onto the basis.
    """
    if n_components < 1:
        raise ValueError("n_components must be positive")
    n, p = sample.values.shape
    if n < 2:
        raise ValueError("need at least two curves to estimate a covariance")
    if n_components > min(n - 1, p):
        raise ValueError(
            f"n_components={n_components} exceeds the covariance rank bound "
            f"min(n - 1, p) = {min(n - 1, p)}"
        )
    K = n_components

    centered, mean = center(sample)
    w = sample.grid.weights
    sqrt_w = np.sqrt(w)

    cov = centered.values.T @ centered.values / n
    sym = sqrt_w[:, None] * cov * sqrt_w[None, :]
    eigvals, eigvecs = np.linalg.eigh(sym)
    order = np.argsort(eigvals)[::-1][:K]
    lam = eigvals[order]
    vecs = eigvecs[:, order]

    lam_max = lam[0] if lam.size else 0.0
    rank_deficient = False
    if lam_max <= 0.0:
        lam = np.zeros_like(lam)
        rank_deficient = True
    else:
        small = lam < _EIGVAL_RTOL * lam_max
        if np.any(small):
            lam = np.where(small, 0.0, lam)
            rank_deficient = True

    # Back-transform to eigenfunctions of the covariance operator and fix
    # the sign so the entry of largest magnitude is positive.
    funcs = (vecs / sqrt_w[:, None]).T
    for k in range(K):
        j = np.argmax(np.abs(funcs[k]))
        if funcs[k, j] < 0:
            funcs[k] = -funcs[k]

    basis = FpcBasis(sample.grid, mean, funcs, lam, rank_deficient)
    scores = centered.values @ (funcs * w).T
    return basis, scores


def project_scores(basis: FpcBasis, sample: FunctionalSample) -> np.ndarray:
    """Project curves onto a fitted basis after removing its stored mean."""
    if not sample.grid.close_to(basis.grid):
        raise ValueError("sample grid does not match the basis grid")
    centered = sample.values - basis.mean
    return centered @ (basis.eigenfunctions * basis.grid.weights).T


def reconstruct(basis: FpcBasis, scores: np.ndarray) -> FunctionalSample:
    """Rebuild curves from scores: mean plus the score-weighted basis."""
    scores = np.asarray(scores, dtype=float)
    if scores.ndim != 2 or scores.shape[1] != basis.n_components:
        raise ValueError("scores must have one column per basis component")
    values = basis.mean + scores @ basis.eigenfunctions
    return FunctionalSample(values, basis.grid)
