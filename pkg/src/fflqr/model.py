"""Function-on-function linear quantile regression and mean-regression baselines.

The quantile model represents response and predictors by their leading
principal component scores, regresses response scores on predictor scores
under the check loss, and maps fitted scores back to curves. Two least
squares baselines share the prediction interface: one on the same score
representation, one on a B-spline expansion of the curves.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .bspline import bspline_design
from .errors import NumericalError, RankDeficiencyWarning
from .fdata import FunctionalSample, Grid
from .fpca import FpcBasis, fpc_decompose, project_scores, reconstruct
from .qreg import QrCoefMatrix, check_loss, qr_fit_multi, _column_rank

__all__ = [
    "FflqrFit",
    "BsplineLsFit",
    "CoefficientSurface",
    "fit_fflqr",
    "fit_fpc_ls",
    "fit_bspline_ls",
    "predict",
    "coefficient_surface",
    "intercept_function",
    "score_objective",
    "save_model",
    "load_model",
]


@dataclass(frozen=True)
class FflqrFit:
    """A fitted score-space regression of one functional response.

    Parameters
    ----------
    tau : float
        Quantile level; 0.5 for the least squares variant, where it only
        labels the central tendency being fit.
    response_basis : FpcBasis
        K_Y leading components of the response sample.
    predictor_bases : tuple of FpcBasis
        One K_X-component basis per kept predictor.
    coefs : QrCoefMatrix
        (1 + sum K_X) x K_Y coefficients; row 0 is the intercept.
    predictor_indices : tuple of int
        Original 1-based predictor labels, in design order.
    method : str
        "fflqr" for check-loss fits, "fpc-ls" for the least squares variant.
    """

    tau: float
    response_basis: FpcBasis
    predictor_bases: tuple
    coefs: QrCoefMatrix
    predictor_indices: tuple
    method: str = "fflqr"

    def __post_init__(self):
        q = 1 + sum(b.n_components for b in self.predictor_bases)
        if self.coefs.coefficients.shape != (q, self.response_basis.n_components):
            raise ValueError("coefficient matrix shape does not match the bases")
        if len(self.predictor_bases) != len(self.predictor_indices):
            raise ValueError("one predictor index per predictor basis required")


@dataclass(frozen=True)
class BsplineLsFit:
    """Function-on-function least squares on a B-spline representation.

    Parameters
    ----------
    theta : ndarray, shape (1 + M * n_basis, n_basis)
        Regression coefficients mapping predictor basis coordinates
        (intercept first) to response basis coordinates.
    response_grid, predictor_grids : Grid
        Evaluation grids of the training curves.
    n_basis, order : int
        B-spline dimension and order shared by all expansions.
    predictor_indices : tuple of int
        Original 1-based predictor labels, in design order.
    """

    theta: np.ndarray
    response_grid: Grid
    predictor_grids: tuple
    n_basis: int
    order: int
    predictor_indices: tuple
    method: str = "bspline-ls"


@dataclass(frozen=True)
class CoefficientSurface:
    """A bivariate coefficient surface evaluated on a grid pair.

    ``values[j, i]`` is the surface at ``(s_grid.points[j], t_grid.points[i])``.
    """

    values: np.ndarray
    s_grid: Grid
    t_grid: Grid
    predictor_index: int
    tau: float


def _validate_samples(Y: FunctionalSample, X) -> None:
    if len(X) < 1:
        raise ValueError("need at least one predictor sample")
    for m, x in enumerate(X):
        if x.n != Y.n:
            raise ValueError(
                f"predictor {m} has {x.n} curves but the response has {Y.n}"
            )


def _resolve_indices(X, predictor_indices):
    if predictor_indices is None:
        return tuple(range(1, len(X) + 1))
    predictor_indices = tuple(int(i) for i in predictor_indices)
    if len(predictor_indices) != len(X):
        raise ValueError("predictor_indices length must match the predictor list")
    if len(set(predictor_indices)) != len(predictor_indices):
        raise ValueError("predictor_indices must be distinct")
    return predictor_indices


def _score_design(Y, X, k_y, k_x):
    """Decompose all samples and assemble the intercept-plus-scores design."""
    response_basis, xi = fpc_decompose(Y, k_y)
    bases = []
    blocks = [np.ones((Y.n, 1))]
    for x in X:
        basis, zeta = fpc_decompose(x, k_x)
        bases.append(basis)
        blocks.append(zeta)
    return response_basis, xi, tuple(bases), np.hstack(blocks)


def fit_fflqr(
    Y: FunctionalSample,
    X,
    tau: float,
    k_y: int,
    k_x: int,
    predictor_indices=None,
) -> FflqrFit:
    """Fit the quantile regression of a functional response on functional predictors.

    Parameters
    ----------
    Y : FunctionalSample
        Response curves.
    X : list of FunctionalSample
        Predictor curve samples, each with the same number of curves as Y.
    tau : float
        Quantile level in (0, 1).
    k_y, k_x : int
        Number of principal components kept for the response and for every
        predictor.
    predictor_indices : sequence of int, optional
        Original 1-based labels of the predictors in X; defaults to 1..M.

    Returns
    -------
    FflqrFit
    """
    _validate_samples(Y, X)
    indices = _resolve_indices(X, predictor_indices)
    response_basis, xi, bases, design = _score_design(Y, X, k_y, k_x)
    coefs = qr_fit_multi(design, xi, tau, includes_intercept=True)
    return FflqrFit(tau, response_basis, bases, coefs, indices, "fflqr")


def fit_fpc_ls(
    Y: FunctionalSample,
    X,
    k_y: int,
    k_x: int,
    predictor_indices=None,
) -> FflqrFit:
    """Least squares counterpart of ``fit_fflqr`` on the same score design."""
    _validate_samples(Y, X)
    indices = _resolve_indices(X, predictor_indices)
    response_basis, xi, bases, design = _score_design(Y, X, k_y, k_x)
    coefs = _ls_solve(design, xi)
    return FflqrFit(
        0.5,
        response_basis,
        bases,
        QrCoefMatrix(coefs, 0.5, includes_intercept=True),
        indices,
        "fpc-ls",
    )


def _ls_solve(design: np.ndarray, responses: np.ndarray) -> np.ndarray:
    """Column-rank-aware least squares; dropped columns get zero coefficients."""
    keep = _column_rank(design)
    q = design.shape[1]
    if keep.size < q:
        warnings.warn(
            f"design has rank {keep.size} < {q}; dependent columns dropped",
            RankDeficiencyWarning,
            stacklevel=3,
        )
    coefs = np.zeros((q, responses.shape[1]))
    if keep.size > 0:
        coefs[keep] = np.linalg.lstsq(design[:, keep], responses, rcond=None)[0]
    return coefs


def _basis_coordinates(sample: FunctionalSample, n_basis: int, order: int):
    """Weighted least squares projection of curves onto a B-spline basis.

    Returns the (n, n_basis) coordinate matrix and the basis Gram matrix
    under the sample grid's quadrature.
    """
    grid = sample.grid
    B = bspline_design(grid.points, n_basis, order, grid.points[0], grid.points[-1])
    Bw = B * grid.weights[:, None]
    gram = B.T @ Bw
    try:
        coords = scipy.linalg.solve(gram, Bw.T @ sample.values.T, assume_a="pos").T
    except scipy.linalg.LinAlgError as exc:
        raise NumericalError(
            f"singular B-spline Gram matrix (n_basis={n_basis} too large for "
            f"a {grid.size}-point grid)"
        ) from exc
    return coords, gram, B


def fit_bspline_ls(
    Y: FunctionalSample,
    X,
    n_basis: int = 20,
    order: int = 4,
    predictor_indices=None,
) -> BsplineLsFit:
    """Function-on-function least squares through B-spline curve expansions.

    Curves are represented by weighted least squares coefficients in a
    clamped B-spline basis; the bivariate coefficient surfaces live in the
    tensor product of the predictor and response bases.
    """
    if not 2 <= order <= n_basis:
        raise ValueError("need order >= 2 and n_basis >= order")
    if n_basis > Y.grid.size:
        raise ValueError("n_basis exceeds the number of response grid points")
    _validate_samples(Y, X)
    indices = _resolve_indices(X, predictor_indices)

    d_resp, _, _ = _basis_coordinates(Y, n_basis, order)
    blocks = [np.ones((Y.n, 1))]
    for x in X:
        if n_basis > x.grid.size:
            raise ValueError("n_basis exceeds the number of predictor grid points")
        coords, gram, _ = _basis_coordinates(x, n_basis, order)
        blocks.append(coords @ gram)
    design = np.hstack(blocks)
    theta = _ls_solve(design, d_resp)
    return BsplineLsFit(
        theta,
        Y.grid,
        tuple(x.grid for x in X),
        n_basis,
        order,
        indices,
    )


def _predict_scores(fit: FflqrFit, X_new) -> FunctionalSample:
    if len(X_new) != len(fit.predictor_bases):
        raise ValueError(
            f"model uses {len(fit.predictor_bases)} predictors, got {len(X_new)}"
        )
    blocks = [np.ones((X_new[0].n, 1))]
    for basis, x in zip(fit.predictor_bases, X_new):
        blocks.append(project_scores(basis, x))
    xi_hat = np.hstack(blocks) @ fit.coefs.coefficients
    return reconstruct(fit.response_basis, xi_hat)


def _predict_bspline(fit: BsplineLsFit, X_new) -> FunctionalSample:
    if len(X_new) != len(fit.predictor_grids):
        raise ValueError(
            f"model uses {len(fit.predictor_grids)} predictors, got {len(X_new)}"
        )
    blocks = [np.ones((X_new[0].n, 1))]
    for grid, x in zip(fit.predictor_grids, X_new):
        if not x.grid.close_to(grid):
            raise ValueError("predictor grid does not match the fitted grid")
        coords, gram, _ = _basis_coordinates(x, fit.n_basis, fit.order)
        blocks.append(coords @ gram)
    d_hat = np.hstack(blocks) @ fit.theta
    g = fit.response_grid
    B_resp = bspline_design(g.points, fit.n_basis, fit.order, g.points[0], g.points[-1])
    return FunctionalSample(d_hat @ B_resp.T, g)


def predict(fit, X_new) -> FunctionalSample:
    """Predicted response curves for new predictor curves.

    Parameters
    ----------
    fit : FflqrFit or BsplineLsFit
    X_new : list of FunctionalSample
        Same number, order and grids as the predictors used in fitting.
    """
    if isinstance(fit, FflqrFit):
        return _predict_scores(fit, X_new)
    if isinstance(fit, BsplineLsFit):
        return _predict_bspline(fit, X_new)
    raise TypeError(f"cannot predict from {type(fit).__name__}")


def _block_rows(fit: FflqrFit, position: int) -> slice:
    start = 1 + sum(b.n_components for b in fit.predictor_bases[:position])
    return slice(start, start + fit.predictor_bases[position].n_components)


def coefficient_surface(fit: FflqrFit, predictor_index: int) -> CoefficientSurface:
    """Bivariate coefficient surface of one predictor.

    Parameters
    ----------
    fit : FflqrFit
    predictor_index : int
        One of ``fit.predictor_indices`` (original 1-based label).
    """
    if predictor_index not in fit.predictor_indices:
        raise ValueError(
            f"predictor {predictor_index} not in model {fit.predictor_indices}"
        )
    position = fit.predictor_indices.index(predictor_index)
    basis = fit.predictor_bases[position]
    block = fit.coefs.coefficients[_block_rows(fit, position)]
    values = basis.eigenfunctions.T @ block @ fit.response_basis.eigenfunctions
    return CoefficientSurface(
        values, basis.grid, fit.response_basis.grid, predictor_index, fit.tau
    )


def intercept_function(fit: FflqrFit) -> np.ndarray:
    """Intercept curve such that predictions decompose as
    intercept plus the integrals of each raw predictor against its surface.
    """
    g = fit.coefs.coefficients[0].copy()
    for position, basis in enumerate(fit.predictor_bases):
        mean_coords = (basis.eigenfunctions * basis.grid.weights) @ basis.mean
        g -= mean_coords @ fit.coefs.coefficients[_block_rows(fit, position)]
    return fit.response_basis.mean + g @ fit.response_basis.eigenfunctions


def score_objective(fit: FflqrFit, Y: FunctionalSample, X) -> np.ndarray:
    """In-sample check-loss objective per response score coordinate."""
    xi = project_scores(fit.response_basis, Y)
    blocks = [np.ones((Y.n, 1))]
    for basis, x in zip(fit.predictor_bases, X):
        blocks.append(project_scores(basis, x))
    resid = xi - np.hstack(blocks) @ fit.coefs.coefficients
    return check_loss(resid, fit.tau).sum(axis=0)


def _grid_to_json(grid: Grid) -> dict:
    return {"points": grid.points.tolist(), "weights": grid.weights.tolist()}


def _grid_from_json(obj: dict) -> Grid:
    return Grid(np.array(obj["points"]), np.array(obj["weights"]))


def _basis_to_json(basis: FpcBasis) -> dict:
    return {
        "grid": _grid_to_json(basis.grid),
        "mean": basis.mean.tolist(),
        "eigenfunctions": basis.eigenfunctions.tolist(),
        "eigenvalues": basis.eigenvalues.tolist(),
        "rank_deficient": basis.rank_deficient,
    }


def _basis_from_json(obj: dict) -> FpcBasis:
    return FpcBasis(
        _grid_from_json(obj["grid"]),
        np.array(obj["mean"]),
        np.array(obj["eigenfunctions"]),
        np.array(obj["eigenvalues"]),
        bool(obj["rank_deficient"]),
    )


def save_model(fit, path) -> None:
    """Serialize a fitted model to JSON with full float precision."""
    if isinstance(fit, FflqrFit):
        doc = {
            "kind": fit.method,
            "tau": fit.tau,
            "predictor_indices": list(fit.predictor_indices),
            "coefficients": fit.coefs.coefficients.tolist(),
            "response_basis": _basis_to_json(fit.response_basis),
            "predictor_bases": [_basis_to_json(b) for b in fit.predictor_bases],
        }
    elif isinstance(fit, BsplineLsFit):
        doc = {
            "kind": fit.method,
            "n_basis": fit.n_basis,
            "order": fit.order,
            "predictor_indices": list(fit.predictor_indices),
            "theta": fit.theta.tolist(),
            "response_grid": _grid_to_json(fit.response_grid),
            "predictor_grids": [_grid_to_json(g) for g in fit.predictor_grids],
        }
    else:
        raise TypeError(f"cannot serialize {type(fit).__name__}")
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh)


def load_model(path):
    """Load a model written by ``save_model``."""
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    kind = doc.get("kind")
    if kind in ("fflqr", "fpc-ls"):
        coefs = np.array(doc["coefficients"])
        return FflqrFit(
            float(doc["tau"]),
            _basis_from_json(doc["response_basis"]),
            tuple(_basis_from_json(b) for b in doc["predictor_bases"]),
            QrCoefMatrix(coefs, float(doc["tau"]), includes_intercept=True),
            tuple(doc["predictor_indices"]),
            kind,
        )
    if kind == "bspline-ls":
        return BsplineLsFit(
            np.array(doc["theta"]),
            _grid_from_json(doc["response_grid"]),
            tuple(_grid_from_json(g) for g in doc["predictor_grids"]),
            int(doc["n_basis"]),
            int(doc["order"]),
            tuple(doc["predictor_indices"]),
        )
    raise ValueError(f"unrecognized model kind {kind!r}")
