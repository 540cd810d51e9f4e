"""BIC-driven truncation tuning and forward stepwise predictor selection."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import NumericalError
from .fdata import FunctionalSample
from .model import fit_fflqr, predict
from .qreg import check_loss

__all__ = [
    "BicTraceEntry",
    "SelectionResult",
    "log_loss_norm",
    "bic_truncation",
    "select_truncation",
    "bic_candidate",
    "forward_select",
    "write_trace_csv",
]

# Pointwise loss floor applied before taking logs; keeps perfect in-sample
# fits finite without disturbing the ordering of non-degenerate candidates.
_LOSS_FLOOR = 1e-300


@dataclass(frozen=True)
class BicTraceEntry:
    """One evaluated candidate in a selection run."""

    stage: str
    candidate: str
    k_y: int
    k_x: int
    bic: float
    accepted: bool
    note: str = ""


@dataclass(frozen=True)
class SelectionResult:
    """Outcome of predictor and truncation selection.

    Parameters
    ----------
    chosen_k_y, chosen_k_x : int
        Truncation constants picked for the final model.
    chosen_predictors : tuple of int
        Selected predictor labels in the order they were accepted.
    bic_trace : tuple of BicTraceEntry
        Every candidate evaluated, in evaluation order.
    """

    chosen_k_y: int
    chosen_k_x: int
    chosen_predictors: tuple
    bic_trace: tuple = field(default_factory=tuple)


def log_loss_norm(Y: FunctionalSample, fitted: FunctionalSample, tau: float) -> float:
    """Quadrature L2 norm of the log pointwise check loss.

    The pointwise loss ``L(t_j) = sum_i rho_tau(Y_i(t_j) - fitted_i(t_j))``
    is floored at a tiny positive value before the log so that perfect fits
    stay finite.
    """
    loss_t = check_loss(Y.values - fitted.values, tau).sum(axis=0)
    log_loss = np.log(np.maximum(loss_t, _LOSS_FLOOR))
    return float(np.sqrt(np.sum(Y.grid.weights * log_loss**2)))


def bic_truncation(Y: FunctionalSample, X, tau: float, k_y: int, k_x: int) -> float:
    """BIC of an (k_y, k_x) truncation: log-loss norm plus ``(k_y + k_x) ln n``."""
    fit = fit_fflqr(Y, X, tau, k_y, k_x)
    fitted = predict(fit, X)
    return log_loss_norm(Y, fitted, tau) + (k_y + k_x) * math.log(Y.n)


def select_truncation(
    Y: FunctionalSample, X, tau: float, k_y_max: int, k_x_max: int
) -> tuple:
    """Exhaustive BIC search over the truncation grid.

    Returns
    -------
    (k_y, k_x, trace)
        The minimizing pair (ties broken toward smaller ``k_y + k_x``, then
        smaller ``k_y``) and the full evaluation trace.
    """
    if k_y_max < 1 or k_x_max < 1:
        raise ValueError("truncation maxima must be at least 1")
    trace = []
    best = None
    best_key = None
    for k_y in range(1, k_y_max + 1):
        for k_x in range(1, k_x_max + 1):
            label = f"K=({k_y},{k_x})"
            try:
                bic = bic_truncation(Y, X, tau, k_y, k_x)
            except NumericalError as exc:
                trace.append(
                    BicTraceEntry("truncation", label, k_y, k_x, math.nan, False, str(exc))
                )
                continue
            trace.append(BicTraceEntry("truncation", label, k_y, k_x, bic, False))
            key = (bic, k_y + k_x, k_y)
            if best_key is None or key < best_key:
                best_key = key
                best = (k_y, k_x)
    if best is None:
        raise NumericalError("every truncation candidate failed to fit")
    trace = [
        BicTraceEntry(e.stage, e.candidate, e.k_y, e.k_x, e.bic,
                      (e.k_y, e.k_x) == best and math.isfinite(e.bic), e.note)
        for e in trace
    ]
    return best[0], best[1], tuple(trace)


def bic_candidate(
    Y: FunctionalSample, X_subset, tau: float, D, k_y: int = 2, k_x: int = 2
) -> float:
    """BIC of a predictor subset: log-loss norm plus ``|D| ln(n) / (2n)``."""
    D = tuple(D)
    if len(D) == 0:
        raise ValueError("candidate predictor set must be nonempty")
    if len(D) != len(X_subset):
        raise ValueError("one predictor sample per index in D required")
    fit = fit_fflqr(Y, X_subset, tau, k_y, k_x, predictor_indices=D)
    fitted = predict(fit, X_subset)
    n = Y.n
    return log_loss_norm(Y, fitted, tau) + len(D) * math.log(n) / (2 * n)


def _improves(bic_prev: float, bic_new: float, ratio_threshold: float) -> bool:
    """Acceptance rule: the drop must exceed the threshold share of |previous|.

    Equals ``bic_new / bic_prev < ratio_threshold`` whenever the previous
    BIC is positive, and stays meaningful when the log-norm turns negative.
    """
    return (bic_prev - bic_new) > (1.0 - ratio_threshold) * abs(bic_prev)


def forward_select(
    Y: FunctionalSample,
    X,
    tau: float,
    ratio_threshold: float = 0.95,
    fixed_k: int = 2,
    k_y_max: int = 5,
    k_x_max: int = 5,
) -> SelectionResult:
    """Forward stepwise predictor selection with a BIC improvement rule.

    Stage 1 fits every single-predictor model at ``K = fixed_k`` and keeps
    the BIC minimizer. Each later stage tries the unused predictors, takes
    the best extension and accepts it only if the BIC improves by at least
    ``1 - ratio_threshold`` of the current value. After the set is fixed,
    the truncation pair is re-tuned on it by exhaustive search up to
    ``(k_y_max, k_x_max)``.

    Parameters
    ----------
    Y : FunctionalSample
        Response curves.
    X : list of FunctionalSample
        All M candidate predictors; labels are their 1-based positions.
    tau : float
        Quantile level.
    ratio_threshold : float
        Acceptance ratio; 0.95 demands a 5 percent improvement.
    fixed_k : int
        Truncation used for both response and predictors during selection.
    k_y_max, k_x_max : int
        Grid bounds for the final truncation search.
    """
    M = len(X)
    if M < 1:
        raise ValueError("need at least one candidate predictor")
    labels = tuple(range(1, M + 1))
    trace = []

    def evaluate(stage, D):
        subset = [X[i - 1] for i in D]
        label = "{" + ",".join(str(i) for i in D) + "}"
        try:
            bic = bic_candidate(Y, subset, tau, D, fixed_k, fixed_k)
        except NumericalError as exc:
            trace.append(
                BicTraceEntry(stage, label, fixed_k, fixed_k, math.nan, False, str(exc))
            )
            return None
        entry = BicTraceEntry(stage, label, fixed_k, fixed_k, bic, False)
        trace.append(entry)
        return bic

    chosen = []
    current_bic = None
    remaining = list(labels)
    stage_no = 1
    while remaining:
        stage = f"stage{stage_no}"
        results = []
        for label in remaining:
            bic = evaluate(stage, tuple(chosen) + (label,))
            if bic is not None:
                results.append((bic, label))
        if not results:
            break
        best_bic, best_label = min(results)
        if stage_no == 1 or _improves(current_bic, best_bic, ratio_threshold):
            best_name = "{" + ",".join(str(i) for i in chosen + [best_label]) + "}"
            idx = next(
                i
                for i, e in enumerate(trace)
                if e.stage == stage and e.candidate == best_name
            )
            trace[idx] = BicTraceEntry(
                trace[idx].stage, trace[idx].candidate, trace[idx].k_y,
                trace[idx].k_x, trace[idx].bic, True, trace[idx].note,
            )
            chosen.append(best_label)
            remaining.remove(best_label)
            current_bic = best_bic
            stage_no += 1
        else:
            break

    if not chosen:
        raise NumericalError("no predictor candidate could be fit")

    subset = [X[i - 1] for i in chosen]
    k_y_cap = min(k_y_max, Y.n - 1, Y.grid.size)
    k_x_cap = min([k_x_max, Y.n - 1] + [x.grid.size for x in subset])
    k_y, k_x, k_trace = select_truncation(Y, subset, tau, k_y_cap, k_x_cap)
    trace.extend(k_trace)
    return SelectionResult(k_y, k_x, tuple(chosen), tuple(trace))


def write_trace_csv(result: SelectionResult, path) -> None:
    """Write the selection trace with one row per evaluated candidate."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("stage,candidate,K_Y,K_X,BIC,accepted\n")
        for e in result.bic_trace:
            bic = "" if math.isnan(e.bic) else f"{e.bic:.17g}"
            fh.write(
                f"{e.stage},\"{e.candidate}\",{e.k_y},{e.k_x},{bic},"
                f"{str(e.accepted).lower()}\n"
            )
