"""Synthetic data generation and the Monte Carlo comparison harness.

Predictor curves are overlapping sums of Gaussian process fields, the
response integrates a subset of them against fixed bivariate coefficient
surfaces, and errors follow an exactly discretized Ornstein-Uhlenbeck
process. The harness runs replicated train/test comparisons of the
quantile estimator against its least squares baselines.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, fields

import numpy as np

from .bands import MetricsReport, bootstrap_band, cpd, direct_band, interval_score, mspe
from .errors import ConfigError, NumericalError
from .fdata import FunctionalSample, Grid, make_uniform_grid
from .model import CoefficientSurface, fit_bspline_ls, fit_fflqr, fit_fpc_ls, predict
from .selection import forward_select, select_truncation

__all__ = [
    "SimConfig",
    "SimData",
    "squared_exp_kernel",
    "sample_gp",
    "gen_predictors",
    "true_beta",
    "gen_ou_errors",
    "gen_response",
    "contaminate",
    "generate_dataset",
    "run_monte_carlo",
    "write_results_csv",
    "ALL_METHODS",
    "ALL_MODELS",
]

ALL_METHODS = ("fflqr", "fpc-ls", "bspline-ls")
ALL_MODELS = ("full", "true", "selected")


@dataclass(frozen=True)
class SimConfig:
    """All knobs of the synthetic experiment.

    Defaults reproduce the standard scenario: five correlated predictors on
    100 grid points, three of them driving the response, with
    Ornstein-Uhlenbeck errors.
    """

    n_train: int = 200
    n_test: int = 300
    n_grid: int = 100
    M: int = 5
    lag: int = 4
    sigma: float = 1.0
    error_dist: str = "normal"
    ou_gamma: float = 0.0
    ou_theta: float = 1.0
    contamination_rate: float = 0.0
    outlier_mean: float = 10.0
    outlier_var: float = 0.04
    outlier_per_point: bool = False
    tau: float = 0.5
    n_replicates: int = 20
    master_seed: int = 0
    significant: tuple = (2, 4, 5)
    fixed_k: int = 2
    k_y_max: int = 5
    k_x_max: int = 5
    bootstrap_R: int = 100
    scenario: str = ""

    def __post_init__(self):
        if self.n_train < 2 or self.n_test < 1:
            raise ConfigError("n_train must be >= 2 and n_test >= 1")
        if self.n_grid < 2:
            raise ConfigError("n_grid must be at least 2")
        if self.M < 1 or self.lag < 0:
            raise ConfigError("need M >= 1 and lag >= 0")
        if self.sigma < 0:
            raise ConfigError("sigma must be nonnegative")
        if self.error_dist not in ("normal", "chisq1"):
            raise ConfigError(
                f"error_dist must be 'normal' or 'chisq1', got {self.error_dist!r}"
            )
        if self.ou_theta <= 0:
            raise ConfigError("ou_theta must be positive")
        if not 0.0 <= self.contamination_rate < 1.0:
            raise ConfigError("contamination_rate must lie in [0, 1)")
        if self.outlier_var < 0:
            raise ConfigError("outlier_var must be nonnegative")
        if not 0.0 < self.tau < 1.0:
            raise ConfigError("tau must lie strictly inside (0, 1)")
        if self.n_replicates < 1:
            raise ConfigError("n_replicates must be at least 1")
        object.__setattr__(self, "significant", tuple(self.significant))
        if any(not 1 <= m <= self.M for m in self.significant):
            raise ConfigError("significant predictor labels must lie in 1..M")
        if self.fixed_k < 1 or self.k_y_max < 1 or self.k_x_max < 1:
            raise ConfigError("truncation settings must be at least 1")
        if self.bootstrap_R < 2:
            raise ConfigError("bootstrap_R must be at least 2")

    @classmethod
    def from_dict(cls, d: dict) -> "SimConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown config field(s): {', '.join(sorted(unknown))}")
        try:
            return cls(**d)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    def to_dict(self) -> dict:
        out = {}
        for f in fields(self):
            v = getattr(self, f.name)
            out[f.name] = list(v) if isinstance(v, tuple) else v
        return out

    def label(self) -> str:
        if self.scenario:
            return self.scenario
        return (
            f"{self.error_dist}-sigma{self.sigma:g}"
            f"-contam{self.contamination_rate:g}"
        )


@dataclass(frozen=True)
class SimData:
    """One generated train/test split.

    ``Y_test_signal`` holds the error-free structural part of the test
    response; prediction accuracy is judged against it, while interval
    coverage is judged against the observed ``Y_test``.
    """

    Y_train: FunctionalSample
    X_train: list
    Y_test: FunctionalSample
    X_test: list
    Y_test_signal: FunctionalSample
    contaminated: tuple
    s_grid: Grid
    t_grid: Grid


def squared_exp_kernel(width: float = 100.0):
    """Squared exponential covariance ``exp(-width (s - s')^2)``."""

    def kernel(s, t):
        return np.exp(-width * (np.asarray(s) - np.asarray(t)) ** 2)

    return kernel


def sample_gp(kernel, grid: Grid, n: int, rng) -> FunctionalSample:
    """Draw mean-zero Gaussian process paths on a grid.

    The kernel Gram matrix is factorized with a small escalating diagonal
    jitter; an identically zero kernel yields the all-zero sample.
    """
    pts = grid.points
    gram = np.asarray(kernel(pts[:, None], pts[None, :]), dtype=float)
    gram = (gram + gram.T) / 2.0
    if np.max(np.abs(gram)) == 0.0:
        return FunctionalSample(np.zeros((n, grid.size)), grid)
    jitter = 1e-10
    for attempt in range(3):
        try:
            L = np.linalg.cholesky(gram + jitter * np.eye(grid.size))
            break
        except np.linalg.LinAlgError:
            jitter *= 10.0
    else:
        raise NumericalError("kernel Gram matrix is not positive definite")
    draws = rng.standard_normal((n, grid.size))
    return FunctionalSample(draws @ L.T, grid)


def gen_predictors(config: SimConfig, rng, n: int = None) -> list:
    """Generate the M correlated predictor samples.

    Each predictor is 10 plus a normalized sum of ``lag + 1`` consecutive
    fields out of ``M + lag`` independent Gaussian process draws, so
    neighbors share most of their components.
    """
    if n is None:
        n = config.n_train + config.n_test
    s_grid = make_uniform_grid(config.n_grid, 0.0, 1.0)
    kernel = squared_exp_kernel(100.0)
    fields_v = [
        sample_gp(kernel, s_grid, n, rng).values
        for _ in range(config.M + config.lag)
    ]
    scale = math.sqrt(config.lag + 1)
    out = []
    for m in range(config.M):
        total = np.zeros((n, config.n_grid))
        for j in range(config.lag + 1):
            total += fields_v[m + j]
        out.append(FunctionalSample(10.0 + total / scale, s_grid))
    return out


def true_beta(m: int, s_grid: Grid, t_grid: Grid) -> CoefficientSurface:
    """The five closed-form coefficient surfaces driving the response."""
    s = s_grid.points[:, None]
    t = t_grid.points[None, :]
    if m == 1:
        values = (1.0 - s) ** 2 * (t - 0.5) ** 2
    elif m == 2:
        values = np.exp(-3.0 * (s - 1.0) ** 2 - 5.0 * (t - 0.5) ** 2)
    elif m == 3:
        values = np.exp(-5.0 * (s - 0.5) ** 2 - 5.0 * (t - 0.5) ** 2) + 8.0 * np.exp(
            -5.0 * (s - 1.5) ** 2 - 5.0 * (t - 0.5) ** 2
        )
    elif m == 4:
        values = np.sin(1.5 * np.pi * s) * np.sin(np.pi * t)
    elif m == 5:
        values = np.sqrt(s * t)
    else:
        raise ValueError(f"no coefficient surface defined for predictor {m}")
    values = np.broadcast_to(values, (s_grid.size, t_grid.size)).copy()
    return CoefficientSurface(values, s_grid, t_grid, m, 0.5)


def gen_ou_errors(
    config: SimConfig, grid: Grid, n: int, rng, eps0: np.ndarray = None
) -> FunctionalSample:
    """Ornstein-Uhlenbeck error paths via exact discretization.

    With normal errors the paths start from the stationary law, so sigma = 0
    gives identically zero noise (for ou_gamma = 0). With chisq1 errors the
    start value is a raw chi-square(1) draw and the innovations are
    standardized chi-square(1), keeping the second-moment structure while
    skewing the marginals.

    Parameters
    ----------
    eps0 : ndarray, optional
        Fixed start values (length n) overriding the random draw.
    """
    gamma, theta, sigma = config.ou_gamma, config.ou_theta, config.sigma
    p = grid.size
    if eps0 is not None:
        start = np.asarray(eps0, dtype=float) * np.ones(n)
    elif config.error_dist == "normal":
        start = gamma + sigma / math.sqrt(2.0 * theta) * rng.standard_normal(n)
    else:
        start = rng.chisquare(1.0, size=n)

    if config.error_dist == "normal":
        innov = rng.standard_normal((n, p - 1))
    else:
        innov = (rng.chisquare(1.0, size=(n, p - 1)) - 1.0) / math.sqrt(2.0)

    values = np.empty((n, p))
    values[:, 0] = start
    dts = np.diff(grid.points)
    decay = np.exp(-theta * dts)
    scale = sigma * np.sqrt((1.0 - np.exp(-2.0 * theta * dts)) / (2.0 * theta))
    for j in range(p - 1):
        values[:, j + 1] = (
            gamma + (values[:, j] - gamma) * decay[j] + scale[j] * innov[:, j]
        )
    return FunctionalSample(values, grid)


def gen_response(
    X: list, errors: FunctionalSample, D, s_grid: Grid, t_grid: Grid
) -> FunctionalSample:
    """Integrate the significant predictors against their true surfaces."""
    n = errors.n
    values = errors.values.copy()
    for m in D:
        xm = X[m - 1]
        if xm.n != n:
            raise ValueError("predictor and error sample sizes differ")
        surface = true_beta(m, s_grid, t_grid)
        values += xm.values @ (s_grid.weights[:, None] * surface.values)
    return FunctionalSample(values, t_grid)


def contaminate(
    Y: FunctionalSample,
    rate: float,
    mean: float = 10.0,
    var: float = 0.04,
    rng=None,
    per_point: bool = False,
) -> tuple:
    """Shift a random subset of curves upward by folded normal outliers.

    ``floor(n * rate)`` distinct curves each get one scalar
    ``|Normal(mean, var)|`` added everywhere; with ``per_point`` the draw is
    instead made independently at every grid point.

    Returns
    -------
    (sample, indices)
        The contaminated sample and the sorted affected row indices.
    """
    if not 0.0 <= rate < 1.0:
        raise ValueError("rate must lie in [0, 1)")
    n = Y.n
    k = int(n * rate)
    if k == 0:
        return Y, ()
    if rng is None:
        rng = np.random.default_rng()
    rows = np.sort(rng.choice(n, size=k, replace=False))
    sd = math.sqrt(var)
    if per_point:
        shift = np.abs(rng.normal(mean, sd, size=(k, Y.n_points)))
    else:
        shift = np.abs(rng.normal(mean, sd, size=k))[:, None]
    values = Y.values.copy()
    values[rows] += shift
    return FunctionalSample(values, Y.grid), tuple(int(i) for i in rows)


def generate_dataset(config: SimConfig, seed) -> SimData:
    """Generate one train/test split; only training curves are contaminated."""
    rng = np.random.default_rng(seed)
    n = config.n_train + config.n_test
    s_grid = make_uniform_grid(config.n_grid, 0.0, 1.0)
    t_grid = make_uniform_grid(config.n_grid, 0.0, 1.0)
    X = gen_predictors(config, rng, n)
    errors = gen_ou_errors(config, t_grid, n, rng)
    no_errors = FunctionalSample(np.zeros((n, config.n_grid)), t_grid)
    signal = gen_response(X, no_errors, config.significant, s_grid, t_grid)
    Y_values = signal.values + errors.values

    tr = slice(0, config.n_train)
    te = slice(config.n_train, n)
    Y_train = FunctionalSample(Y_values[tr], t_grid)
    Y_test = FunctionalSample(Y_values[te], t_grid)
    Y_test_signal = FunctionalSample(signal.values[te], t_grid)
    X_train = [FunctionalSample(x.values[tr], s_grid) for x in X]
    X_test = [FunctionalSample(x.values[te], s_grid) for x in X]

    contaminated = ()
    if config.contamination_rate > 0:
        Y_train, contaminated = contaminate(
            Y_train,
            config.contamination_rate,
            config.outlier_mean,
            config.outlier_var,
            rng,
            config.outlier_per_point,
        )
    return SimData(
        Y_train, X_train, Y_test, X_test, Y_test_signal, contaminated,
        s_grid, t_grid,
    )


def _model_spec(config: SimConfig, data: SimData, model: str) -> tuple:
    """Resolve (predictor labels, k_y, k_x) for one model variant."""
    tau = config.tau
    if model == "full":
        D = tuple(range(1, config.M + 1))
        subset = [data.X_train[i - 1] for i in D]
        k_y, k_x, _ = select_truncation(
            data.Y_train, subset, tau, config.k_y_max, config.k_x_max
        )
    elif model == "true":
        D = config.significant
        subset = [data.X_train[i - 1] for i in D]
        k_y, k_x, _ = select_truncation(
            data.Y_train, subset, tau, config.k_y_max, config.k_x_max
        )
    elif model == "selected":
        sel = forward_select(
            data.Y_train,
            data.X_train,
            tau,
            fixed_k=config.fixed_k,
            k_y_max=config.k_y_max,
            k_x_max=config.k_x_max,
        )
        D, k_y, k_x = sel.chosen_predictors, sel.chosen_k_y, sel.chosen_k_x
    else:
        raise ConfigError(f"unknown model variant {model!r}")
    return D, k_y, k_x


def _replicate_reports(
    config: SimConfig, replicate: int, child, methods, models, alpha
) -> list:
    data_ss, boot_ss = child.spawn(2)
    data = generate_dataset(config, data_ss)
    scenario = config.label()
    n_slots = len(ALL_MODELS) * (len(ALL_METHODS) + 1)
    boot_children = boot_ss.spawn(n_slots)

    reports = []
    for model in ALL_MODELS:
        if model not in models:
            continue
        D, k_y, k_x = _model_spec(config, data, model)
        X_tr = [data.X_train[i - 1] for i in D]
        X_te = [data.X_test[i - 1] for i in D]
        for method in ALL_METHODS:
            if method not in methods:
                continue
            if method == "fflqr":
                fit = fit_fflqr(data.Y_train, X_tr, config.tau, k_y, k_x, D)
            elif method == "fpc-ls":
                fit = fit_fpc_ls(data.Y_train, X_tr, k_y, k_x, D)
            else:
                fit = fit_bspline_ls(data.Y_train, X_tr, predictor_indices=D)
            err = mspe(data.Y_test_signal, predict(fit, X_te))
            band_cpd = band_score = None
            slot = ALL_MODELS.index(model) * (len(ALL_METHODS) + 1) + ALL_METHODS.index(method)
            if alpha is not None:
                band = bootstrap_band(
                    data.Y_train,
                    X_tr,
                    X_te,
                    config.tau,
                    alpha,
                    k_y,
                    k_x,
                    R=config.bootstrap_R,
                    seed=boot_children[slot],
                    method=method,
                )
                band_cpd = cpd(band, data.Y_test, alpha)
                band_score = interval_score(band, data.Y_test, alpha)
            reports.append(
                MetricsReport(
                    err, band_cpd, band_score, method, model, scenario,
                    replicate, config.master_seed,
                )
            )
            if method == "fflqr" and alpha is not None:
                dband = direct_band(data.Y_train, X_tr, X_te, alpha, k_y, k_x)
                reports.append(
                    MetricsReport(
                        err,
                        cpd(dband, data.Y_test, alpha),
                        interval_score(dband, data.Y_test, alpha),
                        "fflqr-direct",
                        model,
                        scenario,
                        replicate,
                        config.master_seed,
                    )
                )
    return reports


def run_monte_carlo(
    config: SimConfig,
    methods=ALL_METHODS,
    models=ALL_MODELS,
    alpha: float = None,
    n_threads: int = None,
) -> list:
    """Replicated train/test comparison of the requested estimators.

    Prediction error is measured against the error-free test signal;
    interval coverage metrics use the observed test curves.

    Parameters
    ----------
    config : SimConfig
    methods : iterable of str
        Subset of {"fflqr", "fpc-ls", "bspline-ls"}.
    models : iterable of str
        Subset of {"full", "true", "selected"}; each picks its predictors
        and truncations per replicate as described in ``_model_spec``.
    alpha : float, optional
        When given, bootstrap bands (plus a paired-quantile band for the
        check-loss method) are evaluated and CPD/interval score reported.
    n_threads : int, optional
        Worker threads across replicates; output order and content do not
        depend on it.

    Returns
    -------
    list of MetricsReport
        Grouped by replicate, then model, then method.
    """
    methods = set(methods)
    models = set(models)
    bad = methods - set(ALL_METHODS)
    if bad:
        raise ConfigError(f"unknown method(s): {', '.join(sorted(bad))}")
    bad = models - set(ALL_MODELS)
    if bad:
        raise ConfigError(f"unknown model(s): {', '.join(sorted(bad))}")

    children = np.random.SeedSequence(config.master_seed).spawn(config.n_replicates)
    if n_threads is None:
        n_threads = min(config.n_replicates, os.cpu_count() or 1)
    n_threads = max(1, n_threads)

    def task(r):
        try:
            return _replicate_reports(config, r, children[r], methods, models, alpha)
        except NumericalError as exc:
            return exc

    if n_threads == 1:
        outcomes = [task(r) for r in range(config.n_replicates)]
    else:
        with ThreadPoolExecutor(max_workers=n_threads) as pool:
            outcomes = list(pool.map(task, range(config.n_replicates)))

    failures = [(r, o) for r, o in enumerate(outcomes) if isinstance(o, Exception)]
    if len(failures) > 0.2 * config.n_replicates:
        detail = "; ".join(f"replicate {r}: {e}" for r, e in failures[:5])
        raise NumericalError(
            f"{len(failures)} of {config.n_replicates} replicates failed ({detail})"
        )
    reports = []
    for o in outcomes:
        if not isinstance(o, Exception):
            reports.extend(o)
    return reports


def _fmt_opt(x) -> str:
    return "" if x is None else f"{x:.17g}"


def write_results_csv(reports, path) -> None:
    """One row per report: seed, replicate, method, model, scenario, metrics."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("seed,replicate,method,model,scenario,mspe,cpd,score\n")
        for r in reports:
            fh.write(
                f"{r.seed},{r.replicate},{r.method},{r.model},{r.scenario},"
                f"{r.mspe:.17g},{_fmt_opt(r.cpd)},{_fmt_opt(r.interval_score)}\n"
            )
