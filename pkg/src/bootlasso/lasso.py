"""Weighted Lasso solver, solution paths and standardization.

The objective is the un-normalized weighted form

    sum_i w_i (y_i - x_i' beta)^2 + lam * sum_j |beta_j|

with no 1/n factor, so lambda values are a factor 2n larger than those of
software that minimizes ``(1/2n) RSS + alpha |beta|_1``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _cd
from .errors import (
    ConstantColumn,
    DegenerateData,
    DidNotConverge,
    IndexOutOfRange,
    MalformedInput,
    NoPositiveWeight,
    NonFiniteInput,
)

DEFAULT_TOL = 1e-8
DEFAULT_KKT_TOL = 1e-7
DEFAULT_MAX_SWEEPS = 10_000
DEFAULT_N_LAMBDA = 100
DEFAULT_LAMBDA_RATIO = 1e-3


@dataclass(frozen=True, eq=False)
class Dataset:
    """Design matrix and response plus the standardization metadata.

    ``column_means``/``column_scales`` map standardized columns back to the
    raw scale; ``y_mean`` is the removed response mean.
    """

    X: np.ndarray
    y: np.ndarray
    column_means: np.ndarray
    column_scales: np.ndarray
    y_mean: float
    standardized: bool
    names: tuple[str, ...] | None = None
    response_name: str = "y"

    def __post_init__(self):
        X = np.ascontiguousarray(self.X, dtype=float)
        y = np.ascontiguousarray(self.y, dtype=float)
        if X.ndim != 2 or y.ndim != 1 or X.shape[0] != y.shape[0]:
            raise MalformedInput(f"shape mismatch: X {X.shape}, y {y.shape}")
        n, p = X.shape
        if n < 2 or p < 1:
            raise MalformedInput(f"need n >= 2 and p >= 1, got n={n}, p={p}")
        _check_finite(X, y)
        if np.any(np.asarray(self.column_scales) <= 0):
            raise DegenerateData("column scales must be strictly positive")
        X.flags.writeable = False
        y.flags.writeable = False
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "column_means", np.asarray(self.column_means, dtype=float))
        object.__setattr__(self, "column_scales", np.asarray(self.column_scales, dtype=float))
        if self.names is not None and len(self.names) != p:
            raise MalformedInput(f"{len(self.names)} column names for {p} columns")

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def p(self) -> int:
        return self.X.shape[1]

    def column_name(self, j: int) -> str:
        return self.names[j] if self.names is not None else f"x{j + 1}"

    def with_response(self, y_raw: np.ndarray) -> "Dataset":
        """Same covariates, new (raw) response, re-centred."""
        y_raw = np.asarray(y_raw, dtype=float)
        y_mean = float(y_raw.mean())
        return Dataset(self.X, y_raw - y_mean, self.column_means, self.column_scales,
                       y_mean, self.standardized, self.names, self.response_name)

    def to_raw_scale(self, beta: np.ndarray, intercept: float = 0.0) -> tuple[float, np.ndarray]:
        """Back-transform standardized coefficients to ``(intercept, coef)`` on raw data."""
        beta = np.asarray(beta, dtype=float)
        coef = beta / self.column_scales
        b0 = self.y_mean + intercept - float(self.column_means @ coef)
        return b0, coef


def _check_finite(X, y):
    bad = ~np.isfinite(X)
    if bad.any():
        row, col = np.argwhere(bad)[0]
        raise NonFiniteInput(int(row), int(col))
    bad_y = ~np.isfinite(y)
    if bad_y.any():
        raise NonFiniteInput(int(np.argmax(bad_y)), "response")


def standardize(raw_X, raw_y, names=None, response_name="y") -> Dataset:
    """Centre and scale every column of ``raw_X`` to sample variance one; centre ``raw_y``.

    Raises
    ------
    NonFiniteInput
        On the first NaN/inf entry.
    ConstantColumn
        If a covariate has zero variance.
    """
    X = np.array(raw_X, dtype=float)
    y = np.array(raw_y, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if X.ndim != 2 or y.ndim != 1 or X.shape[0] != y.shape[0]:
        raise MalformedInput(f"shape mismatch: X {X.shape}, y {y.shape}")
    _check_finite(X, y)
    for j in range(X.shape[1]):
        if np.all(X[:, j] == X[0, j]):
            raise ConstantColumn(names[j] if names is not None else j)
    means = X.mean(axis=0)
    Xc = X - means
    scales = np.sqrt((Xc**2).sum(axis=0) / (X.shape[0] - 1))
    y_mean = float(y.mean())
    return Dataset(
        Xc / scales,
        y - y_mean,
        means,
        scales,
        y_mean,
        True,
        tuple(names) if names is not None else None,
        response_name,
    )


def soft_threshold(z, gamma):
    """``sign(z) * max(|z| - gamma, 0)``; works on scalars and arrays."""
    if np.any(np.asarray(gamma) < 0):
        raise ValueError("gamma must be non-negative")
    out = np.sign(z) * np.maximum(np.abs(z) - gamma, 0.0)
    return float(out) if np.ndim(out) == 0 else out


def _as_weights(w, n) -> np.ndarray:
    w = np.ascontiguousarray(w, dtype=float)
    if w.shape != (n,):
        raise ValueError(f"weights must have shape ({n},), got {w.shape}")
    if np.any(~np.isfinite(w)) or np.any(w < 0):
        raise ValueError("weights must be finite and non-negative")
    if not np.any(w > 0):
        raise NoPositiveWeight()
    return w


def _centered_problem(X, y, w, fit_intercept):
    """Weighted Gram system, plus the weighted means when an intercept is fit."""
    if not fit_intercept:
        G, c = _cd.weighted_gram(X, y, w)
        return G, c, None, 0.0
    sw = w.sum()
    x_bar = (w @ X) / sw
    y_bar = float(w @ y) / sw
    G, c = _cd.weighted_gram(np.ascontiguousarray(X - x_bar), y - y_bar, w)
    return G, c, x_bar, y_bar


def _kkt_gate(c, kkt_tol):
    # absolute gate, widened for badly scaled problems where rounding alone exceeds it
    scale = 2.0 * float(np.max(np.abs(c))) if c.size else 0.0
    return max(kkt_tol, 1e-13 * scale)


def _solve(data, w, lambdas, init, fit_intercept, tol, kkt_tol, max_sweeps):
    w = _as_weights(w, data.n)
    lambdas = np.ascontiguousarray(lambdas, dtype=float)
    if np.any(lambdas < 0):
        raise ValueError("lambda must be non-negative")
    G, c, x_bar, y_bar = _centered_problem(data.X, data.y, w, fit_intercept)
    beta0 = np.zeros(data.p) if init is None else np.array(init, dtype=float)
    if beta0.shape != (data.p,):
        raise ValueError(f"init must have shape ({data.p},)")
    betas, sweeps, failed = _cd.cd_path(G, c, lambdas, beta0, tol,
                                        _kkt_gate(c, kkt_tol), max_sweeps)
    if failed >= 0:
        raise DidNotConverge(max_sweeps, lambda_index=int(failed))
    if fit_intercept:
        intercepts = y_bar - betas @ x_bar
    else:
        intercepts = np.zeros(len(lambdas))
    return betas, intercepts, sweeps


def weighted_lasso_fit(data: Dataset, w, lam: float, init=None, *, fit_intercept=False,
                       tol=DEFAULT_TOL, kkt_tol=DEFAULT_KKT_TOL,
                       max_sweeps=DEFAULT_MAX_SWEEPS) -> np.ndarray:
    """Minimize the weighted Lasso objective at a single ``lam``.

    Parameters
    ----------
    data : Dataset
    w : array of shape (n,)
        Non-negative observation weights, at least one positive.
    lam : float
        Penalty on the L1 norm.
    init : array of shape (p,), optional
        Warm start.

    Returns
    -------
    ndarray of shape (p,)
        Coefficients; entries soft-thresholded to zero are exactly 0.0.
    """
    betas, _, _ = _solve(data, w, [lam], init, fit_intercept, tol, kkt_tol, max_sweeps)
    return betas[0]


def lambda_max(data: Dataset, w=None, fit_intercept=False) -> float:
    """Smallest penalty at which every coefficient is zero: ``2 max_j |x_j' W y|``."""
    w = np.ones(data.n) if w is None else _as_weights(w, data.n)
    X, y = data.X, data.y
    if fit_intercept:
        sw = w.sum()
        X = np.ascontiguousarray(X - (w @ X) / sw)
        y = y - float(w @ y) / sw
    # same summation order as the solver, so the first grid point is exactly all-zero
    return 2.0 * float(np.max(np.abs(_cd.weighted_xty(X, y, w))))


def lambda_grid(lam_max: float, K: int = DEFAULT_N_LAMBDA,
                ratio: float = DEFAULT_LAMBDA_RATIO) -> np.ndarray:
    if K < 2:
        raise ValueError("grid needs K >= 2 points")
    if not 0 < ratio < 1:
        raise ValueError("ratio must lie in (0, 1)")
    if lam_max <= 0:
        raise DegenerateData("lambda_max is zero: the response is orthogonal to every column")
    return np.geomspace(lam_max, lam_max * ratio, K)


def compute_lambda_grid(data: Dataset, K: int = DEFAULT_N_LAMBDA,
                        ratio: float = DEFAULT_LAMBDA_RATIO, fit_intercept=False) -> np.ndarray:
    """Log-spaced descending grid from the unit-weight ``lambda_max`` down to ``ratio * lambda_max``."""
    return lambda_grid(lambda_max(data, fit_intercept=fit_intercept), K, ratio)


@dataclass(frozen=True)
class ActiveSet:
    indices: tuple[int, ...]
    lam: float

    def __len__(self):
        return len(self.indices)

    def __contains__(self, j):
        return j in self.indices


@dataclass(frozen=True, eq=False)
class LassoPath:
    lambdas: np.ndarray
    betas: np.ndarray
    intercepts: np.ndarray
    weights_used: np.ndarray
    sweeps: np.ndarray = field(default=None, repr=False)

    def __len__(self):
        return len(self.lambdas)

    @property
    def n_nonzero(self) -> np.ndarray:
        return np.count_nonzero(self.betas, axis=1)

    def active_set(self, k: int) -> ActiveSet:
        return active_set(self, k)

    def index_of(self, lam: float) -> int:
        """Grid index of ``lam`` (which must be a grid value)."""
        hits = np.flatnonzero(self.lambdas == lam)
        if hits.size == 0:
            raise ValueError(f"lambda {lam!r} is not on the path grid")
        return int(hits[0])

    def predict(self, X) -> np.ndarray:
        """Fitted values, shape (n, K)."""
        return np.asarray(X) @ self.betas.T + self.intercepts


def fit_path(data: Dataset, w, grid, *, fit_intercept=False, tol=DEFAULT_TOL,
             kkt_tol=DEFAULT_KKT_TOL, max_sweeps=DEFAULT_MAX_SWEEPS) -> LassoPath:
    """Solve along a descending ``grid`` with warm starts.

    A failure to converge is raised as ``DidNotConverge`` carrying the
    offending ``lambda_index``.
    """
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size == 0:
        raise ValueError("grid must be a non-empty 1-d array")
    if np.any(np.diff(grid) >= 0):
        raise ValueError("grid must be strictly decreasing")
    betas, intercepts, sweeps = _solve(data, w, grid, None, fit_intercept, tol, kkt_tol, max_sweeps)
    return LassoPath(grid, betas, intercepts, np.asarray(w, dtype=float).copy(), sweeps)


def active_set(path: LassoPath, lambda_index: int) -> ActiveSet:
    """Indices (0-based) of the exactly non-zero coefficients at one grid point."""
    K = len(path.lambdas)
    if not -K <= lambda_index < K:
        raise IndexOutOfRange(f"lambda index {lambda_index} outside path of length {K}")
    row = path.betas[lambda_index]
    return ActiveSet(tuple(int(j) for j in np.flatnonzero(row != 0.0)),
                     float(path.lambdas[lambda_index]))


def objective(data: Dataset, w, beta, lam, intercept=0.0) -> float:
    r = data.y - data.X @ beta - intercept
    return float(np.sum(np.asarray(w) * r * r) + lam * np.sum(np.abs(beta)))


def kkt_violation(data: Dataset, w, beta, lam, intercept=0.0) -> float:
    """Largest violation of the Lasso stationarity conditions, computed from residuals.

    Active ``j``: ``|2 x_j' W r - lam sign(beta_j)|``; inactive ``j``:
    ``max(|2 x_j' W r| - lam, 0)``.
    """
    w = np.asarray(w, dtype=float)
    beta = np.asarray(beta, dtype=float)
    r = data.y - data.X @ beta - intercept
    g = 2.0 * (data.X.T @ (w * r))
    active = beta != 0
    viol = np.where(active, np.abs(g - lam * np.sign(beta)), np.maximum(np.abs(g) - lam, 0.0))
    return float(viol.max()) if viol.size else 0.0
