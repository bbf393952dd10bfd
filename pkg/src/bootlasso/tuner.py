"""Penalty selection by the flexible-weighted bootstrap, exact k-fold CV and EBIC.

For bootstrap replicate ``k`` with weights ``(w_k, u_k)`` the path is fit on
``w_k`` and scored by ``sum_i u_ik (y_i - x_i' beta_k(lam))^2``. The total
MSPE curve is the plain sum of these over replicates, and ``lambda_min`` is
its minimizer. The one-standard-error rule works on the per-replicate
``u``-normalized means instead and is an extension for the bootstrap (it is
the usual rule for CV).

By default training weights are rescaled to sum to ``n`` before the fit, so
every replicate is penalized on the scale of the shared unit-weight grid.
Without it a replicate of total weight ``m`` sees an effective penalty
``n/m`` times larger, which reverses the k-fold and m-out-of-n orderings.
"""
from __future__ import annotations

import logging
import math
import statistics
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    AllReplicatesDegenerate,
    DidNotConverge,
    FoldTooSmall,
    InvalidFoldCount,
)
from .lasso import (
    DEFAULT_LAMBDA_RATIO,
    DEFAULT_N_LAMBDA,
    ActiveSet,
    Dataset,
    LassoPath,
    compute_lambda_grid,
    fit_path,
)
from .weights import WeightScheme, compute_rho, replicate_rng

log = logging.getLogger(__name__)

RULES = ("min", "one_se")
TIE_RTOL = 1e-12


@dataclass(frozen=True)
class TuningConfig:
    scheme: WeightScheme
    b: int = 200
    n_lambda: int = DEFAULT_N_LAMBDA
    lambda_ratio: float = DEFAULT_LAMBDA_RATIO
    seed: int = 0
    rules: tuple[str, ...] = RULES
    fit_intercept: bool = False
    # rescale each replicate's training weights to sum to n before fitting
    normalize_weights: bool = True

    def __post_init__(self):
        if self.b < 1 or (self.b < 2 and "one_se" in self.rules):
            raise ValueError("b must be >= 2 for the one-SE rule (it needs a spread estimate)")
        if self.n_lambda < 2:
            raise ValueError("the lambda grid needs at least 2 points")
        bad = set(self.rules) - set(RULES)
        if bad or not self.rules:
            raise ValueError(f"rules must be a non-empty subset of {RULES}, got {self.rules}")
        object.__setattr__(self, "rules", tuple(self.rules))


@dataclass(frozen=True, eq=False)
class MspeCurve:
    """Prediction-error curve over the shared lambda grid.

    ``per_replicate_sse[r, k]`` is the ``u``-weighted squared error of
    replicate ``r`` at ``lambdas[k]`` and ``u_totals[r]`` its test-weight
    mass, so ``per_replicate_mspe = per_replicate_sse / u_totals``.
    """

    lambdas: np.ndarray
    total_mspe: np.ndarray
    mean_mspe: np.ndarray
    se: np.ndarray
    per_replicate_sse: np.ndarray
    u_totals: np.ndarray
    replicate_ids: np.ndarray

    @classmethod
    def from_replicates(cls, lambdas, sse, u_totals, replicate_ids) -> "MspeCurve":
        sse = np.asarray(sse, dtype=float)
        u_totals = np.asarray(u_totals, dtype=float)
        per = sse / u_totals[:, None]
        r = per.shape[0]
        se = per.std(axis=0, ddof=1) / math.sqrt(r) if r > 1 else np.zeros(per.shape[1])
        return cls(np.asarray(lambdas, dtype=float), sse.sum(axis=0), per.mean(axis=0), se,
                   sse, u_totals, np.asarray(replicate_ids))

    @property
    def per_replicate_mspe(self) -> np.ndarray:
        return self.per_replicate_sse / self.u_totals[:, None]

    @property
    def n_replicates(self) -> int:
        return self.per_replicate_sse.shape[0]


def _first_min_index(values: np.ndarray, rtol: float = TIE_RTOL) -> int:
    """Smallest index (largest lambda on a descending grid) attaining the minimum."""
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        raise ValueError("empty curve")
    lo = float(values.min())
    return int(np.flatnonzero(values <= lo + rtol * abs(lo))[0])


def _one_se_index(mean, se, i_min: int) -> int:
    threshold = mean[i_min] + se[i_min]
    # i_min itself always qualifies, so the result is <= i_min
    return int(np.flatnonzero(mean <= threshold)[0])


def select_lambda_min(curve: MspeCurve) -> float:
    """Largest lambda whose total MSPE ties the minimum (relative tolerance 1e-12)."""
    return float(curve.lambdas[_first_min_index(curve.total_mspe)])


def select_lambda_one_se(curve: MspeCurve) -> float:
    """Largest lambda whose mean error is within one SE (at ``lambda_min``) of the minimum."""
    i_min = _first_min_index(curve.total_mspe)
    return float(curve.lambdas[_one_se_index(curve.mean_mspe, curve.se, i_min)])


@dataclass(frozen=True, eq=False)
class TuningResult:
    method: str
    lambda_min: float
    lambda_one_se: float | None
    active_set_min: ActiveSet
    active_set_one_se: ActiveSet | None
    rho: float
    discarded_replicates: int
    curve: MspeCurve | None
    path: LassoPath = field(repr=False)
    selections: dict = field(default_factory=dict, repr=False)

    @property
    def b_effective(self) -> int:
        return 0 if self.curve is None else self.curve.n_replicates

    def rows(self) -> list[tuple[str, float, int, float, str]]:
        """``(rule, lambda, n_nonzero, rho, method)`` per selection rule."""
        out = [("min", self.lambda_min, len(self.active_set_min), self.rho, self.method)]
        if self.lambda_one_se is not None:
            out.append(("one_se", self.lambda_one_se, len(self.active_set_one_se),
                        self.rho, self.method))
        return out


def _full_path(data, grid, fit_intercept, full_path):
    if full_path is not None:
        if not np.array_equal(full_path.lambdas, grid):
            raise ValueError("full_path was fit on a different grid")
        return full_path
    return fit_path(data, np.ones(data.n), grid, fit_intercept=fit_intercept)


def _map(fn, items, threads):
    if threads is None or threads <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def _scaled(w, n, normalize):
    return w * (n / w.sum()) if normalize else w


def _residuals(data, path):
    return data.y[:, None] - path.predict(data.X)


def run_weighted_bootstrap(data: Dataset, config: TuningConfig, *, grid=None,
                           threads: int = 1, full_path: LassoPath | None = None) -> TuningResult:
    """Tune lambda with ``config.b`` weighted-bootstrap replicates.

    A replicate with fewer than two positive training weights, or no test
    weight, is discarded and counted in ``discarded_replicates``.

    Raises
    ------
    AllReplicatesDegenerate
        If every replicate was discarded.
    DidNotConverge
        From the solver, with ``replicate_id`` set.
    """
    if not data.standardized:
        raise ValueError("run_weighted_bootstrap expects a standardized Dataset")
    scheme = config.scheme
    n = data.n
    scheme.validate(n)
    if grid is None:
        grid = compute_lambda_grid(data, config.n_lambda, config.lambda_ratio,
                                   fit_intercept=config.fit_intercept)
    grid = np.asarray(grid, dtype=float)

    def replicate(rid):
        draw = scheme.draw_replicate(n, config.seed, rid)
        u_total = float(draw.u.sum())
        if draw.n_positive < 2 or u_total <= 0.0:
            return rid, None, None, draw.w
        try:
            path = fit_path(data, _scaled(draw.w, n, config.normalize_weights), grid,
                            fit_intercept=config.fit_intercept)
        except DidNotConverge as exc:
            raise DidNotConverge(exc.max_sweeps, exc.lambda_index, rid) from None
        resid = _residuals(data, path)
        return rid, draw.u @ (resid * resid), u_total, draw.w

    results = _map(replicate, range(config.b), threads)
    kept = [r for r in results if r[1] is not None]
    discarded = len(results) - len(kept)
    if discarded:
        log.info("%s: discarded %d degenerate replicates", scheme.label, discarded)
    if not kept:
        raise AllReplicatesDegenerate(config.b)
    curve = MspeCurve.from_replicates(grid, [r[1] for r in kept], [r[2] for r in kept],
                                      [r[0] for r in kept])
    rho = compute_rho(r[3] for r in kept)
    path = _full_path(data, grid, config.fit_intercept, full_path)
    i_min = _first_min_index(curve.total_mspe)
    i_se = _one_se_index(curve.mean_mspe, curve.se, i_min) if "one_se" in config.rules else None
    return _result(scheme.label, path, i_min, i_se, rho, discarded, curve)


def _result(method, path, i_min, i_se, rho, discarded, curve, selections=None):
    return TuningResult(
        method=method,
        lambda_min=float(path.lambdas[i_min]),
        lambda_one_se=None if i_se is None else float(path.lambdas[i_se]),
        active_set_min=path.active_set(i_min),
        active_set_one_se=None if i_se is None else path.active_set(i_se),
        rho=rho,
        discarded_replicates=discarded,
        curve=curve,
        path=path,
        selections=selections or {},
    )


def kfold_partition(n: int, k: int, rng: np.random.Generator) -> list[np.ndarray]:
    """Random partition of ``range(n)`` into ``k`` disjoint folds of near-equal size."""
    return [np.sort(f) for f in np.array_split(rng.permutation(n), k)]


def run_exact_kfold_cv(data: Dataset, k: int, repeats: int = 1, seed: int = 0, *, grid=None,
                       n_lambda: int = DEFAULT_N_LAMBDA, lambda_ratio: float = DEFAULT_LAMBDA_RATIO,
                       rules=RULES, fit_intercept: bool = False, normalize_weights: bool = True,
                       threads: int = 1, full_path: LassoPath | None = None) -> TuningResult:
    """Repeated k-fold cross-validation over disjoint random partitions.

    Each repeat yields a CV curve (pooled mean squared test error, with the
    usual across-fold standard error) and its own min / one-SE choices;
    the reported lambdas are the lower medians of those choices over
    repeats. With ``k == n`` (leave-one-out) the partition is unique and a
    single repeat is run.
    """
    n = data.n
    if k < 2:
        raise InvalidFoldCount(f"fold count must be >= 2, got {k}")
    if k > n:
        raise FoldTooSmall(f"{k} folds on {n} observations leaves empty folds")
    if k == n:
        repeats = 1
    if repeats < 1:
        raise ValueError("repeats must be >= 1")
    if grid is None:
        grid = compute_lambda_grid(data, n_lambda, lambda_ratio, fit_intercept=fit_intercept)
    grid = np.asarray(grid, dtype=float)

    partitions = [kfold_partition(n, k, replicate_rng(seed, r)) for r in range(repeats)]
    units = [(r, f) for r in range(repeats) for f in range(k)]

    def fold(unit):
        r, f = unit
        test = partitions[r][f]
        w = np.ones(n)
        w[test] = 0.0
        try:
            path = fit_path(data, _scaled(w, n, normalize_weights), grid, fit_intercept=fit_intercept)
        except DidNotConverge as exc:
            raise DidNotConverge(exc.max_sweeps, exc.lambda_index, r * k + f) from None
        resid = data.y[test, None] - path.predict(data.X[test])
        return (resid * resid).sum(axis=0), float(test.size), w

    out = _map(fold, units, threads)
    sse = np.array([o[0] for o in out])
    sizes = np.array([o[1] for o in out])

    cvm_all, cvsd_all, pick_min, pick_se = [], [], [], []
    for r in range(repeats):
        s = sse[r * k:(r + 1) * k]
        nf = sizes[r * k:(r + 1) * k]
        cvm = s.sum(axis=0) / n
        fold_mse = s / nf[:, None]
        cvsd = np.sqrt((nf[:, None] * (fold_mse - cvm) ** 2).sum(axis=0) / n / (k - 1))
        i_min = _first_min_index(cvm)
        cvm_all.append(cvm)
        cvsd_all.append(cvsd)
        pick_min.append(i_min)
        pick_se.append(_one_se_index(cvm, cvsd, i_min))

    # lower median in lambda = upper median in index on the descending grid
    i_min = statistics.median_high(pick_min)
    i_se = statistics.median_high(pick_se) if "one_se" in rules else None
    curve = MspeCurve(grid, sse.sum(axis=0), np.mean(cvm_all, axis=0), np.mean(cvsd_all, axis=0),
                      sse, sizes, np.arange(len(units)))
    rho = compute_rho(o[2] for o in out)
    path = _full_path(data, grid, fit_intercept, full_path)
    method = "cv:loo" if k == n else f"cv:{k}"
    selections = {"repeat_min": grid[pick_min], "repeat_one_se": grid[pick_se]}
    return _result(method, path, i_min, i_se, rho, 0, curve, selections)


def compute_ebic(data: Dataset, path: LassoPath, gamma: float = 1.0) -> np.ndarray:
    """EBIC of every path point: ``n log(RSS/n) + s log n + 2 gamma s log p`` with ``s = |active set|``."""
    if not 0 <= gamma <= 1:
        raise ValueError("gamma must lie in [0, 1]")
    n, p = data.n, data.p
    resid = _residuals(data, path)
    rss = (resid * resid).sum(axis=0)
    s = path.n_nonzero.astype(float)
    with np.errstate(divide="ignore"):
        return n * np.log(rss / n) + s * math.log(n) + 2.0 * gamma * s * math.log(p)


def select_lambda_ebic(path: LassoPath, scores: np.ndarray) -> float:
    """Lambda minimizing EBIC, largest on ties."""
    return float(path.lambdas[_first_min_index(scores)])


def run_ebic(data: Dataset, gamma: float = 1.0, *, grid=None, n_lambda: int = DEFAULT_N_LAMBDA,
             lambda_ratio: float = DEFAULT_LAMBDA_RATIO, fit_intercept: bool = False,
             full_path: LassoPath | None = None) -> TuningResult:
    if grid is None:
        grid = compute_lambda_grid(data, n_lambda, lambda_ratio, fit_intercept=fit_intercept)
    path = _full_path(data, np.asarray(grid, dtype=float), fit_intercept, full_path)
    scores = compute_ebic(data, path, gamma)
    i = _first_min_index(scores)
    return _result(f"ebic:{gamma:g}", path, i, None, 1.0, 0, None, {"ebic": scores})
