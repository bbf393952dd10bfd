"""Simulation study on the quadratic diabetes design.

A Lasso tuned on the seed data is taken as the truth; responses are redrawn
as ``X beta_true + N(0, sigma^2)`` and every tuning method is run on each
draw, recording the selected lambda, model size and MCC against the true
support.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from importlib import resources

import numpy as np

from .errors import BootLassoError, DegenerateTruth
from .evaluation import confusion, mcc, mcc_curve, support_of
from .io import read_dataset_csv
from .lasso import DEFAULT_LAMBDA_RATIO, DEFAULT_N_LAMBDA, Dataset, compute_lambda_grid, fit_path
from .tuner import (
    RULES,
    TuningConfig,
    TuningResult,
    run_ebic,
    run_exact_kfold_cv,
    run_weighted_bootstrap,
)
from .weights import WeightScheme

log = logging.getLogger(__name__)


def load_diabetes_quadratic() -> Dataset:
    """The bundled 442 x 64 quadratic diabetes design, standardized."""
    ref = resources.files("bootlasso") / "data" / "diabetes_quadratic.csv"
    with resources.as_file(ref) as path:
        return read_dataset_csv(path, "y")


@dataclass(frozen=True)
class TruthRule:
    """How the truth is tuned: repeated exact CV (``kind='cv'``) or a fixed ``lam``."""

    kind: str = "cv"
    k: int = 10
    repeats: int = 10
    rule: str = "min"
    lam: float | None = None


@dataclass(frozen=True, eq=False)
class Truth:
    beta: np.ndarray
    support: tuple[int, ...]
    lam: float
    sigma: float


def estimate_sigma(data: Dataset, beta) -> float:
    """Residual scale ``sqrt(RSS / (n - |support|))`` of a fitted coefficient vector."""
    resid = data.y - data.X @ beta
    dof = data.n - np.count_nonzero(beta)
    if dof <= 0:
        raise DegenerateTruth("truth model leaves no residual degrees of freedom")
    return math.sqrt(float(resid @ resid) / dof)


def build_truth(data: Dataset, rule: TruthRule = TruthRule(), seed: int = 0, *,
                n_lambda: int = DEFAULT_N_LAMBDA, lambda_ratio: float = DEFAULT_LAMBDA_RATIO,
                normalize_weights: bool = True, threads: int = 1) -> Truth:
    if not data.standardized:
        raise ValueError("build_truth expects a standardized Dataset")
    grid = compute_lambda_grid(data, n_lambda, lambda_ratio)
    if rule.kind == "cv":
        res = run_exact_kfold_cv(data, rule.k, rule.repeats, seed, grid=grid,
                                 normalize_weights=normalize_weights, threads=threads)
        lam = res.lambda_min if rule.rule == "min" else res.lambda_one_se
        beta = res.path.betas[res.path.index_of(lam)].copy()
    elif rule.kind == "lambda":
        lam = float(rule.lam)
        beta = fit_path(data, np.ones(data.n), [lam]).betas[0].copy()
    else:
        raise ValueError(f"unknown truth rule {rule.kind!r}")
    support = support_of(beta)
    if not support:
        raise DegenerateTruth(f"truth fit at lambda={lam:g} has no non-zero coefficient")
    return Truth(beta, support, lam, estimate_sigma(data, beta))


def simulate_response(data: Dataset, beta_true, sigma: float,
                      rng: np.random.Generator) -> np.ndarray:
    """``X beta_true + eps`` with ``eps`` i.i.d. N(0, sigma^2)."""
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    return data.X @ np.asarray(beta_true, dtype=float) + rng.normal(0.0, sigma, size=data.n)


def simulated_replication(data: Dataset, truth: Truth, seed: int, replication: int) -> Dataset:
    """Dataset with the response redrawn for one replication of a study seeded by ``seed``."""
    rng = np.random.default_rng(np.random.SeedSequence([seed, 1, replication]))
    return data.with_response(simulate_response(data, truth.beta, truth.sigma, rng))


def default_methods() -> tuple[str, ...]:
    rhos = [round(0.1 * i, 1) for i in range(1, 10)]
    return (
        "cv:3", "cv:5", "cv:10", "cv:loo",
        "mofn:0.25", "mofn:0.5", "mofn:0.75", "mofn:1",
        *(f"beta:{4 * r:g},{4 - 4 * r:g}" for r in rhos),
        "ebic:1",
    )


def parse_method(text: str):
    """Split ``cv:k | cv:loo | ebic:gamma`` from weight-scheme labels."""
    text = text.strip()
    head, _, arg = text.partition(":")
    head = head.strip().lower()
    if head == "cv":
        arg = arg.strip().lower()
        if arg in ("loo", "n"):
            return "cv", None
        if not arg.isdigit() or int(arg) < 2:
            raise ValueError(f"bad CV fold count in {text!r}")
        return "cv", int(arg)
    if head == "ebic":
        gamma = float(arg) if arg.strip() else 1.0
        if not 0 <= gamma <= 1:
            raise ValueError(f"EBIC gamma must lie in [0, 1] in {text!r}")
        return "ebic", gamma
    return "weights", WeightScheme.parse(text)


def method_label(method: str, n: int) -> str:
    """Canonical name of a method; leave-one-out CV is reported as ``cv:n``."""
    kind, arg = parse_method(method)
    if kind == "cv":
        return f"cv:{n if arg is None else arg}"
    if kind == "ebic":
        return f"ebic:{arg:g}"
    return arg.label


@dataclass(frozen=True)
class SimulationConfig:
    data: Dataset = field(default=None, repr=False)
    seed: int = 0
    n_replications: int = 50
    truth_rule: TruthRule = TruthRule()
    methods: tuple[str, ...] = field(default_factory=default_methods)
    cv_repeats: int = 1
    b: int = 200
    n_lambda: int = DEFAULT_N_LAMBDA
    lambda_ratio: float = DEFAULT_LAMBDA_RATIO
    normalize_weights: bool = True
    dataset_label: str = "diabetes"

    def __post_init__(self):
        if self.data is None:
            object.__setattr__(self, "data", load_diabetes_quadratic())
        if self.n_replications < 1:
            raise ValueError("n_replications must be >= 1")
        if not self.data.standardized:
            raise ValueError("seed dataset must be standardized")
        for m in self.methods:
            parse_method(m)


@dataclass(frozen=True)
class Cell:
    replication: int
    method: str
    rule: str
    lam: float
    lambda_index: int
    n_nonzero: int
    mcc: float
    rho: float
    error: str = ""


@dataclass(frozen=True, eq=False)
class SimulationResult:
    truth: Truth
    cells: list[Cell]
    mcc_curves: dict = field(default_factory=dict, repr=False)

    def select(self, method: str, rule: str = "min") -> list[Cell]:
        return [c for c in self.cells if c.method == method and c.rule == rule and not c.error]

    def lambdas(self, method: str, rule: str = "min") -> np.ndarray:
        return np.array([c.lam for c in self.select(method, rule)])

    def summary(self) -> list[dict]:
        """Per (method, rule): medians and IQR over replications."""
        keys = []
        for c in self.cells:
            if (c.method, c.rule) not in keys:
                keys.append((c.method, c.rule))
        rows = []
        for method, rule in keys:
            cells = self.select(method, rule)
            failed = sum(1 for c in self.cells if c.method == method and c.rule == rule and c.error)
            if not cells:
                rows.append(dict(method=method, rule=rule, n_ok=0, n_failed=failed))
                continue
            lam = np.array([c.lam for c in cells])
            q25, q75 = np.percentile(lam, [25, 75])
            rows.append(dict(
                method=method, rule=rule, n_ok=len(cells), n_failed=failed,
                median_lambda=float(np.median(lam)), iqr_lambda=float(q75 - q25),
                median_lambda_index=float(np.median([c.lambda_index for c in cells])),
                median_n_nonzero=float(np.median([c.n_nonzero for c in cells])),
                median_mcc=float(np.median([c.mcc for c in cells])),
                rho=float(np.mean([c.rho for c in cells])),
            ))
        return rows


def _cell_seed(seed: int, replication: int, method_index: int) -> int:
    return int(np.random.SeedSequence([seed, 2, replication, method_index]).generate_state(1)[0])


def run_method(method: str, data: Dataset, grid, full_path, *, seed: int, b: int,
               cv_repeats: int, normalize_weights: bool, threads: int = 1,
               rules=RULES) -> TuningResult:
    kind, arg = parse_method(method)
    if kind == "cv":
        k = data.n if arg is None else arg
        return run_exact_kfold_cv(data, k, cv_repeats, seed, grid=grid, full_path=full_path,
                                  rules=rules, normalize_weights=normalize_weights,
                                  threads=threads)
    if kind == "ebic":
        return run_ebic(data, arg, grid=grid, full_path=full_path)
    config = TuningConfig(arg, b=b, seed=seed, rules=rules, normalize_weights=normalize_weights)
    return run_weighted_bootstrap(data, config, grid=grid, full_path=full_path, threads=threads)


def run_simulation_study(config: SimulationConfig, *, threads: int = 1,
                         progress=None) -> SimulationResult:
    """Run every method on ``config.n_replications`` simulated responses.

    Errors inside a cell are recorded on the cell and the study continues.
    ``mcc_curves`` holds the full-path MCC curve of each replication.
    """
    data = config.data
    truth = build_truth(data, config.truth_rule, config.seed, n_lambda=config.n_lambda,
                        lambda_ratio=config.lambda_ratio,
                        normalize_weights=config.normalize_weights, threads=threads)
    cells: list[Cell] = []
    curves = {}
    for rep in range(config.n_replications):
        sim = simulated_replication(data, truth, config.seed, rep)
        grid = compute_lambda_grid(sim, config.n_lambda, config.lambda_ratio)
        full = fit_path(sim, np.ones(sim.n), grid)
        curves[rep] = mcc_curve(full, truth.support)
        for mi, method in enumerate(config.methods):
            label = method_label(method, sim.n)
            try:
                res = run_method(method, sim, grid, full, seed=_cell_seed(config.seed, rep, mi),
                                 b=config.b, cv_repeats=config.cv_repeats,
                                 normalize_weights=config.normalize_weights, threads=threads)
            except BootLassoError as exc:
                log.warning("replication %d, %s failed: %s", rep, method, exc)
                cells.append(Cell(rep, label, "min", math.nan, -1, -1, math.nan, math.nan,
                                  f"{type(exc).__name__}: {exc}"))
                continue
            for rule, lam, size, rho, _ in res.rows():
                k = full.index_of(lam)
                sel = full.active_set(k).indices
                score = mcc(confusion(sel, truth.support, sim.p))
                cells.append(Cell(rep, label, rule, lam, k, size, score, rho))
        if progress is not None:
            progress(rep)
    return SimulationResult(truth, cells, curves)
