"""Support-recovery scores against a known true coefficient vector."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .lasso import LassoPath


@dataclass(frozen=True)
class SelectionConfusion:
    tp: int
    fp: int
    tn: int
    fn: int

    def __post_init__(self):
        if min(self.tp, self.fp, self.tn, self.fn) < 0:
            raise ValueError("confusion counts must be non-negative")

    @property
    def p(self) -> int:
        return self.tp + self.fp + self.tn + self.fn


def confusion(selected, truth, p: int) -> SelectionConfusion:
    """Compare two index sets over ``p`` coefficient positions."""
    sel = set(int(j) for j in selected)
    tru = set(int(j) for j in truth)
    if any(not 0 <= j < p for j in sel | tru):
        raise ValueError(f"indices must lie in [0, {p})")
    tp = len(sel & tru)
    fp = len(sel - tru)
    fn = len(tru - sel)
    return SelectionConfusion(tp, fp, p - tp - fp - fn, fn)


def mcc(c: SelectionConfusion) -> float:
    """Matthews correlation coefficient; 0 when any marginal count is zero."""
    denom = (c.tp + c.fp) * (c.tp + c.fn) * (c.tn + c.fp) * (c.tn + c.fn)
    if denom == 0:
        return 0.0
    # integer numerator and product keep the result exact up to the final sqrt
    return (c.tp * c.tn - c.fp * c.fn) / math.sqrt(denom)


def support_of(beta) -> tuple[int, ...]:
    """Indices of the exactly non-zero entries."""
    return tuple(int(j) for j in np.flatnonzero(np.asarray(beta) != 0.0))


def model_size_curve(path: LassoPath) -> np.ndarray:
    return path.n_nonzero


@dataclass(frozen=True, eq=False)
class MccCurve:
    lambdas: np.ndarray
    mcc: np.ndarray
    n_nonzero: np.ndarray

    @property
    def best(self) -> float:
        return float(self.mcc.max())

    @property
    def best_indices(self) -> np.ndarray:
        return np.flatnonzero(self.mcc == self.mcc.max())

    @property
    def best_interval(self) -> tuple[float, float]:
        """``(largest, smallest)`` lambda attaining the maximum MCC."""
        idx = self.best_indices
        return float(self.lambdas[idx[0]]), float(self.lambdas[idx[-1]])

    @property
    def best_is_contiguous(self) -> bool:
        idx = self.best_indices
        return bool(idx[-1] - idx[0] + 1 == idx.size)


def mcc_curve(path: LassoPath, true_support) -> MccCurve:
    """MCC of the active set at every grid point against ``true_support``."""
    p = path.betas.shape[1]
    values = np.array([mcc(confusion(np.flatnonzero(row != 0.0), true_support, p))
                       for row in path.betas])
    return MccCurve(path.lambdas.copy(), values, path.n_nonzero)
