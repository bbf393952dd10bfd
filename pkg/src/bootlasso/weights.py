"""Training/test weight generators for the resampling schemes.

Every scheme is expressed as a pair of weight vectors: ``w`` multiplies each
observation's squared loss in the fit, ``u`` scores its prediction error.

- Beta(a, b): ``w_i`` i.i.d. Beta, ``u = 1 - w``; every weight is non-zero.
- k-fold: ``w`` has exactly ``h = round(n (k-1) / k)`` ones placed uniformly
  without replacement (multivariate hypergeometric), ``u = 1 - w``.
- paired / m-out-of-n: ``w ~ Multinomial(m; 1/n, ..., 1/n)`` with ``m = n``
  for the paired bootstrap; ``u_i = 1`` exactly when ``w_i = 0``.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass

import numpy as np

from .errors import EmptyInput, InvalidFoldCount, InvalidM, InvalidScheme, InvalidShape

_TINY = np.nextafter(0.0, 1.0)
_BELOW_ONE = np.nextafter(1.0, 0.0)


def replicate_rng(seed: int, *keys: int) -> np.random.Generator:
    """Generator for one work unit, derived from ``seed`` and integer ``keys``.

    Streams for different keys are independent and do not depend on the
    order in which they are requested.
    """
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=tuple(int(k) for k in keys)))


@dataclass(frozen=True)
class WeightDraw:
    w: np.ndarray
    u: np.ndarray
    replicate_id: int = 0

    @property
    def n_positive(self) -> int:
        return int(np.count_nonzero(self.w > 0))


def draw_beta_weights(n: int, a: float, b: float, rng: np.random.Generator,
                      replicate_id: int = 0) -> WeightDraw:
    if not (a > 0 and b > 0 and math.isfinite(a) and math.isfinite(b)):
        raise InvalidShape(f"Beta shapes must be positive and finite, got a={a}, b={b}")
    # extreme shapes can round a draw onto 0 or 1; keep weights strictly inside
    w = np.clip(rng.beta(a, b, size=n), _TINY, _BELOW_ONE)
    return WeightDraw(w, 1.0 - w, replicate_id)


def kfold_training_size(n: int, k: int) -> int:
    """``n (k-1) / k`` rounded half-up to an integer."""
    return int(math.floor(n * (k - 1) / k + 0.5))


def draw_kfold_weights(n: int, k: int, rng: np.random.Generator,
                       replicate_id: int = 0) -> WeightDraw:
    if not 2 <= k <= n:
        raise InvalidFoldCount(f"fold count must satisfy 2 <= k <= n={n}, got {k}")
    h = kfold_training_size(n, k)
    w = np.zeros(n)
    w[rng.permutation(n)[:h]] = 1.0
    return WeightDraw(w, 1.0 - w, replicate_id)


def draw_multinomial_weights(n: int, m: int, rng: np.random.Generator,
                             replicate_id: int = 0) -> WeightDraw:
    if m < 1 or m != int(m):
        raise InvalidM(f"m must be a positive integer, got {m}")
    w = rng.multinomial(int(m), np.full(n, 1.0 / n)).astype(float)
    return WeightDraw(w, (w == 0).astype(float), replicate_id)


def compute_rho(w_samples) -> float:
    """Grand mean of all training-weight entries."""
    arr = [np.asarray(w, dtype=float).ravel() for w in w_samples]
    if not arr or sum(a.size for a in arr) == 0:
        raise EmptyInput("no weights to average")
    total = math.fsum(float(a.sum()) for a in arr)
    return total / sum(a.size for a in arr)


_SCHEME_RE = re.compile(r"^\s*(beta|kfold|paired|mofn)\s*(?::\s*(.*?))?\s*$", re.IGNORECASE)


@dataclass(frozen=True)
class WeightScheme:
    """Declarative description of a resampling scheme.

    Build with :meth:`beta`, :meth:`kfold`, :meth:`paired`, :meth:`mofn`
    or :meth:`parse` (``beta:a,b | kfold:k | paired | mofn:f``). The
    m-out-of-n scheme is specified either by a count ``m`` or by a fraction
    ``m/n`` resolved against the data size at draw time.
    """

    kind: str
    a: float | None = None
    b: float | None = None
    k: int | None = None
    m: int | None = None
    fraction: float | None = None

    def __post_init__(self):
        if self.kind == "beta":
            if self.a is None or self.b is None or not (self.a > 0 and self.b > 0):
                raise InvalidShape(f"Beta shapes must be positive, got a={self.a}, b={self.b}")
        elif self.kind == "kfold":
            if self.k is None or self.k < 2:
                raise InvalidFoldCount(f"fold count must be >= 2, got {self.k}")
        elif self.kind == "mofn":
            if (self.m is None) == (self.fraction is None):
                raise InvalidM("give exactly one of m or fraction")
            if self.m is not None and self.m < 1:
                raise InvalidM(f"m must be >= 1, got {self.m}")
            if self.fraction is not None and not 0 < self.fraction <= 1:
                raise InvalidM(f"m/n fraction must lie in (0, 1], got {self.fraction}")
        elif self.kind != "paired":
            raise InvalidScheme(f"unknown scheme kind {self.kind!r}")

    @classmethod
    def beta(cls, a: float, b: float) -> "WeightScheme":
        return cls("beta", a=float(a), b=float(b))

    @classmethod
    def kfold(cls, k: int) -> "WeightScheme":
        return cls("kfold", k=int(k))

    @classmethod
    def paired(cls) -> "WeightScheme":
        return cls("paired")

    @classmethod
    def mofn(cls, m: int | None = None, fraction: float | None = None) -> "WeightScheme":
        return cls("mofn", m=None if m is None else int(m),
                   fraction=None if fraction is None else float(fraction))

    @classmethod
    def parse(cls, text: str) -> "WeightScheme":
        match = _SCHEME_RE.match(text)
        if not match:
            raise InvalidScheme(f"cannot parse scheme {text!r}; expected beta:a,b | kfold:k | paired | mofn:f")
        kind, arg = match.group(1).lower(), match.group(2)
        try:
            if kind == "paired":
                if arg:
                    raise InvalidScheme("paired takes no parameters")
                return cls.paired()
            if not arg:
                raise InvalidScheme(f"{kind} needs parameters")
            if kind == "beta":
                parts = [s.strip() for s in arg.split(",")]
                if len(parts) != 2:
                    raise InvalidShape(f"beta needs two shapes, got {arg!r}")
                return cls.beta(float(parts[0]), float(parts[1]))
            if kind == "kfold":
                if not arg.strip().isdigit():
                    raise InvalidFoldCount(f"fold count must be an integer, got {arg!r}")
                return cls.kfold(int(arg))
            return cls.mofn(fraction=float(arg))
        except ValueError as exc:
            if isinstance(exc, InvalidScheme):
                raise
            raise InvalidScheme(f"bad parameters in scheme {text!r}: {exc}") from None

    @property
    def label(self) -> str:
        if self.kind == "beta":
            return f"beta:{self.a:g},{self.b:g}"
        if self.kind == "kfold":
            return f"kfold:{self.k}"
        if self.kind == "paired":
            return "paired"
        if self.fraction is not None:
            return f"mofn:{self.fraction:g}"
        return f"mofn:m={self.m}"

    def resolve_m(self, n: int) -> int:
        """Resample size for count schemes on ``n`` observations."""
        if self.kind == "paired":
            return n
        if self.kind != "mofn":
            raise InvalidScheme(f"{self.kind} has no resample size")
        m = self.m if self.m is not None else int(math.floor(self.fraction * n + 0.5))
        if not 1 <= m <= n:
            raise InvalidM(f"m must lie in [1, n={n}], got {m}")
        return m

    def expected_rho(self, n: int) -> float:
        """Analytic mean training weight."""
        if self.kind == "beta":
            return self.a / (self.a + self.b)
        if self.kind == "kfold":
            self.validate(n)
            return kfold_training_size(n, self.k) / n
        return self.resolve_m(n) / n

    def validate(self, n: int) -> None:
        if self.kind == "kfold" and self.k > n:
            raise InvalidFoldCount(f"fold count {self.k} exceeds n={n}")
        if self.kind in ("paired", "mofn"):
            self.resolve_m(n)

    def draw(self, n: int, rng: np.random.Generator, replicate_id: int = 0) -> WeightDraw:
        if self.kind == "beta":
            return draw_beta_weights(n, self.a, self.b, rng, replicate_id)
        if self.kind == "kfold":
            return draw_kfold_weights(n, self.k, rng, replicate_id)
        return draw_multinomial_weights(n, self.resolve_m(n), rng, replicate_id)

    def draw_replicate(self, n: int, seed: int, replicate_id: int) -> WeightDraw:
        """Draw for ``replicate_id``; identical for identical ``(self, seed, replicate_id)``."""
        return self.draw(n, replicate_rng(seed, replicate_id), replicate_id)


def sorted_weight_profile(scheme: WeightScheme, n: int, replicates: int,
                          seed: int = 0) -> tuple[np.ndarray, np.ndarray, float]:
    """Mean ascending order statistics of the training and test weights.

    Returns ``(training_profile, test_profile, rho)``; the mean of the
    training profile is ``rho``.
    """
    if replicates < 1:
        raise ValueError("replicates must be >= 1")
    scheme.validate(n)
    w_sum = np.zeros(n)
    u_sum = np.zeros(n)
    draws = []
    for r in range(replicates):
        d = scheme.draw_replicate(n, seed, r)
        w_sum += np.sort(d.w)
        u_sum += np.sort(d.u)
        draws.append(d.w)
    return w_sum / replicates, u_sum / replicates, compute_rho(draws)
