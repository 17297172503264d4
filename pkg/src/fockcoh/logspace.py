"""Signed log-space numbers and log-space probability tables.

Factorials of particle numbers in the thousands overflow doubles, so every
combinatorial weight in the package passes through :class:`LogWeight` or a
log-probability array.  Logs are natural unless a name says ``bits``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Hashable, Iterable, Mapping, Sequence

import numpy as np
from scipy.special import gammaln, logsumexp

LN2 = math.log(2.0)


def to_bits(nats: float) -> float:
    """Convert a natural-log quantity to bits."""
    return nats / LN2


@dataclass(frozen=True)
class LogWeight:
    """A real number stored as ``sign * exp(log_magnitude)``.

    ``sign == 0`` encodes exact zero; ``log_magnitude`` is then ignored
    (normalized to ``-inf``).
    """

    sign: int
    log_magnitude: float

    def __post_init__(self):
        if self.sign not in (-1, 0, 1):
            raise ValueError(f"sign must be -1, 0 or 1, got {self.sign}")
        if self.sign == 0:
            object.__setattr__(self, "log_magnitude", -math.inf)
        elif math.isnan(self.log_magnitude) or self.log_magnitude == -math.inf:
            raise ValueError("nonzero LogWeight needs a finite log magnitude")

    @classmethod
    def zero(cls) -> LogWeight:
        return cls(0, -math.inf)

    @classmethod
    def one(cls) -> LogWeight:
        return cls(1, 0.0)

    @classmethod
    def from_value(cls, x: float) -> LogWeight:
        if x == 0:
            return cls.zero()
        return cls(1 if x > 0 else -1, math.log(abs(x)))

    @classmethod
    def from_log(cls, log_magnitude: float, sign: int = 1) -> LogWeight:
        if log_magnitude == -math.inf:
            return cls.zero()
        return cls(sign, log_magnitude)

    @classmethod
    def from_int(cls, n: int) -> LogWeight:
        # math.log accepts arbitrarily large Python ints
        if n == 0:
            return cls.zero()
        return cls(1 if n > 0 else -1, math.log(abs(n)))

    @property
    def value(self) -> float:
        """Linear-space value; may overflow to ``inf``."""
        if self.sign == 0:
            return 0.0
        try:
            return self.sign * math.exp(self.log_magnitude)
        except OverflowError:
            return self.sign * math.inf

    @property
    def log2_magnitude(self) -> float:
        return to_bits(self.log_magnitude)

    def __mul__(self, other: LogWeight) -> LogWeight:
        if self.sign == 0 or other.sign == 0:
            return LogWeight.zero()
        return LogWeight(self.sign * other.sign, self.log_magnitude + other.log_magnitude)

    def __truediv__(self, other: LogWeight) -> LogWeight:
        if other.sign == 0:
            raise ZeroDivisionError("division by a zero LogWeight")
        if self.sign == 0:
            return LogWeight.zero()
        return LogWeight(self.sign * other.sign, self.log_magnitude - other.log_magnitude)

    def __neg__(self) -> LogWeight:
        return LogWeight(-self.sign, self.log_magnitude)

    def __add__(self, other: LogWeight) -> LogWeight:
        return signed_logsumexp([self.log_magnitude, other.log_magnitude], [self.sign, other.sign])

    def __sub__(self, other: LogWeight) -> LogWeight:
        return self + (-other)

    def pow(self, k: float) -> LogWeight:
        if self.sign < 0 and float(k) != int(k):
            raise ValueError("non-integer power of a negative LogWeight")
        if self.sign == 0:
            return LogWeight.one() if k == 0 else LogWeight.zero()
        sign = 1 if self.sign > 0 or int(k) % 2 == 0 else -1
        return LogWeight(sign, self.log_magnitude * k)

    def __lt__(self, other: LogWeight) -> bool:
        return (self - other).sign < 0

    def __le__(self, other: LogWeight) -> bool:
        return (self - other).sign <= 0


def signed_logsumexp(log_mags: Sequence[float], signs: Sequence[int]) -> LogWeight:
    """Sum ``sum_i signs[i] * exp(log_mags[i])`` without leaving log space."""
    a = np.asarray(log_mags, dtype=float)
    b = np.asarray(signs, dtype=float)
    keep = (b != 0) & np.isfinite(a)
    if not keep.any():
        return LogWeight.zero()
    val, sgn = logsumexp(a[keep], b=b[keep], return_sign=True)
    if sgn == 0 or not np.isfinite(val):
        return LogWeight.zero()
    return LogWeight(int(sgn), float(val))


def log_factorial(n):
    """``ln n!`` for scalars or arrays (log-gamma based)."""
    return gammaln(np.asarray(n, dtype=float) + 1.0) if np.ndim(n) else math.lgamma(n + 1)


def log_binomial(n: int, k) -> float | np.ndarray:
    """``ln C(n, k)``; ``-inf`` outside ``0 <= k <= n``."""
    k_arr = np.asarray(k, dtype=float)
    out = gammaln(n + 1.0) - gammaln(k_arr + 1.0) - gammaln(n - k_arr + 1.0)
    out = np.where((k_arr < 0) | (k_arr > n), -np.inf, out)
    return float(out) if np.ndim(k) == 0 else out


def log_multinomial(counts: Iterable[int]) -> float:
    """``ln (sum c)! / prod c!``."""
    counts = list(counts)
    return math.lgamma(sum(counts) + 1) - math.fsum(math.lgamma(c + 1) for c in counts)


class ProbabilityTable:
    """Discrete distribution over hashable labels, stored as log-probabilities.

    Zero-probability labels are dropped at construction.  The table is not
    forcibly renormalized: truncated distributions keep their missing mass
    visible through :meth:`total`.
    """

    __slots__ = ("_labels", "_log_probs", "_index")

    def __init__(self, labels: Sequence[Hashable], log_probs: Sequence[float]):
        lp = np.asarray(log_probs, dtype=float)
        if lp.ndim != 1 or len(labels) != lp.size:
            raise ValueError("labels and log_probs must be equal-length 1-D sequences")
        if np.any(np.isnan(lp)) or np.any(lp > 1e-12):
            raise ValueError("log-probabilities must be <= 0")
        keep = np.isfinite(lp)
        self._labels = tuple(lab for lab, k in zip(labels, keep) if k)
        self._log_probs = np.minimum(lp[keep], 0.0)
        self._log_probs.setflags(write=False)
        self._index = None

    @classmethod
    def from_probabilities(cls, labels: Sequence[Hashable], probs: Sequence[float]) -> ProbabilityTable:
        p = np.asarray(probs, dtype=float)
        if np.any(p < 0):
            raise ValueError("probabilities must be nonnegative")
        with np.errstate(divide="ignore"):
            return cls(labels, np.log(p))

    @classmethod
    def from_mapping(cls, mapping: Mapping[Hashable, float]) -> ProbabilityTable:
        return cls.from_probabilities(list(mapping), list(mapping.values()))

    @property
    def labels(self) -> tuple:
        return self._labels

    @property
    def log_probs(self) -> np.ndarray:
        return self._log_probs

    def probabilities(self) -> np.ndarray:
        return np.exp(self._log_probs)

    def total(self) -> float:
        return math.fsum(self.probabilities())

    def normalized(self) -> ProbabilityTable:
        return ProbabilityTable(self._labels, self._log_probs - logsumexp(self._log_probs))

    def __len__(self) -> int:
        return len(self._labels)

    def __getitem__(self, label) -> float:
        if self._index is None:
            self._index = {lab: i for i, lab in enumerate(self._labels)}
        i = self._index.get(tuple(label) if isinstance(label, list) else label)
        return 0.0 if i is None else float(np.exp(self._log_probs[i]))

    def as_dict(self) -> dict:
        return dict(zip(self._labels, self.probabilities().tolist()))

    def relabel(self, fn) -> ProbabilityTable:
        """Push the distribution forward through ``fn`` (merging collisions)."""
        merged: dict = {}
        for lab, lp in zip(self._labels, self._log_probs):
            merged.setdefault(fn(lab), []).append(lp)
        labels = list(merged)
        return ProbabilityTable(labels, [float(logsumexp(merged[k])) for k in labels])

    def __repr__(self) -> str:
        return f"ProbabilityTable({len(self)} outcomes, total={self.total():.15g})"
