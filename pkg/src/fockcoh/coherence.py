"""Entropy functionals and the Fock-basis coherence quantifiers.

All entropies are in bits.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.stats import binom

from .errors import InvalidArgumentsError, UndefinedSectorError
from .fock import DensityMatrix, FockSpaceState, dephase_fock
from .logspace import LN2, ProbabilityTable, log_binomial, to_bits
from .states import SectorUniformState

EIG_DROP = 1e-14
SECTOR_FLOOR = 1e-15


def _entropy_from_log_probs(log_p: np.ndarray) -> float:
    p = np.exp(log_p)
    return to_bits(-math.fsum((p * log_p).tolist())) + 0.0  # no -0.0


def shannon_entropy(p: ProbabilityTable) -> float:
    """-sum p log2 p with compensated summation (0 log 0 = 0)."""
    return _entropy_from_log_probs(p.log_probs)


def _vn_entropy_of_eigs(eigs: np.ndarray) -> float:
    e = eigs[eigs > EIG_DROP]
    return to_bits(-math.fsum((e * np.log(e)).tolist())) + 0.0


def von_neumann_entropy(rho: DensityMatrix) -> float:
    return _vn_entropy_of_eigs(rho.eigenvalues())


def binomial_entropy(N: int, p: float = 0.5) -> float:
    """Entropy of Binomial(N, p) by direct log-space summation."""
    if N < 0 or not 0 <= p <= 1:
        raise InvalidArgumentsError(f"need N >= 0 and 0 <= p <= 1, got N={N}, p={p}")
    if p in (0.0, 1.0) or N == 0:
        return 0.0
    k = np.arange(N + 1)
    logpmf = log_binomial(N, k) + k * math.log(p) + (N - k) * math.log1p(-p)
    return _entropy_from_log_probs(logpmf)


def multinomial_entropy(N: int, M: int) -> float:
    """Entropy of the equiprobable multinomial over ``M`` cells with ``N`` trials.

    Uses H = N log M - log N! + M E[log n_1!] with n_1 ~ Binomial(N, 1/M),
    which follows from linearity of expectation over the cell marginals.
    """
    if N < 0 or M < 2:
        raise InvalidArgumentsError(f"need N >= 0 and M >= 2, got N={N}, M={M}")
    k = np.arange(N + 1)
    pmf = binom.pmf(k, N, 1.0 / M)
    lf = np.array([math.lgamma(x + 1) for x in k])
    nats = math.fsum([N * math.log(M), -math.lgamma(N + 1), M * math.fsum((pmf * lf).tolist())])
    return to_bits(nats)


def _sector_pure_entropy(vec: np.ndarray) -> float:
    w = np.abs(vec) ** 2
    w = w[w > 0] / math.fsum(w.tolist())
    return to_bits(-math.fsum((w * np.log(w)).tolist())) + 0.0


def sector_coherence(rho, N: int) -> float:
    """Entropy of coherence of the sector-``N`` conditional state."""
    if isinstance(rho, FockSpaceState):
        vec = rho.sectors.get(N)
        if vec is None or np.vdot(vec, vec).real <= SECTOR_FLOOR:
            raise UndefinedSectorError(f"sector {N} is empty")
        return _sector_pure_entropy(vec)
    if isinstance(rho, SectorUniformState):
        if N >= len(rho.sector_weights) or rho.sector_weights[N] <= SECTOR_FLOOR:
            raise UndefinedSectorError(f"sector {N} is empty")
        return math.log2(N + 1)
    if isinstance(rho, DensityMatrix):
        blk = rho.block(N)
        w = np.trace(blk).real
        if w <= SECTOR_FLOOR:
            raise UndefinedSectorError(f"sector {N} is empty")
        cond = blk / w
        diag = np.clip(np.diag(cond).real, 0, None)
        diag = diag[diag > 0]
        h_diag = to_bits(-math.fsum((diag * np.log(diag)).tolist()))
        return h_diag - _vn_entropy_of_eigs(np.linalg.eigvalsh(cond))
    raise InvalidArgumentsError(f"unsupported state type {type(rho).__name__}")


def weighted_coherence(rho) -> float:
    """Sector-weighted average of :func:`sector_coherence`."""
    if isinstance(rho, SectorUniformState):
        k = np.arange(len(rho.sector_weights))
        return math.fsum((rho.sector_weights * np.log2(k + 1.0)).tolist())
    weights = rho.sector_weights()
    return math.fsum(w * sector_coherence(rho, N) for N, w in weights.items() if w > SECTOR_FLOOR)


def total_coherence(rho) -> float:
    """Entropy of the fully Fock-dephased state minus the entropy of the state."""
    if isinstance(rho, SectorUniformState):
        return rho.joint_entropy_bits()
    if isinstance(rho, FockSpaceState):
        return shannon_entropy(dephase_fock(rho))
    if isinstance(rho, DensityMatrix):
        return shannon_entropy(dephase_fock(rho)) - von_neumann_entropy(rho)
    raise InvalidArgumentsError(f"unsupported state type {type(rho).__name__}")


def measure(rho, name: str, N: int | None = None) -> float:
    """Dispatch by short name: ``CN`` (needs ``N``), ``C`` or ``CA``."""
    if name == "CN":
        if N is None:
            raise InvalidArgumentsError("measure CN needs a sector N")
        return sector_coherence(rho, N)
    if name == "C":
        return weighted_coherence(rho)
    if name == "CA":
        return total_coherence(rho)
    raise InvalidArgumentsError(f"unknown measure {name!r}")


__all__ = [
    "LN2",
    "binomial_entropy",
    "multinomial_entropy",
    "sector_coherence",
    "shannon_entropy",
    "total_coherence",
    "von_neumann_entropy",
    "weighted_coherence",
]
