"""Constructors for the named two-mode and multi-copy states.

Every constructor returns a normalized :class:`FockSpaceState` whose first
nonzero amplitude is real and positive.  States of indefinite particle number
are truncated where the analytic tail mass drops below ``TAIL_TOL``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import gammaln, logsumexp
from scipy.stats import poisson

from .errors import InvalidArgumentsError, ResourceLimitError
from .fock import MAX_SECTOR_DIM, FockSpaceState, sector_dimension
from .logspace import LN2, ProbabilityTable, log_binomial

TAIL_TOL = 1e-12
MAX_MATERIALIZED = 10_000_000
# weight of the two-photon component in the HOM channel output
HOM_TWO_PHOTON_WEIGHT = 0.5


def _two_mode(sectors: dict[int, np.ndarray], **kw) -> FockSpaceState:
    return FockSpaceState(2, sectors, **kw).with_phase_convention()


def _amplitudes_from_log(log_abs: np.ndarray, signs: np.ndarray) -> np.ndarray:
    """Normalized real amplitudes from log-magnitudes and signs."""
    log_norm = 0.5 * logsumexp(2 * log_abs[np.isfinite(log_abs)])
    with np.errstate(under="ignore"):
        return signs * np.exp(log_abs - log_norm)


def _check_product_size(modes: int, N: int, product: int):
    if product > MAX_SECTOR_DIM:
        raise ResourceLimitError(f"{product} basis states exceed the materialization guard")
    if sector_dimension(modes, N) > MAX_SECTOR_DIM:
        raise ResourceLimitError(f"sector of {N} particles on {modes} modes is too large to store densely")


def _pair_product(n_pairs: int, single: np.ndarray, N: int) -> FockSpaceState:
    """Bosonic copies: product amplitudes over disjoint mode pairs."""
    _check_product_size(2 * n_pairs, n_pairs * N, (N + 1) ** n_pairs)
    amps = {}
    for ks in itertools.product(range(N + 1), repeat=n_pairs):
        occ = tuple(c for k in ks for c in (N - k, k))
        amps[occ] = math.prod(single[k] for k in ks)
    return FockSpaceState.from_amplitudes(2 * n_pairs, amps).with_phase_convention()


def bec(N: int, n: int = 1) -> FockSpaceState:
    """``n`` bosonic copies of the two-mode condensate with equal amplitudes."""
    if N < 0 or n < 1:
        raise InvalidArgumentsError(f"need N >= 0 and n >= 1, got N={N}, n={n}")
    k = np.arange(N + 1)
    single = np.exp(0.5 * (log_binomial(N, k) - N * math.log(2)))
    if n == 1:
        return _two_mode({N: single})
    return _pair_product(n, single, N)


def mc(N: int) -> FockSpaceState:
    """Two-mode maximally correlated state on the ``N``-particle sector."""
    if N < 0:
        raise InvalidArgumentsError("N must be nonnegative")
    return _two_mode({N: np.full(N + 1, 1 / math.sqrt(N + 1))})


def mc_bosonic_copies(N: int, copies: int) -> FockSpaceState:
    """``copies`` bosonic copies of :func:`mc` on ``2 * copies`` modes."""
    if N < 0 or copies < 1:
        raise InvalidArgumentsError(f"need N >= 0 and copies >= 1, got N={N}, copies={copies}")
    if copies == 1:
        return mc(N)
    return _pair_product(copies, np.full(N + 1, 1 / math.sqrt(N + 1)), N)


@dataclass(frozen=True)
class SectorUniformState:
    """Two-mode pure state ``sum_k sqrt(p_k) |MC_k>`` kept as its sector weights.

    Used where the dense Fock vector is too large (the maximally coherent
    state at N in the thousands spans ~10^9 Fock states).  ``sector_weights[k]``
    is ``p_k``; all quantities below are exact functions of these weights.
    """

    sector_weights: np.ndarray
    tail_mass_bound: float = 0.0

    @property
    def modes(self) -> int:
        return 2

    @property
    def truncation(self) -> int:
        return len(self.sector_weights) - 1

    def expected_particle_number(self, mode_subset=(0, 1)) -> float:
        subset = set(mode_subset)
        k = np.arange(len(self.sector_weights))
        # each mode holds k/2 on average inside a uniform sector
        per_mode = 0.5 if len(subset) == 1 else 1.0
        if not subset:
            return 0.0
        return per_mode * math.fsum((k * self.sector_weights).tolist())

    def joint_entropy_bits(self) -> float:
        """Shannon entropy of the Fock distribution, p(k, r) = p_k / (k+1)."""
        p = self.sector_weights
        k = np.arange(len(p))
        nz = p > 0
        terms = -p[nz] * (np.log(p[nz]) - np.log(k[nz] + 1.0))
        return math.fsum(terms.tolist()) / LN2

    def dephased(self) -> ProbabilityTable:
        self._guard()
        labels, probs = [], []
        for k, pk in enumerate(self.sector_weights):
            labels.extend((k - r, r) for r in range(k + 1))
            probs.append(np.full(k + 1, pk / (k + 1)))
        return ProbabilityTable.from_probabilities(labels, np.concatenate(probs))

    def _guard(self):
        size = len(self.sector_weights) * (len(self.sector_weights) + 1) // 2
        if size > MAX_MATERIALIZED:
            raise ResourceLimitError(f"{size} amplitudes exceed the materialization guard")

    def materialize(self) -> FockSpaceState:
        self._guard()
        sectors = {k: np.full(k + 1, math.sqrt(pk / (k + 1))) for k, pk in enumerate(self.sector_weights)}
        return FockSpaceState(2, sectors, len(self.sector_weights) - 1, self.tail_mass_bound)


def phi_sector_weights(N: float) -> tuple[np.ndarray, float]:
    """Sector weights of the maximally coherent state at mean particle number ``N``.

    ``p_0 = (2/(N+2))^2`` and ``p_k = 4 (k+1) N^k / (N+2)^(k+2)``, truncated at
    the first ``K`` with closed-form tail mass below ``TAIL_TOL``.
    """
    if N < 0:
        raise InvalidArgumentsError("N must be nonnegative")
    if N == 0:
        return np.array([1.0]), 0.0
    r = N / (N + 2.0)
    K = phi_truncation(N)
    k = np.arange(K + 1)
    logp = math.log(4.0) + np.log(k + 1.0) + k * math.log(N) - (k + 2) * math.log(N + 2.0)
    return np.exp(logp), _geometric_tail(r, K + 1)


def _geometric_tail(r: float, J: int) -> float:
    """sum_{k>=J} (1-r)^2 (k+1) r^k in closed form."""
    return r ** J * ((J + 1) * (1 - r) + r)


def phi_truncation(N: float, tol: float = TAIL_TOL) -> int:
    """Smallest cutoff K whose discarded tail (sectors > K) is below ``tol``."""
    if N == 0:
        return 0
    r = N / (N + 2.0)
    lo, hi = 0, 1
    while _geometric_tail(r, hi + 1) >= tol:
        hi *= 2
    while lo < hi:
        mid = (lo + hi) // 2
        if _geometric_tail(r, mid + 1) < tol:
            hi = mid
        else:
            lo = mid + 1
    return lo


def phi_law(N: float) -> SectorUniformState:
    weights, tail = phi_sector_weights(N)
    return SectorUniformState(weights, tail)


def phi(N: float) -> FockSpaceState:
    """Maximal total-coherence state at expected particle number ``N`` (dense)."""
    return phi_law(N).materialize()


def mc_tilde_law(N: int) -> SectorUniformState:
    if N < 0:
        raise InvalidArgumentsError("N must be nonnegative")
    return SectorUniformState(np.full(2 * N + 1, 1.0 / (2 * N + 1)))


def mc_tilde(N: int) -> FockSpaceState:
    """Uniform superposition of :func:`mc` over sectors ``0..2N``."""
    return mc_tilde_law(N).materialize()


@dataclass(frozen=True)
class PsiParams:
    theta: float
    m: int
    N: int

    def __post_init__(self):
        if self.N < 0 or not 0 <= self.m <= self.N:
            raise InvalidArgumentsError(f"need 0 <= m <= N, got m={self.m}, N={self.N}")
        if not -1e-12 <= self.theta <= math.pi / 4 + 1e-12:
            raise InvalidArgumentsError(f"theta must lie in [0, pi/4], got {self.theta}")


@lru_cache(maxsize=8192)
def _factor_coefficients(N: int, m: int) -> tuple[np.ndarray, np.ndarray]:
    """Exact coefficients of (1+y)^m (1-y)^(N-m) as (log|K_k|, sign K_k).

    Uses the integer recurrence (k+1) K_{k+1} = (2m-N) K_k - (N-k+1) K_{k-1},
    which follows from (1-y^2) P'(y) = ((2m-N) - N y) P(y).
    """
    K = [0] * (N + 1)
    K[0] = 1
    prev, cur = 0, 1
    for k in range(N):
        nxt, rem = divmod((2 * m - N) * cur - (N - k + 1) * prev, k + 1)
        assert rem == 0
        K[k + 1] = nxt
        prev, cur = cur, nxt
    logs = np.array([math.log(abs(c)) if c else -math.inf for c in K])
    signs = np.array([(c > 0) - (c < 0) for c in K], dtype=float)
    logs.setflags(write=False)
    signs.setflags(write=False)
    return logs, signs


def psi_log_amplitudes(params: PsiParams) -> tuple[np.ndarray, np.ndarray]:
    """Unnormalized (log|c_k|, sign c_k) for (a1+t a2)^m (a1-t a2)^(N-m)|0>, t = tan theta."""
    N, m = params.N, params.m
    logK, signs = _factor_coefficients(N, m)
    k = np.arange(N + 1)
    t = math.tan(params.theta)
    if t == 0:
        log_t_k = np.where(k == 0, 0.0, -np.inf)
    else:
        log_t_k = k * math.log(t)
    # monomial a1^{N-k} a2^k |0> has norm sqrt((N-k)! k!)
    log_abs = logK + log_t_k + 0.5 * (gammaln(N - k + 1.0) + gammaln(k + 1.0))
    return log_abs, np.where(np.isfinite(log_abs), signs, 0.0)


def psi(theta: float, m: int, N: int) -> FockSpaceState:
    """Real two-mode N-particle state built from two linear creation-operator factors."""
    p = PsiParams(theta, m, N)
    log_abs, signs = psi_log_amplitudes(p)
    return _two_mode({N: _amplitudes_from_log(log_abs, signs)})


def noon(N: int) -> FockSpaceState:
    if N < 1:
        raise InvalidArgumentsError("NOON state needs N >= 1")
    vec = np.zeros(N + 1)
    vec[0] = vec[N] = 1 / math.sqrt(2)
    return _two_mode({N: vec})


def pair_correlated(N: int) -> FockSpaceState:
    """(a1^dag^2 + a2^dag^2)^(N/2) |0>, normalized; N must be even."""
    if N < 0 or N % 2:
        raise InvalidArgumentsError("pair-correlated state needs even N >= 0")
    h = N // 2
    j = np.arange(h + 1)
    k = 2 * j
    log_abs = np.full(N + 1, -np.inf)
    log_abs[k] = log_binomial(h, j) + 0.5 * (gammaln(N - k + 1.0) + gammaln(k + 1.0))
    return _two_mode({N: _amplitudes_from_log(log_abs, np.where(np.isfinite(log_abs), 1.0, 0.0))})


def _check_spinor(c1: complex, c2: complex):
    if abs(abs(c1) ** 2 + abs(c2) ** 2 - 1) > 1e-12:
        raise InvalidArgumentsError(f"spinor ({c1}, {c2}) is not normalized")


def hw_coherent(alpha: complex, spinor=(1.0, 0.0), N_max: int | None = None) -> FockSpaceState:
    """Coherent state D(alpha)|0> displaced along the single-particle mode ``spinor``.

    Sector weights are Poisson(|alpha|^2).  ``N_max`` defaults to the smallest
    cutoff with tail mass below ``TAIL_TOL``; an explicit cutoff must meet it.
    """
    u1, u2 = complex(spinor[0]), complex(spinor[1])
    _check_spinor(u1, u2)
    mean = abs(alpha) ** 2
    if N_max is None:
        N_max = int(poisson.isf(TAIL_TOL, mean)) if mean > 0 else 0
        while poisson.sf(N_max, mean) >= TAIL_TOL:
            N_max += 1
    tail = float(poisson.sf(N_max, mean)) if mean > 0 else 0.0
    if tail >= TAIL_TOL:
        raise InvalidArgumentsError(f"N_max={N_max} leaves tail mass {tail:.3g}")
    sectors = {}
    for N in range(N_max + 1):
        k = np.arange(N + 1)
        # (u.a^dag)^N/sqrt(N!) |0> = sum_k sqrt(C(N,k)) u1^(N-k) u2^k |N-k,k>
        binom = np.exp(0.5 * log_binomial(N, k))
        spin = np.array([u1 ** (N - kk) * u2 ** kk for kk in k])
        weight = math.exp(0.5 * (-mean + (N * math.log(mean) if mean > 0 else 0.0) - math.lgamma(N + 1))) \
            if mean > 0 or N == 0 else 0.0
        phase = (alpha / abs(alpha)) ** N if alpha != 0 else 1.0
        sectors[N] = weight * phase * binom * spin
    return FockSpaceState(2, sectors, N_max, tail)


def hom_phi(c1: complex, c2: complex) -> FockSpaceState:
    """Two-photon state (c1 a1^dag^2/sqrt2 + c2 a1^dag a2^dag)|0> = c1|2,0> + c2|1,1>."""
    _check_spinor(c1, c2)
    return _two_mode({2: np.array([c1, c2, 0.0], dtype=complex)})


NAMED = {
    "bec": bec,
    "mc": mc,
    "mc_copies": mc_bosonic_copies,
    "mc_tilde": mc_tilde,
    "phi": phi,
    "psi": psi,
    "noon": noon,
    "pair_correlated": pair_correlated,
    "hw_coherent": hw_coherent,
    "hom_phi": hom_phi,
}
