"""Asymptotic distillation rates and closed-form coherence values."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

from .coherence import binomial_entropy, sector_coherence, total_coherence
from .errors import InvalidArgumentsError, UndefinedRateError
from .fock import FockSpaceState, expected_particle_number
from .states import SectorUniformState


class RateContext(str, enum.Enum):
    NUMBER_CONSERVING = "number_conserving"
    INDEFINITE_NUMBER = "indefinite_number"


@dataclass(frozen=True)
class RateReport:
    """Target copies per input copy, with the entropy ratio kept separate."""

    rate: float
    numerator_bits: float
    denominator_bits: float
    context: RateContext

    @classmethod
    def from_ratio(cls, numerator_bits: float, denominator_bits: float, context: RateContext) -> RateReport:
        if denominator_bits <= 0:
            raise UndefinedRateError("target register has no entropy")
        return cls(max(0.0, numerator_bits / denominator_bits), numerator_bits, denominator_bits, context)

    def to_dict(self) -> dict:
        return {
            "rate": self.rate,
            "numerator_bits": self.numerator_bits,
            "denominator_bits": self.denominator_bits,
            "context": self.context.value,
        }


def rate_mc_from_pure(psi: FockSpaceState, N: int) -> RateReport:
    """Rate of MC_N production from copies of a fixed-number pure state."""
    if N < 1:
        raise UndefinedRateError("MC_N distillation needs N >= 1")
    occupied = psi.occupied_sectors(tol=1e-15)
    if occupied != [N]:
        raise InvalidArgumentsError(f"state must be supported on sector {N} only, found {occupied}")
    return RateReport.from_ratio(sector_coherence(psi, N), math.log2(N + 1), RateContext.NUMBER_CONSERVING)


def rate_bec(N: int) -> RateReport:
    """H(B(N, 1/2)) / log2(N + 1)."""
    if N < 1:
        raise UndefinedRateError("BEC rate needs N >= 1")
    return RateReport.from_ratio(binomial_entropy(N, 0.5), math.log2(N + 1), RateContext.NUMBER_CONSERVING)


def indefinite_denominator_bits(N: float) -> float:
    return math.log2((2 * N + 1) * (N + 1))


def rate_indefinite(psi, N: float, number_tol: float = 1e-6) -> RateReport:
    """H(p_XY) / log2((2N+1)(N+1)) for a two-mode state of mean particle number N.

    ``number_tol`` is relative to ``max(N, 1)`` since truncated tails shift
    the mean by an amount that grows with N.
    """
    if not isinstance(psi, (FockSpaceState, SectorUniformState)) or psi.modes != 2:
        raise InvalidArgumentsError("rate_indefinite needs a two-mode pure state")
    mean = expected_particle_number(psi, (0, 1))
    if abs(mean - N) > number_tol * max(N, 1.0):
        raise InvalidArgumentsError(f"state holds {mean:.12g} particles on average, expected {N}")
    return RateReport.from_ratio(total_coherence(psi), indefinite_denominator_bits(N), RateContext.INDEFINITE_NUMBER)


def pair_correlated_bound(N: int) -> float:
    """Lower bound (4(N/2+1)/(pi N)) (log2 N + log2(pi/4)) on the pair-correlated entropy."""
    if N < 2 or N % 2:
        raise InvalidArgumentsError("bound needs even N >= 2")
    return 4 * (N / 2 + 1) / (math.pi * N) * (math.log2(N) + math.log2(math.pi / 4))


def phi_coherence_closed_form(N: float) -> float:
    """Four-term closed form for C^A(Phi_N) as printed in the source derivation.

    It does not equal the series it was derived from; see
    :func:`phi_coherence_exact` for the summed value.
    """
    if N < 1:
        raise InvalidArgumentsError("closed form needs N >= 1")
    a = math.log2((N + 2) / 2)
    b = math.log2((N + 2) / N)
    return 2 * N / (N + 2) * a + N / (N + 2) * b + 4 / (N + 2) * a + (N + 1) * b


def phi_coherence_exact(N: float) -> float:
    """Summed series: 2 log2((N+2)/2) + N log2((N+2)/N)."""
    if N <= 0:
        return 0.0
    return 2 * math.log2((N + 2) / 2) + N * math.log2((N + 2) / N)


def mc_tilde_coherence(N: int) -> float:
    """log2(2N+1) + log2((2N+1)!) / (2N+1), the summed value of C^A(MC~_N)."""
    d = 2 * N + 1
    return math.log2(d) + math.lgamma(d + 1) / math.log(2) / d


def mc_tilde_coherence_printed(N: int) -> float:
    """Final expression printed for C^A(MC~_N), read with the factorial on (2N+1).

    Differs from :func:`mc_tilde_coherence` by the extra term log2(2N+1)/(2N+1).
    """
    d = 2 * N + 1
    return math.log2(d) / d + math.log2(d) + math.lgamma(d + 1) / math.log(2) / d
