"""Monte-Carlo simulation of the type-class distillation protocol.

One shot: measure which type class the n-copy Fock record falls in, then
convert the resulting uniform superposition over the class to target copies.
For a product input the post-measurement state on a type class is exactly
uniform, so only the class size |T_t| matters and types are drawn straight
from the multinomial law.

Conversion rule: a uniform superposition over D basis states becomes
floor(log_dim D) target copies after an incoherent two-outcome projection
onto dim^copies of the states, which succeeds with probability
dim^copies / D.  Reported yields are the copies on success; the success
probability is reported alongside.

Seeding: shots are processed in fixed chunks of ``CHUNK`` and chunk ``i``
draws from ``SeedSequence([seed, i])``, so results do not depend on how
chunks are scheduled.
"""

from __future__ import annotations

import itertools
import math
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .coherence import shannon_entropy
from .errors import InvalidArgumentsError, ResourceLimitError
from .fock import FockSpaceState, dephase_fock, expected_particle_number, sector_basis
from .logspace import LogWeight, ProbabilityTable, log_multinomial

MAX_SINGLE_COPY_SAMPLES = 10**9
MAX_EXACT_TYPES = 2_000_000
EXACT_INT_LIMIT = 20_000
CHUNK = 1024


@dataclass(frozen=True)
class TypeClass:
    alphabet: tuple
    counts: tuple[int, ...]

    def __post_init__(self):
        if len(self.alphabet) != len(self.counts) or any(c < 0 for c in self.counts):
            raise InvalidArgumentsError("type needs one nonnegative count per symbol")

    @property
    def n(self) -> int:
        return sum(self.counts)

    def log_size(self) -> LogWeight:
        return LogWeight.from_log(log_multinomial(self.counts))

    def size(self) -> int:
        out = math.factorial(self.n)
        for c in self.counts:
            out //= math.factorial(c)
        return out

    def nonzero(self) -> dict:
        return {a: c for a, c in zip(self.alphabet, self.counts) if c}


@dataclass(frozen=True)
class YieldSample:
    type: TypeClass
    copies: int
    success_probability: float


def single_copy_distribution(psi) -> ProbabilityTable:
    """Fock-basis outcome law of one copy (labels are occupation pairs)."""
    if psi.modes != 2:
        raise InvalidArgumentsError("single-copy distribution needs a two-mode state")
    return dephase_fock(psi)


def sample_type(p: ProbabilityTable, n: int, seed=None) -> TypeClass:
    """Draw the type of ``n`` i.i.d. outcomes from ``p``."""
    if n < 1:
        raise InvalidArgumentsError("n must be >= 1")
    rng = np.random.default_rng(seed)
    probs = p.probabilities()
    counts = rng.multinomial(n, probs / probs.sum())
    return TypeClass(p.labels, tuple(int(c) for c in counts))


def _floor_log(size: int, dim: int) -> int:
    c = int(math.log(size) / math.log(dim)) if size > 1 else 0
    while dim ** (c + 1) <= size:
        c += 1
    while c > 0 and dim ** c > size:
        c -= 1
    return c


def _yield_from_counts(counts: Sequence[int], target_dim: int) -> tuple[int, float]:
    n = sum(counts)
    if n <= EXACT_INT_LIMIT:
        size = math.factorial(n)
        for c in counts:
            size //= math.factorial(c)
        copies = _floor_log(size, target_dim)
        return copies, math.exp(copies * math.log(target_dim) - math.log(size))
    log_size = log_multinomial(counts)
    copies = int(math.floor(log_size / math.log(target_dim) + 1e-12))
    return copies, math.exp(copies * math.log(target_dim) - log_size)


def shot_yield(t: TypeClass, target_dim: int) -> YieldSample:
    """Copies obtainable from one type class and the conversion success probability."""
    if target_dim < 2:
        raise InvalidArgumentsError("target dimension must be >= 2")
    copies, succ = _yield_from_counts(t.counts, target_dim)
    return YieldSample(t, copies, succ)


@dataclass(frozen=True)
class SimulationReport:
    analytic_rate: float
    empirical_rate: float
    stderr: float
    mean_success: float
    n: int
    shots: int | None
    target_dim: int
    seed: int | None
    mean_pair_particles: float
    pair_particles_stderr: float
    truncation_mass: float
    exact: bool

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def _prepare(psi) -> tuple[ProbabilityTable, float]:
    p = single_copy_distribution(psi)
    missing = max(0.0, 1.0 - p.total())
    if missing > 1e-9:
        raise InvalidArgumentsError(f"state is missing {missing:.3g} of its norm")
    return p.normalized(), missing


def default_target_dim(psi) -> int:
    """(N+1) for fixed-number inputs, (2N+1)(N+1) for indefinite ones (N = mean)."""
    if isinstance(psi, FockSpaceState) and len(psi.occupied_sectors(tol=1e-15)) == 1:
        return psi.occupied_sectors(tol=1e-15)[0] + 1
    N = round(expected_particle_number(psi, (0, 1)))
    return (2 * N + 1) * (N + 1)


def _run_chunk(args) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    probs, sizes, n, shots, seed, idx, target_dim = args
    rng = np.random.default_rng(np.random.SeedSequence([seed, idx]))
    counts = rng.multinomial(n, probs, size=shots)
    copies = np.empty(shots)
    succ = np.empty(shots)
    for s, row in enumerate(counts):
        c, q = _yield_from_counts(row[row > 0].tolist(), target_dim)
        copies[s], succ[s] = c, q
    particles = counts @ sizes / n
    return copies, succ, particles


def simulate(
    psi,
    n: int,
    shots: int = 10_000,
    target_dim: int | None = None,
    seed: int = 0,
    exact: bool = False,
    threads: int = 1,
) -> SimulationReport:
    """Run the protocol on ``n`` bosonic copies of the two-mode state ``psi``.

    ``exact=True`` replaces sampling with a sum over every type class.
    """
    if n < 1:
        raise InvalidArgumentsError("n must be >= 1")
    p, missing = _prepare(psi)
    if target_dim is None:
        target_dim = default_target_dim(psi)
    analytic = shannon_entropy(p) / math.log2(target_dim)
    probs = p.probabilities()
    sizes = np.array([sum(lab) for lab in p.labels], dtype=float)

    if exact:
        n_types = math.comb(n + len(probs) - 1, len(probs) - 1)
        if n_types > MAX_EXACT_TYPES:
            raise ResourceLimitError(f"{n_types} type classes are too many to enumerate")
        log_p = p.log_probs
        e_copies = e_copies2 = e_succ = e_part = e_part2 = 0.0
        for counts in _compositions(n, len(probs)):
            c_arr = np.array(counts)
            w = math.exp(log_multinomial(counts) + float(c_arr[c_arr > 0] @ log_p[c_arr > 0]))
            c, q = _yield_from_counts([x for x in counts if x], target_dim)
            part = float(c_arr @ sizes) / n
            e_copies += w * c
            e_copies2 += w * c * c
            e_succ += w * q
            e_part += w * part
            e_part2 += w * part * part
        sd = _exact_sd(e_copies, e_copies2) / n
        return SimulationReport(analytic, e_copies / n, sd, e_succ, n, None, target_dim, None,
                                e_part, _exact_sd(e_part, e_part2), missing, True)

    if n * shots > MAX_SINGLE_COPY_SAMPLES:
        raise ResourceLimitError(f"n * shots = {n * shots} exceeds the sampling guard")
    if shots < 2:
        raise InvalidArgumentsError("need at least two shots for an error estimate")
    jobs = []
    for idx, start in enumerate(range(0, shots, CHUNK)):
        jobs.append((probs, sizes, n, min(CHUNK, shots - start), seed, idx, target_dim))
    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            results = list(pool.map(_run_chunk, jobs))
    else:
        results = [_run_chunk(j) for j in jobs]
    copies = np.concatenate([r[0] for r in results]) / n
    succ = np.concatenate([r[1] for r in results])
    part = np.concatenate([r[2] for r in results])
    return SimulationReport(
        analytic_rate=analytic,
        empirical_rate=float(copies.mean()),
        stderr=float(copies.std(ddof=1) / math.sqrt(shots)),
        mean_success=float(succ.mean()),
        n=n,
        shots=shots,
        target_dim=target_dim,
        seed=seed,
        mean_pair_particles=float(part.mean()),
        pair_particles_stderr=float(part.std(ddof=1) / math.sqrt(shots)),
        truncation_mass=missing,
        exact=False,
    )


def _exact_sd(m1: float, m2: float) -> float:
    # variances below rounding of the second moment are zero
    var = m2 - m1 * m1
    return math.sqrt(var) if var > 1e-12 * max(m2, 1e-300) else 0.0


def _compositions(n: int, k: int):
    """All length-k tuples of nonnegative ints summing to n."""
    for bars in itertools.combinations(range(n + k - 1), k - 1):
        prev = -1
        out = []
        for b in bars:
            out.append(b - prev - 1)
            prev = b
        out.append(n + k - 2 - prev)
        yield tuple(out)


@dataclass(frozen=True)
class TypicalSetSize:
    """Log2-size bounds for the delta-typical set (``exact_bits`` when enumerable)."""

    lower: LogWeight
    upper: LogWeight
    exact_count: int | None
    probability_mass: float | None

    @property
    def lower_bits(self) -> float:
        return self.lower.log2_magnitude if self.lower.sign else -math.inf

    @property
    def upper_bits(self) -> float:
        return self.upper.log2_magnitude


def typical_set_log_size(p: ProbabilityTable, n: int, delta: float, enumerate_limit=(12, 6)) -> TypicalSetSize:
    """Bounds on the number of length-n sequences with |-(1/n) log2 P - H| <= delta.

    Upper: 2^{n(H+delta)}.  Lower: (1-eps) 2^{n(H-delta)} with eps from
    Chebyshev, sigma^2 / (n delta^2), or the exact atypical mass when the
    set is enumerated.
    """
    if n < 1 or delta <= 0:
        raise InvalidArgumentsError("need n >= 1 and delta > 0")
    q = p.normalized()
    lp2 = q.log_probs / math.log(2)
    probs = q.probabilities()
    H = -math.fsum((probs * lp2).tolist())
    var = math.fsum((probs * (lp2 + H) ** 2).tolist())
    upper = LogWeight.from_log(n * (H + delta) * math.log(2))

    exact_count = mass = None
    if n <= enumerate_limit[0] and len(q) <= enumerate_limit[1]:
        exact_count, mass = 0, 0.0
        terms = []
        for counts in _compositions(n, len(q)):
            c = np.array(counts)
            surprisal = -float(c[c > 0] @ lp2[c > 0]) / n
            if abs(surprisal - H) <= delta + 1e-12:
                size = math.factorial(n)
                for x in counts:
                    size //= math.factorial(x)
                exact_count += size
                terms.append(size * 2.0 ** (-n * surprisal))
        mass = math.fsum(terms)
        eps = 1.0 - mass
    else:
        eps = min(1.0, var / (n * delta**2))
    lower = LogWeight.from_log(math.log1p(-eps) + n * (H - delta) * math.log(2)) if eps < 1 else LogWeight.zero()
    return TypicalSetSize(lower, upper, exact_count, mass)


def type_class_measurement(state: FockSpaceState, n: int) -> list[tuple[float, TypeClass, FockSpaceState]]:
    """Explicit type-class measurement on a 2n-mode state (small cases only).

    Groups Fock states by the multiset of pair occupations
    ((m_0, m_1), (m_2, m_3), ...) and returns, for each type with nonzero
    probability, ``(probability, type, normalized post-measurement state)``.
    """
    if state.modes != 2 * n:
        raise InvalidArgumentsError(f"state has {state.modes} modes, expected {2 * n}")
    groups: dict[tuple, dict] = {}
    for occ, a in state.items():
        if a == 0:
            continue
        pairs = tuple((occ[2 * j], occ[2 * j + 1]) for j in range(n))
        key = tuple(sorted(Counter(pairs).items()))
        groups.setdefault(key, {})[occ] = a
    out = []
    for key, amps in groups.items():
        post = FockSpaceState.from_amplitudes(2 * n, amps)
        prob = post.norm() ** 2
        alphabet = tuple(lab for lab, _ in key)
        counts = tuple(c for _, c in key)
        out.append((prob, TypeClass(alphabet, counts), post.normalized()))
    return out


def pair_alphabet(N: int) -> tuple:
    return sector_basis(2, N)


__all__ = [
    "SimulationReport",
    "TypeClass",
    "YieldSample",
    "sample_type",
    "shot_yield",
    "simulate",
    "single_copy_distribution",
    "type_class_measurement",
    "typical_set_log_size",
]
