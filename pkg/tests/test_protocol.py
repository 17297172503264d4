import itertools
import math
from collections import Counter

import numpy as np
import pytest
from scipy.stats import chisquare

from fockcoh.errors import InvalidArgumentsError, ResourceLimitError
from fockcoh.fock import FockSpaceState
from fockcoh.logspace import ProbabilityTable
from fockcoh.protocol import (
    TypeClass,
    sample_type,
    shot_yield,
    simulate,
    single_copy_distribution,
    type_class_measurement,
    typical_set_log_size,
)
from fockcoh.states import bec, mc, phi, phi_sector_weights


def floor_log(size, dim):
    c = max(int(math.log(size) / math.log(dim)) - 2, 0) if size > 1 else 0
    while dim ** (c + 1) <= size:
        c += 1
    return c


def test_single_copy_distribution():
    p = single_copy_distribution(bec(4)).as_dict()
    assert p == pytest.approx({(4 - k, k): math.comb(4, k) / 16 for k in range(5)})
    assert np.allclose(single_copy_distribution(mc(5)).probabilities(), 1 / 6)
    w, _ = phi_sector_weights(2)
    q = single_copy_distribution(phi(2)).as_dict()
    for k in range(5):
        for r in range(k + 1):
            assert q[(k - r, r)] == pytest.approx(w[k] / (k + 1), rel=1e-12)


def test_sample_type_point_mass():
    t = sample_type(ProbabilityTable.from_mapping({"x": 1.0}), 17, seed=0)
    assert t.counts == (17,) and t.size() == 1


def test_sampling_chi_square():
    p = single_copy_distribution(phi(2))
    keep = p.probabilities() > 1e-4
    t = sample_type(p, 100_000, seed=12345)
    counts = np.array(t.counts)
    expected = p.probabilities() * 100_000
    obs = np.append(counts[keep], counts[~keep].sum())
    exp = np.append(expected[keep], expected[~keep].sum())
    assert chisquare(obs, exp * obs.sum() / exp.sum()).pvalue > 1e-3


def test_type_law_chi_square():
    # types of n = 3 draws from bec(1): Binomial(3, 1/2) on the count of (1,0)
    p = single_copy_distribution(bec(1))
    rng = np.random.default_rng(99)
    hist = Counter(sample_type(p, 3, seed=rng.integers(2**63)).counts for _ in range(20_000))
    labels = [(3 - j, j) for j in range(4)]
    obs = np.array([hist[lab] for lab in labels])
    exp = np.array([math.comb(3, j) / 8 for j in range(4)]) * obs.sum()
    assert chisquare(obs, exp).pvalue > 1e-3


@pytest.mark.parametrize("counts,dim,copies,success", [
    ((1, 1), 2, 1, 1.0),
    ((2, 1), 2, 1, 2 / 3),
    ((5, 0), 3, 0, 1.0),
    ((4,), 2, 0, 1.0),
    ((3, 3, 2), 5, 3, 125 / 560),
])
def test_shot_yield_examples(counts, dim, copies, success):
    y = shot_yield(TypeClass(tuple(range(len(counts))), counts), dim)
    assert y.copies == copies
    assert y.success_probability == pytest.approx(success, rel=1e-12)


def test_shot_yield_large_n_and_permutation():
    counts = (9000, 7000, 6000)
    t = TypeClass(("a", "b", "c"), counts)
    y = shot_yield(t, 15)
    assert y.copies == floor_log(t.size(), 15)
    for perm in itertools.permutations(range(3)):
        permuted = TypeClass(tuple("abc"[i] for i in perm), tuple(counts[i] for i in perm))
        assert shot_yield(permuted, 15).copies == y.copies
    big = TypeClass(("a", "b"), (30000, 25000))
    assert shot_yield(big, 2).copies == floor_log(big.size(), 2)
    with pytest.raises(InvalidArgumentsError):
        shot_yield(t, 1)


def test_exact_simulation_matches_brute_force():
    rep = simulate(bec(1), 2, exact=True)
    # all four length-2 outcome sequences, each with probability 1/4
    outcomes = [(1, 0), (0, 1)]
    total = 0.0
    for seq in itertools.product(outcomes, repeat=2):
        size = math.factorial(2) // math.prod(math.factorial(c) for c in Counter(seq).values())
        total += 0.25 * floor_log(size, 2)
    assert rep.empirical_rate == pytest.approx(total / 2, abs=1e-15)
    assert rep.empirical_rate == pytest.approx(0.25, abs=1e-15)
    assert rep.analytic_rate == pytest.approx(1.0)


def test_exact_enumeration_small_alphabet():
    rep = simulate(bec(2), 5, exact=True)
    outcomes = [(2, 0), (1, 1), (0, 2)]
    probs = {(2, 0): 0.25, (1, 1): 0.5, (0, 2): 0.25}
    total = 0.0
    for seq in itertools.product(outcomes, repeat=5):
        size = math.factorial(5) // math.prod(math.factorial(c) for c in Counter(seq).values())
        total += math.prod(probs[o] for o in seq) * floor_log(size, 3)
    assert rep.empirical_rate == pytest.approx(total / 5, abs=1e-13)


def test_concentration_at_n64():
    rep = simulate(bec(1), 64, shots=10_000, seed=2024)
    assert rep.empirical_rate >= 0.9
    assert 0 < rep.mean_success <= 1


def test_deterministic_and_thread_independent():
    a = simulate(bec(2), 32, shots=3000, seed=7)
    b = simulate(bec(2), 32, shots=3000, seed=7, threads=4)
    assert a == b
    assert simulate(bec(2), 32, shots=3000, seed=8) != a


def test_rate_nondecreasing_in_n():
    reps = [simulate(bec(1), n, shots=4000, seed=n) for n in (4, 16, 64)]
    for lo, hi in zip(reps, reps[1:]):
        assert hi.empirical_rate >= lo.empirical_rate - 3 * math.hypot(lo.stderr, hi.stderr)


def test_sampled_yields_are_valid():
    p = single_copy_distribution(phi(2))
    rng = np.random.default_rng(1)
    for _ in range(200):
        y = shot_yield(sample_type(p, 40, seed=rng.integers(2**63)), 15)
        assert y.copies >= 0 and 0 < y.success_probability <= 1


def sequence_sampler(state, n, shots, dim, seed):
    """Independent estimator: draw outcome sequences, count types, size them exactly."""
    p = single_copy_distribution(state).normalized()
    probs = p.probabilities()
    rng = np.random.default_rng(seed)
    yields = np.empty(shots)
    for s in range(shots):
        seq = rng.choice(len(probs), size=n, p=probs)
        counts = Counter(seq.tolist()).values()
        size = math.factorial(n) // math.prod(math.factorial(c) for c in counts)
        yields[s] = floor_log(size, dim) / n
    return yields.mean(), yields.std(ddof=1) / math.sqrt(shots)


@pytest.mark.parametrize("n", [8, 128])
def test_phi2_against_sequence_sampler(n):
    rep = simulate(phi(2), n, shots=10_000, seed=31)
    assert rep.target_dim == 15
    mean, se = sequence_sampler(phi(2), n, 10_000, 15, seed=32)
    assert abs(rep.empirical_rate - mean) <= 3 * math.hypot(rep.stderr, se)


def test_energy_density_audit():
    rep = simulate(phi(2), 128, shots=10_000, seed=5)
    assert abs(rep.mean_pair_particles - 2) <= 3 * rep.pair_particles_stderr + rep.truncation_mass
    fixed = simulate(bec(3), 16, shots=500, seed=5)
    assert fixed.mean_pair_particles == 3 and fixed.pair_particles_stderr == 0


def test_guards():
    with pytest.raises(ResourceLimitError):
        simulate(bec(1), 10**6, shots=10**4)
    with pytest.raises(ResourceLimitError):
        simulate(phi(2), 64, exact=True)
    with pytest.raises(InvalidArgumentsError):
        simulate(bec(1), 0)


def test_typical_set_uniform():
    p = ProbabilityTable.from_mapping({0: 0.5, 1: 0.5})
    ts = typical_set_log_size(p, 10, 1e-6)
    assert ts.exact_count == 2**10
    assert ts.upper_bits == pytest.approx(10, abs=1e-4)
    assert ts.lower_bits == pytest.approx(10, abs=1e-4)


def test_typical_set_binomial_enumeration():
    p = single_copy_distribution(bec(2))
    probs = dict(zip(p.labels, p.probabilities()))
    H = 1.5
    count, mass = 0, 0.0
    for seq in itertools.product(p.labels, repeat=8):
        logp = sum(math.log2(probs[o]) for o in seq)
        if abs(-logp / 8 - H) <= 0.1 + 1e-12:
            count += 1
            mass += 2.0**logp
    ts = typical_set_log_size(p, 8, 0.1)
    assert ts.exact_count == count
    assert ts.probability_mass == pytest.approx(mass, abs=1e-12)
    assert ts.lower_bits <= math.log2(count) <= ts.upper_bits


def test_typical_set_chebyshev_bounds():
    p = single_copy_distribution(phi(2))
    ts = typical_set_log_size(p, 2000, 0.2)
    assert ts.exact_count is None
    assert ts.lower_bits < ts.upper_bits


# (N=2, n=6) needs a 1.35e6-dimensional dense sector on 12 modes, past the storage guard
@pytest.mark.parametrize("N,n", [(1, 2), (1, 4), (1, 6), (2, 2), (2, 4), (2, 5)])
def test_type_class_shortcut(N, n):
    """The post-measurement state of each type is uniform over its class."""
    single = single_copy_distribution(bec(N))
    for prob, t, post in type_class_measurement(bec(N, n), n):
        amps = np.array([a for _, a in post.items() if abs(a) > 0])
        assert len(amps) == t.size()
        assert np.allclose(np.abs(amps), 1 / math.sqrt(t.size()), atol=1e-12)
        law = t.size() * math.prod(single[lab] ** c for lab, c in zip(t.alphabet, t.counts))
        assert prob == pytest.approx(law, rel=1e-10)


def test_type_class_measurement_mode_check():
    with pytest.raises(InvalidArgumentsError):
        type_class_measurement(FockSpaceState.fock((1, 0)), 2)
