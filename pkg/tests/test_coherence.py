import itertools
import math

import numpy as np
import pytest
from scipy.stats import binom

from fockcoh.coherence import (
    binomial_entropy,
    measure,
    multinomial_entropy,
    sector_coherence,
    shannon_entropy,
    total_coherence,
    von_neumann_entropy,
    weighted_coherence,
)
from fockcoh.errors import InvalidArgumentsError, UndefinedSectorError
from fockcoh.fock import DensityMatrix, FockSpaceState, dephase_fock, partial_trace
from fockcoh.logspace import ProbabilityTable
from fockcoh.states import bec, hw_coherent, mc, mc_tilde, mc_tilde_law, phi, phi_law, phi_sector_weights, psi


def table(probs):
    return ProbabilityTable.from_probabilities(range(len(probs)), probs)


def test_shannon_examples():
    assert shannon_entropy(table([0.5, 0.5])) == 1.0
    assert shannon_entropy(table([0.25, 0.5, 0.25])) == pytest.approx(1.5, abs=1e-15)
    assert shannon_entropy(table([1.0])) == 0.0


def test_binomial_entropy():
    assert binomial_entropy(1, 0.5) == pytest.approx(1.0, abs=1e-15)
    for N in (2, 17, 4000):
        oracle = binom(N, 0.5).entropy() / math.log(2)
        assert binomial_entropy(N) == pytest.approx(oracle, abs=1e-9)
    assert binomial_entropy(4000) == pytest.approx(0.5 * math.log2(math.pi * math.e * 4000 / 2), abs=1e-3)
    assert binomial_entropy(7, 0.3) == pytest.approx(binom(7, 0.3).entropy() / math.log(2), abs=1e-12)


@pytest.mark.parametrize("N,M", [(1, 2), (3, 3), (6, 4), (5, 5)])
def test_multinomial_entropy_brute_force(N, M):
    terms = []
    for counts in itertools.product(range(N + 1), repeat=M):
        if sum(counts) != N:
            continue
        p = math.factorial(N) / math.prod(math.factorial(c) for c in counts) / M**N
        terms.append(-p * math.log2(p))
    assert multinomial_entropy(N, M) == pytest.approx(math.fsum(terms), abs=1e-12)


def test_multinomial_two_cells_is_binomial():
    assert multinomial_entropy(50, 2) == pytest.approx(binomial_entropy(50), abs=1e-12)


def test_sector_coherence_examples():
    for N in (1, 4, 30):
        assert sector_coherence(mc(N), N) == pytest.approx(math.log2(N + 1), abs=1e-13)
    assert sector_coherence(FockSpaceState.fock((2, 3)), 5) == 0
    assert sector_coherence(bec(2), 2) == pytest.approx(1.5, abs=1e-15)
    with pytest.raises(UndefinedSectorError):
        sector_coherence(bec(2), 3)


def test_sector_coherence_of_mixed_block():
    # dephased input carries no coherence; a pure block gives the diagonal entropy
    rho = DensityMatrix.from_pure(bec(3))
    assert sector_coherence(rho, 3) == pytest.approx(binomial_entropy(3), abs=1e-12)
    diag = DensityMatrix.from_ensemble([(0.5, FockSpaceState.fock((1, 0))), (0.5, FockSpaceState.fock((0, 1)))])
    assert sector_coherence(diag, 1) == pytest.approx(0, abs=1e-12)


def test_weighted_coherence():
    assert weighted_coherence(mc_tilde(1)) == pytest.approx((0 + 1 + math.log2(3)) / 3, abs=1e-13)
    assert weighted_coherence(bec(2)) == pytest.approx(1.5, abs=1e-15)
    w, _ = phi_sector_weights(3)
    oracle = math.fsum(p * math.log2(k + 1) for k, p in enumerate(w))
    assert weighted_coherence(phi(3)) == pytest.approx(oracle, abs=1e-12)
    assert weighted_coherence(phi_law(3)) == pytest.approx(oracle, abs=1e-12)
    diag = DensityMatrix.from_ensemble([(0.3, FockSpaceState.fock((2, 0))), (0.7, FockSpaceState.fock((0, 1)))])
    assert weighted_coherence(diag) == pytest.approx(0, abs=1e-12)


def test_total_coherence_fock_and_phi():
    assert total_coherence(FockSpaceState.fock((3, 1))) == 0
    # direct series: -sum_k p_k log2(p_k / (k+1))
    w, _ = phi_sector_weights(2)
    oracle = -math.fsum(p * math.log2(p / (k + 1)) for k, p in enumerate(w))
    assert total_coherence(phi(2)) == pytest.approx(oracle, abs=1e-9)
    assert total_coherence(phi(2)) == pytest.approx(4.0, abs=1e-9)


@pytest.mark.parametrize("N", [1, 2, 5, 12])
def test_total_coherence_mc_tilde_double_sum(N):
    d = 2 * N + 1
    probs = [1 / d / (k + 1) for k in range(d) for _ in range(k + 1)]
    oracle = -math.fsum(p * math.log2(p) for p in probs)
    assert len(probs) == d * (N + 1)
    assert total_coherence(mc_tilde(N)) == pytest.approx(oracle, abs=1e-12)
    assert total_coherence(mc_tilde_law(N)) == pytest.approx(oracle, abs=1e-12)
    closed = math.log2(d) + math.fsum(math.log2(x + 1) for x in range(d)) / d
    assert oracle == pytest.approx(closed, abs=1e-12)


STATES = [bec(3), mc(4), mc_tilde(2), phi(1.5), psi(0.6, 2, 6), hw_coherent(0.8, (0.6, 0.8))]


@pytest.mark.parametrize("state", STATES, ids=range(len(STATES)))
def test_ordering_and_pure_identity(state):
    ca, c = total_coherence(state), weighted_coherence(state)
    assert ca >= c - 1e-12 >= -1e-12
    assert ca == shannon_entropy(dephase_fock(state))
    assert total_coherence(DensityMatrix.from_pure(state)) == pytest.approx(ca, abs=1e-9)


@pytest.mark.parametrize("state", STATES, ids=range(len(STATES)))
def test_phase_rotation_invariance(state):
    rng = np.random.default_rng(7)
    rotated = FockSpaceState(state.modes, {N: v * np.exp(1j * rng.uniform(0, 2 * np.pi, len(v)))
                                           for N, v in state.sectors.items()})
    assert abs(total_coherence(rotated) - total_coherence(state)) < 1e-12


def test_von_neumann():
    assert von_neumann_entropy(DensityMatrix.from_pure(bec(2))) == pytest.approx(0, abs=1e-12)
    assert von_neumann_entropy(partial_trace(mc(3), keep=[0])) == pytest.approx(2.0, abs=1e-12)


def test_reduced_state_total_coherence_vanishes_for_mc():
    # tracing out one mode of MC_N leaves a Fock-diagonal state
    assert total_coherence(partial_trace(mc(3), keep=[0])) == pytest.approx(0, abs=1e-12)


def test_measure_dispatch():
    assert measure(bec(2), "CN", 2) == pytest.approx(1.5)
    assert measure(bec(2), "C") == pytest.approx(1.5)
    assert measure(bec(2), "CA") == pytest.approx(1.5)
    with pytest.raises(InvalidArgumentsError):
        measure(bec(2), "CN")
    with pytest.raises(InvalidArgumentsError):
        measure(bec(2), "XX")
