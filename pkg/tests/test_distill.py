import math

import numpy as np
import pytest

from fockcoh.coherence import binomial_entropy, total_coherence
from fockcoh.distill import (
    RateContext,
    indefinite_denominator_bits,
    mc_tilde_coherence,
    mc_tilde_coherence_printed,
    pair_correlated_bound,
    phi_coherence_closed_form,
    phi_coherence_exact,
    rate_bec,
    rate_indefinite,
    rate_mc_from_pure,
)
from fockcoh.errors import InvalidArgumentsError, UndefinedRateError
from fockcoh.fock import FockSpaceState
from fockcoh.states import bec, mc, mc_tilde, mc_tilde_law, phi, phi_law, phi_sector_weights, psi


def test_pure_rate_examples():
    for N in range(1, 11):
        assert rate_mc_from_pure(mc(N), N).rate == pytest.approx(1.0, abs=1e-12)
    assert rate_mc_from_pure(bec(1), 1).rate == pytest.approx(1.0, abs=1e-12)
    assert rate_mc_from_pure(bec(2), 2).rate == pytest.approx(1.5 / math.log2(3), abs=1e-12)
    assert rate_mc_from_pure(FockSpaceState.fock((2, 1)), 3).rate == 0


def test_pure_rate_rejects_wrong_sector():
    with pytest.raises(InvalidArgumentsError):
        rate_mc_from_pure(bec(2), 3)
    with pytest.raises(UndefinedRateError):
        rate_mc_from_pure(FockSpaceState.vacuum(2), 0)


def test_rate_bec():
    assert rate_bec(1).rate == 1.0
    assert rate_bec(2).rate == pytest.approx(0.946395, abs=1e-6)
    with pytest.raises(UndefinedRateError):
        rate_bec(0)
    values = [rate_bec(N).rate for N in (10, 100, 1000, 4000)]
    assert all(a > b for a, b in zip(values, values[1:]))
    N = 4000
    approx = 0.5 * math.log2(2 * math.pi * math.e * N / 4) / math.log2(N + 1)
    assert 0.5 < values[-1] < 0.62
    assert abs(values[-1] - approx) < 1e-3


def test_rate_bec_definitional_consistency():
    for N in (1, 7, 64, 999):
        r = rate_bec(N)
        assert r.rate * math.log2(N + 1) == pytest.approx(binomial_entropy(N), rel=1e-14)
        assert r.numerator_bits == binomial_entropy(N)
        assert r.context is RateContext.NUMBER_CONSERVING


def test_rate_indefinite():
    r = rate_indefinite(mc_tilde(3), 3)
    assert r.rate == pytest.approx(total_coherence(mc_tilde(3)) / math.log2(7 * 4), abs=1e-12)
    assert r.context is RateContext.INDEFINITE_NUMBER
    assert rate_indefinite(FockSpaceState.fock((2, 1)), 3).rate == 0
    with pytest.raises(InvalidArgumentsError):
        rate_indefinite(mc_tilde(3), 4)


def test_rate_indefinite_law_matches_dense():
    assert rate_indefinite(phi_law(5), 5).rate == pytest.approx(rate_indefinite(phi(5), 5).rate, abs=1e-12)
    assert rate_indefinite(mc_tilde_law(5), 5).rate == pytest.approx(rate_indefinite(mc_tilde(5), 5).rate,
                                                                     abs=1e-12)


@pytest.mark.parametrize("N", [10, 100, 1000])
def test_phi_beats_mc_tilde(N):
    assert rate_indefinite(phi_law(N), N).rate >= rate_indefinite(mc_tilde_law(N), N).rate


def test_phi_rate_approaches_one():
    assert rate_indefinite(phi_law(1000), 1000).rate >= 0.9
    assert rate_indefinite(phi_law(1e6), 1e6).rate > rate_indefinite(phi_law(1e4), 1e4).rate


def test_pure_rate_argmax_is_interior():
    for N in (8, 12, 20):
        rates = {m: rate_mc_from_pure(psi(math.pi / 4, m, N), N).rate for m in range(N // 2 + 1)}
        best = max(rates, key=rates.get)
        assert best not in (0, N // 2)


def test_pair_correlated_bound():
    assert 0 < pair_correlated_bound(2) < math.inf
    with pytest.raises(InvalidArgumentsError):
        pair_correlated_bound(3)
    assert pair_correlated_bound(10**5) / math.log2(10**5) == pytest.approx(2 / math.pi, rel=0.025)


@pytest.mark.parametrize("N", [1, 2, 3, 10, 50])
def test_phi_exact_form_matches_series(N):
    w, _ = phi_sector_weights(N)
    series = -math.fsum(p * math.log2(p / (k + 1)) for k, p in enumerate(w))
    assert phi_coherence_exact(N) == pytest.approx(series, abs=1e-9)


def test_phi_printed_form_value():
    # term-by-term: 2*2/4*1 + 2/4*1 + 4/4*1 + 3*1 = 5.5
    assert phi_coherence_closed_form(2) == pytest.approx(5.5, abs=1e-15)
    assert phi_coherence_exact(2) == pytest.approx(4.0, abs=1e-15)


@pytest.mark.parametrize("N", [1, 4, 20, 50])
def test_mc_tilde_forms(N):
    assert mc_tilde_coherence(N) == pytest.approx(total_coherence(mc_tilde_law(N)), abs=1e-9)
    d = 2 * N + 1
    assert mc_tilde_coherence_printed(N) - mc_tilde_coherence(N) == pytest.approx(math.log2(d) / d, abs=1e-12)


def test_denominator():
    assert indefinite_denominator_bits(3) == pytest.approx(math.log2(28))


def test_report_dict():
    d = rate_bec(4).to_dict()
    assert set(d) == {"rate", "numerator_bits", "denominator_bits", "context"}
    assert d["context"] == "number_conserving"
    assert np.isfinite(d["rate"])
