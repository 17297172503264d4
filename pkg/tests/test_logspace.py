import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fockcoh.logspace import (
    LogWeight,
    ProbabilityTable,
    log_binomial,
    log_factorial,
    log_multinomial,
    signed_logsumexp,
    to_bits,
)

finite = st.floats(-1e6, 1e6, allow_nan=False).filter(lambda x: x == 0 or abs(x) > 1e-6)


@settings(max_examples=200)
@given(finite, finite)
def test_arithmetic_matches_floats(a, b):
    x, y = LogWeight.from_value(a), LogWeight.from_value(b)
    assert (x * y).value == pytest.approx(a * b, rel=1e-12)
    assert (x + y).value == pytest.approx(a + b, rel=1e-9, abs=1e-9 * (abs(a) + abs(b)))
    assert (x - y).value == pytest.approx(a - b, rel=1e-9, abs=1e-9 * (abs(a) + abs(b)))
    if b != 0:
        assert (x / y).value == pytest.approx(a / b, rel=1e-12)
    assert (x < y) == (a < b)


def test_exact_cancellation_is_zero():
    x = LogWeight.from_value(3.5)
    assert (x - x).sign == 0
    assert (x + (-x)).value == 0.0


def test_large_factorials_do_not_overflow():
    big = LogWeight.from_int(math.factorial(400))
    assert big.log_magnitude == pytest.approx(log_factorial(400), rel=1e-14)
    ratio = big / LogWeight.from_int(math.factorial(399))
    assert ratio.value == pytest.approx(400, rel=1e-12)


@pytest.mark.parametrize("n", [0, 1, 7, 60, 300])
def test_log_binomial_exact(n):
    for k in range(n + 1):
        assert log_binomial(n, k) == pytest.approx(math.log(math.comb(n, k)), abs=1e-10)
    assert log_binomial(n, n + 1) == -math.inf


def test_log_multinomial_exact():
    counts = (3, 0, 5, 2)
    exact = Fraction(math.factorial(10), math.prod(math.factorial(c) for c in counts))
    assert log_multinomial(counts) == pytest.approx(math.log(exact), abs=1e-12)


def test_signed_logsumexp():
    vals = [2.0, -5.0, 1e-3, 3.0]
    out = signed_logsumexp([math.log(abs(v)) for v in vals], [np.sign(v) for v in vals])
    assert out.value == pytest.approx(math.fsum(vals), rel=1e-13)


def test_probability_table():
    p = ProbabilityTable.from_mapping({"a": 0.25, "b": 0.75, "c": 0.0})
    assert p.labels == ("a", "b")
    assert p["b"] == pytest.approx(0.75)
    assert p.total() == pytest.approx(1.0)
    q = ProbabilityTable.from_probabilities(["x", "y"], [0.1, 0.3]).normalized()
    assert q.as_dict() == pytest.approx({"x": 0.25, "y": 0.75})
    with pytest.raises(ValueError):
        ProbabilityTable.from_probabilities(["x"], [2.0])
    assert p.relabel(str.upper).as_dict() == pytest.approx({"A": 0.25, "B": 0.75})


def test_to_bits():
    assert to_bits(math.log(8)) == pytest.approx(3.0)
