from __future__ import annotations

from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from softrod.bdf import BdfScheme, HistoryBuffer, bdf_time_derivative
from softrod.errors import InsufficientHistory

DT = 1.0 / 30.0
alphas = st.floats(-0.5, 0.0)


def _history(samples, rate=None):
    """Buffer from samples given oldest first."""
    h = HistoryBuffer(max_depth=3)
    for y in samples:
        h.push(y)
    h.rate = None if rate is None else np.asarray(rate, dtype=float)
    return h


def test_coefficients_examples():
    b1 = BdfScheme("bdf1", DT)
    assert b1.c0 == pytest.approx(30.0) and b1.history_weights == pytest.approx((-30.0,))
    b3 = BdfScheme("bdf3", DT)
    assert b3.c0 == pytest.approx(11.0 / (6.0 * DT))
    a = -0.2
    ba = BdfScheme("bdf-alpha", DT, a)
    assert ba.c0 == pytest.approx((1.5 + a) / (DT * (1 + a)))
    assert ba.history_weights == pytest.approx((-2.0 / DT, (0.5 + a) / (DT * (1 + a))))
    assert ba.d1 == pytest.approx(a / (1 + a))
    assert BdfScheme("bdf1", DT).d1 == 0.0 and not BdfScheme("bdf3", DT).uses_rate


@pytest.mark.parametrize("kind", ["bdf1", "bdf2", "bdf3"])
def test_bdf_consistency_conditions_exact(kind):
    # the same weights in exact rational arithmetic
    w = {"bdf1": [1, -1], "bdf2": [Fraction(3, 2), -2, Fraction(1, 2)],
         "bdf3": [Fraction(11, 6), -3, Fraction(3, 2), Fraction(-1, 3)]}[kind]
    order = len(w) - 1
    assert sum(w) == 0
    # exact on t^j for j <= order: sum_k c_k (-k)^j = j * 0^(j-1)
    for j in range(1, order + 1):
        assert sum(c * Fraction(-k) ** j for k, c in enumerate(w)) == (1 if j == 1 else 0)
    s = BdfScheme(kind, DT)
    assert [s.c0 * DT, *[c * DT for c in s.history_weights]] == pytest.approx([float(c) for c in w], rel=1e-14)


@given(alphas)
def test_bdf_alpha_weights_sum_to_zero_and_first_moment(a):
    s = BdfScheme("bdf-alpha", DT, a)
    c = [s.c0, *s.history_weights]
    assert abs(sum(c)) * DT < 1e-13
    # consistency with the rate term: sum_k (-k) c_k dt = 1 - d1
    assert sum(-k * ck for k, ck in enumerate(c)) * DT == pytest.approx(1.0 - s.d1, rel=1e-13)


def test_alpha_endpoints():
    tr = BdfScheme("trapezoidal", DT)
    ta = BdfScheme("bdf-alpha", DT, -0.5)
    assert tr.c0 == ta.c0 and tr.history_weights == ta.history_weights and tr.d1 == ta.d1
    b2 = BdfScheme("bdf2", DT)
    a0 = BdfScheme("bdf-alpha", DT, 0.0)
    assert a0.c0 == pytest.approx(b2.c0, rel=1e-15) and a0.history_weights == pytest.approx(b2.history_weights)
    assert a0.d1 == 0.0


@given(st.lists(st.floats(-1e3, 1e3), min_size=4, max_size=4), st.floats(-1e3, 1e3))
def test_alpha_zero_equals_bdf2_on_random_histories(vals, rate):
    y_now, *past = vals
    h = _history(past, rate=[rate])
    a = bdf_time_derivative(BdfScheme("bdf-alpha", DT, 0.0), [y_now], h)
    b = bdf_time_derivative(BdfScheme("bdf2", DT), [y_now], h)
    assert a == pytest.approx(b, rel=1e-14, abs=1e-14 * max(1.0, *map(abs, vals)) / DT)


def test_bdf1_constant_signal():
    h = _history([np.full(5, 2.5)])
    assert np.array_equal(bdf_time_derivative(BdfScheme("bdf1", DT), np.full(5, 2.5), h), np.zeros(5))


@pytest.mark.parametrize("kind,deg", [("bdf1", 1), ("bdf2", 2), ("bdf3", 3)])
def test_polynomial_exactness(kind, deg):
    t = 1.3
    y = lambda tt: tt**deg - 0.4 * tt + 2.0
    dy = deg * t ** (deg - 1) - 0.4
    h = _history([[y(t - k * DT)] for k in (3, 2, 1)])
    assert bdf_time_derivative(BdfScheme(kind, DT), [y(t)], h)[0] == pytest.approx(dy, abs=1e-10)


@given(alphas, st.floats(-2.0, 2.0), st.floats(-2.0, 2.0))
def test_bdf_alpha_exact_on_quadratics_with_exact_rate(a, c1, c2):
    t = 0.7
    y = lambda tt: c2 * tt * tt + c1 * tt + 1.0
    dy = lambda tt: 2 * c2 * tt + c1
    h = _history([[y(t - 2 * DT)], [y(t - DT)]], rate=[dy(t - DT)])
    assert bdf_time_derivative(BdfScheme("bdf-alpha", DT, a), [y(t)], h)[0] == pytest.approx(dy(t), abs=1e-10)


def test_insufficient_history():
    with pytest.raises(InsufficientHistory):
        bdf_time_derivative(BdfScheme("bdf2", DT), [0.0], _history([[1.0]]))
    with pytest.raises(InsufficientHistory):
        bdf_time_derivative(BdfScheme("bdf-alpha", DT, -0.2), [0.0], _history([[1.0], [1.0]]))


def test_buffer_keeps_most_recent_first():
    h = HistoryBuffer(max_depth=2)
    for v in range(4):
        h.push([float(v)])
    assert len(h) == 2 and [s[0] for s in h.samples] == [3.0, 2.0]


def test_startup_uses_bdf1():
    s = BdfScheme("bdf3", DT)
    assert s.at_step(1).kind == "bdf1" and s.at_step(2).kind == "bdf1" and s.at_step(3) is s
    assert BdfScheme("bdf-alpha", DT, -0.2).at_step(1).kind == "bdf1"
    assert BdfScheme("bdf1", DT).at_step(1).kind == "bdf1"


def test_validation():
    with pytest.raises(ValueError):
        BdfScheme("bdf4", DT)
    with pytest.raises(ValueError):
        BdfScheme("bdf-alpha", DT, 0.1)
    with pytest.raises(ValueError):
        BdfScheme("bdf1", 0.0)
