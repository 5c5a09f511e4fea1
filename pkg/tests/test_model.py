import numpy as np
import pytest
from hypothesis import given, strategies as st

from fdelab.errors import DimensionTooSmall, ExponentOutOfRange, NonpositiveFloor
from fdelab.model import ModelParams, exponent_windows, validate_params


def test_valid_n3():
    p = validate_params(3, 0.2, 1.0)
    assert p.m_critical == pytest.approx(1 / 3)


def test_m_above_window_rejected():
    with pytest.raises(ExponentOutOfRange):
        validate_params(3, 0.5, 1.0)


def test_n5_accepts_half():
    validate_params(5, 0.5, 1.0)


@pytest.mark.parametrize("n,m,mu0,exc", [
    (2, 0.1, 1.0, DimensionTooSmall),
    (3, 0.0, 1.0, ExponentOutOfRange),
    (3, 1 / 3, 1.0, ExponentOutOfRange),
    (3, -0.1, 1.0, ExponentOutOfRange),
    (3, 0.2, 0.0, NonpositiveFloor),
    (3, 0.2, -2.0, NonpositiveFloor),
])
def test_invalid(n, m, mu0, exc):
    with pytest.raises(exc):
        validate_params(n, m, mu0)


def test_error_cites_bound():
    with pytest.raises(ExponentOutOfRange, match=r"\(n-2\)/n"):
        validate_params(3, 0.4, 1.0)


def test_dataclass_validates_too():
    with pytest.raises(ExponentOutOfRange):
        ModelParams(3, 0.9, 1.0)


def test_windows_n3():
    assert exponent_windows(validate_params(3, 0.2, 1.0)).as_tuple() == pytest.approx((2.5, 3.0, 5.0))


def test_windows_n4():
    assert exponent_windows(validate_params(4, 0.25, 1.0)).as_tuple() == pytest.approx((8 / 3, 4.0, 8.0))


def test_small_m_limit():
    w = exponent_windows(validate_params(3, 1e-9, 1.0))
    assert w.gamma_low == pytest.approx(2.0)
    assert w.gamma_high > 1e8


valid = st.integers(3, 12).flatmap(
    lambda n: st.tuples(st.just(n), st.floats(1e-6, (n - 2) / n, exclude_max=True)))


@given(valid)
def test_windows_ordered(nm):
    n, m = nm
    w = exponent_windows(validate_params(n, m, 1.0))
    assert w.gamma_low < w.gamma_cauchy < w.gamma_high


@given(valid, st.floats(0.01, 0.99))
def test_windows_monotone_in_m(nm, frac):
    n, m = nm
    m2 = m + frac * ((n - 2) / n - m)
    if not m < m2 < (n - 2) / n:
        return
    a = exponent_windows(validate_params(n, m, 1.0))
    b = exponent_windows(validate_params(n, m2, 1.0))
    assert b.gamma_low >= a.gamma_low
    assert b.gamma_high <= a.gamma_high
