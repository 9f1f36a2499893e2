import numpy as np
import pytest
from hypothesis import given, strategies as st

from qkinst.bessel import bessel_k, k0, k0_k1, k1
from qkinst.hk import SeriesError, bessel_sums
from qkinst.suites import bessel_oracle

# 50-digit quadrature of int_0^inf exp(-x cosh t) cosh(nu t) dt
K0_1 = 0.42102443824070833334
K1_1 = 0.60190723019723457474

# direct summation at 30 digits: (|Z|, theta) -> (v, a, b)
SERIES_ORACLE = {
    (1.0, 0.0): (0.000917807437286879032, 0.00098826687527674227909, 0.00098763114624286895055),
    (1.0, np.pi): (-0.00091536502024695305895, -0.00098572907365376250478, -0.00098636224697398923784),
    (0.3, 1.0): (0.06298315170520348535 + 0.12364055647896554491j,
                 0.02374645065599243376 + 0.045573236604711969312j,
                 0.025183588302846399556 + 0.043351431813186952174j),
    (0.05, 2.5): (-0.82358488789938719708 + 0.37638426003187031078j,
                  -0.096101256636430071479 + 0.049909805899477876514j,
                  -0.10611489820006926213 + 0.065384437612081288058j),
}


def test_values_at_one():
    assert k0(1.0) == pytest.approx(K0_1, rel=1e-14)
    assert k1(1.0) == pytest.approx(K1_1, rel=1e-14)


def test_oracle_table_relative_error():
    rows = bessel_oracle()
    assert len(rows) >= 40
    xs = np.array([r[0] for r in rows])
    assert xs.min() <= 1e-3 * (1 + 1e-12) and xs.max() >= 100 * (1 - 1e-12)
    a0, a1 = k0_k1(xs)
    for (x, r0, r1), v0, v1 in zip(rows, a0, a1):
        assert abs(v0 / r0 - 1) < 1e-12, x
        assert abs(v1 / r1 - 1) < 1e-12, x


def test_asymptotics():
    assert k0(50.0) * np.sqrt(2 * 50 / np.pi) * np.exp(50) == pytest.approx(1, abs=1e-2)


def test_underflow_and_domain():
    assert k0(800.0) == 0.0 and k1(800.0) == 0.0
    for bad in (0.0, -1.0):
        with pytest.raises(ValueError):
            k0(bad)
    with pytest.raises(ValueError):
        bessel_k(2, 1.0)


def test_scalar_and_array_agree():
    xs = np.array([0.01, 1.5, 2.0, 7.0])
    v0, v1 = k0_k1(xs)
    for x, a, b in zip(xs, v0, v1):
        assert (a, b) == k0_k1(float(x))


@given(st.floats(1e-3, 600))
def test_wronskian_like_identity(x):
    # K1 = -K0' and the recurrence K2 = K0 + 2 K1/x imply K0 < K1 for x > 0
    a, b = k0_k1(x)
    assert 0 <= a < b or (a == 0 and b == 0)


@pytest.mark.parametrize("key", list(SERIES_ORACLE))
def test_series_against_direct_sum(key):
    absz, th = key
    v, a, b, n, tail = bessel_sums(absz, th)
    ev, ea, eb = SERIES_ORACLE[key]
    for got, want in ((v, ev), (a, ea), (b, eb)):
        assert abs(got - want) <= 1e-13 * abs(want)
    assert tail <= 1e-15 * min(abs(v), abs(a), abs(b))


def test_series_alternating_at_pi():
    v, *_ = bessel_sums(1.0, np.pi)
    assert abs(v.imag) < 1e-18 and v.real < 0


def test_series_large_z_vanishes():
    v, a, b, n, _ = bessel_sums(20.0, 0.3)
    assert abs(v) <= k0(2 * np.pi * 20) * 1.01
    assert n == 1


def test_series_errors():
    with pytest.raises(SeriesError):
        bessel_sums(0.0, 0.0)
    with pytest.raises(SeriesError):
        bessel_sums(1e-4, 0.0, n_max=10)
