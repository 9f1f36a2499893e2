import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qkinst.cask import GeometryError, TorusPoint, chn_domain, semiflat_forms, tau_matrix
from qkinst.hk import (
    SeriesError,
    compatibility_check,
    complex_structures,
    exterior_derivative_residual,
    flow,
    hk_metric,
    hk_point,
    instanton_series,
    kahler_forms,
    kahler_forms_direct,
    metric_from_forms,
    pullback,
    rotating_flow,
    rotating_vector,
)
from qkinst.lattice import BpsStructure

BPS1 = BpsStructure([((0, 0, 1, 0), 1), ((0, 0, 1, 1), 1)])
DOM1 = chn_domain(1, c=0.2, K=0.25)


def point(z0=0.7 + 0.3j, X=0.2 - 0.1j, tt=(0.3, 1.1), th=(0.7, 2.0)):
    return TorusPoint([z0, z0 * X], tt, th)


@pytest.fixture(scope="module")
def hp():
    return hk_point(DOM1, BPS1, point())


def test_instanton_series_symmetry_and_errors():
    p = point()
    s = instanton_series(DOM1, BPS1, (0, 0, 1, 0), p)
    sm = instanton_series(DOM1, BPS1, (0, 0, -1, 0), p)
    assert abs(np.conj(s.v) - sm.v) < 1e-15
    assert abs(s.v_inst - s.v / (2 * np.pi)) == 0
    with pytest.raises(SeriesError):
        instanton_series(DOM1, BPS1, (0, 0, 0, 1), p)


def test_M_real_symmetric(hp):
    # terms carry both gamma and -gamma, so the complex sum is already real
    Mc = hp.N.astype(complex)
    for t in hp.terms:
        Mc = Mc + t.omega * t.V * np.outer(t.n_low, t.n_low)
    assert np.abs(Mc.imag).max() < 1e-13
    assert np.allclose(hp.M, hp.M.T)
    assert np.abs(Mc.real - hp.M).max() < 1e-13


def test_compatibility_examples():
    dom = chn_domain(1)
    ok, smin = compatibility_check(dom, BpsStructure([]), point())
    assert ok and smin == pytest.approx(1.0)
    ok, _ = compatibility_check(chn_domain(0, K=5), BpsStructure([((0, 1), 1)]), TorusPoint([6.0], [0.1], [0.2]))
    assert ok
    # a huge index at theta = pi flips the sign of M_00 once |z^0| is small enough
    rs = np.linspace(0.1, 1.5, 141)
    m00 = [_m00(r) for r in rs]
    flip = np.nonzero(np.diff(np.sign(m00)))[0]
    assert flip.size == 1
    r_bad = rs[flip[0]]
    assert _m00(r_bad) < 0
    ok, _ = compatibility_check(chn_domain(0), BIG, TorusPoint([r_bad], [0.0], [np.pi]), threshold=0.5)
    assert not ok
    ok, _ = compatibility_check(chn_domain(0), BIG, TorusPoint([2.0], [0.0], [np.pi]))
    assert ok


BIG = BpsStructure([((0, 1), 200)])


def _m00(r):
    return hk_point(chn_domain(0), BIG, TorusPoint([r], [0.0], [np.pi])).M[0, 0]


def test_forms_two_routes_agree(hp):
    for a, b in zip(kahler_forms(hp), kahler_forms_direct(hp)):
        assert np.abs(a - b).max() < 1e-13


def test_block_identities(hp):
    o1, o2, o3 = kahler_forms(hp)
    m = hp.m
    tt, th, x, u = slice(2 * m, 3 * m), slice(3 * m, 4 * m), slice(0, m), slice(m, 2 * m)
    assert np.allclose(o1[tt, x], -np.eye(m) / (2 * np.pi), atol=1e-14)
    assert np.allclose(o1[th, u], -hp.M / (2 * np.pi), atol=1e-14)
    assert np.allclose(o3[tt, th], -np.eye(m) / (4 * np.pi ** 2), atol=1e-14)


@settings(deadline=None, max_examples=25)
@given(st.floats(0.4, 3), st.floats(0, 2 * np.pi), st.floats(0, 0.7), st.floats(0, 2 * np.pi),
       st.lists(st.floats(0, 2 * np.pi), min_size=4, max_size=4))
def test_quaternion_algebra(r, ph, x, ph2, ang):
    p = point(r * np.exp(1j * ph), x * np.exp(1j * ph2), ang[:2], ang[2:])
    hp = hk_point(DOM1, BPS1, p)
    forms = kahler_forms(hp)
    I = complex_structures(forms)
    eye = np.eye(8)
    g = hk_metric(hp).matrix
    for a in range(3):
        assert np.abs(I[a] @ I[a] + eye).max() < 1e-9
        assert np.abs(I[a] @ I[(a + 1) % 3] - I[(a + 2) % 3]).max() < 1e-9
        assert np.abs(g - metric_from_forms(forms[a], I[a])).max() < 1e-9
        # omega_a(u, v) = g(I_a u, v)
        assert np.abs(forms[a] - I[a].T @ g).max() < 1e-9
    assert np.abs(g - g.T).max() < 1e-10


def test_i3_complex_chart_n0():
    hp0 = hk_point(chn_domain(0), BpsStructure([]), TorusPoint([1.3 + 0.4j], [0.2], [0.9]))
    I3 = complex_structures(kahler_forms(hp0))[2]
    assert np.abs(hp0.dz @ I3 - 1j * hp0.dz).max() < 1e-12
    assert np.abs(hp0.Y @ I3 - 1j * hp0.Y).max() < 1e-12


def test_hk_metric_free_example():
    g = hk_metric(hk_point(chn_domain(0), BpsStructure([]), TorusPoint([1.0], [0.0], [0.0]))).matrix
    assert g[0, 0] == pytest.approx(1.0)


def test_signature_large_z0():
    for n in (0, 1, 2):
        dom = chn_domain(n, K=0.25)
        bps = BpsStructure([(tuple([0] * (n + 1) + [1] + [0] * n), 1)])
        p = TorusPoint(0.9 * np.concatenate([[1.0], 0.2 * np.ones(n)]), np.full(n + 1, 0.4), np.full(n + 1, 1.3))
        assert hk_metric(hk_point(dom, bps, p)).signature() == (4, 4 * n)


def test_omega_zero_degeneration():
    p = point()
    hp0 = hk_point(DOM1, BpsStructure([]), p)
    for a, b in zip(kahler_forms(hp0), semiflat_forms(DOM1, p)):
        assert np.abs(a - b).max() < 1e-13


def test_rotating_vector_examples():
    V = rotating_vector(2, TorusPoint([1.0, 0.0], [0.5, 0.5], [1.0, 1.0]).to_real())
    expected = np.zeros(8)
    expected[2] = 1.0
    assert np.array_equal(V, expected)
    V = rotating_vector(2, point().to_real())
    assert np.all(V[4:] == 0)


def test_lie_derivative_of_central_charge():
    # Z_gamma(Phi_t p) = e^{it} Z_gamma(p)
    q = point().to_real()
    t = 0.05
    q1, _ = rotating_flow(2, q, t)
    z0 = q[:2] + 1j * q[2:4]
    z1 = q1[:2] + 1j * q1[2:4]
    assert np.abs(z1 - np.exp(1j * t) * z0).max() < 1e-12


def test_rotating_action_pullback(hp):
    t = 1e-2
    q = hp.p.to_real()
    q1, J = rotating_flow(2, q, t)
    hp1 = hk_point(DOM1, BPS1, TorusPoint.from_real(q1))
    f0, f1 = kahler_forms(hp), kahler_forms(hp1)
    hol = pullback(f1[0] + 1j * f1[1], J) - np.exp(1j * t) * (f0[0] + 1j * f0[1])
    assert np.abs(hol).max() < 1e-6 * t
    assert np.abs(pullback(f1[2], J) - f0[2]).max() < 1e-6 * t
    assert np.abs(pullback(hk_metric(hp1).matrix, J) - hk_metric(hp).matrix).max() < 1e-6 * t


def test_flow_linear_field_exact():
    A = np.array([[0.0, -1.0], [1.0, 0.0]])
    q1, J = flow(lambda q: A @ q, lambda q: A, np.array([1.0, 0.0]), np.pi / 2, steps=64)
    assert np.allclose(q1, [0.0, 1.0], atol=1e-8)
    assert np.allclose(J, [[0, -1], [1, 0]], atol=1e-8)


def test_closedness_and_negative_control():
    p = point(z0=0.4 + 0.1j)
    q = p.to_real()

    def field(x, drop=False):
        return np.array(kahler_forms(hk_point(DOM1, BPS1, TorusPoint.from_real(x), drop_a=drop)))

    assert exterior_derivative_residual(field, q) < 1e-6
    assert exterior_derivative_residual(lambda x: field(x, True), q) > 1e-3


def test_exterior_derivative_constant_is_zero():
    w = np.array([[0, 1.0, 2.0], [-1.0, 0, 3.0], [-2.0, -3.0, 0]])
    assert exterior_derivative_residual(lambda x: w, np.zeros(3)) == 0.0
    # d(x0 dx1 ^ dx2) = dx0 ^ dx1 ^ dx2 is not zero
    def field(x):
        f = np.zeros((3, 3))
        f[1, 2], f[2, 1] = x[0], -x[0]
        return f
    assert exterior_derivative_residual(field, np.zeros(3)) == pytest.approx(1.0)


def test_support_outside_gamma_block_rejected():
    with pytest.raises(GeometryError):
        hk_point(DOM1, BpsStructure([((1, 0, 0, 0), 1)]), point())


def test_singular_M_raises():
    lo, hi = 0.5, 0.8
    assert _m00(lo) < 0 < _m00(hi)
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        lo, hi = (mid, hi) if _m00(mid) < 0 else (lo, mid)
    hp = hk_point(chn_domain(0), BIG, TorusPoint([lo], [0.0], [np.pi]))
    assert abs(hp.M[0, 0]) < 1e-12
    with pytest.raises(GeometryError):
        hp.Minv
