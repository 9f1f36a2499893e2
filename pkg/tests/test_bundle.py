import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qkinst.bundle import (
    IN_NPLUS,
    IN_NPRIME,
    OUTSIDE,
    bundle_data,
    connection_eta,
    df_analytic,
    qk_metric_global,
    qk_tensor_ambient,
    region_classify,
    theta_p_forms,
)
from qkinst.cask import GeometryError, TorusPoint, chn_domain, semiflat_forms
from qkinst.chart import QkPoint, embed, slice_from_torus
from qkinst.hk import gradient, hk_point, jacobian_fd
from qkinst.lattice import BpsStructure

BPS1 = BpsStructure([((0, 0, 1, 0), 1), ((0, 0, 1, 1), 1)])
DOM1 = chn_domain(1, c=0.2, K=0.25)
EMPTY = BpsStructure([])


def point(z0=0.7 + 0.3j, X=0.2 - 0.1j):
    return TorusPoint([z0, z0 * X], [0.3, 1.1], [0.7, 2.0])


def slice_point(rho=3.0, sigma=0.4):
    return QkPoint(rho, [0.2 - 0.1j], [0.3, 1.1], [0.7, 2.0], sigma)


@pytest.fixture(scope="module")
def bd():
    return bundle_data(DOM1, BPS1, point(), 0.4)


def test_f_minus_f1_is_norm_of_V(bd):
    mo = bd.moments
    assert mo.f - mo.f1 == pytest.approx(4 * np.pi * bd.V @ bd.g @ bd.V, rel=1e-12)


@settings(deadline=None, max_examples=20)
@given(st.floats(0.4, 2.5), st.floats(0, 2 * np.pi), st.floats(0, 0.6), st.floats(0, 2 * np.pi))
def test_f_minus_f1_property(r, ph, x, ph2):
    b = bundle_data(DOM1, BPS1, point(r * np.exp(1j * ph), x * np.exp(1j * ph2)))
    lhs = b.moments.f - b.moments.f1
    assert abs(lhs - 4 * np.pi * b.V @ b.g @ b.V) <= 1e-9 * abs(lhs)


def test_tree_level_moments():
    mo = bundle_data(DOM1, EMPTY, point()).moments
    r2 = abs(0.7 + 0.3j) ** 2 * (1 - abs(0.2 - 0.1j) ** 2)
    assert mo.r2 == pytest.approx(r2)
    assert mo.f == pytest.approx(2 * np.pi * r2 - 0.2)
    assert mo.f1 == pytest.approx(-2 * np.pi * r2 - 0.2)
    assert mo.f_inst == 0 and mo.f1_inst == 0


def test_region_examples():
    label, _ = region_classify(bundle_data(DOM1, EMPTY, point()))
    assert label == IN_NPLUS
    # f = 0 when 2 pi r^2 = c
    z0 = np.sqrt(1.0 / (2 * np.pi))
    label, (f, _, _) = region_classify(bundle_data(chn_domain(0, c=1.0), EMPTY, TorusPoint([z0], [0.1], [0.2])))
    assert label == OUTSIDE and abs(f) < 1e-10
    # c < 0 with 2 pi r^2 < -c: f < 0, f1 > 0
    label, (f, f1, _) = region_classify(bundle_data(chn_domain(0, c=-2.0), EMPTY, TorusPoint([0.3], [0.1], [0.2])))
    assert label == IN_NPRIME and f > 0 and f1 > 0


def test_outside_rejected_by_ambient_tensor():
    z0 = np.sqrt(1.0 / (2 * np.pi))
    b = bundle_data(chn_domain(0, c=1.0), EMPTY, TorusPoint([z0], [0.1], [0.2]))
    with pytest.raises(GeometryError):
        qk_tensor_ambient(b)


def test_dsigma_coefficient(bd):
    assert bd.Theta()[-1] == 1.0
    assert connection_eta(bd)[-1] == 1.0
    for t in theta_p_forms(bd)[:1] + theta_p_forms(bd)[2:]:
        assert t[-1] == 0.0


def test_df_matches_finite_differences(bd):
    q = bd.hp.p.to_real()
    fd = gradient(lambda x: bundle_data(DOM1, BPS1, TorusPoint.from_real(x)).moments.f, q, 1e-4)
    assert np.abs(fd - df_analytic(bd)).max() < 1e-6


def test_instanton_one_form_sum_is_real(bd):
    acc = sum(t.omega * t.eta for t in bd.hp.terms)
    assert np.abs(acc.imag).max() < 1e-15


def test_d_of_instanton_one_form(bd):
    # d(sum Omega eta_gamma) = omega_3 - omega_3^sf
    q = bd.hp.p.to_real()
    J = jacobian_fd(lambda x: bundle_data(DOM1, BPS1, TorusPoint.from_real(x)).eta_sum, q, 1e-4)
    d = J - J.T
    target = bd.omega[2] - semiflat_forms(DOM1, bd.hp.p)[2]
    assert np.abs(target).max() > 1e-4
    assert np.abs(d - target).max() < 1e-6


def test_large_central_charge_decouples():
    b = bundle_data(chn_domain(1, K=0.25), BpsStructure([((0, 0, 1, 0), 1)]), TorusPoint([20.0, 1.0], [0, 0], [0, 0]))
    assert np.abs(b.eta_sum).max() < 1e-20
    assert abs(b.moments.f_inst) < 1e-20


def test_sigma_is_isometry_of_global_metric():
    g0 = qk_metric_global(DOM1, BPS1, slice_point(sigma=0.4)).matrix
    g1 = qk_metric_global(DOM1, BPS1, slice_point(sigma=1.7)).matrix
    assert np.array_equal(g0, g1)


@pytest.mark.parametrize("bps", [EMPTY, BPS1])
def test_no_drho_dsigma_cross_term(bps):
    g = qk_metric_global(DOM1, bps, slice_point()).matrix
    assert abs(g[0, -1]) < 1e-15 * np.abs(g).max()


def test_global_metric_positive_in_nplus():
    g = qk_metric_global(DOM1, BPS1, slice_point()).matrix
    assert np.allclose(g, g.T, atol=1e-14)
    assert np.linalg.eigvalsh(g).min() > 0


def test_restriction_roundtrip():
    q = slice_point()
    y = embed(DOM1, q)
    back = slice_from_torus(DOM1, y)
    assert np.allclose(back.to_real(), q.to_real(), atol=1e-13)
    # the embedded point carries Arg z^0 = 0
    assert y[2] == 0.0 and y[0] > 0
    y[2] = 0.1
    with pytest.raises(GeometryError):
        slice_from_torus(DOM1, y)


def test_same_hk_point_reused():
    hp = hk_point(DOM1, BPS1, point())
    a = bundle_data(DOM1, BPS1, point(), hp=hp)
    b = bundle_data(DOM1, BPS1, point())
    assert np.array_equal(a.g, b.g) and a.moments == b.moments
