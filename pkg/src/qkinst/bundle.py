"""Hyperholomorphic circle bundle and the HK/QK correspondence.

Everything is computed in the ambient chart ``(x, u, theta~, theta, sigma)``
of the circle bundle ``P`` over the torus bundle, directly from the HK data
(metric, Kähler forms, rotating field). The QK metric on the slice
``{Arg z^0 = 0}`` is then obtained by pulling back along the embedding;
no coordinate simplifications are used, which makes this path an
independent check on :mod:`qkinst.coord`.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .cask import CaskDomain, GeometryError, TorusPoint, cask_potential_r2, hermitian_form
from .chart import QkPoint, slice_geometry
from .hk import (
    DEFAULT_TOL,
    HkPoint,
    MetricSample,
    hk_metric,
    hk_point,
    kahler_forms,
    rotating_vector,
)
from .lattice import BpsStructure

__all__ = [
    "MomentData",
    "BundleData",
    "bundle_data",
    "eta_gamma_inst",
    "moment_data",
    "df_analytic",
    "qk_tensor_ambient",
    "region_classify",
    "connection_eta",
    "theta_p_forms",
    "qk_metric_global",
    "OUTSIDE",
    "IN_NPRIME",
    "IN_NPLUS",
    "VANISH_THRESHOLD",
]

OUTSIDE = "outside_N'"
IN_NPRIME = "in_N'"
IN_NPLUS = "in_N'+"
VANISH_THRESHOLD = 1e-10


@dataclass(frozen=True)
class MomentData:
    f: float
    f1: float
    f_inst: float
    f1_inst: float
    r2: float
    c: float

    @property
    def f_plus_inst(self) -> float:
        return 0.5 * (self.f_inst + self.f1_inst)

    @property
    def f_minus_inst(self) -> float:
        return 0.5 * (self.f_inst - self.f1_inst)


@dataclass
class BundleData:
    """HK data plus the circle-bundle quantities at one point of ``P``."""

    hp: HkPoint
    sigma: float
    g: np.ndarray
    omega: tuple
    V: np.ndarray
    eta_sum: np.ndarray  # sum Omega eta_gamma (4m)
    eta_inst: np.ndarray  # sum Omega eta_gamma - iota_V (g_N - g_M) (4m)
    half_form: np.ndarray  # (i/4)(dbar - d) r^2 = 1/2 Im(N zbar . dz)
    moments: MomentData

    @property
    def m(self) -> int:
        return self.hp.m

    def pad(self, form) -> np.ndarray:
        """Extend a 1-form on N by a zero ``dsigma`` component."""
        return np.concatenate([np.asarray(form, dtype=float), [0.0]])

    def Theta(self) -> np.ndarray:
        m = self.m
        p = self.hp.p
        out = np.zeros(4 * m + 1)
        out[-1] = 1.0
        # <theta, dtheta> = theta~_i dtheta^i - theta^i dtheta~_i
        out[2 * m:3 * m] = p.theta / (4 * np.pi)
        out[3 * m:4 * m] = -p.theta_tilde / (4 * np.pi)
        return out

    def iota_V(self, tensor) -> np.ndarray:
        return self.V @ tensor


def eta_gamma_inst(hp: HkPoint, gamma) -> np.ndarray:
    """Real 1-form ``eta_gamma + eta_{-gamma}`` is real; this returns ``eta_gamma`` (complex)."""
    g = np.asarray(gamma, dtype=float)
    for t in hp.terms:
        if np.array_equal(t.charge, g):
            return t.eta
    raise GeometryError(f"charge {tuple(gamma)} is not in the BPS support")


def _eta_sum(hp: HkPoint) -> np.ndarray:
    m = hp.m
    acc = np.zeros(4 * m, dtype=complex)
    for t in hp.terms:
        acc += t.omega * t.eta
    return acc.real.copy()


def bundle_data(dom: CaskDomain, bps: BpsStructure, p: TorusPoint, sigma: float = 0.0,
                tol: float = DEFAULT_TOL, hp: Optional[HkPoint] = None) -> BundleData:
    if hp is None:
        hp = hk_point(dom, bps, p, tol)
    g = hk_metric(hp).matrix
    om = kahler_forms(hp)
    q = p.to_real()
    V = rotating_vector(hp.m, q)
    eta_sum = _eta_sum(hp)
    gM = hermitian_form(hp.dz, hp.N)
    eta_inst = eta_sum - V @ (g - gM)
    r2 = cask_potential_r2(dom, hp.z)
    c = dom.c
    f_inst = 4 * np.pi * float(V @ eta_sum)
    f1_inst = 4 * np.pi * float(V @ eta_inst)
    mom = MomentData(2 * np.pi * r2 - c + f_inst, -2 * np.pi * r2 - c + f1_inst, f_inst, f1_inst, r2, c)
    half = 0.5 * np.imag((hp.N @ hp.z.conj()) @ hp.dz)
    return BundleData(hp, float(sigma), g, om, V, eta_sum, eta_inst, half, mom)


def moment_data(dom: CaskDomain, bps: BpsStructure, p: TorusPoint, tol: float = DEFAULT_TOL) -> MomentData:
    return bundle_data(dom, bps, p, tol=tol).moments


def df_analytic(bd: BundleData) -> np.ndarray:
    """``df = -4 pi iota_V omega_3`` (1-form on N)."""
    return -4 * np.pi * bd.iota_V(bd.omega[2])


def region_classify(bd: BundleData, threshold: float = VANISH_THRESHOLD):
    """Return ``(label, (f, f1, g_N(X, X)))`` with ``X = 2V``."""
    mo = bd.moments
    gxx = 4 * float(bd.V @ bd.g @ bd.V)
    vals = (mo.f, mo.f1, gxx)
    if min(abs(v) for v in vals) <= threshold:
        return OUTSIDE, vals
    if mo.f > 0 and mo.f1 < 0:
        return IN_NPLUS, vals
    return IN_NPRIME, vals


def connection_eta(bd: BundleData) -> np.ndarray:
    """``eta = Theta + 2pi((i/4)(dbar - d)r^2 + sum Omega eta_gamma - iota_V g_N)``."""
    inner = bd.half_form + bd.eta_sum - bd.iota_V(bd.g)
    return bd.Theta() + 2 * np.pi * bd.pad(inner)


def theta_p_forms(bd: BundleData):
    """``(theta_0, theta_1, theta_2, theta_3)`` as 1-forms on ``P``."""
    eta = connection_eta(bd)
    t0 = bd.pad(-0.5 * df_analytic(bd))
    t1 = eta + 2 * np.pi * bd.pad(bd.iota_V(bd.g))
    t2 = 2 * np.pi * bd.pad(bd.iota_V(bd.omega[1]))
    t3 = -2 * np.pi * bd.pad(bd.iota_V(bd.omega[0]))
    return t0, t1, t2, t3


def qk_tensor_ambient(bd: BundleData, check: bool = True) -> np.ndarray:
    """``-(1/f)(g_P - (2/f) sum theta_i^2)`` on ``P`` before restriction."""
    mo = bd.moments
    if check:
        label, vals = region_classify(bd)
        if label == OUTSIDE:
            raise GeometryError(f"point is outside N' (f, f1, g(X,X)) = {vals}")
    eta = connection_eta(bd)
    gP = (2.0 / mo.f1) * np.outer(eta, eta)
    gP[:-1, :-1] += 2 * np.pi * bd.g
    thetas = theta_p_forms(bd)
    gt = gP - (2.0 / mo.f) * sum(np.outer(t, t) for t in thetas)
    return -gt / mo.f


def qk_metric_global(dom: CaskDomain, bps: BpsStructure, q: QkPoint, tol: float = DEFAULT_TOL) -> MetricSample:
    """QK metric on the slice from the HK/QK formula, pulled back to the slice chart."""
    sg = slice_geometry(dom, q)
    bd = bundle_data(dom, bps, sg.torus_point(), q.sigma, tol)
    G = qk_tensor_ambient(bd)
    return MetricSample(sg.jac.T @ G @ sg.jac, "rho,ReX,ImX,theta~,theta,sigma")
