"""Closed-form metrics in the slice chart ``(rho, X, theta~, theta, sigma)``.

``fs_metric`` is the one-loop deformed Ferrara-Sabharwal metric.
``qk_metric_coord`` is its instanton deformation written line by line in
terms of the restricted ingredient forms (``df^inst``, ``W^inst``,
``eta_±^inst``), all evaluated from Bessel sums at
``|Z_gamma| = sqrt((rho+c)/2pi) e^{K/2} |X_gamma|``. Nothing here calls the
hyperkähler layer, so agreement with :func:`qkinst.bundle.qk_metric_global`
is a genuine cross-check.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cask import CaskDomain, GeometryError, hermitian_form, tau_matrix
from .chart import QkPoint, SliceGeometry, heisenberg_action, heisenberg_jacobian, slice_geometry
from .hk import DEFAULT_NMAX, DEFAULT_TOL, MetricSample, bessel_sums
from .lattice import BpsStructure

__all__ = [
    "IngredientForms",
    "fs_metric",
    "ingredient_forms",
    "qk_metric_coord",
    "qk_lines",
    "heisenberg_action",
    "isometry_residual",
    "COND_LIMIT",
]

COND_LIMIT = 1e12
FRAME = "rho,ReX,ImX,theta~,theta,sigma"


def _sq(a) -> np.ndarray:
    return np.outer(a, a)


def _theta_connection(sg: SliceGeometry) -> np.ndarray:
    """``dsigma - <theta, dtheta>/4pi - (c/4) d^c K``."""
    q = sg.q
    dtt, dth = sg.dtheta()
    out = sg.dsigma() - (q.theta_tilde @ dth - q.theta @ dtt) / (4 * np.pi)
    return out - 0.25 * sg.c * sg.dcK()


def _W(dom: CaskDomain, sg: SliceGeometry) -> np.ndarray:
    dtt, dth = sg.dtheta()
    tau = tau_matrix(dom, sg.z, check=False)
    return dtt - tau @ dth


def fs_metric(dom: CaskDomain, q: QkPoint) -> MetricSample:
    """One-loop deformed Ferrara-Sabharwal metric (defined for ``rho > max(0, -2c)``)."""
    c, rho = dom.c, q.rho
    if not rho > max(0.0, -2 * c):
        raise GeometryError(f"rho = {rho} outside the domain rho > max(0, -2c) of the FS metric")
    sg = slice_geometry(dom, q)
    eK = np.exp(sg.K)
    g = (rho + c) / rho * hermitian_form(sg.dX(), sg.hess) if dom.n else np.zeros((sg.dim, sg.dim))
    g = g + (rho + 2 * c) / (4 * (rho + c) * rho ** 2) * _sq(sg.drho())
    g = g + 4 * (rho + c) / (rho ** 2 * (rho + 2 * c)) * _sq(_theta_connection(sg))
    N = tau_matrix(dom, sg.z, check=False).imag
    Xf = np.concatenate([[1.0], q.X])
    H = np.linalg.inv(N) - 2 * (rho + c) * eK / rho * np.outer(Xf, Xf.conj())
    g = g - hermitian_form(_W(dom, sg), H) / (2 * np.pi * rho)
    return MetricSample(g, FRAME)


@dataclass
class IngredientForms:
    """Restricted instanton 1-forms in the slice chart (length ``4m``)."""

    df_inst: np.ndarray
    w_inst: np.ndarray  # complex, one row per i
    eta_plus_inst: np.ndarray
    eta_minus_inst: np.ndarray
    eta_inst: np.ndarray
    eta_sum: np.ndarray
    f_inst: float
    f1_inst: float
    M: np.ndarray
    terms: list

    @property
    def f_plus_inst(self) -> float:
        return 0.5 * (self.f_inst + self.f1_inst)

    @property
    def f_minus_inst(self) -> float:
        return 0.5 * (self.f_inst - self.f1_inst)


@dataclass
class _SliceTerm:
    omega: int
    n_low: np.ndarray
    Xg: complex
    D: np.ndarray  # dX_gamma + X_gamma (drho/2(rho+c) + dK/2)
    dlog: np.ndarray  # dX/X - dXbar/Xbar
    dtheta: np.ndarray
    v: complex
    a: complex
    b: complex

    @property
    def V(self) -> complex:
        return self.v / (2 * np.pi)


def _slice_terms(dom, bps, sg: SliceGeometry, tol, n_max):
    m = dom.m
    dXf = sg.dX_full()
    Xf = np.concatenate([[1.0], sg.q.X])
    dtt, dth = sg.dtheta()
    dl = sg.dlog_z0()
    out = []
    for charge, om in bps.half_support():
        g = np.asarray(charge, dtype=float)
        if np.any(g[:m]):
            raise GeometryError("support is not in the gamma^i block; normalize the frame first")
        lo = g[m:]
        Xg = complex(lo @ Xf)
        if Xg == 0:
            raise GeometryError(f"X_gamma vanishes for support charge {charge}")
        dXg = lo @ dXf
        D = dXg + Xg * dl
        q = dXg / Xg
        absz = sg.s * abs(Xg)
        th = float(lo @ sg.q.theta)
        v, a, b, _, _ = bessel_sums(absz, th, tol, n_max)
        dtheta = lo @ dth
        out.append(_SliceTerm(om, lo, Xg, D, q - q.conj(), dtheta, v, a, b))
        out.append(_SliceTerm(om, -lo, -Xg, -D, q - q.conj(), -dtheta, np.conj(v), np.conj(a), np.conj(b)))
    return out


def ingredient_forms(dom: CaskDomain, bps: BpsStructure, q: QkPoint,
                     tol: float = DEFAULT_TOL, n_max: int = DEFAULT_NMAX) -> IngredientForms:
    sg = q if isinstance(q, SliceGeometry) else slice_geometry(dom, q)
    return _ingredients(dom, bps, sg, tol, n_max)


def _ingredients(dom, bps, sg: SliceGeometry, tol, n_max) -> IngredientForms:
    m, dim = dom.m, sg.dim
    rho, c = sg.q.rho, sg.c
    eK = np.exp(sg.K)
    s2 = (rho + c) * eK / (2 * np.pi)
    terms = _slice_terms(dom, bps, sg, tol, n_max)
    N = tau_matrix(dom, sg.z, check=False).imag
    Mc = N.astype(complex)
    df = np.zeros(dim, dtype=complex)
    w_inst = np.zeros((m, dim), dtype=complex)
    eta_sum = np.zeros(dim, dtype=complex)
    y = np.zeros(m, dtype=complex)  # W_i^inst(V)
    vz2 = 0j  # sum Omega V |Z|^2
    ivdz = np.zeros(dim, dtype=complex)  # sum Omega V iota_V |dZ|^2
    f_inst = 0j
    for t in terms:
        V = t.V
        Mc = Mc + t.omega * V * np.outer(t.n_low, t.n_low)
        absX2 = abs(t.Xg) ** 2
        # Re(X_g conj(D_g)) = Re(X dXbar) + |X|^2 (drho/2(rho+c) + dK/2)
        df += t.omega * 2 * (rho + c) * eK * V * np.real(t.Xg * t.D.conj())
        df -= t.omega * 1j / np.pi * t.a * t.dtheta
        # 2 pi A = -(a/2)(dX/X - c.c.)
        w_inst += t.omega * np.outer(t.n_low, -0.5 * t.a * t.dlog - 1j * V * t.dtheta)
        eta_sum += t.omega * 1j * t.b / (8 * np.pi ** 2) * t.dlog
        y += t.omega * t.n_low * (-1j * t.a)
        vz2 += t.omega * V * s2 * absX2
        ivdz += t.omega * V * (-s2) * np.imag(t.Xg * t.D.conj())
        f_inst += -t.omega * t.b / np.pi
    M = 0.5 * (Mc.real + Mc.real.T)
    sv = np.linalg.svd(M, compute_uv=False)
    scale = max(float(sv[0]), 1.0)
    if not np.all(np.isfinite(sv)) or sv[-1] <= scale / COND_LIMIT:
        raise GeometryError(f"N + N^inst is singular (smallest singular value {sv[-1]:.3g})")
    Minv = np.linalg.inv(M)
    yr = y.real
    W = _W(dom, sg)
    Y = W + w_inst
    # iota_V of (1/4pi^2) Y M^-1 Ybar with Y(V) = y real
    ivY = (yr @ Minv @ np.real(Y)) / (4 * np.pi ** 2)
    eta_inst = eta_sum.real - ivdz.real - ivY
    f_inst_r = float(np.real(f_inst))
    f1_inst = f_inst_r - 4 * np.pi * (float(np.real(vz2)) + float(yr @ Minv @ yr) / (4 * np.pi ** 2))
    eta_t = -0.5 * sg.dcK()
    a_part = 2 * np.pi * eta_inst - 0.5 * f1_inst * eta_t
    b_part = 2 * np.pi * eta_sum.real - 0.5 * f_inst_r * eta_t
    return IngredientForms(
        df_inst=df.real.copy(),
        w_inst=w_inst,
        eta_plus_inst=0.5 * (a_part + b_part),
        eta_minus_inst=0.5 * (a_part - b_part),
        eta_inst=eta_inst,
        eta_sum=eta_sum.real.copy(),
        f_inst=f_inst_r,
        f1_inst=f1_inst,
        M=M,
        terms=terms,
    )


def qk_lines(dom: CaskDomain, bps: BpsStructure, q: QkPoint, tol: float = DEFAULT_TOL,
             n_max: int = DEFAULT_NMAX):
    """The seven displayed lines of the coordinate QK metric, as separate matrices.

    Lines 6 and 7 of the display are returned together as the last entry.
    """
    sg = slice_geometry(dom, q)
    ing = _ingredients(dom, bps, sg, tol, n_max)
    rho, c = q.rho, dom.c
    f, f1 = ing.f_inst, ing.f1_inst
    fp, fm = ing.f_plus_inst, ing.f_minus_inst
    F = rho + f
    if abs(F) <= 1e-10 or abs(-rho - 2 * c + f1) <= 1e-10:
        raise GeometryError(f"f or f1 vanishes on the slice (f = {F}, f1 = {-rho - 2 * c + f1})")
    eK = np.exp(sg.K)
    dim = sg.dim
    gMbar = hermitian_form(sg.dX(), sg.hess) if dom.n else np.zeros((dim, dim))
    inst_sq = sum(hermitian_form(t.D[None, :], np.array([[t.omega * t.V]])) for t in ing.terms) \
        if ing.terms else np.zeros((dim, dim))
    L1 = (rho + c) / F * (gMbar - eK * inst_sq)
    drho = sg.drho()
    L2 = ((rho + 2 * c - f) / (2 * (rho + c)) * _sq(drho)
          + np.outer(drho, ing.df_inst) + np.outer(ing.df_inst, ing.df_inst)
          + np.outer(ing.df_inst, drho)) / (2 * F ** 2)
    conn = _theta_connection(sg) + ing.eta_plus_inst + (fp - c) / (rho + c + fm) * ing.eta_minus_inst
    L3 = 4 * (rho + c + fm) / (F ** 2 * (rho + 2 * c - f1)) * _sq(conn)
    W = _W(dom, sg)
    Y = W + ing.w_inst
    L4 = -hermitian_form(Y, np.linalg.inv(ing.M)) / (2 * np.pi * F)
    Xf = np.concatenate([[1.0], q.X])
    comb = Xf @ Y
    for t in ing.terms:
        comb = comb + t.omega * t.a * t.D
    L5 = (rho + c) * eK / (np.pi * F ** 2) * hermitian_form(comb[None, :], np.eye(1))
    half = 0.5 * sg.dcK()
    L6 = (rho + c + fm) / F * _sq(half + 2 * ing.eta_minus_inst / (rho + c + fm)) - (rho + c) / F * _sq(half)
    return [L1, L2, L3, L4, L5, L6], ing


def qk_metric_coord(dom: CaskDomain, bps: BpsStructure, q: QkPoint, tol: float = DEFAULT_TOL,
                    n_max: int = DEFAULT_NMAX) -> MetricSample:
    lines, _ = qk_lines(dom, bps, q, tol, n_max)
    return MetricSample(sum(lines), FRAME)


def isometry_residual(dom: CaskDomain, bps: BpsStructure, q: QkPoint, shift, tol: float = DEFAULT_TOL) -> float:
    """``max |L^* g(L q) - g(q)|`` for the Heisenberg left translation ``L``."""
    g0 = qk_metric_coord(dom, bps, q, tol).matrix
    q1 = heisenberg_action(q, shift)
    g1 = qk_metric_coord(dom, bps, q1, tol).matrix
    J = heisenberg_jacobian(q, shift)
    return float(np.abs(J.T @ g1 @ J - g0).max())
