"""Instanton-corrected hyperkähler structure on the torus bundle.

For each support charge ``gamma`` the three Bessel sums ::

    v_gamma = sum_n e^{i n th} K0(2 pi n |Z|)
    a_gamma = sum_n e^{i n th} |Z| K1(2 pi n |Z|)
    b_gamma = sum_n e^{i n th} |Z| K1(2 pi n |Z|) / n

determine ``V_gamma = v/2pi``, ``A_gamma = -(a/4pi)(dZ/Z - dZbar/Zbar)`` and
the bundle 1-form ``eta_gamma = (i b/8pi^2)(dZ/Z - dZbar/Zbar)``.

The Kähler forms are assembled twice: once through the frame ``Y_i`` and
the matrix ``M`` (the main route), once straight from the defining sums
over the support (used as an independent check and for negative controls).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .bessel import k0_k1
from .cask import (
    FD_STEP,
    CaskDomain,
    GeometryError,
    TorusPoint,
    dtheta_forms,
    dual_periods,
    dz_forms,
    fd_step,
    hermitian_form,
    tau_matrix,
    wedge,
)
from .lattice import BpsStructure

__all__ = [
    "SeriesError",
    "InstantonSeriesValue",
    "bessel_sums",
    "instanton_series",
    "GammaTerm",
    "HkPoint",
    "hk_point",
    "compatibility_check",
    "kahler_forms",
    "kahler_forms_direct",
    "complex_structures",
    "metric_from_forms",
    "hk_metric",
    "MetricSample",
    "rotating_vector",
    "flow",
    "pullback",
    "exterior_derivative_residual",
    "exterior_derivative_1form",
    "jacobian_fd",
    "gradient",
    "rotating_flow",
    "DEFAULT_TOL",
    "DEFAULT_NMAX",
    "DEFAULT_THRESHOLD",
]

DEFAULT_TOL = 1e-15
DEFAULT_NMAX = 500
DEFAULT_THRESHOLD = 1e-8
_CHUNK = 32


class SeriesError(ArithmeticError):
    """Instanton series cannot be evaluated (``Z = 0`` or no convergence)."""


# ---------------------------------------------------------------------------
# Bessel series

@dataclass(frozen=True)
class InstantonSeriesValue:
    """Values of the three instanton sums for one charge at one point.

    ``v``, ``a``, ``b`` are the raw sums in the module docstring.
    ``v_inst`` is ``V_gamma``; ``a_inst_coeff`` multiplies
    ``(dZ/Z - dZbar/Zbar)`` in ``A_gamma``.
    """

    v: complex
    a: complex
    b: complex
    truncation_n: int
    tail_bound: float

    @property
    def v_inst(self) -> complex:
        return self.v / (2 * np.pi)

    @property
    def a_inst_coeff(self) -> complex:
        return -self.a / (4 * np.pi)

    @property
    def eta_coeff(self) -> complex:
        return 1j * self.b / (8 * np.pi ** 2)

    def conj(self) -> "InstantonSeriesValue":
        """Values for ``-gamma``."""
        return InstantonSeriesValue(np.conj(self.v), np.conj(self.a), np.conj(self.b),
                                    self.truncation_n, self.tail_bound)


def bessel_sums(absz: float, theta: float, tol: float = DEFAULT_TOL, n_max: int = DEFAULT_NMAX):
    """Evaluate ``(v, a, b)`` with a certified geometric tail bound.

    Terms are bounded by ``K_nu(2 pi n |Z|)`` (times ``|Z|``); since
    ``e^x K_nu(x)`` decreases, consecutive ratios are at most
    ``r = exp(-2 pi |Z|)`` and the remainder after term ``n`` is at most
    ``term_n * r / (1 - r)``.
    """
    if not absz > 0:
        raise SeriesError("central charge vanishes on a support charge")
    r = np.exp(-2 * np.pi * absz)
    if r >= 1.0:
        raise SeriesError("central charge too small for the series")
    ratio = r / (1 - r)
    v = a = b = 0j
    start = 1
    while start <= n_max:
        ns = np.arange(start, min(start + _CHUNK, n_max + 1), dtype=float)
        k0, k1 = k0_k1(2 * np.pi * ns * absz)
        ph = np.exp(1j * ns * theta)
        tv = ph * k0
        ta = ph * absz * k1
        tb = ta / ns
        cv, ca, cb = v + np.cumsum(tv), a + np.cumsum(ta), b + np.cumsum(tb)
        bound = np.maximum(k0, absz * k1) * ratio
        scale = np.minimum(np.minimum(np.abs(cv), np.abs(ca)), np.abs(cb)) + 1e-300
        done = np.nonzero(bound <= tol * scale)[0]
        if done.size:
            j = int(done[0])
            return complex(cv[j]), complex(ca[j]), complex(cb[j]), int(ns[j]), float(bound[j])
        v, a, b = cv[-1], ca[-1], cb[-1]
        start += ns.size
    raise SeriesError(f"instanton series did not converge within {n_max} terms (|Z| = {absz:.3g})")


def instanton_series(dom: CaskDomain, bps: BpsStructure, gamma, p: TorusPoint,
                     tol: float = DEFAULT_TOL, n_max: int = DEFAULT_NMAX) -> InstantonSeriesValue:
    """Instanton sums for ``gamma`` at ``p`` (``gamma`` must carry a BPS index)."""
    g = tuple(int(c) for c in gamma)
    if bps.omega(g) == 0:
        raise SeriesError(f"charge {g} is not in the BPS support")
    from .cask import central_charge

    Z = central_charge(dom, p.z, g)
    v, a, b, n, tail = bessel_sums(abs(Z), p.angle(g), tol, n_max)
    return InstantonSeriesValue(v, a, b, n, tail)


# ---------------------------------------------------------------------------
# per-point data

@dataclass
class GammaTerm:
    charge: np.ndarray
    omega: int
    n_low: np.ndarray  # y-block coefficients n_i
    Z: complex
    dZ: np.ndarray
    dtheta: np.ndarray
    series: InstantonSeriesValue

    @property
    def V(self) -> complex:
        return self.series.v_inst

    @property
    def dlog(self) -> np.ndarray:
        """``dZ/Z - dZbar/Zbar`` (purely imaginary 1-form)."""
        q = self.dZ / self.Z
        return q - np.conj(q)

    @property
    def A(self) -> np.ndarray:
        return self.series.a_inst_coeff * self.dlog

    @property
    def eta(self) -> np.ndarray:
        return self.series.eta_coeff * self.dlog


@dataclass
class HkPoint:
    """Everything the HK formulas need at one point, computed once."""

    dom: CaskDomain
    p: TorusPoint
    z: np.ndarray
    tau: np.ndarray
    N: np.ndarray
    M: np.ndarray
    terms: list
    dz: np.ndarray
    dtt: np.ndarray
    dth: np.ndarray
    W: np.ndarray
    Winst: np.ndarray
    drop_a: bool = False
    _Minv: Optional[np.ndarray] = field(default=None, repr=False)

    @property
    def m(self) -> int:
        return self.z.size

    @property
    def Y(self) -> np.ndarray:
        return self.W + self.Winst

    @property
    def Minv(self) -> np.ndarray:
        if self._Minv is None:
            sv = np.linalg.svd(self.M, compute_uv=False)
            # cond alone misses n = 0, where M is 1x1; compare with the scale of N too
            scale = max(float(np.abs(self.N).max()), float(sv[0]))
            if not np.all(np.isfinite(sv)) or sv[-1] <= 1e-12 * scale:
                raise GeometryError(f"M is singular (smallest singular value {sv[-1]:.3g}, scale {scale:.3g})")
            self._Minv = np.linalg.inv(self.M)
        return self._Minv


def _support_terms(dom, bps, p, z, tau, tol, n_max):
    m = dom.m
    dz = dz_forms(m)
    dtt, dth = dtheta_forms(m)
    w = dual_periods(dom, z)
    terms = []
    for charge, om in bps.half_support():
        g = np.array(charge, dtype=float)
        if g.size != 2 * m:
            raise GeometryError(f"charge {charge} has wrong length for n = {dom.n}")
        hi, lo = g[:m], g[m:]
        Z = complex(hi @ w + lo @ z)
        dZ = hi @ tau @ dz + lo @ dz
        dtheta = hi @ dtt + lo @ dth
        th = float(hi @ p.theta_tilde + lo @ p.theta)
        v, a, b, n, tail = bessel_sums(abs(Z), th, tol, n_max)
        s = InstantonSeriesValue(v, a, b, n, tail)
        terms.append(GammaTerm(g, om, lo, Z, dZ, dtheta, s))
        terms.append(GammaTerm(-g, om, -lo, -Z, -dZ, -dtheta, s.conj()))
    return terms


def hk_point(dom: CaskDomain, bps: BpsStructure, p: TorusPoint, tol: float = DEFAULT_TOL,
             n_max: int = DEFAULT_NMAX, drop_a: bool = False) -> HkPoint:
    """Assemble ``M``, ``W``, ``W^inst`` and the per-charge series at ``p``.

    The support must lie in the ``gamma^i`` block of the frame (see
    :func:`qkinst.cask.normalize_frame`). ``drop_a`` removes the ``A_gamma``
    contribution to ``W^inst`` (negative control only).
    """
    z = dom.check(p.z)
    m = dom.m
    tau = tau_matrix(dom, z)
    N = tau.imag.copy()
    terms = _support_terms(dom, bps, p, z, tau, tol, n_max)
    for t in terms:
        if np.any(t.charge[:m]):
            raise GeometryError("support is not in the gamma^i block; normalize the frame first")
    dz = dz_forms(m)
    dtt, dth = dtheta_forms(m)
    W = dtt - tau @ dth
    Winst = np.zeros((m, 4 * m), dtype=complex)
    Mc = N.astype(complex)
    for t in terms:
        Mc = Mc + t.omega * t.V * np.outer(t.n_low, t.n_low)
        corr = -1j * t.V * t.dtheta
        if not drop_a:
            corr = corr + 2 * np.pi * t.A
        Winst += t.omega * np.outer(t.n_low, corr)
    M = 0.5 * (Mc.real + Mc.real.T)
    return HkPoint(dom, p, z, tau, N, M, terms, dz, dtt, dth, W, Winst, drop_a)


def compatibility_check(dom: CaskDomain, bps: BpsStructure, p: TorusPoint,
                        threshold: float = DEFAULT_THRESHOLD, tol: float = DEFAULT_TOL):
    """``(ok, smallest singular value of M)``."""
    hp = hk_point(dom, bps, p, tol)
    smin = float(np.linalg.svd(hp.M, compute_uv=False).min())
    return smin > threshold, smin


# ---------------------------------------------------------------------------
# forms and metric

def kahler_forms(hp: HkPoint):
    """``(omega_1, omega_2, omega_3)`` from ``varpi = dZ^i ∧ Y_i / 2pi`` and ``M``."""
    m = hp.m
    Y = hp.Y
    varpi = sum(wedge(hp.dz[i], Y[i]) for i in range(m)) / (2 * np.pi)
    Minv = hp.Minv
    dzb, Yb = hp.dz.conj(), Y.conj()
    om3 = np.zeros((4 * m, 4 * m), dtype=complex)
    for i in range(m):
        for j in range(m):
            om3 += 0.5j * hp.M[i, j] * wedge(hp.dz[i], dzb[j])
            om3 += 1j / (8 * np.pi ** 2) * Minv[i, j] * wedge(Y[i], Yb[j])
    return varpi.real.copy(), varpi.imag.copy(), om3.real.copy()


def kahler_forms_direct(hp: HkPoint, drop_a: bool = False):
    """Same forms straight from the sums over the support.

    ``varpi = -<dZ∧dtheta>/2pi + sum Omega (dZ∧A + (i/2pi) V dtheta∧dZ)``,
    ``omega_3 = 1/4 <dZ∧dZbar> - <dtheta∧dtheta>/8pi^2
    + sum Omega ((i/2) V dZ∧dZbar + dtheta∧A/2pi)``.
    """
    m = hp.m
    dw = hp.tau @ hp.dz
    varpi = np.zeros((4 * m, 4 * m), dtype=complex)
    om3 = np.zeros((4 * m, 4 * m), dtype=complex)
    for i in range(m):
        varpi -= (wedge(dw[i], hp.dth[i]) - wedge(hp.dz[i], hp.dtt[i])) / (2 * np.pi)
        om3 += 0.25 * (wedge(dw[i], hp.dz[i].conj()) - wedge(hp.dz[i], dw[i].conj()))
        om3 -= wedge(hp.dtt[i], hp.dth[i]) / (4 * np.pi ** 2)
    for t in hp.terms:
        A = 0 * t.A if drop_a else t.A
        varpi += t.omega * (wedge(t.dZ, A) + 1j / (2 * np.pi) * t.V * wedge(t.dtheta, t.dZ))
        om3 += t.omega * (0.5j * t.V * wedge(t.dZ, t.dZ.conj()) + wedge(t.dtheta, A) / (2 * np.pi))
    return varpi.real.copy(), varpi.imag.copy(), om3.real.copy()


def complex_structures(forms):
    """``I_alpha = -omega_beta^{-1} omega_gamma`` for cyclic ``(alpha, beta, gamma)``."""
    om = list(forms)
    out = []
    for a in range(3):
        b, c = (a + 1) % 3, (a + 2) % 3
        try:
            out.append(-np.linalg.solve(om[b], om[c]))
        except np.linalg.LinAlgError as exc:
            raise GeometryError("Kähler form is degenerate") from exc
    return tuple(out)


def metric_from_forms(omega, I) -> np.ndarray:
    """``g`` with ``omega(u, v) = g(I u, v)``, i.e. ``G = -I^T Omega``."""
    return -I.T @ omega


@dataclass
class MetricSample:
    """Real symmetric matrix with its chart label and eigen summary."""

    matrix: np.ndarray
    frame: str
    eigenvalues: np.ndarray = field(init=False)

    def __post_init__(self):
        g = np.asarray(self.matrix, dtype=float)
        self.matrix = 0.5 * (g + g.T)
        self.eigenvalues = np.linalg.eigvalsh(self.matrix)

    def signature(self, tol: float = 1e-10):
        scale = max(float(np.abs(self.eigenvalues).max()), 1.0)
        ev = self.eigenvalues
        return int(np.sum(ev > tol * scale)), int(np.sum(ev < -tol * scale))

    @property
    def positive_definite(self) -> bool:
        return bool(self.eigenvalues.min() > 0)


def hk_metric(hp: HkPoint) -> MetricSample:
    """``g_N = dZ M dZbar + (1/4pi^2) Y M^{-1} Ybar``."""
    g = hermitian_form(hp.dz, hp.M) + hermitian_form(hp.Y, hp.Minv) / (4 * np.pi ** 2)
    return MetricSample(g, "x,u,theta~,theta")


# ---------------------------------------------------------------------------
# rotating action

def rotating_vector(m: int, q) -> np.ndarray:
    """Components of ``V = i z d_z - i zbar d_zbar`` at real chart point ``q``."""
    q = np.asarray(q, dtype=float)
    out = np.zeros(4 * m)
    out[:m] = -q[m:2 * m]
    out[m:2 * m] = q[:m]
    return out


def _rotating_jacobian(m: int) -> np.ndarray:
    J = np.zeros((4 * m, 4 * m))
    J[:m, m:2 * m] = -np.eye(m)
    J[m:2 * m, :m] = np.eye(m)
    return J


def flow(field_fn: Callable, jac_fn: Callable, q0, t: float, steps: int = 16):
    """RK4 for ``q' = X(q)`` together with the variational equation.

    Returns ``(q(t), dq(t)/dq0)``.
    """
    q = np.asarray(q0, dtype=float).copy()
    P = np.eye(q.size)
    dt = t / steps
    for _ in range(steps):
        k1 = field_fn(q)
        l1 = jac_fn(q) @ P
        k2 = field_fn(q + 0.5 * dt * k1)
        l2 = jac_fn(q + 0.5 * dt * k1) @ (P + 0.5 * dt * l1)
        k3 = field_fn(q + 0.5 * dt * k2)
        l3 = jac_fn(q + 0.5 * dt * k2) @ (P + 0.5 * dt * l2)
        k4 = field_fn(q + dt * k3)
        l4 = jac_fn(q + dt * k3) @ (P + dt * l3)
        q = q + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        P = P + dt / 6 * (l1 + 2 * l2 + 2 * l3 + l4)
    return q, P


def rotating_flow(m: int, q0, t: float, steps: int = 16):
    J = _rotating_jacobian(m)
    return flow(lambda q: rotating_vector(m, q), lambda q: J, q0, t, steps)


def pullback(tensor: np.ndarray, jac: np.ndarray) -> np.ndarray:
    """Pull back a bilinear form: ``(Phi^* T)(u, v) = T(dPhi u, dPhi v)``."""
    return jac.T @ tensor @ jac


# ---------------------------------------------------------------------------
# finite-difference exterior derivative

def exterior_derivative_residual(form_field: Callable, q, h: float = FD_STEP,
                                 return_tensor: bool = False):
    """Max of ``|d_a w_bc + d_b w_ca + d_c w_ab|`` by central differences.

    ``form_field`` may also return a stack ``(k, dim, dim)`` of 2-forms; the
    residual is then the maximum over the stack.
    """
    q = np.asarray(q, dtype=float)
    dim = q.size
    D = None
    for a in range(dim):
        s = fd_step(q[a], h)
        e = np.zeros(dim)
        e[a] = s
        da = (np.asarray(form_field(q + e)) - np.asarray(form_field(q - e))) / (2 * s)
        if D is None:
            D = np.empty((dim,) + da.shape)
        D[a] = da
    if D is None:
        return (0.0, None) if return_tensor else 0.0
    D = np.moveaxis(D, 0, -3)  # (..., a, b, c)
    cyc = D + np.moveaxis(D, -3, -1) + np.moveaxis(D, -1, -3)
    res = float(np.abs(cyc).max()) if dim else 0.0
    return (res, cyc) if return_tensor else res


def jacobian_fd(fn: Callable, q, h: float = FD_STEP) -> np.ndarray:
    """``J[a] = d_a fn`` by central differences (``fn`` returns a flat array)."""
    q = np.asarray(q, dtype=float)
    rows = []
    for a in range(q.size):
        s = fd_step(q[a], h)
        e = np.zeros(q.size)
        e[a] = s
        rows.append((np.asarray(fn(q + e), dtype=float) - np.asarray(fn(q - e), dtype=float)) / (2 * s))
    return np.array(rows)


def exterior_derivative_1form(form_field: Callable, q, h: float = FD_STEP) -> np.ndarray:
    """``(d alpha)_ab = d_a alpha_b - d_b alpha_a`` by central differences."""
    D = jacobian_fd(form_field, q, h)
    dim = D.shape[0]
    D = D[:, :dim]
    return D - D.T


def gradient(fn: Callable, q, h: float = FD_STEP) -> np.ndarray:
    """Central-difference gradient of a scalar function."""
    q = np.asarray(q, dtype=float)
    out = np.empty(q.size)
    for a in range(q.size):
        s = fd_step(q[a], h)
        e = np.zeros(q.size)
        e[a] = s
        out[a] = (fn(q + e) - fn(q - e)) / (2 * s)
    return out
