"""Conical affine special Kähler (CASK) domains.

A CASK domain is an open cone ``M`` in ``C^{n+1}`` with a holomorphic,
degree-2 homogeneous prepotential ``F``. Everything downstream is built
from

* ``w_i = dF/dz^i`` and ``tau_ij = d^2F/dz^i dz^j``,
* ``N = Im tau`` (signature ``(1, n)``) and ``r^2 = N_ij z^i conj(z^j)``,
* central charges ``Z_gamma = n^i w_i + n_i z^i``.

Real chart on ``N = T*M/Lambda*`` (dimension ``4m``, ``m = n + 1``)::

    (x^0..x^n, u^0..u^n, theta~_0..theta~_n, theta^0..theta^n),  z = x + i u

Complex 1-forms are complex coefficient vectors in this chart and 2-forms
are antisymmetric ``4m x 4m`` matrices with ``omega[a, b] = omega(e_a, e_b)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .lattice import BpsStructure, ChargeLattice, LatticeError, complete_darboux_basis, darboux_coordinates

__all__ = [
    "GeometryError",
    "Quadratic",
    "Plugin",
    "CaskDomain",
    "TorusPoint",
    "PLUGINS",
    "chn_domain",
    "tau_matrix",
    "prepotential",
    "dual_periods",
    "cask_potential_r2",
    "central_charge",
    "charge_angle",
    "psk_data",
    "kahler_potential_derivatives",
    "semiflat_forms",
    "normalize_frame",
    "dz_forms",
    "wedge",
    "sym",
    "hermitian_form",
    "FD_STEP",
    "FD_FLOOR",
    "fd_step",
]

FD_STEP = 1e-4
FD_FLOOR = 1e-6


class GeometryError(ValueError):
    """Point outside the domain, singular matrix, or broken plugin."""


def fd_step(value: float, h: float = FD_STEP, floor: float = FD_FLOOR) -> float:
    """Central-difference step ``h * max(|value|, 1)``, never below ``floor``."""
    return max(h * max(abs(value), 1.0), floor)


# ---------------------------------------------------------------------------
# prepotentials

@dataclass(frozen=True)
class Quadratic:
    """``F(z) = 1/2 tau_ij z^i z^j`` with constant complex symmetric ``tau``."""

    tau: np.ndarray

    def __post_init__(self):
        t = np.array(self.tau, dtype=complex)
        if t.ndim != 2 or t.shape[0] != t.shape[1]:
            raise GeometryError("tau must be a square matrix")
        if not np.allclose(t, t.T, atol=1e-14):
            raise GeometryError("tau must be symmetric")
        t.setflags(write=False)
        object.__setattr__(self, "tau", t)

    kind = "quadratic"

    def F(self, z):
        return 0.5 * z @ self.tau @ z

    def dF(self, z):
        return self.tau @ z

    def d2F(self, z):
        return self.tau


@dataclass(frozen=True)
class Plugin:
    """User-supplied prepotential with analytic first and second derivatives."""

    name: str
    F: Callable[[np.ndarray], complex]
    dF: Callable[[np.ndarray], np.ndarray]
    d2F: Callable[[np.ndarray], np.ndarray]

    kind = "plugin"

    def check_homogeneity(self, z, lam, rtol: float = 1e-10) -> float:
        """Relative residual of ``F(lam z) = lam^2 F(z)``."""
        z = np.asarray(z, dtype=complex)
        a = self.F(lam * z)
        b = lam * lam * self.F(z)
        res = abs(a - b) / max(abs(b), 1e-300)
        if res > rtol:
            raise GeometryError(f"plugin {self.name!r} is not homogeneous of degree 2 (residual {res:.2e})")
        return res


def _cubic_plugin(kappa: float = 1.0) -> Plugin:
    # F = -kappa/6 (z^1)^3 / z^0, the one-modulus cubic prepotential
    def F(z):
        return -kappa / 6.0 * z[1] ** 3 / z[0]

    def dF(z):
        return np.array([kappa / 6.0 * z[1] ** 3 / z[0] ** 2, -kappa / 2.0 * z[1] ** 2 / z[0]], dtype=complex)

    def d2F(z):
        a, b = z[0], z[1]
        return np.array(
            [[-kappa / 3.0 * b ** 3 / a ** 3, kappa / 2.0 * b ** 2 / a ** 2],
             [kappa / 2.0 * b ** 2 / a ** 2, -kappa * b / a]],
            dtype=complex,
        )

    return Plugin("cubic", F, dF, d2F)


def _chn_plugin(n: int) -> Plugin:
    # quadratic CH^n prepotential routed through the plugin interface
    diag = np.array([1j] + [-1j] * n)

    def F(z):
        return 0.5 * np.sum(diag * z * z)

    return Plugin(f"chn{n}", F, lambda z: diag * z, lambda z: np.diag(diag))


PLUGINS: dict[str, Callable[..., Plugin]] = {"cubic": _cubic_plugin, "chn": _chn_plugin}


# ---------------------------------------------------------------------------
# domain

def _signature(mat, tol=1e-12):
    ev = np.linalg.eigvalsh(mat)
    return int(np.sum(ev > tol)), int(np.sum(ev < -tol))


@dataclass(frozen=True)
class CaskDomain:
    """Prepotential, complex dimension ``n+1``, domain predicate, one-loop ``c``.

    ``predicate`` takes the complex vector ``z`` and returns ``True`` on
    the domain. When omitted, the generic CASK condition is used
    (``Im tau`` of signature ``(1, n)`` and ``r^2 > 0``).
    """

    prepotential: object
    n: int
    c: float = 0.0
    predicate: Optional[Callable[[np.ndarray], bool]] = None
    K: Optional[float] = None
    label: str = ""

    @property
    def m(self) -> int:
        return self.n + 1

    @property
    def is_quadratic(self) -> bool:
        return isinstance(self.prepotential, Quadratic)

    def contains(self, z) -> bool:
        z = np.asarray(z, dtype=complex)
        if z.shape != (self.m,) or not np.all(np.isfinite(z)):
            return False
        if self.K is not None and abs(z[0]) <= self.K:
            return False
        if self.predicate is not None:
            return bool(self.predicate(z))
        try:
            N = tau_matrix(self, z, check=False).imag
        except (ZeroDivisionError, FloatingPointError):
            return False
        return _signature(N) == (1, self.n) and float(np.real(z @ N @ z.conj())) > 0

    def check(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=complex)
        if z.shape != (self.m,):
            raise GeometryError(f"point has {z.size} components, expected {self.m}")
        if not self.contains(z):
            raise GeometryError(f"point {z} is outside the domain")
        return z


def chn_domain(n: int, c: float = 0.0, K: Optional[float] = None) -> CaskDomain:
    """``tau = diag(i, -i, ..., -i)`` on ``|z^0|^2 > sum |z^k|^2`` (and ``|z^0| > K``)."""
    tau = np.diag([1j] + [-1j] * n)

    def pred(z):
        return abs(z[0]) ** 2 > float(np.sum(np.abs(z[1:]) ** 2))

    return CaskDomain(Quadratic(tau), n, float(c), pred, K, label=f"CH{n}")


def tau_matrix(dom: CaskDomain, z, check: bool = True) -> np.ndarray:
    if check:
        z = dom.check(z)
    pp = dom.prepotential
    try:
        t = np.asarray(pp.d2F(np.asarray(z, dtype=complex)), dtype=complex)
    except Exception as exc:  # plugin failures surface uniformly
        raise GeometryError(f"prepotential evaluation failed: {exc}") from exc
    if t.shape != (dom.m, dom.m) or not np.all(np.isfinite(t)):
        raise GeometryError("prepotential Hessian has wrong shape or non-finite entries")
    return t


def prepotential(dom: CaskDomain, z) -> complex:
    return complex(dom.prepotential.F(np.asarray(z, dtype=complex)))


def dual_periods(dom: CaskDomain, z) -> np.ndarray:
    """``w_i = dF/dz^i``."""
    return np.asarray(dom.prepotential.dF(np.asarray(z, dtype=complex)), dtype=complex)


def cask_potential_r2(dom: CaskDomain, z) -> float:
    """``r^2 = N_ij z^i conj(z^j)``; raises if not positive."""
    z = np.asarray(z, dtype=complex)
    N = tau_matrix(dom, z, check=False).imag
    r2 = float(np.real(z @ N @ z.conj()))
    if not r2 > 0:
        raise GeometryError(f"r^2 = {r2} is not positive")
    return r2


def central_charge(dom: CaskDomain, z, gamma) -> complex:
    """``Z_gamma = n^i w_i + n_i z^i`` for ``gamma = (n^i | n_i)``."""
    z = np.asarray(z, dtype=complex)
    g = np.asarray(gamma, dtype=float)
    m = dom.m
    if g.shape != (2 * m,):
        raise GeometryError(f"charge has length {g.size}, expected {2 * m}")
    return complex(g[:m] @ dual_periods(dom, z) + g[m:] @ z)


def charge_angle(gamma, theta_tilde, theta) -> float:
    """``theta_gamma = n^i theta~_i + n_i theta^i`` (not reduced)."""
    g = np.asarray(gamma, dtype=float)
    m = len(theta)
    return float(g[:m] @ np.asarray(theta_tilde) + g[m:] @ np.asarray(theta))


# ---------------------------------------------------------------------------
# PSK quotient data

def _K_of_X(dom: CaskDomain, X) -> float:
    z = np.concatenate([[1.0 + 0j], np.asarray(X, dtype=complex)])
    N = tau_matrix(dom, z, check=False).imag
    Q = float(np.real(z @ N @ z.conj()))
    if not Q > 0:
        raise GeometryError(f"N_ij X^i conj(X^j) = {Q} is not positive")
    return -np.log(Q)


def kahler_potential_derivatives(dom: CaskDomain, X, h: float = FD_STEP):
    """Return ``(K, dK/dX^k, K_{k lbar})`` with ``X^0 = 1`` implicit.

    ``dK/dX^k`` is the holomorphic derivative (length ``n``) and the Hessian
    is Hermitian ``n x n``. Analytic for quadratic prepotentials, central
    differences in ``(Re X, Im X)`` otherwise.
    """
    X = np.asarray(X, dtype=complex).reshape(dom.n)
    n = dom.n
    if dom.is_quadratic:
        z = np.concatenate([[1.0 + 0j], X])
        N = dom.prepotential.tau.imag
        Q = float(np.real(z @ N @ z.conj()))
        if not Q > 0:
            raise GeometryError(f"N_ij X^i conj(X^j) = {Q} is not positive")
        Nzb = (N @ z.conj())[1:]  # dQ/dX^k
        Nz = (N @ z)[1:]  # dQ/dXbar^l
        dK = -Nzb / Q
        hess = -N[1:, 1:] / Q + np.outer(Nzb, Nz) / Q ** 2
        return -np.log(Q), dK, hess
    K0 = _K_of_X(dom, X)
    # real gradient / Hessian in (a, b) = (Re X, Im X)
    xr = np.concatenate([X.real, X.imag])

    def f(v):
        return _K_of_X(dom, v[:n] + 1j * v[n:])

    grad = np.zeros(2 * n)
    H = np.zeros((2 * n, 2 * n))
    steps = [fd_step(v, h) for v in xr]
    for a in range(2 * n):
        ea = np.zeros(2 * n)
        ea[a] = steps[a]
        grad[a] = (f(xr + ea) - f(xr - ea)) / (2 * steps[a])
        for b in range(a, 2 * n):
            eb = np.zeros(2 * n)
            eb[b] = steps[b]
            H[a, b] = H[b, a] = (f(xr + ea + eb) - f(xr + ea - eb) - f(xr - ea + eb) + f(xr - ea - eb)) / (
                4 * steps[a] * steps[b])
    dK = 0.5 * (grad[:n] - 1j * grad[n:])
    Haa, Hbb, Hab = H[:n, :n], H[n:, n:], H[:n, n:]
    # d_k d_lbar = 1/4 (d_a - i d_b)_k (d_a + i d_b)_l
    hess = 0.25 * (Haa + Hbb + 1j * (Hab - Hab.T))
    return K0, dK, hess


def psk_data(dom: CaskDomain, X):
    """``(K, g_psk)`` with ``K = -log(N_ij X^i conj(X^j))`` and ``g_psk = d dbar K``."""
    K, _, hess = kahler_potential_derivatives(dom, X)
    return K, hess


# ---------------------------------------------------------------------------
# torus points and forms

@dataclass(frozen=True)
class TorusPoint:
    """Point ``(z, theta~, theta)`` of the torus bundle over ``M``."""

    z: np.ndarray
    theta_tilde: np.ndarray
    theta: np.ndarray

    def __post_init__(self):
        z = np.array(self.z, dtype=complex).reshape(-1)
        m = z.size
        tt = np.array(self.theta_tilde, dtype=float).reshape(-1)
        th = np.array(self.theta, dtype=float).reshape(-1)
        if tt.size != m or th.size != m:
            raise GeometryError("angle blocks must have the same length as z")
        for a in (z, tt, th):
            a.setflags(write=False)
        object.__setattr__(self, "z", z)
        object.__setattr__(self, "theta_tilde", tt)
        object.__setattr__(self, "theta", th)

    @property
    def m(self) -> int:
        return self.z.size

    def reduced(self) -> "TorusPoint":
        two_pi = 2 * np.pi
        return TorusPoint(self.z, np.mod(self.theta_tilde, two_pi), np.mod(self.theta, two_pi))

    def to_real(self) -> np.ndarray:
        return np.concatenate([self.z.real, self.z.imag, self.theta_tilde, self.theta])

    @classmethod
    def from_real(cls, v) -> "TorusPoint":
        v = np.asarray(v, dtype=float)
        m = v.size // 4
        return cls(v[:m] + 1j * v[m:2 * m], v[2 * m:3 * m], v[3 * m:])

    def angle(self, gamma) -> float:
        return charge_angle(gamma, self.theta_tilde, self.theta)


def dz_forms(m: int) -> np.ndarray:
    """Rows are ``dz^i = dx^i + i du^i`` in the real chart."""
    out = np.zeros((m, 4 * m), dtype=complex)
    for i in range(m):
        out[i, i] = 1.0
        out[i, m + i] = 1j
    return out


def dtheta_forms(m: int):
    """``(dtheta~_i rows, dtheta^i rows)`` in the real chart."""
    eye = np.eye(4 * m)
    return eye[2 * m:3 * m], eye[3 * m:]


def wedge(a, b) -> np.ndarray:
    """Matrix of the 2-form ``a ∧ b``."""
    return np.outer(a, b) - np.outer(b, a)


def sym(a, b) -> np.ndarray:
    """Matrix of the symmetric product ``a b = 1/2 (a⊗b + b⊗a)``."""
    return 0.5 * (np.outer(a, b) + np.outer(b, a))


def hermitian_form(A, H, B=None) -> np.ndarray:
    """Real symmetric matrix of ``A_i H_ij conj(B_j)`` (``B = A`` by default).

    ``A`` and ``B`` hold complex 1-forms as rows. The result is the real part
    of the symmetrized tensor, which is what a Hermitian form contributes
    to a Riemannian metric.
    """
    if B is None:
        B = A
    P = np.asarray(A).T @ np.asarray(H) @ np.conj(B)
    return np.real(0.5 * (P + P.T))


def semiflat_forms(dom: CaskDomain, p: TorusPoint, lattice: Optional[ChargeLattice] = None):
    """Semi-flat ``(omega_1, omega_2, omega_3)`` in the real chart.

    Uses ``omega_1 + i omega_2 = -(1/2pi) <dZ ∧ dtheta>`` and
    ``omega_3 = 1/4 <dZ ∧ dZbar> - 1/(8 pi^2) <dtheta ∧ dtheta>`` with
    ``<a ∧ b> = a_{gt_i} ∧ b_{g^i} - a_{g^i} ∧ b_{gt_i}``.
    """
    if lattice is not None and not lattice.is_standard():
        raise GeometryError("semi-flat forms need the lattice in its Darboux frame")
    z = dom.check(p.z)
    m = dom.m
    tau = tau_matrix(dom, z)
    dz = dz_forms(m)
    dw = tau @ dz
    dtt, dth = dtheta_forms(m)
    varpi = np.zeros((4 * m, 4 * m), dtype=complex)
    om3 = np.zeros((4 * m, 4 * m), dtype=complex)
    for i in range(m):
        varpi += -(wedge(dw[i], dth[i]) - wedge(dz[i], dtt[i])) / (2 * np.pi)
        om3 += 0.25 * (wedge(dw[i], dz[i].conj()) - wedge(dz[i], dw[i].conj()))
        om3 -= 2 * wedge(dtt[i], dth[i]) / (8 * np.pi ** 2)
    return varpi.real.copy(), varpi.imag.copy(), om3.real.copy()


# ---------------------------------------------------------------------------
# frame normalization

@dataclass(frozen=True)
class FrameChange:
    """Symplectic change of Darboux frame.

    ``basis`` holds the new basis vectors as columns of ``B`` (old frame
    coordinates). Periods and angles transform as ``Pi' = B^T Pi``.
    """

    basis: np.ndarray
    m: int

    def periods(self, dom: CaskDomain, z) -> np.ndarray:
        z = np.asarray(z, dtype=complex)
        pi = np.concatenate([dual_periods(dom, z), z])
        return self.basis.T @ pi

    def z_new(self, dom: CaskDomain, z) -> np.ndarray:
        return self.periods(dom, z)[self.m:]

    def angles_new(self, theta_tilde, theta):
        th = self.basis.T @ np.concatenate([theta_tilde, theta])
        return th[:self.m], th[self.m:]


def normalize_frame(dom: CaskDomain, lattice: ChargeLattice, bps: BpsStructure):
    """Move to a Darboux frame in which the support lies in the ``g^i`` block.

    Returns ``(dom', bps', change)``; ``change`` is ``None`` if the input
    frame already works. Only quadratic prepotentials can be transformed
    (the new ``tau`` is again constant).
    """
    if not lattice.is_standard():
        raise LatticeError("geometry requires the lattice in its standard Darboux frame")
    m = lattice.m
    if all(not any(k[:m]) for k in bps.support):
        return dom, bps, None
    if not dom.is_quadratic:
        raise GeometryError("frame normalization is only available for quadratic prepotentials")
    basis = complete_darboux_basis(lattice, bps.support)
    B = np.array(basis, dtype=float).T  # columns = new basis vectors
    A, Bm = B[:m, :m], B[:m, m:]
    C, D = B[m:, :m], B[m:, m:]
    tau = dom.prepotential.tau
    num = A.T @ tau + C.T
    den = Bm.T @ tau + D.T
    if abs(np.linalg.det(den)) < 1e-12:
        raise GeometryError("new y-block periods are not coordinates on M")
    tau_new = num @ np.linalg.inv(den)
    tau_new = 0.5 * (tau_new + tau_new.T)
    change = FrameChange(B, m)
    Binv = np.linalg.inv(den)

    def pred(znew, _Binv=Binv, _old=dom):
        zold = _Binv @ znew
        return _old.contains(zold)

    new_dom = CaskDomain(Quadratic(tau_new), dom.n, dom.c, pred, None, label=dom.label + "'")
    entries = [(darboux_coordinates(lattice, basis, k), w) for k, w in bps.entries]
    new_bps = BpsStructure(entries, rank=lattice.rank)
    return new_dom, new_bps, change
