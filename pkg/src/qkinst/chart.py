"""Points of the slice ``{Arg z^0 = 0}`` and its embedding into the bundle chart.

Slice chart (dimension ``4m``)::

    (rho, Re X^1..Re X^n, Im X^1..Im X^n, theta~_0..theta~_n, theta^0..theta^n, sigma)

Ambient bundle chart (dimension ``4m + 1``)::

    (x^0..x^n, u^0..u^n, theta~_0..theta~_n, theta^0..theta^n, sigma)

The embedding is ``z^0 = s = sqrt((rho + c)/2pi) e^{K/2}`` (real, positive)
and ``z^k = s X^k``, which is ``|z^0|^2 = r^2 e^K`` with ``rho = 2pi r^2 - c``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cask import CaskDomain, GeometryError, TorusPoint, cask_potential_r2, kahler_potential_derivatives

__all__ = ["QkPoint", "SliceGeometry", "slice_geometry", "embed", "slice_from_torus", "heisenberg_action"]


@dataclass(frozen=True)
class QkPoint:
    """Point ``(rho, X, theta~, theta, sigma)`` of the slice (or its Heisenberg lift)."""

    rho: float
    X: np.ndarray
    theta_tilde: np.ndarray
    theta: np.ndarray
    sigma: float = 0.0

    def __post_init__(self):
        X = np.array(self.X, dtype=complex).reshape(-1)
        tt = np.array(self.theta_tilde, dtype=float).reshape(-1)
        th = np.array(self.theta, dtype=float).reshape(-1)
        if tt.size != X.size + 1 or th.size != X.size + 1:
            raise GeometryError("angle blocks must have length n + 1")
        for a in (X, tt, th):
            a.setflags(write=False)
        object.__setattr__(self, "rho", float(self.rho))
        object.__setattr__(self, "sigma", float(self.sigma))
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "theta_tilde", tt)
        object.__setattr__(self, "theta", th)

    @property
    def n(self) -> int:
        return self.X.size

    @property
    def m(self) -> int:
        return self.X.size + 1

    def to_real(self) -> np.ndarray:
        return np.concatenate([[self.rho], self.X.real, self.X.imag, self.theta_tilde, self.theta, [self.sigma]])

    @classmethod
    def from_real(cls, v) -> "QkPoint":
        v = np.asarray(v, dtype=float)
        n = (v.size - 4) // 4
        m = n + 1
        X = v[1:1 + n] + 1j * v[1 + n:1 + 2 * n]
        o = 1 + 2 * n
        return cls(v[0], X, v[o:o + m], v[o + m:o + 2 * m], v[-1])

    def reduced(self) -> "QkPoint":
        """Angles in ``[0, 2pi)`` using the bundle transition rule, then ``sigma`` mod ``pi``.

        Shifting ``theta -> theta + 2pi delta`` moves ``sigma`` by
        ``1/2 <delta, theta_old>`` so the result is the same point of the bundle.
        """
        two_pi = 2 * np.pi
        dt = -np.floor(self.theta_tilde / two_pi)
        dth = -np.floor(self.theta / two_pi)
        # <delta, theta> = delta~ . theta - delta . theta~
        shift = 0.5 * (dt @ self.theta - dth @ self.theta_tilde)
        return QkPoint(self.rho, self.X, self.theta_tilde + two_pi * dt, self.theta + two_pi * dth,
                       np.mod(self.sigma + shift, np.pi))


def heisenberg_action(q: QkPoint, shift) -> QkPoint:
    """Left action ``(theta', sigma') . (theta, sigma)``.

    ``shift = (theta~', theta', sigma')``; the result has
    ``sigma + sigma' + <theta', theta>/4pi`` with
    ``<a, b> = a~ . b - a . b~``.
    """
    tt, th, s = shift
    tt = np.asarray(tt, dtype=float)
    th = np.asarray(th, dtype=float)
    pair = tt @ q.theta - th @ q.theta_tilde
    return QkPoint(q.rho, q.X, q.theta_tilde + tt, q.theta + th, q.sigma + float(s) + pair / (4 * np.pi))


def heisenberg_jacobian(q: QkPoint, shift) -> np.ndarray:
    """Derivative of the left action in the slice chart."""
    tt, th, _ = shift
    n, m = q.n, q.m
    dim = 4 * m
    J = np.eye(dim)
    o = 1 + 2 * n
    J[-1, o:o + m] = -np.asarray(th, dtype=float) / (4 * np.pi)
    J[-1, o + m:o + 2 * m] = np.asarray(tt, dtype=float) / (4 * np.pi)
    return J


@dataclass
class SliceGeometry:
    """PSK and embedding data at a slice point."""

    q: QkPoint
    c: float
    K: float
    dK: np.ndarray  # holomorphic derivatives dK/dX^k
    hess: np.ndarray  # K_{k lbar}
    s: float  # z^0
    z: np.ndarray
    jac: np.ndarray  # (4m+1) x 4m

    @property
    def n(self):
        return self.q.n

    @property
    def m(self):
        return self.q.m

    @property
    def dim(self):
        return 4 * self.q.m

    def dX(self) -> np.ndarray:
        """Rows ``dX^k = da_k + i db_k`` in the slice chart (length ``4m``)."""
        n = self.n
        out = np.zeros((n, self.dim), dtype=complex)
        for k in range(n):
            out[k, 1 + k] = 1.0
            out[k, 1 + n + k] = 1j
        return out

    def dX_full(self) -> np.ndarray:
        """``dX^i`` for ``i = 0..n`` with ``dX^0 = 0``."""
        return np.vstack([np.zeros((1, self.dim), dtype=complex), self.dX()])

    def dK_real(self) -> np.ndarray:
        """``dK = 2 Re(d_k K dX^k)``."""
        return 2 * np.real(self.dK @ self.dX()) if self.n else np.zeros(self.dim)

    def dcK(self) -> np.ndarray:
        """``d^c K = i(dbar - d)K = 2 Im(d_k K dX^k)``."""
        return 2 * np.imag(self.dK @ self.dX()) if self.n else np.zeros(self.dim)

    def drho(self) -> np.ndarray:
        e = np.zeros(self.dim)
        e[0] = 1.0
        return e

    def dsigma(self) -> np.ndarray:
        e = np.zeros(self.dim)
        e[-1] = 1.0
        return e

    def dtheta(self):
        o = 1 + 2 * self.n
        eye = np.eye(self.dim)
        return eye[o:o + self.m], eye[o + self.m:o + 2 * self.m]

    def dlog_z0(self) -> np.ndarray:
        """``dz^0/z^0 = drho/(2(rho+c)) + dK/2`` (real on the slice)."""
        return self.drho() / (2 * (self.q.rho + self.c)) + 0.5 * self.dK_real()

    def torus_point(self) -> TorusPoint:
        return TorusPoint(self.z, self.q.theta_tilde, self.q.theta)


def slice_geometry(dom: CaskDomain, q: QkPoint) -> SliceGeometry:
    """Kähler potential data, ``z`` and the embedding Jacobian at ``q``."""
    if q.n != dom.n:
        raise GeometryError(f"slice point has n = {q.n}, domain has n = {dom.n}")
    c = dom.c
    if not q.rho + c > 0:
        raise GeometryError(f"rho + c = {q.rho + c} must be positive")
    K, dK, hess = kahler_potential_derivatives(dom, q.X)
    s = float(np.sqrt((q.rho + c) / (2 * np.pi) * np.exp(K)))
    z = s * np.concatenate([[1.0], q.X])
    n, m = q.n, q.m
    # ds/d(rho, a, b)
    ds = np.zeros(1 + 2 * n)
    ds[0] = s / (2 * (q.rho + c))
    ds[1:1 + n] = s * np.real(dK)  # (s/2) * 2 Re d_k K
    ds[1 + n:] = -s * np.imag(dK)  # (s/2) * (-2 Im d_k K)
    a, b = q.X.real, q.X.imag
    J = np.zeros((4 * m + 1, 4 * m))
    J[0, :1 + 2 * n] = ds
    for k in range(n):
        J[1 + k, :1 + 2 * n] = a[k] * ds
        J[1 + k, 1 + k] += s
        J[m + 1 + k, :1 + 2 * n] = b[k] * ds
        J[m + 1 + k, 1 + n + k] += s
    # angles and sigma map identically
    J[2 * m:, 1 + 2 * n:] = np.eye(2 * m + 1)
    return SliceGeometry(q, c, K, dK, hess, s, z, J)


def embed(dom: CaskDomain, q: QkPoint) -> np.ndarray:
    """Ambient coordinates ``(x, u, theta~, theta, sigma)`` of a slice point."""
    sg = slice_geometry(dom, q)
    return np.concatenate([sg.z.real, sg.z.imag, q.theta_tilde, q.theta, [q.sigma]])


def slice_from_torus(dom: CaskDomain, y) -> QkPoint:
    """Inverse of :func:`embed` for ambient points with ``Arg z^0 = 0``."""
    y = np.asarray(y, dtype=float)
    m = dom.m
    z = y[:m] + 1j * y[m:2 * m]
    if abs(z[0].imag) > 1e-12 * max(abs(z[0]), 1.0) or not z[0].real > 0:
        raise GeometryError("point is not on the slice Arg z^0 = 0")
    rho = 2 * np.pi * cask_potential_r2(dom, z) - dom.c
    return QkPoint(rho, z[1:] / z[0], y[2 * m:3 * m], y[3 * m:4 * m], y[4 * m])
