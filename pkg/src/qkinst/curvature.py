"""Finite-difference Ricci curvature of a metric given as a matrix-valued function."""
from __future__ import annotations

from typing import Callable

import numpy as np

__all__ = ["metric_derivatives", "christoffel", "ricci_fd", "einstein_fit"]


def metric_derivatives(metric_fn: Callable, x, h: float = 1e-3):
    """Return ``(g, dg, ddg)`` with ``dg[a] = d_a g`` and ``ddg[a, b] = d_a d_b g``."""
    x = np.asarray(x, dtype=float)
    d = x.size
    g0 = np.asarray(metric_fn(x))
    dg = np.zeros((d,) + g0.shape)
    ddg = np.zeros((d, d) + g0.shape)
    E = np.eye(d) * h
    plus = [np.asarray(metric_fn(x + E[a])) for a in range(d)]
    minus = [np.asarray(metric_fn(x - E[a])) for a in range(d)]
    for a in range(d):
        dg[a] = (plus[a] - minus[a]) / (2 * h)
        ddg[a, a] = (plus[a] - 2 * g0 + minus[a]) / h ** 2
        for b in range(a + 1, d):
            pp = metric_fn(x + E[a] + E[b])
            pm = metric_fn(x + E[a] - E[b])
            mp = metric_fn(x - E[a] + E[b])
            mm = metric_fn(x - E[a] - E[b])
            ddg[a, b] = ddg[b, a] = (pp - pm - mp + mm) / (4 * h * h)
    return g0, dg, ddg


def christoffel(g, dg) -> np.ndarray:
    """``Gamma[a, b, c] = Gamma^a_{bc}``."""
    gi = np.linalg.inv(g)
    # lowered: Gamma_{d,bc} = 1/2 (d_b g_dc + d_c g_db - d_d g_bc)
    low = 0.5 * (np.einsum("bdc->dbc", dg) + np.einsum("cdb->dbc", dg) - dg)
    return np.einsum("ad,dbc->abc", gi, low)


def ricci_fd(metric_fn: Callable, x, h: float = 1e-3) -> np.ndarray:
    """Ricci tensor ``R_bd = d_a G^a_bd - d_d G^a_ab + G^a_ae G^e_bd - G^a_de G^e_ab``."""
    g, dg, ddg = metric_derivatives(metric_fn, x, h)
    gi = np.linalg.inv(g)
    G = christoffel(g, dg)
    # d_e Gamma^a_bc from the product rule
    dgi = -np.einsum("ij,ejk,kl->eil", gi, dg, gi)
    low = 0.5 * (np.einsum("bdc->dbc", dg) + np.einsum("cdb->dbc", dg) - dg)
    dlow = 0.5 * (np.einsum("ebdc->edbc", ddg) + np.einsum("ecdb->edbc", ddg) - ddg)
    dG = np.einsum("ead,dbc->eabc", dgi, low) + np.einsum("ad,edbc->eabc", gi, dlow)
    ric = (np.einsum("aabd->bd", dG) - np.einsum("daab->bd", dG)
           + np.einsum("aae,ebd->bd", G, G) - np.einsum("ade,eab->bd", G, G))
    return 0.5 * (ric + ric.T)


def einstein_fit(ric, g):
    """Least-squares ``lambda`` in ``Ric = lambda g`` and the relative residual."""
    lam = float(np.sum(ric * g) / np.sum(g * g))
    rel = float(np.linalg.norm(ric - lam * g) / np.linalg.norm(ric))
    return lam, rel
