"""Invariant suites driven by a :class:`RunConfig`.

Each suite evaluates a list of per-point checks, then a few suite-level
checks (negative controls, "at least one indefinite point", ...). Module
errors at a point are recorded and counted as skips, never fatal.
Sampling is counter based (Philox keyed by ``(seed, index)``), so a point
depends only on its index and shards can run in any order.
"""
from __future__ import annotations

import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from importlib import resources
from typing import Callable, Optional

import numpy as np

from .bessel import k0_k1
from .bundle import (
    IN_NPLUS,
    OUTSIDE,
    bundle_data,
    connection_eta,
    df_analytic,
    region_classify,
    qk_metric_global,
)
from .cask import GeometryError, TorusPoint
from .chart import QkPoint, slice_geometry
from .config import RunConfig
from .coord import fs_metric, isometry_residual, qk_metric_coord
from .hk import (
    SeriesError,
    complex_structures,
    exterior_derivative_residual,
    jacobian_fd,
    hk_metric,
    hk_point,
    kahler_forms,
    metric_from_forms,
    pullback,
    rotating_flow,
)
from .lattice import ChargeLattice, LatticeError, charge_gcds, complete_darboux_basis, darboux_coordinates, gram

__all__ = ["SUITES", "Report", "run_suite", "sample_torus_point", "sample_slice_point", "point_rng",
           "random_darboux_case", "bessel_oracle"]

SUITES = ("hk", "qk", "compare", "darboux", "bessel")
PER_POINT_ERRORS = (GeometryError, SeriesError, LatticeError, ArithmeticError, np.linalg.LinAlgError)

# acceptance tolerances
TOL_ALGEBRA = 1e-9
TOL_CLOSED = 1e-6
CONTROL_CLOSED = 1e-3
TOL_ROTATE = 1e-6
ROTATE_T = 1e-2
TOL_DF = 1e-6
TOL_FF1 = 1e-9
TOL_CURV = 1e-6
TOL_FS = 1e-12
TOL_CROSS = 1e-8
TOL_ISO = 1e-12
CONTROL_ISO = 1e-6
TOL_BESSEL = 1e-12


# ---------------------------------------------------------------------------
# sampling

def point_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=[int(seed), int(index)]))


def _sample_X(cfg: RunConfig, rng) -> np.ndarray:
    n = cfg.n
    if n == 0:
        return np.zeros(0, dtype=complex)
    if cfg.prepotential == "chn":
        # uniform radius in a ball of radius x_radius < 1
        r = cfg.sweep.x_radius * np.sqrt(rng.uniform(size=n) / n)
        return r * np.exp(1j * rng.uniform(0, 2 * np.pi, size=n))
    if cfg.prepotential[0] == "plugin" and cfg.prepotential[1] == "cubic":
        centre = np.array([-1j])
    else:
        centre = np.zeros(n, dtype=complex)
    box = cfg.sweep.x_radius * (rng.uniform(-1, 1, size=n) + 1j * rng.uniform(-1, 1, size=n))
    return centre + box


def sample_torus_point(cfg: RunConfig, index: int) -> TorusPoint:
    rng = point_rng(cfg.sweep.seed, index)
    lo, hi = cfg.sweep.abs_z0
    z0 = rng.uniform(lo, hi) * np.exp(1j * rng.uniform(0, 2 * np.pi))
    X = _sample_X(cfg, rng)
    m = cfg.m
    tt = rng.uniform(0, 2 * np.pi, size=m)
    th = rng.uniform(0, 2 * np.pi, size=m)
    return TorusPoint(z0 * np.concatenate([[1.0], X]), tt, th)


def sample_slice_point(cfg: RunConfig, index: int) -> QkPoint:
    rng = point_rng(cfg.sweep.seed, index)
    lo, hi = cfg.sweep.rho
    rho = rng.uniform(lo, hi)
    X = _sample_X(cfg, rng)
    m = cfg.m
    tt = rng.uniform(0, 2 * np.pi, size=m)
    th = rng.uniform(0, 2 * np.pi, size=m)
    return QkPoint(rho, X, tt, th, rng.uniform(0, np.pi))


# ---------------------------------------------------------------------------
# report

@dataclass
class Report:
    suite: str
    records: list = field(default_factory=list)
    checks: dict = field(default_factory=dict)  # suite-level name -> (ok, value)
    elapsed: float = 0.0

    def count(self, status: str) -> int:
        return sum(1 for r in self.records if r["status"] == status)

    @property
    def passed(self) -> int:
        return self.count("pass")

    @property
    def failed(self) -> int:
        return self.count("fail")

    @property
    def skipped(self) -> int:
        return self.count("error")

    @property
    def ok(self) -> bool:
        return self.failed == 0 and self.passed > 0 and all(ok for ok, _ in self.checks.values())

    def worst(self, key: str) -> float:
        vals = [r["values"][key] for r in self.records if key in r.get("values", {})]
        return max(vals) if vals else float("nan")

    def summary(self) -> dict:
        return {"suite": self.suite, "ok": self.ok, "passed": self.passed, "failed": self.failed,
                "skipped": self.skipped,
                "checks": {k: {"ok": ok, "value": v} for k, (ok, v) in self.checks.items()}}

    def body_lines(self, fmt: str = "table") -> list[str]:
        """Report body without timing; deterministic for a fixed config."""
        if fmt == "records":
            lines = [json.dumps(r, sort_keys=True) for r in self.records]
            lines.append(json.dumps(self.summary(), sort_keys=True))
            return lines
        keys = sorted({k for r in self.records for k in r.get("values", {})})
        head = ["idx", "status", "label"] + keys
        rows = [head]
        for r in self.records:
            vals = r.get("values", {})
            rows.append([str(r["index"]), r["status"], r.get("label", "")]
                        + [f"{vals[k]:.3e}" if k in vals else "-" for k in keys])
        widths = [max(len(row[i]) for row in rows) for i in range(len(head))]
        lines = ["  ".join(c.ljust(w) for c, w in zip(row, widths)).rstrip() for row in rows]
        for r in self.records:
            if r.get("error"):
                lines.append(f"# point {r['index']}: {r['error']}")
        for k, (ok, v) in self.checks.items():
            lines.append(f"# check {k}: {'PASS' if ok else 'FAIL'} ({v:.3e})")
        lines.append(f"# suite {self.suite}: {'PASS' if self.ok else 'FAIL'} "
                     f"passed={self.passed} failed={self.failed} skipped={self.skipped}")
        return lines

    def render(self, fmt: str = "table", timing: bool = True) -> str:
        lines = self.body_lines(fmt)
        if timing:
            lines.append(json.dumps({"elapsed_s": round(self.elapsed, 3)}) if fmt == "records"
                         else f"# elapsed {self.elapsed:.2f} s")
        return "\n".join(lines) + "\n"


def _record(index, checks: dict, values: dict, label: str = "", extra: Optional[dict] = None) -> dict:
    rec = {"index": index, "status": "pass" if all(checks.values()) else "fail", "label": label,
           "values": {k: float(v) for k, v in values.items()}}
    failed = [k for k, ok in checks.items() if not ok]
    if failed:
        rec["failed"] = failed
    if extra:
        rec.update(extra)
    return rec


# ---------------------------------------------------------------------------
# per-point evaluators

def _hk_eval(cfg: RunConfig, index: int) -> dict:
    dom, bps, num = cfg.domain(), cfg.bps_structure(), cfg.numerics
    p = sample_torus_point(cfg, index)
    q = p.to_real()
    m = cfg.m
    hp = hk_point(dom, bps, p, num.tol, num.n_max)
    smin = float(np.linalg.svd(hp.M, compute_uv=False).min())
    if smin <= num.compat_threshold:
        raise GeometryError(f"incompatible point (smallest singular value of M {smin:.3g})")
    forms = kahler_forms(hp)
    I = complex_structures(forms)
    g = hk_metric(hp).matrix
    eye = np.eye(4 * m)
    alg = max(float(np.abs(Ia @ Ia + eye).max()) for Ia in I)
    alg = max(alg, *(float(np.abs(I[a] @ I[(a + 1) % 3] - I[(a + 2) % 3]).max()) for a in range(3)))
    alg = max(alg, *(float(np.abs(g - metric_from_forms(forms[a], I[a])).max()) for a in range(3)))

    def field_(x, drop=False):
        return np.array(kahler_forms(hk_point(dom, bps, TorusPoint.from_real(x), num.tol, num.n_max, drop)))

    closed = exterior_derivative_residual(field_, q, num.h)
    values = {"algebra": alg, "closed": closed}
    checks = {"algebra": alg < TOL_ALGEBRA, "closed": closed < TOL_CLOSED}
    if not bps.is_empty:
        values["control_drop_A"] = exterior_derivative_residual(lambda x: field_(x, True), q, num.h)

    q1, J = rotating_flow(m, q, ROTATE_T)
    hp1 = hk_point(dom, bps, TorusPoint.from_real(q1), num.tol, num.n_max)
    f1 = kahler_forms(hp1)
    hol0, hol1 = forms[0] + 1j * forms[1], f1[0] + 1j * f1[1]
    rot = max(float(np.abs(pullback(hol1, J) - np.exp(1j * ROTATE_T) * hol0).max()),
              float(np.abs(pullback(f1[2], J) - forms[2]).max()),
              float(np.abs(pullback(hk_metric(hp1).matrix, J) - g).max()))
    values["rotate"] = rot
    checks["rotate"] = rot < TOL_ROTATE * ROTATE_T

    bd = bundle_data(dom, bps, p, 0.0, num.tol, hp)
    dim = 4 * m

    def bundle_fields(x):
        # eta (dsigma dropped), iota_V g and f from one evaluation
        b = bundle_data(dom, bps, TorusPoint.from_real(x), 0.0, num.tol)
        return np.concatenate([connection_eta(b)[:dim], b.iota_V(b.g), [b.moments.f]])

    D = jacobian_fd(bundle_fields, q, num.h)
    dferr = float(np.abs(D[:, -1] - df_analytic(bd)).max())
    mo = bd.moments
    fferr = abs((mo.f - mo.f1) - 4 * np.pi * float(bd.V @ g @ bd.V))
    values.update(moment_df=dferr, moment_ff1=fferr)
    checks.update(moment_df=dferr < TOL_DF, moment_ff1=fferr < TOL_FF1)

    deta = D[:, :dim] - D[:, :dim].T
    divg = D[:, dim:2 * dim] - D[:, dim:2 * dim].T
    cerr = float(np.abs(deta - 2 * np.pi * (bd.omega[2] - divg)).max())
    values["curvature"] = cerr
    checks["curvature"] = cerr < TOL_CURV

    label = "compatible"
    ev = np.linalg.eigvalsh(g)
    sig = (int(np.sum(ev > 0)), int(np.sum(ev < 0)))
    if dom.K is not None and abs(p.z[0]) >= 2 * dom.K:
        checks["signature"] = sig == (4, 4 * cfg.n)
        label = f"sig{sig[0]},{sig[1]}"
    values["abs_z0"] = abs(p.z[0])
    values["smin_M"] = smin
    return _record(index, checks, values, label)


def _d0(cfg: RunConfig):
    return charge_gcds(cfg.bps_structure(), cfg.m)[0]


def _qk_eval(cfg: RunConfig, index: int) -> dict:
    dom, bps, num = cfg.domain(), cfg.bps_structure(), cfg.numerics
    q = sample_slice_point(cfg, index)
    sg = slice_geometry(dom, q)
    bd = bundle_data(dom, bps, sg.torus_point(), q.sigma, num.tol)
    label, (f, f1, gxx) = region_classify(bd, num.vanish_threshold)
    if label == OUTSIDE:
        raise GeometryError(f"point outside N' (f = {f:.3g}, f1 = {f1:.3g}, g(X,X) = {gxx:.3g})")
    G = qk_metric_coord(dom, bps, q, num.tol).matrix
    ev = np.linalg.eigvalsh(G)
    checks, values = {}, {"f": f, "f1": f1, "min_eig": ev[0], "max_eig": ev[-1]}
    if label == IN_NPLUS:
        checks["positive"] = bool(ev[0] > 0)
    extra = {"indefinite": bool(ev[0] < 0 < ev[-1])}
    rng = point_rng(cfg.sweep.seed, 10 ** 9 + index)
    m = cfg.m
    d0 = _d0(cfg)
    e0 = np.zeros(m)
    e0[0] = 2 * np.pi / (d0 or 1)
    shifts = {
        "iso_sigma": (np.zeros(m), np.zeros(m), 0.3),
        "iso_theta_tilde": (rng.uniform(-3, 3, size=m), np.zeros(m), 0.0),
        "iso_theta0": (np.zeros(m), e0, 0.0),
    }
    for k, sh in shifts.items():
        r = isometry_residual(dom, bps, q, sh, num.tol)
        values[k] = r
        checks[k] = r < TOL_ISO
    if d0 is not None:
        values["control_theta0_half"] = isometry_residual(dom, bps, q, (np.zeros(m), e0 / 2, 0.0), num.tol)
    return _record(index, checks, values, label, extra)


def _compare_eval(cfg: RunConfig, index: int) -> dict:
    dom, bps, num = cfg.domain(), cfg.bps_structure(), cfg.numerics
    q = sample_slice_point(cfg, index)
    sg = slice_geometry(dom, q)
    bd = bundle_data(dom, bps, sg.torus_point(), q.sigma, num.tol)
    label, _ = region_classify(bd, num.vanish_threshold)
    if label == OUTSIDE:
        raise GeometryError("point outside N'")
    Gc = qk_metric_coord(dom, bps, q, num.tol).matrix
    Gg = qk_metric_global(dom, bps, q, num.tol).matrix
    cross = float(np.abs(Gc - Gg).max())
    values = {"cross_path": cross}
    checks = {"cross_path": cross < TOL_CROSS}
    if bps.is_empty:
        fs = float(np.abs(Gc - fs_metric(dom, q).matrix).max())
        values["fs_limit"] = fs
        checks["fs_limit"] = fs < TOL_FS
    return _record(index, checks, values, label)


def random_unimodular(rng: np.random.Generator, dim: int, steps: int = 12):
    """Random ``U`` in ``GL(dim, Z)`` and its inverse, as lists of Python ints."""
    U = [[int(i == j) for j in range(dim)] for i in range(dim)]
    Ui = [row[:] for row in U]
    for _ in range(steps):
        i, j = (int(v) for v in rng.choice(dim, size=2, replace=False))
        k = int(rng.integers(-3, 4)) or 1
        # row_i += k row_j on U; column_j -= k column_i on U^{-1}
        U[i] = [a + k * b for a, b in zip(U[i], U[j])]
        for row in Ui:
            row[j] -= k * row[i]
    if rng.uniform() < 0.5:
        i = int(rng.integers(dim))
        U[i] = [-a for a in U[i]]
        for row in Ui:
            row[i] = -row[i]
    return U, Ui


def random_darboux_case(rng: np.random.Generator):
    """Random Darboux-admitting lattice (rank 2..6) and an isotropic support."""
    m = int(rng.integers(1, 4))
    dim = 2 * m
    U, Ui = random_unimodular(rng, dim)
    J = ChargeLattice.standard(m).pairing
    # P = U^T J U, so the columns of U^{-1} form a Darboux basis for P
    JU = [[sum(J[a][c] * U[c][b] for c in range(dim)) for b in range(dim)] for a in range(dim)]
    P = [[sum(U[c][a] * JU[c][b] for c in range(dim)) for b in range(dim)] for a in range(dim)]
    lattice = ChargeLattice(dim, tuple(tuple(r) for r in P))
    cols = [[Ui[r][c] for r in range(dim)] for c in range(dim)]
    gam = cols[m:]
    size = int(rng.integers(0, m + 1))
    support = []
    for _ in range(size):
        coef = [int(v) for v in rng.integers(-3, 4, size=m)]
        if not any(coef):
            coef[0] = 1
        support.append(tuple(sum(c * g[k] for c, g in zip(coef, gam)) for k in range(dim)))
    return lattice, support


def check_darboux(lattice: ChargeLattice, support, basis) -> bool:
    """Exact postconditions: standard Gram matrix and support in the gamma span."""
    m = lattice.m
    if gram(lattice, basis) != [list(r) for r in ChargeLattice.standard(m).pairing]:
        return False
    for s in support:
        coeffs = darboux_coordinates(lattice, basis, s)
        if any(coeffs[:m]):
            return False
    return True


def _darboux_eval(cfg: RunConfig, index: int) -> dict:
    rng = point_rng(cfg.sweep.seed, index)
    lattice, support = random_darboux_case(rng)
    basis = complete_darboux_basis(lattice, support)
    ok = check_darboux(lattice, support, basis)
    return _record(index, {"darboux": ok}, {"rank": lattice.rank, "support": len(support)})


def bessel_oracle():
    """Frozen ``(x, K0, K1)`` reference rows."""
    text = resources.files("qkinst").joinpath("data/bessel_oracle.json").read_text()
    rows = json.loads(text)["points"]
    return [(float(r["x"]), float(r["k0"]), float(r["k1"])) for r in rows]


def _bessel_eval(cfg: RunConfig, index: int) -> dict:
    x, r0, r1 = bessel_oracle()[index]
    k0, k1 = k0_k1(x)
    e0, e1 = abs(k0 / r0 - 1), abs(k1 / r1 - 1)
    return _record(index, {"k0": e0 < TOL_BESSEL, "k1": e1 < TOL_BESSEL}, {"x": x, "rel_k0": e0, "rel_k1": e1})


_EVALUATORS: dict[str, Callable] = {
    "hk": _hk_eval,
    "qk": _qk_eval,
    "compare": _compare_eval,
    "darboux": _darboux_eval,
    "bessel": _bessel_eval,
}


def _safe_eval(args):
    cfg, suite, index = args
    try:
        return _EVALUATORS[suite](cfg, index)
    except PER_POINT_ERRORS as exc:
        return {"index": index, "status": "error", "label": "", "values": {},
                "error": f"{type(exc).__name__}: {exc}"}


def _suite_checks(cfg: RunConfig, suite: str, records: list) -> dict:
    out = {}

    def vals(key):
        return [r["values"][key] for r in records if key in r["values"]]

    if suite == "hk" and not cfg.bps_structure().is_empty:
        v = vals("control_drop_A")
        if v:
            out["control_drop_A"] = (max(v) > CONTROL_CLOSED, max(v))
    if suite == "qk":
        v = vals("control_theta0_half")
        if v and not cfg.bps_structure().is_empty:
            out["control_theta0_half"] = (max(v) > CONTROL_ISO, max(v))
        off = [r for r in records if r["status"] != "error" and r["label"] != IN_NPLUS]
        if off and cfg.n >= 1:
            n_indef = sum(1 for r in off if r.get("indefinite"))
            out["indefinite_off_Nplus"] = (n_indef > 0, float(n_indef))
        elif off:
            # n = 0: with f, f1 > 0 every block flips sign together (negative definite)
            n_bad = sum(1 for r in off if r["values"]["min_eig"] < 0)
            out["not_positive_off_Nplus"] = (n_bad > 0, float(n_bad))
    return out


def run_suite(cfg: RunConfig, suite: str, points: Optional[int] = None, workers: Optional[int] = None) -> Report:
    """Run one suite over the configured sweep; results are merged in index order."""
    if suite not in _EVALUATORS:
        raise ValueError(f"unknown suite {suite!r}; choose from {SUITES}")
    count = points if points is not None else cfg.sweep.count
    if suite == "bessel":
        count = len(bessel_oracle())
    workers = workers or cfg.sweep.workers
    t0 = time.perf_counter()
    jobs = [(cfg, suite, i) for i in range(count)]
    if workers > 1 and count > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            records = list(ex.map(_safe_eval, jobs, chunksize=max(1, count // (4 * workers))))
    else:
        records = [_safe_eval(j) for j in jobs]
    rep = Report(suite, records, _suite_checks(cfg, suite, records))
    rep.elapsed = time.perf_counter() - t0
    return rep
