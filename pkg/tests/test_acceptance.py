"""End-to-end acceptance sweeps on the complex hyperbolic family ``n = 0, 1, 2``.

Each test prints ``criterion k: PASS/FAIL`` and the summary is repeated at
the end of the pytest run.
"""
from pathlib import Path

import numpy as np
import pytest

from qkinst.bundle import IN_NPLUS
from qkinst.cask import chn_domain
from qkinst.chart import QkPoint
from qkinst.config import RunConfig, Sweep, load_config
from qkinst.coord import qk_metric_coord
from qkinst.curvature import einstein_fit, ricci_fd
from qkinst.lattice import BpsStructure
from qkinst.suites import run_suite

NS = (0, 1, 2)
POINTS = 100
K = 0.25
TIME_LIMIT = 60.0
CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def gamma0(n):
    return tuple([0] * (n + 1) + [1] + [0] * n)


def config(n, bps=True, c=0.0, seed=1, **sweep):
    sw = dict(count=POINTS, seed=seed, abs_z0=(0.4, 1.5), rho=(1.0, 10.0))
    sw.update(sweep)
    return RunConfig(n, "chn", c, K, ((gamma0(n), 1),) if bps else (), sweep=Sweep(**sw))


def evaluated(rep):
    return [r for r in rep.records if r["status"] != "error"]


def worst(reps, key):
    return max(rep.worst(key) for rep in reps)


def all_within(reps, key, tol):
    vals = [r["values"][key] for rep in reps for r in evaluated(rep) if key in r["values"]]
    return len(vals) > 0 and max(vals) < tol


def sized(reps, need=POINTS):
    return all(len(evaluated(r)) >= need and r.elapsed < TIME_LIMIT for r in reps)


@pytest.fixture(scope="module")
def hk_reports():
    return [run_suite(config(n), "hk") for n in NS]


@pytest.fixture(scope="module")
def qk_reports():
    return [run_suite(config(n), "qk") for n in NS]


@pytest.fixture(scope="module")
def fs_reports():
    return [run_suite(config(n, bps=False, c=0.3), "compare") for n in NS]


@pytest.fixture(scope="module")
def cross_reports():
    return [run_suite(config(n, c=0.2), "compare") for n in NS]


def test_criterion_1_hk_algebra(hk_reports, criterion):
    ok = sized(hk_reports) and all_within(hk_reports, "algebra", 1e-9)
    assert criterion(1, ok, f"max residual {worst(hk_reports, 'algebra'):.2e} (tol 1e-9)")


def test_criterion_2_closedness(hk_reports, criterion):
    ctrl = min(r.checks["control_drop_A"][1] for r in hk_reports)
    ok = sized(hk_reports) and all_within(hk_reports, "closed", 1e-6) and ctrl > 1e-3
    assert criterion(2, ok, f"max d-residual {worst(hk_reports, 'closed'):.2e} (tol 1e-6); "
                            f"drop-A control min over n {ctrl:.2e} (> 1e-3)")


def test_criterion_3_signature(hk_reports, criterion):
    per_n, ok = [], True
    for n, rep in zip(NS, hk_reports):
        sampled = [r for r in evaluated(rep) if r["values"]["abs_z0"] >= 2 * K]
        per_n.append(len(sampled))
        ok &= len(sampled) > 0 and all(r["label"] == f"sig4,{4 * n}" for r in sampled)
    assert criterion(3, ok, f"(4, 4n) at all sampled |z0| >= 2K points, counts {per_n}")


def test_criterion_4_rotating_action(hk_reports, criterion):
    t = 1e-2
    ok = sized(hk_reports) and all_within(hk_reports, "rotate", 1e-6 * t)
    assert criterion(4, ok, f"max pullback residual {worst(hk_reports, 'rotate'):.2e} (tol 1e-8)")


def test_criterion_5_moment_map(hk_reports, criterion):
    ok = all_within(hk_reports, "moment_df", 1e-6) and all_within(hk_reports, "moment_ff1", 1e-9)
    assert criterion(5, ok and sized(hk_reports), f"df {worst(hk_reports, 'moment_df'):.2e} (tol 1e-6), "
                                                  f"f - f1 {worst(hk_reports, 'moment_ff1'):.2e} (tol 1e-9)")


def test_criterion_6_curvature_identity(hk_reports, criterion):
    ok = sized(hk_reports) and all_within(hk_reports, "curvature", 1e-6)
    assert criterion(6, ok, f"max residual {worst(hk_reports, 'curvature'):.2e} (tol 1e-6)")


def test_criterion_7_fs_degeneration(fs_reports, criterion):
    ok = sized(fs_reports) and all_within(fs_reports, "fs_limit", 1e-12)
    assert criterion(7, ok, f"max |coord - FS| {worst(fs_reports, 'fs_limit'):.2e} (tol 1e-12)")


def test_criterion_8_cross_path(cross_reports, criterion):
    counts = [sum(1 for r in evaluated(rep) if r["label"] == IN_NPLUS) for rep in cross_reports]
    ok = min(counts) >= 50 and all_within(cross_reports, "cross_path", 1e-8) and sized(cross_reports)
    assert criterion(8, ok, f"max |global - coord| {worst(cross_reports, 'cross_path'):.2e} (tol 1e-8), "
                            f"N+ points per n {counts}")


def test_criterion_9_positivity(qk_reports, criterion):
    inside = [r for rep in qk_reports for r in evaluated(rep) if r["label"] == IN_NPLUS]
    pos = len(inside) > 0 and all(r["values"]["min_eig"] > 0 for r in inside)
    off = run_suite(load_config(CONFIGS / "chn1_negative_c.yaml").replace(sweep=Sweep(POINTS, 0, rho=(1.1, 1.9))), "qk")
    outside = [r for r in evaluated(off) if r["label"] != IN_NPLUS]
    indef = sum(1 for r in outside if r["indefinite"])
    ok = pos and indef > 0 and off.elapsed < TIME_LIMIT
    assert criterion(9, ok, f"{len(inside)} N+ points positive; {indef}/{len(outside)} off-N+ points indefinite")


def test_criterion_10_heisenberg(qk_reports, criterion):
    keys = ("iso_sigma", "iso_theta_tilde", "iso_theta0")
    ok = sized(qk_reports) and all(all_within(qk_reports, k, 1e-12) for k in keys)
    ctrl = min(rep.checks["control_theta0_half"][1] for rep in qk_reports)
    ok = ok and ctrl > 1e-6
    res = max(worst(qk_reports, k) for k in keys)
    assert criterion(10, ok, f"max isometry residual {res:.2e} (tol 1e-12); half-period control min {ctrl:.2e} (> 1e-6)")


def test_criterion_11_darboux(criterion):
    rep = run_suite(RunConfig(0, "chn", sweep=Sweep(count=1000, seed=11)), "darboux")
    ranks = sorted({int(r["values"]["rank"]) for r in rep.records})
    ok = rep.passed == 1000 and ranks == [2, 4, 6]
    assert criterion(11, ok, f"{rep.passed}/1000 exact postconditions, ranks {ranks}")


def test_criterion_12_bessel(criterion):
    rep = run_suite(RunConfig(0, "chn"), "bessel")
    err = max(rep.worst("rel_k0"), rep.worst("rel_k1"))
    ok = rep.ok and rep.passed >= 40
    assert criterion(12, ok, f"{rep.passed} abscissae, max relative error {err:.2e} (tol 1e-12)")


def test_criterion_13_einstein(criterion):
    dom = chn_domain(0, c=0.3, K=K)
    bps = BpsStructure([((0, 1), 1)])
    pts = [QkPoint(2.0, [], [0.3], [0.7], 0.2), QkPoint(4.5, [], [1.9], [5.1], 1.3),
           QkPoint(8.0, [], [4.0], [2.5], 2.9)]

    def metric(x):
        return qk_metric_coord(dom, bps, QkPoint.from_real(x)).matrix

    fits = [einstein_fit(ricci_fd(metric, q.to_real()), metric(q.to_real())) for q in pts]
    ok = all(lam < 0 and rel < 5e-2 for lam, rel in fits)
    desc = ", ".join(f"lambda {lam:.4f} rel {rel:.1e}" for lam, rel in fits)
    assert criterion(13, ok, f"{desc} (tol 5e-2)")
