"""Command-line entry point: ``qkinst <command> --config run.yaml``."""
from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys

import numpy as np

from .bundle import bundle_data, region_classify
from .cask import GeometryError
from .chart import slice_geometry
from .config import ConfigError, RunConfig, load_config
from .coord import qk_metric_coord
from .hk import SeriesError
from .suites import run_suite, sample_slice_point

SUITE_COMMANDS = {
    "verify-hk": ("hk",),
    "verify-qk": ("qk",),
    "compare": ("compare",),
    "sweep": ("hk", "qk", "compare"),
    "darboux": ("darboux",),
    "bessel-selftest": ("bessel",),
}
COMMANDS = ("eval",) + tuple(SUITE_COMMANDS)
# commands that run without a config file
DEFAULT_CONFIG = RunConfig(n=0, prepotential="chn")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="qkinst", description="Instanton-corrected HK/QK metric toolkit")
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--config", help="YAML run configuration")
    ap.add_argument("--seed", type=int, help="override sweep.seed")
    ap.add_argument("--tol", type=float, help="override numerics.tol (series truncation)")
    ap.add_argument("--points", type=int, help="override sweep.count")
    ap.add_argument("--format", choices=("table", "records"), default="table")
    ap.add_argument("--workers", type=int, help="worker processes for sweeps")
    ap.add_argument("--no-timing", action="store_true", help="omit timing lines (for diffable output)")
    return ap


def _load(args) -> RunConfig:
    if args.config:
        cfg = load_config(args.config)
    elif args.command in ("darboux", "bessel-selftest"):
        cfg = DEFAULT_CONFIG
    else:
        raise ConfigError(f"command {args.command!r} needs --config")
    sweep, num = cfg.sweep, cfg.numerics
    if args.seed is not None:
        sweep = dataclasses.replace(sweep, seed=args.seed)
    if args.points is not None:
        sweep = dataclasses.replace(sweep, count=args.points)
    if args.workers is not None:
        sweep = dataclasses.replace(sweep, workers=args.workers)
    if args.tol is not None:
        num = dataclasses.replace(num, tol=args.tol)
    return cfg.replace(sweep=sweep, numerics=num)


def _eval(cfg: RunConfig, points: int, fmt: str, out) -> bool:
    dom, bps = cfg.domain(), cfg.bps_structure()
    ok = True
    for i in range(points):
        q = sample_slice_point(cfg, i)
        try:
            sg = slice_geometry(dom, q)
            bd = bundle_data(dom, bps, sg.torus_point(), q.sigma, cfg.numerics.tol)
            label, (f, f1, gxx) = region_classify(bd, cfg.numerics.vanish_threshold)
            G = qk_metric_coord(dom, bps, q, cfg.numerics.tol)
        except (GeometryError, SeriesError, ArithmeticError) as exc:
            ok = False
            rec = {"index": i, "error": f"{type(exc).__name__}: {exc}"}
            out.write((json.dumps(rec) if fmt == "records" else f"# point {i}: {rec['error']}") + "\n")
            continue
        ev = G.eigenvalues
        if fmt == "records":
            rec = {"index": i, "point": q.to_real().tolist(), "region": label, "f": f, "f1": f1,
                   "eigenvalues": ev.tolist(), "metric": G.matrix.tolist()}
            out.write(json.dumps(rec) + "\n")
        else:
            out.write(f"# point {i}: rho={q.rho:.6g} X={np.round(q.X, 6).tolist()} region={label}\n")
            out.write(f"# f={f:.6g} f1={f1:.6g} signature={G.signature()}\n")
            out.write("# chart: " + G.frame + "\n")
            for row in G.matrix:
                out.write(" ".join(f"{v: .6e}" for v in row) + "\n")
            out.write("# eigenvalues: " + " ".join(f"{v:.6e}" for v in ev) + "\n")
    return ok


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        cfg = _load(args)
    except (ConfigError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    out = sys.stdout
    if args.command == "eval":
        return 0 if _eval(cfg, args.points or 1, args.format, out) else 1
    all_ok = True
    for suite in SUITE_COMMANDS[args.command]:
        rep = run_suite(cfg, suite)
        out.write(rep.render(args.format, timing=not args.no_timing))
        all_ok &= rep.ok
    return 0 if all_ok else 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
