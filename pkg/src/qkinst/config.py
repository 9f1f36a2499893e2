"""Run configuration: a small YAML schema with line-numbered diagnostics.

Example (complex hyperbolic space, one mutually local charge pair)::

    geometry:
      n: 1
      prepotential: chn
      c: 0.0
      K: 5.0
    bps:
      - {charge: [0, 0, 1, 0], omega: 1}
    numerics: {tol: 1.0e-15}
    sweep: {count: 100, seed: 0}

``prepotential`` is ``chn``, ``{quadratic: [2(n+1)^2 reals]}`` (real parts
row-major, then imaginary parts) or ``{plugin: name, params: {...}}``.
"""
from __future__ import annotations

import dataclasses
import logging
from dataclasses import dataclass, field
from typing import Any, Optional

import numpy as np
import yaml

from .cask import PLUGINS, CaskDomain, Quadratic, chn_domain
from .hk import DEFAULT_NMAX, DEFAULT_THRESHOLD, DEFAULT_TOL
from .lattice import BpsStructure, ChargeLattice, LatticeError

log = logging.getLogger(__name__)

__all__ = ["ConfigError", "Numerics", "Sweep", "RunConfig", "parse_config", "serialize_config", "load_config"]


class ConfigError(ValueError):
    """Schema violation; ``line`` is 1-based when known."""

    def __init__(self, message: str, path: str = "", line: Optional[int] = None):
        self.path = path
        self.line = line
        where = f"line {line}: " if line else ""
        field_ = f"{path}: " if path else ""
        super().__init__(f"{where}{field_}{message}")


@dataclass(frozen=True)
class Numerics:
    tol: float = DEFAULT_TOL
    h: float = 1e-4
    n_max: int = DEFAULT_NMAX
    compat_threshold: float = DEFAULT_THRESHOLD
    vanish_threshold: float = 1e-10


@dataclass(frozen=True)
class Sweep:
    """Sampling box.

    Torus points use ``|z^0|`` in ``abs_z0``; slice points use ``rho``.
    ``x_radius`` bounds ``|X|`` (relative to the unit ball for ``chn``).
    """

    count: int = 100
    seed: int = 0
    abs_z0: tuple = (1.0, 3.0)
    rho: tuple = (1.0, 10.0)
    x_radius: float = 0.5
    workers: int = 1


@dataclass(frozen=True)
class RunConfig:
    n: int
    prepotential: Any  # "chn" | ("quadratic", tuple) | ("plugin", name, params)
    c: float = 0.0
    K: Optional[float] = None
    bps: tuple = ()  # ((charge tuple, omega), ...)
    numerics: Numerics = field(default_factory=Numerics)
    sweep: Sweep = field(default_factory=Sweep)

    @property
    def m(self) -> int:
        return self.n + 1

    def domain(self) -> CaskDomain:
        pp = self.prepotential
        if pp == "chn":
            return chn_domain(self.n, self.c, self.K)
        if pp[0] == "quadratic":
            vals = np.asarray(pp[1], dtype=float)
            k = self.m * self.m
            tau = (vals[:k] + 1j * vals[k:]).reshape(self.m, self.m)
            return CaskDomain(Quadratic(tau), self.n, self.c, None, self.K, label="quadratic")
        name, params = pp[1], dict(pp[2])
        plug = PLUGINS[name](**params) if name != "chn" else PLUGINS[name](self.n)
        return CaskDomain(plug, self.n, self.c, None, self.K, label=name)

    def bps_structure(self) -> BpsStructure:
        return BpsStructure(list(self.bps), 2 * self.m)

    def lattice(self) -> ChargeLattice:
        return ChargeLattice.standard(self.m)

    def replace(self, **kw) -> "RunConfig":
        return dataclasses.replace(self, **kw)


# ---------------------------------------------------------------------------
# parsing

def _node_at(root, path):
    """YAML node for a path of mapping keys / sequence indices (best effort)."""
    node = root
    for key in path:
        if isinstance(node, yaml.MappingNode):
            nxt = None
            for k, v in node.value:
                if k.value == key:
                    nxt = v
                    break
            if nxt is None:
                return node
            node = nxt
        elif isinstance(node, yaml.SequenceNode) and isinstance(key, int) and key < len(node.value):
            node = node.value[key]
        else:
            return node
    return node


class _Ctx:
    def __init__(self, root):
        self.root = root

    def fail(self, path, msg):
        node = _node_at(self.root, path) if self.root is not None else None
        line = node.start_mark.line + 1 if node is not None else None
        raise ConfigError(msg, ".".join(str(p) for p in path), line)

    def mapping(self, value, path, allowed):
        if value is None:
            return {}
        if not isinstance(value, dict):
            self.fail(path, "expected a mapping")
        extra = set(value) - set(allowed)
        if extra:
            self.fail(path, f"unknown field(s) {sorted(map(str, extra))}")
        return value

    def number(self, value, path, kind=float, positive=False):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            self.fail(path, f"expected a number, got {value!r}")
        if kind is int and not float(value).is_integer():
            self.fail(path, f"expected an integer, got {value!r}")
        out = kind(value)
        if not np.isfinite(out):
            self.fail(path, "must be finite")
        if positive and out <= 0:
            self.fail(path, "must be positive")
        return out

    def interval(self, value, path):
        if not isinstance(value, (list, tuple)) or len(value) != 2:
            self.fail(path, "expected [low, high]")
        lo = self.number(value[0], path + [0])
        hi = self.number(value[1], path + [1])
        if not lo <= hi:
            self.fail(path, "low must not exceed high")
        return (lo, hi)


def _parse_prepotential(ctx, raw, n, path):
    m = n + 1
    if raw is None or raw == "chn":
        return "chn"
    if isinstance(raw, str):
        ctx.fail(path, f"unknown prepotential {raw!r} (use chn, quadratic or plugin)")
    raw = ctx.mapping(raw, path, {"quadratic", "plugin", "params"})
    if "quadratic" in raw:
        vals = raw["quadratic"]
        if not isinstance(vals, list) or len(vals) != 2 * m * m:
            ctx.fail(path + ["quadratic"], f"expected {2 * m * m} reals for n = {n}")
        vals = tuple(ctx.number(v, path + ["quadratic", i]) for i, v in enumerate(vals))
        tau = (np.array(vals[:m * m]) + 1j * np.array(vals[m * m:])).reshape(m, m)
        if not np.allclose(tau, tau.T):
            ctx.fail(path + ["quadratic"], "tau must be symmetric")
        return ("quadratic", vals)
    if "plugin" in raw:
        name = raw["plugin"]
        if name not in PLUGINS:
            ctx.fail(path + ["plugin"], f"unknown plugin {name!r}; available: {sorted(PLUGINS)}")
        params = ctx.mapping(raw.get("params"), path + ["params"], {"kappa"} if name == "cubic" else set())
        if name == "cubic" and n != 1:
            ctx.fail(path + ["plugin"], "the cubic plugin needs n = 1")
        return ("plugin", name, tuple(sorted((k, float(v)) for k, v in params.items())))
    ctx.fail(path, "expected 'quadratic' or 'plugin'")


def _parse_bps(ctx, raw, m):
    if raw is None:
        return ()
    if not isinstance(raw, list):
        ctx.fail(["bps"], "expected a list of {charge, omega} entries")
    out = []
    for i, ent in enumerate(raw):
        p = ["bps", i]
        ent = ctx.mapping(ent, p, {"charge", "omega"})
        ch = ent.get("charge")
        if not isinstance(ch, list):
            ctx.fail(p, "missing charge list")
        if len(ch) != 2 * m:
            ctx.fail(p + ["charge"], f"charge has length {len(ch)}, expected {2 * m}")
        ch = tuple(ctx.number(v, p + ["charge", j], int) for j, v in enumerate(ch))
        om = ctx.number(ent.get("omega", 1), p + ["omega"], int)
        out.append((ch, om))
    try:
        BpsStructure(out, 2 * m)
    except (LatticeError, ValueError) as exc:
        ctx.fail(["bps"], str(exc))
    return tuple(out)


def _from_tree(tree, root=None) -> RunConfig:
    ctx = _Ctx(root)
    tree = ctx.mapping(tree, [], {"geometry", "bps", "numerics", "sweep"})
    geo = ctx.mapping(tree.get("geometry"), ["geometry"], {"n", "prepotential", "c", "K"})
    if "n" not in geo:
        ctx.fail(["geometry"], "missing n")
    n = ctx.number(geo["n"], ["geometry", "n"], int)
    if n < 0:
        ctx.fail(["geometry", "n"], "must be >= 0")
    pp = _parse_prepotential(ctx, geo.get("prepotential"), n, ["geometry", "prepotential"])
    if "c" not in geo:
        log.warning("geometry.c missing; using the tree-level value c = 0")
        c = 0.0
    else:
        c = ctx.number(geo["c"], ["geometry", "c"])
    K = geo.get("K")
    K = None if K is None else ctx.number(K, ["geometry", "K"], positive=True)
    bps = _parse_bps(ctx, tree.get("bps"), n + 1)

    nd = Numerics()
    num = ctx.mapping(tree.get("numerics"), ["numerics"], {f.name for f in dataclasses.fields(Numerics)})
    numerics = Numerics(
        tol=ctx.number(num.get("tol", nd.tol), ["numerics", "tol"], positive=True),
        h=ctx.number(num.get("h", nd.h), ["numerics", "h"], positive=True),
        n_max=ctx.number(num.get("n_max", nd.n_max), ["numerics", "n_max"], int, positive=True),
        compat_threshold=ctx.number(num.get("compat_threshold", nd.compat_threshold),
                                    ["numerics", "compat_threshold"], positive=True),
        vanish_threshold=ctx.number(num.get("vanish_threshold", nd.vanish_threshold),
                                    ["numerics", "vanish_threshold"], positive=True),
    )
    sd = Sweep()
    sw = ctx.mapping(tree.get("sweep"), ["sweep"], {f.name for f in dataclasses.fields(Sweep)})
    sweep = Sweep(
        count=ctx.number(sw.get("count", sd.count), ["sweep", "count"], int, positive=True),
        seed=ctx.number(sw.get("seed", sd.seed), ["sweep", "seed"], int),
        abs_z0=ctx.interval(sw.get("abs_z0", list(sd.abs_z0)), ["sweep", "abs_z0"]),
        rho=ctx.interval(sw.get("rho", list(sd.rho)), ["sweep", "rho"]),
        x_radius=ctx.number(sw.get("x_radius", sd.x_radius), ["sweep", "x_radius"]),
        workers=ctx.number(sw.get("workers", sd.workers), ["sweep", "workers"], int, positive=True),
    )
    if sweep.seed < 0:
        ctx.fail(["sweep", "seed"], "must be >= 0")
    return RunConfig(n, pp, c, K, bps, numerics, sweep)


def parse_config(text: str) -> RunConfig:
    """Parse and validate YAML text."""
    try:
        root = yaml.compose(text)
        tree = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        raise ConfigError(f"malformed YAML: {getattr(exc, 'problem', exc)}",
                          line=mark.line + 1 if mark else None) from exc
    if tree is None:
        raise ConfigError("empty configuration")
    return _from_tree(tree, root)


def load_config(path) -> RunConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())


def _to_tree(cfg: RunConfig) -> dict:
    pp = cfg.prepotential
    if pp == "chn":
        ppt: Any = "chn"
    elif pp[0] == "quadratic":
        ppt = {"quadratic": list(pp[1])}
    else:
        ppt = {"plugin": pp[1], "params": dict(pp[2])}
    geo = {"n": cfg.n, "prepotential": ppt, "c": cfg.c}
    if cfg.K is not None:
        geo["K"] = cfg.K
    sweep = dataclasses.asdict(cfg.sweep)
    sweep["abs_z0"] = list(cfg.sweep.abs_z0)
    sweep["rho"] = list(cfg.sweep.rho)
    return {
        "geometry": geo,
        "bps": [{"charge": list(ch), "omega": om} for ch, om in cfg.bps],
        "numerics": dataclasses.asdict(cfg.numerics),
        "sweep": sweep,
    }


def serialize_config(cfg: RunConfig) -> str:
    return yaml.safe_dump(_to_tree(cfg), sort_keys=False, default_flow_style=None)
