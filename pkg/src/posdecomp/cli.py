"""Command-line harness.

    posdecomp whitney      --domain box --h 0.0078125
    posdecomp bessel-probe --domain interval --h 0.01 --m 3
    posdecomp decompose    --domain interval --m 1 --p 2 --out-prefix out/run1_
    posdecomp norms        --domain cusp --field bump
    posdecomp sweep        --sweep-domains interval,box --sweep-m 1,2 --sweep-p 2,3
    posdecomp verify       --domain interval

A key=value config file (--config) supplies defaults; flags win.
Exit status: 0 success, 1 invariant or hypothesis violation, 2 bad config or input.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import sys
import time
from dataclasses import asdict, dataclass, fields
from dataclasses import field as dc_field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .afld import AFLDError, atomic_write_text, read_afld, write_afld
from .bessel import bessel_apply, bessel_invert, build_multiplier, delta_probe
from .decompose import (HypothesisError, RunTolerances, ancona_decompose, seminorm_chain_report)
from .fields import FIELD_KINDS, make_field
from .grid import DOMAIN_KINDS, GridFunction, build_domain
from .norms import SobolevParams, hardy_ratio, norm_bundle
from .whitney import overlap_count, whitney_decompose

log = logging.getLogger("posdecomp")

SUBCOMMANDS = ("whitney", "bessel-probe", "decompose", "norms", "sweep", "verify")
EXIT_OK, EXIT_VIOLATION, EXIT_CONFIG = 0, 1, 2
KERNEL_TOL = 1e-6


class ConfigError(ValueError):
    pass


def _floats(text: str) -> list[float]:
    return [float(t) for t in text.split(",") if t.strip()]


def _ints(text: str) -> list[int]:
    return [int(t) for t in text.split(",") if t.strip()]


def _strs(text: str) -> list[str]:
    return [t.strip() for t in text.split(",") if t.strip()]


@dataclass
class RunConfig:
    subcommand: str = "verify"
    domain: str = "interval"
    h: float = 1 / 128
    mask: str | None = None
    boundary: str = "points"
    m: int = 1
    p: float = 2.0
    s: float = 0.0
    field: str = "random"
    seed: int = 0
    alpha: float = 2.0
    input_field: str | None = None
    out_prefix: str = "out/"
    min_side_cells: int = 2
    symbol: str = "discrete"
    tau_ker: float | None = None
    decay_tol: float = 1e-4
    divergence_factor: float = 1.5
    uncovered_warn: float = 0.05
    workers: int = 1
    sweep_domains: list[str] = dc_field(default_factory=lambda: ["interval", "box", "ball", "l_shape", "cusp"])
    sweep_m: list[int] = dc_field(default_factory=lambda: [1, 2])
    sweep_p: list[float] = dc_field(default_factory=lambda: [1.5, 2.0, 3.0])
    sweep_s: list[float] = dc_field(default_factory=lambda: [0.0])
    ray_direction: list[float] = dc_field(default_factory=lambda: [1.0])
    ray_points: int = 65

    def validate(self) -> "RunConfig":
        if self.subcommand not in SUBCOMMANDS:
            raise ConfigError(f"unknown subcommand {self.subcommand!r}")
        if self.domain not in DOMAIN_KINDS:
            raise ConfigError(f"unknown domain {self.domain!r}; choose from {DOMAIN_KINDS}")
        if self.domain == "from_mask_file" and not self.mask:
            raise ConfigError("domain from_mask_file needs mask=<path>")
        if self.field not in FIELD_KINDS:
            raise ConfigError(f"unknown field {self.field!r}; choose from {FIELD_KINDS}")
        if not self.h > 0:
            raise ConfigError("h must be positive")
        for name in ("decay_tol", "divergence_factor", "uncovered_warn"):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must be >= 0")
        if self.tau_ker is not None and self.tau_ker < 0:
            raise ConfigError("tau_ker must be >= 0")
        if self.workers < 1 or self.ray_points < 2:
            raise ConfigError("workers must be >= 1 and ray_points >= 2")
        if not all(np.isfinite(self.ray_direction)) or not any(self.ray_direction):
            raise ConfigError("ray_direction must be a nonzero vector")
        return self

    @property
    def params(self) -> SobolevParams:
        return SobolevParams(self.m, self.p, self.s)

    @property
    def tolerances(self) -> RunTolerances:
        return RunTolerances(self.divergence_factor, self.uncovered_warn, self.decay_tol,
                             self.tau_ker, self.symbol)

    # on-disk form ------------------------------------------------------
    def to_text(self) -> str:
        lines = []
        for f in fields(self):
            val = getattr(self, f.name)
            if val is None:
                text = ""
            elif isinstance(val, list):
                text = ",".join(repr(x) if isinstance(x, float) else str(x) for x in val)
            elif isinstance(val, float):
                text = repr(val)
            else:
                text = str(val)
            lines.append(f"{f.name}={text}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str, base: "RunConfig | None" = None) -> "RunConfig":
        cfg = base if base is not None else cls()
        kinds = {f.name: f for f in fields(cls)}
        for n, raw in enumerate(text.splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"config line {n}: expected key=value, got {raw!r}")
            key, val = (t.strip() for t in line.split("=", 1))
            key = key.replace("-", "_")
            if key not in kinds:
                raise ConfigError(f"config line {n}: unknown key {key!r}")
            try:
                setattr(cfg, key, _coerce(key, val))
            except ValueError as exc:
                raise ConfigError(f"config line {n}: bad value for {key}: {exc}") from None
        return cfg


_LIST_PARSERS = {"sweep_domains": _strs, "sweep_m": _ints, "sweep_p": _floats,
                 "sweep_s": _floats, "ray_direction": _floats}
_INT_KEYS = {"m", "seed", "min_side_cells", "workers", "ray_points"}
_FLOAT_KEYS = {"h", "p", "s", "alpha", "decay_tol", "divergence_factor", "uncovered_warn"}
_OPTIONAL = {"mask", "input_field", "tau_ker"}


def _coerce(key: str, val: str):
    if key in _OPTIONAL and val == "":
        return None
    if key in _LIST_PARSERS:
        return _LIST_PARSERS[key](val)
    if key in _INT_KEYS:
        return int(val)
    if key in _FLOAT_KEYS or key == "tau_ker":
        return float(val)
    return val


# --------------------------------------------------------------------------
# shared helpers

def _domain(cfg: RunConfig, kind: str | None = None, h: float | None = None):
    kind = kind or cfg.domain
    extra = {"path": cfg.mask} if kind == "from_mask_file" else {}
    try:
        return build_domain(kind, h or cfg.h, boundary=cfg.boundary, **extra)
    except (OSError, AFLDError):
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def _field(cfg: RunConfig, dom) -> GridFunction:
    if cfg.input_field:
        fld = read_afld(cfg.input_field)
        if fld.shape != dom.shape or not math.isclose(fld.spacing, dom.spacing, rel_tol=1e-12):
            raise ConfigError(f"input field grid {fld.shape}, h={fld.spacing} does not match "
                              f"the domain grid {dom.shape}, h={dom.spacing}")
        u = GridFunction(dom, fld.values)
        if not u.vanishes_outside():
            raise ConfigError("input field is nonzero outside the domain")
        return u
    return make_field(dom, cfg.field, seed=cfg.seed, alpha=cfg.alpha)


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=True, default=_json_default) + "\n"


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.bool_):
        return bool(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"not JSON serializable: {type(o).__name__}")


def _write(path: Path, text: str) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    atomic_write_text(path, text)
    return path


def _out(cfg: RunConfig, name: str) -> Path:
    return Path(cfg.out_prefix + name)


def _meta(cfg: RunConfig, started: float, artifacts) -> str:
    return _dump({"tool": "posdecomp", "version": __version__,
                  "finished": datetime.now(timezone.utc).isoformat(),
                  "elapsed_s": round(time.time() - started, 3),
                  "artifacts": [str(a) for a in artifacts]})


def _embed(cfg: RunConfig) -> dict:
    return {"tool": "posdecomp", "version": __version__, "config": asdict(cfg)}


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


# --------------------------------------------------------------------------
# subcommands

def cmd_whitney(cfg: RunConfig) -> int:
    dom = _domain(cfg)
    dec = whitney_decompose(dom, cfg.min_side_cells)
    rows = []
    bad = 0
    for q in dec.cubes:
        ok = q.diam <= q.dist <= 4 * q.diam
        bad += not ok
        rows.append([q.generation, *(f"{c!r}" for c in q.center), repr(q.side), repr(q.dist),
                     repr(q.diam), repr(q.dist / q.diam)])
    cols = [f"x{b}" for b in range(dom.ndim)]
    _write(_out(cfg, "cubes.csv"), _csv(["generation", *cols, "side", "dist", "diam", "ratio"], rows))
    summary = {**_embed(cfg), "n_cubes": len(dec.cubes),
               "cubes_per_generation": {str(k): v for k, v in dec.counts_per_generation().items()},
               "uncovered_fraction": dec.uncovered_fraction,
               "overlap": {"1": overlap_count(dec, 1), "4/3": dec.overlap_bound,
                           "5/3": overlap_count(dec, 5 / 3)},
               "whitney_violations": bad}
    _write(_out(cfg, "whitney.json"), _dump(summary))
    print(_dump({k: v for k, v in summary.items() if k not in ("config",)}), end="")
    return EXIT_VIOLATION if bad else EXIT_OK


def cmd_bessel_probe(cfg: RunConfig) -> int:
    dom = _domain(cfg)
    mult = build_multiplier(dom.shape, dom.spacing, cfg.m, symbol=cfg.symbol)
    kernel, tau = delta_probe(mult)
    u = _field(cfg, dom)
    back = bessel_apply(bessel_invert(u, mult), mult)
    scale = u.sup_norm()
    rt = float(np.max(np.abs(back - u.values))) / scale if scale > 0 else 0.0
    out = {**_embed(cfg), "padding": mult.padding, "padded_shape": list(mult.padded_shape),
           "kernel_peak": mult.kernel_peak, "tau_ker": tau, "tail_ratio": mult.tail_ratio,
           "kernel_mass": float(kernel.sum()) * dom.cell_volume, "roundtrip_relative": rt}
    write_afld(_out(cfg, "kernel.afld"), kernel, dom.spacing, dom.origin)
    _write(_out(cfg, "bessel_probe.json"), _dump(out))
    print(_dump({k: v for k, v in out.items() if k != "config"}), end="")
    return EXIT_OK if tau < KERNEL_TOL and rt < 1e-10 else EXIT_VIOLATION


def _decompose(cfg: RunConfig, dom=None):
    dom = dom or _domain(cfg)
    u = _field(cfg, dom)
    return ancona_decompose(u, cfg.params, tolerances=cfg.tolerances, workers=cfg.workers)


def cmd_decompose(cfg: RunConfig) -> int:
    started = time.time()
    rep = _decompose(cfg)
    dom = rep.u.domain
    arts = [_out(cfg, "u1.afld"), _out(cfg, "u2.afld")]
    for path, part in zip(arts, (rep.u1, rep.u2)):
        write_afld(path, part.values, dom.spacing, dom.origin)
    body = {**_embed(cfg), **rep.to_dict()}
    arts.append(_write(_out(cfg, "report.json"), _dump(body)))
    _write(_out(cfg, "report.meta.json"), _meta(cfg, started, arts))
    failed = [k for k, (ok, *_) in rep.checks().items() if not ok]
    for w in rep.warnings:
        print(f"warning: {w}", file=sys.stderr)
    print(f"c = {rep.c}  min(u1) = {rep.min_u1:.3e}  min(u2) = {rep.min_u2:.3e}  "
          f"tau_glob = {rep.tau_glob:.3e}  residual = {rep.residual:.3e}")
    if failed:
        print("violated: " + ", ".join(failed), file=sys.stderr)
        return EXIT_VIOLATION
    return EXIT_OK


def cmd_norms(cfg: RunConfig) -> int:
    dom = _domain(cfg)
    u = _field(cfg, dom)
    bundle = norm_bundle(u, cfg.params, factor=cfg.divergence_factor)
    out = {**_embed(cfg), "norms": bundle.to_dict()}
    try:
        out["hardy_ratio"] = hardy_ratio(u, cfg.params)
    except ValueError:
        out["hardy_ratio"] = None
    _write(_out(cfg, "norms.json"), _dump(out))
    print(_dump(out["norms"] | {"hardy_ratio": out["hardy_ratio"]}), end="")
    return EXIT_OK


def ray_profile(rep, direction, n_points: int):
    """Sample d, u, u1, u2 along a ray from the deepest interior point (nearest grid point)."""
    dom = rep.u.domain
    start = np.unravel_index(int(np.argmax(dom.distance)), dom.shape)
    x0 = np.array([ax[i] for ax, i in zip(dom.axes(), start)])
    dvec = np.resize(np.asarray(direction, float), dom.ndim)
    dvec /= np.linalg.norm(dvec)
    lo = np.array(dom.origin, float)
    hi = lo + (np.array(dom.shape) - 1) * dom.spacing
    with np.errstate(divide="ignore"):
        tmax = np.min(np.where(dvec > 0, (hi - x0) / dvec, np.where(dvec < 0, (lo - x0) / dvec, np.inf)))
    rows = []
    for t in np.linspace(0.0, tmax, n_points):
        idx = dom.index_of(x0 + t * dvec)
        rows.append([repr(float(t)), *(repr(float(ax[i])) for ax, i in zip(dom.axes(), idx)),
                     repr(float(dom.distance[idx])), repr(float(rep.u.values[idx])),
                     repr(float(rep.u1.values[idx])), repr(float(rep.u2.values[idx]))])
    cols = [f"x{b}" for b in range(dom.ndim)]
    return ["t", *cols, "d", "u", "u1", "u2"], rows


def cmd_sweep(cfg: RunConfig) -> int:
    started = time.time()
    rows, arts = [], []
    for kind in cfg.sweep_domains:
        dom = _domain(cfg, kind)
        u = make_field(dom, cfg.field, seed=cfg.seed, alpha=cfg.alpha)
        dec = whitney_decompose(dom, cfg.min_side_cells)
        for m in cfg.sweep_m:
            for p in cfg.sweep_p:
                for s in cfg.sweep_s:
                    try:
                        params = SobolevParams(m, p, s)
                    except ValueError as exc:
                        raise ConfigError(str(exc)) from None
                    tag = f"{kind}_m{m}_p{p:g}_s{s:g}"
                    try:
                        rep = ancona_decompose(u, params, dec, tolerances=cfg.tolerances,
                                               workers=cfg.workers)
                    except HypothesisError as exc:
                        hv = exc.probe.coarse if exc.probe else float("nan")
                        rows.append([kind, m, p, s, "", repr(hv), "hardy_diverging",
                                     dec.overlap_bound, repr(dec.uncovered_fraction)])
                        continue
                    flags = [k for k, (ok, *_) in rep.checks().items() if not ok]
                    if rep.warnings:
                        flags.append("uncovered_above_threshold")
                    rows.append([kind, m, p, s, "" if rep.c is None else repr(rep.c),
                                 repr(rep.norms_u.hardy_value), ";".join(flags) or "ok",
                                 rep.overlap_4_3, repr(rep.uncovered_fraction)])
                    header, prof = ray_profile(rep, cfg.ray_direction, cfg.ray_points)
                    arts.append(_write(_out(cfg, f"profile_{tag}.csv"), _csv(header, prof)))
    header = ["domain", "m", "p", "s", "c", "hardy_value", "flags", "overlap", "uncovered_fraction"]
    arts.append(_write(_out(cfg, "sweep.csv"), _csv(header, rows)))
    _write(_out(cfg, "sweep.meta.json"), _meta(cfg, started, arts))
    print(_csv(header, rows), end="")
    bad = any(r[6] not in ("ok", "hardy_diverging", "uncovered_above_threshold") for r in rows)
    return EXIT_VIOLATION if bad else EXIT_OK


def cmd_verify(cfg: RunConfig) -> int:
    started = time.time()
    dom = _domain(cfg)
    results: list[tuple[str, bool, str]] = []

    dec = whitney_decompose(dom, cfg.min_side_cells)
    ok = all(q.diam <= q.dist <= 4 * q.diam for q in dec.cubes)
    results.append(("whitney_inequalities", ok, f"{len(dec.cubes)} cubes"))
    cover = np.zeros(dom.shape, dtype=np.int32)
    for q in dec.cubes:
        cover[q.index_slices()] += 1
    results.append(("cubes_disjoint", int(cover.max(initial=0)) <= 1, f"max multiplicity {cover.max()}"))

    mult = build_multiplier(dom.shape, dom.spacing, cfg.m, symbol=cfg.symbol)
    _, tau = delta_probe(mult)
    results.append(("kernel_probe", tau < KERNEL_TOL, f"tau_ker={tau:.3e}"))

    rep = _decompose(cfg, dom)
    for name, (passed, val, bound) in rep.checks().items():
        results.append((name, bool(passed), f"measured={val:.3e} bound={bound:.3e}"))

    chain = seminorm_chain_report(rep.u, rep.params, rep.decomp, rep)
    finite = all(c is None or math.isfinite(c) for row in chain for c in row.constants())
    results.append(("chain_finite", finite, f"end constants {[row.end_constant for row in chain]}"))

    for name, passed, detail in results:
        print(f"{'PASS' if passed else 'FAIL'}  {name:22s} {detail}")
    body = {**_embed(cfg), "checks": {n: {"passed": p, "detail": d} for n, p, d in results},
            "chain": [row.to_dict() for row in chain], "report": rep.to_dict()}
    arts = [_write(_out(cfg, "verify.json"), _dump(body))]
    _write(_out(cfg, "verify.meta.json"), _meta(cfg, started, arts))
    return EXIT_OK if all(p for _, p, _ in results) else EXIT_VIOLATION


COMMANDS = {"whitney": cmd_whitney, "bessel-probe": cmd_bessel_probe, "decompose": cmd_decompose,
            "norms": cmd_norms, "sweep": cmd_sweep, "verify": cmd_verify}


def run(cfg: RunConfig) -> int:
    """Dispatch a validated config; map failures onto exit codes."""
    try:
        cfg.validate()
        return COMMANDS[cfg.subcommand](cfg)
    except HypothesisError as exc:
        print(f"refused: {exc}", file=sys.stderr)
        return EXIT_VIOLATION
    except (AFLDError, ConfigError, OSError, ValueError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


# --------------------------------------------------------------------------
# argument parsing

_FLAG_HELP = {
    "domain": "gallery domain kind", "h": "mesh width", "mask": "AFLD mask file for from_mask_file",
    "boundary": "distance convention: points or faces", "m": "smoothness order",
    "p": "integrability exponent", "s": "distance weight exponent", "field": "test field kind",
    "seed": "seed for random fields", "alpha": "exponent for dist_power fields",
    "input_field": "AFLD file with u (overrides --field)", "out_prefix": "prefix for artifacts",
    "min_side_cells": "smallest Whitney cube in cells", "symbol": "discrete or continuum",
    "tau_ker": "override the certified kernel tolerance", "decay_tol": "kernel tail tolerance",
    "divergence_factor": "refinement growth flag threshold",
    "uncovered_warn": "warn above this uncovered fraction", "workers": "threads over cubes",
    "sweep_domains": "comma list", "sweep_m": "comma list", "sweep_p": "comma list",
    "sweep_s": "comma list", "ray_direction": "comma list", "ray_points": "samples on the ray",
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="posdecomp", description=__doc__.split("\n")[0])
    ap.add_argument("--version", action="version", version=f"posdecomp {__version__}")
    sub = ap.add_subparsers(dest="subcommand", required=True)
    for name in SUBCOMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", help="key=value file; flags override it")
        sp.add_argument("-v", "--verbose", action="store_true")
        for f in fields(RunConfig):
            if f.name == "subcommand":
                continue
            sp.add_argument("--" + f.name.replace("_", "-"), dest=f.name, default=None,
                            help=_FLAG_HELP.get(f.name))
    return ap


def config_from_args(ns: argparse.Namespace) -> RunConfig:
    cfg = RunConfig()
    if ns.config:
        cfg = RunConfig.from_text(Path(ns.config).read_text())
    cfg.subcommand = ns.subcommand
    for f in fields(RunConfig):
        raw = getattr(ns, f.name, None)
        if f.name == "subcommand" or raw is None:
            continue
        try:
            setattr(cfg, f.name, _coerce(f.name, raw))
        except ValueError as exc:
            raise ConfigError(f"--{f.name.replace('_', '-')}: {exc}") from None
    return cfg


def main(argv=None) -> int:
    ns = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if ns.verbose else logging.ERROR,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = config_from_args(ns)
    except (ConfigError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
