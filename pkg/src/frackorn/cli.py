"""Command-line front end.

Configs are flat ``key = value`` lines (``;`` also separates entries, ``#``
starts a comment, vectors are comma separated)::

    subcommand = sweep
    domain = ball; center = 0,0; radius = 1.0
    s = 0.25; p = 2
    field = counterexample; mode = cutoff; skew = 0,1,-1,0
    samples = 1000000; seed = 0

Exit codes: 0 success, 2 config error, 3 numerical failure, 4 IO error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from dataclasses import asdict, dataclass, fields
from pathlib import Path

import numpy as np

from . import experiments as ex
from .fields import (Affine, ConvolutionConfig, FieldError, centered_bump, make_bump_ensemble,
                     make_counterexample)
from .geometry import Ball, Box, GeometryError
from .seminorms import FUNCTIONALS, METHODS, FracParams, IntegrandBlowUp, QuadratureConfig, estimate

SUBCOMMANDS = ("seminorm", "sweep", "korn-ratio", "korn-second", "korn-hardy", "extension")
FIELD_KINDS = ("counterexample", "affine", "bumps", "centered_bump")
MODES = ("cutoff", "mollified", "raw")
FORMATS = ("csv", "json", "both")
KORN_SUBCOMMANDS = ("sweep", "korn-ratio", "korn-second", "korn-hardy", "extension")

SWEEP_HEADER = ["eps", "x_value", "x_stderr", "w_value", "w_stderr", "lp_value", "lp_stderr",
                "ratio_xw", "ratio_xl", "combined", "seed", "samples"]


class ConfigError(ValueError):
    def __init__(self, key: str, message: str):
        super().__init__(f"{key}: {message}")
        self.key = key
        self.message = message


@dataclass(frozen=True)
class RunConfig:
    subcommand: str = "seminorm"
    functional: str = "gagliardo"
    domain: str = "ball"
    center: tuple = (0.0, 0.0)
    radius: float = 1.0
    lo: tuple = (0.0, 0.0)
    hi: tuple = (1.0, 1.0)
    s: float = 0.25
    p: float = 2.0
    field: str = "counterexample"
    mode: str = "cutoff"
    eps: float = 0.05
    delta: float | None = None
    eps_grid: tuple | None = None
    skew: tuple = (0.0, 1.0, -1.0, 0.0)
    shift: tuple | None = None
    bump_count: int = 1
    bump_radius: float = 0.5
    ensemble_size: int = 20
    method: str = "mc_importance"
    samples: int = 1_000_000
    seed: int = 0
    shards: int = 8
    grid: int = 128
    angular_nodes: int = 64
    min_pair_separation: float | None = None
    conv_radial: int = 16
    conv_angular: int = 32
    output_dir: str = "results"
    output_format: str = "both"

    def make_domain(self):
        if self.domain == "ball":
            return Ball(self.center, self.radius)
        return Box(self.lo, self.hi)

    def make_params(self) -> FracParams:
        return FracParams(self.s, self.p)

    def make_quadrature(self, workers: int = 1) -> QuadratureConfig:
        return QuadratureConfig(self.method, self.samples, self.seed, self.shards, self.grid,
                                self.angular_nodes, self.min_pair_separation, workers)

    def make_conv(self) -> ConvolutionConfig:
        return ConvolutionConfig(self.conv_radial, self.conv_angular)

    def field_rng(self) -> np.random.Generator:
        return np.random.default_rng(np.random.SeedSequence(self.seed, spawn_key=(1000,)))


_CHOICES = {"subcommand": SUBCOMMANDS, "functional": FUNCTIONALS, "domain": ("ball", "box"),
            "field": FIELD_KINDS, "mode": MODES, "method": METHODS, "output_format": FORMATS}
_VECTORS = {"center", "lo", "hi", "eps_grid", "skew", "shift"}
_OPTIONAL = {"delta", "eps_grid", "shift", "min_pair_separation"}
_INTS = {"bump_count", "ensemble_size", "samples", "seed", "shards", "grid", "angular_nodes",
         "conv_radial", "conv_angular"}
_FLOATS = {"radius", "s", "p", "eps", "delta", "bump_radius", "min_pair_separation"}
KEYS = tuple(f.name for f in fields(RunConfig))


def _convert(key: str, text: str):
    text = text.strip()
    if key in _OPTIONAL and text.lower() == "none":
        return None
    try:
        if key in _VECTORS:
            return tuple(float(v) for v in text.split(",") if v.strip())
        if key in _INTS:
            return int(float(text)) if "e" in text.lower() else int(text)
        if key in _FLOATS:
            return float(text)
    except ValueError:
        raise ConfigError(key, f"cannot parse {text!r}") from None
    if key in _CHOICES and text not in _CHOICES[key]:
        raise ConfigError(key, f"{text!r} is not one of {', '.join(_CHOICES[key])}")
    return text


def parse_entries(text: str) -> dict[str, str]:
    """Split config text into raw ``key -> value`` strings; unknown keys are errors."""
    out = {}
    for line in text.splitlines():
        line = line.split("#", 1)[0]
        for entry in line.split(";"):
            if not entry.strip():
                continue
            if "=" not in entry:
                raise ConfigError(entry.strip(), "expected 'key = value'")
            key, value = (part.strip() for part in entry.split("=", 1))
            if key not in KEYS:
                raise ConfigError(key, "unknown key")
            out[key] = value
    return out


def _validate(cfg: RunConfig) -> RunConfig:
    if not 0 < cfg.s < 1:
        raise ConfigError("s", f"s must lie in (0, 1), got {cfg.s}")
    if not cfg.p >= 1:
        raise ConfigError("p", f"p must be at least 1, got {cfg.p}")
    prm = cfg.make_params()
    if cfg.subcommand in KORN_SUBCOMMANDS and prm.regime == "borderline":
        raise ConfigError("s", f"borderline ps = {prm.ps:g} is excluded for {cfg.subcommand}")
    if cfg.subcommand in ("korn-ratio", "korn-hardy", "extension") and prm.regime != "supercritical":
        raise ConfigError("s", f"{cfg.subcommand} needs ps > 1, got ps = {prm.ps:g}")
    try:
        dom = cfg.make_domain()
    except GeometryError as exc:
        raise ConfigError("domain", str(exc)) from None
    try:
        cfg.make_quadrature()
    except ValueError as exc:
        raise ConfigError("method", str(exc)) from None
    try:
        cfg.make_conv()
    except FieldError as exc:
        raise ConfigError("conv_radial", str(exc)) from None
    if len(cfg.skew) != dom.dim**2:
        raise ConfigError("skew", f"needs {dom.dim**2} entries for n = {dom.dim}")
    if cfg.shift is not None and len(cfg.shift) != dom.dim:
        raise ConfigError("shift", f"needs {dom.dim} entries")
    if cfg.ensemble_size < 1:
        raise ConfigError("ensemble_size", "must be at least 1")
    if cfg.bump_count < 1:
        raise ConfigError("bump_count", "must be at least 1")
    return cfg


def parse_config(text: str = "", overrides: dict[str, str] | None = None) -> RunConfig:
    """Resolve a config from file text plus flag overrides (flags win)."""
    entries = parse_entries(text)
    for key, value in (overrides or {}).items():
        if key not in KEYS:
            raise ConfigError(key, "unknown key")
        entries[key] = value
    values = {key: _convert(key, value) for key, value in entries.items()}
    return _validate(RunConfig(**values))


def _format_value(value) -> str:
    if value is None:
        return "none"
    if isinstance(value, tuple):
        return ",".join(repr(float(v)) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def emit_config(cfg: RunConfig) -> str:
    return "".join(f"{key} = {_format_value(getattr(cfg, key))}\n" for key in KEYS)


def config_record(cfg: RunConfig) -> dict:
    return {k: (list(v) if isinstance(v, tuple) else v) for k, v in asdict(cfg).items()}


# -- running -------------------------------------------------------------------

def _num(x) -> str:
    return format(float(x), ".17g")


def _build_field(cfg: RunConfig, dom):
    A = np.array(cfg.skew).reshape(dom.dim, dom.dim)
    if cfg.field == "counterexample":
        delta = ex.default_delta(dom) if cfg.delta is None else cfg.delta
        return make_counterexample(dom, A, delta, cfg.eps, cfg.mode, cfg.make_conv())
    if cfg.field == "affine":
        return Affine(dom, A, cfg.shift)
    if cfg.field == "bumps":
        return make_bump_ensemble(dom, cfg.bump_count, cfg.field_rng())
    return centered_bump(dom, cfg.bump_radius)


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def _json_text(obj) -> str:
    return json.dumps(obj, indent=2) + "\n"


def _run_seminorm(cfg, dom, prm, q):
    f = _build_field(cfg, dom)
    est = estimate(cfg.functional, f, dom, prm, q)
    rec = est.to_record(prm.p)
    header = ["functional", "value", "raw_integral", "std_error", "value_std_error", "samples", "method", "seed"]
    row = [rec["functional"], _num(rec["value"]), _num(rec["raw_integral"]), _num(rec["std_error"]),
           _num(rec["value_std_error"]), rec["samples"], rec["method"], rec["seed"]]
    return {"seminorm.csv": _csv_text(header, [row]),
            "seminorm.json": _json_text({"config": config_record(cfg), "result": rec})}


def _run_sweep(cfg, dom, prm, q):
    A = np.array(cfg.skew).reshape(dom.dim, dom.dim)
    runner = ex.counterexample_sweep if prm.regime == "subcritical" else ex.stability_sweep
    res = runner(dom, prm, A, cfg.delta, cfg.eps_grid, cfg.mode, q, cfg.make_conv())
    p = prm.p
    rows = [[_num(r.eps), _num(r.x.value), _num(r.x.value_std_error(p)), _num(r.w.value),
             _num(r.w.value_std_error(p)), _num(r.lp.value), _num(r.lp.value_std_error(p)),
             _num(r.ratio_xw), _num(r.ratio_xl), _num(r.combined), r.seed, r.x.samples] for r in res.records]
    plot = "eps ratio\n" + "".join(f"{_num(r.eps)} {_num(r.combined)}\n" for r in res.records)
    record = {
        "config": config_record(cfg),
        "regime": prm.regime,
        "delta": res.delta,
        "fitted_exponent": res.fitted_exponent,
        "fit_stderr": res.fit_stderr,
        "theoretical_exponent": res.theoretical_exponent,
        "floor_w": res.floor_w.to_record(p),
        "floor_lp": res.floor_lp.to_record(p),
        "records": [{"eps": r.eps, "seed": r.seed, "ratio_xw": r.ratio_xw, "ratio_xl": r.ratio_xl,
                     "combined": r.combined, "combined_stderr": r.combined_stderr, "value_sum": r.value_sum,
                     "korn_first": r.korn_first, "korn_first_stderr": r.korn_first_stderr,
                     "x": r.x.to_record(p), "w": r.w.to_record(p), "lp": r.lp.to_record(p)}
                    for r in res.records],
    }
    return {"sweep.csv": _csv_text(SWEEP_HEADER, rows), "sweep.json": _json_text(record),
            "sweep_plot.dat": plot}


def _run_study(cfg, dom, prm, q):
    ensemble = ex.make_ratio_ensemble(dom, cfg.ensemble_size, cfg.field_rng())
    study = {"korn-ratio": ex.korn_ratio_study, "korn-second": ex.korn_second_check,
             "korn-hardy": ex.korn_hardy_check}[cfg.subcommand]
    res = study(dom, prm, ensemble, q)
    rows = [[m["index"], _num(m["quotient"]), _num(m["stderr"]), m["seed"]] for m in res.members]
    record = {"config": config_record(cfg), "kind": res.kind, "quotients": res.quotients.tolist(),
              "stderrs": res.stderrs.tolist(), "summary": res.summary(), "members": res.members}
    name = cfg.subcommand
    return {f"{name}.csv": _csv_text(["index", "quotient", "stderr", "seed"], rows),
            f"{name}.json": _json_text(record)}


def _run_extension(cfg, dom, prm, q):
    f = _build_field(cfg, dom)
    res = ex.extension_equivalence_check(f, dom, prm, q)
    keys = ["w_ratio", "w_ratio_stderr", "w_tail_share", "x_ratio", "x_ratio_stderr", "x_tail_share"]
    return {"extension.csv": _csv_text(keys, [[_num(res[k]) for k in keys]]),
            "extension.json": _json_text({"config": config_record(cfg), "result": res})}


def run(cfg: RunConfig, workers: int = 1) -> dict[str, str]:
    """Execute a resolved config; returns ``{filename: contents}`` without writing."""
    dom = cfg.make_domain()
    prm = cfg.make_params()
    q = cfg.make_quadrature(workers)
    handler = {"seminorm": _run_seminorm, "sweep": _run_sweep, "extension": _run_extension}.get(
        cfg.subcommand, _run_study)
    artifacts = handler(cfg, dom, prm, q)
    if cfg.output_format != "both":
        keep = ".csv" if cfg.output_format == "csv" else ".json"
        artifacts = {k: v for k, v in artifacts.items() if not (k.endswith((".csv", ".json")) and not k.endswith(keep))}
    return artifacts


def write_artifacts(artifacts: dict[str, str], output_dir: str) -> list[Path]:
    out = Path(output_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = []
    for name, text in artifacts.items():
        path = out / name
        path.write_text(text)
        paths.append(path)
    return paths


def _fail(code: int, kind: str, message: str, key: str | None = None) -> int:
    rec = {"error": kind, "message": message, "exit_code": code}
    if key is not None:
        rec["key"] = key
    print(json.dumps(rec), file=sys.stderr)
    return code


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="frackorn", description=__doc__.split("\n\n")[0])
    parser.add_argument("subcommand", nargs="?", choices=SUBCOMMANDS, help="overrides the config file")
    parser.add_argument("--config", "-c", help="config file of key = value lines")
    parser.add_argument("--set", "-s", action="append", default=[], metavar="KEY=VALUE",
                        help="override one config key (repeatable)")
    parser.add_argument("--output-dir", "-o", help="shorthand for --set output_dir=...")
    parser.add_argument("--workers", "-j", type=int, default=1, help="threads executing shards")
    parser.add_argument("--emit-config", action="store_true", help="print the resolved config and exit")
    args = parser.parse_args(argv)

    try:
        text = Path(args.config).read_text() if args.config else ""
    except OSError as exc:
        return _fail(4, "io", str(exc))
    overrides = {}
    if args.subcommand:
        overrides["subcommand"] = args.subcommand
    if args.output_dir:
        overrides["output_dir"] = args.output_dir
    try:
        for item in args.set:
            if "=" not in item:
                raise ConfigError(item, "expected KEY=VALUE")
            key, value = item.split("=", 1)
            overrides[key.strip()] = value
        cfg = parse_config(text, overrides)
    except ConfigError as exc:
        return _fail(2, "config", exc.message, exc.key)
    if args.emit_config:
        sys.stdout.write(emit_config(cfg))
        return 0
    if args.workers < 1:
        return _fail(2, "config", "worker count must be at least 1", "workers")

    try:
        artifacts = run(cfg, args.workers)
    except (FieldError, GeometryError) as exc:
        return _fail(2, "config", str(exc))
    except (IntegrandBlowUp, ArithmeticError, ValueError) as exc:
        return _fail(3, "numerical", f"{type(exc).__name__}: {exc}")
    try:
        paths = write_artifacts(artifacts, cfg.output_dir)
    except OSError as exc:
        return _fail(4, "io", str(exc))
    for path in paths:
        print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
