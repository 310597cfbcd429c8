"""Command-line runner: ``qgen certify | sweep | scenarios list | selftest``.

A run is described by one TOML file::

    kind = "stateClassification"
    m = 8
    seed = 3

    [hypotheses]
    count = 4

    [bound]            # optional; --bound overrides name
    name = "cor22"

    [sweep]            # used by ``qgen sweep``
    axis = "m"
    values = [1, 2, 4, 8]
    seeds = [3]

Reports are written to ``--out`` as ``<command>.json`` and/or
``<command>.csv``; they depend only on the configuration, the seed and the
package version.  Wall time goes to a separate ``timing.json``.

Exit codes: 0 every certificate holds, 1 a certificate fails or a supplied
MGF bound is invalid, 2 configuration or I/O error, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import os
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .bounds import BOUND_NAMES
from .errors import (
    ConfigError,
    DimensionCap,
    EnumerationCap,
    InvalidMgfBound,
    IoError,
    NetTooLarge,
    NotFactorized,
    RangeExhausted,
    SingularLog,
    SolverFailure,
)
from .scenarios import KINDS, ScenarioConfig, build, run_sweep
from .scenarios.config import ENUM_CAP

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3

_TOP_KEYS = ("kind", "d", "m", "m_test", "m_train", "eps", "seed",
             "hypotheses", "distribution", "learner", "bound", "sweep")
_SECTION_KEYS = ("hypotheses", "distribution", "learner")
_BOUND_KEYS = ("name", "alpha", "beta", "validate", "local_alphas", "local_betas", "C1", "C2",
               "max_local_norm")
_SWEEP_KEYS = ("axis", "values", "seeds")
CSV_COLUMNS = ("axis", "gen", "qmiTerm", "holevoTerm", "miTerm", "rhs", "slack", "seed")

_DESCRIPTIONS = {
    "stateClassification": "binary classification of labelled state pairs with effect-operator hypotheses",
    "pacStateLearning": "covering-net ERM over hypothesis states from binary measurement data",
    "entangledPac": "Boolean function learning from purified (entangled) examples",
    "parameterEstimation": "choosing an estimation POVM from labelled copies",
}


@dataclass
class RunOptions:
    """Non-scenario parts of a config file."""

    bound: dict = field(default_factory=dict)
    sweep: dict = field(default_factory=dict)


@dataclass
class RunReport:
    """Everything written to the JSON report, plus the wall time."""

    tool_version: str
    config_hash: str
    seed: int
    kind: str
    command: str
    bound: str
    config: dict
    meta: dict
    points: list
    axis: str | None = None
    wall_time: float = 0.0

    @property
    def all_hold(self) -> bool:
        return all(p["certificate"]["holds"] for p in self.points)

    def to_dict(self) -> dict:
        return {
            "toolVersion": self.tool_version, "configHash": self.config_hash, "seed": self.seed,
            "kind": self.kind, "command": self.command, "bound": self.bound, "axis": self.axis,
            "config": self.config, "meta": self.meta, "points": self.points, "allHold": self.all_hold,
        }


# --- config -------------------------------------------------------------------------

def _check(section, allowed, where):
    if not isinstance(section, dict):
        raise ConfigError(f"[{where}] must be a table")
    extra = sorted(set(section) - set(allowed))
    if extra:
        raise ConfigError(f"unknown key(s) {extra} in [{where}]")


def config_from_dict(data: dict) -> tuple[ScenarioConfig, RunOptions]:
    """Validate a decoded config mapping; defaults are applied by the scenario."""
    _check(data, _TOP_KEYS, "top level")
    if "kind" not in data:
        raise ConfigError("missing required key 'kind'")
    for s in _SECTION_KEYS:
        if not isinstance(data.get(s, {}), dict):
            raise ConfigError(f"[{s}] must be a table")
    bound = data.get("bound", {})
    sweep = data.get("sweep", {})
    _check(bound, _BOUND_KEYS, "bound")
    _check(sweep, _SWEEP_KEYS, "sweep")
    if "name" in bound and bound["name"] not in BOUND_NAMES:
        raise ConfigError(f"bound.name must be one of {BOUND_NAMES}, got {bound['name']!r}")
    kw = {k: data[k] for k in ("d", "m", "m_test", "m_train", "eps", "seed") if k in data}
    if "eps" in kw:
        if not isinstance(kw["eps"], (int, float)) or isinstance(kw["eps"], bool):
            raise ConfigError("eps must be a number")
        kw["eps"] = float(kw["eps"])
    try:
        cfg = ScenarioConfig(kind=data["kind"], hypotheses=dict(data.get("hypotheses", {})),
                             distribution=dict(data.get("distribution", {})),
                             learner=dict(data.get("learner", {})), **kw)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc
    return cfg, RunOptions(dict(bound), dict(sweep))


def _cap_error(exc) -> ConfigError:
    msg = str(exc)
    if "enum_cap" not in msg:
        msg = f"{msg} (enum_cap = {ENUM_CAP})"
    return ConfigError(msg)


def validate(cfg: ScenarioConfig):
    """Build the scenario once so that section keys and sizes are checked."""
    try:
        return build(cfg)
    except (EnumerationCap, NetTooLarge) as exc:
        raise _cap_error(exc) from exc


def load_config(path) -> tuple[ScenarioConfig, RunOptions]:
    """Read and validate a TOML config file."""
    p = Path(path)
    try:
        raw = p.read_bytes()
    except OSError as exc:
        raise ConfigError(f"cannot read config {str(p)!r}: {exc.strerror or exc}") from exc
    try:
        data = tomllib.loads(raw.decode("utf-8"))
    except (tomllib.TOMLDecodeError, UnicodeDecodeError) as exc:
        raise ConfigError(f"{p}: {exc}") from exc
    cfg, opts = config_from_dict(data)
    validate(cfg)
    return cfg, opts


def parse_config(path) -> ScenarioConfig:
    """Validated :class:`ScenarioConfig` from a config file."""
    return load_config(path)[0]


def canonical_json(obj) -> str:
    return json.dumps(_jsonable(obj), sort_keys=True, separators=(",", ":"), ensure_ascii=True)


def config_hash(cfg: ScenarioConfig, opts: RunOptions) -> str:
    doc = {"scenario": cfg.to_dict(), "bound": opts.bound, "sweep": opts.sweep}
    return hashlib.sha256(canonical_json(doc).encode()).hexdigest()


# --- reports ------------------------------------------------------------------------

def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items() if not callable(v)}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, (np.bool_,)):
        return bool(x)
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, (np.floating, float)):
        v = float(x)
        return v if math.isfinite(v) else repr(v)
    if isinstance(x, complex):
        return {"re": x.real, "im": x.imag}
    if x is None or isinstance(x, (str, int, bool)):
        return x
    # object reprs may carry memory addresses; keep reports reproducible
    return type(x).__name__


def _point(value, seed, risk, cert) -> dict:
    return {
        "axis": value, "seed": int(seed),
        "risks": {"empirical": risk.empirical, "true": risk.true_, "gen": risk.gen},
        "certificate": cert.to_dict(),
    }


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x)).lower()
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return "%.17g" % float(x)
    return str(x)


def report_csv(report: RunReport) -> str:
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(CSV_COLUMNS)
    for p in report.points:
        c = p["certificate"]
        wr.writerow([_fmt(p["axis"]), _fmt(c["gen"]), _fmt(c["qmiTerm"]), _fmt(c["holevoTerm"]),
                     _fmt(c["miTerm"]), _fmt(c["rhs"]), _fmt(c["slack"]), _fmt(p["seed"])])
    return buf.getvalue()


def report_json(report: RunReport) -> str:
    return json.dumps(_jsonable(report.to_dict()), sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def emit_report(report: RunReport, out_dir, formats=("json", "csv")) -> list:
    """Write the report files and the timing sidecar; returns the written paths."""
    out = Path(out_dir)
    written = []
    try:
        out.mkdir(parents=True, exist_ok=True)
        if "json" in formats:
            p = out / f"{report.command}.json"
            p.write_text(report_json(report), encoding="utf-8")
            written.append(p)
        if "csv" in formats:
            p = out / f"{report.command}.csv"
            p.write_text(report_csv(report), encoding="utf-8")
            written.append(p)
        p = out / "timing.json"
        p.write_text(json.dumps({"command": report.command, "configHash": report.config_hash,
                                 "wallTimeSeconds": report.wall_time}, indent=2) + "\n", encoding="utf-8")
        written.append(p)
    except OSError as exc:
        raise IoError(f"cannot write report to {str(out)!r}: {exc.strerror or exc}") from exc
    return written


# --- runs ---------------------------------------------------------------------------

def _bound_inputs(opts: RunOptions) -> dict:
    return {k: v for k, v in opts.bound.items() if k != "name"}


def _report(cfg, opts, command, bound, points, meta, axis=None, t0=None) -> RunReport:
    return RunReport(__version__, config_hash(cfg, opts), int(cfg.seed), cfg.kind, command, bound,
                     _jsonable(cfg.to_dict()), _jsonable(meta), points, axis,
                     0.0 if t0 is None else time.perf_counter() - t0)


def _effective(cfg, opts, bound, seed):
    if seed is not None:
        cfg = cfg.with_(seed=int(seed))
    opts = RunOptions(dict(opts.bound), dict(opts.sweep))
    bound = bound or opts.bound.get("name", "cor22")
    opts.bound["name"] = bound
    return cfg, opts, bound


def run_certify(cfg: ScenarioConfig, bound: str | None = None, opts: RunOptions | None = None,
                seed: int | None = None) -> tuple[RunReport, int]:
    """Evaluate one certificate; returns the report and the exit code."""
    t0 = time.perf_counter()
    cfg, opts, bound = _effective(cfg, opts or RunOptions(), bound, seed)
    sc = validate(cfg)
    try:
        risk, cert = sc.run(bound, **_bound_inputs(opts))
    except (EnumerationCap, NetTooLarge) as exc:
        raise _cap_error(exc) from exc
    rep = _report(cfg, opts, "certify", bound, [_point(None, cfg.seed, risk, cert)], sc.meta, t0=t0)
    return rep, EXIT_OK if rep.all_hold else EXIT_FAIL


def run_sweep_report(cfg: ScenarioConfig, axis: str | None = None, values=None, seeds=None,
                     bound: str | None = None, opts: RunOptions | None = None, seed: int | None = None,
                     jobs: int = 1) -> tuple[RunReport, int]:
    """Sweep one axis; flags override the config's [sweep] table."""
    t0 = time.perf_counter()
    cfg, opts, bound = _effective(cfg, opts or RunOptions(), bound, seed)
    axis = axis or opts.sweep.get("axis")
    values = values if values is not None else opts.sweep.get("values")
    if not axis or not values:
        raise ConfigError("a sweep needs an axis and a nonempty list of values ([sweep] or --axis/--values)")
    if seeds is None:
        seeds = opts.sweep.get("seeds") if seed is None else None
    if seeds is None:
        seeds = [int(cfg.seed)]
    opts.sweep = {"axis": axis, "values": list(values), "seeds": [int(s) for s in seeds]}
    sc = validate(cfg)
    try:
        res = run_sweep(cfg, axis, values, seeds, bound=bound, jobs=jobs, **_bound_inputs(opts))
    except (EnumerationCap, NetTooLarge) as exc:
        raise _cap_error(exc) from exc
    points = [_point(v, s, r, c) for (v, r, c), s in zip(res.points, res.seeds)]
    rep = _report(cfg, opts, "sweep", bound, points, sc.meta, axis=axis, t0=t0)
    return rep, EXIT_OK if rep.all_hold else EXIT_FAIL


# --- argument handling ----------------------------------------------------------------

def _parse_values(text: str) -> list:
    out = []
    for tok in text.split(","):
        tok = tok.strip()
        if not tok:
            continue
        try:
            out.append(int(tok))
        except ValueError:
            try:
                out.append(float(tok))
            except ValueError:
                out.append(tok)
    return out


def _jobs(arg) -> int:
    if arg is not None:
        return max(1, int(arg))
    env = os.environ.get("QGEN_JOBS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ConfigError(f"QGEN_JOBS must be an integer, got {env!r}") from None
    return 1


def _formats(fmt: str) -> tuple:
    return ("json", "csv") if fmt == "both" else (fmt,)


def make_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="qgen", description="Generalization certificates for CQ learning scenarios.")
    ap.add_argument("--version", action="version", version=f"qgen {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", required=True, metavar="PATH", help="TOML scenario file")
        p.add_argument("--bound", choices=BOUND_NAMES, help="bound to certify (default: config or cor22)")
        p.add_argument("--out", default="qgen-out", metavar="DIR", help="report directory")
        p.add_argument("--seed", type=int, help="override the config seed")
        p.add_argument("--format", choices=("json", "csv", "both"), default="both")
        p.add_argument("--quiet", action="store_true", help="no per-point summary on stdout")

    p = sub.add_parser("certify", help="certify one scenario")
    common(p)
    p = sub.add_parser("sweep", help="certify along one parameter axis")
    common(p)
    p.add_argument("--axis", help="parameter to vary (overrides [sweep].axis)")
    p.add_argument("--values", type=_parse_values, help="comma-separated axis values")
    p.add_argument("--seeds", type=_parse_values, help="comma-separated seeds per value")
    p.add_argument("--jobs", type=int, help="worker processes (default: $QGEN_JOBS or 1)")
    p = sub.add_parser("scenarios", help="scenario catalogue")
    p.add_argument("action", choices=("list",))
    p = sub.add_parser("selftest", help="run the randomized invariant suites")
    p.add_argument("--full", action="store_true", help="full instance counts (minutes)")
    p.add_argument("--seed", type=int, default=0)
    return ap


def _summary(rep: RunReport, stream):
    for p in rep.points:
        c = p["certificate"]
        tag = "holds" if c["holds"] else "FAILS"
        lead = f"{rep.axis}={p['axis']} seed={p['seed']} " if rep.axis else ""
        print(f"{lead}{c['boundName']}: |gen|={c['genAbs']:.6g} rhs={c['rhs']:.6g} "
              f"slack={c['slack']:.3g} {tag}", file=stream)


def _main(argv) -> int:
    args = make_parser().parse_args(argv)
    if args.command == "scenarios":
        for k in KINDS:
            print(f"{k:22s} {_DESCRIPTIONS[k]}")
        return EXIT_OK
    if args.command == "selftest":
        from .checks import run_all
        results = run_all(seed=args.seed, quick=not args.full)
        for r in results:
            print(r.line())
        return EXIT_OK if all(r.passed for r in results) else EXIT_FAIL
    cfg, opts = load_config(args.config)
    if args.command == "certify":
        rep, code = run_certify(cfg, args.bound, opts, args.seed)
    else:
        seeds = [int(s) for s in args.seeds] if args.seeds else None
        rep, code = run_sweep_report(cfg, args.axis, args.values, seeds, args.bound, opts, args.seed,
                                     _jobs(args.jobs))
    emit_report(rep, args.out, _formats(args.format))
    if not args.quiet:
        _summary(rep, sys.stdout)
    if code != EXIT_OK:
        for p in rep.points:
            if not p["certificate"]["holds"]:
                print("failing certificate: " + canonical_json(p["certificate"]), file=sys.stderr)
    return code


def main(argv=None) -> int:
    try:
        return _main(argv)
    except InvalidMgfBound as exc:
        print(f"qgen: invalid MGF bound: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except (ConfigError, IoError, NotFactorized, DimensionCap) as exc:
        print(f"qgen: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (SolverFailure, RangeExhausted, SingularLog) as exc:
        print(f"qgen: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
