"""Scenario dispatch and parameter sweeps."""
from __future__ import annotations

import copy
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

from ..bounds import BoundCertificate, RiskReport
from ..errors import ConfigError
from . import classification, entangled, estimation, pac
from .base import Scenario
from .config import ScenarioConfig

_BUILDERS = {
    "stateClassification": classification.scenario,
    "pacStateLearning": pac.scenario,
    "entangledPac": entangled.scenario,
    "parameterEstimation": estimation.scenario,
}
_FIELDS = ("d", "m", "m_test", "m_train", "eps", "seed")
_SECTIONS = ("hypotheses", "distribution", "learner")


def build(cfg: ScenarioConfig) -> Scenario:
    """Build the scenario named by ``cfg.kind``."""
    return _BUILDERS[cfg.kind](cfg)


def set_axis(cfg: ScenarioConfig, axis: str, value) -> ScenarioConfig:
    """Copy of ``cfg`` with one parameter replaced.

    ``axis`` is a top-level size (``m``, ``m_test``, ``m_train``, ``d``,
    ``eps``, ``seed``) or a dotted key into a section, e.g.
    ``learner.inverse_temperature``.
    """
    if axis in _FIELDS:
        if axis in ("d", "m", "m_test", "m_train", "seed"):
            if float(value) != int(value):
                raise ConfigError(f"axis {axis} takes integer values, got {value!r}")
            value = int(value)
        return cfg.with_(**{axis: value if axis != "eps" else float(value)})
    section, _, key = axis.partition(".")
    if section not in _SECTIONS or not key:
        raise ConfigError(f"unknown sweep axis {axis!r}; use one of {_FIELDS} or <section>.<key>")
    table = copy.deepcopy(getattr(cfg, section))
    table[key] = value
    return cfg.with_(**{section: table})


@dataclass
class SweepResult:
    """Per-point risks and certificates, ordered by (axis value, seed)."""

    axis: str
    points: list = field(default_factory=list)  # (value, RiskReport, BoundCertificate)
    seeds: list = field(default_factory=list)  # seed of each point

    def __len__(self):
        return len(self.points)


def _run_point(args) -> tuple[RiskReport, BoundCertificate]:
    cfg, bound, inputs = args
    return build(cfg).run(bound, **inputs)


def _sort_key(value):
    try:
        return (0, float(value), "")
    except (TypeError, ValueError):
        return (1, 0.0, repr(value))


def run_sweep(cfg: ScenarioConfig, axis: str, values, seeds=None, bound: str = "cor22",
              jobs: int = 1, **inputs) -> SweepResult:
    """Evaluate one bound at every (value, seed) combination.

    Parameters
    ----------
    cfg : ScenarioConfig
        Base configuration.
    axis : str
        Parameter to vary, see :func:`set_axis`.
    values : iterable
        Axis values; the result is sorted by value, then seed.
    seeds : iterable of int, optional
        Seeds to run per value (default: ``cfg.seed`` only).
    jobs : int
        Worker processes.  Results do not depend on this.
    """
    values = list(values)
    seeds = [int(cfg.seed)] if seeds is None else [int(s) for s in seeds]
    grid = sorted(((v, s) for v in values for s in seeds), key=lambda t: (_sort_key(t[0]), t[1]))
    tasks = [(set_axis(cfg.with_(seed=s), axis, v), bound, inputs) for v, s in grid]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=min(jobs, len(tasks), os.cpu_count() or 1)) as pool:
            outs = list(pool.map(_run_point, tasks))
    else:
        outs = [_run_point(t) for t in tasks]
    res = SweepResult(axis)
    for (v, s), (risk, cert) in zip(grid, outs):
        res.points.append((v, risk, cert))
        res.seeds.append(s)
    return res
