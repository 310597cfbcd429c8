"""Scenario configuration records and small parsers for state/effect specs."""
from __future__ import annotations

import copy
import math
from dataclasses import dataclass, field, replace
from typing import Any

import numpy as np

from ..errors import ConfigError
from ..qmat import (
    DensityOperator,
    EffectOperator,
    SubsystemShape,
    basis_projector,
    bloch_operator,
    random_density,
    random_unitary,
)

KINDS = ("stateClassification", "pacStateLearning", "entangledPac", "parameterEstimation")
_ALIASES = {
    "state_classification": "stateClassification",
    "pac_state_learning": "pacStateLearning",
    "entangled_pac": "entangledPac",
    "parameter_estimation": "parameterEstimation",
}
ENUM_CAP = 2_000_000
DENSE_DIM_CAP = 4096


def canonical_kind(kind: str) -> str:
    k = _ALIASES.get(kind, kind)
    if k not in KINDS:
        raise ConfigError(f"unknown scenario kind {kind!r}; expected one of {KINDS}")
    return k


@dataclass(frozen=True)
class ScenarioConfig:
    """Sizes plus kind-specific tables for one scenario.

    ``hypotheses``, ``distribution`` and ``learner`` are plain mappings whose
    keys are documented per scenario builder.
    """

    kind: str
    d: int = 2
    m: int = 1
    m_test: int = 1
    m_train: int = 1
    eps: float = 0.1
    hypotheses: dict = field(default_factory=dict)
    distribution: dict = field(default_factory=dict)
    learner: dict = field(default_factory=dict)
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "kind", canonical_kind(self.kind))
        for name in ("d", "m", "m_test", "m_train"):
            v = getattr(self, name)
            if not isinstance(v, (int, np.integer)) or isinstance(v, bool) or v < 1:
                raise ConfigError(f"{name} must be a positive integer, got {v!r}")
        if not (0 <= int(self.seed) < 2 ** 64):
            raise ConfigError("seed must fit in 64 unsigned bits")
        if not (self.eps > 0):
            raise ConfigError("eps must be positive")

    def with_(self, **kw) -> "ScenarioConfig":
        return replace(self, **kw)

    def rng(self, salt: int = 0) -> np.random.Generator:
        return np.random.default_rng([int(self.seed), int(salt)])

    def to_dict(self) -> dict:
        return {
            "kind": self.kind, "d": self.d, "m": self.m, "m_test": self.m_test,
            "m_train": self.m_train, "eps": self.eps, "seed": int(self.seed),
            "hypotheses": copy.deepcopy(self.hypotheses),
            "distribution": copy.deepcopy(self.distribution),
            "learner": copy.deepcopy(self.learner),
        }


def normalized(probs, what: str) -> np.ndarray:
    p = np.asarray(probs, dtype=float)
    if p.ndim != 1 or p.size == 0 or np.any(p < 0) or not np.all(np.isfinite(p)):
        raise ConfigError(f"{what}: probabilities must be a nonempty nonnegative list")
    if abs(p.sum() - 1) > 1e-9:
        raise ConfigError(f"{what}: probabilities sum to {p.sum()!r}, not 1")
    return p / p.sum()


def _matrix(spec, d: int) -> np.ndarray:
    if isinstance(spec, dict) and "re" in spec:
        m = np.asarray(spec["re"], dtype=float) + 1j * np.asarray(spec.get("im", 0.0), dtype=float)
    else:
        m = np.asarray(spec, dtype=complex)
    if m.shape != (d, d):
        raise ConfigError(f"matrix spec has shape {m.shape}, expected {(d, d)}")
    return m


def parse_state(spec: Any, d: int, rng: np.random.Generator, label: str = "q") -> DensityOperator:
    """State from a spec.

    Accepted forms: ``"basis:k"``, ``"mixed"``, ``"plus"``/``"minus"`` (qubit),
    ``"random_pure"``, ``"random_mixed"``, a Bloch 3-vector (qubit), or a
    d×d matrix (optionally ``{"re": ..., "im": ...}``).
    """
    shape = SubsystemShape.single(label, d)
    try:
        if isinstance(spec, str):
            if spec.startswith("basis:"):
                return DensityOperator(basis_projector(int(spec[6:]), d), shape)
            if spec == "mixed":
                return DensityOperator(np.eye(d) / d, shape)
            if spec in ("plus", "minus"):
                _need_qubit(d, spec)
                return DensityOperator(bloch_operator([1 if spec == "plus" else -1, 0, 0]), shape)
            if spec == "random_pure":
                return random_density(shape, rng, rank=1)
            if spec == "random_mixed":
                return random_density(shape, rng)
            raise ConfigError(f"unknown state spec {spec!r}")
        arr = np.asarray(spec if not isinstance(spec, dict) else 0, dtype=object)
        if not isinstance(spec, dict) and arr.ndim == 1 and len(spec) == 3:
            _need_qubit(d, "Bloch vector")
            r = np.asarray(spec, dtype=float)
            if np.linalg.norm(r) > 1 + 1e-12:
                raise ConfigError(f"Bloch vector {list(r)} has norm > 1")
            return DensityOperator(bloch_operator(r), shape)
        return DensityOperator(_matrix(spec, d), shape)
    except ConfigError:
        raise
    except Exception as exc:
        raise ConfigError(f"invalid state spec {spec!r}: {exc}") from exc


def parse_effect(spec: Any, d: int, rng: np.random.Generator, label: str = "q") -> EffectOperator:
    """Effect from a spec: ``"basis:k"``, ``"random_projector"``, Bloch vector, or matrix."""
    shape = SubsystemShape.single(label, d)
    try:
        if isinstance(spec, str):
            if spec.startswith("basis:"):
                return EffectOperator(basis_projector(int(spec[6:]), d), shape)
            if spec == "random_projector":
                v = random_unitary(d, rng)[:, 0]
                return EffectOperator(np.outer(v, v.conj()), shape)
            raise ConfigError(f"unknown effect spec {spec!r}")
        if not isinstance(spec, dict) and np.ndim(spec) == 1 and len(spec) == 3:
            _need_qubit(d, "Bloch vector")
            r = np.asarray(spec, dtype=float)
            if np.linalg.norm(r) > 1 + 1e-12:
                raise ConfigError(f"Bloch vector {list(r)} has norm > 1")
            return EffectOperator(bloch_operator(r), shape)
        return EffectOperator(_matrix(spec, d), shape)
    except ConfigError:
        raise
    except Exception as exc:
        raise ConfigError(f"invalid effect spec {spec!r}: {exc}") from exc


def _need_qubit(d, what):
    if d != 2:
        raise ConfigError(f"{what} requires d = 2")


def fibonacci_sphere(n: int, radius: float = 1.0) -> np.ndarray:
    """n nearly uniform points on the sphere of the given radius."""
    if n == 1:
        return np.array([[0.0, 0.0, radius]])
    k = np.arange(n)
    z = 1 - 2 * k / (n - 1)
    r = np.sqrt(np.clip(1 - z ** 2, 0, None))
    phi = k * math.pi * (3 - math.sqrt(5))
    return radius * np.stack([r * np.cos(phi), r * np.sin(phi), z], axis=1)


def check_keys(section: dict, allowed, where: str):
    extra = set(section) - set(allowed)
    if extra:
        raise ConfigError(f"unknown key(s) {sorted(extra)} in [{where}]")
