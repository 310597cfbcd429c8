"""Entropies, mutual informations and the variational relative-entropy certificate.

All quantities are in nats.  Relative entropy returns ``math.inf`` when the
support condition fails; callers are expected to test for it explicitly.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from scipy.special import logsumexp

from .errors import ShapeMismatch, SingularLog, UnknownLabel, ValidationError
from .qmat import EIG_FLOOR, DensityOperator, Operator, partial_trace, tensor_product

SUP_TOL = 1e-10
INF = math.inf


def _eigh(rho: Operator):
    m = rho.matrix
    return np.linalg.eigh(0.5 * (m + m.conj().T))


def _shannon(p: np.ndarray) -> float:
    p = p[p > 0]
    return float(-np.sum(p * np.log(p)))


def binary_entropy(p: float) -> float:
    """h(p) in nats."""
    return _shannon(np.array([p, 1 - p], dtype=float))


def von_neumann_entropy(rho: DensityOperator) -> float:
    """-tr[ρ log ρ], with 0·log 0 = 0."""
    ev = np.clip(np.linalg.eigvalsh(0.5 * (rho.matrix + rho.matrix.conj().T)), 0, None)
    return max(_shannon(ev), 0.0)


def relative_entropy(rho: DensityOperator, sigma: DensityOperator) -> float:
    """D(ρ‖σ) = tr[ρ(log ρ − log σ)], or ``math.inf``.

    The support of σ is the span of its eigenvectors with eigenvalue above
    ``SUP_TOL``.  If ρ places more than ``SUP_TOL`` weight outside that span
    the result is infinite; otherwise log σ is taken on its support.
    """
    if rho.shape.dims != sigma.shape.dims:
        raise ShapeMismatch("relative_entropy operands have different shapes")
    ev_s, vec_s = _eigh(sigma)
    sup = ev_s > SUP_TOL
    # ρ expressed in σ's eigenbasis
    r = vec_s.conj().T @ rho.matrix @ vec_s
    diag = np.real(np.diag(r))
    outside = float(np.sum(diag[~sup]))
    if outside > SUP_TOL:
        return INF
    cross = float(np.sum(diag[sup] * np.log(ev_s[sup])))
    d = -von_neumann_entropy(rho) - cross
    return max(d, 0.0)


def qmi(rho: DensityOperator, cut_labels: Iterable[str]) -> float:
    """I(A;B) = H(A) + H(B) − H(AB) for the cut A = ``cut_labels``."""
    cut = list(cut_labels)
    for l in cut:
        rho.shape.index(l)
    rest = [l for l in rho.shape.labels if l not in set(cut)]
    if not cut or not rest:
        raise ValidationError("cut must be a proper nonempty subset of the labels")
    ha = von_neumann_entropy(partial_trace(rho, cut))
    hb = von_neumann_entropy(partial_trace(rho, rest))
    return max(ha + hb - von_neumann_entropy(rho), 0.0)


@dataclass(frozen=True)
class EnsembleOfStates:
    """Finite ensemble {(p_x, ρ_x)} on a common shape."""

    items: tuple

    def __post_init__(self):
        items = tuple((float(p), r) for p, r in self.items)
        object.__setattr__(self, "items", items)
        if not items:
            raise ValidationError("empty ensemble")
        tot = sum(p for p, _ in items)
        if abs(tot - 1) > 1e-9:
            raise ValidationError(f"ensemble probabilities sum to {tot!r}")
        d = items[0][1].shape.dims
        if any(r.shape.dims != d for _, r in items):
            raise ShapeMismatch("ensemble states differ in shape")

    def average(self) -> DensityOperator:
        m = sum(p * r.matrix for p, r in self.items)
        return DensityOperator.from_unnormalized(m, self.items[0][1].shape)


def holevo_information(ens: EnsembleOfStates) -> float:
    """χ = H(Σ p_x ρ_x) − Σ p_x H(ρ_x)."""
    avg = ens.average()
    val = von_neumann_entropy(avg) - sum(p * von_neumann_entropy(r) for p, r in ens.items if p > 0)
    return max(val, 0.0)


def classical_mi(joint) -> float:
    """I(S;W) of a joint distribution given as a ``JointDistribution`` or dict."""
    mass = getattr(joint, "mass", joint)
    ps: dict = {}
    pw: dict = {}
    for (s, w), p in mass.items():
        ps[s] = ps.get(s, 0.0) + p
        pw[w] = pw.get(w, 0.0) + p
    tot = 0.0
    for (s, w), p in mass.items():
        if p > 0:
            tot += p * math.log(p / (ps[s] * pw[w]))
    return max(tot, 0.0)


def log_trace_exp(h: np.ndarray) -> float:
    """log tr e^H computed stably from the spectrum."""
    ev = np.linalg.eigvalsh(0.5 * (h + h.conj().T))
    return float(logsumexp(ev))


def petz_certificate(sigma1: DensityOperator, sigma2: DensityOperator, H: Operator,
                     strict: bool = True) -> float:
    """tr[σ₁H] − log tr exp(log σ₂ + H), a lower bound on D(σ₁‖σ₂).

    With ``strict=False`` a rank-deficient σ₂ is handled by restricting the
    exponent to its support, which is the limit of the full-rank expression.
    """
    ev, vec = _eigh(sigma2)
    if ev[0] <= EIG_FLOOR:
        if strict:
            raise SingularLog(f"σ₂ has eigenvalue {ev[0]:.3g} <= floor {EIG_FLOOR}")
        sup = ev > EIG_FLOOR
        v = vec[:, sup]
        h = v.conj().T @ H.matrix @ v
        expo = np.diag(np.log(ev[sup])) + h
    else:
        expo = (vec * np.log(ev)) @ vec.conj().T + H.matrix
    first = float(np.real(np.einsum("ij,ji->", sigma1.matrix, H.matrix)))
    return first - log_trace_exp(expo)
