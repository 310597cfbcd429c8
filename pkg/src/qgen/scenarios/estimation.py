"""Learning a parameter-estimation POVM from labeled copies.

Site i carries a parameter z_i ∈ Θ drawn from P together with m_test test and
m_train training copies of ρ(z_i).  Each hypothesis w is a POVM
{F_w(ẑ)}_{ẑ∈Θ} on m_test copies, and the loss of site i is
Σ_ẑ ‖z_i − ẑ‖_p F_w(ẑ).

The default learner splits each training block into groups of m_test
copies, measures group g with hypothesis g mod |W|, and picks the
hypothesis whose estimates have the smallest total error against the
labels.  ``rule = "prior"`` ignores the data and draws w from fixed weights.
"""
from __future__ import annotations

import dataclasses
import itertools
import math

import numpy as np

from ..bounds import LocalLoss, LossFamily, certify
from ..cqdata import Learner, Povm, SiteModel, iid_ensemble
from ..errors import ConfigError
from ..qmat import DensityOperator, EffectOperator, HermitianObservable, SubsystemShape, hermitian_fn
from .base import Scenario
from .config import ScenarioConfig, check_keys, normalized, parse_effect, parse_state

DENSE_DIM = 1024
OUTCOME_CAP = 4096
TIE_TOL = 1e-12

_HYP_KEYS = ("povms", "norm_p")
_DIST_KEYS = ("thetas", "probs", "states", "family", "noise")
_LEARNER_KEYS = ("rule", "weights", "w")


def _kron_all(ops):
    out = np.ones((1, 1), dtype=complex)
    for o in ops:
        out = np.kron(out, o)
    return out


class EstimationModel:
    def __init__(self, cfg: ScenarioConfig):
        h, dist, ln = cfg.hypotheses, cfg.distribution, cfg.learner
        check_keys(h, _HYP_KEYS, "hypotheses")
        check_keys(dist, _DIST_KEYS, "distribution")
        check_keys(ln, _LEARNER_KEYS, "learner")
        d, rng = cfg.d, cfg.rng(4)
        self.d, self.m, self.mt, self.mtr = d, cfg.m, cfg.m_test, cfg.m_train
        thetas = dist.get("thetas", [0.0, math.pi / 2])
        self.theta = np.atleast_2d(np.asarray(thetas, dtype=float))
        if self.theta.shape[0] == 1 and len(thetas) > 1:
            self.theta = self.theta.T
        nt = len(self.theta)
        self.P = normalized(dist.get("probs", [1 / nt] * nt), "probs")
        if len(self.P) != nt:
            raise ConfigError("probs length differs from thetas")
        if "states" in dist:
            self.rho = [parse_state(s, d, rng).matrix for s in dist["states"]]
            if len(self.rho) != nt:
                raise ConfigError("states length differs from thetas")
        else:
            fam = dist.get("family", "ry")
            if fam != "ry" or d != 2 or self.theta.shape[1] != 1:
                raise ConfigError("the 'ry' family needs d = 2 and scalar thetas; list states otherwise")
            noise = float(dist.get("noise", 0.0))
            if not 0 <= noise <= 1:
                raise ConfigError("noise must lie in [0, 1]")
            self.rho = []
            for (th,) in self.theta:
                v = np.array([math.cos(th / 2), math.sin(th / 2)])
                self.rho.append((1 - noise) * np.outer(v, v) + noise * np.eye(2) / 2)
        self.p_norm = float(h.get("norm_p", 2.0))
        if self.p_norm < 1:
            raise ConfigError("norm_p must be at least 1")
        diff = self.theta[:, None, :] - self.theta[None, :, :]
        self.dist = np.linalg.norm(diff, ord=self.p_norm, axis=2) if self.theta.shape[1] > 1 \
            else np.abs(diff[:, :, 0])
        self.Bp = float(self.dist.max())

        dt = d ** self.mt
        self.block_states = [_kron_all([r] * self.mt) for r in self.rho]
        specs = h.get("povms", [{"kind": "projective", "axis": [0, 0, 1], "estimates": [0, nt - 1]},
                                {"kind": "projective", "axis": [1, 0, 0], "estimates": [nt - 1, 0]}])
        self.F = [self._povm(s, rng, dt) for s in specs]
        if not self.F:
            raise ConfigError("hypothesis set is empty")
        for k, F in enumerate(self.F):
            if np.max(np.abs(sum(F) - np.eye(dt))) > 1e-9:
                raise ConfigError(f"hypothesis POVM {k} does not sum to the identity")

        self.rule = ln.get("rule", "erm")
        nh = len(self.F)
        if self.rule == "erm":
            if self.mtr % self.mt or (self.mtr // self.mt) % nh:
                raise ConfigError("m_train must be a multiple of |W|·m_test for the erm learner")
            self.groups = self.mtr // self.mt
            n_out = nt ** (self.m * self.groups)
            if n_out > OUTCOME_CAP:
                raise ConfigError(f"{n_out} training outcome tuples exceed {OUTCOME_CAP}")
        elif self.rule == "prior":
            self.weights = normalized(ln.get("weights", [1 / nh] * nh), "learner.weights")
            if len(self.weights) != nh:
                raise ConfigError("learner.weights length differs from the hypothesis count")
        elif self.rule == "fixed":
            self.w0 = int(ln.get("w", 0))
            if not 0 <= self.w0 < nh:
                raise ConfigError("learner.w out of range")
        else:
            raise ConfigError(f"unknown learner rule {self.rule!r}")

    def _povm(self, spec, rng, dt) -> list:
        nt = len(self.theta)
        kind = spec.get("kind")
        if kind == "pgm":
            avg = sum(p * r for p, r in zip(self.P, self.block_states))
            inv = hermitian_fn(HermitianObservable(avg, SubsystemShape.single("b", dt)),
                               lambda x: np.where(x > 1e-12, 1 / np.sqrt(np.maximum(x, 1e-300)), 0.0)).matrix
            F = [inv @ (p * r) @ inv for p, r in zip(self.P, self.block_states)]
            # complete on the kernel of the average state
            F[0] = F[0] + (np.eye(dt) - sum(F))
            return F
        if kind == "trivial":
            k = int(spec.get("estimate", 0))
            return [np.eye(dt) * (j == k) for j in range(nt)]
        if kind == "prior":
            return [np.eye(dt) * p for p in self.P]
        if kind == "projective":
            if self.d != 2:
                raise ConfigError("projective hypotheses need d = 2")
            up = parse_effect(list(spec.get("axis", [0, 0, 1])), 2, rng).matrix
            est = spec.get("estimates", [0, nt - 1])
            F = [np.zeros((dt, dt), dtype=complex) for _ in range(nt)]
            for bits in itertools.product((0, 1), repeat=self.mt):
                op = _kron_all([up if b else np.eye(2) - up for b in bits])
                F[int(est[0] if 2 * sum(bits) >= self.mt else est[1])] += op
            return F
        if kind == "effects":
            if self.mt != 1:
                raise ConfigError("explicit effect hypotheses need m_test = 1")
            F = [parse_effect(e, self.d, rng).matrix for e in spec.get("effects", [])]
            if len(F) != nt:
                raise ConfigError("explicit effect lists must have one effect per theta")
            return F
        raise ConfigError(f"unknown hypothesis POVM kind {kind!r}")

    @property
    def n_hyp(self) -> int:
        return len(self.F)


def build_parameter_estimation(cfg: ScenarioConfig):
    """(ensemble, learner, loss) for the parameter-estimation task."""
    model = EstimationModel(cfg)
    d, m, mt, mtr, nt, nh = model.d, model.m, model.mt, model.mtr, len(model.theta), model.n_hyp
    dim = d ** (m * (mt + mtr))
    if dim > DENSE_DIM:
        raise ConfigError(f"state dimension {dim} exceeds {DENSE_DIM}")
    test = tuple(tuple(f"t{i}_{l}" for l in range(mt)) for i in range(m))
    train = tuple(tuple(f"r{i}_{l}" for l in range(mtr)) for i in range(m))
    full = [_kron_all([r] * (mt + mtr)) for r in model.rho]

    def state(i, z):
        labels = list(test[i]) + list(train[i])
        return DensityOperator(full[z], SubsystemShape(labels, [d] * len(labels)))

    site = SiteModel(m, tuple(range(nt)), tuple(model.P), state, test, train)
    ens = iid_ensemble(site)
    tr_labels = [l for t in train for l in t]
    tr_shape = SubsystemShape(tr_labels, [d] * len(tr_labels))
    dtr = tr_shape.total
    cache: dict = {}

    def povm_for(s):
        if s in cache:
            return cache[s]
        acc = [np.zeros((dtr, dtr), dtype=complex) for _ in range(nh)]
        if model.rule == "prior":
            for w in range(nh):
                acc[w] = model.weights[w] * np.eye(dtr)
        elif model.rule == "fixed":
            acc[model.w0] = np.eye(dtr)
        else:
            G = model.groups
            hyp_of = [g % nh for g in range(G)]
            for outs in itertools.product(range(nt), repeat=m * G):
                o = np.array(outs).reshape(m, G)
                scores = np.zeros(nh)
                for w in range(nh):
                    gs = [g for g in range(G) if hyp_of[g] == w]
                    scores[w] = sum(np.mean([model.dist[s[i], o[i, g]] for g in gs]) for i in range(m))
                w = int(np.argmax(scores <= scores.min() + TIE_TOL))
                acc[w] = acc[w] + _kron_all([model.F[hyp_of[g]][o[i, g]] for i in range(m) for g in range(G)])
        cache[s] = Povm(tuple((w, EffectOperator(acc[w], tr_shape)) for w in range(nh)))
        return cache[s]

    lr = Learner.measure_only(povm_for, tr_shape)

    def term(i, z, w):
        op = sum(model.dist[z, zh] * model.F[w][zh] for zh in range(nt))
        return HermitianObservable(op, SubsystemShape(list(test[i]), [d] * mt))

    loss = LossFamily.from_local(LocalLoss(m, term, test, tuple(() for _ in range(m))))
    return ens, lr, loss


def scenario(cfg: ScenarioConfig) -> Scenario:
    model = EstimationModel(cfg)
    ens, lr, loss = build_parameter_estimation(cfg)
    sc = Scenario(cfg, ens, lr, loss, {"Bp": model.Bp, "normP": model.p_norm, "hypothesisCount": model.n_hyp})

    def run(bound: str = "cor22", **inputs):
        ev = sc.evaluation()
        risk, cert = ev.risk, certify(ens, lr, loss, bound, evaluation=ev, **inputs)
        I = cert.mi_term
        extra = dict(cert.extra)
        extra.update(Bp=model.Bp,
                     bpTerm=math.sqrt(model.Bp / (2 * model.m) * I),
                     hoeffdingTerm=math.sqrt(model.Bp ** 2 / (2 * model.m) * I))
        return risk, dataclasses.replace(cert, extra=extra)

    sc.runner = run
    return sc
