"""Learning a Boolean function from entangled (purified) examples.

Each site holds |φ⟩ = Σ_z √P(z) |z⟩_test |z⟩_train with z = (x, y),
x ∈ {0,1}^n and y ∈ {0,1}.  There is no classical record.  The learner reads
the training register in the computational basis and writes the hypothesis
into a |W|-dimensional register through P(w | s); the loss is the diagonal
0/1 loss averaged over sites.  Because every operator involved is diagonal,
the quantum risks reduce to the classical ones and I(test; hyp) = I(S; W).
"""
from __future__ import annotations

import itertools
import math

import numpy as np

from ..bounds import LossFamily
from ..cqdata import Channel, CQEnsemble, Learner, Povm
from ..entropy import classical_mi
from ..errors import ConfigError
from ..mgf import classical_profile, fit_subgaussian
from ..qmat import DensityOperator, EffectOperator, HermitianObservable, SubsystemShape
from .base import Scenario
from .config import ENUM_CAP, ScenarioConfig, check_keys, normalized

DENSE_DIM = 4096
RECORD = ()
OUTCOME = "run"

_HYP_KEYS = ("functions",)
_DIST_KEYS = ("n_bits", "probs")
_LEARNER_KEYS = ("rule", "inverse_temperature", "table")


class EntangledModel:
    """Classical tables (P, W, ℓ, P(w|s)) behind the entangled scenario."""

    def __init__(self, cfg: ScenarioConfig):
        h, dist, ln = cfg.hypotheses, cfg.distribution, cfg.learner
        check_keys(h, _HYP_KEYS, "hypotheses")
        check_keys(dist, _DIST_KEYS, "distribution")
        check_keys(ln, _LEARNER_KEYS, "learner")
        self.n_bits = int(dist.get("n_bits", 1))
        if self.n_bits < 1:
            raise ConfigError("n_bits must be positive")
        nx = 2 ** self.n_bits
        self.nx, self.nz, self.m = nx, 2 * nx, cfg.m
        self.P = normalized(dist.get("probs", [1 / self.nz] * self.nz), "probs")
        if len(self.P) != self.nz:
            raise ConfigError(f"probs must have 2^(n_bits+1) = {self.nz} entries")
        funcs = h.get("functions", "all")
        if funcs == "all":
            funcs = [list(t) for t in itertools.product((0, 1), repeat=nx)]
        self.W = [tuple(int(b) for b in f) for f in funcs]
        if not self.W or any(len(f) != nx or set(f) - {0, 1} for f in self.W):
            raise ConfigError(f"each hypothesis must be a 0/1 table of length {nx}")
        # ℓ(w, z) with z = 2x + y
        self.ell = np.array([[float(w[z // 2] != z % 2) for z in range(self.nz)] for w in self.W])
        size = self.nz ** self.m * len(self.W)
        if size > ENUM_CAP:
            raise ConfigError(f"|Z|^m·|W| = {size} exceeds enum_cap = {ENUM_CAP}")
        self.records = list(itertools.product(range(self.nz), repeat=self.m))
        self.cond = self._conditional(ln)

    @property
    def n_hyp(self) -> int:
        return len(self.W)

    def emp_risk(self, s) -> np.ndarray:
        return self.ell[:, list(s)].mean(axis=1)

    def _conditional(self, ln) -> np.ndarray:
        rule = ln.get("rule", "gibbs")
        nh = self.n_hyp
        out = np.zeros((len(self.records), nh))
        if rule == "table":
            tab = np.asarray(ln.get("table"), dtype=float)
            if tab.shape != out.shape or np.any(tab < 0) or np.any(np.abs(tab.sum(axis=1) - 1) > 1e-9):
                raise ConfigError(f"learner.table must be a {out.shape} row-stochastic array")
            return tab / tab.sum(axis=1, keepdims=True)
        for r, s in enumerate(self.records):
            risk = self.emp_risk(s)
            if rule == "erm":
                out[r, int(np.argmax(risk <= risk.min() + 1e-12))] = 1.0
            elif rule == "gibbs":
                g = float(ln.get("inverse_temperature", 2.0))
                e = np.exp(-g * self.m * (risk - risk.min()))
                out[r] = e / e.sum()
            elif rule == "uniform":
                out[r] = 1.0 / nh
            else:
                raise ConfigError(f"unknown learner rule {rule!r}")
        return out

    def prob_s(self, s) -> float:
        return float(np.prod(self.P[list(s)]))


def classical_reference(model: EntangledModel) -> dict:
    """Independent classical enumeration of risks, I(S;W) and the loss law."""
    ps = np.array([model.prob_s(s) for s in model.records])
    joint = ps[:, None] * model.cond
    emp_s = np.array([model.emp_risk(s) for s in model.records])  # (s, w)
    emp = float(np.sum(joint * emp_s))
    pw = joint.sum(axis=0)
    true_w = model.ell @ model.P
    true_ = float(pw @ true_w)
    mi = classical_mi({(r, w): joint[r, w] for r in range(len(ps)) for w in range(model.n_hyp)
                       if joint[r, w] > 0})
    samples = [(ps[r] * pw[w], emp_s[r, w]) for r in range(len(ps)) for w in range(model.n_hyp)
               if ps[r] * pw[w] > 0]
    beta = fit_subgaussian(classical_profile(samples)).alpha
    return {"empirical": emp, "true": true_, "gen": true_ - emp, "mi": mi, "beta": beta,
            "cor22": math.sqrt(2 * beta ** 2 * mi)}


def _phi(model: EntangledModel) -> np.ndarray:
    nz = model.nz
    v = np.zeros(nz * nz)
    for z in range(nz):
        v[z * nz + z] = math.sqrt(model.P[z])
    return v


def build_entangled_pac(cfg: ScenarioConfig):
    """(ensemble, learner, loss) for the purified-data function learning task."""
    model = EntangledModel(cfg)
    m, nz, nh = model.m, model.nz, model.n_hyp
    dim = nz ** (2 * m)
    if dim > DENSE_DIM:
        raise ConfigError(f"state dimension {dim} exceeds {DENSE_DIM}; reduce m or n_bits")
    test = [f"t{i}" for i in range(m)]
    train = [f"r{i}" for i in range(m)]
    # |φ⟩^{⊗m} ordered (t0 r0 t1 r1 ...) then permuted to tests first
    psi = np.ones(1)
    phi = _phi(model)
    for _ in range(m):
        psi = np.kron(psi, phi)
    psi = psi.reshape([nz] * (2 * m))
    psi = np.transpose(psi, [2 * i for i in range(m)] + [2 * i + 1 for i in range(m)]).reshape(-1)
    shape = SubsystemShape(test + train, [nz] * (2 * m))
    rho = DensityOperator(np.outer(psi, psi), shape)
    ens = CQEnsemble([(RECORD, 1.0, rho)], test, train)

    tr_shape = SubsystemShape(train, [nz] * m)
    hyp_shape = SubsystemShape.single("h", nh)
    povm = Povm(((OUTCOME, EffectOperator(np.eye(tr_shape.total), tr_shape)),))
    kraus = []
    for r in range(len(model.records)):
        # record index r is the computational-basis index of the train register
        for w in range(nh):
            q = model.cond[r, w]
            if q > 0:
                k = np.zeros((nh, tr_shape.total))
                k[w, r] = math.sqrt(q)
                kraus.append(k)
    channel = Channel(tuple(kraus), tr_shape, hyp_shape)
    lr = Learner(lambda s: povm, lambda s, w: channel, hyp_shape)

    out_shape = SubsystemShape(test + ["h"], [nz] * m + [nh])
    diag = np.zeros([nz] * m + [nh])
    for i in range(m):
        for z in range(nz):
            sl = [slice(None)] * m + [slice(None)]
            sl[i] = z
            diag[tuple(sl)] += model.ell[:, z] / m
    L = HermitianObservable(np.diag(diag.reshape(-1)), out_shape)
    loss = LossFamily(lambda s, w: L)
    return ens, lr, loss


def scenario(cfg: ScenarioConfig) -> Scenario:
    ens, lr, loss = build_entangled_pac(cfg)
    model = EntangledModel(cfg)
    return Scenario(cfg, ens, lr, loss, {"hypothesisCount": model.n_hyp, "alphabetSize": model.nz})
