"""PAC learning of an unknown state from measured copies.

The data are labels z_1..z_2m drawn from P, each tagged with a two-outcome
effect E(z), plus m blocks of m_test test copies and m blocks of m_train
training copies of ρ₀.  The learner

1. builds an ε̃-net W₁ of the hypothesis states over the seminorm
   ‖w‖ = √((1/m) Σ_{j≤m} tr[E(z_j) ρ₀(w)]²), by greedy farthest-point
   insertion starting from hypothesis 0;
2. estimates tr[E(z_{m+i}) ρ₀] from m_train binary outcomes per block;
3. returns the ERM over W₁ of (1/m) Σ_i |tr[E(z_{m+i}) ρ₀(w)] − b̃_i|,
   taking the earliest net element on ties.

The local loss for block i is the expected absolute deviation between the
hypothesis prediction and an m_test-shot estimate,
f(z, w) = E_{K~Bin(m_test, p_z)} |v_w(z) − K/m_test|.

Risks are computed by exact enumeration over (z, binomial counts) when that
is small and by seeded Monte Carlo with common random numbers otherwise.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import binom

from ..bounds import LossFamily, RiskReport, make_certificate, quadratic_rhs
from ..cqdata import CQEnsemble, Learner, Povm
from ..entropy import classical_mi
from ..errors import ConfigError, NetTooLarge
from ..mgf import classical_profile, fit_subgaussian
from ..qmat import DensityOperator, EffectOperator, HermitianObservable, SubsystemShape, tensor_product
from .base import Scenario
from .config import (
    ENUM_CAP,
    ScenarioConfig,
    check_keys,
    fibonacci_sphere,
    normalized,
    parse_effect,
    parse_state,
)

EXACT_CAP = 200_000
DENSE_DIM = 256
TIE_TOL = 1e-12
DEFAULT_SAMPLES = 2000

_HYP_KEYS = ("states", "family", "count", "radii")
_DIST_KEYS = ("effects", "n_effects", "probs", "rho0")
_LEARNER_KEYS = ("evaluator", "samples")


class PacModel:
    """Tables v[w, z] = tr[E(z) ρ₀(w)] and p[z] = tr[E(z) ρ₀] with the learner rule."""

    def __init__(self, cfg: ScenarioConfig):
        h, dist, ln = cfg.hypotheses, cfg.distribution, cfg.learner
        check_keys(h, _HYP_KEYS, "hypotheses")
        check_keys(dist, _DIST_KEYS, "distribution")
        check_keys(ln, _LEARNER_KEYS, "learner")
        d, rng = cfg.d, cfg.rng(2)
        self.cfg = cfg
        self.d, self.m, self.m_test, self.m_train, self.eps = d, cfg.m, cfg.m_test, cfg.m_train, float(cfg.eps)

        if "states" in h:
            self.states = [parse_state(s, d, rng).matrix for s in h["states"]]
        else:
            fam = h.get("family", "fibonacci")
            if fam != "fibonacci":
                raise ConfigError(f"unknown hypothesis family {fam!r}")
            if d != 2:
                raise ConfigError("the fibonacci family needs d = 2; list explicit states otherwise")
            count = int(h.get("count", 32))
            self.states = [parse_state(list(r), d, rng).matrix
                           for rad in h.get("radii", [1.0, 0.5]) for r in fibonacci_sphere(count, float(rad))]
        if not self.states:
            raise ConfigError("hypothesis set is empty")

        if "effects" in dist:
            self.effects = [parse_effect(e, d, rng).matrix for e in dist["effects"]]
        else:
            self.effects = [parse_effect("random_projector", d, rng).matrix
                            for _ in range(int(dist.get("n_effects", 16)))]
        nz = len(self.effects)
        self.P = normalized(dist.get("probs", [1 / nz] * nz), "probs")
        if len(self.P) != nz:
            raise ConfigError("probs length differs from the effect count")
        r0 = dist.get("rho0", "hyp:0")
        if isinstance(r0, str) and r0.startswith("hyp:"):
            k = int(r0[4:])
            if not 0 <= k < len(self.states):
                raise ConfigError("rho0 hypothesis index out of range")
            self.rho0 = self.states[k]
        else:
            self.rho0 = parse_state(r0, d, rng).matrix

        self.evaluator = ln.get("evaluator", "auto")
        if self.evaluator not in ("auto", "exact", "montecarlo", "dense"):
            raise ConfigError(f"unknown evaluator {self.evaluator!r}")
        self.samples = int(ln.get("samples", DEFAULT_SAMPLES))
        if self.samples < 2:
            raise ConfigError("learner.samples must be at least 2")

        tr = lambda a, b: float(np.real(np.trace(a @ b)))
        self.v = np.array([[tr(e, s) for e in self.effects] for s in self.states])
        self.p = np.clip(np.array([tr(e, self.rho0) for e in self.effects]), 0.0, 1.0)
        k = np.arange(self.m_test + 1)
        pk = binom.pmf(k[None, :], self.m_test, self.p[:, None])  # (z, k)
        self.f = np.einsum("zk,wzk->wz", pk, np.abs(self.v[:, :, None] - k[None, None, :] / self.m_test))
        dev = np.abs(self.p[None, :] - self.v) @ self.P
        self.pred_err = dev
        self.best_err = float(dev.min())

    @property
    def n_hyp(self) -> int:
        return len(self.states)

    @property
    def n_z(self) -> int:
        return len(self.effects)

    # learner ---------------------------------------------------------------
    def net(self, z_net) -> np.ndarray:
        """Greedy farthest-point ε̃-net (global indices, insertion order)."""
        V = self.v[:, list(z_net)]
        m = V.shape[1]

        def dist_to(j):
            return np.sqrt(np.mean((V - V[j]) ** 2, axis=1)) if m else np.zeros(len(V))

        net = [0]
        mind = dist_to(0)
        while mind.max() > self.eps:
            j = int(np.argmax(mind))
            net.append(j)
            mind = np.minimum(mind, dist_to(j))
            if len(net) > ENUM_CAP:
                raise NetTooLarge("net size exceeds enum_cap")
        return np.array(net)

    def erm(self, net: np.ndarray, z_train, b_hat) -> int:
        scores = np.mean(np.abs(self.v[np.ix_(net, list(z_train))] - np.asarray(b_hat)[None, :]), axis=1)
        j = int(np.argmax(scores <= scores.min() + TIE_TOL))
        return int(net[j])

    def seminorm_distance(self, z_net, w1, w2) -> float:
        V = self.v[:, list(z_net)]
        return float(np.sqrt(np.mean((V[w1] - V[w2]) ** 2)))

    def excess(self, w) -> float:
        return float(self.pred_err[w] - self.best_err)

    def true_loss(self, w) -> float:
        return float(self.f[w] @ self.P)

    def beta0(self, ws=None) -> float:
        ws = range(self.n_hyp) if ws is None else ws
        return max(fit_subgaussian(classical_profile(list(zip(self.P, self.f[w])))).alpha for w in ws)


@dataclass(frozen=True)
class PacEstimate:
    """Risks and excess error of the learner, with Monte-Carlo standard errors (0 when exact)."""

    empirical: float
    true_: float
    gen: float
    gen_se: float
    excess: float
    excess_se: float
    mi: float
    mi_kind: str
    log_net: float
    net_size: float
    rhs_terms: float
    samples: int

    def to_dict(self) -> dict:
        return {"empirical": self.empirical, "true": self.true_, "gen": self.gen, "genStdErr": self.gen_se,
                "excess": self.excess, "excessStdErr": self.excess_se, "miTerm": self.mi, "miKind": self.mi_kind,
                "logNetSize": self.log_net, "netSize": self.net_size, "samples": self.samples}


def exact_size(model: PacModel) -> int:
    return model.n_z ** (2 * model.m) * (model.m_train + 1) ** model.m


def estimate_exact(model: PacModel) -> PacEstimate:
    """Full enumeration over z ∈ Z^{2m} and binomial counts."""
    m, mtr = model.m, model.m_train
    if exact_size(model) > EXACT_CAP:
        raise NetTooLarge(f"exact enumeration size {exact_size(model)} exceeds {EXACT_CAP}")
    beta0 = model.beta0()
    mass: dict = {}
    emp = ex = 0.0
    log_net = net_sz = 0.0
    kk = list(itertools.product(range(mtr + 1), repeat=m))
    for zs in itertools.product(range(model.n_z), repeat=2 * m):
        pz = float(np.prod(model.P[list(zs)]))
        if pz == 0:
            continue
        net = model.net(zs[:m])
        log_net += pz * math.log(len(net))
        net_sz += pz * len(net)
        ztr = zs[m:]
        pk = binom.pmf(np.arange(mtr + 1)[None, :], mtr, model.p[list(ztr)][:, None])
        for ks in kk:
            wk = pz * float(np.prod([pk[i, k] for i, k in enumerate(ks)]))
            if wk == 0:
                continue
            w = model.erm(net, ztr, np.array(ks) / mtr)
            mass[(zs, w)] = mass.get((zs, w), 0.0) + wk
            emp += wk * float(np.mean(model.f[w, list(ztr)]))
            ex += wk * model.excess(w)
    pw: dict = {}
    for (_, w), q in mass.items():
        pw[w] = pw.get(w, 0.0) + q
    true_ = sum(q * model.true_loss(w) for w, q in pw.items())
    mi = classical_mi(mass)
    return PacEstimate(emp, true_, true_ - emp, 0.0, ex, 0.0, mi, "exact", log_net, net_sz,
                       math.sqrt(2 * (beta0 ** 2 / m) * mi), 0)


def estimate_montecarlo(model: PacModel, samples: int | None = None, seed_salt: int = 7) -> PacEstimate:
    """Seeded Monte-Carlo estimate.

    The random stream depends only on the seed, so configurations differing
    in sizes share common random numbers where their draws overlap.
    """
    n = samples or model.samples
    m, mtr = model.m, model.m_train
    rng = model.cfg.rng(seed_salt)
    beta0 = model.beta0()
    gens = np.empty(n)
    exs = np.empty(n)
    emps = np.empty(n)
    trues = np.empty(n)
    lognet = np.empty(n)
    sizes = np.empty(n)
    rhs = np.empty(n)
    zs_all = rng.choice(model.n_z, size=(n, 2 * m), p=model.P)
    u = rng.random((n, m, mtr))
    for t in range(n):
        zs = zs_all[t]
        net = model.net(zs[:m])
        ztr = zs[m:]
        b_hat = np.mean(u[t] < model.p[ztr][:, None], axis=1)
        w = model.erm(net, ztr, b_hat)
        emps[t] = float(np.mean(model.f[w, ztr]))
        trues[t] = model.true_loss(w)
        gens[t] = trues[t] - emps[t]
        exs[t] = model.excess(w)
        lognet[t] = math.log(len(net))
        sizes[t] = len(net)
        rhs[t] = math.sqrt(2 * (beta0 ** 2 / m) * lognet[t])
    se = lambda x: float(np.std(x, ddof=1) / math.sqrt(n))
    return PacEstimate(float(emps.mean()), float(trues.mean()), float(gens.mean()), se(gens),
                       float(exs.mean()), se(exs), float(lognet.mean()), "netLogCardinality",
                       float(lognet.mean()), float(sizes.mean()), float(rhs.mean()), n)


def estimate(model: PacModel) -> PacEstimate:
    use = model.evaluator
    if use in ("auto", "dense"):
        use = "exact" if exact_size(model) <= EXACT_CAP else "montecarlo"
    return estimate_exact(model) if use == "exact" else estimate_montecarlo(model)


def _runner(model: PacModel):
    cache: dict = {}

    def run(bound: str = "cor22", **inputs):
        if "est" not in cache:
            cache["est"] = estimate(model)
        est = cache["est"]
        if bound not in ("cor22", "thm21"):
            raise ConfigError(f"bound {bound!r} is not available for the structured PAC evaluator")
        risk = RiskReport(est.empirical, est.true_, est.gen)
        beta = model.beta0() / math.sqrt(model.m)
        extra = est.to_dict()
        extra["eps"] = model.eps
        if est.mi_kind == "exact":
            rhs = quadratic_rhs(0.0, beta, 0.0, est.mi)
        else:
            # conditional on the net labels, I ≤ log|W₁|; averaged outside the root
            rhs = est.rhs_terms
        return risk, make_certificate(bound, est.gen, 0.0, 0.0, est.mi, 0.0, beta, rhs, rhs, extra)

    return run


# --- dense pipeline (tiny sizes, cross-checks) ----------------------------------

def build_pac_state_learning(cfg: ScenarioConfig):
    """Dense (ensemble, learner, loss) plus net metadata.

    Only feasible for tiny sizes: the joint state has dimension
    d^{m(m_test + m_train)}.
    """
    model = PacModel(cfg)
    d, m, mt, mtr = model.d, model.m, model.m_test, model.m_train
    dim = d ** (m * (mt + mtr))
    if dim > DENSE_DIM:
        raise ConfigError(f"dense PAC state dimension {dim} exceeds {DENSE_DIM}")
    size = model.n_z ** (2 * m) * model.n_hyp
    if size > ENUM_CAP:
        raise NetTooLarge(f"|S|·|W| = {size} exceeds enum_cap = {ENUM_CAP}")
    test = [f"t{i}_{l}" for i in range(m) for l in range(mt)]
    train = [f"r{i}_{l}" for i in range(m) for l in range(mtr)]
    full = tensor_product(*[DensityOperator(model.rho0, SubsystemShape.single(l, d)) for l in test + train])
    recs = list(itertools.product(range(model.n_z), repeat=2 * m))
    entries = [(s, float(np.prod(model.P[list(s)])), full) for s in recs]
    entries = [e for e in entries if e[1] > 0]
    ens = CQEnsemble(entries, test, train)
    tr_shape = SubsystemShape(train, [d] * len(train))
    eye = np.eye(d)
    bits = list(itertools.product((0, 1), repeat=m * mtr))
    nets = {}

    def povm_for(s):
        zs = list(s)
        if tuple(zs[:m]) not in nets:
            nets[tuple(zs[:m])] = model.net(zs[:m])
        net = nets[tuple(zs[:m])]
        acc = [np.zeros((dim_tr, dim_tr), dtype=complex) for _ in range(model.n_hyp)]
        for b in bits:
            bb = np.array(b).reshape(m, mtr)
            w = model.erm(net, zs[m:], bb.mean(axis=1))
            facs = [model.effects[zs[m + i]] if bb[i, l] else eye - model.effects[zs[m + i]]
                    for i in range(m) for l in range(mtr)]
            op = facs[0]
            for f in facs[1:]:
                op = np.kron(op, f)
            acc[w] = acc[w] + op
        return Povm(tuple((w, EffectOperator(acc[w], tr_shape)) for w in range(model.n_hyp)))

    dim_tr = d ** (m * mtr)
    lr = Learner.measure_only(povm_for, tr_shape)
    test_shape = SubsystemShape(test, [d] * len(test))
    cbits = list(itertools.product((0, 1), repeat=mt))
    eye_blk = np.eye(d ** mt)

    def loss_fn(s, w):
        acc = np.zeros((test_shape.total, test_shape.total), dtype=complex)
        for i in range(m):
            E = model.effects[s[m + i]]
            blk = np.zeros((d ** mt, d ** mt), dtype=complex)
            for c in cbits:
                op = np.ones((1, 1))
                for cl in c:
                    op = np.kron(op, E if cl else eye - E)
                blk += abs(model.v[w, s[m + i]] - np.mean(c)) * op
            ops = [eye_blk] * m
            ops[i] = blk
            g = ops[0]
            for o in ops[1:]:
                g = np.kron(g, o)
            acc += g / m
        return HermitianObservable(acc, test_shape)

    loss = LossFamily(loss_fn)
    meta = {"nets": lambda z: model.net(z), "model": model}
    return ens, lr, loss, meta


def scenario(cfg: ScenarioConfig) -> Scenario:
    model = PacModel(cfg)
    meta = {"hypothesisCount": model.n_hyp, "effectCount": model.n_z, "eps": model.eps,
            "bestPredictionError": model.best_err}
    if model.evaluator == "dense":
        ens, lr, loss, _ = build_pac_state_learning(cfg)
        return Scenario(cfg, ens, lr, loss, meta)
    sc = Scenario(cfg, meta=meta, runner=_runner(model))
    sc.meta["evaluator"] = "exact" if exact_size(model) <= EXACT_CAP and model.evaluator != "montecarlo" else "montecarlo"
    return sc
