"""Quantum state classification from labeled copies of weighted state pairs.

Site i carries a label z_i ∈ {0, 1} with P(z) = E[π_z], one test copy and
one training copy of σ_z (averaged over the pair distribution).  Hypotheses
are effects F(w) that declare label 1; the local loss is
(1 − z)(1 − F(w)) + z F(w).

The default learner measures every training copy with a probe POVM {G_b}
and picks the hypothesis minimizing Σ_i tr[ℓ_w(z_i) G_b/tr G_b] (lowest index
on ties).  When the pair is deterministic the learner's choice depends on
the data only through the counts n(z, b), which gives an exact evaluator
polynomial in m.
"""
from __future__ import annotations

import itertools
import math

import numpy as np
from scipy.special import gammaln

from ..bounds import (
    INFO_EPS,
    LocalLoss,
    LossFamily,
    RiskReport,
    check_dominates,
    make_certificate,
    quadratic_rhs,
)
from ..cqdata import Learner, Povm, SiteModel, iid_ensemble
from ..errors import ConfigError, EnumerationCap
from ..mgf import classical_profile, fit_subgaussian, legendre_dual_inverse, quadratic
from ..qmat import DensityOperator, EffectOperator, HermitianObservable, SubsystemShape, tensor_product
from .base import Scenario
from .config import ENUM_CAP, ScenarioConfig, check_keys, normalized, parse_effect, parse_state

DENSE_STATE_DIM = 256
TIE_TOL = 1e-9

_HYP_KEYS = ("family", "count", "effects")
_DIST_KEYS = ("pairs", "pair_probs", "pi0", "weights", "weight_probs")
_LEARNER_KEYS = ("rule", "probe", "w", "weights", "evaluator")


def projector_family(count: int, d: int) -> list:
    """Projectors onto cos(θ/2)|0⟩ + sin(θ/2)|1⟩, θ_k = 2πk/count."""
    out = []
    for k in range(count):
        th = 2 * math.pi * k / count
        v = np.zeros(d)
        v[0], v[1] = math.cos(th / 2), math.sin(th / 2)
        out.append(np.outer(v, v))
    return out


class _Model:
    """Parsed tables shared by the dense and count-based evaluators."""

    def __init__(self, cfg: ScenarioConfig):
        h, dist, ln = cfg.hypotheses, cfg.distribution, cfg.learner
        check_keys(h, _HYP_KEYS, "hypotheses")
        check_keys(dist, _DIST_KEYS, "distribution")
        check_keys(ln, _LEARNER_KEYS, "learner")
        d, rng = cfg.d, cfg.rng(1)
        if d < 2:
            raise ConfigError("state classification needs d >= 2")
        self.d, self.m = d, cfg.m

        if "effects" in h:
            self.F = [parse_effect(e, d, rng).matrix for e in h["effects"]]
        else:
            fam = h.get("family", "projectors")
            if fam != "projectors":
                raise ConfigError(f"unknown hypothesis family {fam!r}")
            self.F = projector_family(int(h.get("count", 4)), d)
        if not self.F:
            raise ConfigError("hypothesis set is empty")

        pairs = dist.get("pairs", [["basis:0", "basis:1"]])
        self.pairs = [(parse_state(a, d, rng).matrix, parse_state(b, d, rng).matrix) for a, b in pairs]
        self.pair_probs = normalized(dist.get("pair_probs", [1 / len(pairs)] * len(pairs)), "pair_probs")
        if len(self.pair_probs) != len(self.pairs):
            raise ConfigError("pair_probs length differs from pairs")
        if "weights" in dist:
            ws = np.asarray(dist["weights"], dtype=float)
            wp = normalized(dist.get("weight_probs", [1 / len(ws)] * len(ws)), "weight_probs")
            if ws.shape != wp.shape or np.any((ws < 0) | (ws > 1)):
                raise ConfigError("weights must lie in [0, 1] and match weight_probs")
            pi0 = float(ws @ wp)
        else:
            pi0 = float(dist.get("pi0", 0.5))
            if not 0 <= pi0 <= 1:
                raise ConfigError("pi0 must lie in [0, 1]")
        self.P = np.array([pi0, 1 - pi0])
        # test-copy marginal of each label
        self.sigma = [sum(q * p[z] for q, p in zip(self.pair_probs, self.pairs)) for z in (0, 1)]
        self.deterministic = len(self.pairs) == 1

        self.rule = ln.get("rule", "erm")
        if self.rule not in ("erm", "constant", "prior"):
            raise ConfigError(f"unknown learner rule {self.rule!r}")
        self.w0 = int(ln.get("w", 0))
        if not 0 <= self.w0 < len(self.F):
            raise ConfigError("learner.w out of range")
        if self.rule == "prior":
            self.prior = normalized(ln.get("weights", [1 / len(self.F)] * len(self.F)), "learner.weights")
            if len(self.prior) != len(self.F):
                raise ConfigError("learner.weights length differs from the hypothesis count")
        probe = ln.get("probe", "helstrom")
        if probe == "helstrom":
            gam = self.P[0] * self.sigma[0] - self.P[1] * self.sigma[1]
            ev, vec = np.linalg.eigh(gam)
            pos = vec[:, ev > 1e-12]
            g0 = pos @ pos.conj().T
            self.G = [g0, np.eye(d) - g0]
        elif probe == "computational":
            self.G = [np.diag(np.eye(d)[k]) for k in range(d)]
        else:
            raise ConfigError(f"unknown probe {probe!r}")
        self.evaluator = ln.get("evaluator", "auto")
        if self.evaluator not in ("auto", "dense", "counts"):
            raise ConfigError(f"unknown evaluator {self.evaluator!r}")

        eye = np.eye(d)
        # loss operator ℓ_w(z)
        self.lop = [[eye - F, F] for F in self.F]
        self.ell = np.array([[float(np.real(np.trace(self.lop[w][z] @ self.sigma[z]))) for z in (0, 1)]
                             for w in range(len(self.F))])
        nb = len(self.G)
        self.cost = np.zeros((len(self.F), 2, nb))
        for w in range(len(self.F)):
            for z in (0, 1):
                for b, g in enumerate(self.G):
                    tg = float(np.real(np.trace(g)))
                    if tg > 1e-12:
                        self.cost[w, z, b] = float(np.real(np.trace(self.lop[w][z] @ g))) / tg
        self.p_cell = np.array([[self.P[z] * float(np.real(np.trace(g @ self.sigma[z]))) for g in self.G]
                                for z in (0, 1)])

    @property
    def n_hyp(self) -> int:
        return len(self.F)

    def erm(self, counts: np.ndarray) -> np.ndarray:
        """Chosen hypothesis for each row of counts n(z, b) (flattened)."""
        if self.rule == "constant":
            return np.full(len(counts), self.w0)
        scores = counts @ self.cost.reshape(self.n_hyp, -1).T
        best = scores.min(axis=1, keepdims=True)
        return np.argmax(scores <= best + TIE_TOL, axis=1)


def _compositions(m: int, k: int) -> np.ndarray:
    """All length-k nonnegative integer vectors summing to m."""
    rows = []
    for bars in itertools.combinations(range(m + k - 1), k - 1):
        prev, row = -1, []
        for b in bars:
            row.append(b - prev - 1)
            prev = b
        row.append(m + k - 2 - prev)
        rows.append(row)
    return np.array(rows, dtype=np.int64).reshape(-1, k)


def count_statistics(model: _Model) -> dict:
    """Exact risks and I(S;W) from the multinomial law of n(z, b).

    Requires a deterministic pair, so that training and test copies are
    independent given the labels.
    """
    m, nh = model.m, model.n_hyp
    if model.rule == "prior":
        pw = model.prior
        true_ = float(pw @ (model.ell @ model.P))
        return {"empirical": true_, "true": true_, "mi": 0.0, "p_w": pw}
    k = model.p_cell.size
    n_rows = math.comb(m + k - 1, k - 1)
    if n_rows > ENUM_CAP:
        raise EnumerationCap(f"{n_rows} count vectors exceed enum_cap = {ENUM_CAP}")
    N = _compositions(m, k)
    p = model.p_cell.reshape(-1)
    with np.errstate(divide="ignore", invalid="ignore"):
        logp = np.where(p > 0, np.log(np.where(p > 0, p, 1.0)), -np.inf)
        term = np.where(N > 0, N * logp, 0.0)
    logw = gammaln(m + 1) - gammaln(N + 1).sum(axis=1) + term.sum(axis=1)
    keep = np.isfinite(logw)
    N, wt = N[keep], np.exp(logw[keep])
    wt = wt / wt.sum()
    w = model.erm(N)
    nz = N.reshape(len(N), 2, -1).sum(axis=2)  # label counts
    emp = float(np.sum(wt * (nz * model.ell[w]).sum(axis=1)) / m)
    pw = np.bincount(w, weights=wt, minlength=nh)
    true_ = float(pw @ (model.ell @ model.P))
    # I(S;W) = H(W) - Σ_{n_z} P(n_z) H(W | n_z); W depends on S only via n_z
    h_w = -sum(q * math.log(q) for q in pw if q > 0)
    key = nz[:, 0]
    cond = np.zeros((m + 1, nh))
    np.add.at(cond, (key, w), wt)
    tot = cond.sum(axis=1, keepdims=True)
    with np.errstate(divide="ignore", invalid="ignore"):
        pc = np.where(tot > 0, cond / np.where(tot > 0, tot, 1), 0)
        h_cond = -np.sum(np.where(pc > 0, cond * np.log(np.where(pc > 0, pc, 1)), 0.0))
    mi = max(h_w - h_cond, 0.0)
    return {"empirical": emp, "true": true_, "mi": float(mi), "p_w": pw}


def _site_fit(model: _Model, w: int) -> float:
    return fit_subgaussian(classical_profile([(model.P[z], model.ell[w, z]) for z in (0, 1)])).alpha


def _counts_runner(model: _Model, cfg: ScenarioConfig):
    stats = count_statistics(model)
    m = model.m
    support = [w for w in range(model.n_hyp) if stats["p_w"][w] > 0]

    def run(bound: str = "cor22", **inputs):
        risk = RiskReport(stats["empirical"], stats["true"], stats["true"] - stats["empirical"])
        I = stats["mi"]
        beta0 = max((_site_fit(model, w) for w in support), default=0.0)
        beta_fit = beta0 / math.sqrt(m)
        extra = {"evaluator": "counts"}
        if bound in ("cor22", "thm21"):
            beta = inputs.get("beta")
            if beta is None:
                beta = beta_fit if I > INFO_EPS else 0.0
            elif inputs.get("validate", True) and I > INFO_EPS:
                # the mean of m i.i.d. sites has log-MGF m·K(λ/m)
                q = quadratic(beta * math.sqrt(m))
                for w in support:
                    check_dominates(q, q, classical_profile([(model.P[z], model.ell[w, z]) for z in (0, 1)]),
                                    f"classical log-MGF at w={w!r}")
            if bound == "thm21":
                r = legendre_dual_inverse(quadratic(beta), I if I > INFO_EPS else 0.0)
                return risk, make_certificate("thm21", risk.gen, 0.0, 0.0, I, None, None, r, r, extra)
            rhs = quadratic_rhs(0.0, beta, 0.0, I)
            return risk, make_certificate("cor22", risk.gen, 0.0, 0.0, I, 0.0, beta, rhs, rhs, extra)
        if bound == "cor24":
            lb = [beta0] * m
            beta = math.sqrt(sum(b * b for b in lb)) / m
            rhs = quadratic_rhs(0.0, beta, 0.0, I)
            extra.update(localAlphas=[0.0] * m, localBetas=lb, globalQmiTerm=0.0)
            return risk, make_certificate("cor24", risk.gen, 0.0, 0.0, I, 0.0, beta, rhs, rhs, extra)
        if bound == "cor26":
            C1, C2 = inputs.get("C1", 1.0), inputs.get("C2", 1.0)
            M = inputs.get("max_local_norm") or max(
                float(np.max(np.abs(np.linalg.eigvalsh(op)))) for row in model.lop for op in row)
            rhs = 2 * math.sqrt(2) * M / math.sqrt(m) * math.sqrt((1 + C1 * (1 + C2)) * I)
            extra.update(C1=float(C1), C2=float(C2), maxLocalNorm=float(M))
            return risk, make_certificate("cor26", risk.gen, 0.0, 0.0, I, None, None, rhs, rhs, extra)
        raise ConfigError(f"unknown bound {bound!r}")

    return run


def _dense_triple(model: _Model):
    d, m, nh = model.d, model.m, model.n_hyp
    test = tuple((f"t{i}",) for i in range(m))
    train = tuple((f"r{i}",) for i in range(m))
    local = {z: sum(q * np.kron(p[z], p[z]) for q, p in zip(model.pair_probs, model.pairs)) for z in (0, 1)}

    def state(i, z):
        return DensityOperator(local[z], SubsystemShape([f"t{i}", f"r{i}"], [d, d]))

    site = SiteModel(m, (0, 1), tuple(model.P), state, test, train)
    ens = iid_ensemble(site)
    tr_shape = SubsystemShape([f"r{i}" for i in range(m)], [d] * m)
    nb = len(model.G)
    outcomes = list(itertools.product(range(nb), repeat=m))
    prods = [tensor_product(*[EffectOperator(model.G[b], SubsystemShape.single(f"r{i}", d))
                              for i, b in enumerate(bs)]).matrix for bs in outcomes]
    cache: dict = {}

    def povm_for(s):
        if s in cache:
            return cache[s]
        acc = [np.zeros((d ** m, d ** m), dtype=complex) for _ in range(nh)]
        if model.rule == "prior":
            for w in range(nh):
                acc[w] = model.prior[w] * np.eye(d ** m)
        else:
            counts = np.zeros((len(outcomes), 2 * nb))
            for r, bs in enumerate(outcomes):
                for z, b in zip(s, bs):
                    counts[r, z * nb + b] += 1
            ws = model.erm(counts)
            for r, w in enumerate(ws):
                acc[w] = acc[w] + prods[r]
        cache[s] = Povm(tuple((w, EffectOperator(acc[w], tr_shape)) for w in range(nh)))
        return cache[s]

    lr = Learner.measure_only(povm_for, tr_shape)

    def term(i, z, w):
        return HermitianObservable(model.lop[w][z], SubsystemShape.single(f"t{i}", d))

    loss = LossFamily.from_local(LocalLoss(m, term, test, tuple(() for _ in range(m))))
    return ens, lr, loss


def build_state_classification(cfg: ScenarioConfig):
    """Dense (ensemble, learner, loss) triple for a state-classification config."""
    model = _Model(cfg)
    return _dense_triple(model)


def scenario(cfg: ScenarioConfig) -> Scenario:
    model = _Model(cfg)
    dense_ok = model.d ** (2 * model.m) <= DENSE_STATE_DIM
    use = model.evaluator
    if use == "auto":
        use = "dense" if dense_ok or not model.deterministic else "counts"
    if use == "counts" and not model.deterministic:
        raise ConfigError("the count evaluator requires a single (deterministic) state pair")
    if use == "dense" and model.d ** (2 * model.m) > 4096:
        raise ConfigError(f"state dimension {model.d ** (2 * model.m)} too large for the dense evaluator")
    meta = {"hypothesisCount": model.n_hyp, "P": list(map(float, model.P)),
            "logW": math.log(model.n_hyp), "evaluator": use}
    if use == "dense":
        ens, lr, loss = _dense_triple(model)
        return Scenario(cfg, ens, lr, loss, meta)
    return Scenario(cfg, meta=meta, runner=_counts_runner(model, cfg))
