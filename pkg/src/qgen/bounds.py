"""Exact risks, generalization error and information-theoretic bound certificates.

The expected empirical risk weighs ``tr[L(s, w) σ(s, w)]`` by the learner's
joint law; the expected true risk evaluates the same loss on the decoupled
state ``ρ_test(s̄) ⊗ σ_hyp(s̄, w̄)`` with s̄ and w̄ drawn independently.  Their
difference is bounded by

    Q = E[I(test; hyp)_σ] + E_S[χ({P(w|S), ρ^A_test(S, w)})]   (quantum part)
    I = I(S; W)                                                (classical part)

passed through generalized inverses of Legendre duals of log-MGF bounds.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from functools import cached_property
from typing import Callable, Mapping, Sequence

import numpy as np

from .cqdata import (
    MASS_TOL,
    P_FLOOR,
    CQEnsemble,
    JointDistribution,
    Learner,
    hyp_marginal,
    learner_joint,
    learner_output_state,
    post_measurement_state,
)
from .entropy import EnsembleOfStates, classical_mi, holevo_information, qmi, relative_entropy
from .errors import EnumerationCap, InvalidMgfBound, NotFactorized, ValidationError, ZeroProbabilityOutcome
from .mgf import (
    classical_profile,
    compose_local_subgaussian,
    default_grid,
    fit_subgaussian,
    legendre_dual_inverse,
    mirror,
    quadratic,
    quantum_log_mgf_gt,
    quantum_profile,
)
from .qmat import (
    DensityOperator,
    HermitianObservable,
    SubsystemShape,
    embed,
    hermitian_fn,
    operator_norm,
    partial_trace,
    reorder,
    tensor_product,
)

ENUM_CAP = 2_000_000
HOLDS_TOL = 1e-9
VALIDATE_TOL = 1e-9
INFO_EPS = 1e-12

BOUND_NAMES = ("thm21", "cor22", "cor24", "cor26")


# --- losses ------------------------------------------------------------------

@dataclass(frozen=True)
class LocalLoss:
    """Declared structure L(s, w) = (1/m) Σ_i L_i(z_i, w).

    ``term(i, z, w)`` returns an observable on ``test_labels[i] + hyp_labels[i]``.
    """

    m: int
    term: Callable
    test_labels: tuple
    hyp_labels: tuple

    def max_norm(self, alphabet, hyps) -> float:
        return max(operator_norm(self.term(i, z, w))
                   for i in range(self.m) for z in alphabet for w in hyps)


@dataclass(frozen=True)
class LossFamily:
    """Map (s, w) ↦ Hermitian observable on test ⊗ hyp.

    The observable's labels must be the ensemble's test labels followed by
    the learner's hyp labels (in any order; they are reordered on use).
    """

    func: Callable
    local: LocalLoss | None = None

    def __call__(self, s, w) -> HermitianObservable:
        f = self.func
        return f[(s, w)] if isinstance(f, Mapping) else f(s, w)

    @classmethod
    def from_local(cls, local: LocalLoss, hyp_labels: Sequence[str] = ()) -> "LossFamily":
        """Assemble (1/m) Σ_i L_i(z_i, w) ⊗ I on the global test ⊗ hyp shape."""
        test = [l for t in local.test_labels for l in t]
        hyp = list(hyp_labels) or [l for h in local.hyp_labels for l in h]
        cache: dict = {}

        def func(s, w):
            key = (s, w)
            if key not in cache:
                terms = [local.term(i, z, w) for i, z in enumerate(s)]
                dims = {}
                for t in terms:
                    dims.update(zip(t.shape.labels, t.shape.dims))
                shape = SubsystemShape(test + hyp, [dims[l] for l in test + hyp])
                acc = sum(embed(t, shape).matrix for t in terms) / local.m
                cache[key] = HermitianObservable(acc, shape)
            return cache[key]

        return cls(func, local)

    @classmethod
    def classical(cls, ell: Callable, shape: SubsystemShape) -> "LossFamily":
        """L(s, w) = ℓ(s, w)·I."""
        eye = np.eye(shape.total)
        return cls(lambda s, w: HermitianObservable(ell(s, w) * eye, shape))


# --- reports -------------------------------------------------------------------

@dataclass(frozen=True)
class RiskReport:
    empirical: float
    true_: float
    gen: float


@dataclass(frozen=True)
class BoundCertificate:
    """Outcome of comparing |gen| with one bound's right-hand side."""

    gen: float
    gen_abs: float
    bound_name: str
    qmi_term: float
    holevo_term: float
    mi_term: float
    alpha: float | None
    beta: float | None
    rhs: float
    holds: bool
    slack: float
    rhs_plus: float
    rhs_minus: float
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        d = {
            "gen": self.gen,
            "genAbs": self.gen_abs,
            "boundName": self.bound_name,
            "qmiTerm": self.qmi_term,
            "holevoTerm": self.holevo_term,
            "miTerm": self.mi_term,
            "alpha": self.alpha,
            "beta": self.beta,
            "rhs": self.rhs,
            "rhsPlus": self.rhs_plus,
            "rhsMinus": self.rhs_minus,
            "holds": self.holds,
            "slack": self.slack,
        }
        if self.extra:
            d["extra"] = dict(self.extra)
        return d


def make_certificate(name, gen, q_qmi, q_hol, mi, alpha, beta, rhs_plus, rhs_minus, extra=None):
    rhs = rhs_plus if gen >= 0 else rhs_minus
    slack = rhs - abs(gen)
    return BoundCertificate(
        gen=float(gen), gen_abs=abs(float(gen)), bound_name=name,
        qmi_term=float(q_qmi), holevo_term=float(q_hol), mi_term=float(mi),
        alpha=None if alpha is None else float(alpha), beta=None if beta is None else float(beta),
        rhs=float(rhs), holds=bool(slack >= -HOLDS_TOL), slack=float(slack),
        rhs_plus=float(rhs_plus), rhs_minus=float(rhs_minus), extra=dict(extra or {}),
    )


# --- pipeline evaluation ----------------------------------------------------------

class Evaluation:
    """All per-(s, w) quantities of one (ensemble, learner, loss) triple.

    Values are computed lazily and cached, so a certificate and the risks it
    compares against share a single pass over the enumeration.
    """

    def __init__(self, ens: CQEnsemble, lr: Learner, loss: LossFamily | None = None,
                 enum_cap: int = ENUM_CAP):
        self.ens, self.lr, self.loss = ens, lr, loss
        n_w = max(len(lr.povm(s).outcomes) for s in ens.records)
        size = len(ens) * n_w
        if size > enum_cap:
            raise EnumerationCap(f"|S|·|W| = {size} exceeds enum_cap = {enum_cap}")
        self.hyp_labels = list(lr.hyp_shape.labels)
        self.out_labels = list(ens.test_labels) + self.hyp_labels
        self._sigma: dict = {}
        self._post_test: dict = {}
        self._hyp: dict = {}
        self._loss: dict = {}

    # joint law
    @cached_property
    def joint(self) -> JointDistribution:
        return learner_joint(self.ens, self.lr)

    @cached_property
    def support(self) -> list:
        return [k for k, p in self.joint.mass.items() if p > 0]

    @cached_property
    def p_w(self) -> dict:
        return self.joint.marginal_w()

    @cached_property
    def rho_test(self) -> dict:
        return {s: partial_trace(self.ens.state(s), self.ens.test_labels) for s in self.ens.records}

    def q(self, s, w) -> float:
        return self.joint.mass.get((s, w), 0.0) / self.ens.prob(s)

    def sigma(self, s, w) -> DensityOperator:
        if (s, w) not in self._sigma:
            self._sigma[(s, w)] = learner_output_state(self.ens, self.lr, s, w)
        return self._sigma[(s, w)]

    def post_test(self, s, w) -> DensityOperator:
        if (s, w) not in self._post_test:
            post = post_measurement_state(self.ens, self.lr, s, w)
            self._post_test[(s, w)] = partial_trace(post, self.ens.test_labels)
        return self._post_test[(s, w)]

    def hyp(self, s, w) -> DensityOperator | None:
        if (s, w) not in self._hyp:
            try:
                self._hyp[(s, w)] = hyp_marginal(self.ens, self.lr, s, w)
            except ZeroProbabilityOutcome:
                self._hyp[(s, w)] = None
        return self._hyp[(s, w)]

    def tau(self, s, w) -> DensityOperator | None:
        h = self.hyp(s, w)
        if h is None:
            return None
        if not self.hyp_labels:
            return self.rho_test[s]
        return tensor_product(self.rho_test[s], h)

    def L(self, s, w) -> HermitianObservable:
        if self.loss is None:
            raise ValidationError("no loss family attached to this evaluation")
        if (s, w) not in self._loss:
            obs = self.loss(s, w)
            if sorted(obs.shape.labels) != sorted(self.out_labels):
                raise ValidationError(
                    f"loss labels {obs.shape.labels} do not match test+hyp {self.out_labels}")
            self._loss[(s, w)] = reorder(obs, self.out_labels)
        return self._loss[(s, w)]

    # risks
    @cached_property
    def empirical(self) -> float:
        return float(sum(self.joint.mass[k] * self.sigma(*k).expect(self.L(*k)) for k in self.support))

    def decoupled_pairs(self):
        """Yield (weight, s̄, w̄, τ or None) over the product measure."""
        for s in self.ens.records:
            ps = self.ens.prob(s)
            if ps == 0:
                continue
            for w, pw in self.p_w.items():
                yield ps * pw, s, w, self.tau(s, w)

    @cached_property
    def true_(self) -> float:
        tot, skipped = 0.0, 0.0
        for wt, s, w, tau in self.decoupled_pairs():
            if tau is None:
                skipped += wt
                continue
            tot += wt * tau.expect(self.L(s, w))
        if skipped > MASS_TOL:
            raise ZeroProbabilityOutcome(
                f"hypothesis state undefined on pairs carrying mass {skipped:.3g}")
        return float(tot)

    @property
    def risk(self) -> RiskReport:
        e, t = self.empirical, self.true_
        return RiskReport(e, t, t - e)

    # information terms
    @cached_property
    def qmi_term(self) -> float:
        if not self.hyp_labels:
            return 0.0
        return float(sum(self.joint.mass[k] * qmi(self.sigma(*k), self.ens.test_labels)
                         for k in self.support))

    @cached_property
    def holevo_term(self) -> float:
        tot = 0.0
        for s in self.ens.records:
            items = [(self.q(s, w), self.post_test(s, w)) for (t, w) in self.support if t == s]
            if len(items) < 2:
                continue
            z = sum(p for p, _ in items)
            items = [(p / z, r) for p, r in items]
            tot += self.ens.prob(s) * holevo_information(EnsembleOfStates(tuple(items)))
        return float(tot)

    @cached_property
    def mi_term(self) -> float:
        return classical_mi(self.joint)

    @cached_property
    def expected_relative_entropy(self) -> float:
        return float(sum(self.joint.mass[k] * relative_entropy(self.sigma(*k), self.tau(*k))
                         for k in self.support))

    # log-MGF profiles
    def quantum_profiles(self, gt: bool = False, grid=None):
        for k in self.support:
            yield k, quantum_profile(self.tau(*k), self.L(*k), grid=grid, gt=gt)

    def classical_samples(self, w) -> list:
        out = []
        for s in self.ens.records:
            ps = self.ens.prob(s)
            if ps == 0:
                continue
            tau = self.tau(s, w)
            if tau is None:
                raise ZeroProbabilityOutcome(f"hypothesis state undefined at ({s!r}, {w!r})")
            out.append((ps, tau.expect(self.L(s, w))))
        return out

    def classical_profiles(self, grid=None):
        for w in self.p_w:
            yield w, classical_profile(self.classical_samples(w), grid=grid)


def evaluate(ens, lr, loss=None, enum_cap: int = ENUM_CAP) -> Evaluation:
    return Evaluation(ens, lr, loss, enum_cap)


def _ev(ens, lr, loss, evaluation):
    if evaluation is not None:
        return evaluation
    return Evaluation(ens, lr, loss)


def expected_empirical_risk(ens, lr, loss, evaluation=None) -> float:
    """E_{P^A}[tr L(S, W) σ(S, W)]."""
    return _ev(ens, lr, loss, evaluation).empirical


def expected_true_risk(ens, lr, loss, evaluation=None) -> float:
    """E over independent S̄ ~ P, W̄ ~ P^A_W of tr[L(S̄, W̄) τ(S̄, W̄)]."""
    return _ev(ens, lr, loss, evaluation).true_


def generalization_error(ens, lr, loss, evaluation=None) -> RiskReport:
    return _ev(ens, lr, loss, evaluation).risk


# --- fits and validation -----------------------------------------------------------

def certified_alpha(ev: Evaluation, gt: bool = False) -> float:
    """Max over (s, w) in the support of the fitted quantum sub-gaussian parameter."""
    return max((fit_subgaussian(p).alpha for _, p in ev.quantum_profiles(gt=gt)), default=0.0)


def certified_beta(ev: Evaluation) -> float:
    """Max over w of the fitted classical sub-gaussian parameter."""
    return max((fit_subgaussian(p).alpha for _, p in ev.classical_profiles()), default=0.0)


def check_dominates(psi_plus, psi_minus, profile, what: str):
    lam = profile.lambda_grid
    pos, neg = lam > 0, lam < 0
    bad = []
    if np.any(pos):
        gap = profile.values[pos] - np.asarray(psi_plus(lam[pos]), dtype=float)
        if np.max(gap) > VALIDATE_TOL:
            bad.append(float(lam[pos][np.argmax(gap)]))
    if np.any(neg):
        gap = profile.values[neg] - np.asarray(psi_minus(lam[neg]), dtype=float)
        if np.max(gap) > VALIDATE_TOL:
            bad.append(float(lam[neg][np.argmax(gap)]))
    if bad:
        raise InvalidMgfBound(f"supplied bound is below the measured {what} log-MGF at λ = {bad[0]:.6g}")


def validate_quantum(ev: Evaluation, psi_plus, psi_minus, gt: bool = False):
    for k, prof in ev.quantum_profiles(gt=gt):
        check_dominates(psi_plus, psi_minus, prof, f"quantum log-MGF at {k!r}")


def validate_classical(ev: Evaluation, phi_plus, phi_minus):
    for w, prof in ev.classical_profiles():
        check_dominates(phi_plus, phi_minus, prof, f"classical log-MGF at w={w!r}")


# --- bounds -------------------------------------------------------------------

def bound_general(ens, lr, loss, psi_plus, psi_minus, phi_plus, phi_minus,
                  validate: bool = True, gt: bool = False, evaluation=None) -> BoundCertificate:
    """Certificate for the general bound with user log-MGF bounds.

    ``psi_plus``/``phi_plus`` bound the quantum/classical log-MGFs for λ ≥ 0
    and ``psi_minus``/``phi_minus`` for λ < 0 (they are called with negative
    arguments).  +gen is bounded by the inverses built from the λ < 0 side,
    −gen by those from the λ ≥ 0 side.  A bound multiplying an information
    term that vanishes is not validated, since it cannot affect the result.
    """
    ev = _ev(ens, lr, loss, evaluation)
    risk = ev.risk
    Q = ev.qmi_term + ev.holevo_term
    I = ev.mi_term
    if validate:
        if Q > INFO_EPS:
            validate_quantum(ev, psi_plus, psi_minus, gt=gt)
        if I > INFO_EPS:
            validate_classical(ev, phi_plus, phi_minus)
    qz = Q if Q > INFO_EPS else 0.0
    iz = I if I > INFO_EPS else 0.0
    rhs_plus = legendre_dual_inverse(mirror(psi_minus), qz) + legendre_dual_inverse(mirror(phi_minus), iz)
    rhs_minus = legendre_dual_inverse(psi_plus, qz) + legendre_dual_inverse(phi_plus, iz)
    return make_certificate("thm21", risk.gen, ev.qmi_term, ev.holevo_term, I, None, None, rhs_plus, rhs_minus)


def quadratic_rhs(alpha, beta, Q, I) -> float:
    return math.sqrt(2 * alpha ** 2 * max(Q, 0.0)) + math.sqrt(2 * beta ** 2 * max(I, 0.0))


def bound_cor22(ens, lr, loss, alpha: float | None = None, beta: float | None = None,
                validate: bool = True, evaluation=None) -> BoundCertificate:
    """Sub-gaussian form √(2α²Q) + √(2β²I).

    ``alpha``/``beta`` default to certified fits; supplied values are checked
    against the measured profiles and rejected with :class:`InvalidMgfBound`
    if they fail to dominate them.
    """
    ev = _ev(ens, lr, loss, evaluation)
    risk = ev.risk
    Q = ev.qmi_term + ev.holevo_term
    I = ev.mi_term
    if alpha is None:
        alpha = certified_alpha(ev) if Q > INFO_EPS else 0.0
    elif validate and Q > INFO_EPS:
        validate_quantum(ev, quadratic(alpha), quadratic(alpha))
    if beta is None:
        beta = certified_beta(ev) if I > INFO_EPS else 0.0
    elif validate and I > INFO_EPS:
        validate_classical(ev, quadratic(beta), quadratic(beta))
    rhs = quadratic_rhs(alpha, beta, Q, I)
    return make_certificate("cor22", risk.gen, ev.qmi_term, ev.holevo_term, I, alpha, beta, rhs, rhs)


def _require_sites(ens: CQEnsemble, lr: Learner, loss: LossFamily, need_povm: bool, need_channel: bool):
    site = ens.site_model
    if site is None:
        raise NotFactorized("ensemble does not declare a site model")
    if loss.local is None:
        raise NotFactorized("loss does not declare local structure")
    if loss.local.m != site.m:
        raise NotFactorized("loss and ensemble disagree on the number of sites")
    trivial = lr.hyp_shape.total == 1
    if not trivial:
        if lr.factorized is None:
            raise NotFactorized("learner with a quantum hypothesis register must declare local factors")
        if need_povm and lr.factorized.effect is None:
            raise NotFactorized("learner does not declare local effects")
        if need_channel and lr.factorized.channel is None:
            raise NotFactorized("learner does not declare local channels")
    return site, trivial


def _site_states(ens, lr, i, z, w):
    """(ρ_test,i(z), σ_i(z, w) on test_i⊗hyp_i or None, σ_hyp,i or None)."""
    from .cqdata import apply_channel, _local_apply
    from .qmat import Operator

    site = ens.site_model
    rho = site.state(i, z)
    tl, rl = list(site.test_labels[i]), list(site.train_labels[i])
    rho_t = partial_trace(rho, tl)
    fac = lr.factorized
    if lr.hyp_shape.total == 1:
        return rho_t, None, None
    e = fac.effect(i, z, w)
    root = hermitian_fn(e, "sqrt").matrix
    m, shp = _local_apply(rho.matrix, rho.shape, rl, root, None, SubsystemShape(rl, e.shape.dims))
    tr = float(np.real(np.trace(m)))
    if tr <= P_FLOOR:
        return rho_t, None, None
    post = DensityOperator.from_unnormalized(reorder(Operator(m, shp), rho.shape.labels).matrix, rho.shape)
    ch = fac.channel(i, z, w)
    sig = apply_channel(post, ch, rl)
    hl = list(ch.out_shape.labels)
    sig = reorder(sig, tl + hl)
    return rho_t, sig, partial_trace(sig, hl)


def _per_site_qmi(ev: Evaluation) -> float:
    ens, lr = ev.ens, ev.lr
    if lr.hyp_shape.total == 1:
        return 0.0
    site = ens.site_model
    tot = 0.0
    cache: dict = {}
    for (s, w) in ev.support:
        acc = 0.0
        for i, z in enumerate(s):
            key = (i, z, w)
            if key not in cache:
                _, sig, _ = _site_states(ens, lr, i, z, w)
                cache[key] = 0.0 if sig is None else qmi(sig, list(site.test_labels[i]))
            acc += cache[key]
        tot += ev.joint.mass[(s, w)] * acc
    return tot


def _local_tau(ens, lr, i, z, w):
    rho_t, _, hyp = _site_states(ens, lr, i, z, w)
    if lr.hyp_shape.total == 1:
        return rho_t
    if hyp is None:
        return None
    return tensor_product(rho_t, hyp)


def local_fits(ev: Evaluation, gt: bool = False):
    """Per-site certified (α_i, β_i) for a declared product structure."""
    ens, lr, loss = ev.ens, ev.lr, ev.loss
    site = ens.site_model
    hyps = list(ev.p_w)
    alphas, betas = [], []
    for i in range(site.m):
        a_i, b_i = 0.0, 0.0
        for w in hyps:
            samples = []
            for z, pz in zip(site.alphabet, site.probs):
                tau = _local_tau(ens, lr, i, z, w)
                if tau is None:
                    continue
                Li = reorder(loss.local.term(i, z, w), tau.shape.labels)
                if pz > 0:
                    a_i = max(a_i, fit_subgaussian(quantum_profile(tau, Li, gt=gt)).alpha)
                    samples.append((pz, tau.expect(Li)))
            if samples:
                b_i = max(b_i, fit_subgaussian(classical_profile(samples)).alpha)
        alphas.append(a_i)
        betas.append(b_i)
    return alphas, betas


def bound_cor24(ens, lr, loss, local_alphas=None, local_betas=None,
                validate: bool = True, evaluation=None) -> BoundCertificate:
    """Local-structure bound with α = √(Σα_i²)/m and β = √(Σβ_i²)/m.

    The quantum-mutual-information term is accumulated per site,
    Σ_i E[I(test_i; hyp_i)], as the product structure allows.
    """
    site, trivial = _require_sites(ens, lr, loss, need_povm=True, need_channel=True)
    ev = _ev(ens, lr, loss, evaluation)
    risk = ev.risk
    m = site.m
    q_site = _per_site_qmi(ev)
    Q = q_site + ev.holevo_term
    I = ev.mi_term
    fit_a = fit_b = None
    if local_alphas is None or local_betas is None or validate:
        fit_a, fit_b = local_fits(ev)

    def expand(v, fit, name, term):
        if v is None:
            return list(fit)
        v = list(np.broadcast_to(np.asarray(v, dtype=float), (m,)))
        if validate and term > INFO_EPS:
            for i, (a, f) in enumerate(zip(v, fit)):
                if a < f - 1e-9:
                    raise InvalidMgfBound(f"{name}[{i}] = {a:.6g} below the certified local fit {f:.6g}")
        return v

    la = expand(local_alphas, fit_a, "local_alphas", Q)
    lb = expand(local_betas, fit_b, "local_betas", I)
    alpha = compose_local_subgaussian(la, m)
    beta = compose_local_subgaussian(lb, m)
    rhs = quadratic_rhs(alpha, beta, Q, I)
    extra = {"localAlphas": la, "localBetas": lb, "globalQmiTerm": ev.qmi_term}
    return make_certificate("cor24", risk.gen, q_site, ev.holevo_term, I, alpha, beta, rhs, rhs, extra)


def bound_cor26(ens, lr, loss, C1: float = 1.0, C2: float = 1.0, max_local_norm: float | None = None,
                evaluation=None) -> BoundCertificate:
    """Transport-based bound (2√2 M/√m)(√(C₁Q) + √((1 + C₁(1 + C₂)) I)).

    M is the largest operator norm of a local loss term; C₁ and C₂ are the
    channel norms of the learner, supplied by the caller.
    """
    site, trivial = _require_sites(ens, lr, loss, need_povm=True, need_channel=False)
    ev = _ev(ens, lr, loss, evaluation)
    risk = ev.risk
    m = site.m
    if max_local_norm is None:
        max_local_norm = loss.local.max_norm(site.alphabet, list(ev.p_w))
    Q = ev.qmi_term + ev.holevo_term
    I = ev.mi_term
    M = float(max_local_norm)
    rhs = 2 * math.sqrt(2) * M / math.sqrt(m) * (
        math.sqrt(C1 * max(Q, 0.0)) + math.sqrt((1 + C1 * (1 + C2)) * max(I, 0.0)))
    extra = {"C1": float(C1), "C2": float(C2), "maxLocalNorm": M}
    return make_certificate("cor26", risk.gen, ev.qmi_term, ev.holevo_term, I, None, None, rhs, rhs, extra)


def certify(ens, lr, loss, which: str, evaluation=None, **inputs) -> BoundCertificate:
    """Dispatch to one of the bound evaluators by name."""
    ev = _ev(ens, lr, loss, evaluation)
    if which == "thm21":
        a = inputs.get("alpha")
        b = inputs.get("beta")
        psi = inputs.get("psi") or quadratic(certified_alpha(ev) if a is None else a)
        phi = inputs.get("phi") or quadratic(certified_beta(ev) if b is None else b)
        return bound_general(ens, lr, loss, inputs.get("psi_plus", psi), inputs.get("psi_minus", psi),
                             inputs.get("phi_plus", phi), inputs.get("phi_minus", phi),
                             validate=inputs.get("validate", True), evaluation=ev)
    if which == "cor22":
        return bound_cor22(ens, lr, loss, inputs.get("alpha"), inputs.get("beta"),
                           validate=inputs.get("validate", True), evaluation=ev)
    if which == "cor24":
        return bound_cor24(ens, lr, loss, inputs.get("local_alphas"), inputs.get("local_betas"),
                           validate=inputs.get("validate", True), evaluation=ev)
    if which == "cor26":
        return bound_cor26(ens, lr, loss, inputs.get("C1", 1.0), inputs.get("C2", 1.0),
                           inputs.get("max_local_norm"), evaluation=ev)
    raise ValueError(f"unknown bound {which!r}; expected one of {BOUND_NAMES}")
