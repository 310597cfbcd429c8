"""Classical-quantum data, measurements, channels and the learner pipeline.

A learner acts on a training register in two stages: a POVM ``E_s(w)``
selects a classical hypothesis ``w`` (with Lüders update of the joint
test/train state), then a channel ``Λ_{s,w}`` maps the training register to
a hypothesis register.  The resulting joint law ``P^A(s, w)`` and the output
states ``σ(s, w)`` on test ⊗ hyp are what the bounds consume.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Hashable, Iterable, Mapping, Sequence

import numpy as np

from .errors import ShapeMismatch, ValidationError, ZeroProbabilityOutcome
from .qmat import (
    TOL_TRACE,
    DensityOperator,
    EffectOperator,
    HermitianObservable,
    Operator,
    SubsystemShape,
    hermitian_fn,
    partial_trace,
    reorder,
    tensor_product,
)

TOL_POVM = 1e-9
P_FLOOR = 1e-12
MASS_TOL = 1e-9


# --- ensembles ---------------------------------------------------------------

@dataclass(frozen=True)
class CQEnsemble:
    """Finite mixture ``Σ_s P(s) |s⟩⟨s| ⊗ ρ(s)`` on test ⊗ train.

    Parameters
    ----------
    entries : sequence of (s, prob, DensityOperator)
        ``s`` is any hashable record; all states share one shape.
    test_labels, train_labels : sequence of str
        Partition of the state shape.
    site_model : SiteModel, optional
        Declares ``s = (z_1, ..., z_m)`` with i.i.d. sites and
        ``ρ(s) = ⊗_i ρ_i(z_i)``.  Needed by the local-structure bounds.
    """

    entries: tuple
    test_labels: tuple
    train_labels: tuple
    site_model: "SiteModel | None" = None
    _index: dict = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        entries = tuple((s, float(p), rho) for s, p, rho in self.entries)
        object.__setattr__(self, "entries", entries)
        object.__setattr__(self, "test_labels", tuple(self.test_labels))
        object.__setattr__(self, "train_labels", tuple(self.train_labels))
        if not entries:
            raise ValidationError("ensemble has no entries")
        shape = entries[0][2].shape
        probs = np.array([p for _, p, _ in entries])
        if np.any(probs < 0):
            raise ValidationError("negative probability in ensemble")
        if abs(probs.sum() - 1) > TOL_TRACE * max(1, len(entries)):
            raise ValidationError(f"ensemble probabilities sum to {probs.sum()!r}")
        for _, _, rho in entries:
            if not isinstance(rho, DensityOperator):
                raise ValidationError("ensemble states must be DensityOperator")
            if rho.shape != shape:
                raise ShapeMismatch("ensemble states have differing shapes")
        if set(self.test_labels) & set(self.train_labels):
            raise ValidationError("test and train labels overlap")
        if sorted(self.test_labels + self.train_labels) != sorted(shape.labels):
            raise ValidationError("test and train labels must partition the state shape")
        index = {}
        for k, (s, _, _) in enumerate(entries):
            if s in index:
                raise ValidationError(f"duplicate classical record {s!r}")
            index[s] = k
        object.__setattr__(self, "_index", index)

    @property
    def shape(self) -> SubsystemShape:
        return self.entries[0][2].shape

    @property
    def test_shape(self) -> SubsystemShape:
        return self.shape.sub(self.test_labels)

    @property
    def train_shape(self) -> SubsystemShape:
        return self.shape.sub(self.train_labels)

    @property
    def records(self) -> list:
        return [s for s, _, _ in self.entries]

    def prob(self, s) -> float:
        return self.entries[self._index[s]][1]

    def state(self, s) -> DensityOperator:
        return self.entries[self._index[s]][2]

    def test_marginal(self, s) -> DensityOperator:
        return partial_trace(self.state(s), self.test_labels)

    def train_marginal(self, s) -> DensityOperator:
        return partial_trace(self.state(s), self.train_labels)

    def __len__(self):
        return len(self.entries)


@dataclass(frozen=True)
class SiteModel:
    """Per-site structure of an i.i.d. ensemble.

    Attributes
    ----------
    m : int
        Number of sites.
    alphabet : tuple
        Values of a single ``z``.
    probs : tuple of float
        ``P(z)`` over the alphabet.
    state : callable (i, z) -> DensityOperator
        Local state on ``test_labels[i] + train_labels[i]``.
    test_labels, train_labels : tuple of tuple of str
        Labels belonging to site ``i``.
    """

    m: int
    alphabet: tuple
    probs: tuple
    state: Callable
    test_labels: tuple
    train_labels: tuple

    def prob(self, z) -> float:
        return self.probs[self.alphabet.index(z)]


def iid_ensemble(site: SiteModel, test_order: Sequence[str] | None = None) -> CQEnsemble:
    """Assemble ``Σ_s P^m(s) |s⟩⟨s| ⊗ ⊗_i ρ_i(z_i)`` from a site model."""
    import itertools

    entries = []
    test_labels = [l for t in site.test_labels for l in t]
    train_labels = [l for t in site.train_labels for l in t]
    order = list(test_order or test_labels) + train_labels
    for s in itertools.product(site.alphabet, repeat=site.m):
        p = float(np.prod([site.prob(z) for z in s]))
        rho = tensor_product(*[site.state(i, z) for i, z in enumerate(s)])
        entries.append((tuple(s), p, reorder(rho, order)))
    return CQEnsemble(entries, test_labels, train_labels, site_model=site)


# --- measurements --------------------------------------------------------------

@dataclass(frozen=True)
class Povm:
    """Finite POVM ``{(w, E_w)}`` with effects summing to the identity."""

    outcomes: tuple

    def __post_init__(self):
        outs = tuple((w, e) for w, e in self.outcomes)
        object.__setattr__(self, "outcomes", outs)
        if not outs:
            raise ValidationError("POVM has no outcomes")
        shape = outs[0][1].shape
        total = np.zeros((shape.total, shape.total), dtype=complex)
        seen = set()
        for w, e in outs:
            if not isinstance(e, EffectOperator):
                raise ValidationError("POVM elements must be EffectOperator")
            if e.shape != shape:
                raise ShapeMismatch("POVM effects have differing shapes")
            if w in seen:
                raise ValidationError(f"duplicate POVM outcome {w!r}")
            seen.add(w)
            total += e.matrix
        dev = float(np.max(np.abs(total - np.eye(shape.total))))
        if dev > TOL_POVM:
            raise ValidationError(f"POVM effects do not sum to identity (deviation {dev:.3g})")

    @property
    def shape(self) -> SubsystemShape:
        return self.outcomes[0][1].shape

    @property
    def labels(self) -> list:
        return [w for w, _ in self.outcomes]

    @classmethod
    def trivial(cls, shape: SubsystemShape, w=0) -> "Povm":
        return cls(((w, EffectOperator(np.eye(shape.total), shape)),))

    @classmethod
    def computational(cls, shape: SubsystemShape) -> "Povm":
        outs = []
        for k in range(shape.total):
            e = np.zeros((shape.total, shape.total))
            e[k, k] = 1
            outs.append((k, EffectOperator(e, shape)))
        return cls(tuple(outs))


@dataclass(frozen=True)
class MeasurementOutcome:
    outcome: Hashable
    prob: float
    post: DensityOperator | None

    @property
    def flagged(self) -> bool:
        """True when the outcome is too unlikely for a post-measurement state."""
        return self.post is None


def _local_apply(matrix: np.ndarray, shape: SubsystemShape, on: Sequence[str],
                 left: np.ndarray, right: np.ndarray | None, out_shape: SubsystemShape):
    """Compute (I ⊗ left) X (I ⊗ right†) where left/right act on ``on``.

    ``left`` maps the ``on`` factors (in the given order) to ``out_shape``.
    The output subsystems replace the ``on`` factors at the position of the
    first of them; the remaining factors keep their order.
    """
    on = list(on)
    rest = [l for l in shape.labels if l not in set(on)]
    order = on + rest
    perm = [shape.index(l) for l in order]
    n = len(perm)
    dims = shape.dims
    d_on = int(np.prod([dims[p] for p in perm[:len(on)]], dtype=np.int64)) if on else 1
    d_rest = shape.total // d_on
    t = matrix.reshape(dims + dims).transpose(perm + [p + n for p in perm])
    t = t.reshape(d_on, d_rest, d_on, d_rest)
    right = left if right is None else right
    # left[a, i] t[i, r, j, s] conj(right)[b, j]
    t = np.einsum("ai,irjs,bj->arbs", left, t, right.conj(), optimize=True)
    d_out = left.shape[0]
    new = out_shape.concat(shape.sub(rest)) if out_shape.labels or rest else out_shape
    mat = t.reshape(d_out * d_rest, d_out * d_rest)
    first = min(shape.index(l) for l in on) if on else 0
    before = [l for l in shape.labels[:first] if l not in set(on)]
    after = [l for l in rest if l not in set(before)]
    final = before + list(out_shape.labels) + after
    op = Operator(mat, new)
    return reorder(op, final).matrix, SubsystemShape(final, [new.dim_of(l) for l in final])


def _check_on(shape: SubsystemShape, on: Sequence[str], local: SubsystemShape):
    for l in on:
        shape.index(l)
    dims = tuple(shape.dim_of(l) for l in on)
    if dims != local.dims:
        raise ShapeMismatch(f"local operator dims {local.dims} do not match {dims} on {list(on)}")


def measure_povm(state: DensityOperator, povm: Povm, on: Sequence[str] | None = None) -> list:
    """Outcome probabilities and Lüders post-measurement states.

    Outcomes with probability ≤ ``P_FLOOR`` are returned with ``post=None``.
    """
    on = list(povm.shape.labels if on is None else on)
    _check_on(state.shape, on, povm.shape)
    res = []
    local = SubsystemShape(on, povm.shape.dims)
    for w, e in povm.outcomes:
        root = hermitian_fn(e, "sqrt").matrix
        m, shp = _local_apply(state.matrix, state.shape, on, root, None, local)
        m = reorder(Operator(m, shp), state.shape.labels).matrix
        p = float(np.real(np.trace(m)))
        if p <= P_FLOOR:
            res.append(MeasurementOutcome(w, max(p, 0.0), None))
        else:
            res.append(MeasurementOutcome(w, p, DensityOperator.from_unnormalized(m, state.shape)))
    return res


# --- channels ----------------------------------------------------------------

@dataclass(frozen=True)
class Channel:
    """CPTP map given by Kraus operators ``in_shape → out_shape``."""

    kraus: tuple
    in_shape: SubsystemShape
    out_shape: SubsystemShape

    def __post_init__(self):
        ks = []
        for k in self.kraus:
            a = np.array(k, dtype=complex)
            if a.shape != (self.out_shape.total, self.in_shape.total):
                raise ShapeMismatch(
                    f"Kraus operator shape {a.shape} != ({self.out_shape.total}, {self.in_shape.total})"
                )
            a.setflags(write=False)
            ks.append(a)
        if not ks:
            raise ValidationError("channel has no Kraus operators")
        object.__setattr__(self, "kraus", tuple(ks))
        s = sum(k.conj().T @ k for k in ks)
        dev = float(np.max(np.abs(s - np.eye(self.in_shape.total))))
        if dev > TOL_POVM:
            raise ValidationError(f"channel is not trace preserving (deviation {dev:.3g})")

    @classmethod
    def identity(cls, shape: SubsystemShape, out_shape: SubsystemShape | None = None) -> "Channel":
        out = shape if out_shape is None else out_shape
        if out.dims != shape.dims:
            raise ShapeMismatch("identity channel needs equal dimensions")
        return cls((np.eye(shape.total),), shape, out)

    @classmethod
    def trace_out(cls, shape: SubsystemShape) -> "Channel":
        """Discard the input; output is the trivial one-dimensional space."""
        ks = [np.eye(shape.total)[k:k + 1, :] for k in range(shape.total)]
        return cls(tuple(ks), shape, SubsystemShape.trivial())

    @classmethod
    def unitary(cls, u, shape: SubsystemShape) -> "Channel":
        return cls((np.asarray(u, dtype=complex),), shape, shape)

    @classmethod
    def replacement(cls, shape: SubsystemShape, state: DensityOperator) -> "Channel":
        """ρ ↦ tr[ρ]·state."""
        ev, vec = np.linalg.eigh(state.matrix)
        ks = []
        for lam, v in zip(ev, vec.T):
            if lam <= 0:
                continue
            for j in range(shape.total):
                e = np.zeros(shape.total)
                e[j] = 1
                ks.append(np.sqrt(lam) * np.outer(v, e))
        return cls(tuple(ks), shape, state.shape)

    @classmethod
    def depolarizing(cls, shape: SubsystemShape, p: float) -> "Channel":
        """ρ ↦ (1−p)ρ + p·tr[ρ]·I/d (full depolarization at p = 1)."""
        d = shape.total
        ks = [np.sqrt(1 - p) * np.eye(d)] if p < 1 else []
        for a in range(d):
            for b in range(d):
                k = np.zeros((d, d))
                k[a, b] = np.sqrt(p / d)
                ks.append(k)
        return cls(tuple(ks), shape, shape)

    def compose(self, first: "Channel") -> "Channel":
        """``self ∘ first``."""
        if first.out_shape.dims != self.in_shape.dims:
            raise ShapeMismatch("channel composition shape mismatch")
        ks = [a @ b for a in self.kraus for b in first.kraus]
        return Channel(tuple(ks), first.in_shape, self.out_shape)

    def tensor(self, other: "Channel") -> "Channel":
        ks = [np.kron(a, b) for a in self.kraus for b in other.kraus]
        return Channel(tuple(ks), self.in_shape.concat(other.in_shape),
                       self.out_shape.concat(other.out_shape))

    def choi(self) -> np.ndarray:
        """Choi matrix Σ_ij |i⟩⟨j| ⊗ Λ(|i⟩⟨j|), used for equality checks."""
        d = self.in_shape.total
        out = self.out_shape.total
        c = np.zeros((d * out, d * out), dtype=complex)
        for k in self.kraus:
            v = k.T.reshape(d * out)  # rows indexed by (i, a)
            c += np.outer(v, v.conj())
        return c


def random_channel(in_shape: SubsystemShape, out_shape: SubsystemShape,
                   rng: np.random.Generator, n_kraus: int = 2) -> Channel:
    """Random channel from a Haar isometry into out ⊗ environment.

    ``n_kraus`` is raised to ⌈d_in/d_out⌉ when smaller.
    """
    from .qmat import random_unitary

    d_in, d_out = in_shape.total, out_shape.total
    # an isometry needs at least d_in rows
    n_kraus = max(n_kraus, -(-d_in // d_out))
    big = d_out * n_kraus
    u = random_unitary(max(big, d_in), rng)[:big, :d_in]
    ks = [u[k * d_out:(k + 1) * d_out, :] for k in range(n_kraus)]
    return Channel(tuple(ks), in_shape, out_shape)


def random_povm(shape: SubsystemShape, outcomes: Sequence, rng: np.random.Generator) -> Povm:
    """Random POVM via a Haar isometry into |outcomes| blocks."""
    from .qmat import random_unitary

    d = shape.total
    n = len(outcomes)
    u = random_unitary(d * n, rng)[:, :d]
    effects = []
    for k, w in enumerate(outcomes):
        blk = u[k * d:(k + 1) * d, :]
        effects.append((w, EffectOperator(blk.conj().T @ blk, shape)))
    return Povm(tuple(effects))


def apply_channel(state: Operator, ch: Channel, on: Sequence[str] | None = None) -> Operator:
    """Apply ``ch`` to the ``on`` subsystems of ``state``.

    The output factors take the place of the ``on`` factors.
    """
    on = list(ch.in_shape.labels if on is None else on)
    _check_on(state.shape, on, ch.in_shape)
    total = None
    shp = None
    for k in ch.kraus:
        m, shp = _local_apply(state.matrix, state.shape, on, k, None, ch.out_shape)
        total = m if total is None else total + m
    if isinstance(state, DensityOperator):
        return DensityOperator.from_unnormalized(total, shp)
    if isinstance(state, HermitianObservable):
        return HermitianObservable(total, shp)
    return Operator(total, shp)


def heisenberg_dual(ch: Channel, obs: Operator, on: Sequence[str] | None = None) -> HermitianObservable:
    """Σ_k K_k† O K_k acting on the ``on`` (output) subsystems of ``obs``."""
    on = list(ch.out_shape.labels if on is None else on)
    _check_on(obs.shape, on, ch.out_shape)
    total = None
    shp = None
    for k in ch.kraus:
        m, shp = _local_apply(obs.matrix, obs.shape, on, k.conj().T, None, ch.in_shape)
        total = m if total is None else total + m
    if total is None:
        raise ValidationError("empty channel")
    return HermitianObservable(total, shp)


# --- learners ------------------------------------------------------------------

@dataclass(frozen=True)
class LearnerFactors:
    """Per-site declaration of a product learner.

    ``effect(i, z, w)`` is the local effect on the train labels of site i and
    ``channel(i, z, w)`` the local channel into ``hyp_labels[i]``.  Either may
    be None when the corresponding global object is not a product.
    """

    effect: Callable | None
    channel: Callable | None
    hyp_labels: tuple


@dataclass(frozen=True)
class Learner:
    """POVM + channel learner.

    Parameters
    ----------
    povm_for : callable or mapping, s -> Povm on the train labels
    channel_for : callable or mapping, (s, w) -> Channel train -> hyp
    hyp_shape : SubsystemShape
    factorized : LearnerFactors, optional
    """

    povm_for: Callable
    channel_for: Callable
    hyp_shape: SubsystemShape
    factorized: LearnerFactors | None = None

    def povm(self, s) -> Povm:
        f = self.povm_for
        return f[s] if isinstance(f, Mapping) else f(s)

    def channel(self, s, w) -> Channel:
        f = self.channel_for
        return f[(s, w)] if isinstance(f, Mapping) else f(s, w)

    @classmethod
    def measure_only(cls, povm_for, train_shape: SubsystemShape, **kw) -> "Learner":
        """Classical-hypothesis learner: the training register is discarded."""
        ch = Channel.trace_out(train_shape)
        return cls(povm_for, lambda s, w: ch, SubsystemShape.trivial(), **kw)


@dataclass
class JointDistribution:
    """Finite joint law over (s, w)."""

    mass: dict

    def __post_init__(self):
        tot = sum(self.mass.values())
        if any(v < 0 for v in self.mass.values()):
            raise ValidationError("negative mass in joint distribution")
        if abs(tot - 1) > MASS_TOL:
            raise ValidationError(f"joint distribution sums to {tot!r}")

    def marginal_s(self) -> dict:
        out: dict = {}
        for (s, _), p in self.mass.items():
            out[s] = out.get(s, 0.0) + p
        return out

    def marginal_w(self) -> dict:
        out: dict = {}
        for (_, w), p in self.mass.items():
            out[w] = out.get(w, 0.0) + p
        return out

    def conditional_w(self, s) -> dict:
        row = {w: p for (t, w), p in self.mass.items() if t == s}
        z = sum(row.values())
        return {w: p / z for w, p in row.items()} if z > 0 else {}

    @classmethod
    def from_table(cls, table: Mapping) -> "JointDistribution":
        return cls({k: float(v) for k, v in table.items()})


def _outcome_table(ens: CQEnsemble, lr: Learner, s):
    """(w, Q_s(w), post state on test⊗train or None) for every outcome."""
    povm = lr.povm(s)
    return measure_povm(ens.state(s), povm, ens.train_labels)


def learner_joint(ens: CQEnsemble, lr: Learner) -> JointDistribution:
    """``P^A(s, w) = P(s)·tr[E_s(w) ρ_train(s)]``.

    Outcomes with conditional probability ≤ ``P_FLOOR`` are dropped without
    renormalization; the dropped mass must stay below ``MASS_TOL``.
    """
    mass = {}
    for s, p, rho in ens.entries:
        if p == 0:
            continue
        povm = lr.povm(s)
        rho_tr = partial_trace(rho, ens.train_labels)
        rho_tr = reorder(rho_tr, povm.shape.labels) if set(rho_tr.shape.labels) == set(povm.shape.labels) else rho_tr
        if rho_tr.shape.dims != povm.shape.dims:
            raise ShapeMismatch("learner POVM does not act on the train register")
        for w, e in povm.outcomes:
            q = float(np.real(np.einsum("ij,ji->", e.matrix, rho_tr.matrix)))
            if q > P_FLOOR:
                mass[(s, w)] = p * q
    return JointDistribution(mass)


def post_measurement_state(ens: CQEnsemble, lr: Learner, s, w) -> DensityOperator:
    """Lüders-updated test⊗train state ρ^A(s, w)."""
    povm = lr.povm(s)
    eff = dict(povm.outcomes).get(w)
    if eff is None:
        raise KeyError(f"outcome {w!r} not in POVM for {s!r}")
    rho = ens.state(s)
    root = hermitian_fn(eff, "sqrt").matrix
    local = SubsystemShape(ens.train_labels, povm.shape.dims)
    _check_on(rho.shape, ens.train_labels, povm.shape)
    m, shp = _local_apply(rho.matrix, rho.shape, ens.train_labels, root, None, local)
    m = reorder(Operator(m, shp), rho.shape.labels).matrix
    q = float(np.real(np.trace(m)))
    if q <= P_FLOOR:
        raise ZeroProbabilityOutcome(f"outcome {w!r} has probability {q:.3g} for record {s!r}")
    return DensityOperator.from_unnormalized(m, rho.shape)


def learner_output_state(ens: CQEnsemble, lr: Learner, s, w) -> DensityOperator:
    """σ^A(s, w) = (id_test ⊗ Λ_{s,w})(ρ^A(s, w)) on test ⊗ hyp."""
    post = post_measurement_state(ens, lr, s, w)
    ch = lr.channel(s, w)
    if ch.out_shape.labels != lr.hyp_shape.labels or ch.out_shape.dims != lr.hyp_shape.dims:
        raise ShapeMismatch("channel output does not match the learner's hyp shape")
    out = apply_channel(post, ch, ens.train_labels)
    return reorder(out, list(ens.test_labels) + list(lr.hyp_shape.labels))


def hyp_marginal(ens: CQEnsemble, lr: Learner, s, w) -> DensityOperator:
    """σ^A_hyp(s, w), defined also where the outcome is (nearly) impossible.

    When tr[E_s(w) ρ_train(s)] ≤ ``P_FLOOR`` the conditional state is not
    determined by the data; it is still well defined when the hypothesis
    register is trivial or the channel ignores its input, and
    :class:`ZeroProbabilityOutcome` is raised otherwise.
    """
    hs = lr.hyp_shape
    if hs.total == 1:
        return DensityOperator(np.ones((1, 1)), hs)
    try:
        sig = learner_output_state(ens, lr, s, w)
        return partial_trace(sig, hs.labels)
    except ZeroProbabilityOutcome:
        ch = lr.channel(s, w)
        d = ch.in_shape.total
        out0 = sum(k[:, :1] @ k[:, :1].conj().T for k in ch.kraus)
        if np.max(np.abs(ch.choi() - np.kron(np.eye(d), out0))) < 1e-12:
            return DensityOperator(out0, hs)
        raise


def decoupled_state(ens: CQEnsemble, lr: Learner, s, w) -> DensityOperator:
    """τ^A(s, w) = ρ_test(s) ⊗ σ^A_hyp(s, w)."""
    rho_t = partial_trace(ens.state(s), ens.test_labels)
    hyp = hyp_marginal(ens, lr, s, w)
    if hyp.shape.total == 1 and not hyp.shape.labels:
        return rho_t
    return tensor_product(rho_t, hyp)


# --- factorization checks ------------------------------------------------------

def check_factorization(ens: CQEnsemble, lr: Learner, atol: float = 1e-10) -> bool:
    """Verify declared site structure against the assembled global objects.

    Checks ρ(s) = ⊗ρ_i(z_i) and, when declared, E_s(w) = ⊗E_i(z_i, w) and
    Λ_{s,w} = ⊗Λ_i(z_i, w).  Raises :class:`ValidationError` on mismatch.
    """
    site = ens.site_model
    if site is None:
        raise ValidationError("ensemble has no site model")
    order = list(ens.shape.labels)
    for s in ens.records:
        rho = tensor_product(*[site.state(i, z) for i, z in enumerate(s)])
        rho = reorder(rho, order)
        if np.max(np.abs(rho.matrix - ens.state(s).matrix)) > atol:
            raise ValidationError(f"state for {s!r} is not the declared product")
    fac = lr.factorized
    if fac is None:
        return True
    for s in ens.records:
        povm = lr.povm(s)
        for w, e in povm.outcomes:
            if fac.effect is not None:
                loc = tensor_product(*[fac.effect(i, z, w) for i, z in enumerate(s)])
                loc = reorder(loc, povm.shape.labels)
                if np.max(np.abs(loc.matrix - e.matrix)) > atol:
                    raise ValidationError(f"effect ({s!r}, {w!r}) is not the declared product")
            if fac.channel is not None:
                chs = [fac.channel(i, z, w) for i, z in enumerate(s)]
                glob = chs[0]
                for c in chs[1:]:
                    glob = glob.tensor(c)
                g = lr.channel(s, w)
                if glob.in_shape.labels != g.in_shape.labels or glob.out_shape.labels != g.out_shape.labels:
                    raise ValidationError("declared local channels use a different label order")
                if np.max(np.abs(glob.choi() - g.choi())) > atol:
                    raise ValidationError(f"channel ({s!r}, {w!r}) is not the declared product")
    return True


def product_learner(site: SiteModel, effect: Callable, hyp_outcomes: Sequence,
                    channel: Callable | None = None, hyp_labels: Sequence[Sequence[str]] | None = None) -> Learner:
    """Build a learner whose effects and channels are site-wise products.

    ``effect(i, z, w)`` must give, for every site and z, local effects whose
    product over sites sums to the identity over ``hyp_outcomes``, so the
    global POVM ``{⊗_i effect(i, z_i, w)}_w`` must be complete.
    """
    train_labels = [l for t in site.train_labels for l in t]

    def povm_for(s):
        outs = []
        for w in hyp_outcomes:
            e = tensor_product(*[effect(i, z, w) for i, z in enumerate(s)])
            outs.append((w, EffectOperator(reorder(e, train_labels).matrix,
                                           SubsystemShape(train_labels, reorder(e, train_labels).shape.dims))))
        return Povm(tuple(outs))

    cache: dict = {}

    def povm_cached(s):
        if s not in cache:
            cache[s] = povm_for(s)
        return cache[s]

    if channel is None:
        def channel_for(s, w):
            p = povm_cached(s)
            return Channel.trace_out(p.shape)

        return Learner(povm_cached, channel_for, SubsystemShape.trivial(),
                       LearnerFactors(effect, None, ()))
    hyp_labels = tuple(tuple(h) for h in hyp_labels)

    def channel_for(s, w):
        chs = [channel(i, z, w) for i, z in enumerate(s)]
        g = chs[0]
        for c in chs[1:]:
            g = g.tensor(c)
        return g

    probe = channel_for(tuple(site.alphabet[0] for _ in range(site.m)), hyp_outcomes[0])
    return Learner(povm_cached, channel_for, probe.out_shape,
                   LearnerFactors(effect, channel, hyp_labels))
