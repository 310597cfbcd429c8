"""Seeded random (ensemble, learner, loss) triples for property checks."""
from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from ..bounds import LocalLoss, LossFamily
from ..cqdata import Channel, CQEnsemble, Learner, SiteModel, iid_ensemble, product_learner, random_channel, random_povm
from ..qmat import EffectOperator, SubsystemShape, random_density, random_spectrum_observable, tensor_product

MAX_PAIRS = 32


@dataclass(frozen=True)
class RandomInstance:
    ens: CQEnsemble
    lr: Learner
    loss: LossFamily
    info: dict

    def triple(self):
        return self.ens, self.lr, self.loss


def _rng(seed) -> np.random.Generator:
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def random_generic(seed, max_pairs: int = MAX_PAIRS) -> RandomInstance:
    """Unstructured instance: correlated test/train states, random POVMs, channels and losses.

    Sizes: |Z| ≤ 3, m ≤ 4 with |Z|^m ≤ 9, test and train dimensions ≤ 4 with
    product ≤ 16, hypothesis dimension ≤ 3 and |W| ≤ 8 with |S|·|W| ≤ max_pairs.
    """
    rng = _rng(seed)
    while True:
        nz, m = int(rng.integers(1, 4)), int(rng.integers(1, 5))
        if nz ** m <= 9:
            break
    while True:
        dt, dtr = int(rng.integers(2, 5)), int(rng.integers(2, 5))
        if dt * dtr <= 16:
            break
    dh = int(rng.integers(1, 4))
    n_s = nz ** m
    nw = int(rng.integers(1, min(8, max(1, max_pairs // n_s)) + 1))
    pz = rng.dirichlet(np.ones(nz))
    records = list(itertools.product(range(nz), repeat=m))
    shape = SubsystemShape(["T", "R"], [dt, dtr])
    tr_shape = SubsystemShape.single("R", dtr)
    entries = []
    for s in records:
        rank = int(rng.integers(1, dt * dtr + 1))
        entries.append((s, float(np.prod(pz[list(s)])), random_density(shape, rng, rank)))
    ens = CQEnsemble(entries, ["T"], ["R"])
    ws = list(range(nw))
    povms = {s: random_povm(tr_shape, ws, rng) for s in records}
    if dh == 1:
        hyp = SubsystemShape.trivial()
        ch = Channel.trace_out(tr_shape)
        channels = {(s, w): ch for s in records for w in ws}
    else:
        hyp = SubsystemShape.single("H", dh)
        channels = {(s, w): random_channel(tr_shape, hyp, rng, n_kraus=int(rng.integers(1, 4)))
                    for s in records for w in ws}
    out = SubsystemShape(["T"] + list(hyp.labels), [dt] + list(hyp.dims))
    losses = {(s, w): random_spectrum_observable(out, rng, 0.0, 1.0) for s in records for w in ws}
    lr = Learner(povms, channels, hyp)
    info = {"kind": "generic", "nz": nz, "m": m, "dt": dt, "dtr": dtr, "dh": dh, "nw": nw}
    return RandomInstance(ens, lr, LossFamily(losses), info)


def random_factorized(seed, m: int | None = None, symmetric: bool = False, quantum_hyp: bool | None = None
                      ) -> RandomInstance:
    """i.i.d. site instance with a product learner and a local loss.

    Each site holds a correlated qubit pair (t_i, r_i); the learner measures
    every r_i with a two-outcome POVM depending on z_i, so w ∈ {0,1}^m, and
    optionally maps r_i to a qubit hypothesis register h_i (then m ≤ 2 unless
    given).  With
    ``symmetric=True`` all sites share the same local tables.
    """
    rng = _rng(seed)
    if quantum_hyp is None:
        quantum_hyp = bool(rng.integers(0, 2))
    # three sites with quantum hypotheses cost seconds per instance
    m = int(rng.integers(1, 3 if quantum_hyp else 4)) if m is None else m
    nz = int(rng.integers(1, 4))
    probs = tuple(rng.dirichlet(np.ones(nz)))
    n_tab = 1 if symmetric else m
    loc = SubsystemShape(["t", "r"], [2, 2])
    rho = [[random_density(loc, rng, int(rng.integers(1, 5))).matrix for _ in range(nz)] for _ in range(n_tab)]
    eff = [[random_povm(SubsystemShape.single("r", 2), [0, 1], rng) for _ in range(nz)] for _ in range(n_tab)]
    chans = [[[random_channel(SubsystemShape.single("r", 2), SubsystemShape.single("h", 2), rng)
               for _ in range(2)] for _ in range(nz)] for _ in range(n_tab)] if quantum_hyp else None
    hyps = list(itertools.product((0, 1), repeat=m))
    dh = 2 if quantum_hyp else 1
    loss_tab = [[{wi: random_spectrum_observable(SubsystemShape.single("x", 2 * dh), rng).matrix for wi in (0, 1)}
                 for _ in range(nz)] for _ in range(n_tab)]
    k = lambda i: 0 if symmetric else i

    from ..qmat import DensityOperator, HermitianObservable

    def state(i, z):
        return DensityOperator(rho[k(i)][z], SubsystemShape([f"t{i}", f"r{i}"], [2, 2]))

    test = tuple((f"t{i}",) for i in range(m))
    train = tuple((f"r{i}",) for i in range(m))
    site = SiteModel(m, tuple(range(nz)), probs, state, test, train)
    ens = iid_ensemble(site)

    def effect(i, z, w):
        e = eff[k(i)][z].outcomes[w[i]][1]
        return EffectOperator(e.matrix, SubsystemShape.single(f"r{i}", 2))

    if quantum_hyp:
        def channel(i, z, w):
            c = chans[k(i)][z][w[i]]
            return Channel(c.kraus, SubsystemShape.single(f"r{i}", 2), SubsystemShape.single(f"h{i}", 2))

        lr = product_learner(site, effect, hyps, channel, [(f"h{i}",) for i in range(m)])
        hyp_labels = tuple((f"h{i}",) for i in range(m))
    else:
        lr = product_learner(site, effect, hyps)
        hyp_labels = tuple(() for _ in range(m))

    def term(i, z, w):
        labels = [f"t{i}"] + list(hyp_labels[i])
        return HermitianObservable(loss_tab[k(i)][z][w[i]], SubsystemShape(labels, [2] * len(labels)))

    loss = LossFamily.from_local(LocalLoss(m, term, test, hyp_labels))
    info = {"kind": "factorized", "m": m, "nz": nz, "quantumHyp": quantum_hyp, "symmetric": symmetric}
    return RandomInstance(ens, lr, loss, info)


def random_instance(seed) -> RandomInstance:
    """Generic or factorized instance, chosen by the seed."""
    rng = _rng(seed)
    if rng.random() < 0.6:
        return random_generic(rng)
    return random_factorized(rng)
