import math

import numpy as np
import pytest

from conftest import shape
from qgen.bounds import (
    BOUND_NAMES,
    Evaluation,
    LossFamily,
    bound_cor22,
    bound_cor24,
    bound_cor26,
    bound_general,
    certified_alpha,
    certified_beta,
    certify,
    expected_empirical_risk,
    expected_true_risk,
    generalization_error,
    local_fits,
)
from qgen.cqdata import (
    Channel,
    Learner,
    Povm,
    SiteModel,
    heisenberg_dual,
    iid_ensemble,
    random_channel,
    random_povm,
)
from qgen.errors import InvalidMgfBound, NotFactorized
from qgen.mgf import quadratic
from qgen.qmat import DensityOperator, HermitianObservable, basis_projector, random_density, random_hermitian, tensor_product
from qgen.scenarios.random_instances import random_factorized, random_generic

ZERO_PSI = lambda lam: np.zeros_like(np.asarray(lam, dtype=float))


def orth_site(p=0.5):
    """One site, label z, test and train copies of |z⟩."""
    def state(i, z):
        t = DensityOperator(basis_projector(z, 2), shape(("te0", 2)))
        r = DensityOperator(basis_projector(z, 2), shape(("tr0", 2)))
        return tensor_product(t, r)

    return SiteModel(1, (0, 1), (p, 1 - p), state, (("te0",),), (("tr0",),))


def misclass_loss():
    # predicting label w costs the weight of the test copy on the other label
    te = shape(("te0", 2))
    return LossFamily(lambda s, w: HermitianObservable(basis_projector(1 - w, 2), te))


def memorizer(ens):
    return Learner.measure_only(lambda s: Povm.computational(ens.train_shape), ens.train_shape)


def constant_learner(ens, w=0):
    return Learner.measure_only(lambda s: Povm.trivial(ens.train_shape, w), ens.train_shape)


class TestRisks:
    def test_identity_loss(self, rng):
        inst = random_generic(rng)
        ens, lr, _ = inst.triple()
        loss = LossFamily(lambda s, w: HermitianObservable(np.eye(ens.test_shape.total * lr.hyp_shape.total),
                                                           ens.test_shape.concat(lr.hyp_shape)))
        assert expected_empirical_risk(ens, lr, loss) == pytest.approx(1.0, abs=1e-12)
        assert expected_true_risk(ens, lr, loss) == pytest.approx(1.0, abs=1e-12)

    def test_classical_embedding(self):
        ens = iid_ensemble(orth_site(p=0.3))
        lr = memorizer(ens)
        ell = {((0,), 0): 0.2, ((0,), 1): 0.9, ((1,), 0): 0.5, ((1,), 1): 0.1}
        loss = LossFamily.classical(lambda s, w: ell[(s, w)], ens.test_shape)
        emp = 0.3 * ell[((0,), 0)] + 0.7 * ell[((1,), 1)]
        true = sum(ps * pw * ell[((z,), w)] for z, ps in ((0, 0.3), (1, 0.7)) for w, pw in ((0, 0.3), (1, 0.7)))
        rep = generalization_error(ens, lr, loss)
        assert rep.empirical == pytest.approx(emp, abs=1e-12)
        assert rep.true_ == pytest.approx(true, abs=1e-12)
        assert rep.gen == rep.true_ - rep.empirical

    def test_orthogonal_toy(self):
        ens = iid_ensemble(orth_site())
        rep = generalization_error(ens, memorizer(ens), misclass_loss())
        assert rep.empirical == pytest.approx(0.0, abs=1e-12)
        # on a fresh pair the memorized label is right half the time
        assert rep.true_ == pytest.approx(0.5, abs=1e-12)
        assert rep.gen > 0

    def test_data_independent(self, rng):
        inst = random_factorized(rng, quantum_hyp=False)
        ens, _, loss = inst.triple()
        w0 = (0,) * ens.site_model.m
        rep = generalization_error(ens, constant_learner(ens, w0), loss)
        assert rep.gen == pytest.approx(0.0, abs=1e-12)

    def test_heisenberg_rewriting(self, rng):
        # Λ = Λ″∘Λ′ with loss L is the same learner as Λ′ with (id ⊗ Λ″)*(L)
        def state(i, z):
            return random_density(shape(("te0", 2), ("tr0", 2)), np.random.default_rng([5, z]))

        site = SiteModel(1, (0, 1), (0.4, 0.6), state, (("te0",),), (("tr0",),))
        ens = iid_ensemble(site)
        povm = random_povm(ens.train_shape, [0, 1], rng)
        mid, out = shape(("k", 3)), shape(("h", 2))
        first = {w: random_channel(ens.train_shape, mid, rng) for w in (0, 1)}
        second = {w: random_channel(mid, out, rng) for w in (0, 1)}
        Ls = {(s, w): random_hermitian(shape(("te0", 2), ("h", 2)), rng) for s in ens.records for w in (0, 1)}
        full = Learner(lambda s: povm, lambda s, w: second[w].compose(first[w]), out)
        short = Learner(lambda s: povm, lambda s, w: first[w], mid)
        loss_full = LossFamily(lambda s, w: Ls[(s, w)])
        loss_short = LossFamily(lambda s, w: heisenberg_dual(second[w], Ls[(s, w)], ["h"]))
        a = generalization_error(ens, full, loss_full)
        b = generalization_error(ens, short, loss_short)
        assert a.empirical == pytest.approx(b.empirical, abs=1e-10)
        assert a.true_ == pytest.approx(b.true_, abs=1e-10)


class TestInformationTerms:
    def test_identity(self):
        for k in range(10):
            inst = random_generic(np.random.default_rng([3, k]))
            ev = Evaluation(*inst.triple())
            assert abs(ev.expected_relative_entropy - ev.qmi_term - ev.holevo_term) < 1e-8

    def test_orthogonal_toy_terms(self):
        ens = iid_ensemble(orth_site(p=0.3))
        ev = Evaluation(ens, memorizer(ens), misclass_loss())
        assert ev.qmi_term == 0.0
        assert ev.holevo_term == pytest.approx(0.0, abs=1e-12)
        assert ev.mi_term == pytest.approx(-(0.3 * math.log(0.3) + 0.7 * math.log(0.7)), rel=1e-12)


class TestCor22:
    def test_orthogonal_toy(self):
        ens = iid_ensemble(orth_site())
        c = bound_cor22(ens, memorizer(ens), misclass_loss())
        assert c.beta == pytest.approx(0.5, rel=1e-6)
        assert c.rhs == pytest.approx(math.sqrt(2 * 0.25 * math.log(2)), rel=1e-6)
        assert c.holds and c.slack == pytest.approx(c.rhs - 0.5)

    def test_zero_information(self, rng):
        inst = random_factorized(rng, quantum_hyp=False)
        ens, _, loss = inst.triple()
        c = bound_cor22(ens, constant_learner(ens, (0,) * ens.site_model.m), loss)
        assert c.rhs == 0.0 and c.holds

    def test_random_instances_hold(self):
        for k in range(15):
            inst = random_generic(np.random.default_rng([9, k]))
            c = bound_cor22(*inst.triple())
            assert c.holds, (k, c)
            assert c.rhs >= c.gen_abs - 1e-9

    def test_classical_reduction(self):
        # product test/train data and no hypothesis register: only I(S;W) survives
        ens = iid_ensemble(orth_site(p=0.3))
        c = bound_cor22(ens, memorizer(ens), misclass_loss(), beta=0.5)
        assert c.rhs == math.sqrt(2 * 0.25 * c.mi_term)

    def test_understated_beta_rejected(self):
        ens = iid_ensemble(orth_site())
        with pytest.raises(InvalidMgfBound):
            bound_cor22(ens, memorizer(ens), misclass_loss(), beta=0.1)
        c = bound_cor22(ens, memorizer(ens), misclass_loss(), beta=0.1, validate=False)
        assert not c.holds


class TestGeneral:
    def test_scalar_loss_reduces_to_classical(self):
        ens = iid_ensemble(orth_site(p=0.3))
        loss = LossFamily.classical(lambda s, w: float(s[0] != w) * 0.0 + 0.3 * w + 0.5 * s[0], ens.test_shape)
        lr = memorizer(ens)
        beta = certified_beta(Evaluation(ens, lr, loss))
        phi = quadratic(beta)
        c = bound_general(ens, lr, loss, ZERO_PSI, ZERO_PSI, phi, phi)
        assert c.rhs == pytest.approx(math.sqrt(2 * beta ** 2 * c.mi_term), rel=1e-7)
        assert c.holds

    def test_data_independent_zero(self, rng):
        inst = random_factorized(rng, quantum_hyp=False)
        ens, _, loss = inst.triple()
        c = bound_general(ens, constant_learner(ens, (0,) * ens.site_model.m), loss,
                          quadratic(1.0), quadratic(1.0), quadratic(1.0), quadratic(1.0))
        assert c.rhs == 0.0

    def test_quadratic_matches_cor22(self):
        for k in range(5):
            inst = random_generic(np.random.default_rng([11, k]))
            ev = Evaluation(*inst.triple())
            a, b = certified_alpha(ev), certified_beta(ev)
            c22 = bound_cor22(*inst.triple(), evaluation=ev)
            gen = bound_general(*inst.triple(), quadratic(a), quadratic(a), quadratic(b), quadratic(b), evaluation=ev)
            assert gen.rhs == pytest.approx(c22.rhs, rel=1e-6, abs=1e-9)

    def test_monotone_in_psi(self):
        inst = random_generic(np.random.default_rng([12, 0]))
        ev = Evaluation(*inst.triple())
        a, b = certified_alpha(ev), certified_beta(ev)
        tight = bound_general(*inst.triple(), quadratic(a), quadratic(a), quadratic(b), quadratic(b), evaluation=ev)
        loose = bound_general(*inst.triple(), quadratic(2 * a), quadratic(2 * a), quadratic(2 * b),
                              quadratic(2 * b), evaluation=ev)
        assert loose.rhs >= tight.rhs

    def test_asymmetric_sides(self):
        # +gen is controlled by the λ < 0 bounds, −gen by the λ ≥ 0 bounds
        ens = iid_ensemble(orth_site())
        lr, loss = memorizer(ens), misclass_loss()
        big, small = quadratic(1.0), quadratic(0.5)
        c = bound_general(ens, lr, loss, ZERO_PSI, ZERO_PSI, big, small, validate=False)
        assert c.rhs == c.rhs_plus
        assert c.rhs_plus == pytest.approx(math.sqrt(2 * 0.25 * math.log(2)), rel=1e-6)
        assert c.rhs_minus == pytest.approx(math.sqrt(2 * math.log(2)), rel=1e-6)


class TestLocalBounds:
    def test_cor24_m1_equals_cor22(self):
        for k in range(6):
            inst = random_factorized(np.random.default_rng([13, k]), m=1)
            ev = Evaluation(*inst.triple())
            c22 = bound_cor22(*inst.triple(), evaluation=ev)
            c24 = bound_cor24(*inst.triple(), evaluation=ev)
            assert c24.rhs == pytest.approx(c22.rhs, rel=1e-6, abs=1e-9)

    def test_cor24_uniform_parameters(self):
        inst = random_factorized(np.random.default_rng([14, 1]), m=2, quantum_hyp=True)
        ev = Evaluation(*inst.triple())
        la, lb = local_fits(ev)
        a0, b0 = max(la) + 0.1, max(lb) + 0.1
        c = bound_cor24(*inst.triple(), local_alphas=a0, local_betas=b0, evaluation=ev)
        Q = c.qmi_term + c.holevo_term
        want = math.sqrt(2 * a0 ** 2 / 2 * Q) + math.sqrt(2 * b0 ** 2 / 2 * c.mi_term)
        assert c.rhs == pytest.approx(want, rel=1e-12)
        assert c.holds

    def test_cor24_rejects_small_local(self):
        inst = random_factorized(np.random.default_rng([14, 2]), m=2, quantum_hyp=False)
        ev = Evaluation(*inst.triple())
        if ev.mi_term <= 1e-12:
            pytest.skip("instance carries no information")
        with pytest.raises(InvalidMgfBound):
            bound_cor24(*inst.triple(), local_betas=0.0, evaluation=ev)

    def test_not_factorized(self, rng):
        inst = random_generic(rng)
        with pytest.raises(NotFactorized):
            bound_cor24(*inst.triple())
        with pytest.raises(NotFactorized):
            bound_cor26(*inst.triple())

    def test_cor26_degenerate_constants(self):
        inst = random_factorized(np.random.default_rng([15, 0]), m=2, quantum_hyp=False)
        c = bound_cor26(*inst.triple(), C1=0.0, C2=0.0)
        M = c.extra["maxLocalNorm"]
        assert c.rhs == pytest.approx(2 * math.sqrt(2) * M * math.sqrt(c.mi_term) / math.sqrt(2), rel=1e-12)

    def test_cor26_holds(self):
        for k in range(8):
            inst = random_factorized(np.random.default_rng([16, k]))
            c = bound_cor26(*inst.triple(), C1=1.0, C2=1.0)
            assert math.isfinite(c.rhs) and c.holds


class TestDispatch:
    def test_names(self):
        inst = random_factorized(np.random.default_rng([17, 0]), m=1)
        ev = Evaluation(*inst.triple())
        for name in BOUND_NAMES:
            c = certify(*inst.triple(), name, evaluation=ev)
            assert c.bound_name == name
            assert c.to_dict()["boundName"] == name

    def test_unknown(self):
        inst = random_factorized(np.random.default_rng([17, 1]), m=1)
        with pytest.raises(ValueError):
            certify(*inst.triple(), "cor99")
