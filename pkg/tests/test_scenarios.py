import math

import numpy as np
import pytest

from qgen.bounds import Evaluation, certify, generalization_error
from qgen.errors import ConfigError, InvalidMgfBound
from qgen.scenarios import (
    ScenarioConfig,
    SweepResult,
    build,
    build_entangled_pac,
    build_pac_state_learning,
    build_parameter_estimation,
    build_state_classification,
    classical_reference,
    run_sweep,
    set_axis,
)
from qgen.scenarios.entangled import EntangledModel
from qgen.scenarios.pac import PacModel, estimate_exact, estimate_montecarlo

MAJORITY = dict(
    hypotheses={"effects": [[[0.4, 0.0], [0.0, 0.4]], [[0.6, 0.0], [0.0, 0.6]]]},
    distribution={"pairs": [[[0.0, 0.0, 0.4], [0.0, 0.0, -0.4]]]},
)


def classification(m=1, **kw):
    base = dict(hypotheses={"family": "projectors", "count": 4},
                distribution={"pairs": [[[0.0, 0.0, 0.8], [0.6, 0.0, -0.6]]]})
    base.update(kw)
    return ScenarioConfig("stateClassification", m=m, **base)


def slope(xs, ys):
    return float(np.polyfit(np.log(xs), np.log(ys), 1)[0])


class TestConfig:
    def test_aliases_and_validation(self):
        with pytest.raises(ConfigError):
            ScenarioConfig("nope")
        with pytest.raises(ConfigError):
            ScenarioConfig("stateClassification", m=0)
        with pytest.raises(ConfigError):
            ScenarioConfig("stateClassification", eps=0)

    def test_unknown_section_key(self):
        with pytest.raises(ConfigError):
            build(classification(learner={"rulez": "erm"}))

    def test_set_axis(self):
        cfg = classification()
        assert set_axis(cfg, "m", 4).m == 4
        assert set_axis(cfg, "hypotheses.count", 6).hypotheses["count"] == 6
        assert cfg.hypotheses["count"] == 4
        with pytest.raises(ConfigError):
            set_axis(cfg, "colour", 1)


class TestClassification:
    def test_orthogonal_pair(self):
        cfg = ScenarioConfig("stateClassification", m=2,
                             hypotheses={"family": "projectors", "count": 2},
                             distribution={"pairs": [[[0.0, 0.0, 1.0], [0.0, 0.0, -1.0]]]})
        ens, lr, loss = build_state_classification(cfg)
        ev = Evaluation(ens, lr, loss)
        assert ev.risk.gen == pytest.approx(0.0, abs=1e-12)
        c = certify(ens, lr, loss, "cor22", evaluation=ev)
        assert c.rhs >= 0 and c.holds

    @pytest.mark.parametrize("K", [2, 3, 4])
    def test_mi_below_log_k(self, K):
        cfg = classification(m=2, hypotheses={"family": "projectors", "count": K})
        risk, cert = build(cfg).run("cor22")
        assert cert.mi_term <= math.log(K) + 1e-12
        assert cert.holds

    def test_dense_matches_counts(self):
        # the count-based evaluator reproduces full enumeration of the pipeline
        cfg = classification(m=2)
        sc = build(cfg)
        ens, lr, loss = build_state_classification(cfg)
        dense = Evaluation(ens, lr, loss)
        risk, cert = sc.run("cor22")
        assert risk.gen == pytest.approx(dense.risk.gen, abs=1e-10)
        assert cert.mi_term == pytest.approx(dense.mi_term, abs=1e-10)

    def test_majority_rate(self):
        ms = [1, 2, 4, 8, 16]
        res = run_sweep(ScenarioConfig("stateClassification", **MAJORITY), "m", ms)
        rhs = [c.rhs for _, _, c in res.points]
        assert all(c.holds for _, _, c in res.points)
        assert slope(ms, rhs) == pytest.approx(-0.5, abs=0.05)

    def test_closed_form_rate(self):
        # β = 1/(2√m) turns the certificate into √(I(S;W)/(2m))
        for m in (1, 4, 16):
            sc = build(ScenarioConfig("stateClassification", m=m, **MAJORITY))
            _, c = sc.run("cor22", beta=1 / (2 * math.sqrt(m)))
            assert c.rhs == pytest.approx(math.sqrt(c.mi_term / (2 * m)), rel=1e-12)
            assert c.holds


class TestSweep:
    def test_singleton(self):
        res = run_sweep(classification(), "m", [2])
        assert isinstance(res, SweepResult) and len(res) == 1

    def test_order_and_repeat(self):
        a = run_sweep(classification(), "m", [3, 1, 2], seeds=[5, 4])
        b = run_sweep(classification(), "m", [3, 1, 2], seeds=[5, 4])
        assert [(p[0]) for p in a.points] == [1, 1, 2, 2, 3, 3]
        assert [p[2].to_dict() for p in a.points] == [p[2].to_dict() for p in b.points]


class TestPac:
    def cfg(self, **kw):
        base = dict(m=2, m_test=2, m_train=2, eps=0.1, seed=3,
                    hypotheses={"family": "fibonacci", "count": 8},
                    distribution={"n_effects": 4, "rho0": "hyp:1"})
        base.update(kw)
        return ScenarioConfig("pacStateLearning", **base)

    def test_net_covers(self):
        model = PacModel(self.cfg())
        rng = np.random.default_rng(0)
        for _ in range(50):
            z = rng.integers(0, model.n_z, size=int(rng.integers(1, 6)))
            net = model.net(z)
            for w in range(model.n_hyp):
                assert min(model.seminorm_distance(z, w, u) for u in net) <= model.eps + 1e-12

    def test_deterministic(self):
        a = estimate_montecarlo(PacModel(self.cfg()), samples=200)
        b = estimate_montecarlo(PacModel(self.cfg()), samples=200)
        assert a == b

    def test_ties_lowest_index(self):
        model = PacModel(self.cfg(hypotheses={"states": [[0, 0, 1], [0, 0, 1], [0, 0, -1]]}))
        net = np.array([0, 1, 2])
        assert model.erm(net, [0], np.array([model.v[0, 0]])) == 0

    def test_dense_matches_exact(self):
        cfg = self.cfg(m=1, m_test=1, m_train=1)
        ens, lr, loss, _ = build_pac_state_learning(cfg)
        dense = generalization_error(ens, lr, loss)
        est = estimate_exact(PacModel(cfg))
        assert est.empirical == pytest.approx(dense.empirical, abs=1e-10)
        assert est.true_ == pytest.approx(dense.true_, abs=1e-10)

    def test_realizable_limit(self):
        cfg = self.cfg(m=16, m_test=256, m_train=256, hypotheses={"family": "fibonacci", "count": 32},
                       distribution={"n_effects": 16, "rho0": "hyp:5"})
        est = estimate_montecarlo(PacModel(cfg), samples=200)
        assert est.excess + 2 * est.excess_se <= cfg.eps

    def test_certificate_holds(self):
        risk, cert = build(self.cfg()).run("cor22")
        assert cert.holds
        with pytest.raises(ConfigError):
            build(self.cfg()).run("cor24")


class TestEntangled:
    def cfg(self, m, rule="gibbs"):
        return ScenarioConfig("entangledPac", m=m, distribution={"n_bits": 1, "probs": [0.35, 0.15, 0.1, 0.4]},
                              learner={"rule": rule})

    @pytest.mark.parametrize("m", [1, 2])
    @pytest.mark.parametrize("rule", ["gibbs", "erm"])
    def test_matches_classical(self, m, rule):
        cfg = self.cfg(m, rule)
        ev = Evaluation(*build_entangled_pac(cfg))
        ref = classical_reference(EntangledModel(cfg))
        assert ev.risk.empirical == pytest.approx(ref["empirical"], abs=1e-10)
        assert ev.risk.true_ == pytest.approx(ref["true"], abs=1e-10)
        # all information sits in the quantum register
        assert ev.qmi_term == pytest.approx(ref["mi"], abs=1e-10)
        assert ev.mi_term == pytest.approx(0.0, abs=1e-12)

    def test_xu_raginsky_single_site(self):
        ens, lr, loss = build_entangled_pac(self.cfg(1))
        ref = classical_reference(EntangledModel(self.cfg(1)))
        c = certify(ens, lr, loss, "cor22", alpha=0.5)
        assert c.rhs == pytest.approx(math.sqrt(2 * 0.25 * ref["mi"]), rel=1e-12)

    def test_mixture_needs_larger_alpha(self):
        ens, lr, loss = build_entangled_pac(self.cfg(2))
        ref = classical_reference(EntangledModel(self.cfg(2)))
        with pytest.raises(InvalidMgfBound):
            certify(ens, lr, loss, "cor22", alpha=0.5 / math.sqrt(2))
        c = certify(ens, lr, loss, "cor22")
        assert c.holds and c.rhs >= math.sqrt(ref["mi"] / 4)


class TestEstimation:
    def test_single_theta(self):
        cfg = ScenarioConfig("parameterEstimation", m=1, m_train=2, distribution={"thetas": [0.3]})
        risk, cert = build(cfg).run("cor22")
        assert risk.gen == pytest.approx(0.0, abs=1e-12)
        assert cert.rhs == 0.0

    def test_erm_vs_prior(self):
        base = dict(m=1, m_train=2, distribution={"thetas": [0.0, math.pi / 2], "noise": 0.1})
        _, erm = build(ScenarioConfig("parameterEstimation", learner={"rule": "erm"}, **base)).run("cor22")
        _, pri = build(ScenarioConfig("parameterEstimation", learner={"rule": "prior"}, **base)).run("cor22")
        assert erm.mi_term > pri.mi_term
        assert pri.mi_term == pytest.approx(0.0, abs=1e-12)

    def test_reports_diameter(self):
        cfg = ScenarioConfig("parameterEstimation", m=2, m_train=2,
                             distribution={"thetas": [0.0, 1.0, 2.5], "noise": 0.2},
                             hypotheses={"povms": [{"kind": "pgm"}, {"kind": "prior"}]})
        _, c = build(cfg).run("cor24")
        assert c.extra["Bp"] == pytest.approx(2.5)
        assert c.extra["bpTerm"] == pytest.approx(math.sqrt(2.5 / 4 * c.mi_term))

    def test_random_configs_hold(self):
        rng = np.random.default_rng(2024)
        for k in range(50):
            nt = int(rng.integers(2, 4))
            thetas = sorted(rng.uniform(0, math.pi, nt).tolist())
            povms = [{"kind": "pgm"}, {"kind": "projective", "axis": (lambda v: (v / np.linalg.norm(v)).tolist())(rng.normal(size=3)),
                                       "estimates": [0, nt - 1]}]
            m = int(rng.integers(1, 3))
            cfg = ScenarioConfig("parameterEstimation", m=m, m_train=2, seed=k,
                                 distribution={"thetas": thetas, "noise": float(rng.uniform(0, 0.5)),
                                               "probs": rng.dirichlet(np.ones(nt)).tolist()},
                                 hypotheses={"povms": povms, "norm_p": float(rng.choice([1.0, 2.0]))},
                                 learner={"rule": str(rng.choice(["erm", "prior"]))})
            sc = build(cfg)
            for b in ("cor22", "cor24"):
                _, c = sc.run(b)
                assert c.holds, (k, b, c)
