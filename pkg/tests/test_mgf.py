import math

import numpy as np
import pytest

from conftest import shape
from qgen.errors import RangeExhausted, SingularLog
from qgen.mgf import (
    LogMgfProfile,
    classical_log_mgf,
    classical_profile,
    compose_local_subgaussian,
    fit_subgaussian,
    legendre_dual,
    legendre_dual_inverse,
    mirror,
    quadratic,
    quantum_log_mgf,
    quantum_log_mgf_gt,
    quantum_profile,
)
from qgen.qmat import DensityOperator, HermitianObservable, basis_projector, random_density, random_hermitian

A = shape(("a", 2))
Z = HermitianObservable(np.diag([1.0, -1.0]), A)
HALF = DensityOperator(np.eye(2) / 2, A)


class TestLogMgf:
    def test_log_cosh(self):
        for lam in (-2.0, -0.3, 0.5, 1.0, 7.0):
            assert math.isclose(quantum_log_mgf(HALF, Z, lam), math.log(math.cosh(lam)), rel_tol=1e-12)

    def test_array_input(self):
        lam = np.array([0.0, 1.0, -1.0])
        out = quantum_log_mgf(HALF, Z, lam)
        assert out.shape == (3,)
        assert np.allclose(out, np.log(np.cosh(lam)))

    def test_scalar_observable(self, rng):
        r = random_density(shape(("a", 3)), rng)
        L = HermitianObservable(2.5 * np.eye(3), r.shape)
        assert np.allclose(quantum_log_mgf(r, L, np.linspace(-5, 5, 11)), 0.0, atol=1e-12)

    def test_direct_oracle(self, rng):
        sh = shape(("a", 3))
        for _ in range(20):
            tau = random_density(sh, rng)
            L = random_hermitian(sh, rng)
            lam = float(rng.uniform(-3, 3))
            c = np.trace(tau.matrix @ L.matrix).real
            ev, vec = np.linalg.eigh(L.matrix - c * np.eye(3))
            want = math.log(np.trace(tau.matrix @ (vec * np.exp(lam * ev)) @ vec.conj().T).real)
            assert math.isclose(quantum_log_mgf(tau, L, lam), want, rel_tol=1e-10, abs_tol=1e-12)

    def test_gt_is_smaller(self, rng):
        # tr e^{log τ + λL} ≤ tr[τ e^{λL}] by Golden–Thompson
        sh = shape(("a", 3))
        gaps = []
        for _ in range(100):
            tau = random_density(sh, rng)
            L = random_hermitian(sh, rng)
            lam = float(rng.uniform(-4, 4))
            gap = quantum_log_mgf(tau, L, lam) - quantum_log_mgf_gt(tau, L, lam)
            assert gap >= -1e-10
            gaps.append(gap)
        assert max(gaps) > 1e-3  # strict on noncommuting pairs

    def test_gt_equal_when_commuting(self, rng):
        p = rng.dirichlet(np.ones(3))
        sh = shape(("a", 3))
        tau = DensityOperator(np.diag(p), sh)
        L = HermitianObservable(np.diag(rng.normal(size=3)), sh)
        for lam in (-2.0, 0.4, 3.0):
            assert math.isclose(quantum_log_mgf_gt(tau, L, lam), quantum_log_mgf(tau, L, lam), abs_tol=1e-12)

    def test_gt_needs_full_rank(self):
        with pytest.raises(SingularLog):
            quantum_log_mgf_gt(DensityOperator(basis_projector(0, 2), A), Z, 1.0)

    def test_bernoulli(self):
        p, lam = 0.3, 2.0
        want = math.log(0.7 * math.exp(-lam * p) + 0.3 * math.exp(lam * (1 - p)))
        assert math.isclose(classical_log_mgf([(0.7, 0.0), (0.3, 1.0)], lam), want, rel_tol=1e-12)

    def test_classical_embedding(self, rng):
        p = rng.dirichlet(np.ones(4))
        x = rng.normal(size=4)
        sh = shape(("a", 4))
        tau = DensityOperator(np.diag(p), sh)
        L = HermitianObservable(np.diag(x), sh)
        lam = np.linspace(-3, 3, 13)
        assert np.allclose(quantum_log_mgf(tau, L, lam), classical_log_mgf(list(zip(p, x)), lam))


class TestFits:
    def test_unit_interval_hoeffding(self, rng):
        for _ in range(30):
            k = int(rng.integers(2, 6))
            p = rng.dirichlet(np.ones(k))
            x = rng.uniform(0, 1, size=k)
            fit = fit_subgaussian(classical_profile(list(zip(p, x))))
            assert fit.alpha <= 0.5 + 1e-9

    def test_fair_coin_attains_half(self):
        fit = fit_subgaussian(classical_profile([(0.5, 0.0), (0.5, 1.0)]))
        assert math.isclose(fit.alpha, 0.5, rel_tol=1e-6)

    def test_constant(self):
        assert fit_subgaussian(classical_profile([(1.0, 3.0)])).alpha == 0.0

    def test_pauli_on_maximally_mixed(self):
        fit = fit_subgaussian(quantum_profile(HALF, Z))
        assert math.isclose(fit.alpha, 1.0, rel_tol=1e-6)
        assert fit.mode == "quantum"

    def test_fit_dominates_profile(self, rng):
        sh = shape(("a", 3))
        for _ in range(20):
            tau, L = random_density(sh, rng), random_hermitian(sh, rng)
            fit = fit_subgaussian(quantum_profile(tau, L))
            lam = np.linspace(-30, 30, 601)
            assert np.all(quantum_log_mgf(tau, L, lam) <= fit.alpha ** 2 * lam ** 2 / 2 + 1e-9)

    def test_profile_rejects_nonzero_origin(self):
        with pytest.raises(ValueError):
            LogMgfProfile(lambda lam: np.ones_like(lam))

    def test_compose(self):
        assert math.isclose(compose_local_subgaussian([0.5] * 4, 4), 0.25)
        assert compose_local_subgaussian([0.7], 1) == 0.7
        with pytest.raises(ValueError):
            compose_local_subgaussian([-1.0], 1)


class TestDuals:
    def test_quadratic_dual(self):
        d = legendre_dual(quadratic(2.0))
        for t in (0.5, 1.0, 3.0):
            assert math.isclose(d(t), t * t / 8, rel_tol=1e-8)

    def test_quadratic_inverse(self):
        for a, s in ((0.5, 0.1), (1.0, 2.0), (3.0, 0.01)):
            got = legendre_dual_inverse(quadratic(a), s)
            assert math.isclose(got, math.sqrt(2 * a * a * s), rel_tol=1e-7)

    def test_zero_psi(self):
        zero = lambda lam: np.zeros_like(np.asarray(lam, dtype=float))
        assert legendre_dual_inverse(zero, 1.0) == 0.0
        assert legendre_dual(zero)(1.0) == math.inf

    def test_zero_information(self):
        assert legendre_dual_inverse(quadratic(1.0), 0.0) == 0.0

    def test_infinite_information(self):
        assert legendre_dual_inverse(quadratic(1.0), math.inf) == math.inf

    def test_range_exhausted(self):
        # a very flat ψ pushes the maximiser past Λmax
        with pytest.raises(RangeExhausted):
            legendre_dual(quadratic(1e-4), lam_max=10.0)(1.0)

    def test_mirror(self):
        psi = lambda lam: np.asarray(lam, dtype=float) ** 3 + np.asarray(lam, dtype=float) ** 4
        assert mirror(psi)(2.0) == psi(-2.0)

    def test_bernoulli_dual_is_kl(self):
        # ψ* for a centred Bernoulli(p) at t is KL(p + t ‖ p)
        p, t = 0.3, 0.2
        psi = lambda lam: classical_log_mgf([(1 - p, 0.0), (p, 1.0)], lam)
        q = p + t
        kl = q * math.log(q / p) + (1 - q) * math.log((1 - q) / (1 - p))
        assert math.isclose(legendre_dual(psi)(t), kl, rel_tol=1e-7)
