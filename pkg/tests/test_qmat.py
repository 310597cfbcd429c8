import math

import numpy as np
import pytest
from scipy.linalg import expm, logm

from conftest import ket, shape
from qgen.errors import ShapeMismatch, SingularLog, UnknownLabel, ValidationError
from qgen.qmat import (
    DensityOperator,
    EffectOperator,
    HermitianObservable,
    Operator,
    SubsystemShape,
    basis_projector,
    embed,
    hermitian_fn,
    operator_norm,
    partial_trace,
    random_density,
    random_hermitian,
    reorder,
    tensor_product,
    trace_norm,
)

Z = np.diag([1.0, -1.0])


class TestShape:
    def test_duplicate_labels_rejected(self):
        with pytest.raises(ValidationError):
            SubsystemShape(["a", "a"], [2, 2])

    def test_unknown_label(self):
        with pytest.raises(UnknownLabel):
            shape(("a", 2)).index("b")

    def test_trivial_total(self):
        assert SubsystemShape.trivial().total == 1

    def test_sub_keeps_order(self):
        s = shape(("a", 2), ("b", 3), ("c", 4))
        assert s.sub(["c", "a"]).labels == ("a", "c")


class TestValidation:
    def test_density_trace(self):
        with pytest.raises(ValidationError):
            DensityOperator(np.eye(2))

    def test_density_negative(self):
        with pytest.raises(ValidationError):
            DensityOperator(np.diag([1.5, -0.5]))

    def test_tiny_negative_clipped(self):
        r = DensityOperator(np.diag([1 + 1e-12, -1e-12]))
        assert r.eigvalsh().min() >= 0
        assert abs(r.trace() - 1) < 1e-14

    def test_non_hermitian(self):
        with pytest.raises(ValidationError):
            HermitianObservable(np.array([[0, 1], [0, 0]]))

    def test_effect_range(self):
        with pytest.raises(ValidationError):
            EffectOperator(np.diag([1.2, 0.0]))

    def test_shape_mismatch(self):
        with pytest.raises(ShapeMismatch):
            Operator(np.eye(3), shape(("a", 2)))

    def test_immutable(self):
        r = DensityOperator(np.eye(2) / 2)
        with pytest.raises(ValueError):
            r.matrix[0, 0] = 1
        with pytest.raises(AttributeError):
            r.shape = None


class TestTensor:
    def test_identity(self):
        a = HermitianObservable(np.eye(2), shape(("a", 2)))
        b = HermitianObservable(np.eye(2), shape(("b", 2)))
        out = tensor_product(a, b)
        assert np.allclose(out.matrix, np.eye(4))
        assert out.shape.labels == ("a", "b")

    def test_basis(self):
        a = DensityOperator(basis_projector(0, 2), shape(("a", 2)))
        b = DensityOperator(basis_projector(1, 2), shape(("b", 2)))
        v = ket(0, 1)
        out = tensor_product(a, b)
        assert isinstance(out, DensityOperator)
        assert np.allclose(out.matrix, np.outer(v, v))

    def test_trace_multiplicative(self, rng):
        for _ in range(100):
            A = random_hermitian(shape(("a", 3)), rng)
            B = random_hermitian(shape(("b", 2)), rng)
            assert np.isclose(tensor_product(A, B).trace(), A.trace() * B.trace())

    def test_label_collision(self):
        a = HermitianObservable(np.eye(2), shape(("a", 2)))
        with pytest.raises(ShapeMismatch):
            tensor_product(a, a)


class TestPartialTrace:
    def test_product_marginal(self, rng):
        r = random_density(shape(("a", 2)), rng)
        s = random_density(shape(("b", 3)), rng)
        out = partial_trace(tensor_product(r, s), ["a"])
        assert np.allclose(out.matrix, r.matrix, atol=1e-12)
        assert isinstance(out, DensityOperator)

    def test_bell(self):
        v = (ket(0, 0) + ket(1, 1)) / math.sqrt(2)
        bell = DensityOperator(np.outer(v, v), shape(("a", 2), ("b", 2)))
        assert np.allclose(partial_trace(bell, ["b"]).matrix, np.eye(2) / 2)

    def test_duality(self, rng):
        # tr[tr_B(X) Y] = tr[X (Y ⊗ I)] checked with a direct reshape oracle
        for _ in range(100):
            da, db = int(rng.integers(2, 4)), int(rng.integers(2, 4))
            sh = shape(("a", da), ("b", db))
            X = random_hermitian(sh, rng)
            Y = random_hermitian(shape(("a", da)), rng)
            lhs = np.trace(partial_trace(X, ["a"]).matrix @ Y.matrix)
            rhs = np.trace(X.matrix @ np.kron(Y.matrix, np.eye(db)))
            assert np.isclose(lhs, rhs)

    def test_middle_factor(self, rng):
        sh = shape(("a", 2), ("b", 3), ("c", 2))
        X = random_density(sh, rng)
        t = X.matrix.reshape(2, 3, 2, 2, 3, 2)
        oracle = np.einsum("abcdbf->acdf", t).reshape(4, 4)
        assert np.allclose(partial_trace(X, ["a", "c"]).matrix, oracle)

    def test_unknown_label(self, rng):
        X = random_density(shape(("a", 2)), rng)
        with pytest.raises(UnknownLabel):
            partial_trace(X, ["z"])


class TestReorderEmbed:
    def test_reorder_swap(self, rng):
        A = random_hermitian(shape(("a", 2)), rng)
        B = random_hermitian(shape(("b", 3)), rng)
        ab = tensor_product(A, B)
        ba = tensor_product(B, A)
        assert np.allclose(reorder(ab, ["b", "a"]).matrix, ba.matrix)

    def test_embed(self, rng):
        A = random_hermitian(shape(("b", 3)), rng)
        big = shape(("a", 2), ("b", 3))
        assert np.allclose(embed(A, big).matrix, np.kron(np.eye(2), A.matrix))


class TestFunctions:
    def test_exp_zero(self):
        out = hermitian_fn(HermitianObservable(np.zeros((3, 3))), "exp")
        assert np.allclose(out.matrix, np.eye(3))

    def test_log_scalar(self):
        out = hermitian_fn(HermitianObservable(np.eye(4) / 4), "log")
        assert np.allclose(out.matrix, -math.log(4) * np.eye(4))

    def test_roundtrip(self, rng):
        for _ in range(100):
            r = random_density(shape(("a", int(rng.integers(2, 5)))), rng)
            back = hermitian_fn(hermitian_fn(r, "log"), "exp")
            assert np.max(np.abs(back.matrix - r.matrix)) < 1e-10

    def test_matches_scipy(self, rng):
        r = random_density(shape(("a", 3)), rng)
        assert np.allclose(hermitian_fn(r, "log").matrix, logm(r.matrix), atol=1e-10)
        H = random_hermitian(shape(("a", 3)), rng)
        assert np.allclose(hermitian_fn(H, "exp").matrix, expm(H.matrix), atol=1e-10)

    def test_singular_log(self):
        with pytest.raises(SingularLog):
            hermitian_fn(DensityOperator(basis_projector(0, 2)), "log")

    def test_singular_log_clipped(self):
        out = hermitian_fn(DensityOperator(basis_projector(0, 2)), "log", strict=False)
        assert np.isclose(out.matrix[1, 1], math.log(1e-12))


class TestNorms:
    def test_pauli_z(self):
        z = HermitianObservable(Z)
        assert operator_norm(z) == 1.0
        assert trace_norm(z) == 2.0

    def test_density_trace_norm(self, rng):
        for _ in range(20):
            assert math.isclose(trace_norm(random_density(shape(("a", 3)), rng)), 1.0, abs_tol=1e-12)

    def test_ordering(self, rng):
        for _ in range(50):
            d = int(rng.integers(2, 6))
            H = random_hermitian(shape(("a", d)), rng)
            op, tr = operator_norm(H), trace_norm(H)
            sv = np.linalg.svd(H.matrix, compute_uv=False)
            assert math.isclose(op, sv.max(), rel_tol=1e-12)
            assert op <= tr + 1e-12 <= d * op + 2e-12
