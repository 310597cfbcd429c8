"""Validated finite-dimensional operators with subsystem metadata.

Operators carry a :class:`SubsystemShape` naming each tensor factor, so that
partial traces and local embeddings can be addressed by label instead of by
axis position.  All arrays are stored densely and frozen after construction.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable, Sequence, Union

import numpy as np

from .errors import ShapeMismatch, SingularLog, UnknownLabel, ValidationError

TOL_HERM = 1e-10
TOL_TRACE = 1e-10
TOL_PSD = 1e-10
EIG_FLOOR = 1e-12


@dataclass(frozen=True)
class SubsystemShape:
    """Ordered tensor factorization of a Hilbert space.

    Parameters
    ----------
    labels : tuple of str
        Unique subsystem names.
    dims : tuple of int
        Local dimensions, each at least 1.
    """

    labels: tuple
    dims: tuple

    def __init__(self, labels: Iterable[str], dims: Iterable[int]):
        labels = tuple(str(l) for l in labels)
        dims = tuple(int(d) for d in dims)
        if len(labels) != len(dims):
            raise ValidationError("labels and dims differ in length")
        if len(set(labels)) != len(labels):
            raise ValidationError(f"duplicate subsystem labels in {labels}")
        if any(d < 1 for d in dims):
            raise ValidationError(f"local dimensions must be >= 1, got {dims}")
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "dims", dims)

    @classmethod
    def single(cls, label: str, dim: int) -> "SubsystemShape":
        return cls((label,), (dim,))

    @classmethod
    def trivial(cls) -> "SubsystemShape":
        """The one-dimensional space with no factors."""
        return cls((), ())

    @property
    def total(self) -> int:
        return int(np.prod(self.dims, dtype=np.int64)) if self.dims else 1

    def __len__(self):
        return len(self.labels)

    def index(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise UnknownLabel(f"label {label!r} not in shape {self.labels}") from None

    def dim_of(self, label: str) -> int:
        return self.dims[self.index(label)]

    def sub(self, labels: Iterable[str]) -> "SubsystemShape":
        """Sub-shape on ``labels`` in the order they appear in ``self``."""
        keep = set(labels)
        for l in keep:
            self.index(l)
        pairs = [(l, d) for l, d in zip(self.labels, self.dims) if l in keep]
        return SubsystemShape([p[0] for p in pairs], [p[1] for p in pairs])

    def without(self, labels: Iterable[str]) -> "SubsystemShape":
        drop = set(labels)
        for l in drop:
            self.index(l)
        return self.sub([l for l in self.labels if l not in drop])

    def concat(self, other: "SubsystemShape") -> "SubsystemShape":
        clash = set(self.labels) & set(other.labels)
        if clash:
            raise ShapeMismatch(f"label collision in tensor product: {sorted(clash)}")
        return SubsystemShape(self.labels + other.labels, self.dims + other.dims)

    def relabel(self, mapping: dict) -> "SubsystemShape":
        return SubsystemShape([mapping.get(l, l) for l in self.labels], self.dims)


def _as_shape(shape, n: int) -> SubsystemShape:
    if shape is None:
        return SubsystemShape.single("A", n)
    if not isinstance(shape, SubsystemShape):
        raise TypeError("shape must be a SubsystemShape")
    return shape


class Operator:
    """Square complex matrix tagged with a subsystem shape.

    Subclasses add validation.  The stored array is read-only.
    """

    __slots__ = ("matrix", "shape")

    def __init__(self, matrix, shape: SubsystemShape | None = None):
        m = np.array(matrix, dtype=complex)
        if m.ndim == 0:
            m = m.reshape(1, 1)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ShapeMismatch(f"operator must be a square matrix, got {m.shape}")
        shape = _as_shape(shape, m.shape[0])
        if shape.total != m.shape[0]:
            raise ShapeMismatch(
                f"matrix dimension {m.shape[0]} does not match shape total {shape.total}"
            )
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "shape", shape)
        self._validate()

    def __setattr__(self, key, value):
        raise AttributeError("operators are immutable")

    def _validate(self):
        pass

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def trace(self) -> complex:
        return complex(np.trace(self.matrix))

    def expect(self, other: "Operator") -> float:
        """Real part of tr[self @ other] for Hermitian operands."""
        return float(np.real(np.einsum("ij,ji->", self.matrix, other.matrix)))

    def eigvalsh(self) -> np.ndarray:
        return np.linalg.eigvalsh(_herm_part(self.matrix))

    def __repr__(self):
        return f"{type(self).__name__}(dim={self.dim}, labels={self.shape.labels})"


def _herm_part(m: np.ndarray) -> np.ndarray:
    return 0.5 * (m + m.conj().T)


def _herm_error(m: np.ndarray) -> float:
    return float(np.max(np.abs(m - m.conj().T))) if m.size else 0.0


class HermitianObservable(Operator):
    """Self-adjoint operator, e.g. a loss observable."""

    __slots__ = ()

    def __init__(self, matrix, shape=None):
        m = np.array(matrix, dtype=complex)
        if m.ndim == 2 and m.shape[0] == m.shape[1]:
            err = _herm_error(m)
            scale = max(1.0, float(np.max(np.abs(m)))) if m.size else 1.0
            if err > TOL_HERM * scale:
                raise ValidationError(f"matrix is not Hermitian (deviation {err:.3g})")
            m = _herm_part(m)
        super().__init__(m, shape)


class EffectOperator(HermitianObservable):
    """POVM element: Hermitian with spectrum in [0, 1]."""

    __slots__ = ()

    def _validate(self):
        ev = self.eigvalsh()
        if ev.size and (ev[0] < -TOL_PSD or ev[-1] > 1 + TOL_PSD):
            raise ValidationError(
                f"effect spectrum [{ev[0]:.3g}, {ev[-1]:.3g}] outside [0, 1]"
            )


class DensityOperator(HermitianObservable):
    """Positive semidefinite unit-trace operator.

    Eigenvalues in ``[-tol_psd, 0)`` are clipped to zero and the result is
    renormalized, so downstream logarithms never see negative noise.
    """

    __slots__ = ()

    def __init__(self, matrix, shape=None):
        m = np.array(matrix, dtype=complex)
        if m.ndim == 2 and m.shape[0] == m.shape[1] and m.size:
            err = _herm_error(m)
            if err > TOL_HERM:
                raise ValidationError(f"density matrix is not Hermitian (deviation {err:.3g})")
            m = _herm_part(m)
            tr = float(np.real(np.trace(m)))
            if abs(tr - 1) > TOL_TRACE:
                raise ValidationError(f"density matrix has trace {tr!r}")
            ev, vec = np.linalg.eigh(m)
            if ev[0] < -TOL_PSD:
                raise ValidationError(f"density matrix has negative eigenvalue {ev[0]:.3g}")
            if ev[0] < 0:
                ev = np.clip(ev, 0, None)
                ev = ev / ev.sum()
                m = (vec * ev) @ vec.conj().T
        super().__init__(m, shape)

    @classmethod
    def from_unnormalized(cls, matrix, shape=None) -> "DensityOperator":
        """Normalize a positive semidefinite matrix by its trace."""
        m = _herm_part(np.asarray(matrix, dtype=complex))
        tr = float(np.real(np.trace(m)))
        if tr <= 0:
            raise ValidationError("cannot normalize an operator with non-positive trace")
        m = m / tr
        ev, vec = np.linalg.eigh(m)
        if ev[0] < 0:
            ev = np.clip(ev, 0, None)
            m = (vec * (ev / ev.sum())) @ vec.conj().T
        return cls(m, shape)

    @classmethod
    def pure(cls, vec, shape=None) -> "DensityOperator":
        v = np.asarray(vec, dtype=complex).ravel()
        v = v / np.linalg.norm(v)
        return cls(np.outer(v, v.conj()), shape)

    @classmethod
    def maximally_mixed(cls, shape: SubsystemShape) -> "DensityOperator":
        return cls(np.eye(shape.total) / shape.total, shape)


OperatorLike = Union[Operator, np.ndarray]


def _result_type(a: Operator, b: Operator):
    for cls in (DensityOperator, EffectOperator, HermitianObservable):
        if isinstance(a, cls) and isinstance(b, cls):
            return cls
    return Operator


def tensor_product(*ops: Operator) -> Operator:
    """Kronecker product with concatenated shapes.

    The result keeps the most specific class shared by all factors, so a
    product of density operators is again a :class:`DensityOperator`.
    """
    if not ops:
        raise ValueError("tensor_product needs at least one operator")
    out = ops[0]
    for b in ops[1:]:
        cls = _result_type(out, b)
        shape = out.shape.concat(b.shape)
        out = cls(np.kron(out.matrix, b.matrix), shape)
    return out


def _permutation_to(shape: SubsystemShape, order: Sequence[str]) -> list:
    return [shape.index(l) for l in order]


def reorder(op: Operator, order: Sequence[str]) -> Operator:
    """Permute tensor factors of ``op`` into the label ``order``."""
    order = list(order)
    if sorted(order) != sorted(op.shape.labels):
        raise ShapeMismatch(f"order {order} is not a permutation of {op.shape.labels}")
    if tuple(order) == op.shape.labels:
        return op
    perm = _permutation_to(op.shape, order)
    n = len(perm)
    dims = op.shape.dims
    t = op.matrix.reshape(dims + dims)
    t = t.transpose(perm + [p + n for p in perm])
    new_shape = SubsystemShape(order, [dims[p] for p in perm])
    return type(op)(t.reshape(new_shape.total, new_shape.total), new_shape)


def partial_trace(op: Operator, keep: Iterable[str]) -> Operator:
    """Trace out every subsystem not in ``keep``.

    Kept subsystems retain their original relative order.  Density operators
    stay density operators; other kinds come back as Hermitian observables
    (or plain operators for non-Hermitian input).
    """
    keep = list(keep)
    for l in keep:
        op.shape.index(l)
    keep_set = set(keep)
    shape = op.shape
    n = len(shape)
    kept = [i for i, l in enumerate(shape.labels) if l in keep_set]
    traced = [i for i in range(n) if i not in kept]
    new_shape = shape.sub(keep)
    if not traced:
        return op
    t = op.matrix.reshape(shape.dims + shape.dims)
    # einsum with explicit index letters; row i <-> col i shared for traced axes
    letters = "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ"
    if 2 * n > len(letters):
        raise ShapeMismatch("too many subsystems for partial_trace")
    rows = list(letters[:n])
    cols = list(letters[n:2 * n])
    for i in traced:
        cols[i] = rows[i]
    out = "".join(rows[i] for i in kept) + "".join(cols[i] for i in kept)
    r = np.einsum("".join(rows) + "".join(cols) + "->" + out, t)
    r = r.reshape(new_shape.total, new_shape.total)
    if isinstance(op, DensityOperator):
        return DensityOperator(r, new_shape)
    if isinstance(op, HermitianObservable):
        return HermitianObservable(r, new_shape)
    return Operator(r, new_shape)


def embed(op: Operator, shape: SubsystemShape) -> HermitianObservable | Operator:
    """Extend ``op`` by identities to the larger ``shape``.

    ``op.shape.labels`` must be a subset of ``shape.labels`` with matching
    dimensions; the result is ordered as ``shape``.
    """
    for l, d in zip(op.shape.labels, op.shape.dims):
        if shape.dim_of(l) != d:
            raise ShapeMismatch(f"dimension mismatch on {l!r}")
    rest = shape.without(op.shape.labels)
    eye = Operator(np.eye(rest.total), rest)
    cls = HermitianObservable if isinstance(op, HermitianObservable) else Operator
    full = cls(np.kron(op.matrix, eye.matrix), op.shape.concat(rest))
    return reorder(full, shape.labels)


_NAMED = {
    "exp": np.exp,
    "sqrt": lambda x: np.sqrt(np.clip(x, 0, None)),
    "abs": np.abs,
}


def hermitian_fn(h: Operator, f: Union[str, Callable], strict: bool = True) -> HermitianObservable:
    """Apply a scalar function through the spectral decomposition.

    Parameters
    ----------
    h : Operator
        Hermitian input; symmetrized as (H + H†)/2 first.
    f : str or callable
        ``"log"``, ``"exp"``, ``"sqrt"``, ``"abs"`` or a vectorized callable.
    strict : bool
        For ``"log"``: raise :class:`SingularLog` when an eigenvalue is at or
        below ``EIG_FLOOR``.  When False those eigenvalues are clipped to
        ``EIG_FLOOR`` before taking the log.
    """
    ev, vec = np.linalg.eigh(_herm_part(h.matrix))
    if isinstance(f, str):
        if f == "log":
            if ev[0] <= EIG_FLOOR:
                if strict:
                    raise SingularLog(f"eigenvalue {ev[0]:.3g} <= floor {EIG_FLOOR}")
                ev = np.maximum(ev, EIG_FLOOR)
            fv = np.log(ev)
        elif f in _NAMED:
            fv = _NAMED[f](ev)
        else:
            raise ValueError(f"unknown function name {f!r}")
    else:
        fv = np.asarray(f(ev), dtype=float)
    return HermitianObservable((vec * fv) @ vec.conj().T, h.shape)


def operator_norm(h: Operator) -> float:
    """Largest singular value (largest |eigenvalue| for Hermitian input)."""
    if isinstance(h, HermitianObservable):
        ev = h.eigvalsh()
        return float(np.max(np.abs(ev))) if ev.size else 0.0
    return float(np.linalg.norm(h.matrix, 2))


def trace_norm(h: Operator) -> float:
    """Sum of singular values."""
    if isinstance(h, HermitianObservable):
        return float(np.sum(np.abs(h.eigvalsh())))
    return float(np.sum(np.linalg.svd(h.matrix, compute_uv=False)))


def spectral_spread(h: Operator) -> float:
    """λmax − λmin of a Hermitian operator."""
    ev = np.linalg.eigvalsh(_herm_part(h.matrix))
    return float(ev[-1] - ev[0])


# --- small constructors ------------------------------------------------------

PAULI = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


def basis_projector(k: int, d: int) -> np.ndarray:
    p = np.zeros((d, d), dtype=complex)
    p[k, k] = 1
    return p


def bloch_operator(r: Sequence[float]) -> np.ndarray:
    """(I + r·σ)/2 for a real 3-vector r."""
    x, y, z = (float(v) for v in r)
    return 0.5 * (PAULI["I"] + x * PAULI["X"] + y * PAULI["Y"] + z * PAULI["Z"])


def identity(shape: SubsystemShape) -> HermitianObservable:
    return HermitianObservable(np.eye(shape.total), shape)


# --- random instances --------------------------------------------------------

def random_unitary(d: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random unitary via QR of a Ginibre matrix."""
    z = (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    ph = np.diag(r)
    ph = ph / np.where(np.abs(ph) > 0, np.abs(ph), 1)
    return q * ph


def random_density(shape: SubsystemShape, rng: np.random.Generator, rank: int | None = None) -> DensityOperator:
    """Random state from the induced (Ginibre) measure."""
    d = shape.total
    k = d if rank is None else int(rank)
    g = rng.standard_normal((d, k)) + 1j * rng.standard_normal((d, k))
    m = g @ g.conj().T
    return DensityOperator.from_unnormalized(m, shape)


def random_hermitian(shape: SubsystemShape, rng: np.random.Generator, scale: float = 1.0) -> HermitianObservable:
    d = shape.total
    g = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    return HermitianObservable(scale * _herm_part(g) / np.sqrt(2 * d), shape)


def random_spectrum_observable(shape: SubsystemShape, rng: np.random.Generator,
                               low: float = 0.0, high: float = 1.0) -> HermitianObservable:
    """Random Hermitian with eigenvalues drawn uniformly in [low, high]."""
    d = shape.total
    u = random_unitary(d, rng)
    ev = rng.uniform(low, high, size=d)
    return HermitianObservable((u * ev) @ u.conj().T, shape)
