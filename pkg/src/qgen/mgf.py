"""Log-moment-generating functions, sub-gaussian fits and Legendre duals.

The quantum log-MGF of an observable L with respect to a state τ is

    ψ(λ) = log tr[τ exp(λ(L − tr[Lτ]·I))],

and its Golden–Thompson-weakened variant replaces τ·exp(·) by
exp(log τ + ·).  Profiles are sampled on a symmetric log-spaced grid and a
quadratic α²λ²/2 is fitted from above.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import minimize_scalar
from scipy.special import logsumexp

from .errors import RangeExhausted, ShapeMismatch, SingularLog
from .qmat import EIG_FLOOR, Operator

LAMBDA_MAX = 1e3
T_MAX = 1e4
BISECT_TOL = 1e-10
CERT_TOL = 1e-9


class NonConvexProfile(UserWarning):
    """Sampled log-MGF profile fails the discrete convexity check."""


def default_grid(n_side: int = 61, lo: float = 1e-3, hi: float = 1e2) -> np.ndarray:
    """Symmetric log-spaced grid with 0 included."""
    mags = np.logspace(np.log10(lo), np.log10(hi), n_side)
    return np.concatenate([-mags[::-1], [0.0], mags])


# --- log-MGF evaluators ------------------------------------------------------

def _check(tau: Operator, L: Operator):
    if tau.shape.dims != L.shape.dims:
        raise ShapeMismatch("state and observable live on different spaces")


def _spectral_weights(tau: Operator, L: Operator):
    """Eigenvalues of L (centred at tr[Lτ]) and the τ-weights of its eigenvectors."""
    ev, vec = np.linalg.eigh(0.5 * (L.matrix + L.matrix.conj().T))
    w = np.real(np.einsum("ia,ij,ja->a", vec.conj(), tau.matrix, vec))
    w = np.clip(w, 0, None)
    mean = float(np.dot(w, ev))
    return ev - mean, w


def _lse_rows(x: np.ndarray) -> np.ndarray:
    # scipy's logsumexp carries per-call overhead that dominates on the tiny
    # arrays seen inside the scalar fit refinement
    top = np.max(x, axis=1, keepdims=True)
    return top[:, 0] + np.log(np.sum(np.exp(x - top), axis=1))


def _lse_profile(vals: np.ndarray, weights: np.ndarray, lam) -> np.ndarray:
    lam = np.atleast_1d(np.asarray(lam, dtype=float))
    keep = weights > 0
    if not np.any(keep):
        return np.zeros_like(lam)
    v, lw = vals[keep], np.log(weights[keep])
    # normalise so ψ(0) = 0 exactly even if Σw differs from 1 by rounding
    lw = lw - _lse_rows(lw[None, :])[0]
    return _lse_rows(lam[:, None] * v[None, :] + lw[None, :])


def quantum_log_mgf(tau: Operator, L: Operator, lam):
    """Centred quantum log-MGF log tr[τ e^{λ(L − tr[Lτ])}].

    ``lam`` may be a scalar or an array; the return type follows it.
    """
    _check(tau, L)
    v, w = _spectral_weights(tau, L)
    out = _lse_profile(v, w, lam)
    return float(out[0]) if np.ndim(lam) == 0 else out


def quantum_log_mgf_gt(tau: Operator, L: Operator, lam):
    """log tr exp(log τ + λ(L − tr[Lτ]·I)); τ must be full rank."""
    _check(tau, L)
    ev, vec = np.linalg.eigh(0.5 * (tau.matrix + tau.matrix.conj().T))
    if ev[0] <= EIG_FLOOR:
        raise SingularLog(f"state has eigenvalue {ev[0]:.3g} <= floor {EIG_FLOOR}")
    logtau = (vec * np.log(ev)) @ vec.conj().T
    Lm = 0.5 * (L.matrix + L.matrix.conj().T)
    c = float(np.real(np.einsum("ij,ji->", tau.matrix, Lm)))
    Lc = Lm - c * np.eye(Lm.shape[0])
    lams = np.atleast_1d(np.asarray(lam, dtype=float))
    out = np.empty(lams.shape)
    for k, l in enumerate(lams):
        out[k] = logsumexp(np.linalg.eigvalsh(logtau + l * Lc))
    return float(out[0]) if np.ndim(lam) == 0 else out


def classical_log_mgf(samples: Sequence, lam):
    """Centred log E[e^{λ(X − E X)}] for a finite law [(p, x), ...]."""
    p = np.array([s[0] for s in samples], dtype=float)
    x = np.array([s[1] for s in samples], dtype=float)
    mean = float(np.dot(p, x) / p.sum())
    out = _lse_profile(x - mean, p / p.sum(), lam)
    return float(out[0]) if np.ndim(lam) == 0 else out


# --- profiles and fits --------------------------------------------------------

@dataclass
class LogMgfProfile:
    """Sampled log-MGF together with the function that produced it.

    ``side_bounds`` holds the convex envelopes on λ ≥ 0 and λ < 0 as callables
    (by default the profile function itself, which is convex).
    """

    func: Callable
    lambda_grid: np.ndarray = field(default_factory=default_grid)
    mode: str = "quantum"
    values: np.ndarray = None

    def __post_init__(self):
        self.lambda_grid = np.sort(np.asarray(self.lambda_grid, dtype=float))
        if self.values is None:
            self.values = np.asarray(self.func(self.lambda_grid), dtype=float)
        if not np.all(np.isfinite(self.values)):
            raise ValueError("log-MGF profile has non-finite values")
        zero = np.isclose(self.lambda_grid, 0.0, atol=0)
        if np.any(zero) and np.max(np.abs(self.values[zero])) > 1e-12:
            raise ValueError("log-MGF profile is not 0 at λ = 0")

    @property
    def side_bounds(self):
        return self.func, self.func

    def is_convex(self, tol: float = 1e-8) -> bool:
        lam, v = self.lambda_grid, self.values
        slopes = np.diff(v) / np.diff(lam)
        return bool(np.all(np.diff(slopes) >= -tol * np.maximum(1.0, np.abs(slopes[1:]))))


def quantum_profile(tau: Operator, L: Operator, grid=None, gt: bool = False) -> LogMgfProfile:
    """Profile of the standard (or Golden–Thompson) quantum log-MGF."""
    _check(tau, L)
    if gt:
        f = lambda lam: quantum_log_mgf_gt(tau, L, np.asarray(lam, dtype=float))
        mode = "quantum_gt"
    else:
        v, w = _spectral_weights(tau, L)
        f = lambda lam: _lse_profile(v, w, lam)
        mode = "quantum"
    return LogMgfProfile(f, default_grid() if grid is None else grid, mode)


def classical_profile(samples: Sequence, grid=None) -> LogMgfProfile:
    p = np.array([s[0] for s in samples], dtype=float)
    x = np.array([s[1] for s in samples], dtype=float)
    mean = float(np.dot(p, x) / p.sum())
    f = lambda lam: _lse_profile(x - mean, p / p.sum(), lam)
    return LogMgfProfile(f, default_grid() if grid is None else grid, "classical")


@dataclass(frozen=True)
class SubGaussianFit:
    alpha: float
    attained_at: float
    mode: str


def _ratio(func, lam: np.ndarray) -> np.ndarray:
    lam = np.asarray(lam, dtype=float)
    return 2.0 * np.asarray(func(lam), dtype=float) / lam ** 2


def fit_subgaussian(profile: LogMgfProfile) -> SubGaussianFit:
    """Smallest α with ψ(λ) ≤ α²λ²/2 on the grid, refined and certified.

    The grid argmax of 2ψ/λ² is refined by a bounded golden-section search
    between its neighbours; α is then raised if a 10× finer validation grid
    finds any point above the fitted quadratic.
    """
    if not profile.is_convex():
        warnings.warn("log-MGF profile failed the convexity check", NonConvexProfile, stacklevel=2)
    lam = profile.lambda_grid
    nz = lam != 0
    lam_nz = lam[nz]
    ratios = 2.0 * profile.values[nz] / lam_nz ** 2
    k = int(np.argmax(ratios))
    best, at = float(ratios[k]), float(lam_nz[k])
    # golden-section refinement in the bracket around the grid argmax
    lo = lam_nz[k - 1] if k > 0 else lam_nz[k]
    hi = lam_nz[k + 1] if k + 1 < lam_nz.size else lam_nz[k]
    if np.sign(lo) != np.sign(lam_nz[k]):
        lo = lam_nz[k] * 0.5
    if np.sign(hi) != np.sign(lam_nz[k]):
        hi = lam_nz[k] * 0.5
    a, b = sorted((float(lo), float(hi)))
    if b > a:
        res = minimize_scalar(lambda x: -float(_ratio(profile.func, np.array([x]))[0]),
                              bounds=(a, b), method="bounded",
                              options={"xatol": 1e-12 * max(1.0, abs(at))})
        if -res.fun > best:
            best, at = float(-res.fun), float(res.x)
    # the supremum may be the λ → 0 limit (the variance); probe just inside the grid
    tiny = 0.1 * float(np.min(np.abs(lam_nz)))
    for x in (-tiny, tiny):
        r = float(_ratio(profile.func, np.array([x]))[0])
        if r > best:
            best, at = r, x
    alpha2 = max(best, 0.0)
    # certification on a finer grid
    fine = default_grid(n_side=10 * (lam_nz.size // 2), lo=float(np.min(np.abs(lam_nz))),
                        hi=float(np.max(np.abs(lam_nz))))
    fine = fine[fine != 0]
    vals = np.asarray(profile.func(fine), dtype=float)
    excess = vals - alpha2 * fine ** 2 / 2
    if np.any(excess > CERT_TOL):
        j = int(np.argmax(2 * vals / fine ** 2))
        alpha2 = max(alpha2, float(2 * vals[j] / fine[j] ** 2))
        at = float(fine[j])
    return SubGaussianFit(math.sqrt(alpha2), at, profile.mode)


def quadratic(alpha: float) -> Callable:
    """ψ(λ) = α²λ²/2."""
    a2 = float(alpha) ** 2
    return lambda lam: 0.5 * a2 * np.asarray(lam, dtype=float) ** 2


def compose_local_subgaussian(alphas: Sequence[float], m: int) -> float:
    """√(Σ α_i²)/m, the parameter of an average of m independent local terms."""
    a = np.asarray(alphas, dtype=float)
    if np.any(a < 0):
        raise ValueError("sub-gaussian parameters must be nonnegative")
    return float(np.sqrt(np.sum(a ** 2)) / m)


# --- Legendre duals -----------------------------------------------------------

def _is_zero(psi: Callable, lam_max: float) -> bool:
    probe = np.concatenate([np.linspace(-lam_max, lam_max, 41), [-1e-3, 1e-3]])
    return bool(np.all(np.abs(np.asarray(psi(probe), dtype=float)) <= 1e-15))


def _scalar(psi, x: float) -> float:
    return float(np.asarray(psi(np.array([x], dtype=float)), dtype=float).ravel()[0])


def _dual_search(psi: Callable, t: float, lam_max: float):
    """(value, hit_boundary) for sup over λ of sign(t) on [0, Λmax]."""
    sgn = 1.0 if t > 0 else -1.0
    xs = np.concatenate([[0.0], np.logspace(-6, np.log10(lam_max), 200)])
    vals = sgn * xs * t - np.asarray(psi(sgn * xs), dtype=float)
    k = int(np.argmax(vals))
    if k == xs.size - 1:
        return float(vals[k]), True
    lo = xs[max(k - 1, 0)]
    hi = xs[k + 1]
    f = lambda x: -(sgn * x * t - _scalar(psi, sgn * x))
    res = minimize_scalar(f, bounds=(lo, hi), method="bounded",
                          options={"xatol": 1e-13 * max(1.0, hi)})
    return max(float(-res.fun), float(vals[k]), 0.0), False


def legendre_dual(psi: Callable, lam_max: float = LAMBDA_MAX) -> Callable:
    """ψ*(t) = sup_λ {λt − ψ(λ)} over λ ∈ [−Λmax, Λmax].

    Returns a function of ``t``.  The supremum is sought on the half-line
    with the sign of ``t`` (for convex ψ with ψ(0) = 0 the other half only
    contributes values ≤ 0).  If the maximiser sits on ±Λmax the result is
    not trustworthy and :class:`RangeExhausted` is raised, except when ψ
    vanishes identically, whose dual is +∞ away from t = 0.
    """
    zero = _is_zero(psi, lam_max)

    def dual(t: float) -> float:
        t = float(t)
        if t == 0:
            return 0.0  # ψ ≥ 0 with ψ(0) = 0
        if zero:
            return math.inf
        val, edge = _dual_search(psi, t, lam_max)
        if edge:
            raise RangeExhausted(f"Legendre dual at t={t:.6g} attained at |λ| = Λmax = {lam_max:g}")
        return val

    return dual


def legendre_dual_inverse(psi: Callable, s: float, lam_max: float = LAMBDA_MAX,
                          t_max: float = T_MAX, tol: float = BISECT_TOL) -> float:
    """Generalized inverse inf{t ≥ 0 : ψ*(t) > s} by bisection on [0, Tmax].

    A dual value computed with the maximiser on the boundary is still a
    valid lower bound, so it settles the test ψ*(t) > s when it already
    exceeds s; only an undecided boundary case raises :class:`RangeExhausted`.
    """
    if s < 0:
        raise ValueError("information argument must be nonnegative")
    if math.isinf(s):
        return math.inf
    if s == 0 or _is_zero(psi, lam_max):
        # ψ'(0) = 0 makes ψ*(t) > 0 for every t > 0
        return 0.0

    def above(t: float) -> bool:
        if t <= 0:
            return False
        val, edge = _dual_search(psi, t, lam_max)
        if val > s:
            return True
        if edge:
            raise RangeExhausted(f"cannot decide ψ*({t:.6g}) > {s:.6g} within Λmax = {lam_max:g}")
        return False

    hi = 1.0
    while not above(hi):
        hi *= 4.0
        if hi > t_max:
            raise RangeExhausted(f"ψ*(t) <= s = {s:.6g} up to Tmax = {t_max:g}")
    lo = 0.0
    probe = hi / 4.0
    while probe > tol and above(probe):
        hi = probe
        probe /= 4.0
    lo = probe if probe > tol else 0.0
    while hi - lo > tol * max(1.0, hi):
        mid = 0.5 * (lo + hi)
        if above(mid):
            hi = mid
        else:
            lo = mid
    return hi


def mirror(psi: Callable) -> Callable:
    """λ ↦ ψ(−λ)."""
    return lambda lam: psi(-np.asarray(lam, dtype=float))
