"""Randomized invariant suites shared by ``qgen selftest`` and the test-suite.

Each suite returns a :class:`CheckResult` recording how many instances were
drawn and the worst violation seen (positive means violated).
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .bounds import Evaluation, certified_alpha, certify, local_fits
from .entropy import log_trace_exp, petz_certificate, relative_entropy
from .qmat import (
    DensityOperator,
    HermitianObservable,
    SubsystemShape,
    random_density,
    random_hermitian,
    trace_norm,
)
from .w1 import lipschitz_constant, product_mgf_check, wasserstein1


@dataclass
class CheckResult:
    name: str
    count: int
    worst: float  # largest violation; ≤ tol means pass
    tol: float
    seconds: float = 0.0
    details: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.count > 0 and self.worst <= self.tol

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        return f"{tag} {self.name}: n={self.count} worst={self.worst:.3g} tol={self.tol:g} ({self.seconds:.1f}s)"


def _timed(fn):
    def wrapper(*a, **k):
        t = time.perf_counter()
        res = fn(*a, **k)
        res.seconds = time.perf_counter() - t
        return res
    wrapper.__name__ = fn.__name__
    wrapper.__doc__ = fn.__doc__
    return wrapper


def _dim(rng, lo=2, hi=6):
    return int(rng.integers(lo, hi + 1))


@_timed
def golden_thompson(n: int = 1000, seed: int = 0) -> CheckResult:
    """tr e^{A+B} ≤ tr e^A e^B on random Hermitian pairs (relative violation)."""
    rng = np.random.default_rng([seed, 1])
    worst = -math.inf
    for _ in range(n):
        sh = SubsystemShape.single("a", _dim(rng))
        scale = float(rng.uniform(0.1, 3.0))
        A = random_hermitian(sh, rng, scale).matrix
        B = random_hermitian(sh, rng, scale).matrix
        lhs = log_trace_exp(A + B)
        ea, va = np.linalg.eigh(A)
        eb, vb = np.linalg.eigh(B)
        rhs = np.real(np.trace((va * np.exp(ea)) @ va.conj().T @ (vb * np.exp(eb)) @ vb.conj().T))
        worst = max(worst, lhs - math.log(rhs))
    return CheckResult("golden-thompson (log scale)", n, worst, 1e-8)


@_timed
def petz_below_relative_entropy(n: int = 1000, seed: int = 0) -> CheckResult:
    """tr[σ₁H] − log tr exp(log σ₂ + H) ≤ D(σ₁‖σ₂) for random states and H."""
    rng = np.random.default_rng([seed, 2])
    worst = -math.inf
    for _ in range(n):
        sh = SubsystemShape.single("a", _dim(rng))
        s1 = random_density(sh, rng)
        s2 = random_density(sh, rng)
        H = random_hermitian(sh, rng, float(rng.uniform(0.1, 5.0)))
        worst = max(worst, petz_certificate(s1, s2, H) - relative_entropy(s1, s2))
    return CheckResult("petz certificate <= relative entropy", n, worst, 1e-8)


@_timed
def product_mgf(n: int = 1000, seed: int = 0) -> CheckResult:
    """Product-state MGF bound with the exact local Lipschitz constant.

    Half the instances use a random global H on two qubits (Lipschitz constant
    from the conic program), half a sum of random local terms on two or three
    sites.
    """
    rng = np.random.default_rng([seed, 3])
    worst = -math.inf
    for k in range(n):
        m = 2 if k % 2 == 0 else int(rng.integers(2, 4))
        dims = [2] * m
        rhos = [random_density(SubsystemShape.single(f"s{i}", 2), rng) for i in range(m)]
        shape = SubsystemShape([f"s{i}" for i in range(m)], dims)
        if k % 2 == 0:
            H = random_hermitian(shape, rng, float(rng.uniform(0.2, 2.0)))
            lip = None
        else:
            from .qmat import embed
            terms = [random_hermitian(SubsystemShape.single(f"s{i}", 2), rng) for i in range(m)]
            H = HermitianObservable(sum(embed(t, shape).matrix for t in terms), shape)
            lip = max(float(np.ptp(np.linalg.eigvalsh(t.matrix))) for t in terms)
        lam = float(rng.uniform(-3, 3))
        lhs, rhs, _ = product_mgf_check(rhos, H, lam, lip=lip)
        worst = max(worst, math.log(lhs) - math.log(rhs))
    return CheckResult("product-state MGF bound (log scale)", n, worst, 1e-8)


@_timed
def random_certificates(n: int = 500, seed: int = 0, bounds=("cor22", "thm21")) -> CheckResult:
    """Every certificate on seeded random instances holds; worst is −min slack."""
    from .scenarios.random_instances import random_instance
    worst, fails, ident = -math.inf, [], 0.0
    for k in range(n):
        inst = random_instance(np.random.default_rng([seed, 4, k]))
        ev = Evaluation(*inst.triple())
        for b in bounds:
            c = certify(*inst.triple(), b, evaluation=ev)
            worst = max(worst, -c.slack)
            if not c.holds:
                fails.append((k, b))
        ident = max(ident, abs(ev.expected_relative_entropy - ev.qmi_term - ev.holevo_term))
    return CheckResult("random certificates (negative slack)", n, worst, 1e-9,
                       details={"failures": fails, "identityError": ident})


@_timed
def relative_entropy_identity(n: int = 200, seed: int = 0) -> CheckResult:
    """E[D(σ‖τ)] = E[QMI] + E_S[Holevo] on random instances."""
    from .scenarios.random_instances import random_instance
    worst = 0.0
    for k in range(n):
        inst = random_instance(np.random.default_rng([seed, 5, k]))
        ev = Evaluation(*inst.triple())
        worst = max(worst, abs(ev.expected_relative_entropy - ev.qmi_term - ev.holevo_term))
    return CheckResult("relative-entropy identity", n, worst, 1e-8)


@_timed
def local_composition(n: int = 100, seed: int = 0) -> CheckResult:
    """Global quantum fit vs √(Σαᵢ²)/m on symmetric factorized instances.

    Reports the largest relative deviation; the local composition is also
    checked to dominate the global fit on non-symmetric instances.
    """
    from .scenarios.random_instances import random_factorized
    worst, dom = 0.0, -math.inf
    for k in range(n):
        sym = k % 2 == 0
        inst = random_factorized(np.random.default_rng([seed, 6, k]), symmetric=sym)
        ev = Evaluation(*inst.triple())
        alphas, _ = local_fits(ev)
        g = certified_alpha(ev)
        c = math.sqrt(sum(a * a for a in alphas)) / len(alphas)
        if sym and c > 1e-12:
            worst = max(worst, abs(g - c) / c)
        dom = max(dom, g - c * (1 + 0.02))
    return CheckResult("local composition (relative error)", n, worst, 0.02,
                       details={"globalOverComposed": dom})


@_timed
def w1_single_site(n: int = 200, seed: int = 0) -> CheckResult:
    """W1 on one site equals half the trace distance."""
    rng = np.random.default_rng([seed, 7])
    worst = 0.0
    for _ in range(n):
        sh = SubsystemShape.single("a", _dim(rng, 2, 4))
        r, s = random_density(sh, rng), random_density(sh, rng)
        val = wasserstein1(r, s).value
        worst = max(worst, abs(val - 0.5 * trace_norm(HermitianObservable(r.matrix - s.matrix, sh))))
    return CheckResult("W1 single site = half trace norm", n, worst, 1e-6)


@_timed
def w1_gap(n: int = 20, seed: int = 0) -> CheckResult:
    """Primal upper minus certified dual lower on two-qubit pairs."""
    rng = np.random.default_rng([seed, 8])
    sh = SubsystemShape(["a", "b"], [2, 2])
    worst = 0.0
    for _ in range(n):
        r, s = random_density(sh, rng), random_density(sh, rng)
        res = wasserstein1(r, s)
        worst = max(worst, res.upper - res.lower)
    return CheckResult("W1 primal/dual gap (two qubits)", n, worst, 1e-5)


@_timed
def lipschitz_z1(seed: int = 0) -> CheckResult:
    """‖Z ⊗ I‖_Lip = 2 on two and three qubits."""
    z = np.diag([1.0, -1.0])
    worst = 0.0
    for m in (1, 2, 3):
        mat = np.kron(z, np.eye(2 ** (m - 1)))
        H = HermitianObservable(mat, SubsystemShape([f"q{i}" for i in range(m)], [2] * m))
        worst = max(worst, abs(lipschitz_constant(H).value - 2.0))
    return CheckResult("Lipschitz constant of Z_1", 3, worst, 1e-6)


QUICK = {
    "golden_thompson": dict(n=200), "petz": dict(n=200), "product_mgf": dict(n=100),
    "certificates": dict(n=40), "identity": dict(n=20), "composition": dict(n=10),
    "w1_single": dict(n=50), "w1_gap": dict(n=3), "lipschitz": dict(),
}
_SUITES = {
    "golden_thompson": golden_thompson, "petz": petz_below_relative_entropy, "product_mgf": product_mgf,
    "certificates": random_certificates, "identity": relative_entropy_identity,
    "composition": local_composition, "w1_single": w1_single_site, "w1_gap": w1_gap,
    "lipschitz": lipschitz_z1,
}


def run_all(seed: int = 0, quick: bool = True, only=None) -> list:
    """Run every suite (reduced sizes when ``quick``)."""
    out = []
    for name, fn in _SUITES.items():
        if only and name not in only:
            continue
        kw = dict(QUICK[name]) if quick else {}
        out.append(fn(seed=seed, **kw))
    return out
