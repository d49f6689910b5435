"""Intertwining operator, normalizer solve, and the invariant reproducing kernel.

Only the block products ``P_j = N_j N_j^*`` are ever stored; where a factor is
needed (``gamma_apply`` with a normalizer) the Hermitian square root is used.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
import scipy.linalg

from .bundle import BlockDiagonal, BundleSpec, multiplier
from .moebius import MoebiusElement, _check_disc, mobius_apply, pochhammer, point_section
from .series import GradedSeries, compose, derivative_power_series, series_differentiate, series_transform

PD_RTOL = 1e-10
HERMITIAN_TOL = 1e-12


class SingularKernelError(ArithmeticError):
    pass


def gamma_coefficient(eta: float, ell: int, j: int) -> float:
    """``1 / ((ell-j)! (2 eta + 2 j)_{ell-j})``."""
    denom = math.factorial(ell - j) * pochhammer(2.0 * eta + 2.0 * j, ell - j)
    if denom == 0.0:
        raise ValueError(f"eta = {eta} makes (2 eta + {2 * j})_{ell - j} vanish")
    return 1.0 / denom


def is_positive_definite(p: np.ndarray, rtol: float = PD_RTOL) -> bool:
    w = np.linalg.eigvalsh(0.5 * (p + p.conj().T))
    return bool(w[0] > rtol * max(1.0, w[-1]))


@dataclass(frozen=True)
class NormalizerSolution:
    products: tuple
    positive: tuple
    min_eigenvalues: tuple

    @classmethod
    def from_products(cls, products) -> "NormalizerSolution":
        prods, pos, mins = [], [], []
        for p in products:
            p = np.array(p, dtype=complex)
            if np.max(np.abs(p - p.conj().T), initial=0.0) > HERMITIAN_TOL * max(1.0, np.max(np.abs(p))):
                raise ValueError("normalizer products must be Hermitian")
            p = 0.5 * (p + p.conj().T)
            p.setflags(write=False)
            prods.append(p)
            w = np.linalg.eigvalsh(p)
            mins.append(float(w[0]))
            pos.append(bool(w[0] > PD_RTOL * max(1.0, w[-1])))
        if not np.array_equal(prods[0], np.eye(prods[0].shape[0])):
            raise ValueError("P_0 must be the identity")
        return cls(tuple(prods), tuple(pos), tuple(mins))

    @property
    def all_positive(self) -> bool:
        return all(self.positive)

    def factor(self) -> BlockDiagonal:
        """Hermitian square roots ``N_j`` of the products (requires positivity)."""
        if not self.all_positive:
            raise ValueError("products are not positive definite; no invertible factor exists")
        return BlockDiagonal(tuple(scipy.linalg.sqrtm(p) for p in self.products))

    def max_difference(self, other: "NormalizerSolution") -> float:
        return max(float(np.max(np.abs(a - b))) for a, b in zip(self.products, other.products))


@dataclass(frozen=True)
class KernelMatrix:
    value: np.ndarray
    z: complex
    w: complex
    spec: BundleSpec
    normalizer: NormalizerSolution


def gamma_apply(spec: BundleSpec, normalizer_factor: Optional[BlockDiagonal], f: GradedSeries) -> GradedSeries:
    """Apply the holomorphic differential operator ``Gamma o N`` to a graded series.

    Component ``l`` of the result is
    ``sum_{j<=l} gamma(l, j) Y_l ... Y_{j+1} (N f)_j^{(l-j)}``.
    """
    if f.multiplicities != spec.multiplicities:
        raise ValueError("series grading does not match the spec multiplicities")
    if normalizer_factor is not None:
        nmat = normalizer_factor.to_matrix()
        f = GradedSeries(f.coeffs @ nmat.T, f.multiplicities, f.exact, f.polynomial)
    n = f.truncation
    out = np.zeros_like(f.coeffs)
    for j in range(spec.m + 1):
        fj = f.component(j)
        if not np.any(fj):
            continue
        for ell in range(j, spec.m + 1):
            if ell - j > n:
                break
            coef = gamma_coefficient(spec.eta, ell, j)
            deriv = series_differentiate(GradedSeries(fj, (fj.shape[1],), f.exact, f.polynomial), ell - j)
            block = deriv.coeffs @ (coef * spec.chain(ell, j)).T
            out[: block.shape[0], spec.grade_slice(ell)] += block
    exact = f.exact if f.polynomial else f.exact - spec.m
    return GradedSeries(out, f.multiplicities, exact, f.polynomial)


def solve_normalizer(spec: BundleSpec) -> NormalizerSolution:
    """Forward recursion making ``K(0,0) = I``.

    ``P_l = I - sum_{j<l} gamma(l, j) Y_l..Y_{j+1} P_j Y_{j+1}^*..Y_l^*`` with ``P_0 = I``.
    """
    if spec.eta <= 0:
        raise ValueError("eta must be positive")
    prods = [np.eye(spec.multiplicities[0], dtype=complex)]
    for ell in range(1, spec.m + 1):
        acc = np.eye(spec.multiplicities[ell], dtype=complex)
        for j in range(ell):
            ch = spec.chain(ell, j)
            acc -= gamma_coefficient(spec.eta, ell, j) * ch @ prods[j] @ ch.conj().T
        prods.append(acc)
    return NormalizerSolution.from_products(prods)


def closed_form_normalizer(spec: BundleSpec) -> NormalizerSolution:
    """``P_j = sum_k (-1)^(j+k) / ((j-k)! (2 eta + j + k - 1)_{j-k}) Y_j..Y_{k+1} Y_{k+1}^*..Y_j^*``."""
    if spec.eta <= 0:
        raise ValueError("eta must be positive")
    prods = []
    for j in range(spec.m + 1):
        acc = np.zeros((spec.multiplicities[j],) * 2, dtype=complex)
        for k in range(j + 1):
            coef = (-1) ** (j + k) / (math.factorial(j - k) * pochhammer(2 * spec.eta + j + k - 1, j - k))
            ch = spec.chain(j, k)
            acc += coef * ch @ ch.conj().T
        prods.append(acc)
    prods[0] = np.eye(spec.multiplicities[0], dtype=complex)
    return NormalizerSolution.from_products(prods)


def kernel_exists(spec: BundleSpec):
    """``(True, P)`` iff ``eta > 0`` and every recursion product is positive definite.

    For ``eta <= 0`` the witness is ``None``.
    """
    if spec.eta <= 0:
        return False, None
    sol = solve_normalizer(spec)
    return sol.all_positive, sol


def eta_threshold(spec: BundleSpec, tol: float = 1e-6) -> float:
    """Sharp threshold ``eta_Y`` for the blocks of ``spec`` (its own ``eta`` is ignored).

    Bisection on ``[1e-6, eta_hi]`` with ``eta_hi`` doubling from 1.  Returns 0.0
    when positivity already holds at the lower end.
    """
    lo = 1e-6

    def ok(eta):
        return kernel_exists(spec.with_eta(eta))[0]

    if ok(lo):
        return 0.0
    hi = 1.0
    while not ok(hi):
        hi *= 2.0
        if hi > 2.0 ** 20:
            raise RuntimeError("no positivity up to eta = 2^20")
    while hi - lo > 0.25 * tol:
        mid = 0.5 * (lo + hi)
        if ok(mid):
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def kernel_at_origin(spec: BundleSpec, normalizer: NormalizerSolution) -> KernelMatrix:
    if spec.eta <= 0:
        raise ValueError("eta must be positive")
    out = np.zeros((spec.dim, spec.dim), dtype=complex)
    for ell in range(spec.m + 1):
        block = np.zeros((spec.multiplicities[ell],) * 2, dtype=complex)
        for j in range(ell + 1):
            ch = spec.chain(ell, j)
            block += gamma_coefficient(spec.eta, ell, j) * ch @ normalizer.products[j] @ ch.conj().T
        out[spec.grade_slice(ell), spec.grade_slice(ell)] = block
    return KernelMatrix(out, 0j, 0j, spec, normalizer)


def mixed_derivative(a: int, b: int, alpha: float, z: complex, wbar: complex) -> complex:
    """``d^a/dz^a d^b/dwbar^b (1 - z wbar)^(-alpha)`` in closed form."""
    u = 1.0 - z * wbar
    total = 0j
    for i in range(min(a, b) + 1):
        term = math.comb(a, i) * math.perm(b, i) * pochhammer(alpha + b, a - i)
        total += term * z ** (b - i) * wbar ** (a - i) * u ** (-(alpha + a + b - i))
    return pochhammer(alpha, b) * total


def kernel_value(spec: BundleSpec, normalizer: NormalizerSolution, z: complex, w: complex) -> np.ndarray:
    z, w = _check_disc(z), _check_disc(w)
    if spec.eta <= 0:
        raise ValueError("eta must be positive")
    wbar = w.conjugate()
    out = np.zeros((spec.dim, spec.dim), dtype=complex)
    gam = {(l, j): gamma_coefficient(spec.eta, l, j) for l in range(spec.m + 1) for j in range(l + 1)}
    for ell in range(spec.m + 1):
        for p in range(spec.m + 1):
            block = np.zeros((spec.multiplicities[ell], spec.multiplicities[p]), dtype=complex)
            for j in range(min(ell, p) + 1):
                scal = gam[ell, j] * gam[p, j] * mixed_derivative(ell - j, p - j, 2.0 * (spec.eta + j), z, wbar)
                block += scal * spec.chain(ell, j) @ normalizer.products[j] @ spec.chain(p, j).conj().T
            out[spec.grade_slice(ell), spec.grade_slice(p)] = block
    return out


def kernel_at(spec: BundleSpec, normalizer: NormalizerSolution, z: complex, w: complex) -> KernelMatrix:
    """``K_N(z, w)``: ``Gamma o N`` applied to the diagonal model kernel in ``z`` and in ``w``."""
    return KernelMatrix(kernel_value(spec, normalizer, z, w), complex(z), complex(w), spec, normalizer)


def transport_kernel(spec: BundleSpec, normalizer: NormalizerSolution, z: complex) -> np.ndarray:
    """``K(z,z)`` from ``K(0,0)`` by transporting with the boost ``p_z``.

    Uses ``J = J_{p_z}(0)^{-1} = J_{p_z^{-1}}(z)``, which is what the invariance
    identity gives at the origin.
    """
    jz = multiplier(spec, point_section(z).inverse(), z)
    k0 = kernel_at_origin(spec, normalizer).value
    return jz @ k0 @ jz.conj().T


def transport_residual(spec: BundleSpec, normalizer: NormalizerSolution, z: complex) -> float:
    return float(np.max(np.abs(kernel_value(spec, normalizer, z, z) - transport_kernel(spec, normalizer, z))))


def kernel_invariance_residual(spec, normalizer, g: MoebiusElement, z: complex, w: complex) -> float:
    """Max-norm of ``J_g(z) K(gz, gw) J_g(w)^* - K(z, w)``."""
    lhs = multiplier(spec, g, z) @ kernel_value(spec, normalizer, mobius_apply(g, z), mobius_apply(g, w))
    lhs = lhs @ multiplier(spec, g, w).conj().T
    return float(np.max(np.abs(lhs - kernel_value(spec, normalizer, z, w))))


def hermitian_structure_at(spec: BundleSpec, normalizer: NormalizerSolution, z: complex) -> np.ndarray:
    """``H(z) = K(z, z)^{-1}``."""
    k = kernel_value(spec, normalizer, z, z)
    if np.linalg.cond(k) > 1e12:
        raise SingularKernelError(f"K(z,z) is numerically singular at z = {z}")
    return np.linalg.inv(k)


def gram_matrix(spec: BundleSpec, normalizer: NormalizerSolution, points) -> np.ndarray:
    """Block matrix ``[K(z_j, z_k)]``; positive semidefinite when the kernel is."""
    return np.block([[kernel_value(spec, normalizer, zj, zk) for zk in points] for zj in points])


def line_bundle_twist(spec: BundleSpec, normalizer: NormalizerSolution, eps: float) -> Callable:
    """Evaluator for ``(1 - z wbar)^(-2 eps) K(z, w)``, a kernel for ``eta + eps``."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    if not normalizer.all_positive:
        raise ValueError("twisting needs a kernel at eta (positive normalizer)")

    def evaluate(z: complex, w: complex) -> np.ndarray:
        z, w = _check_disc(z), _check_disc(w)
        return (1.0 - z * w.conjugate()) ** (-2.0 * eps) * kernel_value(spec, normalizer, z, w)

    return evaluate


def multiplier_series(spec: BundleSpec, g: MoebiusElement, n: int) -> np.ndarray:
    """Taylor coefficients (shape ``(n+1, d, d)``) of ``z -> J_g(z)``."""
    out = np.zeros((n + 1, spec.dim, spec.dim), dtype=complex)
    c = g.c
    for p in range(spec.m + 1):
        for ell in range(p + 1):
            coef = (-c) ** (p - ell) / math.factorial(p - ell)
            ser = coef * derivative_power_series(g, spec.eta + 0.5 * (p + ell), n)
            out[:, spec.grade_slice(p), spec.grade_slice(ell)] = ser[:, None, None] * spec.chain(p, ell)
    return out


def intertwining_sides(spec: BundleSpec, f: GradedSeries, j: int, g: MoebiusElement, n: int):
    """Both sides of ``Gamma((g')^(eta+j) (f o g)) = J_g ((Gamma f) o g)`` through degree ``n``.

    ``f`` must be a polynomial supported on grade ``j``.
    """
    if not f.polynomial:
        raise ValueError("intertwining check expects a polynomial input")
    lhs = gamma_apply(spec, None, series_transform(f, g, spec.eta + j, n + spec.m))
    gf = gamma_apply(spec, None, f)
    comp = compose(gf, g, n).coeffs
    jser = multiplier_series(spec, g, n)
    rhs = np.zeros((n + 1, spec.dim), dtype=complex)
    for k in range(n + 1):
        for i in range(k + 1):
            rhs[k] += jser[i] @ comp[k - i]
    return lhs.coeffs[: n + 1], rhs
