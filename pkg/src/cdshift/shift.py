"""Weighted block-shift realization of multiplication by ``z``.

Level ``n`` is spanned by the images ``Gamma(e_j^{n-j} eps_jq)`` for
``0 <= j <= min(m, n)``.  ``E(n)`` holds their monomial coefficients and the
shift blocks are ``M(n) = E(n+1)^{-1} E(n)`` (level ``n`` to level ``n+1``).
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.linalg

from .bundle import BundleSpec, multiplier
from .kernel import gamma_apply, kernel_exists
from .moebius import log_pochhammer, pochhammer, rotation
from .series import GradedSeries

COND_MAX = 1e12
SIMILAR_TOL = 1e-9
# a convergent 1/n^2 tail halves per dyadic block; allow slack for the O(1/n) correction
TAIL_RATIO_MAX = 0.6


class IllConditionedError(ArithmeticError):
    pass


class RecoveryError(ValueError):
    pass


class ContractionClass(enum.Enum):
    SIMILAR_TO_CONTRACTION = "SimilarToContraction"
    NOT_POWER_BOUNDED = "NotPowerBounded"


def basis_coefficient(eta: float, ell: int, j: int, n: int) -> float:
    """Coefficient of ``z^(n-l)`` in component ``l`` of ``Gamma(e_j^{n-j})``.

    Equals ``sqrt((2eta+2j)_{n-j} / (n-j)!) (n-j)! / ((n-l)! (l-j)! (2eta+2j)_{l-j})``,
    evaluated through log-Gamma.
    """
    if not 0 <= j <= ell <= n:
        raise ValueError(f"need 0 <= j <= l <= n, got j={j}, l={ell}, n={n}")
    if eta <= 0:
        raise ValueError("eta must be positive")
    x = 2.0 * eta + 2.0 * j
    logc = 0.5 * (log_pochhammer(x, n - j) - math.lgamma(n - j + 1))
    logc += math.lgamma(n - j + 1) - math.lgamma(n - ell + 1)
    logc -= math.lgamma(ell - j + 1) + log_pochhammer(x, ell - j)
    return math.exp(logc)


def level_dim(spec: BundleSpec, n: int) -> int:
    return sum(spec.multiplicities[: min(spec.m, n) + 1])


def e_matrix(spec: BundleSpec, n: int) -> np.ndarray:
    """Block ``(l, j)`` is ``c(eta, l, j, n) Y_l ... Y_{j+1}`` for ``l >= j``."""
    if spec.eta <= 0:
        raise ValueError("eta must be positive")
    top = min(spec.m, n)
    size = level_dim(spec, n)
    out = np.zeros((size, size), dtype=complex)
    for ell in range(top + 1):
        for j in range(ell + 1):
            out[spec.grade_slice(ell), spec.grade_slice(j)] = basis_coefficient(spec.eta, ell, j, n) * spec.chain(ell, j)
    return out


def e_matrix_via_gamma(spec: BundleSpec, n: int) -> np.ndarray:
    """``E(n)`` read off from ``Gamma`` applied to the normalised monomials (independent path)."""
    top = min(spec.m, n)
    size = level_dim(spec, n)
    out = np.zeros((size, size), dtype=complex)
    col = 0
    for j in range(top + 1):
        norm = math.sqrt(pochhammer(2 * spec.eta + 2 * j, n - j) / math.factorial(n - j))
        for q in range(spec.multiplicities[j]):
            coeffs = np.zeros((n + 1, spec.dim), dtype=complex)
            coeffs[n - j, spec.offsets[j] + q] = norm
            image = gamma_apply(spec, None, GradedSeries.from_polynomial(coeffs, spec.multiplicities))
            for ell in range(top + 1):
                out[spec.grade_slice(ell), col] = image.coeffs[n - ell, spec.grade_slice(ell)]
            col += 1
    return out


def _row_equilibrated_cond(e: np.ndarray) -> float:
    scale = np.max(np.abs(e), axis=1)
    return float(np.linalg.cond(e / scale[:, None]))


def shift_block(spec: BundleSpec, n: int, check_condition: bool = True) -> np.ndarray:
    """``M(n)`` solving ``E(n+1) M(n) = E(n)`` (rows of ``E(n)`` padded for a new grade)."""
    if n < 0:
        raise ValueError("level must be nonnegative")
    upper = e_matrix(spec, n + 1)
    if check_condition:
        cond = _row_equilibrated_cond(upper)
        if cond > COND_MAX:
            raise IllConditionedError(f"E({n + 1}) has condition number {cond:.3g}")
    lower = e_matrix(spec, n)
    rhs = np.zeros((upper.shape[0], lower.shape[1]), dtype=complex)
    rhs[: lower.shape[0]] = lower
    return scipy.linalg.solve_triangular(upper, rhs, lower=True)


def shift_identity_residual(spec: BundleSpec, n: int) -> float:
    """Relative residual of ``E(n) = E(n+1) M(n)`` on the level-``n+1`` coefficient rows."""
    upper, lower = e_matrix(spec, n + 1), e_matrix(spec, n)
    rhs = np.zeros((upper.shape[0], lower.shape[1]), dtype=complex)
    rhs[: lower.shape[0]] = lower
    res = upper @ shift_block(spec, n) - rhs
    return float(np.max(np.abs(res)) / max(1.0, np.max(np.abs(lower))))


def ktype_residual(spec: BundleSpec, n: int, theta: float, points=(0.3, -0.2 + 0.4j, 0.55j)) -> float:
    """Check that rotation acts on level ``n`` by the scalar ``exp(i theta (eta + n))``.

    Each basis function ``f`` must satisfy ``J_k(z) f(k z) = exp(i theta (eta+n)) f(z)``.
    """
    e = e_matrix(spec, n)
    k = rotation(theta)
    phase = np.exp(1j * theta * (spec.eta + n))
    top = min(spec.m, n)
    powers = np.concatenate([np.full(spec.multiplicities[l], n - l) for l in range(top + 1)])
    worst = 0.0
    for z in points:
        jk = multiplier(spec, k, z)[: e.shape[0], : e.shape[0]]
        fz = (z ** powers)[:, None] * e
        fkz = ((k(z)) ** powers)[:, None] * e
        worst = max(worst, float(np.max(np.abs(jk @ fkz - phase * fz))))
    return worst


@dataclass(frozen=True)
class ShiftRealization:
    spec: BundleSpec
    n_max: int
    dims: tuple
    blocks: tuple

    def block(self, n: int) -> np.ndarray:
        return self.blocks[n]


def realize(spec: BundleSpec, n_max: int) -> ShiftRealization:
    """Blocks ``M(0) .. M(n_max - 1)``; the rectangular ones (``n < m``) are kept."""
    if n_max < 1:
        raise ValueError("n_max must be at least 1")
    blocks = tuple(shift_block(spec, n) for n in range(n_max))
    dims = tuple(level_dim(spec, n) for n in range(n_max + 1))
    return ShiftRealization(spec, n_max, dims, blocks)


def _loglog_fit(n: np.ndarray, y: np.ndarray):
    mask = y > 0
    if mask.sum() < 2:
        return None, None
    slope, intercept = np.polyfit(np.log(n[mask]), np.log(y[mask]), 1)
    return float(slope), float(math.exp(intercept))


@dataclass(frozen=True)
class WeightProfile:
    """Diagonal entries of ``M(n)`` for ``n >= m`` and a power-law fit of ``1 - w``."""

    levels: np.ndarray
    weights: tuple
    fit_exponent: Optional[float] = None
    fit_constant: Optional[float] = None


def weight_profile(spec: BundleSpec, n_max: int) -> WeightProfile:
    levels = np.arange(spec.m, n_max + 1)
    weights = tuple(np.real(np.diag(shift_block(spec, int(n), check_condition=False))) for n in levels)
    dev = np.array([np.max(np.abs(1.0 - w)) for w in weights])
    half = levels >= levels[0] + (levels[-1] - levels[0]) // 2
    exponent, const = _loglog_fit(levels[half].astype(float), dev[half])
    return WeightProfile(levels, weights, exponent, const)


def recover_parameters(profile: WeightProfile):
    """Recover ``eta`` and the multiplicities from diagonal shift weights.

    The largest weight at level ``n`` belongs to grade 0 and equals
    ``sqrt((n+1)/(2 eta + n))`` exactly; a weight of grade ``j`` equals
    ``sqrt((n-j+1)/(2 eta + j + n))``, which assigns every diagonal entry a grade.
    """
    levels = np.asarray(profile.levels)
    if levels.size == 0 or levels[-1] < 200:
        raise RecoveryError("weights are needed up to n >= 200")
    top = levels >= levels[-1] - max(1, (levels[-1] - levels[0]) // 10)
    etas = []
    for n, w in zip(levels[top], np.asarray(profile.weights, dtype=object)[top]):
        wmax = float(np.max(w))
        etas.append(0.5 * ((n + 1) / wmax ** 2 - n))
    eta = float(np.mean(etas))
    counts = None
    for n, w in zip(levels[top], np.asarray(profile.weights, dtype=object)[top]):
        n = int(n)
        jmax = min(n, len(w))
        cand = np.array([(n - j + 1) / (2 * eta + j + n) for j in range(jmax + 1)])
        gap = float(np.min(np.abs(np.diff(cand)))) if jmax > 0 else 1.0
        level_counts = np.zeros(jmax + 1, dtype=int)
        for wi in np.asarray(w, dtype=float):
            dist = np.abs(cand - wi ** 2)
            j = int(np.argmin(dist))
            if dist[j] > 0.25 * gap:
                raise RecoveryError(f"weight {wi} at level {n} does not match any grade family")
            level_counts[j] += 1
        level_counts = np.trim_zeros(level_counts, "b")
        if counts is None:
            counts = level_counts
        elif not np.array_equal(counts, level_counts):
            raise RecoveryError("grade assignment is not stable across the top levels")
    if np.any(counts == 0):
        raise RecoveryError(f"grade families are interrupted: {counts.tolist()}")
    return eta, [int(k) for k in counts]


@dataclass(frozen=True)
class DiagnosticsReport:
    levels: np.ndarray
    norms: np.ndarray
    deviations: np.ndarray
    sup_norm: float
    decay_exponent: Optional[float]
    decay_constant: Optional[float]
    hs_partial_sum: float
    tail_ratio: float
    converged: bool
    fit_range: tuple


def asymptotic_diagnostics(spec: BundleSpec, n_max: int, fit_range=None) -> DiagnosticsReport:
    """Boundedness, ``|M(n) - I|`` decay and the Hilbert-Schmidt tail of ``M - S``.

    Levels below ``m`` (rectangular blocks) are skipped.  The decay exponent is a
    log-log least-squares fit over ``fit_range`` (default: top half of the levels).
    """
    if n_max < 50:
        raise ValueError("n_max must be at least 50")
    ok, _ = kernel_exists(spec)
    if not ok:
        raise ValueError("asymptotic diagnostics need a spec with a reproducing kernel")
    levels = np.arange(spec.m, n_max + 1)
    norms, devs, frob = [], [], []
    for n in levels:
        mn = shift_block(spec, int(n))
        diff = mn - np.eye(mn.shape[0])
        norms.append(np.linalg.norm(mn, 2))
        devs.append(np.linalg.norm(diff, 2))
        frob.append(np.linalg.norm(diff, "fro") ** 2)
    norms, devs, frob = map(np.asarray, (norms, devs, frob))
    if fit_range is None:
        fit_range = (levels[0] + (levels[-1] - levels[0]) // 2, levels[-1])
    sel = (levels >= fit_range[0]) & (levels <= fit_range[1])
    exponent, const = _loglog_fit(levels[sel].astype(float), devs[sel])
    recent = frob[(levels > n_max // 2)].sum()
    earlier = frob[(levels > n_max // 4) & (levels <= n_max // 2)].sum()
    ratio = float(recent / earlier) if earlier > 0 else 0.0
    return DiagnosticsReport(
        levels=levels,
        norms=norms,
        deviations=devs,
        sup_norm=float(norms.max()),
        decay_exponent=exponent,
        decay_constant=const,
        hs_partial_sum=float(frob.sum()),
        tail_ratio=ratio,
        converged=ratio < TAIL_RATIO_MAX,
        fit_range=(int(fit_range[0]), int(fit_range[1])),
    )


def similar(spec1: BundleSpec, spec2: BundleSpec) -> bool:
    """Similarity of the two shift realizations: same ``eta`` and same block sizes."""
    for s in (spec1, spec2):
        if not kernel_exists(s)[0]:
            raise ValueError("similarity is only defined for specs with a reproducing kernel")
    return abs(spec1.eta - spec2.eta) <= SIMILAR_TOL and spec1.multiplicities == spec2.multiplicities


def contraction_class(spec: BundleSpec) -> ContractionClass:
    if not kernel_exists(spec)[0]:
        raise ValueError("contraction class is only defined for specs with a reproducing kernel")
    if spec.eta >= 0.5:
        return ContractionClass.SIMILAR_TO_CONTRACTION
    return ContractionClass.NOT_POWER_BOUNDED


def closed_form_power_norm(eta: float, n: int) -> float:
    """``sqrt(n! / (2 eta)_n)``: norm of ``z^n`` in the scalar model space."""
    return math.exp(0.5 * (math.lgamma(n + 1) - log_pochhammer(2.0 * eta, n)))


def first_level_exceeding(eta: float, bound: float) -> int:
    """Smallest ``n`` with ``sqrt(n!/(2 eta)_n) > bound`` (needs ``eta < 1/2``)."""
    if not 0 < eta < 0.5:
        raise ValueError("grade-0 power norms are unbounded only for 0 < eta < 1/2")
    hi = 1
    while closed_form_power_norm(eta, hi) <= bound:
        hi *= 2
    lo = hi // 2
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if closed_form_power_norm(eta, mid) > bound:
            hi = mid
        else:
            lo = mid
    return hi


def power_norms(spec: BundleSpec, n_max: int, q: int = 0) -> np.ndarray:
    """``|M^n e|`` for ``n = 0..n_max`` and ``e`` the ``q``-th grade-0 basis vector of level 0."""
    vec = np.zeros(spec.multiplicities[0], dtype=complex)
    vec[q] = 1.0
    out = np.empty(n_max + 1)
    out[0] = 1.0
    lower = e_matrix(spec, 0)
    for n in range(n_max):
        upper = e_matrix(spec, n + 1)
        rhs = np.zeros((upper.shape[0], lower.shape[1]), dtype=complex)
        rhs[: lower.shape[0]] = lower
        vec = scipy.linalg.solve_triangular(upper, rhs, lower=True) @ vec
        out[n + 1] = np.linalg.norm(vec)
        lower = upper
    return out


def diagonal_weights_bounded(spec: BundleSpec, n_max: int) -> bool:
    """Whether every diagonal shift weight up to ``n_max`` is at most 1."""
    for n in range(n_max):
        mn = shift_block(spec, n, check_condition=False)
        k = min(mn.shape)
        if np.any(np.abs(np.diag(mn[:k, :k])) > 1.0 + 1e-12):
            return False
    return True
