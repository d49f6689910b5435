"""Seeded residual suite behind ``cdshift verify``."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .bundle import BundleSpec, cocycle_residual, multiplier, multiplier_exp_form
from .kernel import (
    NormalizerSolution,
    closed_form_normalizer,
    intertwining_sides,
    kernel_at_origin,
    kernel_invariance_residual,
    solve_normalizer,
    transport_residual,
)
from .moebius import MoebiusElement, identity, random_near_identity
from .series import GradedSeries, leibnitz_rhs, series_differentiate, series_transform
from .tolerances import DEFAULTS

RADIUS = 0.6
POLY_DEGREE = 6
SERIES_DEGREE = 10


@dataclass(frozen=True)
class CheckResult:
    name: str
    max_residual: Optional[float]
    tolerance: float
    samples: int
    skipped: Optional[str] = None

    @property
    def passed(self) -> bool:
        return self.skipped is not None or self.max_residual <= self.tolerance

    def as_dict(self) -> dict:
        out = {"max_residual": self.max_residual, "tolerance": self.tolerance,
               "samples": self.samples, "passed": self.passed}
        if self.skipped is not None:
            out["skipped"] = self.skipped
        return out


def random_disc_point(rng: np.random.Generator, radius: float = RADIUS) -> complex:
    r = radius * np.sqrt(rng.uniform())
    return complex(r * np.exp(2j * np.pi * rng.uniform()))


def random_polynomial(rng, degree: int, multiplicities, grade: int) -> GradedSeries:
    coeffs = np.zeros((degree + 1, sum(multiplicities)), dtype=complex)
    start = sum(multiplicities[:grade])
    width = multiplicities[grade]
    coeffs[:, start:start + width] = rng.uniform(-1, 1, (degree + 1, width)) + 1j * rng.uniform(-1, 1, (degree + 1, width))
    return GradedSeries.from_polynomial(coeffs, multiplicities)


def _element(rng, identity_only: bool) -> MoebiusElement:
    return identity() if identity_only else random_near_identity(rng, 0.3)


def scaled_difference(a: np.ndarray, b: np.ndarray) -> float:
    """Max entrywise difference over ``max(1, max |b|)``."""
    return float(np.max(np.abs(a - b)) / max(1.0, float(np.max(np.abs(b)))))


def leibnitz_residual(f: GradedSeries, g: MoebiusElement, ell: float, k: int, n: int) -> float:
    direct = series_differentiate(series_transform(f, g, ell, n + k), k).coeffs[: n + 1]
    closed = leibnitz_rhs(f, g, ell, k, n).coeffs[: n + 1]
    return scaled_difference(direct, closed)


def run_suite(spec: BundleSpec, seed: int = 0, samples: int = 20, tolerances: Optional[dict] = None,
              normalizer: Optional[NormalizerSolution] = None, identity_only: bool = False) -> list:
    """Run every residual check; all randomness flows from ``seed``.

    A supplied ``normalizer`` is used for the kernel checks and is also compared
    against the recursion, so an inconsistent one fails the oracle check.
    """
    tol = dict(DEFAULTS, **(tolerances or {}))
    rng = np.random.default_rng(seed)
    cocycle, two_path, inter, leib = [], [], [], []
    for _ in range(samples):
        g, h = _element(rng, identity_only), _element(rng, identity_only)
        z = random_disc_point(rng)
        cocycle.append(cocycle_residual(spec, g, h, z))
        two_path.append(float(np.max(np.abs(multiplier(spec, g, z) - multiplier_exp_form(spec, g, z)))))
        j = int(rng.integers(spec.m + 1))
        f = random_polynomial(rng, int(rng.integers(POLY_DEGREE + 1)), spec.multiplicities, j)
        lhs, rhs = intertwining_sides(spec, f, j, g, SERIES_DEGREE)
        inter.append(scaled_difference(lhs, rhs))
        k = int(rng.integers(5))
        leib.append(leibnitz_residual(f, g, spec.eta + j, k, SERIES_DEGREE))
    results = [
        CheckResult("cocycle", max(cocycle), tol["cocycle"], samples),
        CheckResult("two_path_multiplier", max(two_path), tol["two_path_multiplier"], samples),
        CheckResult("intertwining", max(inter), tol["intertwining"], samples),
        CheckResult("leibnitz", max(leib), tol["leibnitz"], samples),
    ]
    names = ("normalizer_oracle", "kernel_origin", "kernel_invariance", "transport_law")
    if spec.eta <= 0:
        return results + [CheckResult(n, None, tol[n], 0, skipped="eta must be positive") for n in names]

    solved = solve_normalizer(spec)
    oracle = solved.max_difference(closed_form_normalizer(spec))
    if normalizer is not None:
        oracle = max(oracle, solved.max_difference(normalizer))
    used = normalizer if normalizer is not None else solved
    origin = float(np.max(np.abs(kernel_at_origin(spec, used).value - np.eye(spec.dim))))
    inv, trans = [], []
    for _ in range(samples):
        g = _element(rng, identity_only)
        z, w = random_disc_point(rng), random_disc_point(rng)
        inv.append(kernel_invariance_residual(spec, used, g, z, w))
        trans.append(transport_residual(spec, used, z))
    return results + [
        CheckResult("normalizer_oracle", oracle, tol["normalizer_oracle"], 1),
        CheckResult("kernel_origin", origin, tol["kernel_origin"], 1),
        CheckResult("kernel_invariance", max(inv), tol["kernel_invariance"], samples),
        CheckResult("transport_law", max(trans), tol["transport_law"], samples),
    ]
