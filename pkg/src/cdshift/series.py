"""Truncated vector-valued power series graded into blocks of sizes ``d_0..d_m``.

Coefficients are stored as an array of shape ``(N_trunc + 1, d)``.  Each series
carries an exactness watermark ``exact``: coefficients of degree ``<= exact``
are the true Taylor coefficients, higher ones must not be trusted.  A series
flagged ``polynomial`` is known to vanish above ``N_trunc``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .moebius import PRINCIPAL, BranchError, MoebiusElement, pochhammer


@dataclass(frozen=True)
class GradedSeries:
    coeffs: np.ndarray
    multiplicities: tuple
    exact: int = field(default=None)
    polynomial: bool = False

    def __post_init__(self):
        coeffs = np.array(self.coeffs, dtype=complex)
        if coeffs.ndim == 1:
            coeffs = coeffs[:, None]
        mult = tuple(int(k) for k in self.multiplicities)
        if coeffs.ndim != 2 or coeffs.shape[1] != sum(mult):
            raise ValueError(
                f"coefficient vectors have length {coeffs.shape[1:]}, multiplicities sum to {sum(mult)}"
            )
        coeffs.setflags(write=False)
        object.__setattr__(self, "coeffs", coeffs)
        object.__setattr__(self, "multiplicities", mult)
        if self.exact is None:
            object.__setattr__(self, "exact", coeffs.shape[0] - 1)

    @classmethod
    def from_polynomial(cls, coeffs, multiplicities=(1,)) -> "GradedSeries":
        coeffs = np.asarray(coeffs, dtype=complex)
        return cls(coeffs, multiplicities, exact=len(coeffs) - 1, polynomial=True)

    @classmethod
    def monomial(cls, n: int, vector, multiplicities=(1,)) -> "GradedSeries":
        vector = np.atleast_1d(np.asarray(vector, dtype=complex))
        coeffs = np.zeros((n + 1, vector.size), dtype=complex)
        coeffs[n] = vector
        return cls.from_polynomial(coeffs, multiplicities)

    @property
    def truncation(self) -> int:
        return self.coeffs.shape[0] - 1

    @property
    def dim(self) -> int:
        return self.coeffs.shape[1]

    def component(self, j: int) -> np.ndarray:
        start = sum(self.multiplicities[:j])
        return self.coeffs[:, start:start + self.multiplicities[j]]

    def pad(self, n: int) -> "GradedSeries":
        """Extend a polynomial with zero coefficients up to degree ``n``."""
        if n <= self.truncation:
            return self
        if not self.polynomial:
            raise ValueError("only polynomials can be padded beyond their truncation")
        extra = np.zeros((n - self.truncation, self.dim), dtype=complex)
        return GradedSeries.from_polynomial(np.vstack([self.coeffs, extra]), self.multiplicities)

    def truncate(self, n: int) -> "GradedSeries":
        if n >= self.truncation:
            return self
        poly = self.polynomial and not np.any(self.coeffs[n + 1:])
        return GradedSeries(self.coeffs[: n + 1], self.multiplicities, min(self.exact, n), poly)

    def __add__(self, other: "GradedSeries") -> "GradedSeries":
        n = max(self.truncation, other.truncation)
        left = self.pad(n) if self.polynomial else self
        right = other.pad(n) if other.polynomial else other
        n = min(left.truncation, right.truncation)
        return GradedSeries(
            left.coeffs[: n + 1] + right.coeffs[: n + 1],
            self.multiplicities,
            min(left.exact, right.exact, n),
            left.polynomial and right.polynomial,
        )

    def __sub__(self, other: "GradedSeries") -> "GradedSeries":
        return self + other.scale(-1.0)

    def scale(self, s: complex) -> "GradedSeries":
        return GradedSeries(s * self.coeffs, self.multiplicities, self.exact, self.polynomial)

    def evaluate(self, z: complex) -> np.ndarray:
        powers = complex(z) ** np.arange(self.truncation + 1)
        return powers @ self.coeffs


def toeplitz_lower(c: np.ndarray) -> np.ndarray:
    """Matrix of multiplication by the scalar series ``c`` on truncated coefficients."""
    n = len(c)
    out = np.zeros((n, n), dtype=complex)
    for k in range(n):
        out[k:, k] = c[: n - k]
    return out


def mobius_series(g: MoebiusElement, n: int) -> np.ndarray:
    """Taylor coefficients of ``(a z + b) / (conj(b) z + conj(a))`` through degree ``n``."""
    ratio = -g.c / g.d
    inv = ratio ** np.arange(n + 1) / g.d
    num = np.zeros(n + 1, dtype=complex)
    num[0] = g.b
    if n >= 1:
        num[1] = g.a
    return np.convolve(num, inv)[: n + 1]


def derivative_power_series(g: MoebiusElement, lam: float, n: int) -> np.ndarray:
    """Taylor coefficients of ``g'(z)^lam`` through degree ``n``.

    Uses ``(c z + d)^(-2 lam) = d^(-2 lam) (1 + (c/d) z)^(-2 lam)``, which agrees with
    the principal branch on the whole disc when ``Re(a) > 0``.
    """
    if not PRINCIPAL.valid_on_disc(g):
        raise BranchError("series expansion of g'(z)^lam needs Re(a) > 0")
    alpha = -2.0 * lam
    u = g.c / g.d
    out = np.empty(n + 1, dtype=complex)
    out[0] = np.exp(alpha * np.log(g.d))
    for k in range(n):
        out[k + 1] = out[k] * (alpha - k) / (k + 1) * u
    return out


def series_differentiate(f: GradedSeries, k: int) -> GradedSeries:
    if k < 0:
        raise ValueError("derivative order must be nonnegative")
    if k > f.truncation:
        raise ValueError(f"cannot take {k} derivatives of a series truncated at {f.truncation}")
    if k == 0:
        return f
    n = f.truncation
    degrees = np.arange(n - k + 1)
    factor = np.array([math.perm(int(i) + k, k) for i in degrees], dtype=float)
    coeffs = f.coeffs[k:] * factor[:, None]
    return GradedSeries(coeffs, f.multiplicities, f.exact - k, f.polynomial)


def compose(f: GradedSeries, g: MoebiusElement, n: int) -> GradedSeries:
    """``f o g`` through degree ``n`` (Horner's rule on truncated series)."""
    gs = toeplitz_lower(mobius_series(g, n))
    out = np.zeros((n + 1, f.dim), dtype=complex)
    for k in range(f.truncation, -1, -1):
        out = gs @ out
        out[0] += f.coeffs[k]
    if f.polynomial:
        exact = n
    elif g.b == 0:
        exact = min(n, f.exact)
    else:
        exact = -1
    return GradedSeries(out, f.multiplicities, exact, False)


def series_transform(f: GradedSeries, g: MoebiusElement, lam: float, n: int) -> GradedSeries:
    """Expansion of ``z -> g'(z)^lam f(g(z))`` through degree ``n``."""
    if n > f.truncation and not f.polynomial:
        raise ValueError("transform degree exceeds the truncation of a non-polynomial series")
    comp = compose(f, g, n)
    weight = toeplitz_lower(derivative_power_series(g, lam, n))
    return GradedSeries(weight @ comp.coeffs, f.multiplicities, comp.exact, False)


def leibnitz_rhs(f: GradedSeries, g: MoebiusElement, ell: float, k: int, n: int) -> GradedSeries:
    """``sum_i C(k,i) (2 ell + i)_{k-i} (-c_g)^{k-i} (g')^{ell+(k+i)/2} (f^{(i)} o g)``.

    This is the closed form of the ``k``-th derivative of ``(g')^ell (f o g)``.
    """
    c = g.c
    total = None
    for i in range(k + 1):
        coef = math.comb(k, i) * pochhammer(2.0 * ell + i, k - i) * (-c) ** (k - i)
        fi = series_differentiate(f, i) if i <= f.truncation else None
        if fi is None:
            continue
        term = series_transform(fi, g, ell + 0.5 * (k + i), n).scale(coef)
        total = term if total is None else total + term
    return total
