"""Disc automorphisms in SU(1,1) form and the scalar helpers built on them.

A group element is stored as the pair ``(a, b)`` of the matrix
``[[a, b], [conj(b), conj(a)]]`` with ``|a|^2 - |b|^2 = 1``.  Fractional powers
of the derivative are taken on the principal branch of ``Log(conj(b) z + conj(a))``.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

DET_TOL = 1e-12


class BranchError(ValueError):
    """A fractional power was requested where the principal branch is not valid."""


class DiscError(ValueError):
    """A point was supplied outside the open unit disc."""


def pochhammer(x: float, n: int) -> float:
    """Rising factorial ``x (x+1) ... (x+n-1)``; equal to 1 for ``n == 0``."""
    if n < 0:
        raise ValueError(f"pochhammer needs n >= 0, got {n}")
    out = 1.0
    for k in range(n):
        out *= x + k
    return out


def log_pochhammer(x: float, n: int) -> float:
    """``log (x)_n`` for ``x > 0`` through log-Gamma."""
    if x <= 0:
        raise ValueError("log_pochhammer needs x > 0")
    return math.lgamma(x + n) - math.lgamma(x)


def _check_disc(z: complex) -> complex:
    z = complex(z)
    if not abs(z) < 1.0:
        raise DiscError(f"point {z} is not in the open unit disc")
    return z


@dataclass(frozen=True)
class MoebiusElement:
    a: complex
    b: complex

    def __post_init__(self):
        a, b = complex(self.a), complex(self.b)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        det = abs(a) ** 2 - abs(b) ** 2
        if abs(det - 1.0) > DET_TOL * max(1.0, abs(a) ** 2):
            raise ValueError(f"|a|^2 - |b|^2 = {det!r}, expected 1")

    @property
    def c(self) -> complex:
        """Lower-left matrix entry ``conj(b)``."""
        return self.b.conjugate()

    @property
    def d(self) -> complex:
        """Lower-right matrix entry ``conj(a)``."""
        return self.a.conjugate()

    @property
    def matrix(self) -> np.ndarray:
        return np.array([[self.a, self.b], [self.c, self.d]], dtype=complex)

    def inverse(self) -> "MoebiusElement":
        return MoebiusElement(self.a.conjugate(), -self.b)

    def __matmul__(self, other: "MoebiusElement") -> "MoebiusElement":
        # (self @ other)(z) == self(other(z))
        a = self.a * other.a + self.b * other.c
        b = self.a * other.b + self.b * other.d
        return MoebiusElement(a, b)

    def __call__(self, z: complex) -> complex:
        return mobius_apply(self, z)

    def denominator(self, z: complex) -> complex:
        return self.c * z + self.d


def identity() -> MoebiusElement:
    return MoebiusElement(1.0, 0.0)


def rotation(theta: float) -> MoebiusElement:
    """``k_theta``: acts as ``z -> exp(i theta) z``."""
    return MoebiusElement(cmath.exp(0.5j * theta), 0.0)


def point_section(z: complex) -> MoebiusElement:
    """The boost ``p_z`` with ``p_z(0) = z``."""
    z = _check_disc(z)
    s = 1.0 / math.sqrt(1.0 - abs(z) ** 2)
    return MoebiusElement(s, s * z)


def random_near_identity(rng: np.random.Generator, radius: float = 0.3) -> MoebiusElement:
    """A rotation composed with a boost, both within ``radius`` of the identity."""
    theta = rng.uniform(-radius, radius)
    r = radius * math.sqrt(rng.uniform())
    w = r * cmath.exp(2j * math.pi * rng.uniform())
    return rotation(theta) @ point_section(w)


@dataclass(frozen=True)
class BranchPolicy:
    """Principal-branch policy for ``g'(z)^lam``.

    The branch is valid at ``(g, z)`` when ``conj(b) z + conj(a)`` is off the
    closed negative real axis.  ``Re(a) > 0`` makes it valid on the whole disc
    with ``Log`` additive over the factorisation used by the power series code.
    """

    mode: str = "principal"

    def valid_at(self, g: MoebiusElement, z: complex) -> bool:
        w = g.denominator(z)
        return not (w.real <= 0.0 and abs(w.imag) <= 1e-15 * max(abs(w), 1e-300))

    def valid_on_disc(self, g: MoebiusElement) -> bool:
        return g.a.real > 0.0


PRINCIPAL = BranchPolicy()


def mobius_apply(g: MoebiusElement, z: complex) -> complex:
    z = _check_disc(z)
    return (g.a * z + g.b) / (g.c * z + g.d)


def derivative_power(g: MoebiusElement, z: complex, lam: float) -> complex:
    """``g'(z)^lam = exp(-2 lam Log(conj(b) z + conj(a)))`` on the principal branch."""
    z = _check_disc(z)
    if not PRINCIPAL.valid_at(g, z):
        raise BranchError(f"conj(b) z + conj(a) = {g.denominator(z)} lies on the branch cut")
    return cmath.exp(-2.0 * lam * cmath.log(g.denominator(z)))


def c_of(g: MoebiusElement) -> complex:
    """The constant ``c_g`` with ``g'' = -2 c_g (g')^{3/2}``; the lower-left entry."""
    return g.c
