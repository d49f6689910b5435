"""Representation data ``(eta, Y)``, the multiplier cocycle and irreducibility.

The inducing representation is fixed by ``eta`` and the subdiagonal blocks
``Y_1..Y_m`` (``Y_j`` maps grade ``j-1`` to grade ``j``); its diagonal part
``-(eta + j)`` on grade ``j`` is implicit and never stored.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .moebius import MoebiusElement, derivative_power, mobius_apply

NULLSPACE_RTOL = 1e-9


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=complex)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class BundleSpec:
    eta: float
    multiplicities: tuple
    blocks: tuple = ()

    def __post_init__(self):
        mult = tuple(int(k) for k in self.multiplicities)
        if not mult or any(k < 1 for k in mult):
            raise ValueError(f"multiplicities must be positive integers, got {self.multiplicities}")
        blocks = tuple(_frozen(np.atleast_2d(y)) for y in self.blocks)
        if len(blocks) != len(mult) - 1:
            raise ValueError(f"{len(mult)} grades need {len(mult) - 1} blocks, got {len(blocks)}")
        for j, y in enumerate(blocks, start=1):
            if y.shape != (mult[j], mult[j - 1]):
                raise ValueError(f"Y_{j} has shape {y.shape}, expected {(mult[j], mult[j - 1])}")
        object.__setattr__(self, "eta", float(self.eta))
        object.__setattr__(self, "multiplicities", mult)
        object.__setattr__(self, "blocks", blocks)

    @property
    def m(self) -> int:
        return len(self.multiplicities) - 1

    @property
    def dim(self) -> int:
        return sum(self.multiplicities)

    @property
    def offsets(self) -> list:
        return [0] + list(np.cumsum(self.multiplicities))

    def grade_slice(self, j: int) -> slice:
        off = self.offsets
        return slice(off[j], off[j + 1])

    def Y(self, j: int) -> np.ndarray:
        """``Y_j`` (1-based, as in the block subdiagonal)."""
        return self.blocks[j - 1]

    def chain(self, ell: int, j: int) -> np.ndarray:
        """The product ``Y_ell ... Y_{j+1}`` (identity when ``ell == j``)."""
        out = np.eye(self.multiplicities[j], dtype=complex)
        for k in range(j + 1, ell + 1):
            out = self.Y(k) @ out
        return out

    def y_full(self) -> np.ndarray:
        """The full strictly block-lower-triangular ``d x d`` matrix built from the blocks."""
        out = np.zeros((self.dim, self.dim), dtype=complex)
        for j in range(1, self.m + 1):
            out[self.grade_slice(j), self.grade_slice(j - 1)] = self.Y(j)
        return out

    def with_eta(self, eta: float) -> "BundleSpec":
        return BundleSpec(eta, self.multiplicities, self.blocks)


@dataclass(frozen=True)
class BlockDiagonal:
    blocks: tuple

    def __post_init__(self):
        object.__setattr__(self, "blocks", tuple(_frozen(np.atleast_2d(b)) for b in self.blocks))

    @property
    def multiplicities(self) -> tuple:
        return tuple(b.shape[0] for b in self.blocks)

    def to_matrix(self) -> np.ndarray:
        return scipy.linalg.block_diag(*self.blocks)

    @classmethod
    def identity(cls, multiplicities) -> "BlockDiagonal":
        return cls(tuple(np.eye(k) for k in multiplicities))


def conjugate(spec: BundleSpec, u: BlockDiagonal) -> BundleSpec:
    """Blocks ``U_j Y_j U_{j-1}^{-1}`` (for unitary ``U`` this is ``U Y U^*``)."""
    blocks = tuple(
        u.blocks[j] @ spec.Y(j) @ np.linalg.inv(u.blocks[j - 1]) for j in range(1, spec.m + 1)
    )
    return BundleSpec(spec.eta, spec.multiplicities, blocks)


def multiplier(spec: BundleSpec, g: MoebiusElement, z: complex) -> np.ndarray:
    """``J_g(z)`` assembled blockwise.

    Block ``(p, l)`` for ``p >= l`` is
    ``(-c_g)^(p-l) / (p-l)! * g'(z)^(eta + (p+l)/2) * Y_p ... Y_{l+1}``.
    """
    c = g.c
    out = np.zeros((spec.dim, spec.dim), dtype=complex)
    for p in range(spec.m + 1):
        for ell in range(p + 1):
            coef = (-c) ** (p - ell) / math.factorial(p - ell)
            coef *= derivative_power(g, z, spec.eta + 0.5 * (p + ell))
            out[spec.grade_slice(p), spec.grade_slice(ell)] = coef * spec.chain(p, ell)
    return out


def multiplier_exp_form(spec: BundleSpec, g: MoebiusElement, z: complex) -> np.ndarray:
    """``g'(z)^eta * D exp(-c_g Y) D`` with ``D = diag((conj(b) z + conj(a))^(-j))``."""
    base = derivative_power(g, z, spec.eta)
    w = g.denominator(complex(z))
    diag = np.concatenate([np.full(k, w ** (-j)) for j, k in enumerate(spec.multiplicities)])
    expo = scipy.linalg.expm(-g.c * spec.y_full())
    return base * (diag[:, None] * expo * diag[None, :])


def cocycle_residual(spec: BundleSpec, g: MoebiusElement, h: MoebiusElement, z: complex) -> float:
    """Max-norm of ``J_{hg}(z) - J_g(z) J_h(g z)``."""
    lhs = multiplier(spec, h @ g, z)
    rhs = multiplier(spec, g, z) @ multiplier(spec, h, mobius_apply(g, z))
    return float(np.max(np.abs(lhs - rhs)))


def _hermitian_basis(k: int) -> list:
    """Real basis of the ``k x k`` Hermitian matrices."""
    basis = []
    for r in range(k):
        e = np.zeros((k, k), dtype=complex)
        e[r, r] = 1.0
        basis.append(e)
    for r in range(k):
        for s in range(r + 1, k):
            e = np.zeros((k, k), dtype=complex)
            e[r, s] = e[s, r] = 1.0
            basis.append(e)
            e = np.zeros((k, k), dtype=complex)
            e[r, s], e[s, r] = 1j, -1j
            basis.append(e)
    return basis


def commutant_basis(spec: BundleSpec) -> list:
    """Real basis of Hermitian block-diagonal ``A`` with ``A_j Y_j = Y_j A_{j-1}``."""
    mult = spec.multiplicities
    herm = [_hermitian_basis(k) for k in mult]
    cols, owners = [], []
    for j, basis in enumerate(herm):
        for e in basis:
            eqs = []
            for i in range(1, spec.m + 1):
                y = spec.Y(i)
                res = np.zeros_like(y)
                if i == j:
                    res = res + e @ y
                if i - 1 == j:
                    res = res - y @ e
                eqs.append(res.ravel())
            vec = np.concatenate(eqs) if eqs else np.zeros(0, dtype=complex)
            cols.append(np.concatenate([vec.real, vec.imag]))
            owners.append((j, e))
    system = np.array(cols).T
    nvar = len(cols)
    if system.size == 0:
        null = np.eye(nvar)
    else:
        _, s, vh = np.linalg.svd(system)
        smax = s[0] if s.size else 0.0
        rank = int(np.sum(s > NULLSPACE_RTOL * smax)) if smax > 0 else 0
        null = vh[rank:].T
    out = []
    for col in null.T:
        blocks = [np.zeros((k, k), dtype=complex) for k in mult]
        for coef, (j, e) in zip(col, owners):
            blocks[j] = blocks[j] + coef * e
        out.append(BlockDiagonal(tuple(blocks)))
    return out


def is_irreducible(spec: BundleSpec) -> bool:
    return len(commutant_basis(spec)) == 1


@dataclass(frozen=True)
class Component:
    """One summand of a decomposition.

    ``basis`` holds orthonormal columns (in the ambient ``C^d``) ordered by grade;
    the summand lives on grades ``grade_offset .. grade_offset + spec.m`` and its
    spec carries the shifted parameter ``eta + grade_offset``.
    """

    projection: BlockDiagonal
    basis: np.ndarray
    grade_offset: int
    spec: BundleSpec


def _split(spec: BundleSpec, rng: np.random.Generator) -> list:
    """Eigenspaces of a generic Hermitian commutant element, as per-grade column sets."""
    comm = commutant_basis(spec)
    if len(comm) <= 1:
        return None
    a = sum(rng.standard_normal() * c.to_matrix() for c in comm)
    # diagonalise per grade so every eigenvector lives in a single grade
    entries = []
    for j in range(spec.m + 1):
        sl = spec.grade_slice(j)
        w, v = np.linalg.eigh(a[sl, sl])
        entries.extend((float(w[i]), j, v[:, i]) for i in range(len(w)))
    entries.sort(key=lambda e: e[0])
    scale = max(1.0, max(abs(e[0]) for e in entries))
    clusters = [[entries[0]]]
    for e in entries[1:]:
        if e[0] - clusters[-1][-1][0] < 1e-7 * scale:
            clusters[-1].append(e)
        else:
            clusters.append([e])
    groups = []
    for cl in clusters:
        cols = []
        for j, k in enumerate(spec.multiplicities):
            vecs = [e[2] for e in cl if e[1] == j]
            cols.append(np.array(vecs).T if vecs else np.zeros((k, 0), dtype=complex))
        groups.append(cols)
    return groups


def decompose(spec: BundleSpec, seed: int = 0) -> list:
    """Split ``spec`` into irreducible orthogonal summands.

    Returns a list of :class:`Component`.  An irreducible input gives a single
    component whose projection is the identity.
    """
    rng = np.random.default_rng(seed)
    groups = _split(spec, rng)
    if groups is None:
        proj = BlockDiagonal.identity(spec.multiplicities)
        return [Component(proj, np.eye(spec.dim, dtype=complex), 0, spec)]
    out = []
    for cols in groups:
        grades = [j for j, q in enumerate(cols) if q.shape[1] > 0]
        lo, hi = grades[0], grades[-1]
        if grades != list(range(lo, hi + 1)):
            raise RuntimeError("eigenspace of the commutant is not an uninterrupted string of grades")
        mult = tuple(cols[j].shape[1] for j in range(lo, hi + 1))
        blocks = tuple(cols[j].conj().T @ spec.Y(j) @ cols[j - 1] for j in range(lo + 1, hi + 1))
        sub = BundleSpec(spec.eta + lo, mult, blocks)
        for part in decompose(sub, seed):
            basis = np.zeros((spec.dim, part.spec.dim), dtype=complex)
            for jj in range(part.spec.m + 1):
                jsub = part.grade_offset + jj
                jfull = lo + jsub
                sub_cols = part.basis[sub.grade_slice(jsub), part.spec.grade_slice(jj)]
                basis[spec.grade_slice(jfull), part.spec.grade_slice(jj)] = cols[jfull] @ sub_cols
            proj_blocks = tuple(
                basis[spec.grade_slice(j)] @ basis[spec.grade_slice(j)].conj().T
                for j in range(spec.m + 1)
            )
            out.append(Component(BlockDiagonal(proj_blocks), basis, lo + part.grade_offset, part.spec))
    return out


def reassemble_multiplier(spec: BundleSpec, components: list, g: MoebiusElement, z: complex) -> np.ndarray:
    """``Q (direct sum of component multipliers) Q^*`` with ``Q`` the stacked bases."""
    q = np.hstack([c.basis for c in components])
    parts = [multiplier(c.spec, g, z) for c in components]
    return q @ scipy.linalg.block_diag(*parts) @ q.conj().T


def canonical_scalar_chain(spec: BundleSpec) -> BundleSpec:
    """Representative with every ``y_j >= 0`` (diagonal-unitary conjugacy class)."""
    if any(k != 1 for k in spec.multiplicities):
        raise ValueError("canonical_scalar_chain needs all multiplicities equal to 1")
    blocks = tuple(np.abs(y) for y in spec.blocks)
    return BundleSpec(spec.eta, spec.multiplicities, blocks)


def canonical_121(spec: BundleSpec) -> tuple:
    """Canonical ``(a, b, c)`` for multiplicities ``(1, 2, 1)``.

    ``a = |Y_1|``; ``b`` is the modulus of ``Y_2`` along the direction of ``Y_1`` and
    ``c`` the modulus of the orthogonal part.  When ``Y_1 = 0`` the frame is free
    and we take ``b = |Y_2|``, ``c = 0``.
    """
    if spec.multiplicities != (1, 2, 1):
        raise ValueError(f"canonical_121 needs multiplicities (1, 2, 1), got {spec.multiplicities}")
    y1 = spec.Y(1)[:, 0]
    y2 = spec.Y(2)[0]
    a = float(np.linalg.norm(y1))
    norm2 = float(np.linalg.norm(y2))
    if a <= 1e-14 * max(1.0, norm2):
        return 0.0, norm2, 0.0
    b = float(abs(y2 @ y1)) / a
    c = math.sqrt(max(norm2 ** 2 - b ** 2, 0.0))
    return a, b, c


def spec_from_121(eta: float, a: float, b: float, c: float) -> BundleSpec:
    return BundleSpec(eta, (1, 2, 1), (np.array([[a], [0.0]]), np.array([[b, c]])))


def random_block_unitary(multiplicities, rng: np.random.Generator) -> BlockDiagonal:
    blocks = []
    for k in multiplicities:
        z = rng.standard_normal((k, k)) + 1j * rng.standard_normal((k, k))
        q, r = np.linalg.qr(z)
        blocks.append(q * (np.diag(r) / np.abs(np.diag(r))))
    return BlockDiagonal(tuple(blocks))


def random_spec(rng: np.random.Generator, max_m: int = 3, max_d: int = 3, eta: float = 1.0) -> BundleSpec:
    """Random spec with entries of ``Y_j`` uniform in the complex unit square."""
    m = int(rng.integers(0, max_m + 1))
    mult = tuple(int(k) for k in rng.integers(1, max_d + 1, size=m + 1))
    blocks = tuple(
        rng.uniform(-1, 1, (mult[j], mult[j - 1])) + 1j * rng.uniform(-1, 1, (mult[j], mult[j - 1]))
        for j in range(1, m + 1)
    )
    return BundleSpec(eta, mult, blocks)
