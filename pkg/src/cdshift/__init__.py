"""Homogeneous holomorphic Hermitian bundles over the disc and their Cowen-Douglas operators."""

__version__ = "0.1.0"

from .bundle import BundleSpec, decompose, is_irreducible
from .kernel import kernel_at, kernel_exists, solve_normalizer
from .moebius import MoebiusElement
from .shift import contraction_class, realize, similar

__all__ = [
    "BundleSpec",
    "MoebiusElement",
    "contraction_class",
    "decompose",
    "is_irreducible",
    "kernel_at",
    "kernel_exists",
    "realize",
    "similar",
    "solve_normalizer",
]
