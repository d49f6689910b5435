import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cdshift.bundle import BundleSpec, random_spec, spec_from_121
from cdshift.kernel import (
    NormalizerSolution,
    closed_form_normalizer,
    eta_threshold,
    gamma_coefficient,
    gram_matrix,
    hermitian_structure_at,
    kernel_at,
    kernel_at_origin,
    kernel_exists,
    kernel_invariance_residual,
    kernel_value,
    mixed_derivative,
    solve_normalizer,
    transport_kernel,
    transport_residual,
)
from cdshift.moebius import point_section, random_near_identity

from .conftest import scalar_chain

seeds = st.integers(0, 2 ** 32 - 1)


def test_gamma_coefficient_frozen():
    assert gamma_coefficient(1.0, 0, 0) == 1.0
    assert gamma_coefficient(1.0, 1, 0) == 0.5
    assert gamma_coefficient(1.0, 2, 0) == pytest.approx(1 / 12)


def test_chain_normalizer_frozen(chain):
    sol = solve_normalizer(chain)
    assert [p[0, 0].real for p in sol.products] == pytest.approx([1.0, 0.5, 19 / 24])
    assert sol.all_positive


def test_121_normalizer_frozen(spec121):
    p = solve_normalizer(spec121).products
    assert np.allclose(p[1], np.diag([0.75, 1.0]))
    assert p[2][0, 0].real == pytest.approx(1 - 2 / 6 + 1 / 60)


@given(st.floats(0.05, 5), st.floats(0, 3), st.floats(0, 3), st.floats(0, 3))
def test_121_closed_forms(eta, a, b, c):
    p = solve_normalizer(spec_from_121(eta, a, b, c)).products
    assert p[1][0, 0].real == pytest.approx(1 - a * a / (2 * eta), abs=1e-12, rel=1e-12)
    expected = 1 - (b * b + c * c) / (2 * eta + 2) + a * a * b * b / (2 * (2 * eta + 1) * (2 * eta + 2))
    assert p[2][0, 0].real == pytest.approx(expected, abs=1e-12, rel=1e-12)


@given(seeds)
def test_recursion_matches_closed_form(seed):
    rng = np.random.default_rng(seed)
    spec = random_spec(rng, eta=float(rng.uniform(0.2, 3.0)))
    assert solve_normalizer(spec).max_difference(closed_form_normalizer(spec)) <= 1e-10


def test_solution_rejects_non_hermitian():
    with pytest.raises(ValueError):
        NormalizerSolution.from_products([np.eye(1), np.array([[1.0, 1.0], [0.0, 1.0]])])


def test_nonpositive_eta_has_no_kernel():
    ok, witness = kernel_exists(scalar_chain(-1.0, 1.0))
    assert not ok and witness is None
    with pytest.raises(ValueError):
        solve_normalizer(scalar_chain(0.0, 1.0))


def test_m1_scalar_threshold():
    assert kernel_exists(scalar_chain(0.51, 1.0))[0]
    assert not kernel_exists(scalar_chain(0.49, 1.0))[0]
    assert eta_threshold(scalar_chain(1.0, 1.0)) == pytest.approx(0.5, abs=1e-6)


def test_line_bundle_threshold_is_zero():
    assert eta_threshold(BundleSpec(1.0, (1,), ())) == 0.0


def test_kernel_origin_is_identity(spec121):
    k = kernel_at_origin(spec121, solve_normalizer(spec121))
    assert np.allclose(k.value, np.eye(4), atol=1e-12)


def test_scalar_kernel_closed_form():
    spec = BundleSpec(1.3, (1,), ())
    val = kernel_value(spec, solve_normalizer(spec), 0.3, 0.2)
    assert val[0, 0] == pytest.approx((1 - 0.06) ** (-2 * 1.3))


def test_mixed_derivative_against_finite_differences():
    alpha, z, wb, h = 2.5, 0.2 + 0.1j, 0.3 - 0.2j, 1e-5
    f = lambda x, y: (1 - x * y) ** (-alpha)
    fd = (f(z + h, wb + h) - f(z + h, wb - h) - f(z - h, wb + h) + f(z - h, wb - h)) / (4 * h * h)
    assert mixed_derivative(1, 1, alpha, z, wb) == pytest.approx(fd, rel=1e-6)
    assert mixed_derivative(0, 0, alpha, z, wb) == pytest.approx(f(z, wb))


def test_kernel_is_hermitian_in_arguments(spec121):
    p = solve_normalizer(spec121)
    a = kernel_value(spec121, p, 0.3, -0.2j)
    b = kernel_value(spec121, p, -0.2j, 0.3)
    assert np.allclose(a, b.conj().T, atol=1e-13)


@given(seeds)
def test_invariance_and_transport(seed):
    rng = np.random.default_rng(seed)
    spec = random_spec(rng, eta=3.0)
    ok, p = kernel_exists(spec)
    if not ok:
        return
    g = random_near_identity(rng)
    z, w = 0.5 * np.exp(2j * np.pi * rng.uniform()), 0.4 * np.exp(2j * np.pi * rng.uniform())
    assert kernel_invariance_residual(spec, p, g, z, w) <= 1e-8
    assert transport_residual(spec, p, z) <= 1e-9


def test_transport_uses_inverse_boost(chain):
    p = solve_normalizer(chain)
    z = 0.45 + 0.1j
    assert np.allclose(transport_kernel(chain, p, z), kernel_at(chain, p, z, z).value, atol=1e-12)


def test_hermitian_structure_is_inverse(spec121):
    p = solve_normalizer(spec121)
    h = hermitian_structure_at(spec121, p, 0.3j)
    assert np.allclose(h @ kernel_value(spec121, p, 0.3j, 0.3j), np.eye(4), atol=1e-10)


def test_gram_matrix_is_positive(chain):
    pts = [0.0, 0.3, -0.2 + 0.4j, 0.5j]
    gram = gram_matrix(chain, solve_normalizer(chain), pts)
    assert np.allclose(gram, gram.conj().T, atol=1e-12)
    assert np.linalg.eigvalsh(gram).min() > 0
