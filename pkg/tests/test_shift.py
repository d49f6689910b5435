import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cdshift.bundle import BundleSpec, random_block_unitary, conjugate, random_spec, spec_from_121
from cdshift.kernel import kernel_exists
from cdshift.shift import (
    ContractionClass,
    IllConditionedError,
    RecoveryError,
    asymptotic_diagnostics,
    basis_coefficient,
    closed_form_power_norm,
    contraction_class,
    diagonal_weights_bounded,
    e_matrix,
    e_matrix_via_gamma,
    first_level_exceeding,
    ktype_residual,
    level_dim,
    power_norms,
    realize,
    recover_parameters,
    shift_block,
    shift_identity_residual,
    similar,
    weight_profile,
)

from .conftest import scalar_chain

seeds = st.integers(0, 2 ** 32 - 1)


def test_e_matrix_frozen():
    e = e_matrix(scalar_chain(1.0, 1.0), 1)
    assert np.allclose(e, [[math.sqrt(2), 0], [math.sqrt(2) / 2, 1]])


def test_basis_coefficient_diagonal():
    # c(eta, j, j, n) is the norm factor of the monomial of degree n - j
    assert basis_coefficient(1.0, 0, 0, 3) == pytest.approx(math.sqrt(4.0))
    assert basis_coefficient(0.5, 1, 1, 1) == pytest.approx(1.0)


def test_e_matrix_two_paths(rng):
    for _ in range(10):
        spec = random_spec(rng, eta=float(rng.uniform(0.3, 3)))
        for n in (0, 1, 2, 7, 30):
            a, b = e_matrix(spec, n), e_matrix_via_gamma(spec, n)
            assert np.max(np.abs(a - b)) <= 1e-12 * max(1.0, np.max(np.abs(a)))


def test_scalar_weights_closed_form():
    spec = BundleSpec(1.0, (1,), ())
    for n in range(6):
        assert shift_block(spec, n)[0, 0].real == pytest.approx(math.sqrt((n + 1) / (2 + n)))


def test_hardy_weights_are_one():
    spec = BundleSpec(0.5, (1,), ())
    assert all(realize(spec, 40).block(n)[0, 0] == 1.0 for n in range(40))


def test_realization_shapes(spec121):
    real = realize(spec121, 5)
    assert real.dims == (1, 3, 4, 4, 4, 4)
    assert real.block(0).shape == (3, 1)
    assert real.block(3).shape == (4, 4)
    assert level_dim(spec121, 1) == 3


def test_blocks_are_lower_triangular(spec121):
    m = shift_block(spec121, 5)
    assert np.allclose(np.triu(m, 1), 0)


@given(seeds, st.integers(0, 25))
def test_shift_identity(seed, n):
    rng = np.random.default_rng(seed)
    spec = random_spec(rng, eta=2.0)
    assert shift_identity_residual(spec, n) <= 1e-10


def test_ktype_structure(chain):
    for n in (0, 1, 4):
        assert ktype_residual(chain, n, 0.9) <= 1e-10


def test_ill_conditioning_names_the_level():
    spec = scalar_chain(1.0, 1e13)
    with pytest.raises(IllConditionedError, match="E\\("):
        shift_block(spec, 3)


def test_diagnostics_chain(chain):
    d = asymptotic_diagnostics(chain, 400)
    assert abs(d.decay_exponent + 1) <= 0.1
    assert d.converged
    assert d.sup_norm <= 1.0 + 1e-12


def test_diagnostics_preconditions():
    with pytest.raises(ValueError):
        asymptotic_diagnostics(scalar_chain(1.0, 1.0), 10)
    with pytest.raises(ValueError):
        asymptotic_diagnostics(scalar_chain(0.2, 1.0), 60)


def test_recover_parameters(spec121):
    eta, mult = recover_parameters(weight_profile(spec121, 220))
    assert eta == pytest.approx(2.0, abs=1e-6)
    assert mult == [1, 2, 1]


def test_recover_needs_long_profile(chain):
    with pytest.raises(RecoveryError):
        recover_parameters(weight_profile(chain, 50))


def test_similarity_panel(rng):
    a = spec_from_121(2.0, 1.0, 1.0, 1.0)
    b = spec_from_121(2.0, 0.5, 1.5, 0.3)
    assert similar(a, b)
    assert similar(a, conjugate(a, random_block_unitary((1, 2, 1), rng)))
    assert not similar(a, a.with_eta(2.5))
    assert not similar(scalar_chain(2.0, 1.0), scalar_chain(2.0, 1.0, 1.0))


def test_contraction_dichotomy():
    assert contraction_class(BundleSpec(0.5, (1,), ())) is ContractionClass.SIMILAR_TO_CONTRACTION
    assert contraction_class(BundleSpec(0.25, (1,), ())) is ContractionClass.NOT_POWER_BOUNDED


def test_power_norms_follow_closed_form():
    spec = BundleSpec(0.25, (1,), ())
    norms = power_norms(spec, 30)
    assert norms == pytest.approx([closed_form_power_norm(0.25, n) for n in range(31)], rel=1e-10)


def test_first_level_exceeding():
    n = first_level_exceeding(0.1, 10.0)
    assert closed_form_power_norm(0.1, n) > 10 >= closed_form_power_norm(0.1, n - 1)


def test_weights_bounded_above_half(spec121):
    assert diagonal_weights_bounded(spec121, 200)
    assert not diagonal_weights_bounded(BundleSpec(0.3, (1,), ()), 50)


def test_norms_bounded_with_vanishing_increments(spec121):
    d = asymptotic_diagnostics(spec121, 1000)
    assert np.isfinite(d.sup_norm)
    assert abs(d.norms[-1] - d.norms[-2]) <= 1e-5
    n = d.levels.astype(float)
    sel = n >= 50
    assert np.max(n[sel] * d.deviations[sel]) <= 10.0
