import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cdshift.bundle import random_spec
from cdshift.io import SpecFileError, dump_spec, load_spec, parse_spec, spec_digest
from cdshift.kernel import solve_normalizer

seeds = st.integers(0, 2 ** 32 - 1)


@given(seeds, st.booleans())
def test_round_trip_is_byte_identical(seed, with_normalizer):
    rng = np.random.default_rng(seed)
    spec = random_spec(rng, eta=float(rng.uniform(0.5, 3)))
    norm = solve_normalizer(spec) if with_normalizer else None
    text = dump_spec(spec, norm)
    spec2, norm2 = parse_spec(text)
    assert dump_spec(spec2, norm2) == text
    assert spec_digest(spec2, norm2) == spec_digest(spec, norm)


def test_fixtures_are_normalized(fixtures_dir):
    for path in fixtures_dir.glob("*.json"):
        if path.name == "points.json":
            continue
        spec, norm = load_spec(str(path))
        assert dump_spec(spec, norm) == path.read_text()


def test_real_entries_are_accepted():
    spec, _ = parse_spec('{"eta": 1, "multiplicities": [1, 1], "blocks": [[[2]]]}')
    assert spec.Y(1)[0, 0] == 2.0


def test_line_bundle_needs_no_blocks():
    spec, _ = parse_spec('{"eta": 0.5, "multiplicities": [3]}')
    assert spec.m == 0 and spec.dim == 3


@pytest.mark.parametrize(
    "text, field",
    [
        ('{"multiplicities": [1]}', "eta"),
        ('{"eta": "x", "multiplicities": [1]}', "eta"),
        ('{"eta": 1, "multiplicities": [0]}', "multiplicities"),
        ('{"eta": 1, "multiplicities": [1, 1]}', "blocks"),
        ('{"eta": 1, "multiplicities": [1, 2], "blocks": [[[1, 0]]]}', "blocks[0]"),
        ('{"eta": 1, "multiplicities": [1, 1], "blocks": [[[[1, 2, 3]]]]}', "blocks[0][0][0]"),
        ('{"eta": 1, "multiplicities": [1, 1], "blocks": [[[1]]], "normalizer": [[[1]]]}', "normalizer"),
        ('{"eta": 1, "multiplicities": [1, 1], "blocks": [[[1]]], "normalizer": [[[2]], [[1]]]}', "normalizer"),
    ],
)
def test_shape_errors_carry_field(text, field):
    with pytest.raises(SpecFileError) as info:
        parse_spec(text)
    assert info.value.field == field


def test_syntax_errors_carry_line():
    with pytest.raises(SpecFileError) as info:
        parse_spec('{\n  "eta": 1,\n  "multiplicities": [1,\n}')
    assert info.value.line == 4


def test_unknown_fields_rejected():
    with pytest.raises(SpecFileError, match="unknown"):
        parse_spec('{"eta": 1, "multiplicities": [1], "colour": 3}')
