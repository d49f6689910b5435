"""JSON spec files: complex entries are ``[re, im]`` pairs, matrices are row-major."""
from __future__ import annotations

import hashlib
import json
from typing import Optional

import numpy as np

from .bundle import BundleSpec
from .kernel import NormalizerSolution


class SpecFileError(ValueError):
    def __init__(self, message: str, source: str = "<spec>", line: Optional[int] = None, field: Optional[str] = None):
        where = source
        if line is not None:
            where += f":{line}"
        if field is not None:
            where += f" [{field}]"
        super().__init__(f"{where}: {message}")
        self.source, self.line, self.field = source, line, field


def _complex(value, field, source) -> complex:
    if isinstance(value, bool):
        raise SpecFileError("expected a number or [re, im] pair", source, field=field)
    if isinstance(value, (int, float)):
        return complex(value)
    if isinstance(value, list) and len(value) == 2 and all(
        isinstance(v, (int, float)) and not isinstance(v, bool) for v in value
    ):
        return complex(value[0], value[1])
    raise SpecFileError(f"expected a number or [re, im] pair, got {value!r}", source, field=field)


def parse_matrix(rows, field: str, source: str = "<spec>") -> np.ndarray:
    if not isinstance(rows, list) or not rows or not all(isinstance(r, list) for r in rows):
        raise SpecFileError("matrix must be a non-empty list of rows", source, field=field)
    width = len(rows[0])
    out = np.zeros((len(rows), width), dtype=complex)
    for i, row in enumerate(rows):
        if len(row) != width:
            raise SpecFileError(f"row {i} has length {len(row)}, expected {width}", source, field=field)
        for k, v in enumerate(row):
            out[i, k] = _complex(v, f"{field}[{i}][{k}]", source)
    return out


def parse_complex(value, field: str, source: str = "<points>") -> complex:
    return _complex(value, field, source)


def parse_spec(text: str, source: str = "<spec>"):
    """Parse a spec document into ``(BundleSpec, NormalizerSolution or None)``."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SpecFileError(exc.msg, source, line=exc.lineno) from None
    if not isinstance(doc, dict):
        raise SpecFileError("top level must be an object", source, line=1)
    for key in ("eta", "multiplicities"):
        if key not in doc:
            raise SpecFileError("missing required field", source, field=key)
    unknown = set(doc) - {"eta", "multiplicities", "blocks", "normalizer"}
    if unknown:
        raise SpecFileError(f"unknown fields {sorted(unknown)}", source)
    eta = doc["eta"]
    if isinstance(eta, bool) or not isinstance(eta, (int, float)):
        raise SpecFileError("eta must be a real number", source, field="eta")
    mult = doc["multiplicities"]
    if not isinstance(mult, list) or not mult or not all(
        isinstance(k, int) and not isinstance(k, bool) and k >= 1 for k in mult
    ):
        raise SpecFileError("multiplicities must be a non-empty list of positive integers", source, field="multiplicities")
    raw_blocks = doc.get("blocks", [])
    if not isinstance(raw_blocks, list) or len(raw_blocks) != len(mult) - 1:
        raise SpecFileError(f"expected {len(mult) - 1} blocks", source, field="blocks")
    blocks = []
    for j, raw in enumerate(raw_blocks, start=1):
        field = f"blocks[{j - 1}]"
        y = parse_matrix(raw, field, source)
        if y.shape != (mult[j], mult[j - 1]):
            raise SpecFileError(f"Y_{j} has shape {y.shape}, expected {(mult[j], mult[j - 1])}", source, field=field)
        blocks.append(y)
    spec = BundleSpec(float(eta), tuple(mult), tuple(blocks))
    normalizer = None
    if "normalizer" in doc:
        raw = doc["normalizer"]
        if not isinstance(raw, list) or len(raw) != len(mult):
            raise SpecFileError(f"expected {len(mult)} normalizer products", source, field="normalizer")
        prods = []
        for j, p in enumerate(raw):
            field = f"normalizer[{j}]"
            pm = parse_matrix(p, field, source)
            if pm.shape != (mult[j], mult[j]):
                raise SpecFileError(f"P_{j} has shape {pm.shape}, expected {(mult[j], mult[j])}", source, field=field)
            prods.append(pm)
        try:
            normalizer = NormalizerSolution.from_products(prods)
        except ValueError as exc:
            raise SpecFileError(str(exc), source, field="normalizer") from None
    return spec, normalizer


def load_spec(path: str):
    with open(path, encoding="utf-8") as fh:
        return parse_spec(fh.read(), source=path)


def encode_complex(z) -> list:
    z = complex(z)
    return [float(z.real), float(z.imag)]


def encode_matrix(a) -> list:
    return [[encode_complex(v) for v in row] for row in np.atleast_2d(np.asarray(a))]


def dump_spec(spec: BundleSpec, normalizer: Optional[NormalizerSolution] = None) -> str:
    """Normalized serialization; ``dump_spec(*parse_spec(dump_spec(s)))`` is byte-identical."""
    lines = ["{", f'  "eta": {json.dumps(spec.eta)},', f'  "multiplicities": {json.dumps(list(spec.multiplicities))},']
    blocks = [json.dumps(encode_matrix(y)) for y in spec.blocks]
    tail = "," if normalizer is not None else ""
    if blocks:
        lines.append('  "blocks": [')
        lines.extend(f"    {b}{',' if i < len(blocks) - 1 else ''}" for i, b in enumerate(blocks))
        lines.append(f"  ]{tail}")
    else:
        lines.append(f'  "blocks": []{tail}')
    if normalizer is not None:
        prods = [json.dumps(encode_matrix(p)) for p in normalizer.products]
        lines.append('  "normalizer": [')
        lines.extend(f"    {p}{',' if i < len(prods) - 1 else ''}" for i, p in enumerate(prods))
        lines.append("  ]")
    lines.append("}")
    return "\n".join(lines) + "\n"


def spec_digest(spec: BundleSpec, normalizer: Optional[NormalizerSolution] = None) -> str:
    return hashlib.sha256(dump_spec(spec, normalizer).encode()).hexdigest()[:16]
