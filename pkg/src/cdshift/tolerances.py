"""Central tolerance table; every report echoes the effective values."""
from __future__ import annotations

import json
import os
from typing import Optional

DEFAULTS = {
    "cocycle": 1e-9,
    "two_path_multiplier": 1e-10,
    "normalizer_oracle": 1e-10,
    "intertwining": 1e-8,
    "leibnitz": 1e-10,
    "kernel_origin": 1e-12,
    "kernel_invariance": 1e-8,
    "transport_law": 1e-9,
    "hermitian_law": 1e-8,
    "e_matrix_oracle": 1e-12,
    "shift_identity": 1e-10,
    "eta_threshold": 1e-6,
    "decay_exponent": 0.1,
}

ENV_VAR = "CDSHIFT_TOL_FILE"


def load_tolerances(path: Optional[str] = None) -> dict:
    """Defaults overridden by a JSON object from ``path`` or ``$CDSHIFT_TOL_FILE``."""
    tol = dict(DEFAULTS)
    path = path or os.environ.get(ENV_VAR)
    if path:
        with open(path, encoding="utf-8") as fh:
            override = json.load(fh)
        unknown = set(override) - set(DEFAULTS)
        if unknown:
            raise ValueError(f"unknown tolerance keys: {sorted(unknown)}")
        for key, value in override.items():
            if isinstance(value, bool) or not isinstance(value, (int, float)) or value <= 0:
                raise ValueError(f"tolerance {key!r} must be a positive number")
            tol[key] = float(value)
    return tol
