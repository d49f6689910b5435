from pathlib import Path

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from cdshift.bundle import BundleSpec, spec_from_121

settings.register_profile("cdshift", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("cdshift")

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"


def scalar_chain(eta, *ys) -> BundleSpec:
    return BundleSpec(eta, (1,) * (len(ys) + 1), tuple(np.array([[complex(y)]]) for y in ys))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def chain():
    return scalar_chain(1.0, 1.0, 1.0)


@pytest.fixture
def spec121():
    return spec_from_121(2.0, 1.0, 1.0, 1.0)


@pytest.fixture
def fixtures_dir():
    return FIXTURES
