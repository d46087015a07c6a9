"""Shared test fixtures for the GAWNO test suite."""

import numpy as np
import pytest
from gawno.autodiff import get_tape
from gawno.config import RunConfig
from gawno.networks import DiscriminatorSpec, GeneratorSpec


@pytest.fixture
def fresh_config(tmp_path, monkeypatch):
    """Create a RunConfig with reset singleton state pointed at a temp directory."""
    RunConfig._instance = None
    monkeypatch.setenv("GAWNO_BASE_DIR", str(tmp_path))
    cfg = RunConfig()
    yield cfg
    RunConfig._instance = None


@pytest.fixture(autouse=True)
def clean_tape():
    """Every test starts and ends with an empty, enabled tape."""
    tape = get_tape()
    tape.clear()
    tape.enabled = True
    yield
    tape.clear()
    tape.enabled = True


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def tiny_spec():
    """Two variables, n=16, two-level U-Net: fast enough for gradient checks."""
    return GeneratorSpec(
        features=2, length=16, lifted_width=2, q_width=4, wavelet="db1", levels=2, depth=2
    )


@pytest.fixture
def tiny_disc_spec():
    return DiscriminatorSpec(
        features=2,
        length=16,
        lifted_width=2,
        q_width=4,
        wavelet="db1",
        levels=2,
        depth=2,
        head_width=4,
    )


@pytest.fixture
def small_spec():
    """The F=2, n=64, C0=4 network with the full four-block U-Net."""
    return GeneratorSpec(features=2, length=64, lifted_width=4, q_width=8, wavelet="db6")


@pytest.fixture
def small_disc_spec():
    return DiscriminatorSpec(
        features=2, length=64, lifted_width=4, q_width=8, wavelet="db6", head_width=8
    )
