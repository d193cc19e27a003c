import numpy as np
import pytest

from cli.config import settings
from modules.hamlib.benchmarks import make_single_qubit


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def single_qubit():
    """``H(0.3)``: eigenvalues 0.4 and 1.0, initial overlap ``1/√2``."""
    return make_single_qubit(0.3)


@pytest.fixture
def override_settings(monkeypatch):
    """Temporarily change fields of the shared settings object."""

    def apply(**values):
        for name, value in values.items():
            monkeypatch.setattr(settings, name, value)

    return apply
