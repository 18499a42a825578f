import numpy as np
import pytest

from qrl import kernels

KERNELS = ("controlled_shift", "apply_matrix", "outcome_probabilities", "collapse")


@pytest.fixture(params=sorted(kernels.available_backends()))
def backend(request, monkeypatch):
    """Route every gate and measurement through one kernel implementation."""
    mod = kernels.available_backends()[request.param]
    for name in KERNELS:
        monkeypatch.setattr(kernels, name, getattr(mod, name))
    return request.param


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
