import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(__file__))

from dynunmix import Dims, NoiseSpec, generate_synthetic  # noqa: E402


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def small_scene():
    """Small noisy scene: K=4, L=20, 20x20 pixels, P=3."""
    dims = Dims(4, 20, 400, 3)
    return generate_synthetic(dims, noise=NoiseSpec(seed=7))


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
