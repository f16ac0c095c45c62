import sys

import numpy as np
import pytest
import torch

from tryon_nas.synthdata import make_sample


@pytest.fixture(autouse=True)
def _seed():
    torch.manual_seed(0)


@pytest.fixture(scope="session")
def tiny_samples():
    """One sample per category at 64x48 (h x w)."""
    cats = ["short_sleeve", "long_sleeve", "sling_vest", "pants", "skirt"]
    return [make_sample(c, (64, 48), 100 + i) for i, c in enumerate(cats)]


@pytest.fixture
def rng():
    return np.random.default_rng(0)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance")
    for line in mod.RESULTS:
        terminalreporter.write_line(line)
