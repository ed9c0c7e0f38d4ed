import numpy as np
import pytest

from foilgen.data import fixture_paths
from foilgen.denoiser import DenoiserConfig
from foilgen.geometry import canonicalize, read_profile

# small enough for unit tests to run in well under a second per forward pass
TINY = DenoiserConfig(base_width=8, depth=3, time_embed_dim=16, cond_embed_dim=16, fused_dim=16)

ACCEPTANCE_LINES: list = []


@pytest.fixture(scope="session")
def fixture_profiles():
    return [canonicalize(read_profile(p)) for p in fixture_paths()]


@pytest.fixture(scope="session")
def fixture_samples(fixture_profiles):
    return np.stack([np.stack([p.y[:100], p.y[100:]]) for p in fixture_profiles])


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
