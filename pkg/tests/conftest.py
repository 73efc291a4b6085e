import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from closedtest.closure import HypothesisFamily, LocalTest, build_closure  # noqa: E402
from closedtest.montecarlo import ResamplingConfig  # noqa: E402

EXAMPLE_P = (0.157299, 0.004678, 0.157299)
EXAMPLE_CORR = np.array([[1.0, 0.5, -0.5], [0.5, 1.0, 0.5], [-0.5, 0.5, 1.0]])
EXAMPLE_EDGES = ((1, 2), (1, 3), (2, 3))


@pytest.fixture(scope="session")
def example_family():
    return HypothesisFamily(EXAMPLE_P, ("H1", "H2", "H3"), EXAMPLE_EDGES)


@pytest.fixture(scope="session")
def example_mc_table(example_family):
    cfg = ResamplingConfig(EXAMPLE_CORR, 1_000_000, seed=7)
    return build_closure(example_family, LocalTest("fisher-montecarlo", config=cfg))
