import numpy as np
import pytest

from ablkit.abl import PrePostContext
from ablkit.linalg import Ket
from ablkit.scenarios import three_box


@pytest.fixture(scope="session")
def box_scenario():
    return three_box()


@pytest.fixture(scope="session")
def box_ctx(box_scenario):
    return box_scenario.context


def make_context(rng: np.random.Generator, dim: int, min_overlap: float = 1e-6) -> PrePostContext:
    """Random pre/post context with a non-negligible overlap; rejection keeps
    the postselection reachable."""
    while True:
        a = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
        b = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
        a = a / np.linalg.norm(a)
        b = b / np.linalg.norm(b)
        if abs(np.vdot(b, a)) ** 2 >= min_overlap:
            return PrePostContext(Ket(a), Ket(b))
