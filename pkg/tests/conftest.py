import numpy as np
import pytest

from treetrace import TreeParams


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def half():
    """The symmetric reference parameters p=2, ell=alpha=1/2 (alpha*p = 1)."""
    return TreeParams(2, 0.5, 0.5)
