import numpy as np
import pytest

from sympsurf.core import SympContext


@pytest.fixture
def rng():
    return np.random.default_rng(20260825)


def make_ctx(n, tol=1e-9):
    return SympContext(n=n, tol=tol)


@pytest.fixture(params=[1, 2, 3])
def ctx(request):
    return make_ctx(request.param)
