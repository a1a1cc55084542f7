import pytest

from blowuplab.params import validate


def make_params(**overrides):
    raw = dict(p=2.0, n=1, p1=0.2, K0=10.0, A=20.0, T=1e-3,
               eps0=0.012, alpha0=0.3, delta0=0.2, eta0=0.4)
    raw.update(overrides)
    return validate(raw)


@pytest.fixture
def P2():
    """Baseline parameters at p = 2."""
    return make_params()


@pytest.fixture
def P3():
    """Baseline parameters at p = 3."""
    return make_params(p=3.0, p1=0.3)
