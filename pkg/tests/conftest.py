import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

settings.register_profile(
    "default", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


def unit(v):
    v = np.asarray(v, dtype=float)
    return v / np.linalg.norm(v)


@st.composite
def sphere_points(draw, n=2):
    """Uniform-ish points of S^n drawn from a Gaussian seed vector."""
    v = draw(st.lists(st.floats(-1, 1, allow_nan=False), min_size=n + 1, max_size=n + 1))
    v = np.array(v)
    if np.linalg.norm(v) < 1e-3:
        v = np.eye(n + 1)[0]
    return unit(v)


@st.composite
def tilde_points(draw, n=2, span=6.0):
    from eincausal.ein_model import EinTildePoint

    return EinTildePoint(draw(sphere_points(n)), draw(st.floats(-span, span, allow_nan=False)))


@pytest.fixture
def rng():
    from eincausal.sampling import make_rng

    return make_rng(12345)


E1 = np.array([1.0, 0.0, 0.0])
E2 = np.array([0.0, 1.0, 0.0])
E3 = np.array([0.0, 0.0, 1.0])
