import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from simbf.geometry import build_layout
from simbf.propagation import LayerStack, arrange_layers, transfer_matrices

settings.register_profile("default", deadline=None, max_examples=60, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def random_complex(rng, *shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)


def small_system(rng, n=2, layers=3, qx=2, qy=3, arrangement="rf-ac-pc", n_ac=1):
    """Small geometry plus a random feasible stack with AC amplitudes spread over the box."""
    geo = build_layout(28e9, n, layers, qx, qy)
    Ws = transfer_matrices(geo)
    kinds = arrange_layers(arrangement, layers - n_ac, n_ac) if arrangement != "pc-only" else arrange_layers("pc-only", layers, 0)
    stack = LayerStack.initial(kinds, qx * qy, rng, ac_phases=rng.uniform(0, 2 * np.pi, qx * qy))
    for ell in stack.ac_layers:
        stack.set_amplitudes(ell, rng.uniform(0.3, 3.0, qx * qy))
    return geo, Ws, stack


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
