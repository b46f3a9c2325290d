"""Shared model fixtures.

The 2D border maps used throughout are the worked parameter sets from the
chaos-analysis chain; their scalar signatures are frozen in the tests that
use them.
"""
import numpy as np
import pytest

from pldyn import Map2D, ShallowPlrnn, StandardPlrnn


@pytest.fixture
def border_map():
    """Homoclinic-certified set: left saddle, right spiral-free piece."""
    return Map2D(a_l=-1.77, a_r=1.5, b_l=-0.9, b_r=-0.75,
                 c=0.6, d=0.15, h1=-0.7, h2=-0.4)


@pytest.fixture
def bistable_map():
    """Same family with a_r=0.3: two-band chaos coexisting with a 3-cycle."""
    return Map2D(a_l=-1.77, a_r=0.3, b_l=-0.9, b_r=-0.75,
                 c=0.6, d=0.15, h1=-0.7, h2=-0.4)


@pytest.fixture
def small_plrnn():
    rng = np.random.default_rng(7)
    return StandardPlrnn.random(4, rng)


@pytest.fixture
def shallow_plrnn():
    rng = np.random.default_rng(11)
    M, H = 3, 5
    A = np.diag(rng.uniform(-0.7, 0.7, size=M))
    W1 = rng.normal(scale=0.4, size=(M, H))
    W2 = rng.normal(scale=0.4, size=(H, M))
    h1 = rng.normal(scale=0.3, size=M)
    h2 = rng.normal(scale=0.3, size=H)
    return ShallowPlrnn(A=A, W1=W1, W2=W2, h1=h1, h2=h2)
