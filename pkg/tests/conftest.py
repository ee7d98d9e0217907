"""Shared fixtures for the toolkit tests"""

import numpy as np
import pytest

from core.config import Constants
from vsie_operator import PermittivityProfile, build_operator


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def small_ball():
    return PermittivityProfile.homogeneous_ball(2.0, 1.0 / 30)


@pytest.fixture
def layered_ball():
    radius = 1.0 / 30
    return PermittivityProfile.layered_ball(eps1=2 + 2j, eps2=3 + 1j, d1=2 * radius / 3, d2=radius / 2, radius=radius)


@pytest.fixture
def ball_operator(small_ball):
    return build_operator(small_ball, 4, Constants.WAVENUMBER)


@pytest.fixture
def out_dir(tmp_path):
    path = tmp_path / "artifacts"
    path.mkdir()
    return path
