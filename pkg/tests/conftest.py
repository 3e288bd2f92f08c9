from pathlib import Path

import numpy as np
import pytest

from rgcache.image import load_image

FIXTURES = Path(__file__).parent / "fixtures"
LOWLIGHT = FIXTURES / "lowlight"
NATURAL = FIXTURES / "natural"


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def lowlight_paths():
    paths = sorted(LOWLIGHT.glob("*.png"))
    assert len(paths) >= 10
    return paths


@pytest.fixture(scope="session")
def lowlight_images(lowlight_paths):
    return {p.name: load_image(p) for p in lowlight_paths}


@pytest.fixture(scope="session")
def small_lowlight(lowlight_images):
    """First three fixtures cropped to 64x64 for the cheaper end-to-end tests."""
    return {k: v[:64, :64].copy() for k, v in list(lowlight_images.items())[:3]}
