import numpy as np
import pytest

from fieldaug.augment import SoilBank, build_soil_bank


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def random_image(rng):
    return rng.integers(0, 256, size=(16, 16, 3), dtype=np.uint8)


def make_plant_image(size=24, blob=((8, 16), (8, 16))):
    """Brown base with one saturated green rectangle."""
    img = np.zeros((size, size, 3), np.uint8)
    img[:, :, 0] = 120
    img[:, :, 1] = 90
    img[:, :, 2] = 60
    (v0, v1), (u0, u1) = blob
    img[v0:v1, u0:u1] = (40, 190, 50)
    return img


def make_soil_images(count=3, size=24):
    """Constant brown images; constant channels always pass admission."""
    shades = [(125, 95, 65), (110, 85, 55), (135, 100, 70), (118, 92, 63)]
    return [np.full((size, size, 3), shades[i % len(shades)], np.uint8) for i in range(count)]


@pytest.fixture
def plant_image():
    return make_plant_image()


@pytest.fixture
def soil_bank() -> SoilBank:
    return build_soil_bank(make_soil_images())
