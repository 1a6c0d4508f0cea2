import numpy as np
import pytest

from urbantherm import LabelMask, TemperatureField


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def quad_mask():
    """32x32 mask split into four 16x16 quadrants: classes 0,1,2,3."""
    classes = np.zeros((32, 32), dtype=np.uint8)
    classes[:16, 16:] = 1
    classes[16:, :16] = 2
    classes[16:, 16:] = 3
    return LabelMask(classes)


def corrected_field(kelvin, valid=None):
    return TemperatureField(
        kelvin=np.asarray(kelvin, dtype=np.float64),
        valid=np.ones(np.shape(kelvin), dtype=bool) if valid is None else valid,
        emissivity_corrected=True,
    )


@pytest.fixture
def make_corrected():
    return corrected_field
