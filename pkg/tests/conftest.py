import math

import pytest

from livsic import (AtomicMeasureModel, FreeHalfLineModel, PaleyWienerModel, SturmLiouvilleModel,
                    ToeplitzSlitModel, build_char)
from livsic.halfplane import default_grid

THREE_ATOMS = [(-1.0, [[1.0]]), (0.0, [[2.0]]), (2.0, [[1.0]])]


def closed_form_models():
    return {
        "paley_wiener": PaleyWienerModel(math.pi),
        "free_half_line": FreeHalfLineModel(),
        "toeplitz_slit": ToeplitzSlitModel(0.5),
        "atomic": AtomicMeasureModel(THREE_ATOMS),
    }


@pytest.fixture(scope="session")
def models():
    return closed_form_models()


@pytest.fixture(scope="session")
def chars(models):
    return {name: build_char(m) for name, m in models.items()}


@pytest.fixture(scope="session")
def sl_model():
    return SturmLiouvilleModel()


@pytest.fixture(scope="session")
def sl_char(sl_model):
    return build_char(sl_model)


def grid_for(model):
    return default_grid(model.exclusions())
