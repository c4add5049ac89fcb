import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from omnisafe.base_model import BaseParams, RollerFrictionParams


@pytest.fixture
def params() -> BaseParams:
    return BaseParams()

@pytest.fixture
def friction() -> RollerFrictionParams:
    return RollerFrictionParams()

@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240817)
