import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from gridsynth.space import box_space

import reduced as reduced_mod

# Used throughout: a thickness-2 chicken frame around a pebble core, and a
# pig frame variant; colours alternate along x (resp. y).
CHICKEN_FRAME = (0, 0, 1, 5, 1, 6, 1, 0, 2, 0, 0, 3)
PIG_FRAME = (0, 0, 0, 5, 1, 6, 1, 1, 2, 0, 1, 3)


@pytest.fixture(scope="session")
def space():
    return box_space()


@pytest.fixture(scope="session")
def reduced_space():
    return reduced_mod.build_space()
