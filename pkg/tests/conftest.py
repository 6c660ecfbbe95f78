import math
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

HADAMARD_POINT = (6, math.pi, 0.8283)
FOUR_CHANNEL_POINT = (4, math.pi, 0.8283)


@pytest.fixture
def hadamard_transfer():
    from qfpkit.core import canonical_transfer

    return canonical_transfer(*HADAMARD_POINT)
