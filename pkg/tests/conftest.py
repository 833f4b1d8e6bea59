import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from hmrag.providers import LocalProvider


@pytest.fixture
def provider():
    return LocalProvider(seed=0)
