import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "integration"))

from test_cli import toy_dataset  # noqa: E402


@pytest.fixture
def toy(tmp_path):
    return toy_dataset(tmp_path)
