import os
from pathlib import Path

import pytest

ROOT = Path(os.environ.get("BREAKLAB_SOURCE_DIR", Path(__file__).resolve().parents[2]))


@pytest.fixture
def scenarios():
    return ROOT / "scenarios"


@pytest.fixture
def schema():
    import json

    return json.loads((ROOT / "docs" / "schema.json").read_text())


@pytest.fixture
def cli():
    exe = os.environ.get("BREAKLAB_CLI")
    if not exe:
        pytest.skip("BREAKLAB_CLI not set")
    return exe
