from pathlib import Path

import pytest

import creditbounds

FIXTURES = Path(creditbounds.__file__).parent / "fixtures"


@pytest.fixture
def fixtures_dir() -> Path:
    return FIXTURES
