import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

FIXTURES = Path(__file__).parent.parent / "fixtures"


@pytest.fixture(scope="session")
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture(scope="session")
def booking_sample():
    from taskdv.tabular import load_table

    return load_table(FIXTURES / "booking" / "sample.csv")


@pytest.fixture(scope="session")
def sensors_sample():
    from taskdv.tabular import load_table

    return load_table(FIXTURES / "sensors" / "sample.csv")


@pytest.fixture(scope="session")
def mock_backend_factory(fixtures_dir):
    from taskdv.backend import CachingBackend, MockBackend

    def factory():
        return CachingBackend(MockBackend(fixtures_dir / "transcripts"), None)

    return factory
