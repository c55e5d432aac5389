import pytest

from helpers import make_config


@pytest.fixture
def baseline():
    """Reference scenario: 40 planes of 40 satellites, moderate failure rate."""
    return make_config()
