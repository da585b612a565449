import pytest

from reviewforge.gateway import build_gateway


@pytest.fixture
def mock_gateway():
    return build_gateway({"provider": "mock"})
