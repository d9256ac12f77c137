import pytest

from wsnagg import get_curve


@pytest.fixture(scope="session")
def tiny():
    return get_curve("tiny")


@pytest.fixture(scope="session")
def desk():
    return get_curve("desk")
