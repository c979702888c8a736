import pytest

from trusttoken.puf_model import PufParams, new_chip


@pytest.fixture(scope="session")
def default_params():
    return PufParams()


@pytest.fixture(scope="session")
def chip(default_params):
    return new_chip(7, default_params)
