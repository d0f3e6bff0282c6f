import pytest

from bwp.core import QuadratureConfig
from bwp.geometry import RoomSpec, make_office_layout, make_rect_room
from bwp.propagation import Scenario


@pytest.fixture(scope="session")
def sc28():
    return Scenario(frequency_ghz=28.0)


@pytest.fixture(scope="session")
def sc6():
    return Scenario(frequency_ghz=6.0)


@pytest.fixture(scope="session")
def quad_fast():
    return QuadratureConfig(n_theta=256)


@pytest.fixture(scope="session")
def room20():
    return make_rect_room(RoomSpec(4.0, 5.0))


@pytest.fixture(scope="session")
def office():
    return make_office_layout()
