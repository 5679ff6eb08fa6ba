"""Shared fixtures: tiny hand-checkable systems and bundled cases."""

import numpy as np
import pytest

from ucsm.grid import (Bus, Generator, Line, SystemCase, WindUnit,
                       load_bundled_case)


def make_tiny_case(line_limit: float = 120.0) -> SystemCase:
    """Three-bus ring with two thermal units and one wind unit."""
    return SystemCase(
        buses=(Bus(1, 0.0), Bus(2, 40.0), Bus(3, 35.0)),
        lines=(Line(1, 2, 0.10, line_limit),
               Line(2, 3, 0.12, 120.0),
               Line(1, 3, 0.09, 120.0)),
        generators=(
            Generator(1, 10.0, 80.0, 60.0, 60.0, 2, 1, 300.0, 50.0,
                      20.0, 12.0, 0.02),
            Generator(3, 5.0, 60.0, 50.0, 50.0, 1, 2, 150.0, 40.0,
                      15.0, 20.0, 0.03),
        ),
        wind_units=(WindUnit(2, (5.0, 15.0), (1.0, 4.0)),),
        ref_bus=1,
        name="tiny3",
    )


@pytest.fixture
def tiny_case() -> SystemCase:
    return make_tiny_case()


@pytest.fixture(scope="session")
def sixbus() -> SystemCase:
    return load_bundled_case("sixbus")


@pytest.fixture(scope="session")
def ring3() -> SystemCase:
    return load_bundled_case("ring3")


@pytest.fixture(scope="session")
def grid24() -> SystemCase:
    return load_bundled_case("grid24")


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)
