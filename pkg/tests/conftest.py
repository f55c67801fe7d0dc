import random

import pytest

from tagperm.crypto.group import DESK, TOY
from tagperm.world import World


@pytest.fixture
def rng():
    return random.Random(1234)


@pytest.fixture(params=["toy", "desk"])
def group(request):
    return TOY if request.param == "toy" else DESK


@pytest.fixture
def world(group):
    w = World(group, seed=7)
    w.add_domains("A", "B", "C")
    w.new_tag("t")
    return w


@pytest.fixture
def owned(world):
    world.take_ownership("A", "t")
    return world


def pytest_terminal_summary(terminalreporter):
    from tests import test_acceptance  # noqa: PLC0415

    if test_acceptance.RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in test_acceptance.RESULTS:
            terminalreporter.write_line(line)
