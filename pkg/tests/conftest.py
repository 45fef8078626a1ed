import pytest

from helpers import line
from rectikit import MeasuredSpace
from rectikit.generators import gen_four_corner_cantor, gen_segment


@pytest.fixture
def line3():
    return line([0.0, 0.5, 1.0])


@pytest.fixture
def square():
    return MeasuredSpace.from_points([[0, 0], [1, 0], [0, 1], [1, 1]])


@pytest.fixture
def two_clusters():
    return line([0.0, 0.1, 0.9, 1.0])


@pytest.fixture(scope="session")
def cantor3():
    return gen_four_corner_cantor(3)


@pytest.fixture(scope="session")
def cantor4():
    return gen_four_corner_cantor(4)


@pytest.fixture(scope="session")
def segment101():
    return gen_segment(101)


def pytest_terminal_summary(terminalreporter):
    from helpers import ACCEPTANCE_LINES

    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for text in ACCEPTANCE_LINES:
            terminalreporter.write_line(text)
