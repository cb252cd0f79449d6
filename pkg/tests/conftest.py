import pytest

from querybound.catalog import two_member_instance, zero_instance
from querybound.words import BINARY, Property, Word


def w(text):
    return Word.parse(text, BINARY)


def brute_distance(x: str, members) -> "tuple[int, int]":
    """Independent oracle on plain strings: (min differing positions, n)."""
    return min(sum(a != b for a, b in zip(x, m)) for m in members), len(x)


@pytest.fixture
def two_member():
    return two_member_instance(8)


@pytest.fixture
def zero8():
    return zero_instance(8)


@pytest.fixture
def pair_property():
    return Property.from_strings("01", 8, ["00000000", "11110000"])


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
