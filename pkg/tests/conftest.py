"""Shared fixtures: parsed example programs used across the suite."""

import pathlib

import pytest

from dcsharp.parser import parse_program

FIXTURES = pathlib.Path(__file__).parent / "fixtures"


def fixture_text(name: str) -> str:
    return (FIXTURES / name).read_text()


def load_program(name: str, combining_rule: str = "mean"):
    return parse_program(fixture_text(name), combining_rule=combining_rule)


@pytest.fixture
def chain5():
    return load_program("chain5.dcs")


@pytest.fixture
def tree8():
    return load_program("tree8.dcs")


@pytest.fixture
def credit():
    return load_program("credit.dcs")


@pytest.fixture
def constructs():
    return load_program("constructs.dcs")
