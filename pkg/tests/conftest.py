import pathlib

import pytest

from pgtransform.io import load_graph
from pgtransform.parser import parse_transformation

FIXTURES = pathlib.Path(__file__).parent / "fixtures"


def fixture_path(name: str) -> pathlib.Path:
    return FIXTURES / name


def fixture_text(name: str) -> str:
    return fixture_path(name).read_text()


@pytest.fixture(scope="session")
def relational_graph():
    return load_graph(fixture_path("relational.json"))


@pytest.fixture(scope="session")
def normalize_rules():
    return parse_transformation(fixture_text("normalize.gpt"))


@pytest.fixture(scope="session")
def normalize_fixed_rules():
    return parse_transformation(fixture_text("normalize_fixed.gpt"))


@pytest.fixture(scope="session")
def normalize_single_rule():
    return parse_transformation(fixture_text("normalize_single.gpt"))[0]
