from __future__ import annotations

from pathlib import Path

import pytest

from shexd import build_graph, parse_data, parse_schema
from shexd.engine import CertainTyping

DATA = Path(__file__).parent / "data"

EX = "http://example.org/"
IS = "http://issuetracker.example/ns#"


def load_schema(name: str):
    return parse_schema((DATA / name).read_text(encoding="utf-8"))


def load_graph(name: str):
    return build_graph(parse_data((DATA / name).read_text(encoding="utf-8")))


@pytest.fixture(scope="session")
def issues_schema():
    return load_schema("issues.shex")


@pytest.fixture(scope="session")
def issues_graph():
    return load_graph("issues.ttl")


@pytest.fixture(scope="session")
def issues_certain(issues_schema, issues_graph):
    return CertainTyping(issues_schema, issues_graph)


@pytest.fixture(scope="session")
def boolean_schema():
    return load_schema("boolean.shex")


@pytest.fixture(scope="session")
def boolean_graph():
    return load_graph("boolean.ttl")


@pytest.fixture(scope="session")
def repairing_graph():
    return load_graph("repairing.ttl")
