"""Shared fixtures: golden files and their parsed contents."""

import json
import pathlib

import pytest

DATA_DIR = pathlib.Path(__file__).parent / "data"


@pytest.fixture(scope="session")
def data_dir():
    return DATA_DIR


@pytest.fixture(scope="session")
def golden_values():
    with open(DATA_DIR / "golden_values.json", "r", encoding="utf-8") as fh:
        return json.load(fh)
