from __future__ import annotations

from pathlib import Path

import pytest

from patternforge.catalog import default_catalog_dir, default_fixtures_dir, load_catalog
from patternforge.dsl import load_model

FIXTURES = default_fixtures_dir()
CATALOG_DIR = default_catalog_dir()


@pytest.fixture(scope="session")
def catalog():
    return load_catalog(CATALOG_DIR)


@pytest.fixture(scope="session")
def fixtures_dir() -> Path:
    return FIXTURES


def model(slug: str, name: str):
    return load_model(FIXTURES / slug / f"{name}.model").graph
