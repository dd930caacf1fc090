from __future__ import annotations

import pytest

from dcfci.citest import OraclePosteriorProvider

import fixtures


@pytest.fixture
def table_provider():
    return fixtures.TableProvider()


@pytest.fixture
def oracle_provider():
    return OraclePosteriorProvider(fixtures.TRUE_MAG)
