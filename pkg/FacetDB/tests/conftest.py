from os.path import dirname, join

import pytest

from FacetDB.core import Label
from FacetDB.evaluator import Engine


@pytest.fixture
def data_dir():
    return join(dirname(__file__), "data")


@pytest.fixture
def calendar(data_dir):
    """Source and table files of the calendar example"""
    with open(join(data_dir, "calendar.fdb"), encoding="utf-8") as f:
        source = f.read()
    tables = [join(data_dir, "Event.tbl"), join(data_dir, "EventGuest.tbl")]
    return source, tables


@pytest.fixture
def labels():
    """Four labels k1..k4 in creation order"""
    return [Label(i, "k%d" % i) for i in range(1, 5)]


@pytest.fixture
def engine():
    return Engine(pruning=False, trace=False)
