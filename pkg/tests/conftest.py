import functools
import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(__file__))

from quasiquant.categorical_engine import build_model, run_pipeline  # noqa: E402
from quasiquant.fixtures import FIXTURES  # noqa: E402

FIXTURE_NAMES = ["F0", "F1", "F2", "F3"]


@functools.lru_cache(maxsize=None)
def structure(name):
    return FIXTURES[name]()


@functools.lru_cache(maxsize=None)
def model(name, order=3, crossing="braid"):
    return build_model(structure(name), 4, order + 1, order, crossing=crossing)


@functools.lru_cache(maxsize=None)
def pipeline(name, order=3):
    return run_pipeline(structure(name), order)


@pytest.fixture(params=FIXTURE_NAMES)
def fixture_name(request):
    return request.param
