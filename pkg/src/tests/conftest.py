import json
import pathlib
import sys

ROOT = pathlib.Path(__file__).resolve().parents[2]
if str(ROOT) not in sys.path:
    sys.path.append(str(ROOT))

import numpy as np
import pytest

from src.services.counterexample_service import CounterexampleService
from src.services.logmeans_service import LogMeanService
from src.services.norm_service import NormService

FIXTURES = pathlib.Path(__file__).resolve().parent / "fixtures"


@pytest.fixture(scope="session")
def baselines():
    return json.loads((FIXTURES / "baselines.json").read_text())


@pytest.fixture(scope="session")
def log_means():
    return LogMeanService()


@pytest.fixture(scope="session")
def norms():
    return NormService()


@pytest.fixture(scope="session")
def counterexamples(log_means, norms):
    return CounterexampleService(log_means, norms)


@pytest.fixture()
def rng():
    return np.random.default_rng(20240611)
