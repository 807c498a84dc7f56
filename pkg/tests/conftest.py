import json
import math
from pathlib import Path

import pytest

from racelab.modchar import build_modulus, character_group

ORACLE_FILE = Path(__file__).parent / "oracles" / "oracle_values.json"


@pytest.fixture(scope="session")
def oracles():
    return {k: float(v) for k, v in json.loads(ORACLE_FILE.read_text()).items()}


@pytest.fixture(scope="session")
def group():
    cache = {}

    def get(q):
        if q not in cache:
            cache[q] = character_group(build_modulus(q))
        return cache[q]

    return get


@pytest.fixture(scope="session")
def zeros4(group):
    """Computed zeros of the mod-4 character up to height 1000."""
    from racelab.lfzeros import bulk_zeros

    return bulk_zeros(group(4), 1000.0)


@pytest.fixture(scope="session")
def zeros101_small(group):
    from racelab.zerodata import synth_zeros

    return synth_zeros(group(101), 200.0, 2)


@pytest.fixture(scope="session")
def zeros101_large(group):
    from racelab.zerodata import synth_zeros

    return synth_zeros(group(101), 1.0e4, 1)


@pytest.fixture(scope="session")
def model4(zeros4, group):
    from racelab.randmodel import race_model

    return race_model(zeros4, group(4), (3, 1))


@pytest.fixture(scope="session")
def sieve4():
    from racelab.empirical import sieve

    return sieve(10**7, build_modulus(4))


def rel(a, b):
    return abs(a - b) / max(abs(b), 1e-300)


def isclose(a, b, tol):
    return math.isclose(a, b, rel_tol=0.0, abs_tol=tol)


def pytest_terminal_summary(terminalreporter):
    mod = __import__("sys").modules.get("test_acceptance") or __import__("sys").modules.get("tests.test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[n])
