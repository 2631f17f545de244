import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from mspcr import mdscode  # noqa: E402
from mspcr.params import validate  # noqa: E402

# (n, u, k, h, hbar, delta, dbar), construction, q
STACKED_A = dict(n=12, u=2, k=5, h=3, hbar=3, delta=2, dbar=3, q=29)
STACKED_B2 = dict(n=14, u=2, k=5, h=6, hbar=3, delta=2, dbar=3)
STACKED_U3 = dict(n=15, u=3, k=7, h=4, hbar=2, delta=1, dbar=3)
STACKED_S3 = dict(n=12, u=2, k=4, h=2, hbar=2, delta=1, dbar=4)
GROUPED_A = dict(n=16, u=2, k=7, h=3, hbar=3, delta=1, dbar=4, q=37)
GROUPED_TWO = dict(n=24, u=3, k=4, h=12, hbar=6, delta=4, dbar=2)
GROUPED_B2 = dict(n=18, u=2, k=7, h=6, hbar=3, delta=1, dbar=4)


@pytest.fixture(scope="session")
def p_stacked():
    return validate(**STACKED_A)


@pytest.fixture(scope="session")
def p_grouped():
    return validate(**GROUPED_A, construction="grouped")


def make_codeword(params, seed):
    rng = np.random.default_rng(seed)
    return mdscode.encode(mdscode.random_message(params, rng), params)


@pytest.fixture(scope="session")
def cw_stacked(p_stacked):
    return make_codeword(p_stacked, 11)


@pytest.fixture(scope="session")
def cw_grouped(p_grouped):
    return make_codeword(p_grouped, 12)


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("test_acceptance")
    lines = getattr(module, "VERDICTS", [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda x: int(x.split("criterion ")[1].split(":")[0])):
            terminalreporter.write_line(line)
