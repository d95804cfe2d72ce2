import numpy as np
import pytest

from aaspectra.aaindex import load_aaindex
from aaspectra.propgroups import build_descriptors

# criterion number -> (passed, detail); filled by test_acceptance.py
ACCEPTANCE_RESULTS: dict[int, tuple[bool, str]] = {}


@pytest.fixture(scope="session")
def aaindex_records():
    return load_aaindex()


@pytest.fixture(scope="session")
def descriptor_table(aaindex_records):
    return build_descriptors(aaindex_records)


@pytest.fixture
def rng():
    return np.random.default_rng(20240521)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(ACCEPTANCE_RESULTS):
        ok, detail = ACCEPTANCE_RESULTS[num]
        terminalreporter.write_line(f"criterion {num}: {'PASS' if ok else 'FAIL'}  {detail}")
