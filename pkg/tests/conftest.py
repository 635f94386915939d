from pathlib import Path

import pytest

from capdispatch import compile_dispatch, load_case

ROOT = Path(__file__).resolve().parent.parent
CASES = ROOT / "cases"
GOLDEN = Path(__file__).resolve().parent / "golden"


@pytest.fixture
def widget():
    return compile_dispatch(load_case(CASES / "widget.json"))


@pytest.fixture
def two_bus():
    return compile_dispatch(load_case(CASES / "two_bus.json"))


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(RESULTS):
        ok, detail = RESULTS[key]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'} criterion {key}: {detail}")
