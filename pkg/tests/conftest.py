import numpy as np
import pytest

from archvol.arch_process import build_igarch1, build_igarch2, build_lm_arch


@pytest.fixture
def rng():
    return np.random.default_rng(20070101)


@pytest.fixture(scope="session")
def lm_spec():
    return build_lm_arch(4, 512, np.sqrt(2.0), 1560)


@pytest.fixture(scope="session")
def paper_specs(lm_spec):
    return {
        "igarch1": build_igarch1(16),
        "igarch2": build_igarch2(4, 512, 1560),
        "lm": lm_spec,
    }


ACCEPTANCE = {}


@pytest.fixture
def criterion(request):
    """Record ``(ok, detail)`` for an acceptance criterion; printed in the terminal summary."""
    def record(number, ok, detail):
        ACCEPTANCE[number] = (bool(ok), detail)
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[number]
        terminalreporter.write_line(f"AC{number:>2} {'PASS' if ok else 'FAIL'}  {detail}")
