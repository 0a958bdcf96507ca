import pytest

from fhtoeplitz.cli import bank_config, bank_names
from fhtoeplitz.symbols import FHSymbol

BANK = {name: bank_config(name) for name in bank_names()}


@pytest.fixture(params=sorted(BANK))
def bank_pair(request):
    cfg = BANK[request.param]
    return cfg.f1, cfg.f2


@pytest.fixture
def c1ii_pair():
    return FHSymbol(0.25), FHSymbol(-0.25)


def pytest_terminal_summary(terminalreporter):
    import sys
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
