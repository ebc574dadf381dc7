import pytest

from cfhb.params import ConverterParams, ModulationScheme, derive
from cfhb.sweep import sweep_half_cycle


@pytest.fixture(scope="session")
def derived():
    return derive(ConverterParams())


@pytest.fixture(scope="session")
def zero_ripple():
    return derive(ConverterParams(l1=0.1, l2=0.1))


@pytest.fixture(scope="session")
def idcpsm(derived):
    return ModulationScheme.idcpsm_matched(derived)


@pytest.fixture(scope="session")
def dcpsm():
    return ModulationScheme.dcpsm()


@pytest.fixture(scope="session")
def idcpsm_profile(derived, idcpsm):
    return sweep_half_cycle(derived, idcpsm)


@pytest.fixture(scope="session")
def dcpsm_profile(derived, dcpsm):
    return sweep_half_cycle(derived, dcpsm)


# Acceptance verdicts, printed as one line per criterion at the end of the run.
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[number]
        terminalreporter.write_line(f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
