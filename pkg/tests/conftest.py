import math

import pytest

from nfzopt import (
    AngularGrid,
    BoundedPowerLaw,
    ConstantPattern,
    HomogeneousField,
    UlaPattern,
    default_breaks,
    banded_field,
)

OUTER = 1000.0


@pytest.fixture(scope="session")
def ula():
    return UlaPattern(8, 0.25)


@pytest.fixture(scope="session")
def loss():
    return BoundedPowerLaw(2.5)


@pytest.fixture(scope="session")
def pfield():
    return banded_field()


@pytest.fixture(scope="session")
def default_grid(ula, pfield):
    tb, pb = default_breaks(ula, pfield)
    return AngularGrid(128, 256, tb, pb)


@pytest.fixture(scope="session")
def coarse_grid(ula, pfield):
    tb, pb = default_breaks(ula, pfield)
    return AngularGrid(32, 64, tb, pb)


@pytest.fixture(scope="session")
def iso():
    return ConstantPattern(1.0)


@pytest.fixture(scope="session")
def homog():
    return HomogeneousField(1e-7)


def hemisphere_closed_form(lam, alpha, r, gain=1.0, power=1.0):
    """Independent closed form of the hemisphere integral with bounded power-law loss."""
    if r <= 1:
        radial = r**3 / 3
    elif alpha == 3:
        radial = 1 / 3 + math.log(r)
    else:
        radial = 1 / 3 + (r ** (3 - alpha) - 1) / (3 - alpha)
    return 2 * math.pi * lam * gain * power * radial


# acceptance verdicts, echoed after the run even when output is captured
ACCEPTANCE: list[str] = []


@pytest.fixture
def verdict(capsys):
    def report(number: int, ok: bool, detail: str) -> bool:
        line = f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}"
        ACCEPTANCE.append(line)
        with capsys.disabled():
            print(f"\n{line}")
        return ok

    return report


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
