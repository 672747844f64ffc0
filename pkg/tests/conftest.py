import math

import pytest
from hypothesis import strategies as st

from geomgate.errors import SingularityError
from geomgate.model import SQRT2, SystemParams


@pytest.fixture
def paper():
    return SystemParams.paper()


def _finite(lo, hi):
    return st.floats(lo, hi, allow_nan=False, allow_infinity=False)


@st.composite
def valid_params(draw):
    """Random parameters in a broadly dispersive regime, rejecting singular draws."""
    nu = draw(_finite(0.0, 50.0))
    delta = draw(_finite(1.0, 100.0)) * draw(st.sampled_from([-1, 1]))
    g = [draw(_finite(0.0, 30.0)) * complex(math.cos(a), math.sin(a))
         for a in (draw(_finite(-math.pi, math.pi)) for _ in range(2))]
    om = [draw(_finite(0.0, 200.0)) * complex(math.cos(a), math.sin(a))
          for a in (draw(_finite(-math.pi, math.pi)) for _ in range(2))]
    Delta = [draw(_finite(500.0, 5000.0)) * draw(st.sampled_from([-1, 1])) for _ in range(2)]
    for eta in (delta, delta - SQRT2 * nu, delta + SQRT2 * nu):
        if abs(eta) < 1e-3:
            from hypothesis import reject

            reject()
    try:
        return SystemParams.build(nu=nu, g0=g[0], g1=g[1], omega0=om[0], omega1=om[1],
                                  Delta0=Delta[0], Delta1=Delta[1], delta=delta)
    except SingularityError:
        from hypothesis import reject

        reject()


ACCEPTANCE_RESULTS = {}


def record_criterion(number, title, passed, detail=""):
    """Store one acceptance line; printed in the terminal summary."""
    ACCEPTANCE_RESULTS[number] = (title, bool(passed), detail)
    return passed


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE_RESULTS):
        title, passed, detail = ACCEPTANCE_RESULTS[number]
        terminalreporter.write_line(
            f"[{'PASS' if passed else 'FAIL'}] {number}. {title}" + (f" -- {detail}" if detail else ""))
