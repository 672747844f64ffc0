import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import valid_params
from geomgate.errors import ParameterError, SingularityError
from geomgate.model import (
    BASES,
    SQRT2,
    EffectiveCouplings,
    LogicalBasis,
    SystemParams,
    chi_table,
    derive_couplings,
    eta_values,
    regime_report,
)

# 40-digit mpmath evaluation of the coupling formulas for the example parameters
PAPER_LAMBDA = {
    "lambda0": -0.28121182368769781283,
    "lambda1": -0.20009301264601641901,
    "lambda2": -0.19763121336562579154,
    "lambda0p": -1.3752391728588758939,
    "lambda1p": -1.0023339998103369256,
    "lambda2p": -0.94590583549566511659,
}
PAPER_ETA1 = -2.787786386609099704
PAPER_ETA2 = 72.787786386609099704


def test_paper_couplings(paper):
    lam = derive_couplings(paper).as_dict()
    for key, expected in PAPER_LAMBDA.items():
        assert lam[key] == pytest.approx(expected, rel=1e-14, abs=0)
        assert lam[key].imag == 0


def test_zero_drive_gives_zero_couplings():
    p = SystemParams.build(nu=26.72, g0=20, g1=20, omega0=0, omega1=0,
                           Delta0=3000, Delta1=600, delta=35)
    assert all(v == 0 for v in derive_couplings(p).as_dict().values())
    chi = chi_table(derive_couplings(p))
    assert np.all(chi.values == 0)


def test_symmetric_drive_makes_primed_equal():
    p = SystemParams.build(nu=10, g0=5 + 1j, g1=5 + 1j, omega0=80, omega1=80,
                           Delta0=900, Delta1=900, delta=20)
    lam = derive_couplings(p)
    assert lam.unprimed == lam.primed


def test_chi_table_paper(paper):
    chi = chi_table(derive_couplings(paper))
    assert chi["11"][1] == pytest.approx(-2.0046679996206738512, rel=1e-14)
    assert chi["00"][1] == pytest.approx(-0.40018602529203283802, rel=1e-14)
    assert chi["01"][0] == pytest.approx(1.0940273491711780811, rel=1e-14)


def test_chi_table_structure():
    lam = EffectiveCouplings(1 + 2j, 3, 5j, 7, 11 - 1j, 13)
    chi = chi_table(lam)
    assert tuple(chi["00"]) == (0, 6, 10j)
    assert tuple(chi["01"]) == (1 + 2j - 7, 14 - 1j, 13 + 5j)
    assert tuple(chi["10"]) == (7 - (1 + 2j), 14 - 1j, 13 + 5j)
    assert tuple(chi["11"]) == (0, 22 - 2j, 26)


def test_equal_c0_couplings_cancel():
    chi = chi_table(EffectiveCouplings(0.5, 1, 2, 0.5, 3, 4))
    assert chi["01"][0] == 0 and chi["10"][0] == 0


def test_eta_values(paper):
    eta = eta_values(paper)
    assert eta.eta0 == 35
    assert eta.eta1 == pytest.approx(PAPER_ETA1, rel=1e-15)
    assert eta.eta2 == pytest.approx(PAPER_ETA2, rel=1e-15)
    assert eta.eta1 + eta.eta2 == pytest.approx(2 * eta.eta0, rel=1e-15)


def test_eta_degenerate_without_fiber():
    p = SystemParams.build(nu=0, g0=1, g1=1, omega0=1, omega1=1, Delta0=100, Delta1=50, delta=4)
    assert tuple(eta_values(p)) == (4, 4, 4)


@pytest.mark.parametrize("delta", [0.0, SQRT2 * 26.72, -SQRT2 * 26.72])
def test_singular_eta_rejected(delta):
    with pytest.raises(SingularityError):
        SystemParams.build(nu=26.72, g0=20, g1=20, omega0=120, omega1=120,
                           Delta0=3000, Delta1=600, delta=delta)


@pytest.mark.parametrize("Delta0", [0.0, -35.0, -35.0 + SQRT2 * 26.72, -35.0 - SQRT2 * 26.72])
def test_singular_denominator_rejected(Delta0):
    with pytest.raises(SingularityError):
        SystemParams.build(nu=26.72, g0=20, g1=20, omega0=120, omega1=120,
                           Delta0=Delta0, Delta1=600, delta=35)


def test_derive_couplings_epsilon_is_configurable(paper):
    with pytest.raises(SingularityError):
        derive_couplings(paper, eps=1e4)
    with pytest.raises(SingularityError):
        eta_values(paper, eps=10.0)


def test_drive_magnitudes_must_match():
    with pytest.raises(ParameterError):
        SystemParams(nu=1, g0=1, g1=1, omega0=10, omega1=10, omega0p=9, omega1p=10,
                     Delta0=100, Delta1=50, delta=3)
    # phases may differ
    SystemParams(nu=1, g0=1, g1=1, omega0=10, omega1=10, omega0p=10j, omega1p=-10,
                 Delta0=100, Delta1=50, delta=3)


def test_primed_drive_defaults_to_magnitude():
    p = SystemParams.build(nu=1, g0=1, g1=1, omega0=3 + 4j, omega1=2, Delta0=100, Delta1=50, delta=3)
    assert p.omega0p == 5 and p.omega1p == 2


def test_logical_basis_encoding():
    states = {b.label: b.atoms for b in BASES}
    assert states == {"00": (0, 1, 0, 1), "01": (0, 1, 1, 0), "10": (1, 0, 0, 1), "11": (1, 0, 1, 0)}
    assert len(set(states.values())) == 4
    for atoms in states.values():
        assert sorted(atoms[:2]) == [0, 1] and sorted(atoms[2:]) == [0, 1]
    assert LogicalBasis.from_label("10").mu == 1


def test_regime_report_paper(paper):
    rep = regime_report(paper)
    assert rep["omega0/Delta0"].value == pytest.approx(0.04, rel=1e-15)
    assert rep["g0/omega0"].value == pytest.approx(1 / 6, rel=1e-15)
    chk = rep["chi11_1/eta1"]
    assert chk.value == pytest.approx(0.71908952897177848258, rel=1e-13)
    assert not chk.passed
    assert not rep.all_passed
    assert len([c for c in rep.checks if c.name.startswith("chi")]) == 12


def test_regime_report_zero_couplings():
    p = SystemParams.build(nu=1, g0=0, g1=0, omega0=0, omega1=0, Delta0=1000, Delta1=500, delta=3)
    rep = regime_report(p)
    for c in rep.checks:
        if c.name.startswith("chi"):
            assert c.value == 0 and c.passed


def test_regime_threshold_configurable(paper):
    assert regime_report(paper, threshold=1.0)["chi11_1/eta1"].passed


@settings(max_examples=200, deadline=None)
@given(valid_params(), st.floats(0.01, 100.0))
def test_scaling_covariance(p, s):
    lam = np.array(list(derive_couplings(p).as_dict().values()))
    lam_s = np.array(list(derive_couplings(p.scaled(s)).as_dict().values()))
    np.testing.assert_allclose(lam_s, s * lam, rtol=1e-12, atol=1e-300)
    np.testing.assert_allclose(chi_table(derive_couplings(p.scaled(s))).values,
                               s * chi_table(derive_couplings(p)).values, rtol=1e-12, atol=1e-300)
    np.testing.assert_allclose(eta_values(p.scaled(s)).as_array(), s * eta_values(p).as_array(),
                               rtol=1e-12)


@settings(max_examples=200, deadline=None)
@given(valid_params())
def test_chi_symmetries(p):
    chi = chi_table(derive_couplings(p))
    assert chi["00"][0] == 0 and chi["11"][0] == 0
    assert chi["01"][0] == -chi["10"][0]
    assert chi["01"][1] == chi["10"][1] and chi["01"][2] == chi["10"][2]


@settings(max_examples=100, deadline=None)
@given(valid_params())
def test_conjugation(p):
    q = p.replace(g0=p.g0.conjugate(), g1=p.g1.conjugate(),
                  omega0=p.omega0.conjugate(), omega1=p.omega1.conjugate(),
                  omega0p=p.omega0p.conjugate(), omega1p=p.omega1p.conjugate())
    chi, chi_c = chi_table(derive_couplings(p)), chi_table(derive_couplings(q))
    np.testing.assert_allclose(chi_c.values, chi.values.conj(), rtol=1e-14, atol=1e-300)
    np.testing.assert_allclose(np.abs(chi_c.values), np.abs(chi.values), rtol=1e-14, atol=1e-300)


@settings(max_examples=50, deadline=None)
@given(valid_params())
def test_deterministic(p):
    a = derive_couplings(p)
    b = derive_couplings(SystemParams(**{k: getattr(p, k) for k in p.__dataclass_fields__}))
    assert a == b


def test_scaled_requires_positive(paper):
    with pytest.raises(ParameterError):
        paper.scaled(0)
    assert math.isclose(paper.scaled(2).Delta0, 6000)
