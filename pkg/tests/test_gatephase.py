import math

import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import solve_ivp

from conftest import valid_params
from geomgate.errors import ClosureSearchError, ConvergenceError, SingularityError
from geomgate.gatephase import (
    PAPER_MAX_PHOTONS,
    GateResult,
    build_gate,
    closure_residual,
    entangling_measure,
    find_closure,
    phase_closed_form,
    phase_quadrature,
    phases_at,
    photon_occupation,
    trajectory_amplitude,
    wrap_phase,
)
from geomgate.model import SQRT2, TWO_PI, EtaTriple, SystemParams, chi_table, derive_couplings, eta_values

PAPER_T = 0.3448
# 40-digit mpmath quadrature of Im(alpha^* dalpha) for the example parameters at t = 0.3448 us
PAPER_PHASES = (0.12479198196064301864, 1.0559948099641681654, 1.0559948099641681654,
                3.1415927477676206376)


def test_amplitude_endpoints():
    assert trajectory_amplitude(0.7 - 0.2j, 3.0, 0.0) == 0
    for l in (1, 2, 7):
        assert abs(trajectory_amplitude(0.7 - 0.2j, -3.0, l / 3.0)) < 1e-14
    half = trajectory_amplitude(0.7 - 0.2j, 3.0, 0.5 / 3.0)
    assert half == pytest.approx(-2 * (0.7 - 0.2j) / 3.0, abs=1e-15)


def test_amplitude_rejects_zero_eta():
    with pytest.raises(SingularityError):
        trajectory_amplitude(1.0, 0.0, 1.0)
    with pytest.raises(SingularityError):
        phase_closed_form(1.0, 0.0, 1.0)


def test_closed_form_at_zero_time():
    assert phase_closed_form(1 + 1j, 2.0, 0.0) == (0.0, 0.0, 0.0)


def test_closed_form_matches_printed_closure_values():
    chi, eta, l = 0.3 + 0.4j, -2.5, 3
    total, dyn, geo = phase_closed_form(chi, eta, l / abs(eta))
    # at T = 2 pi l / eta (angular), the loop phase is -2 pi l |chi|^2 / eta^2 with signed l
    signed_l = l * np.sign(eta)
    assert total == pytest.approx(-TWO_PI * signed_l * abs(chi) ** 2 / eta**2, rel=1e-13)
    assert dyn == pytest.approx(-2 * TWO_PI * signed_l * abs(chi) ** 2 / eta**2, rel=1e-13)
    assert geo == pytest.approx(TWO_PI * signed_l * abs(chi) ** 2 / eta**2, rel=1e-13)


def test_quadrature_trivial_cases():
    assert phase_quadrature(0.0, 3.0, 1.7) == 0.0
    assert phase_quadrature(1.0, 3.0, 0.0) == 0.0


def test_quadrature_reports_nonconvergence():
    with pytest.raises(ConvergenceError):
        phase_quadrature(1.0, 500.0, 1.7123, steps=4, max_steps=64)


def test_quadrature_paper_basis_11_many_steps(paper):
    chi = chi_table(derive_couplings(paper))["11"]
    eta = eta_values(paper)
    q = sum(phase_quadrature(chi[n], eta[n], PAPER_T, steps=1 << 17) for n in (1, 2))
    assert q == pytest.approx(PAPER_PHASES[3], abs=1e-9)
    assert q == pytest.approx(math.pi, abs=1e-6)


def _dynamic_phase_quadrature(chi, eta, t, n=20001):
    """-int <alpha|H|alpha> dt via Simpson; test-local oracle."""
    from scipy.integrate import simpson

    tau = np.linspace(0.0, t, n)
    alpha = trajectory_amplitude(chi, eta, tau)
    energy = 2 * np.real(chi * np.conj(alpha) * np.exp(-1j * TWO_PI * eta * tau))
    return -TWO_PI * simpson(energy, x=tau)


@pytest.mark.parametrize("chi,eta,t", [(0.3, 2.0, 0.37), (0.5 - 1j, -1.3, 2.2), (2j, 7.0, 0.05)])
def test_dynamic_phase_matches_energy_integral(chi, eta, t):
    _, dyn, _ = phase_closed_form(chi, eta, t)
    assert dyn == pytest.approx(_dynamic_phase_quadrature(chi, eta, t), abs=1e-9)


@pytest.mark.parametrize("chi,eta,t", [(0.4, 1.0, 0.7), (0.3 - 0.2j, -2.0, 1.3), (0.25j, 3.0, 1 / 3.0)])
def test_phase_convention_against_fock_space_evolution(chi, eta, t):
    """Brute-force a driven, truncated oscillator and read arg<0|psi(t)>."""
    n = 40
    a = sp.diags(np.sqrt(np.arange(1, n)), 1, shape=(n, n), dtype=complex).tocsr()
    ad = a.conj().T.tocsr()

    def rhs(tau, psi):
        f = chi * np.exp(-1j * TWO_PI * eta * tau)
        return -1j * TWO_PI * (f * (ad @ psi) + np.conj(f) * (a @ psi))

    psi0 = np.zeros(n, complex)
    psi0[0] = 1
    sol = solve_ivp(rhs, (0, t), psi0, method="DOP853", rtol=1e-12, atol=1e-14)
    psi = sol.y[:, -1]
    total, _, _ = phase_closed_form(chi, eta, t)
    alpha = trajectory_amplitude(chi, eta, t)
    assert np.angle(psi[0]) == pytest.approx(float(wrap_phase(total)), abs=1e-8)
    assert abs(psi[0]) == pytest.approx(math.exp(-abs(alpha) ** 2 / 2), abs=1e-9)


def test_phases_at_paper(paper):
    ph = phases_at(paper, PAPER_T)
    np.testing.assert_allclose(ph.total, PAPER_PHASES, rtol=1e-13)
    assert ph["01"] == ph["10"]


def test_phases_zero_couplings():
    p = SystemParams.build(nu=3, g0=0, g1=0, omega0=10, omega1=10, Delta0=500, Delta1=300, delta=2)
    ph = phases_at(p, 1.23)
    assert np.all(ph.total == 0) and np.all(ph.dynamic == 0) and np.all(ph.geometric == 0)


@settings(max_examples=100, deadline=None)
@given(valid_params(), st.floats(0.0, 5.0))
def test_decomposition_sums(p, t):
    ph = phases_at(p, t)
    np.testing.assert_allclose(ph.total, ph.geometric + ph.dynamic, rtol=1e-14, atol=1e-15)
    assert ph["01"] == pytest.approx(ph["10"], rel=1e-14, abs=1e-300)


@settings(max_examples=100, deadline=None)
@given(st.complex_numbers(max_magnitude=10, allow_nan=False, allow_infinity=False),
       st.floats(0.1, 50) | st.floats(-50, -0.1), st.floats(0, 3))
def test_phase_scales_with_chi_squared(chi, eta, t):
    base = phase_closed_form(chi, eta, t)[0]
    assert phase_closed_form(2 * chi, eta, t)[0] == pytest.approx(4 * base, rel=1e-13, abs=1e-300)


@settings(max_examples=100, deadline=None)
@given(valid_params(), st.floats(-math.pi, math.pi), st.floats(0.01, 2.0))
def test_global_coupling_phase_is_invisible(p, theta, t):
    rot = complex(math.cos(theta), math.sin(theta))
    q = p.replace(g0=p.g0 * rot, g1=p.g1 * rot)
    a, b = build_gate(p, t), build_gate(q, t)
    np.testing.assert_allclose(b.phases, a.phases, rtol=1e-12, atol=1e-14)
    np.testing.assert_allclose(b.residual_amplitude, a.residual_amplitude, rtol=1e-12, atol=1e-14)
    assert b.gamma == pytest.approx(a.gamma, rel=1e-12, abs=1e-13)


def test_closure_commensurate_triple():
    x = 2.5
    params = SystemParams.build(nu=2 * x / SQRT2, g0=20, g1=15, omega0=120, omega1=90,
                                Delta0=3000, Delta1=600, delta=x)
    eta = eta_values(params)
    np.testing.assert_allclose(eta.as_array(), (x, -x, 3 * x), rtol=1e-15)
    sol = find_closure(eta, t_max=2.0, tol=1e-6, params=params)
    assert sol.T == pytest.approx(1 / x, rel=1e-14)
    assert sol.loops == (1, 1, 3)
    assert sol.residual <= 1e-12
    assert sol.converged


def test_closure_without_fiber_closes_at_first_cycle():
    params = SystemParams.build(nu=0.0, g0=20, g1=20, omega0=120, omega1=120,
                                Delta0=3000, Delta1=600, delta=4.0)
    sol = find_closure(eta_values(params), t_max=1.0, params=params)
    assert sol.T == pytest.approx(0.25, rel=1e-14)
    assert sol.loops == (1, 1, 1)
    assert sol.residual <= 1e-12
    for l in (2, 3):
        assert closure_residual(chi_table(derive_couplings(params)), eta_values(params), l / 4.0) < 1e-12


def test_paper_example_does_not_close(paper):
    chi, eta = chi_table(derive_couplings(paper)), eta_values(paper)
    r = closure_residual(chi, eta, PAPER_T)
    # basis 11 dominates; independent expression 4 |chi/eta|^2 sin^2(pi eta t)
    expected = max(sum(4 * abs(chi[b][n] / eta[n]) ** 2 * math.sin(math.pi * eta[n] * PAPER_T) ** 2
                       for n in range(3)) for b in ("00", "01", "10", "11"))
    assert r == pytest.approx(expected, rel=1e-12)
    assert r > 0.03
    sol = find_closure(eta, t_max=0.4, tol=1e-6, params=paper)
    assert not sol.converged and sol.residual > 0
    assert 0 < sol.T <= 0.4


def test_closure_empty_window():
    eta = EtaTriple(1.0, -2.0, 3.0)
    with pytest.raises(ClosureSearchError):
        find_closure(eta, t_max=0.2, chi=chi_table(derive_couplings(SystemParams.paper())))


def test_build_gate_paper(paper):
    gate = build_gate(paper, PAPER_T)
    np.testing.assert_allclose(gate.phases, PAPER_PHASES, rtol=1e-13)
    assert np.all(gate.phases_wrapped > -math.pi) and np.all(gate.phases_wrapped <= math.pi)
    m = gate.matrix
    np.testing.assert_allclose(m @ m.conj().T, np.eye(4), atol=1e-15)
    assert gate.entangling
    assert np.all(gate.fidelity_proxy <= 1) and gate.fidelity_proxy.min() < 1


def test_build_gate_zero_coupling():
    p = SystemParams.build(nu=3, g0=0, g1=0, omega0=10, omega1=10, Delta0=500, Delta1=300, delta=2)
    gate = build_gate(p, 0.7)
    np.testing.assert_array_equal(gate.matrix, np.eye(4))
    assert gate.gamma == 0 and not gate.entangling
    assert np.all(gate.residual_amplitude == 0) and np.all(gate.fidelity_proxy == 1)


def test_entangling_measure_examples(paper):
    flag, gamma = entangling_measure(build_gate(paper, PAPER_T))
    assert flag
    assert gamma == pytest.approx(0.1248 + math.pi - 2 * 1.056, abs=2e-3)
    assert entangling_measure([0, 0, 0, 0]) == (False, 0.0)
    assert not entangling_measure([0.0, 0.3, -1.7, 0.3 - 1.7])[0]
    assert not entangling_measure([0.0, 0.0, 0.0, 2 * math.pi])[0]
    assert entangling_measure([0.0, 0.0, 0.0, math.pi])[0]


@settings(max_examples=200, deadline=None)
@given(st.lists(st.floats(-10, 10), min_size=4, max_size=4), st.floats(-10, 10), st.floats(-10, 10),
       st.floats(-10, 10), st.floats(-10, 10))
def test_entangling_measure_local_invariance(phases, a0, a1, b0, b1):
    shifted = [phases[0] + a0 + b0, phases[1] + a0 + b1, phases[2] + a1 + b0, phases[3] + a1 + b1]
    assert entangling_measure(shifted)[1] == pytest.approx(entangling_measure(phases)[1], abs=1e-12)


def test_gate_result_wrapping():
    gate = GateResult(t=1.0, phases=np.array([math.pi, -math.pi, 3 * math.pi, 7.0]),
                      residual_amplitude=np.zeros((4, 3)))
    w = gate.phases_wrapped
    assert w[0] == pytest.approx(math.pi) and w[1] == pytest.approx(math.pi)
    assert w[3] == pytest.approx(7.0 - 2 * math.pi)


def test_photon_occupation_zero_drive():
    p = SystemParams.build(nu=3, g0=0, g1=0, omega0=0, omega1=0, Delta0=500, Delta1=300, delta=2)
    occ = photon_occupation(p, 1.0)
    assert np.all(occ.maximum == 0) and np.all(occ.mean == 0) and np.all(occ.cycle_mean == 0)


def test_photon_occupation_peak_and_short_span(paper):
    chi, eta = chi_table(derive_couplings(paper)), eta_values(paper)
    ratio2 = np.abs(chi.values / eta.as_array()[None, :]) ** 2
    occ = photon_occupation(paper, 1.0)
    np.testing.assert_allclose(occ.maximum, 4 * ratio2, rtol=1e-15)
    np.testing.assert_allclose(occ.cycle_mean, 2 * ratio2, rtol=1e-15)
    # span shorter than half a cycle of every mode: compare with dense sampling
    short = 0.2 / abs(eta.eta2)
    occ_s = photon_occupation(paper, short)
    tau = np.linspace(0, short, 20001)
    sampled = np.abs(trajectory_amplitude(chi.values[:, :, None], eta.as_array()[None, :, None],
                                          tau)) ** 2
    np.testing.assert_allclose(occ_s.maximum, sampled.max(axis=2), rtol=1e-12, atol=1e-300)
    np.testing.assert_allclose(occ_s.mean, sampled.mean(axis=2), rtol=1e-3, atol=1e-300)
    doc = occ.as_dict()
    assert doc["published_max"] == PAPER_MAX_PHOTONS
    assert doc["overall_max_at"] == {"basis": "11", "mode": 1}
