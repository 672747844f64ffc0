"""Coherent-state loops of the normal modes and the phases they imprint.

With the logical state fixed, each normal mode ``c_n`` is a driven
oscillator ``chi c^dag e^{-i eta t} + h.c.`` starting in vacuum.  Its state
stays coherent with amplitude

    alpha(t) = (chi / eta) (exp(-i 2 pi eta t) - 1)

and the evolution operator is ``exp(i phi) D(alpha)`` with
``phi = Im int alpha^* d alpha = |chi/eta|^2 (sin(2 pi eta t) - 2 pi eta t)``.
Frequencies are in MHz (omega / 2 pi) and times in microseconds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy import optimize

from .errors import ClosureSearchError, ConvergenceError, SingularityError
from .model import (
    BASES,
    DEFAULT_EPS,
    TWO_PI,
    ChiTable,
    EtaTriple,
    SystemParams,
    chi_table,
    derive_couplings,
    eta_values,
)

__all__ = [
    "wrap_phase",
    "trajectory_amplitude",
    "phase_closed_form",
    "phase_quadrature",
    "PhaseDecomposition",
    "phases_at",
    "ClosureSolution",
    "closure_residual",
    "find_closure",
    "GateResult",
    "build_gate",
    "entangling_measure",
    "OccupationReport",
    "photon_occupation",
    "PAPER_MAX_PHOTONS",
]

#: Maximal mean photon number quoted for the example parameters (informational).
PAPER_MAX_PHOTONS = 0.1087


def wrap_phase(x):
    """Map phases onto the interval (-pi, pi]."""
    return math.pi - np.mod(math.pi - np.asarray(x, dtype=float), TWO_PI)


def _check_eta(eta):
    eta = np.asarray(eta, dtype=float)
    if np.any(np.abs(eta) < DEFAULT_EPS):
        raise SingularityError(f"mode detuning eta = {eta!r} is zero")
    return eta


def trajectory_amplitude(chi, eta, t):
    """Coherent amplitude of a vacuum-started mode at time ``t`` (broadcasts)."""
    eta = _check_eta(eta)
    return np.asarray(chi) / eta * np.expm1(-1j * TWO_PI * eta * np.asarray(t, dtype=float))


def phase_closed_form(chi, eta, t):
    """Total, dynamic and geometric phase of one mode after time ``t``.

    The dynamic phase is minus the time integral of the coherent-state
    energy ``2 Re(chi alpha^* e^{-i eta t})``; along this path it is exactly
    twice the total, so the geometric remainder is minus the total.

    Returns
    -------
    tuple of ndarray
        ``(total, dynamic, geometric)`` in radians.
    """
    eta = _check_eta(eta)
    x = TWO_PI * eta * np.asarray(t, dtype=float)
    weight = np.abs(np.asarray(chi)) ** 2 / eta**2
    total = weight * (np.sin(x) - x)
    dynamic = 2.0 * weight * (np.sin(x) - x)
    geometric = total - dynamic
    return total, dynamic, geometric


_GL_NODES, _GL_WEIGHTS = leggauss(8)


def _gauss_panels(f, t, panels):
    edges = np.linspace(0.0, t, panels + 1)
    mid = 0.5 * (edges[1:] + edges[:-1])
    half = 0.5 * (edges[1:] - edges[:-1])
    tau = mid[:, None] + half[:, None] * _GL_NODES[None, :]
    return float(np.sum(half[:, None] * _GL_WEIGHTS[None, :] * f(tau)))


def phase_quadrature(chi, eta, t, steps=None, tol=1e-10, max_steps=1 << 22):
    """Total phase by numerically integrating ``Im(alpha^* d alpha)`` along the loop.

    Uses composite 8-point Gauss-Legendre panels and doubles the panel count
    until two successive estimates agree to ``tol`` (absolute, with a floor
    of 1e-14 relative).  Independent of :func:`phase_closed_form`.

    Raises
    ------
    ConvergenceError
        If ``max_steps`` panels are reached without meeting ``tol``.
    """
    eta = float(_check_eta(eta))
    chi = complex(chi)
    t = float(t)
    if t == 0.0 or chi == 0:
        return 0.0
    w = TWO_PI * eta

    def integrand(tau):
        alpha = trajectory_amplitude(chi, eta, tau)
        dalpha = -1j * TWO_PI * chi * np.exp(-1j * w * tau)
        return np.imag(np.conj(alpha) * dalpha)

    if steps is None:
        steps = max(16, int(math.ceil(abs(w * t))))
    prev = _gauss_panels(integrand, t, steps)
    while steps < max_steps:
        steps *= 2
        cur = _gauss_panels(integrand, t, steps)
        if abs(cur - prev) <= max(tol, 1e-14 * abs(cur)):
            return cur
        prev = cur
    raise ConvergenceError(f"phase quadrature did not converge to {tol:g} within {max_steps} panels")


@dataclass(frozen=True)
class PhaseDecomposition:
    """Phases of the four logical basis states at time ``t``.

    Per-mode arrays have shape (4, 3), rows ordered as ``BASES``.
    """

    t: float
    total_per_mode: np.ndarray
    dynamic_per_mode: np.ndarray
    geometric_per_mode: np.ndarray

    @property
    def total(self):
        return self.total_per_mode.sum(axis=1)

    @property
    def dynamic(self):
        return self.dynamic_per_mode.sum(axis=1)

    @property
    def geometric(self):
        return self.geometric_per_mode.sum(axis=1)

    def __getitem__(self, label):
        i = [b.label for b in BASES].index(str(label))
        return float(self.total[i])

    def as_dict(self):
        out = {}
        for i, b in enumerate(BASES):
            out[b.label] = {
                "total_rad": float(self.total[i]),
                "dynamic_rad": float(self.dynamic[i]),
                "geometric_rad": float(self.geometric[i]),
                "total_per_mode_rad": self.total_per_mode[i].tolist(),
                "dynamic_per_mode_rad": self.dynamic_per_mode[i].tolist(),
                "geometric_per_mode_rad": self.geometric_per_mode[i].tolist(),
            }
        return out


def _tables(params):
    return chi_table(derive_couplings(params)), eta_values(params)


def phases_at(params: SystemParams, t: float) -> PhaseDecomposition:
    chi, eta = _tables(params)
    total, dynamic, geometric = phase_closed_form(chi.values, eta.as_array()[None, :], t)
    return PhaseDecomposition(float(t), total, dynamic, geometric)


@dataclass(frozen=True)
class ClosureSolution:
    """A gate time and how far the modes are from vacuum there."""

    T: float
    loops: tuple
    residual: float
    converged: bool

    def as_dict(self):
        return {
            "T_us": self.T,
            "loops": list(self.loops),
            "residual": self.residual,
            "converged": self.converged,
        }


def closure_residual(chi: ChiTable, eta: EtaTriple, T):
    """Largest total photon number left in the modes at ``T`` over basis states."""
    alpha = trajectory_amplitude(chi.values, eta.as_array()[None, :], T)
    return float(np.max(np.sum(np.abs(alpha) ** 2, axis=1)))


def find_closure(eta: EtaTriple, t_max: float, tol: float = 1e-6, params: SystemParams = None,
                 chi: ChiTable = None, max_candidates: int = 100_000) -> ClosureSolution:
    """Earliest time at or before ``t_max`` where every mode is back at vacuum.

    Candidates are the whole-cycle times ``l / |eta_n|`` of every mode.  Each
    candidate's residual is evaluated directly and, failing ``tol``, refined
    by a bounded minimisation within a quarter of the fastest mode period.
    If nothing meets ``tol`` the best point found is returned with
    ``converged=False``.

    Raises
    ------
    ClosureSearchError
        If ``t_max`` is shorter than one cycle of every mode.
    """
    if not t_max > 0:
        raise ClosureSearchError(f"t_max must be positive, got {t_max!r}")
    if chi is None:
        if params is None:
            raise ValueError("find_closure needs either params or chi")
        chi = chi_table(derive_couplings(params))
    rates = np.abs(eta.as_array())

    candidates = set()
    for rate in rates:
        count = int(math.floor(rate * t_max * (1 + 1e-12)))
        if len(candidates) + count > max_candidates:
            raise ClosureSearchError(f"more than {max_candidates} closure candidates below t_max")
        candidates.update(min(l / rate, t_max) for l in range(1, count + 1))
    if not candidates:
        raise ClosureSearchError(
            f"t_max = {t_max} us is shorter than one cycle of every mode (|eta| = {rates.tolist()})")

    def residual(T):
        return closure_residual(chi, eta, T)

    window = 0.25 / rates.max()
    best = None
    for T0 in sorted(candidates):
        r0 = residual(T0)
        point = (r0, T0)
        if r0 > tol:
            lo, hi = max(T0 - window, 0.0), min(T0 + window, t_max)
            res = optimize.minimize_scalar(residual, bounds=(lo, hi), method="bounded",
                                           options={"xatol": 1e-13})
            if res.fun < r0:
                point = (float(res.fun), float(res.x))
        if point[0] <= tol:
            best = point
            break
        if best is None or point[0] < best[0] - 1e-15 or (
                abs(point[0] - best[0]) <= 1e-15 and point[1] < best[1]):
            best = point

    r, T = best
    loops = tuple(int(round(rate * T)) for rate in rates)
    return ClosureSolution(T=T, loops=loops, residual=r, converged=r <= tol)


@dataclass(frozen=True)
class GateResult:
    """Diagonal two-logical-qubit gate at time ``t``.

    ``residual_amplitude`` holds ``|alpha_n|`` per basis (rows) and mode
    (columns); ``fidelity_proxy`` is the vacuum overlap
    ``exp(-sum_n |alpha_n|^2 / 2)`` of each basis state.
    """

    t: float
    phases: np.ndarray
    residual_amplitude: np.ndarray
    entangle_tol: float = 1e-6

    @property
    def phases_wrapped(self):
        return wrap_phase(self.phases)

    @property
    def gamma(self):
        p = self.phases
        return float(p[0] + p[3] - p[1] - p[2])

    @property
    def entangling(self):
        return entangling_measure(self, self.entangle_tol)[0]

    @property
    def fidelity_proxy(self):
        return np.exp(-0.5 * np.sum(self.residual_amplitude**2, axis=1))

    @property
    def matrix(self):
        return np.diag(np.exp(1j * self.phases))

    def as_dict(self):
        return {
            "t_us": self.t,
            "phases_rad": dict(zip([b.label for b in BASES], self.phases.tolist())),
            "phases_wrapped_rad": dict(zip([b.label for b in BASES], self.phases_wrapped.tolist())),
            "entangling_measure_rad": self.gamma,
            "entangling_measure_wrapped_rad": float(wrap_phase(self.gamma)),
            "entangling": bool(self.entangling),
            "entangle_tol_rad": self.entangle_tol,
            "residual_amplitude": {b.label: self.residual_amplitude[i].tolist()
                                   for i, b in enumerate(BASES)},
            "fidelity_proxy": dict(zip([b.label for b in BASES], self.fidelity_proxy.tolist())),
        }


def build_gate(params: SystemParams, t: float, entangle_tol: float = 1e-6) -> GateResult:
    chi, eta = _tables(params)
    total, _, _ = phase_closed_form(chi.values, eta.as_array()[None, :], t)
    alpha = trajectory_amplitude(chi.values, eta.as_array()[None, :], t)
    return GateResult(t=float(t), phases=total.sum(axis=1), residual_amplitude=np.abs(alpha),
                      entangle_tol=entangle_tol)


def entangling_measure(gate, tol: float = 1e-6):
    """Whether a diagonal gate entangles, and its invariant ``g00 + g11 - g01 - g10``.

    ``gate`` is a :class:`GateResult` or four phases ordered 00, 01, 10, 11.
    The gate is entangling iff the invariant is more than ``tol`` away from
    every multiple of 2 pi.
    """
    phases = gate.phases if isinstance(gate, GateResult) else np.asarray(gate, dtype=float)
    gamma = float(phases[0] + phases[3] - phases[1] - phases[2])
    return abs(float(wrap_phase(gamma))) > tol, gamma


@dataclass(frozen=True)
class OccupationReport:
    """Mean photon numbers ``|alpha|^2`` per basis (rows) and mode (columns)."""

    t_span: float
    maximum: np.ndarray
    mean: np.ndarray
    cycle_mean: np.ndarray

    @property
    def overall_max(self):
        return float(self.maximum.max())

    @property
    def argmax(self):
        i, n = np.unravel_index(int(np.argmax(self.maximum)), self.maximum.shape)
        return BASES[i].label, int(n)

    def as_dict(self):
        labels = [b.label for b in BASES]
        basis, mode = self.argmax
        return {
            "t_span_us": self.t_span,
            "max": {b: self.maximum[i].tolist() for i, b in enumerate(labels)},
            "mean": {b: self.mean[i].tolist() for i, b in enumerate(labels)},
            "cycle_mean": {b: self.cycle_mean[i].tolist() for i, b in enumerate(labels)},
            "overall_max": self.overall_max,
            "overall_max_at": {"basis": basis, "mode": mode},
            "published_max": PAPER_MAX_PHOTONS,
            "note": ("published maximal photon number shown for comparison only; it is not "
                     "reproduced by max, end-time or cycle-averaged |alpha|^2 of these loops"),
        }


def photon_occupation(params: SystemParams, t_span: float) -> OccupationReport:
    """Peak and averaged ``|alpha|^2`` over ``[0, t_span]``.

    ``|alpha(t)|^2 = 4 |chi/eta|^2 sin^2(pi eta t)`` peaks at ``4 |chi/eta|^2``
    once half a cycle has elapsed and grows monotonically before that, so the
    peak of a shorter span sits at its end.
    """
    if not t_span > 0:
        raise ValueError(f"t_span must be positive, got {t_span!r}")
    chi, eta = _tables(params)
    eta_row = eta.as_array()[None, :]
    amp2 = np.abs(chi.values / eta_row) ** 2
    half_done = np.abs(eta_row) * t_span >= 0.5
    end = np.abs(trajectory_amplitude(chi.values, eta_row, t_span)) ** 2
    maximum = np.where(half_done, 4.0 * amp2, end)
    x = TWO_PI * eta_row * t_span
    mean = 2.0 * amp2 * (1.0 - np.sin(x) / x)
    return OccupationReport(float(t_span), maximum, mean, 2.0 * amp2)
