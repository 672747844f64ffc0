"""Direct integration of the atom-cavity-fiber interaction Hamiltonian.

The state lives on four three-level atoms (j1, j2, k1, k2; levels 0, 1, e)
times three truncated normal modes (c0, c1, c2).  Basis index order is
lexicographic with atoms slowest and modes fastest.

The Hamiltonian is the interaction-picture form in the frame rotating with
the normal-mode splitting:

    H(t) = sum_k exp(i w_k t) A_k + h.c.

where each ``A_k`` is a constant sparse operator.  It is applied by stacking
all ``A_k`` and ``A_k^dag`` into one tall sparse matrix, so one sparse
product plus a small contraction gives ``H(t) psi``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.integrate import DOP853

from .errors import IntegratorError, ParameterError
from .gatephase import phases_at, photon_occupation, wrap_phase
from .model import BASES, SQRT2, TWO_PI, LogicalBasis, SystemParams

__all__ = [
    "ATOMS",
    "LEVEL_E",
    "FockConfig",
    "Space",
    "build_space",
    "TimeDependentHamiltonian",
    "hamiltonian_at",
    "EvolutionResult",
    "evolve",
    "extract_phase_leakage",
    "BasisValidation",
    "ValidationReport",
    "validate_against_effective",
    "delta_scaling_scan",
    "desk_params",
    "DESK_TIME",
]

ATOMS = ("j1", "j2", "k1", "k2")
LEVEL_E = 2
N_LEVELS = 3
N_MODES = 3

DEFAULT_MAX_DIM = 10**6


@dataclass(frozen=True)
class FockConfig:
    """Photon cutoff shared by the three normal modes (``a^dag |n_max> = 0``)."""

    n_max: int = 2
    max_dim: int = DEFAULT_MAX_DIM

    def __post_init__(self):
        if int(self.n_max) != self.n_max or self.n_max < 1:
            raise ParameterError(f"photon cutoff must be an integer >= 1, got {self.n_max!r}")

    @property
    def dim(self):
        return N_LEVELS ** len(ATOMS) * (self.n_max + 1) ** N_MODES


class Space:
    """Product basis and operator builders for a given cutoff."""

    def __init__(self, config: FockConfig):
        self.config = config
        self.n_max = config.n_max
        self.shape = (N_LEVELS,) * len(ATOMS) + (self.n_max + 1,) * N_MODES
        self.dim = int(np.prod(self.shape))

    def index(self, atoms, photons=(0, 0, 0)):
        """Flat index of atom levels ``(j1, j2, k1, k2)`` and photon numbers ``(n0, n1, n2)``."""
        return int(np.ravel_multi_index(tuple(atoms) + tuple(photons), self.shape))

    def labels(self, index):
        """Inverse of :meth:`index`: ``(atom_levels, photon_numbers)``."""
        digits = np.unravel_index(int(index), self.shape)
        digits = tuple(int(d) for d in digits)
        return digits[: len(ATOMS)], digits[len(ATOMS):]

    def _embed(self, factors):
        """Kronecker product with identities everywhere except the given slots."""
        out = sp.identity(1, dtype=complex, format="csr")
        for slot, size in enumerate(self.shape):
            op = factors.get(slot)
            if op is None:
                op = sp.identity(size, dtype=complex, format="csr")
            out = sp.kron(out, op, format="csr")
        return out

    def annihilation(self, mode):
        """Truncated ladder operator of normal mode ``c_mode``."""
        n = self.n_max + 1
        a = sp.diags(np.sqrt(np.arange(1, n, dtype=float)), offsets=1, shape=(n, n), dtype=complex)
        return self._embed({len(ATOMS) + mode: a.tocsr()})

    def creation(self, mode):
        return self.annihilation(mode).conj().T.tocsr()

    def transition(self, atom, level, to=LEVEL_E):
        """Atomic operator ``|to><level|`` acting on one atom (name or slot)."""
        slot = ATOMS.index(atom) if isinstance(atom, str) else int(atom)
        s = sp.csr_matrix(([1.0 + 0j], ([to], [level])), shape=(N_LEVELS, N_LEVELS))
        return self._embed({slot: s})

    def product_state(self, atoms, photons=(0, 0, 0)):
        psi = np.zeros(self.dim, dtype=complex)
        psi[self.index(atoms, photons)] = 1.0
        return psi

    def logical_state(self, basis):
        """Logical basis state with all three modes in vacuum."""
        if not isinstance(basis, LogicalBasis):
            basis = LogicalBasis.from_label(basis)
        return self.product_state(basis.atoms)

    def excited_mask(self):
        levels = np.indices(self.shape[: len(ATOMS)]).reshape(len(ATOMS), -1)
        atom_excited = np.any(levels == LEVEL_E, axis=0)
        return np.repeat(atom_excited, (self.n_max + 1) ** N_MODES)


def build_space(config: FockConfig) -> Space:
    if config.dim > config.max_dim:
        raise ParameterError(
            f"state dimension {config.dim} exceeds the cap of {config.max_dim} amplitudes")
    return Space(config)


class TimeDependentHamiltonian:
    """``H(t) = sum_k exp(i 2 pi w_k t) A_k + h.c.`` (MHz units).

    Attributes
    ----------
    frequencies : ndarray
        ``w_k`` in MHz.
    terms : list of sparse matrices
        ``A_k``.
    """

    def __init__(self, space: Space, frequencies, terms):
        self.space = space
        self.frequencies = np.asarray(frequencies, dtype=float)
        self.terms = list(terms)
        self._stack = sp.vstack(self.terms + [t.conj().T for t in self.terms], format="csr")
        self._k = len(self.terms)

    def coefficients(self, t):
        f = np.exp(1j * TWO_PI * self.frequencies * t)
        return np.concatenate([f, f.conj()])

    def apply(self, t, psi):
        """``H(t) @ psi`` in MHz."""
        parts = (self._stack @ psi).reshape(2 * self._k, -1)
        return self.coefficients(t) @ parts

    def matrix(self, t):
        c = self.coefficients(t)
        out = sp.csr_matrix((self.space.dim, self.space.dim), dtype=complex)
        for ck, term in zip(c, self.terms + [t_.conj().T for t_ in self.terms]):
            out = out + ck * term
        return out.tocsr()

    def is_zero(self):
        return all(t.count_nonzero() == 0 for t in self.terms)


def hamiltonian_at(params: SystemParams, space: Space) -> TimeDependentHamiltonian:
    """Assemble the pre-elimination interaction Hamiltonian.

    The lasers drive only j1 and k1; every atom couples to its cavity,
    which in normal modes reads ``(c1 e^{-i s t} + c2 e^{i s t} +- sqrt2 c0) / 2``
    with ``s = sqrt2 nu``, ``+`` in cavity j and ``-`` in cavity k.
    """
    p = params
    split = SQRT2 * p.nu
    c = [space.annihilation(n) for n in range(N_MODES)]
    frequencies, terms = [], []
    for m in (0, 1):
        Delta = getattr(p, f"Delta{m}")
        omega = getattr(p, f"omega{m}")
        omega_p = getattr(p, f"omega{m}p")
        g = getattr(p, f"g{m}")
        sig = {a: space.transition(a, m) for a in ATOMS}
        driven = sig["j1"] + sig["k1"]
        frequencies += [-Delta, Delta]
        terms += [0.5 * omega_p * driven, 0.5 * omega * driven]

        both = sig["j1"] + sig["j2"] + sig["k1"] + sig["k2"]
        antisym = sig["j1"] + sig["j2"] - sig["k1"] - sig["k2"]
        frequencies += [Delta + p.delta, Delta + p.delta - split, Delta + p.delta + split]
        terms += [
            g * (SQRT2 / 2) * (antisym @ c[0]),
            g * 0.5 * (both @ c[1]),
            g * 0.5 * (both @ c[2]),
        ]
    terms = [t.tocsr() for t in terms]
    for t in terms:
        t.eliminate_zeros()
    return TimeDependentHamiltonian(space, frequencies, terms)


@dataclass
class EvolutionResult:
    psi: np.ndarray
    t: float
    steps: int
    nfev: int
    norm_drift: float
    excited_max: float
    error_estimate: float

    def as_dict(self):
        return {"t_us": self.t, "steps": self.steps, "nfev": self.nfev,
                "norm_drift": self.norm_drift, "excited_max": self.excited_max,
                "error_estimate": self.error_estimate}


def evolve(psi0, hamiltonian: TimeDependentHamiltonian, t_final: float, accuracy: float = 1e-10,
           atol_ratio: float = 1e-2, min_step: float = 1e-14):
    """Integrate ``i dpsi/dt = 2 pi H(t) psi`` from 0 to ``t_final`` (us).

    Uses the adaptive 8th-order Dormand-Prince stepper with relative local
    error ``accuracy`` and absolute local error ``accuracy * atol_ratio``.
    The maximum excited-atom population is tracked over accepted steps.

    Raises
    ------
    IntegratorError
        If the stepper fails (e.g. step-size underflow); carries ``t_reached``.
    """
    psi0 = np.asarray(psi0, dtype=complex)
    norm0 = np.linalg.norm(psi0)
    if abs(norm0 - 1.0) > 1e-12:
        raise ParameterError(f"initial state must be normalised, |psi| = {norm0!r}")
    excited = hamiltonian.space.excited_mask()
    if t_final == 0 or hamiltonian.is_zero():
        return EvolutionResult(psi0.copy(), float(t_final), 0, 0, 0.0,
                               float(np.sum(np.abs(psi0[excited]) ** 2)), 0.0)

    def rhs(t, y):
        return -1j * TWO_PI * hamiltonian.apply(t, y)

    solver = DOP853(rhs, 0.0, psi0, float(t_final), rtol=accuracy,
                    atol=accuracy * atol_ratio, first_step=None)
    steps = 0
    excited_max = float(np.sum(np.abs(psi0[excited]) ** 2))
    while solver.status == "running":
        message = solver.step()
        if solver.status == "failed":
            raise IntegratorError(f"integration failed at t = {solver.t:.6g} us: {message}",
                                  t_reached=float(solver.t))
        if solver.step_size is not None and solver.step_size < min_step and solver.status == "running":
            raise IntegratorError(f"step size underflow at t = {solver.t:.6g} us",
                                  t_reached=float(solver.t))
        steps += 1
        excited_max = max(excited_max, float(np.sum(np.abs(solver.y[excited]) ** 2)))
    psi = solver.y.copy()
    drift = abs(float(np.linalg.norm(psi)) - 1.0)
    return EvolutionResult(psi, float(solver.t), steps, int(solver.nfev), drift, excited_max,
                           error_estimate=10.0 * accuracy * steps)


def extract_phase_leakage(init, final, min_overlap=1e-6):
    """Phase of ``<init|final>`` in (-pi, pi] and the population lost from ``init``."""
    overlap = np.vdot(init, final)
    if abs(overlap) < min_overlap:
        raise IntegratorError(
            f"overlap with the initial state is {abs(overlap):.3g}; phase undefined")
    return float(wrap_phase(np.angle(overlap))), float(min(max(1.0 - abs(overlap) ** 2, 0.0), 1.0))


@dataclass
class BasisValidation:
    basis: str
    phase: float
    effective_phase: float
    leakage: float
    excited_max: float
    norm_drift: float
    steps: int
    error_estimate: float
    phase_at_higher_cutoff: float = math.nan
    error: str = None

    @property
    def phase_error(self):
        return abs(float(wrap_phase(self.phase - self.effective_phase)))

    @property
    def relative_phase_error(self):
        ref = abs(float(wrap_phase(self.effective_phase)))
        return self.phase_error / ref if ref > 0 else (0.0 if self.phase_error == 0 else math.inf)

    @property
    def cutoff_delta(self):
        return abs(float(wrap_phase(self.phase - self.phase_at_higher_cutoff)))

    def as_dict(self):
        return {
            "basis": self.basis,
            "phase_rad": self.phase,
            "effective_phase_rad": self.effective_phase,
            "phase_error_rad": self.phase_error,
            "relative_phase_error": self.relative_phase_error,
            "leakage": self.leakage,
            "excited_max": self.excited_max,
            "norm_drift": self.norm_drift,
            "steps": self.steps,
            "error_estimate_rad": self.error_estimate,
            "phase_at_higher_cutoff_rad": self.phase_at_higher_cutoff,
            "cutoff_delta_rad": self.cutoff_delta,
            "error": self.error,
        }


def _finite_max(values):
    finite = [v for v in values if math.isfinite(v)]
    return max(finite) if finite else math.nan


@dataclass
class ValidationReport:
    """Full-model versus effective-model comparison for the four logical states."""

    t: float
    n_max: int
    accuracy: float
    norm_bound: float
    results: list = field(default_factory=list)
    max_occupation: float = 0.0
    truncation_scale: float = 0.0

    @property
    def errors(self):
        return [f"{r.basis}: {r.error}" for r in self.results if r.error]

    @property
    def failed(self):
        return bool(self.errors) or any(not r.norm_drift <= self.norm_bound for r in self.results)

    @property
    def max_phase_error(self):
        return _finite_max(r.phase_error for r in self.results)

    @property
    def max_relative_phase_error(self):
        return _finite_max(r.relative_phase_error for r in self.results)

    @property
    def max_cutoff_delta(self):
        return _finite_max(r.cutoff_delta for r in self.results)

    @property
    def max_norm_drift(self):
        return _finite_max(r.norm_drift for r in self.results)

    @property
    def max_leakage(self):
        return _finite_max(r.leakage for r in self.results)

    def __getitem__(self, label):
        for r in self.results:
            if r.basis == str(label):
                return r
        raise KeyError(label)

    def as_dict(self):
        return {
            "t_us": self.t,
            "fock_cutoff": self.n_max,
            "integrator_accuracy": self.accuracy,
            "norm_bound": self.norm_bound,
            "failed": self.failed,
            "errors": self.errors,
            "max_phase_error_rad": self.max_phase_error,
            "max_relative_phase_error": self.max_relative_phase_error,
            "max_leakage": self.max_leakage,
            "max_norm_drift": self.max_norm_drift,
            "max_cutoff_delta_rad": self.max_cutoff_delta,
            "max_occupation": self.max_occupation,
            "truncation_scale": self.truncation_scale,
            "basis": [r.as_dict() for r in self.results],
        }


def _edge_occupation(mean, n_max):
    """Weight of a coherent state (mean photon number ``mean``) on ``n >= n_max``."""
    if mean <= 0:
        return 0.0
    head = sum(math.exp(-mean) * mean**k / math.factorial(k) for k in range(n_max))
    return max(1.0 - head, 0.0)


def _map(fn, items, workers):
    if workers <= 1:
        return [fn(x) for x in items]
    from concurrent.futures import ThreadPoolExecutor

    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def validate_against_effective(params: SystemParams, t: float, config: FockConfig = FockConfig(),
                               accuracy: float = 1e-10, norm_bound: float = 1e-8,
                               check_cutoff: bool = True, workers: int = 1) -> ValidationReport:
    """Evolve each logical state under the full Hamiltonian and compare phases.

    The run is repeated at ``n_max + 1`` when ``check_cutoff`` is set.
    ``truncation_scale`` is the Poisson weight on ``n >= n_max`` of a
    coherent state with the peak effective-model photon number: the only
    population on which the hard cutoff acts.
    """
    space = build_space(config)
    ham = hamiltonian_at(params, space)
    effective = phases_at(params, t)
    higher = None
    if check_cutoff:
        space_hi = build_space(FockConfig(config.n_max + 1, config.max_dim))
        higher = (space_hi, hamiltonian_at(params, space_hi))

    def run(basis):
        init = space.logical_state(basis)
        try:
            res = evolve(init, ham, t, accuracy)
            phase, leak = extract_phase_leakage(init, res.psi)
        except IntegratorError as exc:
            return BasisValidation(basis.label, math.nan, float(effective[basis.label]), math.nan,
                                   math.nan, math.nan, 0, math.nan, error=str(exc))
        out = BasisValidation(basis.label, phase, float(effective[basis.label]), leak,
                              res.excited_max, res.norm_drift, res.steps, res.error_estimate)
        if higher is not None:
            s_hi, h_hi = higher
            init_hi = s_hi.logical_state(basis)
            try:
                res_hi = evolve(init_hi, h_hi, t, accuracy)
                out.phase_at_higher_cutoff = extract_phase_leakage(init_hi, res_hi.psi)[0]
            except IntegratorError as exc:
                out.error = f"at cutoff {config.n_max + 1}: {exc}"
                return out
            out.norm_drift = max(out.norm_drift, res_hi.norm_drift)
        return out

    results = _map(run, BASES, workers)
    occ = photon_occupation(params, t).maximum
    tail = max(_edge_occupation(float(m), config.n_max) for m in occ.ravel())
    return ValidationReport(float(t), config.n_max, accuracy, norm_bound, results,
                            max_occupation=float(occ.max()), truncation_scale=tail)


def delta_scaling_scan(params: SystemParams, t: float, scales=(1, 2, 4),
                       config: FockConfig = FockConfig(), accuracy: float = 1e-10,
                       workers: int = 1):
    """Validation reports with both large detunings multiplied by each scale."""
    reports = []
    for s in scales:
        scaled = params.replace(Delta0=params.Delta0 * s, Delta1=params.Delta1 * s)
        reports.append((s, validate_against_effective(scaled, t, config, accuracy,
                                                      check_cutoff=False, workers=workers)))
    return reports


def desk_params():
    """Small parameter set for quick full-model checks.

    ``delta = 1`` and ``sqrt2 nu = 2`` make the mode detunings (1, -1, 3) MHz,
    so every loop closes at ``T = 1 us``.
    """
    return SystemParams.build(nu=SQRT2, g0=2.0, g1=2.0, omega0=8.0, omega1=8.0,
                              Delta0=60.0, Delta1=40.0, delta=1.0)


DESK_TIME = 1.0
