"""Physical parameters and the effective couplings derived from them.

Frequencies are stored as ordinary frequencies (omega / 2 pi) in MHz and
times in microseconds.  Anything that needs an angular frequency multiplies
by ``TWO_PI`` at the point of use.
"""

from __future__ import annotations

import dataclasses
import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import ParameterError, SingularityError

__all__ = [
    "TWO_PI",
    "SQRT2",
    "DEFAULT_EPS",
    "SystemParams",
    "EffectiveCouplings",
    "EtaTriple",
    "LogicalBasis",
    "BASES",
    "ChiTable",
    "RegimeCheck",
    "RegimeReport",
    "derive_couplings",
    "chi_table",
    "eta_values",
    "regime_report",
]

TWO_PI = 2.0 * math.pi
SQRT2 = math.sqrt(2.0)

#: Smallest admissible magnitude (MHz) for a coupling denominator or mode detuning.
DEFAULT_EPS = 1e-9

_MAGNITUDE_RTOL = 1e-12


def _check_nonzero(value, name, eps):
    if abs(value) < eps:
        raise SingularityError(f"{name} = {value!r} is below the singularity threshold {eps:g} MHz")


@dataclass(frozen=True)
class SystemParams:
    """Frequencies of the two-cavity, fiber-linked system (all omega/2pi, MHz).

    Attributes
    ----------
    nu : float
        Cavity-fiber coupling.
    g0, g1 : complex
        Atom-cavity couplings on the ``|0>-|e>`` and ``|1>-|e>`` transitions.
    omega0, omega1 : complex
        Rabi frequencies of the laser detuned by ``+Delta_m``.
    omega0p, omega1p : complex
        Rabi frequencies of the laser detuned by ``-Delta_m``.  Their moduli
        must equal those of ``omega0``/``omega1`` so the Stark shifts cancel.
    Delta0, Delta1 : float
        Laser detunings from the ``|m>-|e>`` transitions.
    delta : float
        Laser-cavity detuning.
    """

    nu: float
    g0: complex
    g1: complex
    omega0: complex
    omega1: complex
    omega0p: complex
    omega1p: complex
    Delta0: float
    Delta1: float
    delta: float

    def __post_init__(self):
        for name in ("nu", "Delta0", "Delta1", "delta"):
            value = getattr(self, name)
            if isinstance(value, complex) or not math.isfinite(float(value)):
                raise ParameterError(f"{name} must be a finite real number, got {value!r}")
            object.__setattr__(self, name, float(value))
        for name in ("g0", "g1", "omega0", "omega1", "omega0p", "omega1p"):
            value = complex(getattr(self, name))
            if not (math.isfinite(value.real) and math.isfinite(value.imag)):
                raise ParameterError(f"{name} must be finite, got {value!r}")
            object.__setattr__(self, name, value)

        for m in (0, 1):
            a = abs(getattr(self, f"omega{m}"))
            b = abs(getattr(self, f"omega{m}p"))
            if not math.isclose(a, b, rel_tol=_MAGNITUDE_RTOL, abs_tol=1e-300):
                raise ParameterError(
                    f"|omega{m}| = {a!r} differs from |omega{m}p| = {b!r}; "
                    "the two drives must have equal magnitude"
                )

        split = SQRT2 * self.nu
        for m in (0, 1):
            D = getattr(self, f"Delta{m}")
            _check_nonzero(D, f"Delta{m}", DEFAULT_EPS)
            _check_nonzero(D + self.delta, f"Delta{m} + delta", DEFAULT_EPS)
            _check_nonzero(D + self.delta - split, f"Delta{m} + delta - sqrt2*nu", DEFAULT_EPS)
            _check_nonzero(D + self.delta + split, f"Delta{m} + delta + sqrt2*nu", DEFAULT_EPS)
        _check_nonzero(self.delta, "delta (eta0)", DEFAULT_EPS)
        _check_nonzero(self.delta - split, "delta - sqrt2*nu (eta1)", DEFAULT_EPS)
        _check_nonzero(self.delta + split, "delta + sqrt2*nu (eta2)", DEFAULT_EPS)

    @classmethod
    def build(cls, nu, g0, g1, omega0, omega1, Delta0, Delta1, delta, omega0p=None, omega1p=None):
        """Construct parameters, defaulting the second drives to ``|omega_m|``."""
        return cls(
            nu=nu,
            g0=g0,
            g1=g1,
            omega0=omega0,
            omega1=omega1,
            omega0p=abs(complex(omega0)) if omega0p is None else omega0p,
            omega1p=abs(complex(omega1)) if omega1p is None else omega1p,
            Delta0=Delta0,
            Delta1=Delta1,
            delta=delta,
        )

    @classmethod
    def paper(cls):
        """The experimentally motivated example set (nu=26.72, g=20, Omega=120, ...)."""
        return cls.build(
            nu=26.72, g0=20.0, g1=20.0, omega0=120.0, omega1=120.0,
            Delta0=3000.0, Delta1=600.0, delta=35.0,
        )

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)

    def scaled(self, s):
        """Every frequency multiplied by ``s``."""
        if not s > 0:
            raise ParameterError(f"scale factor must be positive, got {s!r}")
        return SystemParams(**{f.name: getattr(self, f.name) * s for f in dataclasses.fields(self)})


@dataclass(frozen=True)
class EffectiveCouplings:
    """Atom-mode couplings after eliminating the excited state (MHz).

    Unprimed values involve the ``|0>`` transition, primed values ``|1>``.
    Index ``n`` refers to normal mode ``c_n``.
    """

    lambda0: complex
    lambda1: complex
    lambda2: complex
    lambda0p: complex
    lambda1p: complex
    lambda2p: complex

    @property
    def unprimed(self):
        return (self.lambda0, self.lambda1, self.lambda2)

    @property
    def primed(self):
        return (self.lambda0p, self.lambda1p, self.lambda2p)

    def as_dict(self):
        return dataclasses.asdict(self)


@dataclass(frozen=True)
class EtaTriple:
    """Detunings of the three normal modes from the Raman resonance (MHz)."""

    eta0: float
    eta1: float
    eta2: float

    def __iter__(self):
        return iter((self.eta0, self.eta1, self.eta2))

    def __getitem__(self, n):
        return (self.eta0, self.eta1, self.eta2)[n]

    def __len__(self):
        return 3

    def as_array(self):
        return np.array([self.eta0, self.eta1, self.eta2])


class LogicalBasis(enum.Enum):
    """Two-logical-qubit basis states ``|mu_j nu_k>``.

    Each logical qubit uses two atoms in one cavity: ``|0>_L = |0 1>`` and
    ``|1>_L = |1 0>``.  ``atoms`` gives the ground level of (j1, j2, k1, k2).
    """

    B00 = "00"
    B01 = "01"
    B10 = "10"
    B11 = "11"

    @property
    def label(self):
        return self.value

    @property
    def mu(self):
        return int(self.value[0])

    @property
    def nu(self):
        return int(self.value[1])

    @property
    def atoms(self):
        mu, nu = self.mu, self.nu
        return (mu, 1 - mu, nu, 1 - nu)

    @classmethod
    def from_label(cls, label):
        return cls(str(label))


BASES = tuple(LogicalBasis)


@dataclass(frozen=True)
class ChiTable:
    """Mode drive strengths per logical basis state (MHz).

    ``values[i, n]`` is the drive of mode ``c_n`` when the system is in
    ``BASES[i]``.  Index with a label: ``table["01"][0]``.
    """

    values: np.ndarray

    def __post_init__(self):
        arr = np.array(self.values, dtype=complex)
        if arr.shape != (4, 3):
            raise ValueError(f"ChiTable needs shape (4, 3), got {arr.shape}")
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    def __getitem__(self, basis):
        if not isinstance(basis, LogicalBasis):
            basis = LogicalBasis.from_label(basis)
        return self.values[BASES.index(basis)]

    def as_dict(self):
        return {b.label: tuple(self[b]) for b in BASES}


def derive_couplings(params: SystemParams, eps: float = DEFAULT_EPS) -> EffectiveCouplings:
    """Couplings of the effective Raman Hamiltonian.

    ``lambda_n = -k_n Omega_0 g_0^* / 8 * (1/Delta_0 + 1/(Delta_0 + eta_n))``
    with ``k_0 = sqrt(2)``, ``k_1 = k_2 = 1``; primed values swap in
    ``Omega_1 g_1^*`` and ``Delta_1``.

    Raises
    ------
    SingularityError
        If any denominator is smaller than ``eps`` in magnitude.
    """
    p = params
    split = SQRT2 * p.nu
    shifts = (p.delta, p.delta - split, p.delta + split)
    prefactors = (SQRT2, 1.0, 1.0)

    def block(omega, g, Delta, tag):
        _check_nonzero(Delta, f"Delta{tag}", eps)
        drive = omega * g.conjugate()
        out = []
        for n, (k, shift) in enumerate(zip(prefactors, shifts)):
            _check_nonzero(Delta + shift, f"Delta{tag} + eta{n}", eps)
            out.append(-k * drive / 8.0 * (1.0 / Delta + 1.0 / (Delta + shift)))
        return out

    l0, l1, l2 = block(p.omega0, p.g0, p.Delta0, 0)
    # the primed lambda_2 is printed without its prime; it follows the primed pattern
    l0p, l1p, l2p = block(p.omega1, p.g1, p.Delta1, 1)
    return EffectiveCouplings(l0, l1, l2, l0p, l1p, l2p)


def chi_table(couplings: EffectiveCouplings) -> ChiTable:
    """Per-basis drive strength of each normal mode.

    Only atoms j1 and k1 are driven.  Modes c1, c2 couple symmetrically to
    both cavities, so their drive adds the two atoms' couplings; c0 is the
    antisymmetric mode, so it takes the difference.
    """
    c = couplings
    rows = [
        (0.0, 2 * c.lambda1, 2 * c.lambda2),
        (c.lambda0 - c.lambda0p, c.lambda1 + c.lambda1p, c.lambda2 + c.lambda2p),
        (c.lambda0p - c.lambda0, c.lambda1 + c.lambda1p, c.lambda2 + c.lambda2p),
        # third entry printed as chi_00^2; it belongs to the 11 row
        (0.0, 2 * c.lambda1p, 2 * c.lambda2p),
    ]
    return ChiTable(np.array(rows, dtype=complex))


def eta_values(params: SystemParams, eps: float = DEFAULT_EPS) -> EtaTriple:
    split = SQRT2 * params.nu
    eta = EtaTriple(params.delta, params.delta - split, params.delta + split)
    for n, value in enumerate(eta):
        _check_nonzero(value, f"eta{n}", eps)
    return eta


@dataclass(frozen=True)
class RegimeCheck:
    name: str
    value: float
    threshold: float

    @property
    def passed(self):
        return self.value <= self.threshold

    def as_dict(self):
        return {"name": self.name, "value": self.value, "threshold": self.threshold,
                "passed": self.passed}


@dataclass(frozen=True)
class RegimeReport:
    """Dimensionless ratios the effective model assumes to be small.

    Purely informational: nothing downstream consults ``all_passed``.
    """

    checks: tuple

    @property
    def all_passed(self):
        return all(c.passed for c in self.checks)

    @property
    def failures(self):
        return [c for c in self.checks if not c.passed]

    def __getitem__(self, name):
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def as_dict(self):
        return {"all_passed": self.all_passed, "checks": [c.as_dict() for c in self.checks]}


def _ratio(num, den):
    if num == 0:
        return 0.0
    if den == 0:
        return math.inf
    return num / den


def regime_report(params: SystemParams, threshold: float = 0.1) -> RegimeReport:
    p = params
    checks = []
    for m in (0, 1):
        D = abs(getattr(p, f"Delta{m}"))
        g = abs(getattr(p, f"g{m}"))
        om = abs(getattr(p, f"omega{m}"))
        checks += [
            RegimeCheck(f"sqrt2_nu/Delta{m}", _ratio(SQRT2 * abs(p.nu), D), threshold),
            RegimeCheck(f"delta/Delta{m}", _ratio(abs(p.delta), D), threshold),
            RegimeCheck(f"g{m}/Delta{m}", _ratio(g, D), threshold),
            RegimeCheck(f"omega{m}/Delta{m}", _ratio(om, D), threshold),
            RegimeCheck(f"g{m}/omega{m}", _ratio(g, om), threshold),
        ]
    chi = chi_table(derive_couplings(p))
    eta = eta_values(p)
    for basis in BASES:
        for n in range(3):
            checks.append(RegimeCheck(
                f"chi{basis.label}_{n}/eta{n}", _ratio(abs(chi[basis][n]), abs(eta[n])), threshold))
    return RegimeReport(tuple(checks))
