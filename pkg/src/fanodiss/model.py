"""Physical parameters of the dissipative Fano model and their discretization.

Units: hbar = 1 throughout. Every rate (Gamma, gamma) is entered as an energy,
so a Lindblad rate ``Gamma_c_nu[0] = 0.5`` means hbar*Gamma = 0.5 energy units.
Couplings to the continuum are given in reduced form (sqrt(n)*V and
sqrt(n)*mu_nu_c), which are the only combinations optical data can identify.
"""
from __future__ import annotations

from dataclasses import dataclass, field, fields
import math

import numpy as np


class SpecError(ValueError):
    """Raised when a SystemSpec cannot be used for the requested computation."""


@dataclass(frozen=True)
class SystemSpec:
    E_nu: tuple[float, ...] = (0.0, 4.0)
    E_e: float = 20.0
    sqrtn_V: float = 1.0 / math.sqrt(math.pi)
    mu_nu_e: tuple[float, ...] = (1.0, 0.5)
    sqrtn_mu_nu_c: tuple[float, ...] = (1.0 / math.sqrt(math.pi), 0.5 / math.sqrt(math.pi))
    Gamma_c_nu: tuple[float, ...] = (0.5, 0.5)
    Gamma_vib: float = 0.02
    gamma_e_nu: tuple[float, ...] = (0.0, 0.0)
    gamma_k_nu: tuple[float, ...] = (0.0, 0.0)
    gamma_k_e: float = 0.0
    F: float = 1e-4
    laser_delta: float = 1e-3
    theta: float = math.pi / 2
    I_in: float = 1.0

    def __post_init__(self):
        # lists from config files / callers are frozen into tuples
        for f in fields(self):
            value = getattr(self, f.name)
            if isinstance(value, (list, np.ndarray)):
                object.__setattr__(self, f.name, tuple(float(x) for x in value))

    @property
    def n_nu(self) -> int:
        return len(self.E_nu)

    @property
    def omega_vib(self) -> float:
        if self.n_nu < 2:
            raise SpecError("omega_vib needs at least two ground levels")
        return self.E_nu[1] - self.E_nu[0]

    def replace(self, **changes) -> "SystemSpec":
        from dataclasses import replace

        return replace(self, **changes)


@dataclass
class ValidationReport:
    ok: bool
    problems: list[str] = field(default_factory=list)

    def __bool__(self) -> bool:
        return self.ok


_PER_LEVEL = ("mu_nu_e", "sqrtn_mu_nu_c", "Gamma_c_nu", "gamma_e_nu", "gamma_k_nu")
_RATES = ("Gamma_c_nu", "Gamma_vib", "gamma_e_nu", "gamma_k_nu", "gamma_k_e", "laser_delta")


def validate_spec(spec: SystemSpec) -> ValidationReport:
    """Check every SystemSpec invariant and collect the violations."""
    problems = []
    n = spec.n_nu
    if n < 1:
        problems.append("at least one ground level required")
    else:
        if spec.E_nu[0] != 0.0:
            problems.append("E_nu[0] must be 0")
        if any(b <= a for a, b in zip(spec.E_nu, spec.E_nu[1:])):
            problems.append("E_nu must be strictly increasing")
    for name in _PER_LEVEL:
        if len(getattr(spec, name)) != n:
            problems.append(f"length of {name} must equal len(E_nu) = {n}")
    for name in _RATES:
        values = np.atleast_1d(getattr(spec, name))
        if np.any(values < 0):
            problems.append(f"negative rate: {name}")
    if spec.sqrtn_V == 0:
        problems.append("zero continuum coupling: sqrtn_V must be > 0")
    elif spec.sqrtn_V < 0:
        problems.append("sqrtn_V must be positive")
    if spec.I_in <= 0:
        problems.append("I_in must be positive")
    values = [spec.E_e, spec.sqrtn_V, spec.F, spec.theta, spec.I_in, spec.Gamma_vib]
    for name in ("E_nu",) + _PER_LEVEL:
        values.extend(getattr(spec, name))
    if not all(np.isfinite(values)):
        problems.append("non-finite parameter")
    return ValidationReport(not problems, problems)


def check_spec(spec: SystemSpec) -> None:
    report = validate_spec(spec)
    if not report:
        raise SpecError("; ".join(report.problems))


@dataclass(frozen=True)
class ReducedParams:
    """Wideband parameters: injection width, asymmetry per ground level, eta."""

    gamma: float
    q_nu: tuple[float, ...]
    eta: float
    E_e: float

    @property
    def q(self) -> float:
        return self.q_nu[0]

    def epsilon_of(self, omega_L):
        return (np.asarray(omega_L, dtype=float) - self.E_e) / self.gamma

    def omega_of(self, epsilon):
        return self.E_e + self.gamma * np.asarray(epsilon, dtype=float)


def reduced_parameters(spec: SystemSpec) -> ReducedParams:
    if spec.sqrtn_V == 0:
        raise SpecError("zero continuum coupling: gamma = 0")
    gamma = math.pi * spec.sqrtn_V**2
    q_nu = []
    for mu_e, mu_c in zip(spec.mu_nu_e, spec.sqrtn_mu_nu_c):
        # n*pi*V*mu_c = pi * (sqrt(n) V) * (sqrt(n) mu_c)
        denom = math.pi * spec.sqrtn_V * mu_c
        q_nu.append(math.copysign(math.inf, mu_e) if denom == 0 else mu_e / denom)
    eta = sum(spec.Gamma_c_nu) / (4.0 * gamma)
    return ReducedParams(gamma=gamma, q_nu=tuple(q_nu), eta=eta, E_e=spec.E_e)


@dataclass(frozen=True, eq=False)
class DiscretizedModel:
    """Finite basis [nu_0..nu_{N-1}, e, k_0..k_{Nk-1}] realizing a SystemSpec.

    ``mu`` has shape (N_nu, 1 + N_k): column 0 is the discrete dipole mu_nu_e,
    the rest are the per-state continuum dipoles sqrtn_mu_nu_c * sqrt(dE).
    """

    spec: SystemSpec
    W: float
    N_k: int
    E_k: np.ndarray
    dE: float
    v: float
    mu: np.ndarray

    @property
    def n_nu(self) -> int:
        return self.spec.n_nu

    @property
    def d(self) -> int:
        return self.n_nu + 1 + self.N_k

    @property
    def e_index(self) -> int:
        return self.n_nu

    @property
    def k_slice(self) -> slice:
        return slice(self.n_nu + 1, self.d)

    @property
    def excited_slice(self) -> slice:
        return slice(self.n_nu, self.d)

    @property
    def energies(self) -> np.ndarray:
        return np.concatenate([self.spec.E_nu, [self.spec.E_e], self.E_k])

    @property
    def labels(self) -> list[str]:
        return [f"nu{i}" for i in range(self.n_nu)] + ["e"] + [f"k{j}" for j in range(self.N_k)]

    @property
    def gamma(self) -> float:
        # golden-rule width of the discretized band
        return math.pi * self.v**2 / self.dE

    def is_excited(self) -> np.ndarray:
        mask = np.zeros(self.d, dtype=bool)
        mask[self.excited_slice] = True
        return mask


def discretize(spec: SystemSpec, W: float, N_k: int) -> DiscretizedModel:
    """Uniform odd grid of N_k continuum states on [E_e - W, E_e + W]."""
    check_spec(spec)
    if W <= 0:
        raise SpecError("continuum half-bandwidth W must be positive")
    if N_k < 3 or N_k % 2 == 0:
        raise SpecError("N_k must be odd and >= 3")
    dE = 2.0 * W / (N_k - 1)
    half = (N_k - 1) // 2
    E_k = spec.E_e + dE * np.arange(-half, half + 1, dtype=float)
    scale = math.sqrt(dE)
    mu = np.empty((spec.n_nu, 1 + N_k))
    mu[:, 0] = spec.mu_nu_e
    mu[:, 1:] = (np.asarray(spec.sqrtn_mu_nu_c) * scale)[:, None]
    return DiscretizedModel(
        spec=spec, W=float(W), N_k=int(N_k), E_k=E_k, dE=dE, v=spec.sqrtn_V * scale, mu=mu
    )


def band_for(spec: SystemSpec, W_over_gamma: float = 40.0, N_k: int = 401) -> DiscretizedModel:
    """Discretize with the half-bandwidth given in units of gamma."""
    gamma = reduced_parameters(spec).gamma
    return discretize(spec, W_over_gamma * gamma, N_k)


def spec_for_profile(q: float, eta: float, gamma: float = 1.0, **overrides) -> SystemSpec:
    """Build a two-level-ground spec with prescribed (q, eta) for level 0.

    The continuum rate is split equally over the ground levels and the
    nu=1 dipoles are half of the nu=0 ones unless overridden.
    """
    sqrtn_V = math.sqrt(gamma / math.pi)
    base = SystemSpec()
    sqrtn_mu_c0 = overrides.pop("sqrtn_mu_c0", 1.0 / math.sqrt(math.pi))
    mu_0e = q * math.pi * sqrtn_V * sqrtn_mu_c0
    n_nu = len(overrides.get("E_nu", base.E_nu))
    total = 4.0 * eta * gamma
    params = dict(
        sqrtn_V=sqrtn_V,
        mu_nu_e=(mu_0e,) + (0.5 * mu_0e,) * (n_nu - 1),
        sqrtn_mu_nu_c=(sqrtn_mu_c0,) + (0.5 * sqrtn_mu_c0,) * (n_nu - 1),
        Gamma_c_nu=(total / n_nu,) * n_nu,
        gamma_e_nu=(0.0,) * n_nu,
        gamma_k_nu=(0.0,) * n_nu,
    )
    params.update(overrides)
    return base.replace(**params)
