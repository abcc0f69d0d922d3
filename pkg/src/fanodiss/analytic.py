"""Closed-form wideband results: Fano profiles, populations, extinction,
per-process emission parameters and parameter extraction.

Rates are energies (hbar = 1), so expressions such as n*pi*V^2/hbar + gamma_e0
reduce to gamma + gamma_e0.
"""
from __future__ import annotations

from dataclasses import dataclass
import math

import numpy as np

from .model import SpecError, SystemSpec, reduced_parameters

PROCESSES = (
    "populations",
    "rayleigh",
    "raman",
    "fluor_discrete_0",
    "fluor_discrete_1",
    "fluor_continuum_0",
    "fluor_continuum_1",
)


def fano_h(eps, q):
    eps = np.asarray(eps, dtype=float)
    return (q + eps) ** 2 / (eps**2 + 1.0)


def profile_f(eps, q, eta, alpha):
    """Fano term weighted by alpha plus a Lorentzian of weight eta*(q + 1)."""
    if np.any((np.asarray(alpha) != 0) & (np.asarray(alpha) != 1)):
        raise ValueError("alpha must be 0 or 1")
    eps = np.asarray(eps, dtype=float)
    return alpha * (q + eps) ** 2 / (eps**2 + 1.0) + eta * (q + 1.0) / (eps**2 + 1.0)


def lorentzian(omega, center, half_width):
    """Area-normalized Lorentzian R(omega, center, half_width)."""
    omega = np.asarray(omega, dtype=float)
    return (half_width / math.pi) / ((omega - center) ** 2 + half_width**2)


@dataclass(frozen=True)
class ProfileSpec:
    alpha: int
    eta_w: float
    q_eff: float
    eps_scale: float = 1.0
    B: float | None = None

    def __post_init__(self):
        if self.alpha not in (0, 1):
            raise ValueError("alpha must be 0 or 1")
        if not 0.0 < self.eps_scale <= 1.0:
            raise ValueError("eps_scale must lie in (0, 1]")

    def __call__(self, eps):
        return profile_f(np.asarray(eps) * self.eps_scale, self.q_eff, self.eta_w, self.alpha)


@dataclass(frozen=True)
class LineshapeSpec:
    """Emission line: center = offset (+ omega_L when ``follows_laser``)."""

    offset: float
    half_width: float
    follows_laser: bool

    def center(self, omega_L: float) -> float:
        return self.offset + (omega_L if self.follows_laser else 0.0)

    def __call__(self, omega, omega_L):
        return lorentzian(omega, self.center(omega_L), self.half_width)


@dataclass(frozen=True)
class ExtractedParams:
    sum_Gamma_c: float
    sqrtn_V: float
    sqrtn_mu_0c: float
    mu_0e: float
    sqrtn_mu_1c: float
    mu_1e: float

    def astuple(self):
        return (self.sum_Gamma_c, self.sqrtn_V, self.sqrtn_mu_0c,
                self.mu_0e, self.sqrtn_mu_1c, self.mu_1e)


def prefactor_constants(spec: SystemSpec) -> tuple[float, float, float]:
    """(B_abs, B_ray, B_ram) consistent with the extraction relations."""
    total = sum(spec.Gamma_c_nu)
    if total <= 0:
        raise SpecError("sum of Gamma_c_nu must be positive for B_abs")
    s0 = spec.sqrtn_mu_nu_c[0]
    B_abs = math.pi * s0**2 * spec.F**2 / (2.0 * total)
    B_ray = math.pi * s0**2 * B_abs
    s1 = spec.sqrtn_mu_nu_c[1] if spec.n_nu > 1 else 0.0
    B_ram = math.pi * s1**2 * B_abs
    return B_abs, B_ray, B_ram


def extract_parameters(B_abs, B_ray, B_ram, gamma, q, eta_ram, F) -> ExtractedParams:
    """Model parameters from fitted prefactors, gamma, q, the Raman weight and F.

    mu_1e is returned as the square root of 8 eta_ram gamma B_abs B_ram / (pi B_ray F^2):
    with the Raman Lorentzian weight mu_1e^2 eta / (n mu_1c^2) that expression
    equals mu_1e^2.
    """
    for name, val in dict(B_abs=B_abs, B_ray=B_ray, B_ram=B_ram, gamma=gamma,
                          q=q, eta_ram=eta_ram, F=F).items():
        if not val > 0:
            raise ValueError(f"{name} must be positive")
    sum_G = B_ray / B_abs**2 * F**2 / 2.0
    return ExtractedParams(
        sum_Gamma_c=sum_G,
        sqrtn_V=math.sqrt(gamma / math.pi),
        sqrtn_mu_0c=math.sqrt(B_ray / (math.pi * B_abs)),
        mu_0e=math.sqrt(B_ray * gamma / B_abs) * q,
        sqrtn_mu_1c=math.sqrt(B_ram / (math.pi * B_abs)),
        mu_1e=math.sqrt(8.0 * eta_ram * gamma * B_abs * B_ram / (math.pi * B_ray * F**2)),
    )


def table1_row(process: str, spec: SystemSpec):
    """(ProfileSpec, LineshapeSpec | None) for one optical process."""
    if process not in PROCESSES:
        raise ValueError(f"unknown process {process!r}; expected one of {PROCESSES}")
    rp = reduced_parameters(spec)
    gamma, q, eta = rp.gamma, rp.q, rp.eta
    try:
        B_abs, B_ray, B_ram = prefactor_constants(spec)
    except SpecError:
        B_abs = B_ray = B_ram = None
    total = sum(spec.Gamma_c_nu)
    ge0 = spec.gamma_e_nu[0]
    ge1 = spec.gamma_e_nu[1] if spec.n_nu > 1 else 0.0
    s = gamma / (gamma + ge0)
    G2 = spec.Gamma_vib / 2.0
    needs_vib = process in ("raman", "fluor_discrete_1", "fluor_continuum_1")
    if needs_vib and spec.n_nu < 2:
        raise SpecError(f"{process} needs a vibrationally excited level")
    wvib = spec.omega_vib if spec.n_nu > 1 else 0.0

    if process == "populations":
        return ProfileSpec(1, eta, q, 1.0, B_abs), None
    if process == "rayleigh":
        w = spec.mu_nu_e[0] ** 2 / spec.sqrtn_mu_nu_c[0] ** 2 * eta
        return ProfileSpec(1, w, q, 1.0, B_ray), LineshapeSpec(0.0, spec.laser_delta, True)
    if process == "raman":
        w = spec.mu_nu_e[1] ** 2 / spec.sqrtn_mu_nu_c[1] ** 2 * eta
        return ProfileSpec(1, w, q, 1.0, B_ram), LineshapeSpec(-wvib, G2, True)
    if process == "fluor_discrete_0":
        return (ProfileSpec(0, s**2 * eta, q * s, s),
                LineshapeSpec(spec.E_e - spec.E_nu[0], gamma + ge0, False))
    if process == "fluor_discrete_1":
        return (ProfileSpec(0, s**2 * eta, q * s, s),
                LineshapeSpec(spec.E_e - spec.E_nu[1], gamma + ge1 + G2, False))
    w = ge0**2 / (gamma + ge0) ** 2 / (q**2 + 1.0)
    if process == "fluor_continuum_0":
        return ProfileSpec(1, w, q * s, s), LineshapeSpec(0.0, total + 2 * ge0, True)
    return (ProfileSpec(1, w, q * s, s),
            LineshapeSpec(-wvib, total + ge0 + ge1 + G2, True))


def excited_population_analytic(spec: SystemSpec, omega_L):
    """B_abs * f(eps, q, eta, 1) with the printed Lorentzian weight eta*(q+1)."""
    rp = reduced_parameters(spec)
    B_abs = prefactor_constants(spec)[0]
    return B_abs * profile_f(rp.epsilon_of(omega_L), rp.q, rp.eta, 1)


def effective_eta(q, eta):
    """Lorentzian weight that makes f(eps, q, ., 1) equal the exact wideband
    population h + 2*eta*(q^2 + 1)/(eps^2 + 1); undefined at q = -1."""
    return 2.0 * eta * (q**2 + 1.0) / (q + 1.0)


def excited_population_wideband(spec: SystemSpec, omega_L):
    """Weak-field wideband population solved directly from the coherence equations.

    The continuum amplitude carries the Fano factor (q + eps)/(eps + i), the
    discrete amplitude a pure Lorentzian of weight (q^2 + 1); their ratio of
    populations is Gamma/(2 gamma) = 2 eta.
    """
    rp = reduced_parameters(spec)
    B_abs = prefactor_constants(spec)[0]
    eps = rp.epsilon_of(omega_L)
    return B_abs * (fano_h(eps, rp.q) + 2.0 * rp.eta * (rp.q**2 + 1.0) / (eps**2 + 1.0))


def extinction_coefficient(spec: SystemSpec, omega_L, c=1.0, eps0=1.0, hbar=1.0):
    """(n pi mu_0c^2 / (c eps0 hbar)) * hbar omega_L * h(eps; q); eta is forced to 0."""
    rp = reduced_parameters(spec)
    pref = math.pi * spec.sqrtn_mu_nu_c[0] ** 2 / (c * eps0 * hbar)
    omega_L = np.asarray(omega_L, dtype=float)
    return pref * hbar * omega_L * profile_f(rp.epsilon_of(omega_L), rp.q, 0.0, 1)


def emission_cross_section_analytic(process, spec: SystemSpec, omega, omega_L, B=None,
                                    prefactor=True):
    """A(theta) * B * R(omega, omega_0, Delta) * f(scaled eps, q_eff, eta_w, alpha)."""
    from .spectra import angular_prefactor

    if process == "populations":
        raise ValueError("populations have no emission lineshape")
    prof, line = table1_row(process, spec)
    B = prof.B if B is None else B
    if B is None:
        raise ValueError(f"no closed-form prefactor for {process}; pass B explicitly")
    rp = reduced_parameters(spec)
    value = B * line(omega, omega_L) * prof(rp.epsilon_of(omega_L))
    if prefactor:
        value = value * angular_prefactor(omega, spec.theta, spec.I_in)
    return value
