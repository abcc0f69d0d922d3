"""Emission spectra from the quantum-regression resolvent, and absorption scans."""
from __future__ import annotations

from dataclasses import dataclass, field
import hashlib
import math

import numpy as np
import scipy.sparse as sp
from scipy.optimize import least_squares

from .linalg import SchurFactor, SingularSystemError, factorize
from .liouvillian import Superoperator, assemble_liouvillian
from .model import DiscretizedModel, SystemSpec, reduced_parameters
from .steadystate import excited_population, solve_direct


@dataclass
class SpectrumSeries:
    kind: str  # "emission" or "profile"
    grid: np.ndarray
    values: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.grid = np.asarray(self.grid, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.grid.shape != self.values.shape:
            raise ValueError("grid and values must have the same shape")
        if np.any(np.diff(self.grid) <= 0):
            raise ValueError("grid must be strictly increasing")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("spectrum values must be finite")


@dataclass
class PeakReport:
    component: str
    center: float
    half_width: float
    area: float
    residual: float
    ok: bool = True
    message: str = ""


def model_hash(model: DiscretizedModel) -> str:
    h = hashlib.sha256(repr((model.spec, model.W, model.N_k)).encode())
    return h.hexdigest()[:16]


def angular_prefactor(omega, theta, I_in, c=1.0, eps0=1.0, hbar=1.0):
    """omega^4 sin^2(theta) / (I_in 8 pi^3 c^3 eps0 hbar); natural units by default."""
    if np.any(np.asarray(I_in) <= 0):
        raise ValueError("I_in must be positive")
    omega = np.asarray(omega, dtype=float)
    return omega**4 * np.sin(theta) ** 2 / (I_in * 8 * math.pi**3 * c**3 * eps0 * hbar)


def resolvent_solve(A: Superoperator | sp.spmatrix, z: complex, rhs: np.ndarray) -> np.ndarray:
    """Solve (z - A) x = rhs."""
    if isinstance(A, Superoperator):
        M, hubs = A.matrix, A.hubs()
    else:
        M, hubs = sp.csr_matrix(A), None
    n = M.shape[0]
    rhs = np.asarray(rhs, dtype=complex)
    if not np.any(rhs):
        return np.zeros_like(rhs)
    K = (z * sp.identity(n, dtype=complex, format="csr") - M).tocsr()
    x = factorize(K, hubs).solve(rhs)
    if not np.all(np.isfinite(x)):
        raise SingularSystemError(f"resolvent singular at z={z}")
    resid = np.abs(K @ x - rhs).max()
    if resid > 1e-10 * max(np.abs(rhs).max(), 1e-300) * max(1.0, abs(z)):
        raise SingularSystemError(f"resolvent residual {resid:.3e} at z={z}")
    return x


def _emission_channels(model: DiscretizedModel, rho: np.ndarray):
    """Sources X_ab = rho |a><b| on column b, and detection indices (a, b)."""
    d, n = model.d, model.n_nu
    pairs, weights = [], []
    for b in range(n):
        for j, a in enumerate(range(n, d)):
            w = abs(model.mu[b, j]) ** 2
            if w != 0:
                pairs.append((a, b))
                weights.append(w)
    return pairs, np.asarray(weights)


def emission_kernel(A: Superoperator, rho: np.ndarray, model: DiscretizedModel,
                    omega_grid, omega_L: float, delta: float, chunk: int = 256) -> np.ndarray:
    """Sum over (a, b) of mu_ab^2 sum_r Re[rho_ra G_{ab,rb}(delta - i(omega - omega_L))]."""
    d = model.d
    pairs, weights = _emission_channels(model, rho)
    cols = np.array([b for _, b in pairs])
    acts = np.array([a for a, _ in pairs])
    det = acts * d + cols
    hubs = A.hubs()
    out = np.empty(len(omega_grid))
    eye = sp.identity(A.dim, dtype=complex, format="csr")
    for i, omega in enumerate(omega_grid):
        z = delta - 1j * (omega - omega_L)
        K = (z * eye - A.matrix).tocsr()
        fac = factorize(K, hubs)
        total = 0.0
        for start in range(0, len(pairs), chunk):
            sl = slice(start, start + chunk)
            a_s, b_s = acts[sl], cols[sl]
            m = len(a_s)
            # source column b holds rho[:, a]: entries (r, b) for every r
            rows = (np.arange(d)[:, None] * d + b_s[None, :]).ravel()
            vals = rho[:, a_s].ravel()
            which = np.tile(np.arange(m), d)
            if isinstance(fac, SchurFactor):
                pos = np.full(A.dim, -1)
                pos[fac.h] = np.arange(fac.h.size)
                X = np.zeros((fac.h.size, m), dtype=complex)
                X[pos[rows], which] = vals
                Y = fac.solve_hubs(X)
                y = Y[pos[det[sl]], np.arange(m)]
            else:
                X = np.zeros((A.dim, m), dtype=complex)
                X[rows, which] = vals
                Y = fac.solve(X)
                y = Y[det[sl], np.arange(m)]
            total += float(np.sum(weights[sl] * y.real))
        out[i] = total
    return out


def emission_spectrum(model: DiscretizedModel, rho_ss: np.ndarray, omega_grid, delta: float,
                      omega_L: float, F: float | None = None, field_in_resolvent: bool = True,
                      prefactor: bool = True) -> SpectrumSeries:
    """Differential scattering cross-section on ``omega_grid`` (absolute emitted energies).

    The resolvent uses the full field-dressed generator by default; with the
    field-free generator the coherent Rayleigh and Raman lines vanish at
    lowest order because ground-state sources cannot reach the emitting
    coherences.
    """
    if delta <= 0:
        raise ValueError("laser half-width delta must be positive")
    F = model.spec.F if F is None else F
    A = assemble_liouvillian(model, F if field_in_resolvent else 0.0, omega_L)
    grid = np.asarray(omega_grid, dtype=float)
    values = emission_kernel(A, rho_ss, model, grid, omega_L, delta)
    if prefactor:
        values = values * angular_prefactor(grid, model.spec.theta, model.spec.I_in)
    meta = dict(model=model_hash(model), F=F, omega_L=omega_L, delta=delta,
                prefactor=prefactor, field_in_resolvent=field_in_resolvent)
    return SpectrumSeries("emission", grid, values, meta)


def absorption_scan(model: DiscretizedModel, omega_L_grid, F: float | None = None,
                    progress=None) -> SpectrumSeries:
    """Steady-state excited population at each laser frequency."""
    F = model.spec.F if F is None else F
    grid = np.asarray(omega_L_grid, dtype=float)
    values = np.empty(grid.size)
    for i, w in enumerate(grid):
        rho = solve_direct(assemble_liouvillian(model, F, float(w)))
        values[i] = excited_population(rho, model)
        if progress is not None:
            progress(i, w, values[i])
    rp = reduced_parameters(model.spec)
    meta = dict(model=model_hash(model), F=F, axis="omega_L",
                epsilon=rp.epsilon_of(grid), gamma=rp.gamma, E_e=rp.E_e)
    return SpectrumSeries("profile", grid, values, meta)


def expected_lines(spec: SystemSpec, omega_L: float, delta: float | None = None) -> dict:
    """Component id -> (center, half-width) for the emission lines of ``spec``."""
    delta = spec.laser_delta if delta is None else delta
    rp = reduced_parameters(spec)
    total = sum(spec.Gamma_c_nu)
    ge = spec.gamma_e_nu
    lines = {
        "rayleigh": (omega_L, delta),
        "fluor_continuum_0": (omega_L, total + 2 * ge[0]),
        "fluor_discrete_0": (spec.E_e - spec.E_nu[0], rp.gamma + ge[0]),
    }
    if spec.n_nu > 1:
        wv, g2 = spec.omega_vib, spec.Gamma_vib / 2
        lines["raman"] = (omega_L - wv, g2 + delta)
        lines["fluor_continuum_1"] = (omega_L - wv, total + ge[0] + ge[1] + g2)
        lines["fluor_discrete_1"] = (spec.E_e - spec.E_nu[1], rp.gamma + ge[1] + g2)
    return lines


def lorentz_points(center: float, half_width: float, n: int = 61, span: float = 30.0) -> np.ndarray:
    """Points that sample a Lorentzian uniformly in its cumulative distribution."""
    t = np.linspace(-np.arctan(span), np.arctan(span), n)
    return center + half_width * np.tan(t)


def emission_grid(spec: SystemSpec, omega_L: float, n_per_line: int = 61, span: float = 30.0,
                  delta: float | None = None, components=None) -> np.ndarray:
    lines = expected_lines(spec, omega_L, delta)
    keys = lines if components is None else components
    pts = np.concatenate([lorentz_points(*lines[k], n_per_line, span) for k in keys])
    pts = np.unique(pts)
    keep = np.concatenate([[True], np.diff(pts) > 1e-12 * np.maximum(1.0, np.abs(pts[1:]))])
    return pts[keep]


def _lorentz_sum(p, x, n_lines):
    out = np.full_like(x, p[0])
    for i in range(n_lines):
        area, c, w = p[1 + 3 * i: 4 + 3 * i]
        out += area * (w / np.pi) / ((x - c) ** 2 + w**2)
    return out


def fit_lorentzians(x, y, guesses, background: bool = True):
    """Least-squares sum of area-normalized Lorentzians plus a constant.

    ``guesses`` is a list of (area, center, half_width). Returns the result
    vector [bg, a1, c1, w1, ...], the relative rms residual and a success flag.
    """
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    ys = max(np.abs(y).max(), 1e-300)
    x0 = np.mean([g[1] for g in guesses])
    xs = max(max(g[2] for g in guesses), 1e-300)
    u, v = (x - x0) / xs, y / ys
    p0, lo, hi = [0.0], [-np.inf if background else -1e-300], [np.inf if background else 1e-300]
    for area, c, w in guesses:
        p0 += [max(area, 0.0) / (ys * xs), (c - x0) / xs, w / xs]
        lo += [0.0, -np.inf, 1e-9 * w / xs]
        hi += [np.inf, np.inf, np.inf]
    p0 = np.clip(p0, np.asarray(lo) + 1e-15, hi)
    n = len(guesses)
    res = least_squares(lambda p: _lorentz_sum(p, u, n) - v, p0, bounds=(lo, hi),
                        method="trf", x_scale="jac", ftol=1e-15, xtol=1e-14, gtol=1e-15,
                        max_nfev=2000)
    p = res.x.copy()
    out = [p[0] * ys]
    for i in range(n):
        a, c, w = p[1 + 3 * i: 4 + 3 * i]
        out += [a * ys * xs, x0 + c * xs, w * xs]
    rms = float(np.sqrt(np.mean(res.fun**2)))
    return np.array(out), rms, bool(res.success)


_PAIRS = (("rayleigh", "fluor_continuum_0"), ("raman", "fluor_continuum_1"))


def _line_model(p, x, lines):
    out = np.full_like(x, p[0])
    for i, (c0, w0, a0) in enumerate(lines):
        a, u, lw = p[1 + 3 * i: 4 + 3 * i]
        w = w0 * np.exp(lw)
        out += a * a0 * (w / np.pi) / ((x - c0 - w0 * u) ** 2 + w**2)
    return out


def _joint_fit(x, y, names, expected, center_range, width_range, max_nfev):
    ymax = max(np.abs(y).max(), 1e-300)
    # lines sharing a center keep disjoint width ranges split at the geometric mean
    wlo = {k: expected[k][1] / width_range for k in names}
    whi = {k: expected[k][1] * width_range for k in names}
    for narrow, broad in _PAIRS:
        if narrow in names and broad in names:
            split = math.sqrt(expected[narrow][1] * expected[broad][1])
            whi[narrow] = min(whi[narrow], split)
            wlo[broad] = max(wlo[broad], split)
    lines = []
    p0, lo, hi = [0.0], [-ymax], [ymax]
    for k in names:
        c, w = expected[k]
        a0 = ymax * np.pi * w
        guess = max(np.interp(c, x, y), 0.0) * np.pi * w / a0
        lines.append((c, w, a0))
        lw_lo, lw_hi = np.log(wlo[k] / w), np.log(whi[k] / w)
        p0 += [guess, 0.0, float(np.clip(0.0, lw_lo, lw_hi))]
        lo += [0.0, -center_range, lw_lo]
        hi += [np.inf, center_range, lw_hi]
    scale = np.abs(y) + 1e-12 * ymax
    res = least_squares(lambda p: (_line_model(p, x, lines) - y) / scale, np.asarray(p0),
                        bounds=(lo, hi), method="trf", x_scale="jac",
                        ftol=1e-12, xtol=1e-12, gtol=1e-12, max_nfev=max_nfev)
    out = {}
    for i, k in enumerate(names):
        c0, w0, a0 = lines[i]
        a, u, lw = res.x[1 + 3 * i: 4 + 3 * i]
        out[k] = (float(c0 + w0 * u), float(w0 * np.exp(lw)), float(a * a0))
    return out, res


def component_analysis(s: SpectrumSeries, spec: SystemSpec, omega_L: float,
                       components=None, center_range: float = 1.0,
                       width_range: float = 30.0, negligible: float = 1e-6) -> list[PeakReport]:
    """Joint Lorentzian fit of every expected emission line.

    All lines are fitted at once with a constant background, using residuals
    relative to the data so that weak fluorescence and sharp coherent lines
    carry comparable weight. Each center may move by ``center_range`` expected
    half-widths and each width by a factor ``width_range``; a coherent line and
    the fluorescence at the same center are kept apart by their widths. Lines
    whose area falls below ``negligible`` times the largest one after a short
    first pass are reported as such and left out of the final fit. Use a
    spectrum without the omega^4 prefactor so the lines are exact Lorentzians.
    """
    if s.kind != "emission":
        raise ValueError("component_analysis needs an emission spectrum")
    delta = s.meta.get("delta", spec.laser_delta)
    expected = expected_lines(spec, omega_L, delta)
    names = list(expected) if components is None else list(components)
    unknown = set(names) - set(expected)
    if unknown:
        raise ValueError(f"unknown components: {sorted(unknown)}")
    x, y = s.grid, s.values
    args = (expected, center_range, width_range)
    first, _ = _joint_fit(x, y, names, *args, max_nfev=300)
    top = max(v[2] for v in first.values())
    keep = [k for k in names if first[k][2] > negligible * top]
    final, res = _joint_fit(x, y, keep, *args, max_nfev=5000)
    rms = float(np.sqrt(np.mean(res.fun**2)))
    ok = res.status > 0
    reports = []
    for k in names:
        if k in final:
            c, w, a = final[k]
            reports.append(PeakReport(k, c, w, a, rms, ok, "" if ok else "fit did not converge"))
        else:
            c, w, a = first[k]
            reports.append(PeakReport(k, c, w, a, rms, True, "negligible"))
    return reports


def coherent_line_areas(model: DiscretizedModel, rho: np.ndarray) -> dict:
    """Residues of the coherent poles (no omega^4 prefactor).

    Rayleigh: pi * sum_ab mu_ab^2 |rho_ab|^2 (exact for any dephasing).
    Raman: pi * sum_a mu_a1^2 |rho_a0|^2 (exact at lowest order without
    pure dephasing).
    """
    n = model.n_nu
    exc = rho[n:, :n]
    out = {"rayleigh": float(np.pi * np.sum(model.mu.T**2 * np.abs(exc) ** 2))}
    if n > 1:
        out["raman"] = float(np.pi * np.sum(model.mu[1] ** 2 * np.abs(exc[:, 0]) ** 2))
    return out


def window_weight(s: SpectrumSeries, lo: float, hi: float, subtract=()) -> float:
    """Trapezoid integral over [lo, hi] after removing fitted Lorentzian components."""
    sel = (s.grid >= lo) & (s.grid <= hi)
    x, y = s.grid[sel], s.values[sel].copy()
    for r in subtract:
        y -= r.area * (r.half_width / np.pi) / ((x - r.center) ** 2 + r.half_width**2)
    return float(np.trapezoid(y, x)) if hasattr(np, "trapezoid") else float(np.trapz(y, x))
