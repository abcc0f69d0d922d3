"""Least-squares fits of Fano-type profiles and the q_eff model-error study."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import least_squares

from .analytic import profile_f

MODEL_KINDS = ("standard", "shifted", "full")
_NAMES = {
    "standard": ("C", "x0", "gamma", "q"),
    "shifted": ("C", "x0", "gamma", "q", "D"),
    "full": ("C", "x0", "gamma", "q", "eta"),
}
Q_STARTS = (0.5, -0.5, 1.0, -1.0, 2.0, -2.0, 4.0, -4.0, 8.0, -8.0)
MAX_ITER = 500
COARSE_ITER = 40
N_REFINE = 3


class FitError(RuntimeError):
    pass


@dataclass
class FitReport:
    kind: str
    params: dict
    sse: float
    converged: bool
    iterations: int
    starts: int = 0
    grad_norm: float = float("nan")

    @property
    def q_eff(self) -> float:
        return self.params["q"]

    def as_vector(self) -> np.ndarray:
        return np.array([self.params[k] for k in _NAMES[self.kind]])


def model_values(kind: str, p, x) -> np.ndarray:
    C, x0, g, q = p[:4]
    u = (np.asarray(x, dtype=float) - x0) / g
    h = (q + u) ** 2 / (u**2 + 1.0)
    if kind == "standard":
        return C * h
    if kind == "shifted":
        return C * (h + p[4])
    if kind == "full":
        return C * profile_f(u, q, p[4], 1)
    raise ValueError(f"unknown model kind {kind!r}")


def _jacobian(kind: str, p, x) -> np.ndarray:
    C, x0, g, q = p[:4]
    u = (x - x0) / g
    den = u**2 + 1.0
    h = (q + u) ** 2 / den
    dh_du = 2.0 * (q + u) * (1.0 - q * u) / den**2
    dh_dq = 2.0 * (q + u) / den
    J = np.empty((x.size, len(p)))
    if kind == "full":
        eta = p[4]
        L = 1.0 / den
        dL_du = -2.0 * u / den**2
        body = h + eta * (q + 1.0) * L
        d_du = dh_du + eta * (q + 1.0) * dL_du
        J[:, 3] = C * (dh_dq + eta * L)
        J[:, 4] = C * (q + 1.0) * L
    else:
        body = h + (p[4] if kind == "shifted" else 0.0)
        d_du = dh_du
        J[:, 3] = C * dh_dq
        if kind == "shifted":
            J[:, 4] = C
    J[:, 0] = body
    J[:, 1] = -C * d_du / g
    J[:, 2] = -C * d_du * u / g
    return J


def _as_xy(data):
    if hasattr(data, "grid") and hasattr(data, "values"):
        return np.asarray(data.grid, float), np.asarray(data.values, float)
    x, y = data
    return np.asarray(x, dtype=float), np.asarray(y, dtype=float)


def _starts(kind, x, y, init_config):
    span = x[-1] - x[0]
    i_max, i_min = int(np.argmax(y)), int(np.argmin(y))
    x_max, x_min = x[i_max], x[i_min]
    ymax, ymin = y[i_max], y[i_min]
    q_list = init_config.get("q_starts", Q_STARTS)
    out = []
    for q in q_list:
        aq = abs(q)
        geoms = []
        sep = abs(x_max - x_min)
        # h peaks at u = 1/q and vanishes at u = -q
        if sep > 0 and (x_max - x_min) * q > 0:
            g = sep / (aq + 1.0 / aq)
            geoms.append((x_min + q * g, g))
        geoms.append((x[0] + 0.5 * span, span / 10.0))
        for x0, g in geoms:
            base = min(max(ymin, 0.0), 0.5 * ymax)
            C = max(ymax - base, 1e-300) / (1.0 + q * q)
            if kind == "standard":
                out.append([C, x0, g, q])
            elif kind == "shifted":
                out.append([C, x0, g, q, base / C])
            else:
                for eta in init_config.get("eta_starts", (0.1, 1.0)):
                    out.append([C, x0, g, q, eta])
    if "p0" in init_config:
        out.insert(0, list(init_config["p0"]))
    return out


def fit_profile(data, model_kind: str, init_config: dict | None = None) -> FitReport:
    """Multi-start bounded least squares; the lowest SSE wins, ties go to smaller |q|."""
    if model_kind not in MODEL_KINDS:
        raise ValueError(f"unknown model kind {model_kind!r}")
    init_config = dict(init_config or {})
    x, y = _as_xy(data)
    if x.size < 8:
        raise FitError("need at least 8 data points")
    if np.ptp(y) == 0:
        raise FitError("degenerate data: constant series")
    order = np.argsort(x)
    x, y = x[order], y[order]
    span = x[-1] - x[0]
    lo = [-np.inf, -np.inf, 1e-9 * span, -np.inf]
    hi = [np.inf] * 4
    if model_kind == "shifted":
        lo.append(-np.inf)
        hi.append(np.inf)
    elif model_kind == "full":
        lo.append(0.0)
        hi.append(np.inf)

    def run(p0, budget):
        p0 = np.clip(np.asarray(p0, float), lo, hi)
        p0[2] = max(p0[2], 1e-6 * span)
        try:
            res = least_squares(
                lambda p: model_values(model_kind, p, x) - y,
                p0,
                jac=lambda p: _jacobian(model_kind, p, x),
                bounds=(lo, hi),
                method="trf",
                x_scale="jac",
                ftol=1e-15,
                xtol=1e-10,
                gtol=1e-15,
                max_nfev=budget,
            )
        except (ValueError, FloatingPointError):
            return None
        if not np.all(np.isfinite(res.x)) or not np.isfinite(res.cost):
            return None
        return res

    # coarse pass over every start, then full refinement of the best few
    coarse = [r for r in (run(p0, COARSE_ITER) for p0 in _starts(model_kind, x, y, init_config))
              if r is not None]
    if not coarse:
        raise FitError("all starts diverged")
    coarse.sort(key=lambda r: (r.cost, abs(r.x[3])))
    best = None
    n_ok = len(coarse)
    for r0 in coarse[:N_REFINE]:
        res = r0 if r0.status > 0 else run(r0.x, MAX_ITER)
        if res is None:
            continue
        key = (2.0 * res.cost, abs(res.x[3]))
        if best is None or _better(key, best[0]):
            best = (key, res)
    if best is None:
        raise FitError("all starts diverged")
    res = best[1]
    grad = res.jac.T @ res.fun
    scale = max(float(np.dot(y, y)), 1e-300)
    grad_norm = float(np.linalg.norm(grad, np.inf))
    converged = bool(res.status > 0) and grad_norm < 1e-8 * scale
    return FitReport(
        kind=model_kind,
        params=dict(zip(_NAMES[model_kind], map(float, res.x))),
        sse=float(2.0 * res.cost),
        converged=converged,
        iterations=int(res.nfev),
        starts=n_ok,
        grad_norm=grad_norm,
    )


def _better(key, ref) -> bool:
    sse, aq = key
    sse0, aq0 = ref
    tol = 1e-10 * max(sse, sse0) + 1e-300
    if abs(sse - sse0) <= tol:
        return aq < aq0
    return sse < sse0


def synth_profile(params: dict, eps_grid, noise_sigma: float = 0.0, seed: int | None = None):
    """C * f(eps, q, eta, alpha) + Gaussian noise; returns (eps, y)."""
    eps = np.asarray(eps_grid, dtype=float)
    if np.any(np.diff(eps) <= 0):
        raise ValueError("eps_grid must be strictly increasing")
    p = dict(C=1.0, q=1.0, eta=0.0, alpha=1, x0=0.0, gamma=1.0)
    p.update(params)
    u = (eps - p["x0"]) / p["gamma"]
    y = p["C"] * profile_f(u, p["q"], p["eta"], p["alpha"])
    if noise_sigma > 0:
        y = y + np.random.default_rng(seed).normal(0.0, noise_sigma, eps.size)
    return eps, y


DEFAULT_EPS = np.linspace(-10.0, 10.0, 401)


@dataclass
class ErrorStudyRow:
    eta: float
    qeff_standard: float
    qeff_shifted: float
    relerr_standard: float
    relerr_shifted: float
    fits: dict = field(default_factory=dict, repr=False)


def model_error_study(q_true: float, eta_grid, eps_grid=None) -> list[ErrorStudyRow]:
    """Fit noiseless modified profiles with the standard and shifted Fano models."""
    if q_true <= 0:
        raise ValueError("q_true must be positive")
    eps = DEFAULT_EPS if eps_grid is None else np.asarray(eps_grid, dtype=float)
    rows = []
    for eta in eta_grid:
        data = synth_profile(dict(q=q_true, eta=float(eta)), eps)
        fits = {}
        for kind in ("standard", "shifted"):
            try:
                fits[kind] = fit_profile(data, kind)
            except FitError:
                fits[kind] = None
        q_std = fits["standard"].q_eff if fits["standard"] else float("nan")
        q_sh = fits["shifted"].q_eff if fits["shifted"] else float("nan")
        rows.append(ErrorStudyRow(
            eta=float(eta),
            qeff_standard=q_std,
            qeff_shifted=q_sh,
            relerr_standard=abs(q_std - q_true) / q_true,
            relerr_shifted=abs(q_sh - q_true) / q_true,
            fits=fits,
        ))
    return rows
