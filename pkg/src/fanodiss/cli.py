"""Command-line front end: config parsing, orchestration and CSV/JSON output."""
from __future__ import annotations

import argparse
import hashlib
import json
import logging
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .analytic import (excited_population_analytic, extinction_coefficient, extract_parameters,
                       fano_h, prefactor_constants, profile_f)
from .fitting import FitError, fit_profile, model_error_study, synth_profile
from .linalg import SingularSystemError
from .model import SpecError, SystemSpec, band_for, reduced_parameters, validate_spec
from .spectra import (absorption_scan, angular_prefactor, coherent_line_areas, component_analysis,
                      emission_grid, emission_spectrum)
from .steadystate import SteadyStateError, steady_state

log = logging.getLogger("fanodiss")

EXIT_OK = 0
EXIT_USAGE = 64
EXIT_CONFIG = 65
EXIT_NUMERIC = 70

COMMANDS = ("validate", "absorption-scan", "emission-spectrum", "analytic-profile",
            "fit", "compare-models", "extract-params")

_F, _I, _S, _T = float, int, str, tuple
SCHEMA = {
    "system": {"E_nu": _T, "E_e": _F, "mu_nu_e": _T},
    "continuum": {"sqrtn_V": _F, "sqrtn_mu_nu_c": _T, "W_over_gamma": _F, "N_k": _I},
    "rates": {"Gamma_c_nu": _T, "Gamma_vib": _F, "gamma_e_nu": _T, "gamma_k_nu": _T,
              "gamma_k_e": _F},
    "field": {"F": _F, "laser_delta": _F, "theta": _F, "I_in": _F, "omega_L": _F,
              "epsilon_L": _F},
    "scan": {"eps_min": _F, "eps_max": _F, "n_points": _I, "omega_min": _F, "omega_max": _F,
             "n_omega": _I, "eta_min": _F, "eta_max": _F, "n_eta": _I, "q": _F, "eta": _F,
             "alpha": _I, "noise_sigma": _F},
    "fit": {"input": _S, "model": _S, "x_column": _S, "y_column": _S},
    "extract": {"B_abs": _F, "B_ray": _F, "B_ram": _F, "gamma": _F, "q": _F, "eta_ram": _F},
    "output": {"dir": _S, "prefix": _S},
}
_SPEC_KEYS = {"system", "continuum", "rates", "field"}
_NOT_SPEC = {"W_over_gamma", "N_k", "omega_L", "epsilon_L"}
Y_PREFERENCE = ("f_noisy", "N_excited", "intensity", "f", "y")


class ConfigError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


class NumericalFailure(RuntimeError):
    pass


@dataclass
class RunConfig:
    spec: SystemSpec
    W_over_gamma: float = 40.0
    N_k: int = 401
    laser: dict = field(default_factory=dict)
    scan: dict = field(default_factory=dict)
    fit: dict = field(default_factory=dict)
    extract: dict = field(default_factory=dict)
    out_dir: Path = Path(".")
    prefix: str = ""
    config_hash: str = ""

    def require(self, section: str, key: str):
        table = getattr(self, section)
        if key not in table:
            raise ConfigError(f"missing required key: {section}.{key}")
        return table[key]

    def omega_L(self) -> float:
        if "omega_L" in self.laser:
            return self.laser["omega_L"]
        if "epsilon_L" in self.laser:
            return float(reduced_parameters(self.spec).omega_of(self.laser["epsilon_L"]))
        raise ConfigError("missing required key: field.omega_L (or field.epsilon_L)")


def _convert(kind, raw: str, lineno: int, key: str):
    try:
        if kind is _S:
            return raw.strip().strip('"').strip("'")
        if kind is _T:
            return tuple(float(x) for x in raw.split(",") if x.strip())
        if kind is _I:
            return int(raw)
        val = float(raw)
    except ValueError:
        raise ConfigError(f"bad value for {key}: {raw!r}", lineno) from None
    return val


def parse_config(text: str) -> RunConfig:
    """Parse ``section.key = value`` lines into a validated RunConfig.

    Blank lines and ``#`` comments are ignored. Tuples are comma-separated.
    """
    values: dict[str, dict] = {s: {} for s in SCHEMA}
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ConfigError(f"expected 'section.key = value', got {body!r}", lineno)
        lhs, raw = (p.strip() for p in body.split("=", 1))
        if lhs.count(".") != 1 or not raw:
            raise ConfigError(f"expected 'section.key = value', got {body!r}", lineno)
        section, key = lhs.split(".")
        if section not in SCHEMA:
            raise ConfigError(f"unknown section: {section}", lineno)
        if key not in SCHEMA[section]:
            raise ConfigError(f"unknown key: {lhs}", lineno)
        if key in values[section]:
            raise ConfigError(f"duplicate key: {lhs}", lineno)
        values[section][key] = _convert(SCHEMA[section][key], raw, lineno, lhs)

    spec_kwargs = {k: v for s in _SPEC_KEYS for k, v in values[s].items() if k not in _NOT_SPEC}
    try:
        spec = SystemSpec(**spec_kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None
    report = validate_spec(spec)
    if not report:
        raise ConfigError("invalid system: " + "; ".join(report.problems))

    cont = values["continuum"]
    N_k = cont.get("N_k", 401)
    W = cont.get("W_over_gamma", 40.0)
    if N_k < 3 or N_k % 2 == 0:
        raise ConfigError("continuum.N_k must be odd and >= 3")
    if not W > 0:
        raise ConfigError("continuum.W_over_gamma must be positive")
    for key in ("n_points", "n_omega", "n_eta"):
        if key in values["scan"] and values["scan"][key] < 1:
            raise ConfigError(f"scan.{key} must be >= 1")
    out = values["output"]
    return RunConfig(
        spec=spec, W_over_gamma=W, N_k=N_k,
        laser={k: v for k, v in values["field"].items() if k in _NOT_SPEC},
        scan=values["scan"], fit=values["fit"], extract=values["extract"],
        out_dir=Path(out.get("dir", ".")), prefix=out.get("prefix", ""),
        config_hash=hashlib.sha256(text.encode("utf-8")).hexdigest()[:16],
    )


# ---- output ----------------------------------------------------------------

def format_value(x) -> str:
    return "%.16e" % float(x)


def write_csv(path: Path, columns, data, meta: dict) -> None:
    """Comma-separated table with a '#' metadata block and a column-name row."""
    data = np.asarray(data, dtype=float)
    if data.ndim != 2 or data.shape[1] != len(columns):
        raise ValueError("data shape does not match columns")
    lines = [f"# tool: fanodiss {__version__}"]
    lines += [f"# {k}: {meta[k]}" for k in sorted(meta)]
    lines.append("# columns: " + ",".join(columns))
    lines.append(",".join(columns))
    lines += [",".join(format_value(x) for x in row) for row in data]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        return float(obj) if math.isfinite(obj) else None
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def write_json(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(_jsonable(payload), indent=2, sort_keys=True) + "\n",
                    encoding="utf-8")


def read_csv(path) -> tuple[list[str], np.ndarray, dict]:
    """Inverse of ``write_csv``: (column names, data, metadata)."""
    meta, columns, rows = {}, None, []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if line.startswith("#"):
            key, _, val = line[1:].partition(":")
            meta[key.strip()] = val.strip()
        elif not line.strip():
            continue
        elif columns is None:
            columns = [c.strip() for c in line.split(",")]
        else:
            rows.append([float(x) for x in line.split(",")])
    if columns is None:
        raise ValueError(f"{path}: no column header")
    data = np.array(rows, dtype=float).reshape(-1, len(columns))
    return columns, data, meta


# ---- commands --------------------------------------------------------------

def _eps_grid(cfg: RunConfig, lo: float, hi: float, n: int) -> np.ndarray:
    s = cfg.scan
    return np.linspace(s.get("eps_min", lo), s.get("eps_max", hi), s.get("n_points", n))


def _summary_spec(spec: SystemSpec) -> dict:
    rp = reduced_parameters(spec)
    return dict(gamma=rp.gamma, q=rp.q, q_nu=rp.q_nu, eta=rp.eta, E_e=rp.E_e,
                omega_vib=spec.omega_vib if spec.n_nu > 1 else None)


def cmd_validate(cfg: RunConfig, ctx: dict):
    return None, dict(valid=True, reduced=_summary_spec(cfg.spec), N_k=cfg.N_k,
                      W_over_gamma=cfg.W_over_gamma)


def cmd_absorption_scan(cfg: RunConfig, ctx: dict):
    spec = cfg.spec
    rp = reduced_parameters(spec)
    eps = _eps_grid(cfg, -6.0, 6.0, 61)
    omega = rp.omega_of(eps)
    model = band_for(spec, cfg.W_over_gamma, cfg.N_k)
    s = absorption_scan(model, omega,
                        progress=lambda i, w, v: log.info("point %d/%d omega_L=%.6g N=%.6g",
                                                          i + 1, eps.size, w, v))
    f = excited_population_analytic(spec, omega)
    rel = (s.values - f) / np.where(f != 0, f, np.nan)
    # one scalar normalization, as used for shape comparisons
    B = float(np.dot(s.values, f) / np.dot(f, f)) if np.dot(f, f) > 0 else float("nan")
    rel_B = np.abs(s.values - B * f) / np.abs(B * f).max()
    table = np.column_stack([omega, eps, s.values, f, rel])
    cols = ["omega_L", "epsilon", "N_excited", "f_analytic", "rel_dev"]
    return (cols, table), dict(reduced=_summary_spec(spec), N_k=cfg.N_k, W=model.W,
                               scale_fit=B, max_rel_dev_scaled=float(rel_B.max()))


def cmd_emission_spectrum(cfg: RunConfig, ctx: dict):
    spec = cfg.spec
    wL = cfg.omega_L()
    model = band_for(spec, cfg.W_over_gamma, cfg.N_k)
    s = cfg.scan
    if "omega_min" in s or "omega_max" in s:
        grid = np.linspace(cfg.require("scan", "omega_min"), cfg.require("scan", "omega_max"),
                           s.get("n_omega", 201))
    else:
        grid = emission_grid(spec, wL, s.get("n_omega", 41))
    rho = steady_state(model, omega_L=wL)
    bare = emission_spectrum(model, rho, grid, spec.laser_delta, wL, prefactor=False)
    full = bare.values * angular_prefactor(grid, spec.theta, spec.I_in)
    rp = reduced_parameters(spec)
    reports = component_analysis(bare, spec, wL)
    table = np.column_stack([grid, rp.epsilon_of(grid), full, bare.values])
    cols = ["omega", "epsilon", "intensity", "intensity_bare"]
    comps = [dict(component=r.component, center=r.center, half_width=r.half_width,
                  area=r.area, ok=r.ok, message=r.message) for r in reports]
    return (cols, table), dict(omega_L=wL, epsilon_L=float(rp.epsilon_of(wL)),
                               components=comps, coherent_areas=coherent_line_areas(model, rho),
                               reduced=_summary_spec(spec))


def cmd_analytic_profile(cfg: RunConfig, ctx: dict):
    spec = cfg.spec
    rp = reduced_parameters(spec)
    eps = _eps_grid(cfg, -10.0, 10.0, 401)
    omega = rp.omega_of(eps)
    q = cfg.scan.get("q", rp.q)
    eta = cfg.scan.get("eta", rp.eta)
    alpha = cfg.scan.get("alpha", 1)
    h = fano_h(eps, q)
    f = profile_f(eps, q, eta, alpha)
    cols = ["omega_L", "epsilon", "h", "f", "N_analytic", "extinction"]
    parts = [omega, eps, h, f, excited_population_analytic(spec, omega),
             extinction_coefficient(spec, omega)]
    sigma = cfg.scan.get("noise_sigma", 0.0)
    if sigma > 0:
        _, y = synth_profile(dict(q=q, eta=eta, alpha=alpha), eps, sigma, ctx["seed"])
        cols.append("f_noisy")
        parts.append(y)
    return (cols, np.column_stack(parts)), dict(q=q, eta=eta, alpha=alpha, noise_sigma=sigma)


def cmd_fit(cfg: RunConfig, ctx: dict):
    src = Path(cfg.require("fit", "input"))
    try:
        columns, data, meta = read_csv(src)
    except (OSError, ValueError) as exc:
        raise ConfigError(f"cannot read fit input: {exc}") from None
    xcol = cfg.fit.get("x_column") or ("epsilon" if "epsilon" in columns else columns[0])
    ycol = cfg.fit.get("y_column")
    if ycol is None:
        ycol = next((c for c in Y_PREFERENCE if c in columns),
                    columns[1] if len(columns) > 1 else None)
    for c in (xcol, ycol):
        if c not in columns:
            raise ConfigError(f"column {c!r} not in {src}")
    kind = cfg.fit.get("model", "full")
    x, y = data[:, columns.index(xcol)], data[:, columns.index(ycol)]
    try:
        rep = fit_profile((x, y), kind)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    from .fitting import model_values
    yfit = model_values(kind, rep.as_vector(), x)
    table = np.column_stack([x, y, yfit, y - yfit])
    return ([xcol, ycol, "y_fit", "residual"], table), dict(
        model=kind, params=rep.params, q_eff=rep.q_eff, sse=rep.sse, converged=rep.converged,
        source=str(src), source_hash=meta.get("config_hash"))


def cmd_compare_models(cfg: RunConfig, ctx: dict):
    s = cfg.scan
    q = s.get("q", 4.0)
    etas = np.linspace(s.get("eta_min", 0.0), s.get("eta_max", 1.0), s.get("n_eta", 11))
    eps = _eps_grid(cfg, -10.0, 10.0, 401)
    rows = model_error_study(q, etas, eps)
    cols = ["eta", "qeff_standard", "qeff_shifted", "relerr_standard", "relerr_shifted"]
    table = np.array([[r.eta, r.qeff_standard, r.qeff_shifted, r.relerr_standard,
                       r.relerr_shifted] for r in rows])
    return (cols, table), dict(q_true=q, n_eps=eps.size,
                               eps_range=[float(eps[0]), float(eps[-1])])


def cmd_extract_params(cfg: RunConfig, ctx: dict):
    spec = cfg.spec
    rp = reduced_parameters(spec)
    B_abs, B_ray, B_ram = prefactor_constants(spec)
    e = cfg.extract
    inputs = dict(B_abs=e.get("B_abs", B_abs), B_ray=e.get("B_ray", B_ray),
                  B_ram=e.get("B_ram", B_ram), gamma=e.get("gamma", rp.gamma),
                  q=e.get("q", rp.q), eta_ram=e.get("eta_ram"), F=spec.F)
    if inputs["eta_ram"] is None:
        if spec.n_nu < 2 or spec.sqrtn_mu_nu_c[1] == 0:
            raise ConfigError("missing required key: extract.eta_ram")
        inputs["eta_ram"] = spec.mu_nu_e[1] ** 2 * rp.eta / spec.sqrtn_mu_nu_c[1] ** 2
    try:
        ex = extract_parameters(**inputs)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    cols = ["sum_Gamma_c", "sqrtn_V", "sqrtn_mu_0c", "mu_0e", "sqrtn_mu_1c", "mu_1e"]
    return (cols, np.array([ex.astuple()])), dict(inputs=inputs)


HANDLERS = {
    "validate": cmd_validate,
    "absorption-scan": cmd_absorption_scan,
    "emission-spectrum": cmd_emission_spectrum,
    "analytic-profile": cmd_analytic_profile,
    "fit": cmd_fit,
    "compare-models": cmd_compare_models,
    "extract-params": cmd_extract_params,
}


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="fanodiss", exit_on_error=False)
    p.add_argument("command")
    p.add_argument("--config", required=True)
    p.add_argument("--out", default=None)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    return p


def run_command(argv) -> int:
    argv = list(argv)
    if not argv or argv[0] not in COMMANDS:
        name = argv[0] if argv else ""
        print(f"fanodiss: unknown command {name!r}; expected one of {', '.join(COMMANDS)}",
              file=sys.stderr)
        return EXIT_USAGE
    try:
        args = _parser().parse_args(argv)
    except (argparse.ArgumentError, SystemExit) as exc:
        print(f"fanodiss: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if args.threads < 1:
        print("fanodiss: --threads must be >= 1", file=sys.stderr)
        return EXIT_USAGE
    try:
        text = Path(args.config).read_text(encoding="utf-8")
        cfg = parse_config(text)
        if args.out is not None:
            cfg.out_dir = Path(args.out)
        cfg.out_dir.mkdir(parents=True, exist_ok=True)
        ctx = dict(seed=args.seed, threads=args.threads)
        table, summary = HANDLERS[args.command](cfg, ctx)
    except (OSError, UnicodeDecodeError) as exc:
        print(f"fanodiss: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ConfigError, SpecError) as exc:
        print(f"fanodiss: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (SteadyStateError, SingularSystemError, FitError, NumericalFailure,
            FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"fanodiss: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC

    stem = (cfg.prefix + "_" if cfg.prefix else "") + args.command.replace("-", "_")
    meta = dict(command=args.command, config_hash=cfg.config_hash, seed=args.seed)
    if table is not None:
        cols, data = table
        write_csv(cfg.out_dir / f"{stem}.csv", cols, data, meta)
    write_json(cfg.out_dir / f"{stem}.json", dict(meta, version=__version__, summary=summary))
    return EXIT_OK


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(name)s: %(message)s")
    return run_command(sys.argv[1:] if argv is None else argv)


if __name__ == "__main__":
    sys.exit(main())
