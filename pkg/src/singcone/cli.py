"""Command-line front end: one subcommand per computation, JSON report + CSV data per run.

Exit status: 0 success, 2 invalid configuration, 3 solver or precondition
failure (including failed checks in ``verify-all``), 4 I/O failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .errors import DomainError, SingconeError, SolverFailure

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER, EXIT_IO = 0, 2, 3, 4


class ConfigError(Exception):
    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


# --------------------------------------------------------------------------- parameters

# name -> (type, default, help); defaults of None mean "required"
_COMMON = {
    "tol": (float, None, "tolerance override (fixed-point change / ODE residual)"),
    "seed": (int, 0, "seed for randomized sampling scans"),
}
_CAP = {
    "n": (int, None, "ambient dimension n >= 2"),
    "beta": (float, None, "cap half-angle"),
    "bc": (str, "symmetry", "condition at θ = 0: symmetry or dirichlet0 (n = 2 only)"),
    "nodes": (int, 2049, "angular grid nodes"),
}
_STRIP = {
    "p": (float, None, "exponent p > p*"),
    "T": (float, None, "strip half-length (default from the decay rates)"),
    "nt": (int, None, "t nodes (default 8 per unit length)"),
    "ns": (int, 65, "angular nodes on the strip"),
    "p0": (float, None, "weight exponent p0 in (1, p); default (1+p)/2"),
}
_FAMILY = {
    "kind": (str, "sin-lambda", "family: constant (β fixed) or sin-lambda (λ0 + amp·sin τ)"),
    "n": (int, 3, "ambient dimension"),
    "beta": (float, math.pi / 2, "half-angle of the constant family"),
    "lam0": (float, 2.0, "mean eigenvalue of the sin-lambda family"),
    "amp": (float, 0.1, "oscillation amplitude of λ(τ)"),
    "p": (float, 2.1, "exponent"),
    "eps": (float, 1.0, "scale ε of u_ε"),
    "curve": (float, 0.0, "curve size sup(|σ|+|σ'|+|σ''|) of the helix σ"),
    "tau_min": (float, 4.4, "τ window start"),
    "tau_max": (float, 4.7, "τ window end"),
    "refine": (int, 2, "τ spacing = period/(64·refine)"),
    "ns": (int, 65, "angular nodes on the strip"),
}

SUBCOMMANDS = {
    "spectrum": (
        {**_CAP},
        "CSV columns: theta, phi1, dphi1 (normalized first Dirichlet eigenfunction).",
    ),
    "profile": (
        {**_CAP, "p": (float, None, "exponent p > p*")},
        "CSV columns: theta, phi_p, dphi_p (positive cap profile).",
    ),
    "heteroclinic": (
        {"n": (int, None, "dimension"), "lambda": (float, None, "cap eigenvalue λ"),
         "p": (float, None, "exponent"), "mu": (float, None, "moment μ = ∫φ₁^{p+1}"),
         "L": (float, None, "half-length (default from the tail rates)")},
        "CSV columns: t, a, da (orbit on [-L, L], a(0) = a_inf/2).",
    ),
    "corrector": (
        {**_CAP, **_STRIP},
        "CSV columns: t, s, theta, psi (corrector on the strip, long format).",
    ),
    "assemble": (
        {**_CAP, **_STRIP},
        "CSV columns: r, theta, u1 (singular solution on a log-polar grid).",
    ),
    "family": (
        {**_FAMILY},
        "CSV columns: tau, beta, lambda, gamma, p_star, a_inf, delta_minus.",
    ),
    "wedge-residual": (
        {**_FAMILY, "rho_min": (float, 1e-4, "smallest sampled r_σ"),
         "no_cutoff": (bool, False, "drop the cutoff η (sample r_σ < 1/2)")},
        "CSV columns: tau, weighted_residual.",
    ),
    "barrier-check": (
        {**_FAMILY, "delta": (float, -0.5, "barrier exponent δ"),
         "step": (float, 2.5e-3, "finite-difference step")},
        "CSV columns: theta, phi_delta (barrier profile on the envelope cap).",
    ),
    "verify-all": (
        {},
        "CSV columns: check, value, target, tolerance, passed.",
    ),
}

HELP = {
    "spectrum": "first Dirichlet eigenpair of the cap",
    "profile": "positive cap profile φ_p for an exponent p > p*",
    "heteroclinic": "heteroclinic orbit of the amplitude ODE",
    "corrector": "corrector ψ on the log-cylinder by fixed-point iteration",
    "assemble": "singular solution u₁ on the cone with asymptotic checks",
    "family": "τ-dependent cap family: exponents and derivative bounds",
    "wedge-residual": "weighted residual of the wedge approximate solution",
    "barrier-check": "barrier identity and the curvature inequality margin",
    "verify-all": "closed-form checks of the whole pipeline",
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="singcone", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (params, csv_doc) in SUBCOMMANDS.items():
        sp = sub.add_parser(name, help=HELP[name], description=HELP[name], epilog=csv_doc)
        sp.add_argument("--config", type=Path, default=None, help="JSON file with parameter values")
        sp.add_argument("--out", type=Path, default=Path("."), help="output directory")
        for key, (typ, default, text) in {**params, **_COMMON}.items():
            flag = "--" + key.replace("_", "-")
            if typ is bool:
                sp.add_argument(flag, dest=key, action="store_true", default=None, help=text)
            else:
                shown = "required" if default is None and key not in ("T", "nt", "p0", "L", "tol") else default
                sp.add_argument(flag, dest=key, type=typ, default=None, help=f"{text} [{shown}]")
    return parser


def resolve_config(command: str, args: argparse.Namespace) -> dict:
    """Merge defaults < config file < flags and check types and static ranges."""
    params = {**SUBCOMMANDS[command][0], **_COMMON}
    file_values = {}
    if args.config is not None:
        try:
            file_values = json.loads(Path(args.config).read_text())
        except OSError as exc:
            raise ConfigError("config", f"cannot read {args.config}: {exc.strerror}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError("config", f"malformed JSON ({exc.msg} at line {exc.lineno})") from exc
        if not isinstance(file_values, dict):
            raise ConfigError("config", "top level must be a JSON object")
        file_values = {k.replace("-", "_"): v for k, v in file_values.items()}
        unknown = sorted(set(file_values) - set(params))
        if unknown:
            raise ConfigError(unknown[0], f"unknown parameter for '{command}'")
    cfg = {}
    for key, (typ, default, _) in params.items():
        value = getattr(args, key, None)
        if value is None:
            value = file_values.get(key, default)
        if value is None:
            if default is None and key not in ("T", "nt", "p0", "L", "tol"):
                raise ConfigError(key, "required parameter missing")
            cfg[key] = None
            continue
        try:
            if typ is bool:
                if not isinstance(value, bool):
                    raise TypeError
                cfg[key] = value
            elif typ is int:
                if isinstance(value, bool) or (isinstance(value, float) and not value.is_integer()):
                    raise TypeError
                cfg[key] = int(value)
            elif typ is float:
                if isinstance(value, bool):
                    raise TypeError
                cfg[key] = float(value)
            else:
                cfg[key] = str(value)
        except (TypeError, ValueError):
            raise ConfigError(key, f"expected {typ.__name__}, got {value!r}") from None
        if typ is float and not math.isfinite(cfg[key]):
            raise ConfigError(key, "must be finite")
    _static_checks(command, cfg)
    return cfg


def _static_checks(command: str, cfg: dict) -> None:
    def need(cond, key, msg):
        if not cond:
            raise ConfigError(key, msg)

    if "n" in cfg and cfg["n"] is not None:
        need(cfg["n"] >= 2, "n", "must be at least 2")
    if command in ("spectrum", "profile", "corrector", "assemble"):
        limit = 2 * math.pi if cfg["n"] == 2 else math.pi
        need(0 < cfg["beta"] < limit, "beta", f"must lie in (0, {limit:.6g})")
        need(cfg["bc"] in ("symmetry", "dirichlet0"), "bc", "must be 'symmetry' or 'dirichlet0'")
        need(cfg["bc"] == "symmetry" or cfg["n"] == 2, "bc", "dirichlet0 requires n = 2")
        need(cfg["nodes"] >= 16, "nodes", "must be at least 16")
    if "p" in cfg and cfg.get("p") is not None:
        need(cfg["p"] > 1, "p", "must exceed 1")
    if cfg.get("p0") is not None:
        need(1 < cfg["p0"] < cfg["p"], "p0", "must lie in (1, p)")
    if cfg.get("tol") is not None:
        need(cfg["tol"] > 0, "tol", "must be positive")
    if command == "heteroclinic":
        need(cfg["lambda"] > 0, "lambda", "must be positive")
        need(cfg["mu"] > 0, "mu", "must be positive")
    if command in ("corrector", "assemble"):
        need(cfg["ns"] >= 32, "ns", "must be at least 32")
        need(cfg["nt"] is None or cfg["nt"] >= 32, "nt", "must be at least 32")
        need(cfg["T"] is None or cfg["T"] > 0, "T", "must be positive")
    if command in ("family", "wedge-residual", "barrier-check"):
        need(cfg["kind"] in ("constant", "sin-lambda"), "kind", "must be 'constant' or 'sin-lambda'")
        need(cfg["tau_min"] < cfg["tau_max"], "tau_max", "must exceed tau_min")
        need(cfg["refine"] >= 1, "refine", "must be at least 1")
        need(cfg["eps"] > 0, "eps", "must be positive")
        need(cfg["curve"] >= 0, "curve", "must be non-negative")


# --------------------------------------------------------------------------- runners

def _cap(cfg):
    from .cap_spectrum import CapSpec, solve_cap_eigen
    from .grid import GridSpec

    return solve_cap_eigen(CapSpec(cfg["n"], cfg["beta"], cfg["bc"]), GridSpec(cfg["nodes"]))


def _pipeline(cfg):
    from .cap_spectrum import moment
    from .heteroclinic import ode_params, solve_heteroclinic
    from .profile import check_exponent
    from .strip import StripGrid, default_grid, fixed_point_psi

    spec = _cap(cfg)
    p = cfg["p"]
    check_exponent(spec, p)
    P = ode_params(spec.n, spec.lam, p, moment(spec, p + 1.0))
    het = solve_heteroclinic(P, tol=cfg["tol"] or 1e-6)
    grid = default_grid(het, spec.beta, nt=cfg["nt"], ns=cfg["ns"])
    if cfg["T"] is not None:
        nt = cfg["nt"] or max(257, int(8 * cfg["T"]) + 1)
        grid = StripGrid(cfg["T"], nt, cfg["ns"], spec.beta)
    psi = fixed_point_psi(spec, het, grid, p0=cfg["p0"], tol=cfg["tol"] or 1e-10)
    return spec, het, grid, psi


def run_spectrum(cfg):
    from .cap_spectrum import representation_residual

    spec = _cap(cfg)
    res = {"lambda": spec.lam, "gamma": spec.gamma, "p_star": spec.p_star, "c_n": spec.c_n,
           "representation_residual": representation_residual(spec)}
    return res, ["theta", "phi1", "dphi1"], np.column_stack([spec.t, spec.phi1, spec.dphi1])


def run_profile(cfg):
    from .profile import cone_residual, near_critical_asymptote, solve_profile

    spec = _cap(cfg)
    prof = solve_profile(spec, cfg["p"])
    rng = np.random.default_rng(cfg["seed"])
    pts = np.column_stack([np.exp(rng.uniform(-3, 3, 64)), rng.uniform(0, spec.beta, 64)])
    res = {"amplitude": prof.amplitude, "kappa": prof.kappa, "ode_residual": prof.ode_residual,
           "cone_residual": cone_residual(prof, pts), "p_star": spec.p_star,
           "asymptote_mismatch": near_critical_asymptote(spec, cfg["p"], prof)}
    return res, ["theta", "phi_p", "dphi_p"], np.column_stack([prof.t, prof.phi, prof.dphi])


def run_heteroclinic(cfg):
    from .heteroclinic import ode_params, solve_heteroclinic, verify_tail_rates

    P = ode_params(cfg["n"], cfg["lambda"], cfg["p"], cfg["mu"])
    h = solve_heteroclinic(P, L=cfg["L"], tol=cfg["tol"] or 1e-6)
    rates = verify_tail_rates(h)
    res = {
        "alpha": P.alpha, "A": P.A, "eps": P.eps, "a_inf": P.a_inf, "delta_minus": P.delta_minus,
        "delta_tilde": [[z.real, z.imag] for z in P.delta_tilde], "focus": P.focus,
        "L": h.L, "max_residual": h.max_residual, "oscillating": h.oscillating,
        "left_slope": rates.left_slope, "right_slope": rates.right_slope,
        "sandwich_ok": rates.sandwich_ok, "t_tilde": rates.t_tilde,
    }
    return res, ["t", "a", "da"], np.column_stack([h.t, h.a, h.da])


def run_corrector(cfg):
    from .profile import solve_profile
    from .strip import profile_mismatch

    spec, het, grid, psi = _pipeline(cfg)
    prof = solve_profile(spec, cfg["p"])
    info = {k: v for k, v in psi.info.items() if k != "changes"}
    res = {**info, "weighted_norms": psi.norms, "profile_mismatch": profile_mismatch(spec, het, psi, prof),
           "grid": {"T": grid.T, "nt": grid.nt, "ns": grid.ns}}
    T, S = np.meshgrid(grid.t, grid.s, indexing="ij")
    data = np.column_stack([T.ravel(), S.ravel(), (S * grid.beta).ravel(), psi.values.ravel()])
    return res, ["t", "s", "theta", "psi"], data


def run_assemble(cfg):
    from .profile import solve_profile
    from .solution import (TestFunction, assemble_u1, dyadic_samples, gradient_estimates,
                           positivity_scan, verify_asymptotics, weak_residual)

    spec, het, grid, psi = _pipeline(cfg)
    prof = solve_profile(spec, cfg["p"])
    u = assemble_u1(spec, het, psi, cfg["p"])
    rep = verify_asymptotics(u, prof)
    C1, C2 = gradient_estimates(u, dyadic_samples(1e-3, 3, spec.beta))
    v = TestFunction(spec, 0.5, 2.0, (1.0, 0.5))
    res = {
        "origin_radii": list(rep.origin_radii), "origin_ratio": list(rep.origin_ratio),
        "infinity_slope": rep.infinity_slope, "expected_slope": rep.expected_slope,
        "infinity_constant": rep.infinity_constant, "pointwise_C": rep.pointwise_C,
        "gradient_C1": C1, "gradient_C2": C2, "weak_residual": weak_residual(u, v),
        "min_sampled_u1": positivity_scan(u, seed=cfg["seed"]),
        "smallness_ratio": psi.info["smallness_ratio"],
    }
    r = np.geomspace(*np.clip((1e-4, 1e4), *u.r_range), 81)
    th = np.linspace(0.0, spec.beta, 33)
    R, TH = np.meshgrid(r, th, indexing="ij")
    return res, ["r", "theta", "u1"], np.column_stack([R.ravel(), TH.ravel(), u.evaluate(R, TH).ravel()])


def _family_spec(cfg):
    from .family import constant_family, sinusoidal_lambda_family

    window = (cfg["tau_min"], cfg["tau_max"])
    if cfg["kind"] == "constant":
        limit = 2 * math.pi if cfg["n"] == 2 else math.pi
        if not 0 < cfg["beta"] < limit:
            raise ConfigError("beta", f"must lie in (0, {limit:.6g})")
        return constant_family(cfg["n"], cfg["beta"], cfg["p"], cfg["eps"], cfg["curve"], window)
    if not cfg["lam0"] - abs(cfg["amp"]) > 0:
        raise ConfigError("amp", "λ0 - |amp| must be positive")
    return sinusoidal_lambda_family(cfg["n"], cfg["lam0"], cfg["amp"], cfg["p"], cfg["eps"], cfg["curve"], window)


def run_family(cfg):
    from .family import build_family, heteroclinic_tau_bounds, tau_nodes

    fs = _family_spec(cfg)
    fd = build_family(fs, tau_nodes(fs, cfg["refine"]))
    b1, b2 = heteroclinic_tau_bounds(fd, 1), heteroclinic_tau_bounds(fd, 2)
    res = {
        "lambda_star": fd.lam_star, "gamma_star": fd.gamma_star, "p_star_sup": fd.p_star_sup,
        "lemma21_constant": fd.lemma21_constant(1), "lemma21_constant_coarse": fd.lemma21_constant(2),
        "heteroclinic_bounds": b1.__dict__, "heteroclinic_bounds_coarse": b2.__dict__,
        "curve_bound": fs.curve_bound(fd.tau),
    }
    data = np.column_stack([fd.tau, fd.beta, fd.lam, fd.gamma, fd.p_star,
                            [P.a_inf for P in fd.params], [P.delta_minus for P in fd.params]])
    return res, ["tau", "beta", "lambda", "gamma", "p_star", "a_inf", "delta_minus"], data


def run_wedge_residual(cfg):
    from .family import WedgeGrid, build_family, tau_nodes, u1_tau_bounds, wedge_residual

    fs = _family_spec(cfg)
    fd = build_family(fs, tau_nodes(fs, cfg["refine"]), with_solutions=True, ns=cfg["ns"])
    if cfg["no_cutoff"]:
        grid = WedgeGrid(rho_min=cfg["rho_min"], use_cutoff=False, rho_max=0.45)
    else:
        grid = WedgeGrid(rho_min=cfg["rho_min"])
    rep = wedge_residual(fs, fd, grid)
    u1b = u1_tau_bounds(fd)
    res = {"weighted_residual": rep.norm, "interior_part": rep.max_lap_part, "curve_bound": rep.curve_bound,
           "u1_tau_first": u1b.first, "u1_tau_second": u1b.second}
    return res, ["tau", "weighted_residual"], np.column_stack([fd.tau[1:-1], rep.by_tau])


def run_barrier_check(cfg):
    from .family import barrier_checks, barrier_profile, build_family, tau_nodes

    fs = _family_spec(cfg)
    fd = build_family(fs, tau_nodes(fs, cfg["refine"]))
    rep = barrier_checks(fs, cfg["delta"], fd, step=cfg["step"], seed=cfg["seed"])
    spline, _ = barrier_profile(fs.n, rep.beta_star, cfg["delta"])
    th = np.linspace(0.0, rep.beta_star, 257)
    return dict(rep.__dict__), ["theta", "phi_delta"], np.column_stack([th, spline(th)])


def run_verify_all(cfg):
    from .cap_spectrum import CapSpec, exponents, moment, solve_cap_eigen
    from .heteroclinic import ode_params, solve_heteroclinic, verify_tail_rates

    checks = []

    def check(name, value, target, tol):
        checks.append((name, float(value), float(target), float(tol), bool(abs(value - target) <= tol)))

    hemi = solve_cap_eigen(CapSpec(3, math.pi / 2, "symmetry"))
    check("hemisphere_lambda", hemi.lam, 2.0, 1e-6)
    check("hemisphere_p_star", exponents(3, 2.0)[1], 2.0, 1e-10)
    check("arc_symmetric_lambda", solve_cap_eigen(CapSpec(2, math.pi / 2, "symmetry")).lam, 1.0, 1e-8)
    check("arc_dirichlet_lambda", solve_cap_eigen(CapSpec(2, math.pi / 2, "dirichlet0")).lam, 4.0, 1e-8)
    check("hemisphere_moment4", moment(hemi, 4.0), 9.0 / (10.0 * math.pi), 1e-8)
    P = ode_params(3, 2.0, 2.1, moment(hemi, 3.1))
    rates = verify_tail_rates(solve_heteroclinic(P))
    check("left_tail_slope", rates.left_slope, 2.0 / 11.0, 0.01 * 2.0 / 11.0)
    check("delta_identity", P.delta_minus + P.alpha, 3 + exponents(3, 2.0)[0] - 2, 1e-12)
    res = {"checks": {c[0]: {"value": c[1], "target": c[2], "tol": c[3], "passed": c[4]} for c in checks},
           "all_passed": all(c[4] for c in checks)}
    data = [[c[0], repr(c[1]), repr(c[2]), repr(c[3]), str(c[4])] for c in checks]
    return res, ["check", "value", "target", "tolerance", "passed"], data


RUNNERS = {
    "spectrum": run_spectrum, "profile": run_profile, "heteroclinic": run_heteroclinic,
    "corrector": run_corrector, "assemble": run_assemble, "family": run_family,
    "wedge-residual": run_wedge_residual, "barrier-check": run_barrier_check, "verify-all": run_verify_all,
}


# --------------------------------------------------------------------------- output

def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else repr(v)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    return obj


def _write_outputs(out: Path, command: str, report: dict, header, rows) -> list[str]:
    out.mkdir(parents=True, exist_ok=True)
    stem = command.replace("-", "_")
    jpath, cpath = out / f"{stem}.json", out / f"{stem}.csv"
    jpath.write_text(json.dumps(_jsonable(report), indent=2, sort_keys=True) + "\n")
    with cpath.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([x if isinstance(x, str) else format(float(x), ".17g") for x in row])
    return [str(jpath), str(cpath)]


def _error(kind: str, message: str, status: int, **extra) -> int:
    payload = {"error": kind, "message": message, "exit_status": status, **extra}
    print(json.dumps(_jsonable(payload), sort_keys=True), file=sys.stderr)
    return status


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    command = args.command
    try:
        cfg = resolve_config(command, args)
    except ConfigError as exc:
        return _error("config", str(exc), EXIT_CONFIG, field=exc.field)
    try:
        results, header, rows = RUNNERS[command](cfg)
    except ConfigError as exc:
        return _error("config", str(exc), EXIT_CONFIG, field=exc.field)
    except DomainError as exc:
        return _error("precondition", str(exc), EXIT_SOLVER)
    except (SolverFailure, SingconeError) as exc:
        return _error("solver", str(exc), EXIT_SOLVER, diagnostics=getattr(exc, "diagnostics", None))
    report = {"command": command, "version": __version__, "config": cfg, "results": results}
    if command == "verify-all" and not results["all_passed"]:
        status = EXIT_SOLVER
    else:
        status = EXIT_OK
    try:
        files = _write_outputs(args.out, command, report, header, rows)
    except OSError as exc:
        return _error("io", f"cannot write outputs to {args.out}: {exc.strerror or exc}", EXIT_IO)
    print(json.dumps({"command": command, "files": files, "exit_status": status}))
    return status


def main_entry() -> None:
    sys.exit(main())
