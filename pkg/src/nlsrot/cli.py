"""Command line entry point: ``nlsrot <subcommand> [options]``.

Every subcommand accepts ``--config file.json``; keys in that file override
the corresponding flags.  Reports go to ``--out`` or, by default, below the
directory named by ``$NLSROT_OUTPUT``.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
import time
from dataclasses import asdict
from pathlib import Path

import numpy as np

from .eigensolver import MinimizationProblem, minimize
from .errors import NLSRotError
from .experiments import (
    ExperimentConfig,
    default_dt,
    exit_code,
    output_root,
    resolution_study,
    rotation_report,
    run_experiment,
    write_csv,
    write_json,
)
from .fieldio import read_field, write_field
from .harmonic import hermite_functions
from .propagator import NLSConfig, propagate
from .scattering import (
    build_rotating_datum,
    identity_suite,
    perturbative_P,
    scattering_direct,
    scattering_lens,
    stability_probe,
)
from .spectral import Field, Grid, l2_norm, norms

log = logging.getLogger("nlsrot")


def _grid_arg(text: str) -> tuple[float, int]:
    try:
        L, N = text.split(",")
        return float(L), int(N)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected L,N (e.g. 12,1024), got {text!r}")


def _float_list(text: str) -> list[float]:
    return [parse_angle(t) for t in text.split(",") if t.strip()]


def parse_angle(text: str) -> float:
    """Parse a float, allowing multiples of ``pi`` such as ``pi/2`` or ``0.5pi``."""
    t = text.strip().lower().replace(" ", "")
    if "pi" not in t:
        return float(t)
    num, _, den = t.partition("/")
    coef = num.replace("*", "").replace("pi", "")
    value = (float(coef) if coef not in ("", "+", "-") else float(coef + "1")) * math.pi
    return value / float(den) if den else value


def _int_list(text: str) -> list[int]:
    return [int(t) for t in text.split(",") if t.strip()]


def _out_dir(args, name: str) -> Path:
    return Path(args.out) if args.out else output_root() / name


def _emit(payload: dict, path: Path | None) -> None:
    text = json.dumps(payload, indent=2, sort_keys=True, default=_jsonable)
    if path is not None:
        write_json(path, json.loads(text))
    print(text)


def _jsonable(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, Path):
        return str(obj)
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _input_state(args) -> Field:
    if getattr(args, "input", None):
        return read_field(args.input)
    L, N = args.grid
    g = Grid(1, L, N).dual()
    amp = args.amplitude
    if args.data == "gaussian":
        return g.field(lambda x: amp * math.pi**-0.25 * np.exp(-0.5 * x**2))
    return Field(g, amp * hermite_functions(g.axis, 2)[2])


# Subcommands ---------------------------------------------------------------


def cmd_eigenstate(args) -> int:
    L, N = args.grid
    grid = Grid(args.d, L, N)
    sol = minimize(MinimizationProblem(args.nu, grid, args.sign), tol=args.tol, max_iter=args.max_iter)
    out = Path(args.out) if args.out else output_root() / "eigenstate" / f"nu{args.nu:g}.field"
    write_field(out, sol.psi, f"eigenstate nu={args.nu} sign={sol.sign}")
    n = norms(sol.psi)
    sidecar = {
        "nu": sol.nu,
        "mu": sol.mu,
        "delta": sol.delta,
        "residual": sol.residual,
        "relative_residual": sol.relative_residual,
        "iterations": sol.iterations,
        "converged": sol.converged,
        "sign": sol.sign,
        "norms": {"l2": n.l2, "grad_l2": n.grad_l2, "xf_l2": n.xf_l2, "lp": {str(k): v for k, v in n.lp.items()}},
    }
    _emit(sidecar, out.with_suffix(".json"))
    return 0 if sol.converged else 1


def cmd_propagate(args) -> int:
    u0 = read_field(args.input)
    cfg = NLSConfig.from_equation(args.eq, d=u0.grid.d, sigma=args.sigma, time_dependent=args.time_dependent)
    res = propagate(u0, args.t0, args.t1, cfg, args.dt, richardson=args.richardson)
    out = Path(args.out) if args.out else output_root() / "propagate" / "final.field"
    write_field(out, res.final, f"{args.eq} from t={args.t0} to t={args.t1}")
    diag = {
        "equation": args.eq,
        "sigma": cfg.sigma,
        "t0": args.t0,
        "t1": args.t1,
        "dt": res.dt,
        "steps": res.steps,
        "mass_drift": res.mass_drift,
        "energy_drift": res.energy_drift,
        "blew_up": res.blew_up,
        "blowup_time": res.blowup_time,
        "richardson_error": res.richardson_error,
    }
    _emit(diag, out.with_suffix(".json"))
    return 0


def cmd_scatter(args) -> int:
    u = _input_state(args)
    t0 = time.perf_counter()
    if args.method == "lens":
        dt = args.dt if args.dt is not None else default_dt(args.sign)
        cross = {"T": args.T} if args.cross_check else None
        res = scattering_lens(u, args.sign, dt, cross_check=cross)
    else:
        res = scattering_direct(u, T=args.T, dt=args.dt or 1e-2, sign=args.sign)
    out = _out_dir(args, "scatter")
    write_field(out / f"u_plus_{args.method}.field", res.u_plus, f"S(u_-) by the {args.method} route")
    payload = {
        "method": res.method,
        "discretization_estimate": res.discretization_estimate,
        "cross_check_gap": res.cross_check_gap,
        "l2": l2_norm(u),
        "l2_defect": res.l2_defect,
        "h1_defect": res.h1_defect,
        "mass_drift": res.mass_drift,
        "runtime": time.perf_counter() - t0,
    }
    _emit(payload, out / f"scatter_{args.method}.json")
    return 0


def cmd_rotate_check(args) -> int:
    L, N = args.grid
    grid = Grid(args.d, L, N)
    dt = args.dt if args.dt is not None else default_dt(args.sign)
    out = _out_dir(args, "rotate-check")
    rep = rotation_report(args.theta, args.j, args.sign, grid, dt, args.tol, out)
    stem = f"{args.sign}_theta{args.theta:.6f}_j{args.j}"
    _emit(rep.as_dict(), out / f"report_{stem}.json")
    return exit_code([rep], args.threshold)


def cmd_perturbation(args) -> int:
    u = _input_state(args)
    P = perturbative_P(u)
    p_norm = l2_norm(P)
    rows = []
    for eps in args.eps_list:
        res = scattering_lens(u * eps, "defocusing", args.dt or 1e-3, estimate=False)
        diff = res.u_plus - u * eps
        rows.append(
            {
                "eps": eps,
                "first_order_ratio": l2_norm(diff) / eps**5 / p_norm,
                "residual": l2_norm(diff + P * (1j * eps**5)),
            }
        )
    slope = math.nan
    if len(rows) >= 2:
        slope = float(np.polyfit(np.log(args.eps_list), np.log([r["residual"] for r in rows]), 1)[0])
    out = _out_dir(args, "perturbation")
    write_csv(out / "perturbation.csv", rows)
    _emit({"P_l2": p_norm, "rows": rows, "residual_slope": slope}, out / "perturbation.json")
    return 0


def cmd_stability(args) -> int:
    L, N = args.grid
    grid = Grid(args.d, L, N)
    datum = build_rotating_datum(args.theta, args.j, args.d, "focusing", grid, args.tol)
    rep = stability_probe(datum, args.eps, args.trials, args.seed, args.dt or 1e-3)
    out = _out_dir(args, "stability")
    payload = rep.as_dict() | {"theta": args.theta, "j": args.j, "nu": datum.nu}
    _emit(payload, out / f"stability_eps{args.eps:g}_seed{args.seed}.json")
    return 0 if rep.blowups == 0 else 1


def cmd_resolution_study(args) -> int:
    cfg = ExperimentConfig(
        name="resolution-study",
        d=args.d,
        L=args.grid[0],
        N=args.grid[1],
        dt=args.dt,
        thetas=tuple(args.thetas),
        js=tuple(args.js),
        sign=args.sign,
        tol=args.tol,
    )
    rows = resolution_study(cfg, args.levels, linear=args.linear)
    out = _out_dir(args, "resolution-study")
    write_csv(out / "resolution.csv", rows)
    _emit({"config": asdict(cfg), "rows": rows}, out / "resolution.json")
    return 0


def cmd_identity_suite(args) -> int:
    u = _input_state(args)
    rep = identity_suite(u, eta=args.eta, shift=args.shift, dt=args.dt or 1e-3)
    out = _out_dir(args, "identity-suite")
    payload = rep.as_dict() | {"worst": rep.worst, "tolerance": args.threshold}
    _emit(payload, out / f"identities_{args.data}.json")
    return 0 if rep.worst < args.threshold else 1


def cmd_run(args) -> int:
    data = dict(args.experiment)
    if "thetas" in data:
        data["thetas"] = [parse_angle(str(t)) for t in data["thetas"]]
    cfg = ExperimentConfig.from_dict(data)
    reports = run_experiment(cfg)
    for r in reports:
        print(json.dumps(r.as_dict(), sort_keys=True))
    return exit_code(reports, cfg.defect_threshold)


# Parser --------------------------------------------------------------------


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, help="JSON file whose keys override the flags")
    p.add_argument("--out", help="output file or directory")
    p.add_argument("-v", "--verbose", action="store_true")


def _state_input(p: argparse.ArgumentParser) -> None:
    p.add_argument("--in", dest="input", help="field file with u_-; default is built-in data")
    p.add_argument("--data", choices=["gaussian", "hermite2"], default="gaussian")
    p.add_argument("--amplitude", type=float, default=1.0)
    p.add_argument(
        "--grid", type=_grid_arg, default=(12.0, 1024), help="profile grid L,N; built-in data live on its dual"
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nlsrot", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("eigenstate", help="solve the nonlinear eigenvalue problem at nu")
    p.add_argument("--d", type=int, default=1)
    p.add_argument("--nu", type=float, required=True)
    p.add_argument("--sign", choices=["defocusing", "focusing"])
    p.add_argument("--grid", type=_grid_arg, default=(12.0, 1024))
    p.add_argument("--tol", type=float, default=1e-9)
    p.add_argument("--max-iter", type=int, default=20000)
    _common(p)
    p.set_defaults(func=cmd_eigenstate)

    p = sub.add_parser("propagate", help="integrate one of the NLS variants")
    p.add_argument("--eq", choices=["free", "focusing", "harmonic", "harmonic-focusing"], default="free")
    p.add_argument("--sigma", type=float)
    p.add_argument("--time-dependent", action="store_true")
    p.add_argument("--t0", type=float, default=0.0)
    p.add_argument("--t1", type=float, required=True)
    p.add_argument("--dt", type=float, default=1e-3)
    p.add_argument("--richardson", action="store_true")
    p.add_argument("--in", dest="input", required=True)
    _common(p)
    p.set_defaults(func=cmd_propagate)

    p = sub.add_parser("scatter", help="compute S(u_-)")
    p.add_argument("--method", choices=["lens", "direct"], default="lens")
    p.add_argument("--sign", choices=["defocusing", "focusing"], default="defocusing")
    p.add_argument("--dt", type=float)
    p.add_argument("--T", type=float, default=40.0)
    p.add_argument("--cross-check", action="store_true")
    _state_input(p)
    _common(p)
    p.set_defaults(func=cmd_scatter, amplitude=0.2)

    p = sub.add_parser("rotate-check", help="build a rotating datum and measure its defect")
    p.add_argument("--theta", type=parse_angle, default=0.0)
    p.add_argument("--j", type=int, default=1)
    p.add_argument("--sign", choices=["defocusing", "focusing"], default="defocusing")
    p.add_argument("--d", type=int, default=1)
    p.add_argument("--grid", type=_grid_arg, default=(12.0, 1024))
    p.add_argument("--dt", type=float)
    p.add_argument("--tol", type=float, default=1e-9)
    p.add_argument("--threshold", type=float, default=1e-4)
    _common(p)
    p.set_defaults(func=cmd_rotate_check)

    p = sub.add_parser("perturbation", help="small-data expansion of S")
    p.add_argument("--eps-list", type=_float_list, default=[0.1, 0.15, 0.2, 0.3])
    p.add_argument("--dt", type=float)
    _state_input(p)
    _common(p)
    p.set_defaults(func=cmd_perturbation)

    p = sub.add_parser("stability", help="perturb a focusing rotating datum")
    p.add_argument("--eps", type=float, default=1e-3)
    p.add_argument("--trials", type=int, default=8)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--theta", type=parse_angle, default=0.0)
    p.add_argument("--j", type=int, default=1)
    p.add_argument("--d", type=int, default=1)
    p.add_argument("--grid", type=_grid_arg, default=(12.0, 1024))
    p.add_argument("--dt", type=float)
    p.add_argument("--tol", type=float, default=1e-9)
    _common(p)
    p.set_defaults(func=cmd_stability)

    p = sub.add_parser("resolution-study", help="defects under grid and step refinement")
    p.add_argument("--thetas", type=_float_list, default=[0.0])
    p.add_argument("--js", type=_int_list, default=[1])
    p.add_argument("--sign", choices=["defocusing", "focusing"], default="defocusing")
    p.add_argument("--d", type=int, default=1)
    p.add_argument("--grid", type=_grid_arg, default=(12.0, 1024))
    p.add_argument("--dt", type=float)
    p.add_argument("--levels", type=int, default=2)
    p.add_argument("--linear", action="store_true")
    p.add_argument("--tol", type=float, default=1e-9)
    _common(p)
    p.set_defaults(func=cmd_resolution_study)

    p = sub.add_parser("identity-suite", help="gauge, translation, conjugation and Fourier identities")
    p.add_argument("--eta", type=parse_angle, default=math.pi / 3)
    p.add_argument("--shift", type=int, default=4)
    p.add_argument("--dt", type=float)
    p.add_argument("--threshold", type=float, default=1e-5)
    _state_input(p)
    _common(p)
    p.set_defaults(func=cmd_identity_suite, grid=(24.0, 2048))

    p = sub.add_parser("run", help="run an experiment described by --config")
    _common(p)
    p.set_defaults(func=cmd_run)
    return parser


def _apply_config(parser: argparse.ArgumentParser, args: argparse.Namespace) -> argparse.Namespace:
    if args.config is None:
        if args.command == "run":
            parser.error("run needs --config")
        return args
    try:
        data = json.loads(Path(args.config).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        parser.error(f"cannot read config {args.config}: {exc}")
    if args.command == "run":
        args.experiment = data
        return args
    for key, value in data.items():
        dest = key.replace("-", "_")
        if dest == "in":
            dest = "input"
        if not hasattr(args, dest):
            parser.error(f"unknown config key {key!r} for {args.command}")
        if dest == "grid" and not isinstance(value, (list, tuple)):
            value = _grid_arg(str(value))
        elif dest in ("theta", "eta") and isinstance(value, str):
            value = parse_angle(value)
        setattr(args, dest, value)
    return args


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = _apply_config(parser, parser.parse_args(argv))
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except NLSRotError as exc:
        print(f"nlsrot: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
