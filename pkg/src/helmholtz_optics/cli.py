"""Command line front end: ``helmholtz-optics <command> [options]``.

Every option can also come from a JSON file given with ``--config``; its
keys are the option names with dashes replaced by underscores.  A flag on
the command line beats the file, the file beats the built-in default.
Secondary outputs (grid dumps, image reports, focus reports) are written to
``--outdir``, defaulting to ``$HELMHOLTZ_OPTICS_OUTDIR`` or the current
directory.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import validation
from .congruence import DEFAULT_MOMENTA, crossing_scan, simulate_fan
from .errors import HelmholtzError, NotSpectral, UsageError
from .expr import parse_potential, random_staircase
from .prufer import find_eigenvalue, spectrum
from .quantum import GRID_POINTS, apply_factorized_propagator, density_image_residual, density_l1, gaussian_packet, split_step_evolve
from .solenoid import SolenoidConfig, image_report, make_fan, propagate_particle, reduce_to_dimensionless
from .transfer import eta_integral, evolution_matrix, factor_check

OUTDIR_ENV = "HELMHOLTZ_OPTICS_OUTDIR"

EXIT_OK, EXIT_NUMERIC, EXIT_USAGE, EXIT_VALIDATION = 0, 1, 2, 3

DEFAULTS = {
    "interval": None,
    "t_max": None,
    "tol": 1e-10,
    "ode_tol": 1e-10,
    "steps": None,
    "format": "csv",
    "output": None,
    "outdir": None,
    "seed": 0,
    "n_max": 3,
    "n": 1,
    "lambda_": None,
    "lambda_max": None,
    "scan_points": 400,
    "q0": 1.0,
    "momenta": list(DEFAULT_MOMENTA),
    "samples": 201,
    "center": 0.0,
    "width": 1.0,
    "momentum": 0.0,
    "points": GRID_POINTS,
    "gamma": None,
    "beta2": None,
    "beta": None,
    "field": None,
    "position": [0.3, 0.4, 0.0],
    "p3": 1.0,
    "criteria": None,
    "verbose": False,
}

# config-file spelling of option names that differ from their dest
FILE_ALIASES = {"lambda": "lambda_"}


def fmt(x) -> str:
    """Fixed 9-significant-digit text for every emitted number."""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return f"{float(x):.9g}"


def jnum(x):
    """JSON value carrying the same 9 significant digits as the CSV text."""
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    x = float(x)
    if not math.isfinite(x):
        raise HelmholtzError(f"non-finite value {x!r} in output")
    return float(f"{x:.9g}")


def jtree(obj):
    if isinstance(obj, dict):
        return {k: jtree(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jtree(v) for v in obj]
    if isinstance(obj, str) or obj is None:
        return obj
    return jnum(obj)


def csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) for v in row])
    return buf.getvalue()


def json_text(obj) -> str:
    return json.dumps(jtree(obj), indent=2) + "\n"


def table_text(fmt_name, header, rows, meta):
    if fmt_name == "csv":
        return csv_text(header, rows)
    return json_text({**meta, "rows": [dict(zip(header, r)) for r in rows]})


def emit(text: str, output):
    if output in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(output).write_text(text)


def outdir(cfg) -> Path:
    path = Path(cfg["outdir"] or os.environ.get(OUTDIR_ENV) or ".")
    path.mkdir(parents=True, exist_ok=True)
    return path


# ---------------------------------------------------------------- parsing


def _common(p, potential="phi"):
    p.add_argument("--config", metavar="FILE", help="JSON file with option defaults")
    p.add_argument(f"--{potential}", metavar="EXPR",
                   help="coefficient expression in t" + ("; 'random' for a seeded staircase" if potential == "phi" else ""))
    p.add_argument("--interval", nargs=2, type=float, metavar=("A", "B"))
    p.add_argument("--t-max", type=float, dest="t_max", help="shorthand for --interval 0 T")
    p.add_argument("--tol", type=float, help="root-finding tolerance")
    p.add_argument("--ode-tol", type=float, dest="ode_tol", help="integration refinement tolerance")
    p.add_argument("--steps", type=int, help="fixed RK4 step count (overrides refinement)")
    p.add_argument("--format", choices=("csv", "json"))
    p.add_argument("--output", "-o", metavar="PATH", help="primary output (default stdout)")
    p.add_argument("--outdir", metavar="DIR", help=f"directory for secondary files (default ${OUTDIR_ENV} or .)")
    p.add_argument("--seed", type=int, help="seed for --phi random")


def _lambda_or_n(p):
    p.add_argument("--lambda", type=float, dest="lambda_", metavar="LAMBDA")
    p.add_argument("--n", type=int, help="use the n-th eigenvalue (when --lambda is absent)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="helmholtz-optics", description="Helmholtz spectra and the imaging constants of time-dependent oscillators.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("spectrum", help="eigenvalues with sigma and eta")
    _common(p)
    p.add_argument("--n-max", type=int, dest="n_max")
    p.add_argument("--lambda-max", type=float, dest="lambda_max", help="upper end of the lambda scan")
    p.add_argument("--scan-points", type=int, dest="scan_points")

    p = sub.add_parser("optics", help="transfer matrix and optical constants")
    _common(p)
    _lambda_or_n(p)

    p = sub.add_parser("congruence", help="trajectory fan from a common position")
    _common(p)
    _lambda_or_n(p)
    p.add_argument("--q0", type=float)
    p.add_argument("--momenta", type=float, nargs="+")
    p.add_argument("--samples", type=int, help="rows per trajectory")

    p = sub.add_parser("crossings", help="image planes of a fan leaving q=0")
    _common(p)
    p.add_argument("--lambda", type=float, dest="lambda_", metavar="LAMBDA", required=False)

    p = sub.add_parser("qimage", help="wave-packet image: closed form against split-step")
    _common(p)
    p.add_argument("--n", type=int)
    p.add_argument("--center", type=float)
    p.add_argument("--width", type=float)
    p.add_argument("--momentum", type=float)
    p.add_argument("--points", type=int)

    p = sub.add_parser("solenoid", help="charged-particle fan in a pulsed solenoid")
    _common(p, potential="gamma")
    g = p.add_mutually_exclusive_group()
    g.add_argument("--beta2", type=float)
    g.add_argument("--beta", type=float)
    g.add_argument("--field", type=float, nargs=5, metavar=("E", "B", "T", "M", "C"),
                   help="physical constants; beta = e*B*T/(2*m*c)")
    p.add_argument("--position", type=float, nargs=3, metavar=("Q1", "Q2", "Q3"))
    p.add_argument("--p3", type=float)
    p.add_argument("--samples", type=int)

    p = sub.add_parser("validate", help="run the acceptance suite")
    p.add_argument("--config", metavar="FILE")
    p.add_argument("--criteria", type=int, nargs="+", metavar="K")
    p.add_argument("--verbose", "-v", action="store_true", default=None)
    p.add_argument("--format", choices=("text", "json"))
    p.add_argument("--output", "-o", metavar="PATH")
    return parser


def resolve(args) -> dict:
    """Merge flag > config file > default."""
    cfg = dict(DEFAULTS)
    if args.config:
        try:
            data = json.loads(Path(args.config).read_text())
        except (OSError, ValueError) as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}") from None
        if not isinstance(data, dict):
            raise UsageError("config file must hold a JSON object")
        known = set(vars(args)) | set(DEFAULTS)
        for key, value in data.items():
            key = FILE_ALIASES.get(key, key.replace("-", "_"))
            if key not in known:
                raise UsageError(f"unknown config key {key!r}")
            cfg[key] = value
    for key, value in vars(args).items():
        if value is not None:
            cfg[key] = value
    if args.command == "validate" and cfg["format"] == "csv":
        cfg["format"] = "text"
    for key, value in cfg.items():
        if isinstance(value, float) and not math.isfinite(value):
            raise UsageError(f"{key} must be finite")
    return cfg


def _interval(cfg, default=(0.0, 1.0)):
    if cfg["t_max"] is not None:
        if cfg["interval"] is not None and list(cfg["interval"]) != [0.0, cfg["t_max"]]:
            raise UsageError("give either --interval or --t-max, not both")
        return 0.0, float(cfg["t_max"])
    a, b = cfg["interval"] if cfg["interval"] is not None else default
    return float(a), float(b)


def load_potential(cfg, key="phi"):
    src = cfg.get(key)
    if not src:
        raise UsageError(f"--{key} is required")
    a, b = _interval(cfg)
    if src.strip() == "random":
        if a != 0.0:
            raise UsageError("the random staircase lives on [0, t_max]")
        return random_staircase(int(cfg["seed"]), b)
    return parse_potential(src, a, b)


def _spectral(spec, cfg):
    return find_eigenvalue(spec, int(cfg["n"]), tol=cfg["tol"], ode_tol=cfg["ode_tol"])


# --------------------------------------------------------------- commands


def cmd_spectrum(cfg):
    spec = load_potential(cfg)
    scan = None
    if cfg["lambda_max"] is not None or cfg["scan_points"] != DEFAULTS["scan_points"]:
        scan = (cfg["lambda_max"], int(cfg["scan_points"]))
    results = spectrum(spec, int(cfg["n_max"]), tol=cfg["tol"], ode_tol=cfg["ode_tol"], scan=scan)
    header = ["n", "lambda", "sigma", "eta", "alpha_residual"]
    rows = [[r.as_row()[k] for k in header] for r in results]
    meta = {"phi": spec.source, "interval": list(spec.interval)}
    emit(table_text(cfg["format"], header, rows, meta), cfg["output"])
    return EXIT_OK


def cmd_optics(cfg):
    spec = load_potential(cfg)
    result = None
    if cfg["lambda_"] is None:
        result = _spectral(spec, cfg)
        lam, steps = result.lam, cfg["steps"] or result.steps
    else:
        lam, steps = float(cfg["lambda_"]), cfg["steps"]
    u = evolution_matrix(spec, lam, tol=cfg["ode_tol"], steps=steps)
    row = {"lambda": lam, "u11": u.u11, "u12": u.u12, "u21": u.u21, "u22": u.u22,
           "det_residual": u.det_residual, "triangular": u.is_triangular()}
    if row["triangular"]:
        row["sigma"] = u.u11
        row["eta"] = u.u21
        row["eta_integral"] = eta_integral(spec, lam, tol=cfg["ode_tol"], steps=steps)
        if result is not None:
            row["factor_residual"] = factor_check(spec, result)
    if cfg["format"] == "csv":
        text = csv_text(list(row), [list(row.values())])
    else:
        text = json_text({"phi": spec.source, "interval": list(spec.interval), **row})
    emit(text, cfg["output"])
    return EXIT_OK


def cmd_congruence(cfg):
    spec = load_potential(cfg)
    lam = float(cfg["lambda_"]) if cfg["lambda_"] is not None else _spectral(spec, cfg).lam
    focus, trajectories = simulate_fan(spec, lam, float(cfg["q0"]), cfg["momenta"], int(cfg["samples"]))
    header = ["traj", "p0", "t", "q", "p"]
    rows = [[i, tr.source[1], t, q, p] for i, tr in enumerate(trajectories) for t, q, p in tr.rows()]
    meta = {"phi": spec.source, "interval": list(spec.interval), "lambda": lam}
    emit(table_text(cfg["format"], header, rows, meta), cfg["output"])
    (outdir(cfg) / "congruence_focus.json").write_text(json_text({"lambda": lam, "q0": cfg["q0"], **asdict(focus)}))
    return EXIT_OK


def cmd_crossings(cfg):
    spec = load_potential(cfg)
    if cfg["lambda_"] is None:
        raise UsageError("--lambda is required")
    found = crossing_scan(spec, float(cfg["lambda_"]), steps=cfg["steps"])
    header = ["k", "t", "sigma"]
    rows = [[c.k, c.t, c.sigma] for c in found]
    meta = {"phi": spec.source, "interval": list(spec.interval), "lambda": cfg["lambda_"]}
    emit(table_text(cfg["format"], header, rows, meta), cfg["output"])
    return EXIT_OK


def cmd_qimage(cfg):
    spec = load_potential(cfg)
    result = _spectral(spec, cfg)
    psi = gaussian_packet(cfg["center"], cfg["width"], cfg["momentum"], int(cfg["points"]), sigma=result.sigma)
    split = split_step_evolve(psi, spec, result.lam, steps=cfg["steps"])
    image = apply_factorized_propagator(psi, result, grid=split)
    out = outdir(cfg)
    psi.write_csv(out / "qimage_input.csv")
    image.write_csv(out / "qimage_factorized.csv")
    split.write_csv(out / "qimage_splitstep.csv")
    row = {
        "n": result.n,
        "lambda": result.lam,
        "sigma": result.sigma,
        "eta": result.eta,
        "l1_distance": density_l1(split, image),
        "residual_factorized": density_image_residual(psi, image, result.sigma),
        "residual_splitstep": density_image_residual(psi, split, result.sigma),
        "norm_drift_factorized": abs(image.norm - psi.norm) / psi.norm,
        "norm_drift_splitstep": abs(split.norm - psi.norm) / psi.norm,
    }
    if cfg["format"] == "csv":
        text = csv_text(list(row), [list(row.values())])
    else:
        text = json_text({"phi": spec.source, "interval": list(spec.interval), **row})
    emit(text, cfg["output"])
    return EXIT_OK


def _beta(cfg):
    if cfg["field"] is not None:
        return reduce_to_dimensionless(*cfg["field"])
    if cfg["beta"] is not None:
        return float(cfg["beta"])
    if cfg["beta2"] is not None:
        if cfg["beta2"] < 0.0:
            raise UsageError("--beta2 must be >= 0")
        return math.sqrt(cfg["beta2"])
    raise UsageError("one of --beta2, --beta or --field is required")


def cmd_solenoid(cfg):
    shape = load_potential(cfg, "gamma")
    config = SolenoidConfig(_beta(cfg), shape)
    fan = make_fan(cfg["position"], cfg["p3"])
    try:
        report, code = image_report(config, fan, steps=cfg["steps"]), EXIT_OK
    except NotSpectral as exc:
        report, code = exc.report, EXIT_NUMERIC
        print(f"error: {exc}", file=sys.stderr)
    header = ["traj", "tau", "q1", "q2", "q3", "p1", "p2", "p3"]
    rows = []
    for i, state in enumerate(fan):
        traj = propagate_particle(config, state, samples=int(cfg["samples"]), steps=cfg["steps"])
        rows.extend([i, *r] for r in traj.rows())
    meta = {"gamma": shape.source, "interval": list(shape.interval), "beta2": config.lam}
    emit(table_text(cfg["format"], header, rows, meta), cfg["output"])
    (outdir(cfg) / "solenoid_images.json").write_text(json_text({"gamma": shape.source, **report.to_json()}))
    return code


def cmd_validate(cfg):
    numbers = cfg["criteria"] or sorted(validation.CRITERIA)
    unknown = [k for k in numbers if k not in validation.CRITERIA]
    if unknown:
        raise UsageError(f"unknown criteria {unknown}")
    results = []
    for r in validation.run_all(numbers):
        results.append(r)
        if cfg["format"] == "text":
            print(r.report() if cfg["verbose"] else r.summary(), flush=True)
    passed = all(r.passed for r in results)
    if cfg["format"] == "json":
        emit(json.dumps({"passed": passed, "criteria": [
            {"number": r.number, "title": r.title, "passed": r.passed,
             "checks": [{"label": c.label, "passed": c.ok} for c in r.checks]} for r in results]}, indent=2) + "\n",
             cfg["output"])
    else:
        print(f"{sum(r.passed for r in results)}/{len(results)} criteria passed")
    return EXIT_OK if passed else EXIT_VALIDATION


COMMANDS = {
    "spectrum": cmd_spectrum,
    "optics": cmd_optics,
    "congruence": cmd_congruence,
    "crossings": cmd_crossings,
    "qimage": cmd_qimage,
    "solenoid": cmd_solenoid,
    "validate": cmd_validate,
}


def run_cli(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return COMMANDS[args.command](resolve(args))
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except HelmholtzError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


def main():
    sys.exit(run_cli())
