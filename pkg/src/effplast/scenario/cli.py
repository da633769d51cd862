"""Command line entry point.

Subcommands::

    effplast run --config scenario.json [--out DIR] [--tol yield=1e-9]
    effplast compare A.csv B.csv [--columns torque,twist] [--out report.json]
    effplast bounds --config rve.json [--out tensors.json]
    effplast coeffs --config sphere.json [--out coeffs.json]

Results are JSON on stdout (or in ``--out``).  Any failure prints a JSON
object ``{"error": ..., "message": ..., "step": ...}`` on stderr and exits
with status 2 for configuration or schema problems and 1 for model errors.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .. import sphere as sph
from ..rve import model as rm
from ..errors import ConfigError, EffplastError, SchemaError
from ..tensor import iso_moduli
from .compare import compare as compare_runs
from .config import load_config
from .runner import _rve_materials, resolve_geometry, run_scenario


def _apply_tol(cfg, overrides):
    for item in overrides or ():
        key, sep, value = item.partition("=")
        if not sep:
            key, value = "yield", key
        if key not in ("yield", "sweep_limit"):
            raise ConfigError(f"unknown tolerance {key!r}; expected yield or sweep_limit")
        try:
            num = int(value) if key == "sweep_limit" else float(value)
        except ValueError:
            raise ConfigError(f"tolerance {key} needs a number, got {value!r}") from None
        if not num > 0:
            raise ConfigError(f"tolerance {key} must be positive")
        cfg.tolerances[key] = num
    return cfg


def _emit(payload, out):
    text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    if out:
        Path(out).parent.mkdir(parents=True, exist_ok=True)
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def cmd_run(args):
    cfg = _apply_tol(load_config(args.config), args.tol)
    out = args.out or cfg.output.get("dir") or "."
    name = cfg.output.get("name", Path(args.config).stem)
    result = run_scenario(cfg, out_dir=out, name=name)
    payload = dict(result.summary)
    payload["csv"] = str(Path(out) / f"{name}.csv")
    sys.stdout.write(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def cmd_compare(args):
    columns = args.columns.split(",") if args.columns else None
    report = compare_runs(args.run_a, args.run_b, columns)
    _emit({"reference": args.run_b, "columns": [d.to_dict() for d in report]}, args.out)


def cmd_bounds(args):
    cfg = load_config(args.config)
    if cfg.family != "rve":
        raise ConfigError("bounds needs an rve config")
    geom = resolve_geometry(cfg.geometry)
    mats = _rve_materials(cfg, geom)
    payload = {}
    for kind, build in rm.ASSEMBLERS.items():
        C = build(geom, mats).C_eff
        entry = {"C_eff": np.round(C, 12).tolist()}
        try:
            bulk, shear = iso_moduli(C)
            entry.update(bulk=bulk, shear=shear)
        except EffplastError:
            pass
        payload[kind] = entry
    payload["basis"] = "Mandel (11, 22, 33, 23, 13, 12)"
    _emit(payload, args.out)


def cmd_coeffs(args):
    cfg = load_config(args.config)
    if cfg.family != "sphere":
        raise ConfigError("coeffs needs a sphere config")
    g = cfg.geometry
    mat = cfg.material(g["material"])
    radii = np.asarray(g["radii"], dtype=float) if "radii" in g else np.linspace(
        float(g["r_in"]), float(g["r_out"]), int(g["n_subdomains"]) + 1
    )
    model = sph.SphereModel(
        radii, mat.bulk_modulus, mat.shear_modulus, mat.yield_stress,
        g.get("dissipation", "nominal"), float(g.get("solid_angle", sph.FOUR_PI)),
    )
    form = sph.assemble(model, free_outer=g.get("outer") == "free", free_inner=g.get("inner") == "free")
    coeffs = {",".join(map(str, k)): v for k, v in form.coefficients().items()}
    _emit({"variables": list(form.names), "coefficients": coeffs}, args.out)


def build_parser():
    parser = argparse.ArgumentParser(prog="effplast", description="Reduced-order elastoplasticity scenarios")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a scenario and write CSV and summary JSON")
    run.add_argument("--config", required=True)
    run.add_argument("--out", help="output directory (default: config output.dir or .)")
    run.add_argument("--tol", action="append", metavar="KEY=VALUE", help="override yield or sweep_limit")
    run.set_defaults(func=cmd_run)

    comp = sub.add_parser("compare", help="relative L2 and max-abs discrepancies per column")
    comp.add_argument("run_a")
    comp.add_argument("run_b", help="reference run")
    comp.add_argument("--columns", help="comma separated column names (default: all shared)")
    comp.add_argument("--out")
    comp.set_defaults(func=cmd_compare)

    bounds = sub.add_parser("bounds", help="ROM, Reuss and Voigt elastic tensors of an RVE")
    bounds.add_argument("--config", required=True)
    bounds.add_argument("--out")
    bounds.set_defaults(func=cmd_bounds)

    coeffs = sub.add_parser("coeffs", help="quadratic coefficients of the sphere energy")
    coeffs.add_argument("--config", required=True)
    coeffs.add_argument("--out")
    coeffs.set_defaults(func=cmd_coeffs)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except (ConfigError, SchemaError) as exc:
        _error(exc, 2)
        return 2
    except (EffplastError, ValueError, OSError) as exc:
        _error(exc, 1)
        return 1
    return 0


def _error(exc, code):
    payload = {"error": type(exc).__name__, "message": str(exc), "exit_code": code}
    if getattr(exc, "step", None) is not None:
        payload["step"] = exc.step
    if getattr(exc, "residual", None) is not None:
        payload["residual"] = float(exc.residual)
    sys.stderr.write(json.dumps(payload, sort_keys=True) + "\n")


if __name__ == "__main__":
    sys.exit(main())
