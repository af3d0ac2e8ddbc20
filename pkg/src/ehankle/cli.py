"""Command-line entry point: simulate, route, lattice, topo and gait subcommands.

Exit codes: 0 success, 2 configuration or validation error, 3 runtime or
numerical failure.  Errors are reported on stderr as one JSON object.
Every run writes ``manifest.json`` next to its outputs.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import sys
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np

from . import __version__

log = logging.getLogger("ehankle")

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 2, 3


class ConfigError(Exception):
    def __init__(self, message, path=None):
        super().__init__(message)
        self.path = path


# -- helpers ----------------------------------------------------------------

def _canonical(obj) -> bytes:
    return json.dumps(obj, sort_keys=True, separators=(",", ":")).encode()


def _sha256_file(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _write_json(path: Path, obj) -> Path:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


def _bundled(name: str) -> Path:
    return Path(str(resources.files("ehankle.data").joinpath(name)))


def _schema(name: str) -> dict:
    ref = resources.files("ehankle.schemas").joinpath(f"{name}.schema.json")
    return json.loads(ref.read_text(encoding="utf-8"))


def _load_json(path, schema: str | None = None) -> dict:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}", str(path))
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON in {path}: {exc}", str(path)) from None
    if schema:
        try:
            jsonschema.Draft202012Validator(_schema(schema)).validate(data)
        except jsonschema.ValidationError as exc:
            where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
            raise ConfigError(f"{path}: {where}: {exc.message}", str(path)) from None
    return data


def _out_dir(path) -> Path:
    out = Path(path)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ConfigError(f"cannot create output directory {out}: {exc}", str(out)) from None
    return out


def _manifest(out_dir: Path, subcommand: str, config: dict, outputs) -> Path:
    files = sorted(Path(p) for p in outputs)
    manifest = {
        "tool": "ehankle",
        "version": __version__,
        "subcommand": subcommand,
        "config_sha256": hashlib.sha256(_canonical(config)).hexdigest(),
        "outputs": [{"file": p.name, "sha256": _sha256_file(p), "bytes": p.stat().st_size}
                    for p in files],
    }
    return _write_json(out_dir / "manifest.json", manifest)


def _report_error(exc: BaseException, code: int) -> int:
    payload = {"error": type(exc).__name__, "message": str(exc), "exit_code": code}
    path = getattr(exc, "path", None)
    if path:
        payload["path"] = path
    sys.stderr.write(json.dumps(payload, sort_keys=True) + "\n")
    return code


# -- subcommands --------------------------------------------------------------

def cmd_simulate(args) -> int:
    from .gait import cylinder_load_from_ankle, default_profile, load_gait_csv
    from .hydraulics import HydraulicConfig, displacement_correlation, simulate_cycle
    from .plots import displacement_plot

    cfg_path = Path(args.config) if args.config else _bundled("table1.json")
    raw = _load_json(cfg_path, "simulate")
    if args.n_steps is not None:
        raw["n_steps"] = args.n_steps
    if args.cadence is not None:
        raw["cadence_s"] = args.cadence
    if raw.get("n_steps", 20000) < 1000:
        raise ConfigError(f"n_steps must be at least 1000, got {raw['n_steps']}")
    try:
        cfg = HydraulicConfig.from_dict(raw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{cfg_path}: {exc}", str(cfg_path)) from None
    gait_src = args.gait or raw.get("gait_csv")
    if gait_src:
        gp = Path(gait_src)
        if not gp.is_absolute() and not args.gait:
            gp = cfg_path.parent / gp
        if not gp.is_file():
            raise ConfigError(f"gait file not found: {gp}", str(gp))
        try:
            profile = load_gait_csv(gp, cfg.cadence_s)
        except ValueError as exc:
            raise ConfigError(str(exc), str(gp)) from None
    else:
        profile = default_profile(cfg.cadence_s)
    out = _out_dir(args.out_dir)
    result = simulate_cycle(cfg, cylinder_load_from_ankle(profile, cfg.linkage))
    ts = out / "timeseries.csv"
    result.series.write_csv(ts)
    report = result.report.to_dict()
    report["displacement_correlation"] = displacement_correlation(result.series)
    report["n_steps"] = cfg.n_steps
    rep = _write_json(out / "energy_report.json", report)
    fig = displacement_plot(result.series, out / "displacement.svg")
    resolved = cfg.to_dict()
    resolved["gait_sha256"] = hashlib.sha256(_canonical(profile.samples)).hexdigest()
    _manifest(out, "simulate", resolved, [ts, rep, fig])
    log.info("relative energy closure %.3g", result.report.relative_closure)
    print(json.dumps({"relative_closure": result.report.relative_closure,
                      "pump_input_J": result.report.pump_input}, sort_keys=True))
    return EXIT_OK


def _ports_from_args(args):
    from .channels import Port, preset_ports

    if args.ports:
        raw = _load_json(args.ports, "ports")
        try:
            return Port.from_dict(raw["a"]), Port.from_dict(raw["b"]), raw
        except ValueError as exc:
            raise ConfigError(f"{args.ports}: {exc}", str(args.ports)) from None
    try:
        a, b = preset_ports(args.preset, args.diameter)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    return a, b, {"preset": args.preset, "a": a.to_dict(), "b": b.to_dict()}


def cmd_route(args) -> int:
    from .channels import (ROUTE_KINDS, build_route, export_route, flow_for_velocity,
                           pressure_loss_estimate)
    from .hydraulics import FluidProps

    a, b, ports_cfg = _ports_from_args(args)
    if args.flow_lpm is not None:
        if not args.flow_lpm > 0.0:
            raise ConfigError("--flow-lpm must be positive")
        Q = args.flow_lpm / 60000.0
    else:
        if not args.velocity > 0.0:
            raise ConfigError("--velocity must be positive")
        Q = flow_for_velocity(args.velocity, a.diameter)
    kinds = ROUTE_KINDS if args.kind == "all" else [
        "arc_fillet" if args.kind == "arc" else args.kind]
    out = _out_dir(args.out_dir)
    outputs = []
    for kind in kinds:
        try:
            route = build_route(kind, a, b)
        except ValueError as exc:
            raise ConfigError(f"cannot build {kind} route: {exc}") from None
        est = pressure_loss_estimate(route, Q, FluidProps())
        paths = export_route(route, out / f"route_{kind}")
        rep = est.to_dict()
        rep["kind"] = kind
        rep["flow_m3_s"] = Q
        outputs += [paths["csv"], paths["stl"], _write_json(out / f"loss_{kind}.json", rep)]
        print(json.dumps(rep, sort_keys=True))
    _manifest(out, "route", {"ports": ports_cfg, "kinds": list(kinds), "flow_m3_s": Q}, outputs)
    return EXIT_OK


def cmd_lattice(args) -> int:
    from .lattice import LatticeConfig, interior_subgrid, marching_cubes, solve_demo
    from .mesh import write_stl

    cfg_path = Path(args.config) if args.config else _bundled("lattice_demo.json")
    raw = _load_json(cfg_path, "lattice")
    if args.target_density is not None:
        raw["target_density"] = args.target_density
    if args.dims is not None:
        raw["dims"] = [args.dims] * 3
    try:
        cfg = LatticeConfig.from_dict(raw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{cfg_path}: {exc}", str(cfg_path)) from None
    stl = Path(args.out)
    report_path = Path(args.report) if args.report else stl.with_suffix(".json")
    out = _out_dir(stl.parent)
    _out_dir(report_path.parent)
    block, sol = solve_demo(cfg)
    mesh = marching_cubes(sol.grid, close_boundary=True)
    write_stl(mesh, stl)
    margin = max(1, min(cfg.dims) // 16)
    interior = marching_cubes(interior_subgrid(sol.grid, margin), close_boundary=True)
    report = sol.report()
    report.update({
        "w_mm": sol.w * 1e3,
        "mesh": {"triangles": mesh.n_faces, "vertices": len(mesh.vertices),
                 "watertight": mesh.is_watertight(), "area_m2": mesh.area(),
                 "volume_m3": mesh.volume()},
        "interior_mesh_watertight": interior.is_watertight(),
    })
    _write_json(report_path, report)
    _manifest(out, "lattice", cfg.to_dict(), [stl, report_path])
    print(json.dumps({"fraction": sol.fraction, "w_mm": sol.w * 1e3}, sort_keys=True))
    return EXIT_OK


def cmd_topo(args) -> int:
    from .plots import compliance_plot
    from .topo import PRESETS, export_density_png_csv, run_topo

    kw = {k: v for k, v in (("nelx", args.nelx), ("nely", args.nely), ("volfrac", args.volfrac),
                            ("penalty", args.penalty), ("rmin", args.rmin)) if v is not None}
    try:
        problem = PRESETS[args.preset](**kw)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    if args.max_iters < 1:
        raise ConfigError("--max-iters must be at least 1")
    out = _out_dir(args.out_dir)
    field = run_topo(problem, args.max_iters, args.tol)
    paths = export_density_png_csv(field, out / f"{args.preset}_density")
    fig = compliance_plot(field, out / f"{args.preset}_compliance.svg")
    summary = {"iterations": field.iterations, "converged": field.converged,
               "compliance": field.final_compliance, "mean_density": float(field.rho.mean())}
    rep = _write_json(out / f"{args.preset}_summary.json", summary)
    config = {"preset": args.preset, **kw, "max_iters": args.max_iters, "tol": args.tol}
    _manifest(out, "topo", config, [*paths.values(), fig, rep])
    print(json.dumps(summary, sort_keys=True))
    return EXIT_OK


def cmd_gait(args) -> int:
    from .gait import (DEFAULT_GAIT_COMMENT, LinkageMap, cycle_work, cylinder_load_from_ankle,
                       default_profile, load_gait_csv, phase_at, write_gait_csv)

    out = _out_dir(args.out_dir)
    outputs = []
    if args.input:
        try:
            profile = load_gait_csv(args.input, args.cadence)
        except FileNotFoundError:
            raise ConfigError(f"gait file not found: {args.input}", str(args.input)) from None
        except ValueError as exc:
            raise ConfigError(str(exc), str(args.input)) from None
    else:
        profile = default_profile(args.cadence)
    if args.emit_default:
        p = out / "default_gait.csv"
        write_gait_csv(default_profile(args.cadence), p, DEFAULT_GAIT_COMMENT)
        outputs.append(p)
    load = cylinder_load_from_ankle(profile, LinkageMap())
    lp = out / "cylinder_load.csv"
    with lp.open("w", encoding="utf-8", newline="") as fh:
        fh.write("t_frac,phase,force_N,position_m\n")
        for t, f, y in zip(load.t_frac, load.force, load.position):
            fh.write(f"{t!r},{phase_at(float(t)).value},{float(f)!r},{float(y)!r}\n")
    outputs.append(lp)
    summary = {"samples": len(profile), "cadence_s": profile.cadence,
               "cycle_work_J": cycle_work(profile),
               "peak_force_N": float(np.abs(load.force).max()),
               "position_range_m": [float(load.position.min()), float(load.position.max())]}
    outputs.append(_write_json(out / "gait_summary.json", summary))
    config = {"input": str(args.input) if args.input else "bundled", "cadence": args.cadence,
              "profile_sha256": hashlib.sha256(_canonical(profile.samples)).hexdigest()}
    _manifest(out, "gait", config, outputs)
    print(json.dumps(summary, sort_keys=True))
    return EXIT_OK


# -- parser -------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ehankle", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"ehankle {__version__}")
    p.add_argument("-v", "--verbose", action="count", default=0)
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="integrate one gait cycle of the hydraulic circuit")
    s.add_argument("--config", help="circuit JSON (default: bundled reference parameters)")
    s.add_argument("--gait", help="gait CSV (default: bundled synthetic profile)")
    s.add_argument("--n-steps", type=int)
    s.add_argument("--cadence", type=float, help="cycle duration in seconds")
    s.add_argument("--out-dir", default="out/simulate")
    s.set_defaults(func=cmd_simulate)

    r = sub.add_parser("route", help="route a channel between two ports and estimate its loss")
    r.add_argument("--ports", help="JSON with ports a and b")
    r.add_argument("--preset", default="perpendicular", choices=["perpendicular", "parallel"])
    r.add_argument("--diameter", type=float, default=3.2e-3, help="bore for presets [m]")
    r.add_argument("--kind", default="bspline",
                   choices=["bspline", "straight", "arc", "arc_fillet", "bezier3", "all"])
    r.add_argument("--flow-lpm", type=float, help="flow rate [L/min]")
    r.add_argument("--velocity", type=float, default=2.5, help="mean velocity [m/s] if no flow")
    r.add_argument("--out-dir", default="out/route")
    r.set_defaults(func=cmd_route)

    la = sub.add_parser("lattice", help="lattice-fill the demonstration block to a target density")
    la.add_argument("--config", help="lattice JSON (default: bundled demonstration block)")
    la.add_argument("--target-density", type=float)
    la.add_argument("--dims", type=int, help="samples per axis")
    la.add_argument("--out", default="out/lattice/block.stl")
    la.add_argument("--report")
    la.set_defaults(func=cmd_lattice)

    t = sub.add_parser("topo", help="2-D SIMP topology optimisation")
    t.add_argument("--preset", default="cantilever", choices=["cantilever", "bracket"])
    t.add_argument("--nelx", type=int)
    t.add_argument("--nely", type=int)
    t.add_argument("--volfrac", type=float)
    t.add_argument("--penalty", type=float)
    t.add_argument("--rmin", type=float)
    t.add_argument("--max-iters", type=int, default=200)
    t.add_argument("--tol", type=float, default=0.01)
    t.add_argument("--out-dir", default="out/topo")
    t.set_defaults(func=cmd_topo)

    g = sub.add_parser("gait", help="inspect a gait profile and derive the cylinder load")
    g.add_argument("--input", help="gait CSV (default: bundled synthetic profile)")
    g.add_argument("--cadence", type=float, default=1.2)
    g.add_argument("--emit-default", action="store_true", help="write the bundled profile CSV")
    g.add_argument("--out-dir", default="out/gait")
    g.set_defaults(func=cmd_gait)
    return p


def main(argv=None) -> int:
    from .hydraulics import SimulationError
    from .lattice import DensityTargetError
    from .topo import TopoError

    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(message)s", stream=sys.stderr)
    try:
        return args.func(args)
    except ConfigError as exc:
        return _report_error(exc, EXIT_CONFIG)
    except (SimulationError, TopoError, DensityTargetError, ArithmeticError,
            np.linalg.LinAlgError) as exc:
        return _report_error(exc, EXIT_RUNTIME)
    except ValueError as exc:
        return _report_error(exc, EXIT_CONFIG)
    except OSError as exc:
        return _report_error(exc, EXIT_RUNTIME)


if __name__ == "__main__":
    sys.exit(main())
