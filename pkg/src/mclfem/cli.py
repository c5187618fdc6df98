"""Command-line entry point: run, convergence, consistency, cesaro, check-operators."""

from __future__ import annotations

import argparse
import json
import os
import sys

from . import output
from .config import load_config
from .mesh import assemble_fe_operators, build_uniform_periodic_mesh, verify_operator_identities
from .scheme import semidiscrete_rhs
from .studies import (
    check_cesaro_assertions,
    check_consistency_assertions,
    check_convergence_assertions,
    check_run_assertions,
    cesaro_study,
    consistency_study,
    convergence_study,
    run_simulation,
)


def _levels(text):
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"levels must be comma-separated integers, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="mclfem", description="Flux-corrected P1 finite element solver.")
    sub = p.add_subparsers(dest="command", required=True)
    for name in ("run", "convergence", "consistency", "cesaro"):
        s = sub.add_parser(name)
        s.add_argument("--config", required=True, help="TOML run configuration")
        s.add_argument("--output-dir", help="overrides output.directory")
        s.add_argument("--threads", type=int, help="overrides threads")
        s.add_argument("--seed", type=int, help="overrides seed")
        if name != "run":
            s.add_argument("--levels", type=_levels, help="comma-separated cell counts, e.g. 32,64,128")
    s = sub.add_parser("check-operators")
    s.add_argument("--config", help="take the mesh from a run configuration")
    s.add_argument("--dim", type=int, default=1)
    s.add_argument("--cells", type=int, default=16)
    s.add_argument("--extent", type=float, nargs="+")
    s.add_argument("--tolerance", type=float, default=1e-13)
    return p


def _load(args):
    cfg = load_config(args.config)
    if args.output_dir:
        cfg.output.directory = args.output_dir
    if args.threads is not None:
        if args.threads < 1:
            raise ValueError("--threads must be positive")
        cfg.threads = args.threads
    if args.seed is not None:
        if args.seed < 0:
            raise ValueError("--seed must be nonnegative")
        cfg.seed = args.seed
    return cfg


def _report(outcomes) -> int:
    failed = 0
    for o in outcomes:
        print(f"{'PASS' if o.passed else 'FAIL'} {o.name}: {o.detail}")
        failed += not o.passed
    return 1 if failed else 0


def cmd_run(args) -> int:
    cfg = _load(args)
    res = run_simulation(cfg)
    out = cfg.output.directory
    names = res.model.component_names()
    for k, snap in enumerate(res.trajectory.snapshots):
        for fmt in cfg.output.formats:
            ext = "csv" if fmt == "csv" else "vtk"
            output.write_field_snapshot(
                snap.values, res.mesh, os.path.join(out, f"snapshot_{k:04d}.{ext}"), fmt, names, snap.time
            )
    output.write_table_csv(os.path.join(out, "snapshot_times.csv"), ["index", "t"],
                           [[k, s.time] for k, s in enumerate(res.trajectory.snapshots)])
    output.write_mesh_csv(res.mesh, os.path.join(out, "mesh_elements.csv"), os.path.join(out, "mesh_nodes.csv"))
    output.write_table_csv(os.path.join(out, "diagnostics.csv"), res.record.header(), res.record.rows())
    output.write_table_csv(os.path.join(out, "summary.csv"), ["steps", "bv_time_integral"],
                           [[len(res.trajectory.steps), res.record.bv_time_integral]])
    if cfg.output.edge_debug:
        _, edges = semidiscrete_rhs(res.ops, res.model, res.trajectory.final.values, cfg.limiter_config(),
                                    cfg.admissibility_params())
        output.write_edge_debug_csv(res.ops, edges, os.path.join(out, "edges_final.csv"))
    print(f"run finished: t={res.trajectory.final.time:.6g}, steps={len(res.trajectory.steps)}, output in {out}")
    return _report(check_run_assertions(res))


def cmd_convergence(args) -> int:
    cfg = _load(args)
    result = convergence_study(cfg, args.levels)
    table = result.table
    output.write_table_csv(os.path.join(cfg.output.directory, "eoc.csv"), table.header(), table.rows())
    for row in table.rows():
        print(" ".join(output.fmt(v) for v in row))
    return _report(check_convergence_assertions(cfg, table))


def cmd_consistency(args) -> int:
    cfg = _load(args)
    report = consistency_study(cfg, args.levels)
    output.write_table_csv(os.path.join(cfg.output.directory, "consistency.csv"), report.header(), report.rows())
    slopes = report.slopes()
    output.write_table_csv(os.path.join(cfg.output.directory, "consistency_slopes.csv"), list(slopes),
                           [list(slopes.values())])
    print("slopes: " + ", ".join(f"{k}={v:.4f}" for k, v in slopes.items()))
    return _report(check_consistency_assertions(cfg, report))


def cmd_cesaro(args) -> int:
    cfg = _load(args)
    res = cesaro_study(cfg, args.levels)
    output.write_table_csv(os.path.join(cfg.output.directory, "cesaro.csv"), ["N", "l1_difference"],
                           [[k + 2, d] for k, d in enumerate(res.differences)])
    print("Cesaro differences: " + ", ".join(f"{d:.6e}" for d in res.differences))
    return _report(check_cesaro_assertions(cfg, res.differences))


def cmd_check_operators(args) -> int:
    if args.config:
        cfg = load_config(args.config)
        dim, cells, extent = cfg.mesh.dim, cfg.mesh.cells, cfg.mesh.extent
    else:
        dim, cells = args.dim, args.cells
        extent = args.extent or [1.0] * dim
    mesh = build_uniform_periodic_mesh(dim, cells, extent)
    report = verify_operator_identities(assemble_fe_operators(mesh), args.tolerance)
    print(f"mesh: dim={dim} cells={cells} nodes={mesh.n_nodes} elements={mesh.n_elements}")
    for line in report.lines():
        print(line)
    return 0 if report.ok else 1


COMMANDS = {
    "run": cmd_run,
    "convergence": cmd_convergence,
    "consistency": cmd_consistency,
    "cesaro": cmd_cesaro,
    "check-operators": cmd_check_operators,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except Exception as exc:  # reported in machine-readable form
        print(json.dumps({"error": type(exc).__name__, "command": args.command, "message": str(exc)}),
              file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
