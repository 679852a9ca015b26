"""Command-line interface: run scenarios, compare against reference solvers,
classify track points.  All outputs are deterministic for a fixed config."""
import argparse
import json
import os
import sys

import numpy as np

from .config import ScenarioConfig
from .errors import ConfigError, NumericalAbort, SurgflowError
from .io.reports import write_diagnostics_csv, write_events, write_summary


def _load_config(args):
    if args.scenario:
        from .scenarios import scenario

        return scenario(args.scenario)
    if args.config:
        return ScenarioConfig.from_toml(args.config)
    raise ConfigError("provide --scenario NAME or --config FILE")


def _assemble_events(result):
    events = [ev.as_dict() for ev in result.surgery_events]
    for rec in result.extinct_components:
        events.append(
            {
                "type": "extinct_component",
                "time": rec["time"],
                "area": rec["area"],
                "component": rec["component"],
            }
        )
    events.sort(key=lambda e: (e["time"], e["type"]))
    return events


def _execute_run(cfg, outdir):
    from .runner import longtime_report, run_flow_with_surgery

    domain = cfg.build_domain()
    mesh = cfg.build_initial_mesh(domain)
    params = cfg.surgery_params()
    controls = cfg.flow_controls()
    result = run_flow_with_surgery(
        mesh,
        domain,
        params,
        controls,
        max_surgeries=int(cfg.run.get("max_surgeries", 20)),
        rng_seed=cfg.seed,
    )
    summary = {
        "scenario": cfg.name,
        "domain": domain.describe(),
        "termination": result.termination,
        "end_time": result.end_time,
        "surgeries": len(result.surgery_events),
        "seed": cfg.seed,
    }
    if result.termination in ("extinct", "converged"):
        summary["report"] = longtime_report(result, domain, controls)
    if result.error:
        summary["error"] = result.error
    if outdir:
        os.makedirs(outdir, exist_ok=True)
        result.track.save(outdir)
        write_events(os.path.join(outdir, "events.json"), _assemble_events(result))
        write_diagnostics_csv(
            os.path.join(outdir, "diagnostics.csv"), result.diagnostics_rows
        )
        write_summary(os.path.join(outdir, "summary.json"), summary)
    return result, summary


def cmd_run(args):
    cfg = _load_config(args)
    result, summary = _execute_run(cfg, args.out)
    print(json.dumps(summary, indent=1, sort_keys=True))
    if result.termination == "aborted":
        return 3
    return 0


def cmd_compare(args):
    cfg = _load_config(args)
    domain = cfg.build_domain()
    mesh = cfg.build_initial_mesh(domain)
    report = {"scenario": cfg.name, "mode": args.mode}
    if args.mode == "levelset":
        from .oracles.hausdorff import slice_distances, spacetime_hausdorff
        from .oracles.levelset import level_set_flow
        from .runner import run_flow_with_surgery

        params = cfg.surgery_params()
        controls = cfg.flow_controls()
        result = run_flow_with_surgery(
            mesh, domain, params, controls, rng_seed=cfg.seed
        )
        t_end = min(result.end_time, controls.t_max)
        ls = level_set_flow(
            domain,
            mesh,
            t_end,
            float(cfg.resolution.get("grid_edge", 0.04)),
            frame_interval=controls.frame_interval,
        )
        report["spacetime_hausdorff"] = spacetime_hausdorff(
            result.track, ls, t_end=t_end
        )
        report["slice_distances"] = slice_distances(result.track, ls, t_end=t_end)
        report["surgeries"] = len(result.surgery_events)
        report["mesh_termination"] = result.termination
        report["levelset_extinct_time"] = ls.extinct_time
    elif args.mode == "axisym":
        from .oracles.axisym import pinch_time_richardson
        from .primitives import dumbbell_profile
        from .runner import run_flow_with_surgery

        if cfg.initial.get("kind") != "dumbbell":
            from .errors import SymmetryMismatch

            raise SymmetryMismatch(
                "axisym comparison requires a rotationally symmetric scenario"
            )
        params = cfg.surgery_params()
        controls = cfg.flow_controls()
        result = run_flow_with_surgery(
            mesh, domain, params, controls, rng_seed=cfg.seed
        )
        fn, x_tip = dumbbell_profile(
            float(cfg.initial.get("bell_radius", 0.5)),
            float(cfg.initial.get("neck_radius", 0.1)),
            float(cfg.initial.get("neck_half_width", 2.0)),
        )
        n0 = int(cfg.oracles.get("axisym_stations", 500))
        t1, t2, tex = pinch_time_richardson(fn, -x_tip, x_tip, n0, controls.t_max)
        report["axisym_pinch"] = {"coarse": t1, "fine": t2, "extrapolated": tex}
        if result.surgery_events:
            ts = result.surgery_events[0].time
            report["mesh_first_surgery"] = ts
            if tex:
                report["pinch_rel_diff"] = abs(ts - tex) / tex
    else:
        raise ConfigError(f"unknown compare mode {args.mode!r}")
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        write_summary(os.path.join(args.out, "compare.json"), report)
    print(json.dumps(report, indent=1, sort_keys=True, default=float))
    return 0


def cmd_classify(args):
    from .diagnostics import classify_canonical
    from .domain import make_domain
    from .track import SpacetimeTrack

    track = SpacetimeTrack.load(args.track)
    summary_path = os.path.join(args.track, "summary.json")
    domain = None
    if os.path.exists(summary_path):
        with open(summary_path) as fh:
            domain = make_domain(json.load(fh)["domain"])
    x, y, z, t = (float(v) for v in args.at.split(","))
    label, residual = classify_canonical(track, np.array([x, y, z]), t, domain=domain)
    out = {"label": label, "residual": residual, "at": [x, y, z, t]}
    print(json.dumps(out, indent=1, sort_keys=True))
    return 0


def build_parser():
    p = argparse.ArgumentParser(prog="surgflow", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    pr = sub.add_parser("run", help="run a scenario to termination")
    pr.add_argument("--scenario", help="built-in scenario name")
    pr.add_argument("--config", help="TOML scenario file")
    pr.add_argument("--out", help="output directory")
    pr.add_argument("--threads", type=int, default=1, help="worker pool size")
    pr.set_defaults(func=cmd_run)

    pc = sub.add_parser("compare", help="compare against a reference solver")
    pc.add_argument("--scenario", help="built-in scenario name")
    pc.add_argument("--config", help="TOML scenario file")
    pc.add_argument("--mode", choices=["levelset", "axisym"], required=True)
    pc.add_argument("--out", help="output directory")
    pc.add_argument("--threads", type=int, default=1)
    pc.set_defaults(func=cmd_compare)

    pk = sub.add_parser("classify", help="classify a track point")
    pk.add_argument("--track", required=True, help="run output directory")
    pk.add_argument("--at", required=True, help="x,y,z,t")
    pk.set_defaults(func=cmd_classify)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return 2
    except (NumericalAbort, SurgflowError) as err:
        print(f"numerical abort: {err}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
