"""Command-line entry point: ``skilltransfer <command> ...``.

Exit status is 0 on success, 1 on a domain error (bad input file, failed
run, planner or perception failure) and 2 on a usage error.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .graph import GraphError, PropertyGraph, SkillLibrary, export_triples
from .planner import PlannerError, build_occupancy_grid, plan_path
from .sim import SimConfig, SimError, load_scenario, run_scenario, scenario_plan, trajectory_svg
from .tactile import PerceptionError, SHAPES, extract_contours, synth_tactile_image
from .tactile.bench import run_benchmark
from .tactile.io import contours_to_json, read_image, svg_overlay, write_image
from .transfer import HttpProvider, MockProvider, TransferError, reference_plan, transfer_task

DOMAIN_ERRORS = (GraphError, PlannerError, PerceptionError, SimError, TransferError, OSError, ValueError, KeyError)


class DomainError(Exception):
    pass


# --- helpers ---------------------------------------------------------------------

def _existing(path: str | None, what: str) -> Path | None:
    if path is None:
        return None
    p = Path(path)
    if not p.is_file():
        raise DomainError(f"{what} not found: {path}")
    return p


def _read_json(path: Path):
    try:
        return json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise DomainError(f"{path}: not valid JSON ({exc})") from None


def load_config(args) -> SimConfig:
    cfg = SimConfig()
    p = _existing(getattr(args, "config", None), "config file")
    if p is not None:
        doc = _read_json(p)
        if not isinstance(doc, dict):
            raise DomainError(f"{p}: config must be a JSON object")
        cfg = cfg.merged(doc)
    return cfg


def _emit(text: str, out: str | None):
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _graphs_in(doc) -> dict[str, PropertyGraph]:
    if isinstance(doc, dict) and "graphs" in doc:
        return {k: PropertyGraph.from_dict(v) for k, v in doc["graphs"].items()}
    g = PropertyGraph.from_dict(doc)
    return {g.kind: g}


def _provider(args):
    if args.provider == "http":
        return HttpProvider(model=args.model)
    if args.mock_script:
        return MockProvider.from_file(_existing(args.mock_script, "mock script"))
    return None


def _point(text: str) -> np.ndarray:
    try:
        v = [float(t) for t in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected x,y,z, got {text!r}") from None
    if len(v) != 3:
        raise argparse.ArgumentTypeError(f"expected x,y,z, got {text!r}")
    return np.array(v)


# --- commands ----------------------------------------------------------------------

def cmd_graph(args) -> int:
    p = _existing(args.path, "graph file")
    text = p.read_text(encoding="utf-8")
    graphs = _graphs_in(json.loads(text)) if text.strip() else {"scene": PropertyGraph("scene")}
    if args.graph_command == "validate":
        lines = []
        for kind, g in graphs.items():
            g.validate()
            lines.append(f"ok {kind}: {len(g.nodes)} nodes, {len(g.edges)} edges")
        _emit("\n".join(lines) + "\n", args.out)
        return 0
    kinds = [args.kind] if args.kind else list(graphs)
    out = []
    for kind in kinds:
        if kind not in graphs:
            raise DomainError(f"{p} has no {kind} graph")
        out.extend(export_triples(graphs[kind]))
    _emit("".join(t + "\n" for t in out), args.out)
    return 0


def cmd_plan(args) -> int:
    path = _existing(args.scenario, "scenario")
    overrides = _read_json(_existing(args.config, "config file")) if args.config else None
    scn = load_scenario(path, overrides, args.seed)
    cfg = scn.config
    pc = cfg.planner
    if args.safety_distance is not None:
        pc = replace(pc, safety_distance=args.safety_distance)
    if args.hard_check:
        pc = replace(pc, hard_check=True)
    start = args.start if args.start is not None else scn.world().gripper_pose.position
    exclude = {scn.gripper} | set(args.exclude or [])
    grid = build_occupancy_grid(scn.library.scene, cfg.bounds, pc.resolution, exclude)
    if args.grid_dump:
        grid.dump(args.grid_dump)
    path = plan_path(grid, start, args.goal, pc)
    _emit(json.dumps(path.to_list(), indent=2) + "\n", args.out)
    return 0


def cmd_perceive(args) -> int:
    cfg = load_config(args).perception
    if args.method:
        cfg = replace(cfg, method=args.method)
    if args.synth:
        img, _ = synth_tactile_image(args.synth, rng=np.random.default_rng(args.seed))
        if args.save_image:
            write_image(args.save_image, img)
    else:
        if not args.image:
            raise DomainError("give an IMAGE path or --synth SHAPE")
        img = read_image(_existing(args.image, "image"))
    C, H = extract_contours(img, cfg)
    if args.svg:
        svg_overlay(img, C, H, args.svg)
    _emit(contours_to_json(C, H), args.out)
    return 0


def cmd_transfer(args) -> int:
    doc = _read_json(_existing(args.library, "library"))
    graphs = _graphs_in(doc)
    missing = {"task", "scene", "state"} - set(graphs)
    if missing:
        raise DomainError(f"library lacks {sorted(missing)} graph(s)")
    lib = SkillLibrary(graphs["task"], graphs["scene"], graphs["state"])
    tr = doc.get("scenario", {}).get("transfer", {}) if isinstance(doc, dict) else {}
    description = args.description or tr.get("task_description")
    if not description:
        raise DomainError("no task description given")
    notes = args.note if args.note else tr.get("notes", [])
    provider = _provider(args)
    if provider is None:
        script = tr.get("mock_script")
        if not script:
            raise DomainError("mock provider needs --mock-script")
        provider = MockProvider.from_file(_existing(str(Path(args.library).parent / script), "mock script"))
    resp = transfer_task(provider, lib, reference_plan(lib.task), description, notes)
    _emit(json.dumps(resp.to_dict(), indent=2) + "\n", args.out)
    return 0


def cmd_sim(args) -> int:
    path = _existing(args.scenario, "scenario")
    overrides = _read_json(_existing(args.config, "config file")) if args.config else None
    scn = load_scenario(path, overrides, args.seed)
    plan = scenario_plan(scn, _provider(args))
    report = run_scenario(scn.world(), plan, scn.library.state, scn.config)
    if args.svg:
        trajectory_svg(scn.library.scene, report, scn.config.bounds, args.svg)
    _emit(report.to_json(), args.out)
    if not report.success:
        print(f"error: run failed at step {report.steps[-1].index}: {report.steps[-1].reason}", file=sys.stderr)
        return 1
    return 0


def cmd_bench(args) -> int:
    if args.corpus != "synth":
        raise DomainError(f"unknown corpus {args.corpus!r}")
    cfg = load_config(args).perception
    res = run_benchmark(seeds=args.seeds, seed=args.seed, config=cfg)
    _emit(res.to_csv(), args.out)
    return 0


# --- parser --------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="JSON file overriding planner, perception and sim defaults")
    common.add_argument("--seed", type=int, default=0, metavar="N", help="random seed (default 0)")
    common.add_argument("--out", metavar="PATH", help="write the result here instead of standard output")
    prov = argparse.ArgumentParser(add_help=False)
    prov.add_argument("--provider", choices=("mock", "http"), default="mock",
                      help="chat provider; http reads SKILL_LLM_BASE_URL and SKILL_LLM_API_KEY")
    prov.add_argument("--mock-script", metavar="PATH", help="JSON object mapping call index to canned reply")
    prov.add_argument("--model", default="gpt-4o", help="model name sent to the http provider")

    ap = argparse.ArgumentParser(prog="skilltransfer", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True, metavar="COMMAND")

    g = sub.add_parser("graph", help="inspect graph files")
    gs = g.add_subparsers(dest="graph_command", required=True, metavar="ACTION")
    v = gs.add_parser("validate", parents=[common], help="check a graph file or scenario document")
    v.add_argument("path", help="graph JSON or scenario document")
    t = gs.add_parser("triples", parents=[common], help="print a-rel-b triples, one per line")
    t.add_argument("path", help="graph JSON or scenario document")
    t.add_argument("--kind", choices=("task", "scene", "state"), help="only this graph of a scenario document")
    g.set_defaults(func=cmd_graph)

    p = sub.add_parser("plan", parents=[common], help="plan a collision-aware gripper path")
    p.add_argument("--scenario", required=True, metavar="PATH", help="scenario document supplying the scene")
    p.add_argument("--start", type=_point, metavar="X,Y,Z", help="start point (default: gripper position)")
    p.add_argument("--goal", type=_point, required=True, metavar="X,Y,Z", help="goal point in metres")
    p.add_argument("--exclude", nargs="*", metavar="NODE", help="scene nodes left out of the occupancy grid")
    p.add_argument("--safety-distance", type=float, metavar="M", help="override the safety distance")
    p.add_argument("--hard-check", action="store_true", help="fail if the path has non-zero collision loss")
    p.add_argument("--grid-dump", metavar="PATH", help="write the binary occupancy grid here")
    p.set_defaults(func=cmd_plan)

    pc = sub.add_parser("perceive", parents=[common], help="extract contours and lines from a tactile image")
    pc.add_argument("image", nargs="?", help="8-bit PGM or PNG frame")
    pc.add_argument("--synth", choices=SHAPES, help="render a synthetic frame of this shape instead")
    pc.add_argument("--save-image", metavar="PATH", help="with --synth, also save the rendered frame")
    pc.add_argument("--method", choices=("adaptive", "fixed"), help="threshold rule (default adaptive)")
    pc.add_argument("--svg", metavar="PATH", help="write an SVG overlay of points and lines")
    pc.set_defaults(func=cmd_perceive)

    tr = sub.add_parser("transfer", parents=[common, prov], help="transfer a reference plan to a new task")
    tr.add_argument("--library", required=True, metavar="PATH", help="scenario document holding the skill library")
    tr.add_argument("--description", help="new task description (default: from the document)")
    tr.add_argument("--note", action="append", metavar="TEXT", help="extra note for the final stage; repeatable")
    tr.set_defaults(func=cmd_transfer)

    s = sub.add_parser("sim", help="kinematic simulation")
    ss = s.add_subparsers(dest="sim_command", required=True, metavar="ACTION")
    r = ss.add_parser("run", parents=[common, prov], help="execute a scenario and print the run report")
    r.add_argument("--scenario", required=True, metavar="PATH", help="scenario document")
    r.add_argument("--svg", metavar="PATH", help="write a top-down SVG of executed trajectories")
    s.set_defaults(func=cmd_sim)

    b = sub.add_parser("bench", help="benchmarks")
    bs = b.add_subparsers(dest="bench_command", required=True, metavar="ACTION")
    bt = bs.add_parser("tactile", parents=[common], help="adaptive vs fixed thresholds, CSV output")
    bt.add_argument("--corpus", default="synth", choices=("synth",), help="image corpus (only synth)")
    bt.add_argument("--seeds", type=int, default=20, metavar="N", help="frames per shape and condition")
    b.set_defaults(func=cmd_bench)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.func(args)
    except (DomainError, *DOMAIN_ERRORS) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"error: {msg}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
