"""Command-line interface.

Verbs: ``score`` a plan against an arch, ``simulate`` a frame sequence,
``demo`` a bundled preset case, ``benchmark`` the synthetic suite, and
``serve`` the REST API.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys

from .benchmark import enumerate_suite, run_benchmark
from .config import load_config
from .orchestrator import FusionMode
from .presets import PRESET_KEYS, build_preset
from .schemas import (
    SchemaError,
    arch_state_from_dict,
    arch_state_to_dict,
    frames_to_dict,
    movement_plan_from_dict,
    movement_plan_to_dict,
    treatment_score_to_dict,
)
from .scoring import score_plan
from .staging import generate_frames

MODE_ALIASES = {
    "parallel": FusionMode.PARALLEL,
    "sequential": FusionMode.SEQUENTIAL,
    "agent1": FusionMode.AGENT1_ONLY,
    "agent2": FusionMode.AGENT2_ONLY,
}


def _read_json(path: str) -> dict:
    with open(path, encoding="utf-8") as f:
        return json.load(f)


def _emit(doc: dict, out: str | None) -> None:
    blob = json.dumps(doc, indent=2, sort_keys=True)
    if out:
        with open(out, "w", encoding="utf-8") as f:
            f.write(blob + "\n")
    else:
        print(blob)


def cmd_score(args) -> int:
    cfg = load_config(args.config)
    plan = movement_plan_from_dict(_read_json(args.plan))
    arch = arch_state_from_dict(_read_json(args.arch))
    score = score_plan(plan, arch, cfg=cfg.scoring)
    _emit(treatment_score_to_dict(score), args.out)
    return 0


def cmd_simulate(args) -> int:
    cfg = load_config(args.config)
    plan = movement_plan_from_dict(_read_json(args.plan))
    arch = arch_state_from_dict(_read_json(args.arch))
    frames, summary = generate_frames(arch, plan, cfg.staging)
    _emit(frames_to_dict(frames, summary.aligner_count, cfg.staging), args.out)
    return 0


def cmd_demo(args) -> int:
    cfg = load_config(args.config)
    preset = build_preset(args.preset)
    case = preset.case
    score = score_plan(case.target_plan, case.ground_truth, case.crowding, cfg.scoring)
    frames, summary = generate_frames(case.ground_truth, case.target_plan, cfg.staging)
    _emit(
        {
            "schema_version": 1,
            "preset": preset.key,
            "label": preset.label,
            "arch": arch_state_to_dict(case.ground_truth),
            "plan": movement_plan_to_dict(case.target_plan),
            "crowding": list(case.crowding.contact_overlaps),
            "score": treatment_score_to_dict(score),
            "frames": frames_to_dict(frames, summary.aligner_count, cfg.staging),
        },
        args.out,
    )
    return 0


def cmd_benchmark(args) -> int:
    cfg = load_config(args.config)
    try:
        modes = [MODE_ALIASES[m.strip()] for m in args.modes.split(",") if m.strip()]
    except KeyError as exc:
        print(f"unknown mode {exc}; choose from {sorted(MODE_ALIASES)}", file=sys.stderr)
        return 2
    suite = enumerate_suite(args.n, args.seed)
    report = run_benchmark(
        suite, modes, cfg.benchmark, cfg.scoring, master_seed=args.seed
    )
    doc = report.to_dict()
    _emit(doc, args.out)
    if args.csv:
        fields = [
            "index", "seed", "mode", "composite", "composite_raw", "v1_score",
            "grade", "n_critical", "n_warning", "feasible", "time_s",
        ]
        with open(args.csv, "w", newline="", encoding="utf-8") as f:
            writer = csv.DictWriter(f, fieldnames=fields)
            writer.writeheader()
            for row in doc["per_scenario"]:
                writer.writerow({k: row.get(k) for k in fields})
    for name, stats in doc["modes"].items():
        print(
            f"{name}: quality {stats['mean_quality']:.1f} +- {stats['sd_quality']:.1f}, "
            f"feasible {100 * stats['feasibility']:.0f}%, "
            f"time {stats['mean_time_s']:.3f}s, failures {stats['n_failures']}",
            file=sys.stderr,
        )
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    cfg = load_config(args.config)
    app = create_app(cfg, data_dir=args.data_dir)
    uvicorn.run(app, host=args.host or cfg.service.host, port=args.port or cfg.service.port)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="orthoplan", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("score", help="score a movement plan against an arch state")
    p.add_argument("plan", help="movement plan JSON file")
    p.add_argument("arch", help="arch state JSON file")
    p.add_argument("--config", default=None)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("simulate", help="generate the treatment frame sequence")
    p.add_argument("plan")
    p.add_argument("arch")
    p.add_argument("--config", default=None)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("demo", help="emit a bundled preset case with score and frames")
    p.add_argument("preset", choices=PRESET_KEYS)
    p.add_argument("--config", default=None)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_demo)

    p = sub.add_parser("benchmark", help="run the synthetic benchmark suite")
    p.add_argument("--n", type=int, default=200)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--modes", default="parallel,sequential,agent1,agent2")
    p.add_argument("--out", default=None)
    p.add_argument("--csv", default=None)
    p.add_argument("--config", default=None)
    p.set_defaults(func=cmd_benchmark)

    p = sub.add_parser("serve", help="run the REST service")
    p.add_argument("--port", type=int, default=None)
    p.add_argument("--host", default=None)
    p.add_argument("--config", default=None)
    p.add_argument("--data-dir", default=None)
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except SchemaError as exc:
        print(f"schema error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"file not found: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
