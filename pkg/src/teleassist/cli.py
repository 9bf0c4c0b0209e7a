"""Batch and operations entry point.

Subcommands:
    run-batch          headless episodes across seeds/methods -> metrics CSV
    replay             re-execute a telemetry log and verify state hashes
    validate-fixtures  schema-check adapter fixture files
    serve              launch the live session service
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import assets
from .control import METHODS
from .episode import EpisodeConfig, run_episode
from .schemas import SchemaError, validate_payload
from .world import ScenarioSpec, Task, UserConfig

CSV_FIELDS = ("task", "method", "seed", "success", "time_s", "trajectory_m",
              "inputs", "ticks", "reason")


def _episode_job(args):
    scenario_path, task_doc, method, seed, sigma, fixture_dir, tick_budget = args
    task = Task(**task_doc)
    try:
        spec = ScenarioSpec.from_path(scenario_path)
        config = EpisodeConfig(method=method, fixture_dir=fixture_dir,
                               tick_budget=tick_budget)
        report = run_episode(spec, task, config,
                             UserConfig(sigma=sigma), seed=seed)
        return report.to_row(), report.records, None
    except Exception as exc:  # crash is recorded, batch continues
        row = {"task": task.kind, "method": method, "seed": seed,
               "success": False, "time_s": 0.0, "trajectory_m": 0.0,
               "inputs": 0, "ticks": 0, "reason": f"crash: {exc}"}
        return row, [], str(exc)


def _format_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return f"{value:.6f}"
    return str(value)


def cmd_run_batch(args) -> int:
    scenario_path = assets.resolve_scenario(args.scenario)
    spec = ScenarioSpec.from_path(scenario_path)
    if not spec.tasks:
        print("scenario declares no tasks", file=sys.stderr)
        return 2
    task_kinds = args.tasks.split(",") if args.tasks else [t.kind for t in spec.tasks]
    tasks = []
    for kind in task_kinds:
        matches = [t for t in spec.tasks if t.kind == kind]
        if not matches:
            print(f"scenario has no task of kind {kind!r}", file=sys.stderr)
            return 2
        tasks.append(matches[0])
    methods = args.methods.split(",")
    for m in methods:
        if m not in METHODS:
            print(f"unknown method {m!r}; choose from {METHODS}", file=sys.stderr)
            return 2
    seeds = [int(s) for s in args.seeds.split(",")]

    jobs = []
    for task in tasks:
        for method in methods:
            for seed in seeds:
                jobs.append((str(scenario_path),
                             {"kind": task.kind, "tool": task.tool, "target": task.target},
                             method, seed, args.sigma, args.fixture_dir,
                             args.tick_budget))

    rows = []
    crashes = []
    telemetry_dir = Path(args.telemetry_dir) if args.telemetry_dir else None
    if args.workers > 1:
        with ProcessPoolExecutor(max_workers=args.workers) as pool:
            results = list(pool.map(_episode_job, jobs))
    else:
        results = [_episode_job(job) for job in jobs]
    for row, records, crash in results:
        rows.append(row)
        if crash is not None:
            crashes.append(f"{row['task']}/{row['method']}/seed {row['seed']}: {crash}")
        if telemetry_dir is not None and records:
            name = f"{row['task']}_{row['method']}_{row['seed']}.jsonl"
            from .telemetry import write_jsonl
            write_jsonl(telemetry_dir / name, records)

    # Canonical ordering plus per-(task, method) mean rows.
    rows.sort(key=lambda r: (r["task"], r["method"], r["seed"]))
    out_rows = []
    for key in sorted({(r["task"], r["method"]) for r in rows}):
        group = [r for r in rows if (r["task"], r["method"]) == key]
        out_rows.extend(group)
        n = len(group)
        out_rows.append({
            "task": key[0], "method": key[1], "seed": "mean",
            "success": sum(1 for r in group if r["success"]) / n,
            "time_s": sum(r["time_s"] for r in group) / n,
            "trajectory_m": sum(r["trajectory_m"] for r in group) / n,
            "inputs": sum(r["inputs"] for r in group) / n,
            "ticks": sum(r["ticks"] for r in group) / n,
            "reason": "",
        })

    out = Path(args.out) if args.out else None
    lines = [",".join(CSV_FIELDS)]
    for row in out_rows:
        lines.append(",".join(_format_value(row[f]) for f in CSV_FIELDS))
    text = "\n".join(lines) + "\n"
    if out is None:
        sys.stdout.write(text)
    else:
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(text)
        print(f"wrote {len(out_rows)} rows to {out}")
    if crashes:
        for line in crashes:
            print(f"episode crashed: {line}", file=sys.stderr)
        return 1
    return 0


def cmd_replay(args) -> int:
    from .episode import replay_path

    report = replay_path(args.telemetry)
    if args.belief_csv:
        rows = report.belief_csv_rows()
        fields = sorted({k for row in rows for k in row}, key=str)
        with open(args.belief_csv, "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=fields)
            writer.writeheader()
            writer.writerows(rows)
    if report.match:
        print(f"replay OK: {report.ticks_checked} ticks, all state hashes match")
        return 0
    print(f"replay DIVERGED at tick {report.first_divergence} "
          f"({report.ticks_checked} ticks checked)", file=sys.stderr)
    return 1


def cmd_validate_fixtures(args) -> int:
    failures = 0
    for path_str in args.paths:
        path = Path(path_str)
        files = sorted(path.glob("*.json")) if path.is_dir() else [path]
        for file in files:
            kind = {"triplets.json": "triplets",
                    "constraints.json": "constraint_fixture",
                    "grasps.json": "grasp_fixture"}.get(file.name)
            if kind is None:
                print(f"SKIP {file}: not an adapter fixture name")
                continue
            try:
                doc = json.loads(file.read_text())
                validate_payload(kind, doc)
                print(f"OK   {file}")
            except (json.JSONDecodeError, SchemaError) as exc:
                failures += 1
                print(f"FAIL {file}: {exc}", file=sys.stderr)
                continue
            if kind == "triplets":
                # cross-references are only resolvable against a scene, so an
                # unknown name is a warning, not a failure
                known = {n.casefold() for n in doc["objects"]}
                for t in doc["triplets"]:
                    for ref in (t["a"], t["b"]):
                        if ref.casefold() not in known:
                            print(f"WARN {file}: triplet references {ref!r}, "
                                  f"not in the fixture's object list")
    return 1 if failures else 0


def cmd_serve(args) -> int:
    from .service import ServerConfig, serve

    config = ServerConfig(scenario=args.scenario, method=args.method,
                          adapter_mode=args.adapter_mode,
                          fixture_dir=args.fixture_dir,
                          telemetry_dir=args.telemetry_dir,
                          lockstep=args.lockstep)
    serve(config, host=args.host, port=args.port)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="teleassist")
    sub = parser.add_subparsers(dest="command", required=True)

    batch = sub.add_parser("run-batch", help="run headless episodes, emit metrics CSV")
    batch.add_argument("--scenario", "--config", dest="scenario",
                       default="builtin:tabletop_six",
                       help="scenario path or builtin:<name>")
    batch.add_argument("--tasks", default="", help="comma-separated task kinds (default: all)")
    batch.add_argument("--methods", default="assisted",
                       help=f"comma-separated methods from {METHODS}")
    batch.add_argument("--seeds", "--seed", dest="seeds", default="0",
                       help="comma-separated seeds")
    batch.add_argument("--sigma", type=float, default=0.002,
                       help="scripted-user jitter std dev (m)")
    batch.add_argument("--out", default="", help="CSV output path (default: stdout)")
    batch.add_argument("--telemetry-dir", default="",
                       help="write per-episode telemetry JSONL here")
    batch.add_argument("--fixture-dir", default=None)
    batch.add_argument("--adapter-mode", default="fixture", choices=["fixture"])
    batch.add_argument("--tick-budget", type=int, default=3000)
    batch.add_argument("--workers", type=int, default=1)
    batch.set_defaults(func=cmd_run_batch)

    replay = sub.add_parser("replay", help="verify a telemetry log by re-execution")
    replay.add_argument("telemetry", help="telemetry JSONL path")
    replay.add_argument("--belief-csv", default="",
                        help="also write the per-goal belief series as CSV")
    replay.set_defaults(func=cmd_replay)

    validate = sub.add_parser("validate-fixtures", help="schema-check fixture files")
    validate.add_argument("paths", nargs="+")
    validate.set_defaults(func=cmd_validate_fixtures)

    serve_p = sub.add_parser("serve", help="launch the live session service")
    serve_p.add_argument("--scenario", "--config", dest="scenario",
                         default="builtin:tabletop_six")
    serve_p.add_argument("--method", default="assisted", choices=METHODS)
    serve_p.add_argument("--adapter-mode", default="fixture", choices=["fixture"])
    serve_p.add_argument("--fixture-dir", default=None)
    serve_p.add_argument("--telemetry-dir", default=None)
    serve_p.add_argument("--lockstep", action="store_true")
    serve_p.add_argument("--host", default="127.0.0.1")
    serve_p.add_argument("--port", type=int, default=8765)
    serve_p.set_defaults(func=cmd_serve)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
