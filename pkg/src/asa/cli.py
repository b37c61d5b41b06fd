"""Command-line surface: run one mission, batch trials, score agents, and
collect artifacts.

Exit codes: 0 mission complete, 1 mission failed, 2 usage/config error.
"""

from __future__ import annotations

import argparse
import json
import os
import shutil
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import evaluate
from .config import ConfigError, HarnessConfig, load_config
from .loop import run_main_sub, run_mission
from .mission import TrialRecord, load_research_plan
from .remote import RemoteTarget, load_remote_target
from .sandbox import Sandbox

IMAGE_SUFFIXES = {".svg", ".png", ".jpg", ".jpeg", ".pdf"}
DATA_SUFFIXES = {".csv", ".json", ".dat", ".txt"}
REPORT_SUFFIXES = {".md", ".docx", ".rst"}


def _load_remote(config: HarnessConfig) -> RemoteTarget | None:
    if config.remote_target_file is None:
        return None
    return load_remote_target(
        config.remote_target_file, password=os.environ.get("ASA_REMOTE_PASSWORD")
    )


def _criteria(config: HarnessConfig):
    if config.criteria_file is not None:
        return evaluate.load_criteria(config.criteria_file)
    return evaluate.DEFAULT_CRITERIA


def _run_one(config: HarnessConfig, rp_path: str, trial_index: int,
             base_dir: Path, main_sub: bool = False):
    rp = load_research_plan(
        rp_path,
        trial_index,
        limits=config.limits,
        payload_language_tag=config.payload_tag,
        base_dir=base_dir,
    )
    sandbox = Sandbox(
        rp.workspace,
        interpreter_command=config.interpreter_command,
        timeout=config.limits.exec_timeout,
        trial_index=trial_index,
    )
    if main_sub:
        report, _subs = run_main_sub(
            rp,
            provider_factory=config.make_provider,
            sandbox_factory=lambda ws, ti: Sandbox(
                ws,
                interpreter_command=config.interpreter_command,
                timeout=config.limits.exec_timeout,
                trial_index=ti,
            ),
        )
        return rp, report
    report = run_mission(rp, config.make_provider(), sandbox,
                         remote=_load_remote(config))
    return rp, report


def cmd_run(args) -> int:
    try:
        config = load_config(args.config)
        base = Path.cwd()
        rp, report = _run_one(config, args.s, args.n, base, main_sub=args.main_sub)
    except (ConfigError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(report.final_line())
    return 0 if report.status.state == "complete" else 1


def cmd_batch(args) -> int:
    try:
        config = load_config(args.config)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if not Path(args.s).is_file():
        print(f"error: no such plan file {args.s}", file=sys.stderr)
        return 2
    base = Path.cwd()
    criteria = _criteria(config)

    def one_trial(index: int) -> TrialRecord:
        try:
            rp, report = _run_one(config, args.s, index, base)
            met = evaluate.check_all(criteria, rp.workspace)
            return TrialRecord(config.agent_id, rp.id, index, met, rp.workspace)
        except Exception as exc:
            # a broken trial never takes the batch down
            print(f"trial {index} failed: {exc}", file=sys.stderr)
            return TrialRecord(
                config.agent_id, Path(args.s).stem, index,
                tuple(False for _ in criteria), base / f"trial_{index}",
            )

    with ThreadPoolExecutor(max_workers=args.parallelism) as pool:
        records = list(pool.map(one_trial, range(args.trials)))

    counts = np.zeros(len(criteria), dtype=int)
    for rec in records:
        counts += np.array(rec.criteria_met, dtype=int)
    matrix = evaluate.FulfillmentMatrix(
        counts.reshape(1, -1),
        (config.agent_id,),
        tuple(c.id for c in criteria),
    )
    evaluate.write_fulfillment_csv(matrix, base / "fulfillment.csv")
    summary = {
        "agent": config.agent_id,
        "rp": Path(args.s).stem,
        "trials": args.trials,
        "per_trial": [
            {
                "trial": rec.trial_index,
                "criteria_met": list(rec.criteria_met),
                "workspace": str(rec.artifacts_dir),
            }
            for rec in records
        ],
    }
    (base / "batch_summary.json").write_text(
        json.dumps(summary, indent=2) + "\n", encoding="utf-8"
    )
    met_total = int(counts.sum())
    print(f"batch done: {args.trials} trials, {met_total} criteria attainments")
    return 0


def cmd_eval(args) -> int:
    try:
        matrix = evaluate.read_fulfillment_csv(args.csvs)
        bundle = evaluate.score_matrix(matrix)
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (evaluate.TooFewAgents, evaluate.DimensionMismatch) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    out = Path(args.out)
    evaluate.write_scores(bundle, out)
    print(evaluate.format_score_table(bundle))
    return 0


def cmd_collect(args) -> int:
    results = Path(args.out)
    manifest = {"trials": {}, "totals": {"programs": 0, "images": 0,
                                         "reports": 0, "data": 0}}
    for trial_dir in args.trial_dirs:
        trial = Path(trial_dir)
        if not trial.is_dir():
            print(f"skipping {trial}: not a directory", file=sys.stderr)
            continue
        dest = results / trial.name
        counts = {"programs": 0, "images": 0, "reports": 0, "data": 0}
        for path in sorted(trial.rglob("*")):
            if not path.is_file():
                continue
            name = path.name
            if name.startswith("prog_"):
                counts["programs"] += 1
                continue
            if path.suffix in IMAGE_SUFFIXES:
                bucket = "plots"
                counts["images"] += 1
            elif path.suffix in REPORT_SUFFIXES:
                bucket = "reports"
                counts["reports"] += 1
            elif path.suffix in DATA_SUFFIXES:
                bucket = "data"
                counts["data"] += 1
            else:
                continue
            target = dest / bucket / name
            try:
                target.parent.mkdir(parents=True, exist_ok=True)
                shutil.copyfile(path, target)
            except OSError as exc:
                print(f"skipping {path}: {exc}", file=sys.stderr)
                continue
        dest.mkdir(parents=True, exist_ok=True)
        manifest["trials"][trial.name] = counts
        for key in manifest["totals"]:
            manifest["totals"][key] += counts[key]
    results.mkdir(parents=True, exist_ok=True)
    (results / "index.json").write_text(
        json.dumps(manifest, indent=2) + "\n", encoding="utf-8"
    )
    totals = manifest["totals"]
    print(
        f"collected {totals['programs']} programs, {totals['images']} images, "
        f"{totals['reports']} reports"
    )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="asa", description="autonomous simulation agent harness"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run one mission")
    run.add_argument("-s", required=True, metavar="RP_FILE",
                     help="research plan text file")
    run.add_argument("-n", type=int, default=0, metavar="INDEX",
                     help="trial index (workspace trial_<INDEX>)")
    run.add_argument("--config", default=os.environ.get("ASA_CONFIG"),
                     help="key=value config file")
    run.add_argument("--main-sub", action="store_true",
                     help="two-tier Main/Subordinate coordination")
    run.set_defaults(func=cmd_run)

    batch = sub.add_parser("batch", help="run repeated trials of one plan")
    batch.add_argument("-s", required=True, metavar="RP_FILE")
    batch.add_argument("--trials", type=int, default=20)
    batch.add_argument("--parallelism", type=int, default=1)
    batch.add_argument("--config", default=os.environ.get("ASA_CONFIG"))
    batch.set_defaults(func=cmd_batch)

    ev = sub.add_parser("eval", help="score agents from fulfillment CSVs")
    ev.add_argument("csvs", nargs="+", metavar="CSV")
    ev.add_argument("--out", default="scores.csv")
    ev.set_defaults(func=cmd_eval)

    collect = sub.add_parser("collect", help="organize trial artifacts")
    collect.add_argument("trial_dirs", nargs="+", metavar="TRIAL_DIR")
    collect.add_argument("--out", default="results")
    collect.set_defaults(func=cmd_collect)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "batch" and args.trials < 1:
        print("error: --trials must be >= 1", file=sys.stderr)
        return 2
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
