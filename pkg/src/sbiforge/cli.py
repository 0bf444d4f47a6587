"""Command-line surface: generate, validate, replay, serve, curriculum-sim."""
from __future__ import annotations

import argparse
import json
import logging
import sys

from .curriculum import CurriculumController, CurriculumThresholds, assess
from .errors import SbiForgeError
from .pipeline import (
    CONFIG_SCHEMA,
    RunConfig,
    generate_dataset,
    load_manifest,
    replay,
    validate_manifest,
)
from .service import serve_http, serve_stdio


def _cmd_generate(args) -> int:
    config = RunConfig.from_file(args.config)
    if args.seed is not None:
        config.seed = args.seed
    if args.annotate:
        config.annotation_mode = args.annotate
    if args.workers is not None:
        config.workers = args.workers
    manifest = generate_dataset(config)
    print(manifest)
    return 0


def _cmd_validate(args) -> int:
    report = validate_manifest(args.manifest, recheck_keywords=not args.no_recheck)
    for v in report.violations:
        print(f"row {v.row}: [{v.kind}] {v.message}")
    print(f"{report.rows_checked} rows checked, {len(report.violations)} violations")
    return 0 if report.ok() else 1


def _cmd_replay(args) -> int:
    if args.row:
        row_ids = [args.row]
    else:
        _, rows = load_manifest(args.manifest)
        row_ids = [obj["id"] for _, obj in rows if obj.get("label") == "fake"]
    worst = 0
    for row_id in row_ids:
        verdict = replay(args.manifest, row_id)
        print(f"{row_id}: {verdict.verdict}" + (f" ({verdict.detail})" if verdict.detail else ""))
        if verdict.verdict == "mismatch":
            worst = 1
    return worst


def _cmd_serve(args) -> int:
    if args.stdio:
        return serve_stdio(key_mix=args.key_mix)
    serve_http(args.host, args.port, key_mix=args.key_mix)
    return 0


def _cmd_curriculum_sim(args) -> int:
    rewards = []
    with open(args.rewards) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            field = line.split(",")[-1]
            try:
                rewards.append(float(field))
            except ValueError:
                continue  # header line
    controller = CurriculumController(
        window=args.window,
        thresholds=CurriculumThresholds(high=args.high, low=args.low, stab_max=args.stab_max),
        cooldown=args.cooldown,
        invert=args.invert,
        audit_path=args.audit,
    )
    print("batch,mean,stability,level")
    for reward in rewards:
        controller.observe_batch(reward)
        a = assess(controller.history)
        print(f"{a.count},{a.mean:.6g},{a.stability:.6g},{controller.state.level}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sbiforge",
        description="Self-blended forgery dataset generation, validation, and reward scoring.",
    )
    parser.add_argument(
        "--print-config-schema",
        action="store_true",
        help="print the run-config JSON schema and exit",
    )
    sub = parser.add_subparsers(dest="command")

    g = sub.add_parser("generate", help="synthesize a dataset from a run config")
    g.add_argument("--config", required=True, help="run config JSON file")
    g.add_argument("--seed", type=int, default=None, help="override the config seed")
    g.add_argument("--annotate", choices=("endpoint", "template"), default=None)
    g.add_argument("--workers", type=int, default=None)
    g.set_defaults(func=_cmd_generate)

    v = sub.add_parser("validate", help="check a manifest and its files")
    v.add_argument("manifest")
    v.add_argument(
        "--no-recheck",
        action="store_true",
        help="skip recomputing difference measures (faster, weaker)",
    )
    v.set_defaults(func=_cmd_validate)

    r = sub.add_parser("replay", help="regenerate rows and compare bit-exactly")
    r.add_argument("manifest")
    r.add_argument("--row", default=None, help="a single row id (default: all fake rows)")
    r.set_defaults(func=_cmd_replay)

    s = sub.add_parser("serve", help="run the scoring service")
    s.add_argument("--port", type=int, default=8070)
    s.add_argument("--host", default="127.0.0.1")
    s.add_argument("--stdio", action="store_true", help="line-delimited JSON over stdin/stdout")
    s.add_argument("--key-mix", type=float, default=0.5)
    s.set_defaults(func=_cmd_serve)

    c = sub.add_parser("curriculum-sim", help="replay a reward CSV through the controller")
    c.add_argument("--rewards", required=True, help="CSV of per-batch mean rewards")
    c.add_argument("--window", type=int, default=20)
    c.add_argument("--high", type=float, default=3.2)
    c.add_argument("--low", type=float, default=2.0)
    c.add_argument("--stab-max", dest="stab_max", type=float, default=0.4)
    c.add_argument("--cooldown", type=int, default=5)
    c.add_argument("--invert", action="store_true")
    c.add_argument("--audit", default=None, help="append level transitions to this CSV")
    c.set_defaults(func=_cmd_curriculum_sim)
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.print_config_schema:
        print(json.dumps(CONFIG_SCHEMA, indent=2))
        return 0
    if not getattr(args, "command", None):
        parser.print_help()
        return 2
    try:
        return args.func(args)
    except SbiForgeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
