"""Command-line entry point: ``perspact {run,plan,validate,replay,report}``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import harness, report
from .agents import DIRECTORS, MATCHERS
from .pddl import emit_problem, reference_domain_text
from .planner import plan_optimal, plan_stats
from .scenarios import FAMILIES, Family, generate, reference_instance, validate

log = logging.getLogger("perspact")


def _families(names: list[str] | None) -> tuple[Family, ...]:
    return tuple(Family.parse(n) for n in names) if names else FAMILIES


def _config(args: argparse.Namespace) -> harness.RunConfig:
    base = harness.RunConfig.load(args.config) if args.config else harness.RunConfig()
    overrides = {
        "families": _families(args.family) if args.family else None,
        "policy": args.policy,
        "director": args.director,
        "trials": args.trials,
        "max_steps": args.max_steps,
        "seed": args.seed,
        "out": args.out,
        "parallel": args.parallel,
        "transport": args.transport,
        "transcript": args.transcript,
        "source": args.source,
    }
    data = {k: getattr(base, k) for k in harness.RunConfig.__dataclass_fields__}
    data.update({k: v for k, v in overrides.items() if v is not None})
    if args.timing:
        data["timing"] = True
    return harness.RunConfig(**data)


def planner_table(families=FAMILIES) -> dict:
    return {f: plan_stats(plan_optimal(reference_instance(f))) for f in families}


def write_outputs(records: list, out: Path, timing: bool = False, planner: dict | None = None) -> str:
    summary = report.summarize(records)
    text = report.emit_report(summary, planner)
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.md").write_text(text, encoding="utf-8")
    (out / "summary.tsv").write_text(report.emit_tsv(summary), encoding="utf-8")
    report.render_figures(summary, out / "figures")
    return text


def cmd_run(args: argparse.Namespace) -> int:
    config = _config(args)
    records = harness.run_suite(config)
    out = Path(config.out or "runs/latest")
    harness.write_records(records, out / "trials.jsonl", timing=config.timing)
    planner = planner_table(config.families) if config.source == "reference" else None
    print(write_outputs(records, out, config.timing, planner))
    failed = [r for r in records if r.failure]
    for r in failed:
        print(f"trial {r.trial} failed: {r.failure}", file=sys.stderr)
    print(f"wrote {len(records)} trials to {out}", file=sys.stderr)
    return 0


def cmd_plan(args: argparse.Namespace) -> int:
    families = _families(args.family)
    if args.emit_pddl:
        root = Path(args.emit_pddl)
        root.mkdir(parents=True, exist_ok=True)
        (root / "domain.pddl").write_text(reference_domain_text(), encoding="utf-8")
    stats = {}
    print("family\tsteps\tasks\tmoves\tplan")
    for f in families:
        inst = reference_instance(f) if args.seed is None else generate(f, args.seed)
        plan = plan_optimal(inst, max_depth=args.max_steps or 15)
        stats[f] = plan_stats(plan)
        s = stats[f]
        print(f"{f.short}\t{s.steps}\t{s.asks}\t{s.moves}\t{' '.join(map(str, plan.steps))}")
        if args.emit_pddl:
            (root / f"{f.value.lower()}.pddl").write_text(emit_problem(inst), encoding="utf-8")
    print()
    print(report.emit_report(None, stats))
    return 0


def cmd_validate(args: argparse.Namespace) -> int:
    bad = 0
    for f in _families(args.family):
        instances = [reference_instance(f)] + [generate(f, args.seed + i) for i in range(args.seeds)]
        for inst in instances:
            problems = validate(inst)
            bad += bool(problems)
            if problems:
                print(f"{f.short}\tseed={inst.seed}\tFAIL\t{'; '.join(problems)}")
        print(f"{f.short}\t{len(instances)} instances checked")
    print("all valid" if not bad else f"{bad} invalid instances")
    return 1 if bad else 0


def cmd_replay(args: argparse.Namespace) -> int:
    records = harness.read_records(args.log)
    if args.trial:
        records = [r for r in records if r.trial == args.trial]
        if not records:
            print(f"no trial {args.trial!r} in {args.log}", file=sys.stderr)
            return 1
    for r in records:
        status = "success" if r.success else f"failure ({r.failure or 'step cap'})"
        print(f"== {r.trial} [{r.family.value}, seed {r.seed}, {r.policy} / {r.director}] {status}")
        for e in r.entries:
            why = f" ({e.reason})" if e.reason else ""
            print(f"  {e.step:>2}  {e.action:<32} {e.event}{why}")
            if e.answer:
                print(f"      director: {e.answer}")
        print(f"  steps={r.steps} asks={r.asks} moves={r.moves} opens={r.opens} takes={r.takes} rejected={r.rejected}")
    return 0


def cmd_report(args: argparse.Namespace) -> int:
    records = harness.read_records(args.records)
    if not records:
        print(f"{args.records}: no trial records", file=sys.stderr)
        return 1
    out = Path(args.out) if args.out else Path(args.records).parent
    planner = planner_table() if args.with_plan else None
    text = write_outputs(records, out, planner=planner)
    print(text)
    print("--- summary.tsv ---")
    print((out / "summary.tsv").read_text(encoding="utf-8"), end="")
    print(f"figures in {out / 'figures'}", file=sys.stderr)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="perspact", description="Perspective-taking Director task benchmark")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run the trial suite and write logs plus report")
    run.add_argument("--config", help="JSON run configuration")
    run.add_argument("--family", action="append", help="restrict to a family (repeatable)")
    run.add_argument("--policy", choices=MATCHERS)
    run.add_argument("--director", choices=DIRECTORS)
    run.add_argument("--trials", type=int)
    run.add_argument("--max-steps", type=int)
    run.add_argument("--seed", type=int)
    run.add_argument("--out")
    run.add_argument("--parallel", type=int)
    run.add_argument("--transport", choices=("live", "record", "playback"))
    run.add_argument("--transcript", help="transcript JSONL for record/playback")
    run.add_argument("--source", choices=("reference", "generated"))
    run.add_argument("--timing", action="store_true", help="include wall time in trial logs")
    run.set_defaults(func=cmd_run)

    plan = sub.add_parser("plan", help="print optimal plan statistics per family")
    plan.add_argument("--family", action="append")
    plan.add_argument("--seed", type=int, help="plan a generated instance instead of the reference")
    plan.add_argument("--max-steps", type=int)
    plan.add_argument("--emit-pddl", metavar="DIR", help="also write domain and problem files")
    plan.set_defaults(func=cmd_plan)

    val = sub.add_parser("validate", help="check scenario family constraints")
    val.add_argument("--family", action="append")
    val.add_argument("--seed", type=int, default=0)
    val.add_argument("--seeds", type=int, default=100, help="generated instances per family")
    val.set_defaults(func=cmd_validate)

    rep = sub.add_parser("replay", help="pretty-print recorded trials")
    rep.add_argument("log")
    rep.add_argument("--trial")
    rep.set_defaults(func=cmd_replay)

    rpt = sub.add_parser("report", help="summarize a trial log into tables and figures")
    rpt.add_argument("records")
    rpt.add_argument("--out")
    rpt.add_argument("--with-plan", action="store_true", help="append the optimal plan table")
    rpt.set_defaults(func=cmd_report)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"perspact: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
