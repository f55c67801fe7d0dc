"""Command-line front end for batch experiments.

    tagperm scenario supply-chain --group desk --seed 3 --adversary replay
    tagperm properties lemma3 --iterations 200 --transcript out.jsonl
    tagperm world save snap.bin --scenario hospital
    tagperm world load snap.bin

Exit status is 0 when every assertion passed, 1 when one failed and 2 on
usage or input errors.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import IO, Optional, Sequence

from .crypto.group import PROFILES
from .properties import SUITES, run_suite
from .scenarios import SCENARIOS, run_scenario
from .snapshot import SnapshotError
from .tag import AccessEntry, Marker
from .world import World

EXIT_OK, EXIT_FAILED, EXIT_USAGE = 0, 1, 2
PROPERTY_SUITES = ("lemma1", "lemma2", "lemma3", "lemma4", "crypto", "decoy", "efficiency")


def _seed(text: str) -> int:
    try:
        v = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must fit in an unsigned 64-bit integer")
    return v


def _positive(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError("must be at least 1")
    return v


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=_seed, default=0, help="random seed (u64, default 0)")
    common.add_argument("--group", choices=sorted(PROFILES), default="toy", help="group profile (default toy)")
    common.add_argument("--transcript", type=Path, help="write a JSON-lines report to this path")

    p = argparse.ArgumentParser(prog="tagperm", description=__doc__.split("\n\n")[0])
    sub = p.add_subparsers(dest="command", required=True)

    sc = sub.add_parser("scenario", parents=[common], help="run a scripted use case end to end")
    sc.add_argument("name", choices=sorted(SCENARIOS))
    sc.add_argument("--adversary", choices=("none", "replay", "tamper"), default="none",
                    help="after the story, replay or tamper recorded traffic against every tag")

    pr = sub.add_parser("properties", parents=[common], help="run a property suite")
    pr.add_argument("suite", choices=PROPERTY_SUITES)
    pr.add_argument("--iterations", type=_positive, help="number of randomized runs (suite default if omitted)")

    wo = sub.add_parser("world", help="save or inspect a world snapshot")
    wsub = wo.add_subparsers(dest="action", required=True)
    ws = wsub.add_parser("save", parents=[common], help="run a scenario and snapshot the resulting world")
    ws.add_argument("path", type=Path)
    ws.add_argument("--scenario", choices=sorted(SCENARIOS), default="supply-chain")
    wl = wsub.add_parser("load", help="verify a snapshot and summarize it")
    wl.add_argument("path", type=Path)
    wl.add_argument("--resave", type=Path, help="write the loaded world back out to this path")
    return p


def _jsonl(path: Optional[Path]) -> Optional[IO[str]]:
    return path.open("w", encoding="utf-8") if path else None


def _emit(fp: Optional[IO[str]], doc: dict) -> None:
    if fp is not None:
        fp.write(json.dumps(doc) + "\n")


def cmd_scenario(args, out: IO[str]) -> int:
    report, world = run_scenario(args.name, args.seed, args.group, args.adversary)
    print(f"scenario {report.name}  group={report.group}  seed={report.seed}  adversary={args.adversary}", file=out)
    for i, step in enumerate(report.steps, 1):
        mark = "PASS" if step.passed else "FAIL"
        extra = f"  ({step.detail})" if step.detail else ""
        print(f"  [{mark}] {i:2d}. {step.label}{extra}", file=out)
    n_ok = sum(s.passed for s in report.steps)
    print(f"{n_ok}/{len(report.steps)} assertions passed", file=out)
    if not report.passed:
        print(f"first failing step: {report.first_failure.label}", file=out)
    fp = _jsonl(args.transcript)
    if fp is not None:
        with fp:
            for rec in world.transcript.records:
                _emit(fp, {"type": "frame", **json.loads(rec.to_json())})
            for i, step in enumerate(report.steps, 1):
                _emit(fp, {"type": "assertion", "index": i, "label": step.label,
                           "passed": step.passed, "detail": step.detail})
            _emit(fp, {"type": "summary", "scenario": report.name, "group": report.group, "seed": report.seed,
                       "adversary": args.adversary, "passed": report.passed,
                       "assertions": len(report.steps), "failures": len(report.steps) - n_ok})
    return EXIT_OK if report.passed else EXIT_FAILED


def cmd_properties(args, out: IO[str]) -> int:
    report = run_suite(args.suite, args.group, args.seed, args.iterations)
    print(f"properties {report.name}  group={report.group}  seed={report.seed}  ({report.elapsed:.2f}s)", file=out)
    for c in report.checks:
        mark = "PASS" if c.passed else "FAIL"
        print(f"  [{mark}] {c.label}: {c.failures} failures in {c.trials} trials", file=out)
        if c.detail:
            print(f"         {c.detail}", file=out)
        for ce in c.counterexamples:
            print(f"         counterexample: {ce}", file=out)
    print("all properties hold" if report.passed else "some properties FAILED", file=out)
    fp = _jsonl(args.transcript)
    if fp is not None:
        with fp:
            for c in report.checks:
                _emit(fp, {"type": "check", "suite": report.name, **c.to_doc()})
            _emit(fp, {"type": "summary", "suite": report.name, "group": report.group, "seed": report.seed,
                       "passed": report.passed, "elapsed": round(report.elapsed, 3)})
    return EXIT_OK if report.passed else EXIT_FAILED


def _describe(world: World, out: IO[str]) -> None:
    names = {d.domain_id: n for n, d in world.backoffice.domains.items()}
    print(f"world  group={world.group.name}  seed={world.seed}  clock={world.clock.now}", file=out)
    for name, d in sorted(world.backoffice.domains.items()):
        print(f"  domain {name}: epoch {d.epoch}, {len(d.readers)} reader(s), {len(d.tokens)} token(s)", file=out)
    for name, h in sorted(world.tags.items()):
        owner = names.get(h.tag.owner, "-") if h.tag.owner else "-"
        access = []
        for d, e in sorted(h.tag.access.items()):
            label = names.get(d, d.hex()[:8])
            access.append(label if isinstance(e, AccessEntry) else f"{label}({e.value})" if isinstance(e, Marker) else label)
        objects = ", ".join(str(c) for c in sorted(h.tag.objects))
        print(f"  tag {name}: owner {owner}; access [{', '.join(access)}]; objects [{objects}]", file=out)


def cmd_world(args, out: IO[str]) -> int:
    if args.action == "save":
        report, world = run_scenario(args.scenario, args.seed, args.group)
        blob = world.snapshot()
        args.path.write_bytes(blob)
        print(f"saved {len(blob)} bytes to {args.path} after scenario {args.scenario} "
              f"({'passed' if report.passed else 'FAILED'})", file=out)
        return EXIT_OK if report.passed else EXIT_FAILED
    try:
        blob = args.path.read_bytes()
    except OSError as exc:
        print(f"error: cannot read {args.path}: {exc.strerror}", file=sys.stderr)
        return EXIT_USAGE
    try:
        world = World.restore(blob)
    except (SnapshotError, ValueError) as exc:
        print(f"error: {args.path}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    _describe(world, out)
    if args.resave:
        args.resave.write_bytes(world.snapshot())
        print(f"re-saved to {args.resave}", file=out)
    return EXIT_OK


def main(argv: Optional[Sequence[str]] = None, out: IO[str] = sys.stdout) -> int:
    args = build_parser().parse_args(argv)
    handler = {"scenario": cmd_scenario, "properties": cmd_properties, "world": cmd_world}[args.command]
    return handler(args, out)


if __name__ == "__main__":
    sys.exit(main())
