"""Verification loop and command line entry point.

Each round first specialises the program with the answer constraints of its
query-answer transform (constraint propagation), then runs the polyhedral
analysis.  A safe model ends the run; otherwise the earliest derivation of
`false` is replayed as an AND-tree.  Feasible trees are real counterexamples;
spurious ones drive one round of interpolant-guided predicate splitting, and
the loop starts over on the specialised program.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile
import time
from dataclasses import dataclass
from typing import List, Optional, Tuple

from .analysis import (
    AbstractModel,
    analyze,
    check_safety,
    compute_thresholds,
    is_inductive_model,
    model_to_text,
)
from .cex import TraceTerm, build_and_tree, extract_trace, feasible, tree_interpolants
from .chc_ast import FALSE, ParseError, Program, normalize_integrity, parse_program, program_text
from .linalg import ResourceLimitError, fm_limit
from .qa import qa_transform
from .refine import polyvariant_specialise, split_facts
from .specialise import early_safe, strengthen

DUMP_KINDS = ("qa", "spec", "model", "ps")


@dataclass
class Config:
    max_refinements: int = 10
    use_thresholds: bool = True
    fm_step_limit: int = 10_000
    dump_dir: Optional[str] = None
    dump_kinds: Tuple[str, ...] = DUMP_KINDS


@dataclass
class Verdict:
    """Outcome of a run: kind is "safe", "unsafe" or "unknown".

    `refinements` counts completed splitting rounds.  Unsafe verdicts carry
    the feasible trace; unknown ones carry a reason.  Safe verdicts keep the
    final program and its inductive model so callers can audit them.
    """

    kind: str
    refinements: int
    trace: Optional[TraceTerm] = None
    reason: Optional[str] = None
    events: Tuple[str, ...] = ()
    program: Optional[Program] = None
    model: Optional[AbstractModel] = None


def _dump(cfg: Config, name: str, kind: str, text: str) -> None:
    if cfg.dump_dir is None or kind not in cfg.dump_kinds:
        return
    os.makedirs(cfg.dump_dir, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=cfg.dump_dir, prefix=name + ".")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, os.path.join(cfg.dump_dir, name))
    except BaseException:
        os.unlink(tmp)
        raise


def verify(program: Program, config: Optional[Config] = None) -> Verdict:
    cfg = config or Config()
    events: List[str] = []
    program = normalize_integrity(program)
    rounds = 0
    token = fm_limit.set(cfg.fm_step_limit)
    try:
        while True:
            if early_safe(program):
                events.append(f"round {rounds}: no clause derives false")
                model, _ = analyze(program)
                return Verdict("safe", rounds, events=tuple(events),
                               program=program, model=model)
            qa = qa_transform(program, FALSE)
            _dump(cfg, f"round{rounds}.qa", "qa", program_text(qa))
            qa_thresholds = compute_thresholds(qa) if cfg.use_thresholds else None
            qa_model, _ = analyze(qa, qa_thresholds)
            program = strengthen(program, qa_model)
            _dump(cfg, f"round{rounds}.spec", "spec", program_text(program))
            events.append(
                f"round {rounds}: propagation kept {len(program.clauses)} clauses")
            if early_safe(program):
                events.append(
                    f"round {rounds}: propagation removed every false clause")
                model, _ = analyze(program)
                return Verdict("safe", rounds, events=tuple(events),
                               program=program, model=model)
            thresholds = compute_thresholds(program) if cfg.use_thresholds else None
            model, witness = analyze(program, thresholds)
            _dump(cfg, f"round{rounds}.model", "model",
                  model_to_text(model, program))
            if check_safety(model):
                if not is_inductive_model(program, model):
                    raise RuntimeError("analysis returned a non-inductive model")
                events.append(f"round {rounds}: model proves false unreachable")
                return Verdict("safe", rounds, events=tuple(events),
                               program=program, model=model)
            trace = extract_trace(witness)
            tree = build_and_tree(program, trace)
            if feasible(tree):
                events.append(f"round {rounds}: counterexample {trace} is feasible")
                return Verdict("unsafe", rounds, trace=trace,
                               events=tuple(events), program=program, model=model)
            events.append(f"round {rounds}: counterexample {trace} is spurious")
            if rounds >= cfg.max_refinements:
                return Verdict("unknown", rounds,
                               reason="refinement limit reached",
                               events=tuple(events))
            interpolant = tree_interpolants(tree)
            split = split_facts(program, model, interpolant)
            program, _ = polyvariant_specialise(program, split)
            _dump(cfg, f"round{rounds}.ps", "ps", program_text(program))
            events.append(
                f"round {rounds}: split into {len(program.predicates)} "
                f"predicates, {len(program.clauses)} clauses")
            rounds += 1
    except ResourceLimitError as exc:
        events.append(f"round {rounds}: gave up: {exc}")
        return Verdict("unknown", rounds, reason=str(exc), events=tuple(events))
    finally:
        fm_limit.reset(token)


_EXIT_CODES = {"safe": 0, "unsafe": 1, "unknown": 2}


def main(argv: Optional[List[str]] = None) -> int:
    ap = argparse.ArgumentParser(
        prog="chcverify",
        description="Decide safety of constrained Horn clauses over "
                    "linear rational arithmetic.")
    ap.add_argument("file", help="clause file to verify")
    ap.add_argument("--max-refinements", type=int, default=10, metavar="N",
                    help="splitting rounds before giving up (default 10)")
    ap.add_argument("--dump-dir", metavar="DIR",
                    help="write per-round artifacts into DIR")
    ap.add_argument("--dump", action="append", choices=DUMP_KINDS,
                    metavar="|".join(DUMP_KINDS),
                    help="artifact kinds to dump (default: all)")
    ap.add_argument("--format", choices=("human", "json"), default="human")
    ap.add_argument("--thresholds", choices=("on", "off"), default="on",
                    help="widening thresholds (default on)")
    args = ap.parse_args(argv)

    try:
        with open(args.file) as fh:
            program = parse_program(fh.read())
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (ParseError, ValueError) as exc:
        print(f"error: {args.file}: {exc}", file=sys.stderr)
        return 3

    cfg = Config(
        max_refinements=args.max_refinements,
        use_thresholds=args.thresholds == "on",
        dump_dir=args.dump_dir,
        dump_kinds=tuple(args.dump) if args.dump else DUMP_KINDS,
    )
    start = time.monotonic()
    verdict = verify(program, cfg)
    elapsed_ms = int((time.monotonic() - start) * 1000)

    if args.format == "json":
        print(json.dumps({
            "verdict": verdict.kind,
            "iterations": verdict.refinements,
            "time_ms": elapsed_ms,
            "witness": str(verdict.trace) if verdict.trace else None,
            "events": list(verdict.events),
        }))
    else:
        print(f"result:      {verdict.kind}")
        print(f"refinements: {verdict.refinements}")
        print(f"time:        {elapsed_ms} ms")
        if verdict.trace is not None:
            print(f"witness:     {verdict.trace}")
        if verdict.reason is not None:
            print(f"reason:      {verdict.reason}")
    return _EXIT_CODES[verdict.kind]


if __name__ == "__main__":
    sys.exit(main())
