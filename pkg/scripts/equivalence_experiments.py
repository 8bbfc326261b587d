#!/usr/bin/env python3
"""Randomized differential experiments at configurable budgets.

Two suites: the interval computation against exhaustive bag matching, and the
flooding engine against the exhaustive reference validator. Both are seeded
and report agreement counts plus timing.
"""

from __future__ import annotations

import argparse
import random
import sys
import time
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from shexd import brute_match, flooding_validation, interval, reference_validate, verify_global_typing_witness
from shexd.engine import CertainTyping
from shexd.errors import SearchBudgetExceededError, ValidationError
from shexd.randgen import random_bag, random_expr, random_instance


def interval_suite(trials: int, seed: int) -> bool:
    rng = random.Random(seed)
    started = time.perf_counter()
    disagreements = 0
    for _ in range(trials):
        expr = random_expr(rng)
        bag = random_bag(rng, expr)
        if interval(expr, bag).contains(1) != brute_match(expr, bag):
            disagreements += 1
    elapsed = time.perf_counter() - started
    print(f"interval vs exhaustive: {trials - disagreements}/{trials} agree "
          f"({elapsed:.1f} s, {trials / elapsed:.0f}/s)")
    return disagreements == 0


def engine_suite(trials: int, seed: int) -> bool:
    decided = agreements = accepts = skipped = 0
    attempt = 0
    started = time.perf_counter()
    while decided < trials and attempt < trials * 10:
        rng = random.Random(seed + attempt)
        attempt += 1
        schema, graph, typing0 = random_instance(rng)
        certain = CertainTyping(schema, graph)
        try:
            try:
                reference_validate(schema, graph, typing0, certain=certain)
                expected = True
            except ValidationError:
                expected = False
            try:
                gtw = flooding_validation(schema, graph, typing0, certain=certain)
                actual = True
            except ValidationError:
                gtw = None
                actual = False
        except SearchBudgetExceededError:
            skipped += 1
            continue
        decided += 1
        if actual == expected:
            agreements += 1
        if gtw is not None:
            accepts += 1
            if not verify_global_typing_witness(gtw, graph, schema, certain):
                print(f"  witness verification FAILED at attempt {attempt}")
                return False
    elapsed = time.perf_counter() - started
    print(f"flooding vs reference:  {agreements}/{decided} agree, "
          f"{accepts} accepts all verified, {skipped} skipped ({elapsed:.1f} s)")
    return agreements == decided


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--trials", type=int, default=2000)
    parser.add_argument("--engine-trials", type=int, default=500)
    parser.add_argument("--seed", type=int, default=20240807)
    args = parser.parse_args()
    ok = interval_suite(args.trials, args.seed)
    ok = engine_suite(args.engine_trials, args.seed) and ok
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
