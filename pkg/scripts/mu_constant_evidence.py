"""Verdicts for x^3 + y^6 + t x y^4 across many seeds and two grids.

A single seeded suite is a thin sample; this repeats the check with fresh
arc suites and a finer s-grid and reports how often each verdict comes up.
"""
import argparse
import collections
import json
from pathlib import Path

from germflow.arcs import ArcSuiteSpec, SGrid, SearchConfig, check_condition, find_violating_arc, random_arc_suite
from germflow.conditions import GermFamily
from germflow.poly_core import parse_polynomial

KINDS = ("C0_1", "C2_6", "C2_7")


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seeds", type=int, default=20)
    ap.add_argument("--count", type=int, default=64)
    ap.add_argument("--out", default="results/mu_constant")
    args = ap.parse_args()

    fam = GermFamily(parse_polynomial("x^3 + y^6", ["x", "y"]), parse_polynomial("x*y^4", ["x", "y"]))
    grids = {"default": SGrid(), "fine": SGrid(s0=0.5, ratio=0.7, count=48, window=24)}
    tally = {g: {k: collections.Counter() for k in KINDS} for g in grids}
    for gname, grid in grids.items():
        for seed in range(args.seeds):
            arcs = random_arc_suite(fam, ArcSuiteSpec(count=args.count), seed=seed, grid=grid)
            for kind in KINDS:
                tally[gname][kind][check_condition(fam, kind, arcs, grid).verdict.value] += 1
    search = {k: find_violating_arc(fam, k, SearchConfig(restarts=20, seed=0)) for k in KINDS}

    print(f"{'grid':8s} {'kind':6s} verdicts over {args.seeds} seeds")
    for gname in grids:
        for kind in KINDS:
            print(f"{gname:8s} {kind:6s} {dict(tally[gname][kind])}")
    for kind, arc in search.items():
        print(f"search {kind}: {'no violating arc' if arc is None else arc.to_json()}")

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "summary.json").write_text(json.dumps({
        "tally": {g: {k: dict(c) for k, c in v.items()} for g, v in tally.items()},
        "search": {k: None if a is None else a.to_json() for k, a in search.items()},
    }, indent=2, sort_keys=True))


if __name__ == "__main__":
    main()
