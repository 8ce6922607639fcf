"""The Broughton polynomial x^2 y - x at infinity.

Runs the Malgrange check along the hand-made witness, scans a grid of values
for atypical ones, and compares the two chart conditions on random arcs and
on the image of the witness.
"""
import argparse
import json
from pathlib import Path

import numpy as np

from germflow.arcs import ArcSuiteSpec, SearchConfig, SGrid, Target, make_monomial_arc, random_arc_suite
from germflow.infinity import atypical_scan, build_infinity_family, check_32_33, malgrange_check, malgrange_quantity
from germflow.poly_core import parse_polynomial


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--grid", default="-2,-1,-0.5,0,0.5,1,2")
    ap.add_argument("--restarts", type=int, default=20)
    ap.add_argument("--out", default="results/broughton")
    args = ap.parse_args()

    f = parse_polynomial("x^2*y - x", ["x", "y"])
    witness = make_monomial_arc([1, -1], [1.0, 0.5])
    s = SGrid().values()
    q = [malgrange_quantity(f, x) for x in witness.x_at(s)]
    verdict = malgrange_check(f, 0.0, [witness])
    print("witness (s, 1/(2s)):")
    for si, qi in list(zip(s, q))[::4]:
        print(f"  s = {si:.3e}   |x||grad f| = {qi:.6e}   ratio to s/2 = {qi / (si / 2):.6f}")
    print(f"  fitted order {verdict.orders[0]['order']:.6f}, holds = {verdict.holds}")

    ts = [float(v) for v in args.grid.split(",")]
    scan = atypical_scan(f, ts, SearchConfig(restarts=args.restarts, seed=0))
    print("scan:")
    for t0, v in scan:
        print(f"  t0 = {t0.real:+.2f}   holds = {v.holds}")

    inf = build_infinity_family(f, 1)
    rows = []
    for seed in range(10):
        arcs = random_arc_suite(inf.family, ArcSuiteSpec(count=32, target=Target.ORIGIN), seed=seed)
        rep = check_32_33(f, 1, arcs)
        rows.append({"seed": seed, "retained": rep.retained, "agreement": rep.agreement})
    image = check_32_33(f, 1, [make_monomial_arc([1, 2], [2.0, 2.0])]).arcs[0]
    print("chart conditions on random suites:", [(r["retained"], r["agreement"]) for r in rows])
    print(f"image of the witness: transverse ratio bounded {image['bounded_3_2']}, full gradient ratio bounded {image['bounded_3_3']}")

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "summary.json").write_text(json.dumps({
        "witness_order": verdict.orders[0]["order"],
        "witness_samples": [[float(a), float(b)] for a, b in zip(s, q)],
        "scan": [{"t0": t0.real, "holds": v.holds} for t0, v in scan],
        "chart_suites": rows,
        "witness_image": {k: v for k, v in image.items() if not isinstance(v, float) or np.isfinite(v)},
    }, indent=2, sort_keys=True, default=str))


if __name__ == "__main__":
    main()
