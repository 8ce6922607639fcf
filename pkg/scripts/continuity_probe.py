"""Empirical continuity modulus of the v-flow near {g = 0}.

Compares f = x^2 + y^2, g = x y with the one-variable family f = x^2, g = x,
whose Gram determinant vanishes identically.
"""
import argparse
import json
from pathlib import Path

from germflow.conditions import GermFamily
from germflow.flow import continuity_probe
from germflow.poly_core import parse_polynomial


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--span", type=float, default=0.2)
    ap.add_argument("--out", default="results/continuity")
    args = ap.parse_args()

    d = [1e-1, 3e-2, 1e-2, 3e-3, 1e-3, 3e-4]
    cases = {
        "x^2+y^2, xy": (GermFamily(parse_polynomial("x^2 + y^2", ["x", "y"]), parse_polynomial("x*y", ["x", "y"])),
                        [[0.2, 0.0], [0.0, 0.2]], [[0.0, e] for e in d] + [[e, 0.0] for e in d]),
        "x^2, x": (GermFamily(parse_polynomial("x^2"), parse_polynomial("x")), [[0.0]], [[e] for e in d]),
    }
    summary = {}
    for name, (fam, base, offsets) in cases.items():
        est = continuity_probe(fam, base, offsets, args.span)
        statuses = sorted({p[3] for p in est.pairs})
        print(f"{name}: reliable={est.reliable} slope={est.slope} decays={est.decays} statuses={statuses}")
        for eta, eps in est.table:
            print(f"    eta {eta:.2e}  eps {eps:.3e}")
        summary[name] = est.to_json()

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True, default=str))


if __name__ == "__main__":
    main()
