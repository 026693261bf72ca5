#!/usr/bin/env python3
"""Sweep the coupling strength for the Kerr-qubit model and print how fast
the full dynamics collapses onto the limit qubit.

Writes a CSV next to stdout output when --out is given.
"""

import argparse
from pathlib import Path

from zenoslh import basis_state_density, convergence_harness
from zenoslh.modelfile import load_model
from zenoslh.outputs import write_convergence_csv

REPO = Path(__file__).resolve().parents[1]


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--model", default=str(REPO / "models" / "kerr_qubit.model"))
    ap.add_argument("--ks", default="2,5,10,20,40")
    ap.add_argument("--t-end", type=float, default=1.0)
    ap.add_argument("--dt", type=float, default=1e-3)
    ap.add_argument("--out", default=None)
    args = ap.parse_args()

    doc = load_model(args.model)
    split = doc.split()
    rho0 = basis_state_density(split.zeno_space, 1)
    ks = [float(x) for x in args.ks.split(",")]
    points = convergence_harness(doc.family, split, rho0, ks, args.t_end, args.dt)

    print(f"{'k':>8}  {'trace distance':>14}  {'leaked trace':>13}  {'dt (full)':>10}")
    for p in points:
        print(f"{p.k:8.2f}  {p.distance:14.3e}  {p.leaked_trace:13.3e}  {p.dt_full:10.2e}")
    if args.out:
        write_convergence_csv(args.out, points)
        print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
