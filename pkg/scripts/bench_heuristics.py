#!/usr/bin/env python3
"""Sweep the scheduling heuristics against the reference methods.

Runs every method on the built-in corpus (two-wheels, an 80-node block
model instance, and a 500-node instance) in both raw stationary and
damped-restart modes, writing one bench CSV per (graph, mode) under the
output directory.  Plot cash_l1/residual against cum_cost to reproduce
the usual cost-convergence comparison.
"""

import argparse
import os
import sys

from rlgl.cli import main as rlgl_main

RAW_METHODS = "rlgl+rr,rlgl+rand:1,rlgl+maxc,rlgl+pc:1,rlgl+theta:1,rlgl+theta:2,pi,gs,gmres:10"
PR_METHODS = RAW_METHODS + ",gso:greedy-max,gso:rr,gso:theta"

GRAPHS = [
    ("two-wheels", "two-wheels"),
    ("sbm80", "sbm:40,40:0.1:0.005:2"),
    ("sbm500", "sbm:250,250:0.03:0.004:7"),
]


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="results/bench")
    ap.add_argument("--eps", default="1e-11")
    ap.add_argument("--damping", default="0.85")
    args = ap.parse_args(argv)

    codes = []
    for name, spec in GRAPHS:
        for mode, methods in (("raw", RAW_METHODS), ("pagerank", PR_METHODS)):
            out = os.path.join(args.out, f"{name}-{mode}")
            argv = ["bench", "--graph", spec, "--method", methods, "--eps", args.eps,
                    "--max-steps", "5000000", "--out", out]
            if mode == "pagerank":
                argv += ["--pagerank", "--damping", args.damping]
            print(f"== {name} [{mode}] -> {out}/bench.csv")
            codes.append(rlgl_main(argv))
    return max(codes)


if __name__ == "__main__":
    sys.exit(main())
