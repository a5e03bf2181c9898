#!/usr/bin/env python3
"""Decomposition constant c = max(‖u1‖, ‖u2‖) / ‖u‖ under repeated refinement.

Writes one CSV row per (domain, m, p, h). Example:

    python3 scripts/constant_study.py --domains box,l_shape --m 2 --levels 64,128,256
"""

import argparse
import csv
import sys
import time

from posdecomp import SobolevParams, ancona_decompose_many, build_domain
from posdecomp.fields import make_field


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    ap.add_argument("--domains", default="interval,box,ball,l_shape,cusp")
    ap.add_argument("--m", type=int, default=1)
    ap.add_argument("--p", default="1.5,2,3")
    ap.add_argument("--s", type=float, default=0.0)
    ap.add_argument("--levels", default="64,128,256", help="grid resolutions 1/h")
    ap.add_argument("--field", default="random")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", default="-")
    args = ap.parse_args(argv)

    ps = [float(x) for x in args.p.split(",")]
    params = [SobolevParams(args.m, p, args.s) for p in ps]
    out = sys.stdout if args.out == "-" else open(args.out, "w", newline="")
    w = csv.writer(out)
    w.writerow(["domain", "m", "p", "s", "n", "c", "ratio_to_previous", "n_cubes", "seconds"])
    for kind in args.domains.split(","):
        prev = {}
        for n in (int(x) for x in args.levels.split(",")):
            dom = build_domain(kind, 1 / n)
            t0 = time.perf_counter()
            reps = ancona_decompose_many(make_field(dom, args.field, seed=args.seed), params)
            secs = time.perf_counter() - t0
            for p, rep in zip(ps, reps):
                ratio = rep.c / prev[p] if p in prev and rep.c else ""
                w.writerow([kind, args.m, p, args.s, n, rep.c, ratio, len(rep.pieces), f"{secs:.2f}"])
                prev[p] = rep.c
            out.flush()
    if out is not sys.stdout:
        out.close()


if __name__ == "__main__":
    main()
