#!/usr/bin/env python3
"""Relative W^{m,p} error of the compactly supported truncations u_n.

    python3 scripts/approximation_curve.py --alpha 2 --n-max 8
"""

import argparse

from posdecomp import SobolevParams, approximate_compact_support, build_domain
from posdecomp.fields import make_field


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    ap.add_argument("--domain", default="interval")
    ap.add_argument("--h", type=float, default=1 / 256)
    ap.add_argument("--alpha", type=float, default=2.0, help="u = d^alpha")
    ap.add_argument("--m", type=int, default=1)
    ap.add_argument("--p", type=float, default=2.0)
    ap.add_argument("--n-max", type=int, default=6)
    ap.add_argument("--plain", action="store_true", help="sum the raw cutoffs instead of a partition of unity")
    args = ap.parse_args(argv)

    dom = build_domain(args.domain, args.h)
    u = make_field(dom, "dist_power", alpha=args.alpha)
    pr = SobolevParams(args.m, args.p)
    print("n  relative_error  tail_hardy_mass")
    for n in range(1, args.n_max + 1):
        a = approximate_compact_support(u, pr, n, normalize=not args.plain)
        print(f"{n:<2d} {a.relative_error:14.6f}  {a.tail_hardy_mass:.3e}")


if __name__ == "__main__":
    main()
