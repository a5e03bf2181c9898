#!/usr/bin/env python3
"""Where does ‖∇^m u1‖ live? Splits its p-th power over dyadic distance bands.

Growth of a band under refinement points at cubes whose cutoff transition
shells are not yet resolved by the grid.

    python3 scripts/gradient_bands.py l_shape --m 2 --levels 64,128,256
"""

import argparse

from posdecomp import SobolevParams, ancona_decompose, build_domain
from posdecomp.fields import make_field
from posdecomp.grid import gradient_magnitude


def band_masses(rep, n_bands=10):
    dom = rep.u.domain
    p, m = rep.params.p, rep.params.m
    mass = gradient_magnitude(rep.u1.values, dom.spacing, m) ** p * dom.cell_volume
    out = []
    for j in range(1, n_bands + 1):
        sel = dom.interior_mask & (dom.distance >= 2.0 ** -(j + 1)) & (dom.distance < 2.0 ** -j)
        out.append(float(mass[sel].sum()))
    return out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    ap.add_argument("domain")
    ap.add_argument("--m", type=int, default=2)
    ap.add_argument("--p", type=float, default=2.0)
    ap.add_argument("--levels", default="64,128,256")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    print("bands: d in [2^-(j+1), 2^-j), j = 1..10")
    for n in (int(x) for x in args.levels.split(",")):
        dom = build_domain(args.domain, 1 / n)
        rep = ancona_decompose(make_field(dom, "random", seed=args.seed), SobolevParams(args.m, args.p))
        cells = " ".join(f"{b:9.2e}" for b in band_masses(rep))
        print(f"1/h={n:5d} c={rep.c:9.4g} | {cells}")


if __name__ == "__main__":
    main()
