"""Acceptance suite: one block per criterion, each recorded as a PASS/FAIL line.

The lines are printed in the terminal summary (see conftest.py) and, with -s,
as each criterion finishes. Run just this module with

    pytest tests/test_acceptance.py -v
"""

import math
import time
from collections import defaultdict
from fractions import Fraction

import numpy as np
import pytest

from oracles import brute_distance_points, random_blob_mask
from posdecomp.bessel import bessel_apply, bessel_invert, build_multiplier, delta_probe
from posdecomp.cli import main as cli_main
from posdecomp.decompose import (ancona_decompose, ancona_decompose_many,
                                 approximate_compact_support, seminorm_chain_report)
from posdecomp.fields import make_field
from posdecomp.grid import GridFunction, build_domain, distance_transform
from posdecomp.norms import SobolevParams, hardy_probe
from posdecomp.whitney import overlap_count, whitney_decompose

TITLES = {
    1: "Whitney suite",
    2: "distance oracle",
    3: "Bessel roundtrip and kernel probe",
    4: "majorization oracle",
    5: "exact splitting",
    6: "decomposition constant stable under refinement",
    7: "chain stability",
    8: "positive homogeneity",
    9: "compact-support approximation",
    10: "hypothesis gate",
}

# criterion -> list of (label, ok, detail)
RESULTS = defaultdict(list)


def record(n, label, ok, detail):
    RESULTS[n].append((label, bool(ok), detail))
    print(f"[criterion {n}] {'PASS' if ok else 'FAIL'} {label}: {detail}")
    return ok


def summary_lines():
    lines = []
    for n in sorted(TITLES):
        rows = RESULTS.get(n)
        if not rows:
            lines.append(f"criterion {n:2d} NOT RUN  {TITLES[n]}")
            continue
        bad = [r for r in rows if not r[1]]
        status = "PASS" if not bad else "FAIL"
        detail = f"{len(rows) - len(bad)}/{len(rows)} sub-checks"
        if bad:
            detail += "; failing: " + "; ".join(f"{lab} ({d})" for lab, _, d in bad)
        lines.append(f"criterion {n:2d} {status}  {TITLES[n]}: {detail}")
    return lines


# --------------------------------------------------------------------------
# 1. Whitney suite

WHITNEY_CASES = [("interval", 1, 1 / 128), ("box", 2, 1 / 128), ("ball", 2, 1 / 128),
                 ("l_shape", 2, 1 / 128), ("cusp", 2, 1 / 128),
                 ("box", 3, 1 / 32), ("ball", 3, 1 / 32)]


@pytest.fixture(scope="module", params=WHITNEY_CASES, ids=lambda c: f"{c[0]}-{c[1]}d")
def whitney_run(request):
    kind, ndim, h = request.param
    kw = {} if kind in ("interval", "l_shape", "cusp") else {"ndim": ndim}
    t0 = time.perf_counter()
    dom = build_domain(kind, h, **kw)
    dec = whitney_decompose(dom)
    ov = overlap_count(dec, Fraction(4, 3))
    return f"{kind}-{ndim}d", dec, ov, time.perf_counter() - t0


def test_c1_whitney_inequalities(whitney_run):
    label, dec, _, _ = whitney_run
    bad = [q for q in dec.cubes if not (q.diam <= q.dist <= 4 * q.diam)]
    assert record(1, f"{label} inequalities", not bad, f"{len(bad)} of {len(dec.cubes)} cubes violate")


def test_c1_disjoint(whitney_run):
    label, dec, _, _ = whitney_run
    count = np.zeros(dec.domain.shape, dtype=np.int32)
    for q in dec.cubes:
        count[q.index_slices()] += 1
    assert record(1, f"{label} disjoint", count.max() <= 1, f"max multiplicity {count.max()}")


def test_c1_uncovered_fraction(whitney_run):
    label, dec, _, _ = whitney_run
    f = dec.uncovered_fraction
    assert record(1, f"{label} uncovered", f < 0.05, f"uncovered_fraction {f:.4f} (bound 0.05)")


def test_c1_overlap(whitney_run):
    label, dec, ov, _ = whitney_run
    bound = 3 ** dec.domain.ndim + 1
    assert record(1, f"{label} overlap", ov <= bound, f"overlap(4/3) {ov} (bound {bound})")


def test_c1_runtime(whitney_run):
    label, _, _, secs = whitney_run
    assert record(1, f"{label} runtime", secs < 10, f"{secs:.2f} s")


# --------------------------------------------------------------------------
# 2. distance oracle

def test_c2_distance_oracle():
    rng = np.random.default_rng(2024)
    t0 = time.perf_counter()
    worst = 0.0
    shapes = [(64, 64)] + [tuple(int(n) for n in rng.integers(8, 65, size=2)) for _ in range(19)]
    for shape in shapes:
        mask = random_blob_mask(rng, shape)
        h = 1.0 / 64
        worst = max(worst, float(np.max(np.abs(distance_transform(mask, h) - brute_distance_points(mask, h)))))
    secs = time.perf_counter() - t0
    ok = record(2, "20 masks", worst <= 1e-12 and secs < 30, f"max error {worst:.2e}, {secs:.1f} s")
    assert ok


# --------------------------------------------------------------------------
# 3. Bessel roundtrip and kernel probe

BESSEL_FIELDS = [("interval", 1 / 128, s) for s in range(5)] + [("box", 1 / 64, s) for s in range(5)]


@pytest.mark.parametrize("m", [1, 2, 3])
def test_c3_bessel(m):
    worst = 0.0
    taus = []
    for kind, h, seed in BESSEL_FIELDS:
        dom = build_domain(kind, h)
        u = make_field(dom, "random", seed=seed)
        mult = build_multiplier(dom.shape, dom.spacing, m)
        back = bessel_apply(bessel_invert(u, mult), mult)
        worst = max(worst, float(np.max(np.abs(back - u.values))) / u.sup_norm())
        taus.append(delta_probe(mult)[1])
    ok = worst <= 1e-10 and max(taus) < 1e-6
    assert record(3, f"m={m}", ok, f"roundtrip {worst:.2e} (bound 1e-10), tau_ker {max(taus):.2e} (bound 1e-6)")


# --------------------------------------------------------------------------
# 4 and 5. majorization oracle, exact splitting

def _majorization_cases():
    cases = []
    for i in range(13):
        cases.append(("interval", 1 / 256, 100 + i, 1 + i % 3, (1.5, 2.0, 3.0)[i % 3], 0.0))
    kinds = ["box", "ball", "l_shape", "cusp"]
    for i in range(12):
        cases.append((kinds[i % 4], 1 / 64, 200 + i, 1 + i % 2, (2.0, 3.0, 1.5)[i % 3], (0.0, 1.0)[i % 2]))
    return cases


MAJ_CASES = _majorization_cases()


@pytest.fixture(scope="module")
def majorization_runs():
    runs = []
    for kind, h, seed, m, p, s in MAJ_CASES:
        dom = build_domain(kind, h)
        u = make_field(dom, "random", seed=seed)
        runs.append((f"{kind}/seed{seed}/m{m}", u, ancona_decompose(u, SobolevParams(m, p, s))))
    return runs


def test_c4_fields_change_sign(majorization_runs):
    assert len(majorization_runs) == 25
    for _, u, _ in majorization_runs:
        assert u.values.min() < 0 < u.values.max()


def test_c4_majorization(majorization_runs):
    fails = []
    worst_piece = math.inf
    for label, _, rep in majorization_runs:
        slack = min(pc.margin + pc.tau_pos for pc in rep.pieces)
        worst_piece = min(worst_piece, slack)
        if slack < 0:
            fails.append(f"{label} piece")
        if rep.min_u1 < -rep.tau_glob or rep.min_u2 < -rep.tau_glob:
            fails.append(f"{label} global")
    ok = record(4, "25 fields", not fails,
                f"min piece slack {worst_piece:.2e}; " + (", ".join(fails) or "no violations"))
    assert ok


def test_c5_exact_splitting(majorization_runs):
    worst = 0.0
    for _, u, rep in majorization_runs:
        worst = max(worst, float(np.max(np.abs(u.values - (rep.u1.values - rep.u2.values)))) / u.sup_norm())
    assert record(5, "25 runs", worst <= 1e-12, f"max relative residual {worst:.2e} (bound 1e-12)")


# --------------------------------------------------------------------------
# 6. decomposition constant under refinement
#
# The constant only settles once the cutoff transition shells (width l(Q)/6)
# of the cubes carrying most of ‖∇^m u₁‖ span several cells, so the coarse
# spacing depends on the order and on how far in those cubes sit.

C6_SPACING = {
    ("interval", 1): 1 / 256, ("interval", 2): 1 / 512,
    ("box", 1): 1 / 256, ("box", 2): 1 / 256,
    ("ball", 1): 1 / 256, ("ball", 2): 1 / 256,
    ("l_shape", 1): 1 / 256, ("l_shape", 2): 1 / 512,
    ("cusp", 1): 1 / 256, ("cusp", 2): 1 / 512,
}
C6_P = (1.5, 2.0, 3.0)
_c6_clock = []


@pytest.mark.parametrize("kind, m", list(C6_SPACING), ids=lambda v: str(v))
def test_c6_constant_stability(kind, m):
    h = C6_SPACING[(kind, m)]
    params = [SobolevParams(m, p, 0.0) for p in C6_P]
    t0 = time.perf_counter()
    cs = []
    for hh in (h, h / 2):
        dom = build_domain(kind, hh)
        cs.append([r.c for r in ancona_decompose_many(make_field(dom, "random", seed=0), params)])
    _c6_clock.append(time.perf_counter() - t0)
    ratios = [b / a for a, b in zip(*cs)]
    ok = all(math.isfinite(c) for c in cs[0] + cs[1]) and all(0.5 <= r <= 2 for r in ratios)
    detail = ", ".join(f"p={p:g}: c={b:.4g} ratio {r:.3f}" for p, b, r in zip(C6_P, cs[1], ratios))
    assert record(6, f"{kind} m={m} h=1/{round(1 / h)}", ok, detail)


def test_c6_runtime():
    total = sum(_c6_clock)
    if len(_c6_clock) != len(C6_SPACING):
        pytest.skip("runtime is only meaningful after the full sweep")
    assert record(6, "runtime", total < 300, f"{total:.0f} s for {len(C6_SPACING)} domain/order pairs (bound 300 s)")


# --------------------------------------------------------------------------
# 7. chain stability on the 1-D gallery

@pytest.mark.parametrize("m", [1, 2])
@pytest.mark.parametrize("field, seed", [("random", 0), ("random", 1), ("random", 2), ("sin", 0)])
def test_c7_chain(field, seed, m):
    params = [SobolevParams(m, p) for p in C6_P]
    rows = []
    for n in (512, 1024):
        dom = build_domain("interval", 1 / n)
        u = make_field(dom, field, seed=seed)
        reps = ancona_decompose_many(u, params)
        rows.append([seminorm_chain_report(u, pr, r.decomp, r) for pr, r in zip(params, reps)])
    worst, problems = 1.0, []
    for coarse, fine in zip(*rows):
        for ra, rb in zip(coarse, fine):
            for j, (a, b) in enumerate(zip(ra.constants(), rb.constants())):
                if a is None and b is None:
                    continue  # both lines vanish identically
                if a is None or b is None or not (math.isfinite(a) and math.isfinite(b)):
                    problems.append(f"k={ra.k} step {j} undefined")
                    continue
                worst = max(worst, a / b, b / a)
    ok = not problems and worst <= 2
    assert record(7, f"{field}{seed} m={m}", ok, f"worst ratio {worst:.3f}" + ("; " + ", ".join(problems) if problems else ""))


# --------------------------------------------------------------------------
# 8. positive homogeneity

@pytest.mark.parametrize("kind, h, m", [("interval", 1 / 256, 2), ("l_shape", 1 / 64, 1), ("ball", 1 / 64, 3)])
@pytest.mark.parametrize("lam", [0.5, 3.0])
def test_c8_homogeneity(kind, h, m, lam):
    dom = build_domain(kind, h)
    u = make_field(dom, "random", seed=8)
    pr = SobolevParams(m, 2.0)
    a = ancona_decompose(u, pr)
    b = ancona_decompose(u.scaled(lam), pr)
    scale = lam * max(a.u1.sup_norm(), a.u2.sup_norm())
    err = max(float(np.max(np.abs(b.u1.values - lam * a.u1.values))),
              float(np.max(np.abs(b.u2.values - lam * a.u2.values)))) / scale
    assert record(8, f"{kind} m={m} lambda={lam:g}", err <= 1e-12, f"relative deviation {err:.2e}")


# --------------------------------------------------------------------------
# 9. compact-support approximation on (0, 1)

def test_c9_approximation():
    dom = build_domain("interval", 1 / 256)
    u = GridFunction.from_source(dom, lambda D: D.distance ** 2)
    pr = SobolevParams(1, 2.0, 0.0)
    errs = [approximate_compact_support(u, pr, n).relative_error for n in range(2, 7)]
    monotone = all(b <= a for a, b in zip(errs, errs[1:]))
    ok = monotone and errs[-1] < 0.1
    assert record(9, "u = d^2", ok, "relative errors n=2..6: " + ", ".join(f"{e:.4f}" for e in errs))


# --------------------------------------------------------------------------
# 10. hypothesis gate

@pytest.mark.parametrize("kind", ["interval", "box", "ball"])
def test_c10_gate(kind, tmp_path, capsys):
    flags, codes = [], []
    for n in (32, 64):
        dom = build_domain(kind, 1 / n)
        flags.append(hardy_probe(make_field(dom, "one"), SobolevParams(1, 2.0)).growth)
        codes.append(cli_main(["decompose", "--domain", kind, "--h", repr(1 / n), "--field", "one",
                               "--out-prefix", f"{tmp_path}/h{n}_"]))
    capsys.readouterr()
    ok = all(g > 1.5 for g in flags) and codes == [1, 1]
    assert record(10, kind, ok, f"growth {', '.join(f'{g:.2f}' for g in flags)}; exit codes {codes}")
