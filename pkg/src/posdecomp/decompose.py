"""Positive-cone decomposition u = u1 - u2 through Whitney pieces.

For every Whitney cube Q:

    u_Q  = η_Q u                      (η_Q = 1 on Q, supported in 4/3 Q)
    f_Q  = (1 - l(Q)^2 Δ)^{m/2} u_Q    (on a padded torus around 5/3 Q)
    v_Q  = ζ_Q · G_m * max(f_Q, 0)     (ζ_Q = 1 on 4/3 Q, supported in 5/3 Q)

Since G_m >= 0, G_m * f_+ >= max(0, G_m * f) = max(0, u_Q), and ζ_Q = 1 on
the support of u_Q, so v_Q >= max(0, u_Q). Then u1 = Σ v_Q and u2 = u1 - u.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .bessel import build_multiplier
from .grid import (DivergenceProbe, GridFunction, derivative_arrays, divergence_probe,
                   gradient_magnitude, weighted_power_sum)
from .norms import (DEFAULT_DIVERGENCE_FACTOR, NormBundle, SobolevParams, hardy_probe,
                    norm_bundle, seminorms)
from .whitney import (STANDARD_PROFILE, WIDE_PROFILE, CutoffFamily, WhitneyCube,
                      WhitneyDecomposition, build_cutoffs, cutoff_window, overlap_count,
                      sample_cutoff, whitney_decompose)

log = logging.getLogger(__name__)

REPORT_SCHEMA = "report_v1"
EPS = np.finfo(float).eps


class HypothesisError(ValueError):
    """A finiteness hypothesis failed its refinement test."""

    def __init__(self, message: str, probe: DivergenceProbe | None = None):
        super().__init__(message)
        self.probe = probe


@dataclass(frozen=True)
class RunTolerances:
    divergence_factor: float = DEFAULT_DIVERGENCE_FACTOR
    uncovered_warn: float = 0.05
    decay_tol: float = 1e-4
    tau_ker: float | None = None
    symbol: str = "discrete"

    def __post_init__(self):
        for name in ("divergence_factor", "uncovered_warn", "decay_tol"):
            if getattr(self, name) < 0:
                raise ValueError(f"tolerance {name} must be >= 0")
        if self.tau_ker is not None and self.tau_ker < 0:
            raise ValueError("tau_ker override must be >= 0")


# --------------------------------------------------------------------------
# per-cube majorants

@dataclass(frozen=True, eq=False)
class Piece:
    index: int
    cube: WhitneyCube
    window: tuple[slice, ...]
    u_q: np.ndarray = field(repr=False)
    v_q: np.ndarray = field(repr=False)
    f_lp: float
    f_plus_lp: float
    f_nonnegative: bool
    roundtrip_residual: float
    tau_ker: float
    tau_pos: float
    margin: float
    grad_m_u: float
    grad_m_v: float
    padding: int

    @property
    def ratio(self) -> float | None:
        """‖∇^m v_Q‖ / ‖∇^m u_Q‖, or None when u vanishes on the piece."""
        if self.grad_m_u == 0.0:
            return None
        return self.grad_m_v / self.grad_m_u

    def embed(self, domain, local: np.ndarray) -> GridFunction:
        out = np.zeros(domain.shape)
        out[self.window] = local
        return GridFunction(domain, out)

    def record(self) -> dict:
        return {"id": self.index, "generation": self.cube.generation,
                "center": list(self.cube.center), "side": self.cube.side,
                "grad_m_u": self.grad_m_u, "grad_m_v": self.grad_m_v, "ratio": self.ratio,
                "f_lp": self.f_lp, "f_plus_lp": self.f_plus_lp,
                "f_nonnegative": self.f_nonnegative, "tau_pos": self.tau_pos,
                "margin": self.margin}


def work_window(q: WhitneyCube, shape, m: int) -> tuple[slice, ...]:
    """Support window of the wide cutoff plus m+1 zero layers per side."""
    sl, _ = cutoff_window(q, shape, WIDE_PROFILE.outer)
    return tuple(slice(max(s.start - (m + 1), 0), min(s.stop + (m + 1), n))
                 for s, n in zip(sl, shape))


def _embed_local(window, sub_window, values, shape):
    """Place ``values`` (defined on sub_window) into an array over ``window``."""
    out = np.zeros(tuple(w.stop - w.start for w in window))
    loc = tuple(slice(s.start - w.start, s.stop - w.start) for s, w in zip(sub_window, window))
    out[loc] = values
    return out


def _lp(values: np.ndarray, h: float, p: float) -> float:
    return (float(np.sum(np.abs(values) ** p)) * h ** values.ndim) ** (1.0 / p)


def _majorize(u_loc: np.ndarray, zeta_loc: np.ndarray, q: WhitneyCube, index: int,
              window, m: int, ps, tol: RunTolerances) -> list[Piece]:
    """Majorant of one piece; the arrays are shared, the norms are taken for each p."""
    h = q.spacing
    mult = build_multiplier(u_loc.shape, h, m, scale=q.side, symbol=tol.symbol,
                            decay_tol=tol.decay_tol)
    f = mult.invert_torus(mult.pad(u_loc))
    back = mult.crop(mult.apply_torus(f))
    residual = float(np.max(np.abs(back - u_loc))) if u_loc.size else 0.0
    f_plus = np.maximum(f, 0.0)
    g = mult.crop(mult.apply_torus(f_plus))
    v_loc = zeta_loc * g
    tau_ker = tol.tau_ker if tol.tau_ker is not None else max(mult.tau_ker, mult.rounding_floor)
    f_plus_l1 = float(np.sum(f_plus)) * h ** u_loc.ndim
    tau_pos = tau_ker * mult.kernel_peak * f_plus_l1 + residual
    margin = float(np.min(v_loc - np.maximum(u_loc, 0.0)))
    fscale = float(np.max(np.abs(f))) if f.size else 0.0
    f_nonneg = bool(f.min() >= -mult.rounding_floor * fscale)
    du = gradient_magnitude(u_loc, h, m)
    dv = gradient_magnitude(v_loc, h, m)
    # |f|^p once per p, on the nonzero entries only (most of the torus is padding)
    f_nz = f[f != 0.0]
    f_abs, f_pos = np.abs(f_nz), f_nz > 0.0
    vol = h ** u_loc.ndim
    pieces = []
    for p in ps:
        pw = f_abs ** p
        pieces.append(Piece(
            index=index, cube=q, window=window, u_q=u_loc, v_q=v_loc,
            f_lp=(float(pw.sum()) * vol) ** (1 / p),
            f_plus_lp=(float(pw[f_pos].sum()) * vol) ** (1 / p), f_nonnegative=f_nonneg,
            roundtrip_residual=residual, tau_ker=tau_ker, tau_pos=tau_pos, margin=margin,
            grad_m_u=_lp(du, h, p), grad_m_v=_lp(dv, h, p), padding=mult.padding,
        ))
    return pieces


def majorant_piece(u_q: GridFunction, q: WhitneyCube, params: SobolevParams,
                   tolerances: RunTolerances | None = None, index: int = 0) -> Piece:
    """Nonnegative majorant v_Q >= max(0, u_Q) of a piece supported in 4/3 Q."""
    params.require_bessel_route()
    tol = tolerances or RunTolerances()
    shape = u_q.domain.shape
    # u_Q may only be nonzero where the standard cutoff is positive
    inner, eta = sample_cutoff(q, shape, STANDARD_PROFILE)
    mask_in = np.zeros(shape, dtype=bool)
    mask_in[inner] = eta > 0
    if np.any(u_q.values[~mask_in]):
        raise ValueError("u_Q is not supported in the open 4/3-dilated cube")
    window = work_window(q, shape, params.m)
    zw, zeta = sample_cutoff(q, shape, WIDE_PROFILE)
    zeta_loc = _embed_local(window, zw, zeta, shape)
    return _majorize(u_q.values[window].copy(), zeta_loc, q, index, window,
                     params.m, (params.p,), tol)[0]


def piece_norm_bound(piece: Piece) -> float | None:
    return piece.ratio


def interpolation_check(u_q, q: WhitneyCube, p: float, k: int, m: int) -> float | None:
    """Empirical A in ‖∇^k u_Q‖ <= A l(Q)^{m-k} ‖∇^m u_Q‖; None if the top norm is zero."""
    if not 0 <= k <= m:
        raise ValueError("need 0 <= k <= m")
    values = u_q.values if isinstance(u_q, GridFunction) else np.asarray(u_q, float)
    h = q.spacing
    top = _lp(gradient_magnitude(values, h, m), h, p)
    if top == 0.0:
        return None
    if k == m:
        return 1.0
    return _lp(gradient_magnitude(values, h, k), h, p) / (q.side ** (m - k) * top)


# --------------------------------------------------------------------------
# global decomposition

@dataclass(eq=False)
class DecompositionReport:
    params: SobolevParams
    u: GridFunction
    u1: GridFunction
    u2: GridFunction
    v: GridFunction
    decomp: WhitneyDecomposition
    cutoffs: CutoffFamily
    pieces: list[Piece]
    norms_u: NormBundle
    norms_u1: NormBundle
    norms_u2: NormBundle
    c: float | None
    min_u1: float
    min_u2: float
    residual: float
    majorization_margin: float
    tau_ker: float
    tau_pos: float
    tau_glob: float
    overlap_4_3: int
    overlap_5_3: int
    uncovered_fraction: float
    hardy: DivergenceProbe | None
    warnings: list[str] = field(default_factory=list)

    @property
    def max_piece_ratio(self) -> float | None:
        ratios = [r for r in (pc.ratio for pc in self.pieces) if r is not None]
        return max(ratios) if ratios else None

    def checks(self) -> dict[str, tuple[bool, float, float]]:
        """name -> (passed, measured, bound)."""
        usup = self.u.sup_norm()
        pos = [pc.margin + pc.tau_pos for pc in self.pieces]
        return {
            "exact_splitting": (self.residual <= 1e-12 * usup, self.residual, 1e-12 * usup),
            "u1_nonnegative": (self.min_u1 >= -self.tau_glob, self.min_u1, -self.tau_glob),
            "u2_nonnegative": (self.min_u2 >= -self.tau_glob, self.min_u2, -self.tau_glob),
            "majorization": (self.majorization_margin >= -self.tau_glob,
                             self.majorization_margin, -self.tau_glob),
            "piece_majorization": (all(x >= 0 for x in pos), min(pos, default=0.0), 0.0),
            "c_finite": (self.c is None or math.isfinite(self.c),
                         self.c if self.c is not None else 0.0, math.inf),
        }

    def to_dict(self) -> dict:
        return {
            "schema": REPORT_SCHEMA,
            "params": self.params.to_dict(),
            "domain": self.u.domain.descriptor(),
            "finite_width": {"width": self.u.domain.width, "finite": math.isfinite(self.u.domain.width)},
            "n_cubes": len(self.pieces),
            "cubes_per_generation": {str(k): v for k, v in self.decomp.counts_per_generation().items()},
            "uncovered_fraction": self.uncovered_fraction,
            "overlap": {"4/3": self.overlap_4_3, "5/3": self.overlap_5_3},
            "norms": {"u": self.norms_u.to_dict(), "u1": self.norms_u1.to_dict(),
                      "u2": self.norms_u2.to_dict()},
            "c": self.c,
            "min_u1": self.min_u1,
            "min_u2": self.min_u2,
            "identity_residual": self.residual,
            "majorization_margin": self.majorization_margin,
            "tolerances": {"tau_ker": self.tau_ker, "tau_pos": self.tau_pos,
                           "tau_glob": self.tau_glob},
            "max_piece_ratio": self.max_piece_ratio,
            "hypotheses": {
                "hardy_value": self.norms_u.hardy_value,
                "hardy_growth": self.hardy.growth if self.hardy else None,
                "hardy_diverging": self.hardy.diverging if self.hardy else None,
            },
            "checks": {k: {"passed": ok, "measured": val, "bound": b}
                       for k, (ok, val, b) in self.checks().items()},
            "pieces": [pc.record() for pc in self.pieces],
            "warnings": list(self.warnings),
        }


def check_hardy(u: GridFunction, params: SobolevParams, factor: float,
                fine: GridFunction | None = None) -> DivergenceProbe:
    probe = hardy_probe(u, params, factor, fine=fine)
    if probe.diverging:
        raise HypothesisError(
            f"Hardy hypothesis violated: the integral of |u|^p d^({params.hardy_exponent:g}) "
            f"grows by a factor {probe.growth:.3g} (> {factor:g}) when h is halved, so it "
            f"is treated as infinite and the decomposition is refused", probe)
    return probe


def ancona_decompose(u: GridFunction, params: SobolevParams,
                     decomp: WhitneyDecomposition | None = None,
                     cutoffs: CutoffFamily | None = None,
                     tolerances: RunTolerances | None = None, *,
                     workers: int = 1, gate: bool = True,
                     fine: GridFunction | None = None) -> DecompositionReport:
    """Split u into u1 - u2 with u1, u2 >= 0 (up to the certified tolerance).

    ``fine`` optionally supplies u on the refined grid for the Hardy gate;
    otherwise u.refine() is used.
    """
    return ancona_decompose_many(u, [params], decomp, cutoffs, tolerances,
                                 workers=workers, gate=gate, fine=fine)[0]


def ancona_decompose_many(u: GridFunction, params_list, decomp=None, cutoffs=None,
                          tolerances: RunTolerances | None = None, *,
                          workers: int = 1, gate: bool = True,
                          fine: GridFunction | None = None) -> list[DecompositionReport]:
    """One report per parameter set. The majorant depends only on m, so all
    entries must share it and the per-cube transforms run once."""
    params_list = list(params_list)
    if not params_list:
        raise ValueError("need at least one parameter set")
    m = params_list[0].m
    if any(pr.m != m for pr in params_list):
        raise ValueError("all parameter sets must share the same m")
    for pr in params_list:
        pr.require_bessel_route()
    tol = tolerances or RunTolerances()
    dom = u.domain
    if not u.vanishes_outside():
        raise ValueError("u must vanish outside the domain")
    if gate and fine is None:
        fine = u.refine()
    hardy = [check_hardy(u, pr, tol.divergence_factor, fine) if gate else None
             for pr in params_list]

    decomp = decomp or whitney_decompose(dom)
    cutoffs = cutoffs or build_cutoffs(decomp, STANDARD_PROFILE)
    warnings = []
    if decomp.uncovered_fraction > tol.uncovered_warn:
        msg = (f"uncovered fraction {decomp.uncovered_fraction:.3f} exceeds "
               f"{tol.uncovered_warn:g}; mass next to the boundary is not majorized by cubes")
        warnings.append(msg)
        log.warning(msg)

    shape = dom.shape
    ps = tuple(pr.p for pr in params_list)

    def job(i: int) -> list[Piece]:
        q = decomp.cubes[i]
        window = work_window(q, shape, m)
        eta_loc = _embed_local(window, cutoffs.windows[i], cutoffs.values[i], shape)
        zw, zeta = sample_cutoff(q, shape, WIDE_PROFILE)
        zeta_loc = _embed_local(window, zw, zeta, shape)
        u_loc = eta_loc * u.values[window]
        return _majorize(u_loc, zeta_loc, q, i, window, m, ps, tol)

    idx = range(len(decomp.cubes))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            per_cube = list(ex.map(job, idx))
    else:
        per_cube = [job(i) for i in idx]

    v = np.zeros(shape)
    for pcs in per_cube:  # fixed lexicographic order
        v[pcs[0].window] += pcs[0].v_q
    ring = dom.interior_mask & ~decomp.covered_mask
    u1 = v + np.where(ring, np.maximum(u.values, 0.0), 0.0)
    u2 = u1 - u.values

    ov53 = overlap_count(decomp, 5 / 3)
    first = [pcs[0] for pcs in per_cube]
    tau_pos = max((pc.tau_pos for pc in first), default=0.0)
    tau_ker = max((pc.tau_ker for pc in first), default=0.0)
    tau_glob = ov53 * tau_pos + 2 * EPS * float(np.max(np.abs(u1), initial=0.0))

    residual = float(np.max(np.abs(u.values - (u1 - u2)), initial=0.0))
    covered = decomp.covered_mask & dom.interior_mask
    maj = u1 - np.maximum(u.values, 0.0)
    maj_margin = float(maj[covered].min()) if covered.any() else 0.0
    gf1, gf2, gv = GridFunction(dom, u1), GridFunction(dom, u2), GridFunction(dom, v)

    reports = []
    for j, (pr, hp) in enumerate(zip(params_list, hardy)):
        nb_u = norm_bundle(u, pr, probe=False)
        nb_1 = norm_bundle(gf1, pr, probe=False)
        nb_2 = norm_bundle(gf2, pr, probe=False)
        c = max(nb_1.total, nb_2.total) / nb_u.total if nb_u.total > 0 else None
        if hp is not None:
            nb_u = NormBundle(nb_u.m, nb_u.p, nb_u.s, nb_u.seminorms, nb_u.total, hp.coarse, hp)
        reports.append(DecompositionReport(
            params=pr, u=u, u1=gf1, u2=gf2, v=gv, decomp=decomp, cutoffs=cutoffs,
            pieces=[pcs[j] for pcs in per_cube],
            norms_u=nb_u, norms_u1=nb_1, norms_u2=nb_2, c=c,
            min_u1=float(u1.min()), min_u2=float(u2.min()), residual=residual,
            majorization_margin=maj_margin, tau_ker=tau_ker, tau_pos=tau_pos, tau_glob=tau_glob,
            overlap_4_3=decomp.overlap_bound, overlap_5_3=ov53,
            uncovered_fraction=decomp.uncovered_fraction, hardy=hp, warnings=list(warnings),
        ))
    return reports


# --------------------------------------------------------------------------
# the seminorm chain

CHAIN_LINES = (
    "|grad^k v|^p weighted",
    "|sum_Q grad^k v_Q|^p weighted",
    "sum_Q |grad^k v_Q|^p l^s",
    "sum_Q |grad^m v_Q|^p l^((m-k)p+s)",
    "sum_Q |grad^m v_Q|^p l^s",
    "sum_Q |grad^m u_Q|^p l^s",
    "sum_r sum_Q |grad^r u|^p_(4/3 Q) l^(-(m-r)p+s)",
    "|u|^p hardy-weighted + |grad^m u|^p weighted",
)


@dataclass(frozen=True)
class ChainRow:
    k: int
    lines: list[float]

    @property
    def step_constants(self) -> list[float | None]:
        out = []
        for a, b in zip(self.lines[:-1], self.lines[1:]):
            out.append(None if b == 0.0 else a / b)
        return out

    @property
    def end_constant(self) -> float | None:
        return None if self.lines[-1] == 0.0 else self.lines[0] / self.lines[-1]

    def constants(self) -> list[float | None]:
        return self.step_constants + [self.end_constant]

    def to_dict(self) -> dict:
        return {"k": self.k, "lines": dict(zip(CHAIN_LINES, self.lines)),
                "step_constants": self.step_constants, "end_constant": self.end_constant}


def seminorm_chain_report(u: GridFunction, params: SobolevParams,
                          decomp: WhitneyDecomposition,
                          report: DecompositionReport) -> list[ChainRow]:
    """Evaluate each line of the global seminorm estimate for k = 0..m (p-th powers)."""
    dom, h = u.domain, u.domain.spacing
    m, p, s = params.m, params.p, params.s
    sides = [pc.cube.side for pc in report.pieces]
    vol = dom.cell_volume

    def local_p(values, k):
        return float(np.sum(gradient_magnitude(values, h, k) ** p)) * vol

    gm_v = [local_p(pc.v_q, m) for pc in report.pieces]
    gm_u = [local_p(pc.u_q, m) for pc in report.pieces]
    u_grad_p = [gradient_magnitude(u.values, h, r) ** p for r in range(m + 1)]
    region_masks = []
    for i in range(len(report.pieces)):
        region_masks.append((report.cutoffs.windows[i], report.cutoffs.values[i] > 0))
    line6 = 0.0
    for r in range(m + 1):
        for (w, msk), l in zip(region_masks, sides):
            line6 += float(np.sum(u_grad_p[r][w][msk])) * vol * l ** (-(m - r) * p + s)
    line7 = (weighted_power_sum(u.values, dom, p, params.hardy_exponent)
             + weighted_power_sum(u_grad_p[m] ** (1 / p), dom, p, s))
    line4 = sum(g * l ** s for g, l in zip(gm_v, sides))
    line5 = sum(g * l ** s for g, l in zip(gm_u, sides))

    rows = []
    for k in range(m + 1):
        line0 = weighted_power_sum(gradient_magnitude(report.v.values, h, k), dom, p, s)
        line1 = _sum_of_piece_gradients(report.pieces, dom, k, p, s)
        line2 = sum(local_p(pc.v_q, k) * l ** s for pc, l in zip(report.pieces, sides))
        line3 = sum(g * l ** ((m - k) * p + s) for g, l in zip(gm_v, sides))
        rows.append(ChainRow(k, [line0, line1, line2, line3, line4, line5, line6, line7]))
    return rows


def _sum_of_piece_gradients(pieces, dom, k, p, s) -> float:
    """Weighted p-th power of |Σ_Q ∇^k v_Q|, summing partials before the magnitude."""
    h = dom.spacing
    idx = None
    acc = None
    for pc in pieces:
        ids, comps = derivative_arrays(pc.v_q, h, k)
        if acc is None:
            idx = ids
            acc = [np.zeros(dom.shape) for _ in ids]
        for a, cpt in zip(acc, comps):
            a[pc.window] += cpt
    if acc is None:
        return 0.0
    if k == 0:
        mag = np.abs(acc[0])
    else:
        kf = math.factorial(k)
        tot = np.zeros(dom.shape)
        for alpha, a in zip(idx, acc):
            tot += kf / math.prod(math.factorial(x) for x in alpha) * a * a
        mag = np.sqrt(tot)
    return weighted_power_sum(mag, dom, p, s)


# --------------------------------------------------------------------------
# compact-support approximation

@dataclass(frozen=True, eq=False)
class Approximation:
    u_n: GridFunction
    generation: int
    error: float
    norm_u: float
    tail_hardy_mass: float

    @property
    def relative_error(self) -> float:
        return self.error / self.norm_u if self.norm_u > 0 else 0.0


def check_approximation_hypotheses(u: GridFunction, params: SobolevParams, factor: float,
                                   fine: GridFunction | None = None) -> tuple[DivergenceProbe, DivergenceProbe]:
    fine = fine if fine is not None else u.refine()
    hp = check_hardy(u, params, factor, fine)
    gu = GridFunction(u.domain, gradient_magnitude(u.values, u.domain.spacing, params.m))
    gf = GridFunction(fine.domain, gradient_magnitude(fine.values, fine.domain.spacing, params.m))
    gp = divergence_probe(gu, params.p, params.s, factor, fine=gf)
    if gp.diverging:
        raise HypothesisError(
            f"hypothesis violated: the weighted integral of |grad^{params.m} u|^p with weight "
            f"d^{params.s:g} grows by {gp.growth:.3g} (> {factor:g}) under refinement", gp)
    return hp, gp


def approximate_compact_support(u: GridFunction, params: SobolevParams, n: int,
                                decomp: WhitneyDecomposition | None = None,
                                cutoffs: CutoffFamily | None = None,
                                tolerances: RunTolerances | None = None, *,
                                normalize: bool = True, gate: bool = True,
                                fine: GridFunction | None = None) -> Approximation:
    """u_n = Σ_{gen(Q) <= n} φ_Q u, compactly supported inside Ω.

    With ``normalize`` the weights are φ_Q = η_Q / Σ_Q' η_Q' (a partition of
    unity on the covered set); otherwise the plain cutoffs η_Q are summed.
    """
    tol = tolerances or RunTolerances()
    if gate:
        check_approximation_hypotheses(u, params, tol.divergence_factor, fine)
    dom = u.domain
    decomp = decomp or whitney_decompose(dom)
    cutoffs = cutoffs or build_cutoffs(decomp, STANDARD_PROFILE)
    weight = np.zeros(dom.shape)
    for q, w, val in zip(decomp.cubes, cutoffs.windows, cutoffs.values):
        if q.generation <= n:
            weight[w] += val
    if normalize:
        total = cutoffs.total()
        weight = np.divide(weight, total, out=np.zeros_like(weight), where=total > 0)
    u_n = GridFunction(dom, weight * u.values)
    diff = u.values - u_n.values
    err = float(sum(seminorms(diff, dom, params)))
    norm_u = float(sum(seminorms(u.values, dom, params)))
    tail = 0.0
    for q in decomp.cubes:
        if q.generation > n:
            region = np.zeros(dom.shape, dtype=bool)
            region[q.index_slices()] = True
            tail += weighted_power_sum(u.values, dom, params.p, params.hardy_exponent, region)
    return Approximation(u_n, n, err, norm_u, tail)
