"""Dyadic Whitney cubes of a GridDomain and the scaled cutoff family.

Cubes are handled in grid-index units: a cube of generation g has
``side_cells = S0 / 2**g`` cells and owns the half-open index box
``[corner, corner + side_cells)`` on every axis.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

import numpy as np

from .grid import GridDomain, GridFunction

DILATIONS = (Fraction(1), Fraction(4, 3), Fraction(5, 3))


@dataclass(frozen=True)
class WhitneyCube:
    generation: int
    corner: tuple[int, ...]
    side_cells: int
    spacing: float
    origin: tuple[float, ...]
    dist: float

    @property
    def ndim(self) -> int:
        return len(self.corner)

    @property
    def side(self) -> float:
        return self.side_cells * self.spacing

    @property
    def diam(self) -> float:
        return self.side * math.sqrt(self.ndim)

    @property
    def center(self) -> tuple[float, ...]:
        return tuple(o + (a + self.side_cells / 2) * self.spacing
                     for o, a in zip(self.origin, self.corner))

    @property
    def center_index(self) -> tuple[float, ...]:
        return tuple(a + self.side_cells / 2 for a in self.corner)

    def index_slices(self) -> tuple[slice, ...]:
        return tuple(slice(a, a + self.side_cells) for a in self.corner)

    def dilated_bounds(self, dilation) -> list[tuple[int, int]]:
        """Index range [lo, hi) of grid points in the half-open dilated cube."""
        d = Fraction(dilation).limit_denominator(1000)
        s = self.side_cells
        out = []
        for a in self.corner:
            lo = Fraction(a) + Fraction(s) * (1 - d) / 2
            hi = Fraction(a) + Fraction(s) * (1 + d) / 2
            out.append((math.ceil(lo), math.ceil(hi)))
        return out

    def sort_key(self):
        return (self.generation, self.center_index)


@dataclass(frozen=True, eq=False)
class WhitneyDecomposition:
    domain: GridDomain
    cubes: list[WhitneyCube]
    uncovered_fraction: float
    overlap_bound: int
    min_side_cells: int
    covered_mask: np.ndarray = field(repr=False)
    root_corner: tuple[int, ...] = ()
    root_side_cells: int = 0

    def counts_per_generation(self) -> dict[int, int]:
        out: dict[int, int] = {}
        for q in self.cubes:
            out[q.generation] = out.get(q.generation, 0) + 1
        return dict(sorted(out.items()))

    @property
    def max_generation(self) -> int:
        return max((q.generation for q in self.cubes), default=-1)


def _root_cube(domain: GridDomain) -> tuple[tuple[int, ...], int]:
    idx = np.nonzero(domain.interior_mask)
    lo = [int(i.min()) for i in idx]
    hi = [int(i.max()) for i in idx]
    # the root cube starts one cell before the first interior point, which
    # aligns it with the boundary of box-like domains
    corner = tuple(a - 1 for a in lo)
    extent = max(b - a + 2 for a, b in zip(corner, hi))
    side = 1
    while side < extent:
        side *= 2
    return corner, side


def _cube_min_distance(domain: GridDomain, corner, side) -> float | None:
    """Min of the distance field over the cube's points, or None if any point is
    outside the grid or the cube holds no interior point at all."""
    sl = []
    partial = False
    for a, n in zip(corner, domain.shape):
        lo, hi = max(a, 0), min(a + side, n)
        if lo >= hi:
            return None
        if lo != a or hi != a + side:
            partial = True
        sl.append(slice(lo, hi))
    block = domain.interior_mask[tuple(sl)]
    if not block.any():
        return None
    if partial or not block.all():
        return 0.0
    return float(domain.distance[tuple(sl)].min())


def whitney_decompose(domain: GridDomain, min_side_cells: int = 2) -> WhitneyDecomposition:
    """Recursive dyadic subdivision with acceptance diam Q <= dist(Q, ∂Ω) <= 4 diam Q."""
    if min_side_cells < 2:
        raise ValueError("min_side_cells must be >= 2")
    if not domain.interior_mask.any():
        raise ValueError("cannot decompose an empty domain")
    corner, side = _root_cube(domain)
    sqrt_n = math.sqrt(domain.ndim)
    h = domain.spacing
    accepted: list[WhitneyCube] = []
    stack = [(0, corner, side)]
    while stack:
        gen, c, s = stack.pop()
        dist = _cube_min_distance(domain, c, s)
        if dist is None:
            continue
        diam = s * h * sqrt_n
        if diam <= dist <= 4.0 * diam:
            accepted.append(WhitneyCube(gen, tuple(c), s, h, domain.origin, dist))
            continue
        half = s // 2
        if half < min_side_cells:
            continue
        for offs in np.ndindex(*(2,) * domain.ndim):
            stack.append((gen + 1, tuple(a + o * half for a, o in zip(c, offs)), half))
    accepted.sort(key=WhitneyCube.sort_key)

    covered = np.zeros(domain.shape, dtype=bool)
    for q in accepted:
        covered[q.index_slices()] = True
    n_int = domain.n_interior
    uncovered = float(np.count_nonzero(domain.interior_mask & ~covered)) / n_int
    decomp = WhitneyDecomposition(domain, accepted, uncovered, 0, min_side_cells,
                                  covered, corner, side)
    object.__setattr__(decomp, "overlap_bound", overlap_count(decomp, Fraction(4, 3)))
    return decomp


def overlap_count(decomp: WhitneyDecomposition, dilation=Fraction(4, 3)) -> int:
    """Max over grid points of the number of half-open dilated cubes containing it."""
    d = Fraction(dilation).limit_denominator(1000)
    if d not in DILATIONS:
        raise ValueError(f"dilation must be one of 1, 4/3, 5/3, got {dilation}")
    counts = np.zeros(decomp.domain.shape, dtype=np.int32)
    for q in decomp.cubes:
        sl = tuple(slice(max(lo, 0), max(min(hi, n), 0))
                   for (lo, hi), n in zip(q.dilated_bounds(d), decomp.domain.shape))
        counts[sl] += 1
    return int(counts.max()) if counts.size else 0


# --------------------------------------------------------------------------
# cutoffs

def exp_transition(t: np.ndarray) -> np.ndarray:
    """e^{1 - 1/(1 - t^2)} on [0, 1): 1 at t=0, flat to all orders at t=1.

    Only C^1 where it meets the plateau (second derivative -2 at t=0).
    """
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    inside = t < 1.0
    ti = t[inside]
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - ti * ti))
    return out


def _flat(t: np.ndarray) -> np.ndarray:
    out = np.zeros_like(t)
    pos = t > 0
    out[pos] = np.exp(-1.0 / t[pos])
    return out


def smooth_transition(t: np.ndarray) -> np.ndarray:
    """C^∞ step from 1 at t=0 to 0 at t=1, flat to all orders at both ends."""
    t = np.clip(np.asarray(t, dtype=float), 0.0, 1.0)
    a, b = _flat(1.0 - t), _flat(t)
    return a / (a + b)


@dataclass(frozen=True)
class BumpProfile:
    """Per-axis profile: 1 for r <= inner, transition on (inner, outer), 0 beyond.

    ``r`` is the axis offset from the cube centre in units of l(Q)/2. The
    cutoff is the product of the per-axis profiles.
    """

    inner: float = 1.0
    outer: float = 4.0 / 3.0
    transition: Callable[[np.ndarray], np.ndarray] = smooth_transition

    def __call__(self, r) -> np.ndarray:
        r = np.abs(np.asarray(r, dtype=float))
        out = np.zeros_like(r)
        out[r <= self.inner] = 1.0
        shell = (r > self.inner) & (r < self.outer)
        out[shell] = self.transition((r[shell] - self.inner) / (self.outer - self.inner))
        return out

    def evaluate(self, x) -> np.ndarray:
        """Reference cutoff at points ``x`` (last axis = coordinates, in units of l/2)."""
        x = np.asarray(x, dtype=float)
        return np.prod(self(x), axis=-1)


STANDARD_PROFILE = BumpProfile(1.0, 4.0 / 3.0)
WIDE_PROFILE = BumpProfile(4.0 / 3.0, 5.0 / 3.0)
EXP_PROFILE = BumpProfile(1.0, 4.0 / 3.0, exp_transition)


@dataclass(frozen=True, eq=False)
class CutoffFamily:
    """Sampled η_Q for every cube, stored on each cube's support window."""

    decomp: WhitneyDecomposition
    profile: BumpProfile
    windows: list[tuple[slice, ...]]
    values: list[np.ndarray]

    def full(self, i: int) -> GridFunction:
        out = np.zeros(self.decomp.domain.shape)
        out[self.windows[i]] = self.values[i]
        return GridFunction(self.decomp.domain, out)

    def total(self) -> np.ndarray:
        out = np.zeros(self.decomp.domain.shape)
        for w, v in zip(self.windows, self.values):
            out[w] += v
        return out


def cutoff_window(q: WhitneyCube, shape, outer: float) -> tuple[tuple[slice, ...], list[np.ndarray]]:
    """Support window of the cutoff and per-axis normalized offsets r (units of l/2)."""
    half = q.side_cells / 2
    sl, rs = [], []
    for a, n in zip(q.corner, shape):
        c = a + half
        lo = max(int(math.floor(c - outer * half)), 0)
        hi = min(int(math.ceil(c + outer * half)) + 1, n)
        sl.append(slice(lo, hi))
        rs.append((np.arange(lo, hi) - c) / half)
    return tuple(sl), rs


def sample_cutoff(q: WhitneyCube, shape, profile: BumpProfile) -> tuple[tuple[slice, ...], np.ndarray]:
    sl, rs = cutoff_window(q, shape, profile.outer)
    vals = np.ones(tuple(len(r) for r in rs))
    for b, r in enumerate(rs):
        shp = [1] * len(rs)
        shp[b] = len(r)
        vals = vals * profile(r).reshape(shp)
    return sl, vals


def build_cutoffs(decomp: WhitneyDecomposition, profile: BumpProfile = STANDARD_PROFILE) -> CutoffFamily:
    if not decomp.cubes:
        raise ValueError("decomposition has no cubes")
    probe = profile(np.linspace(0.0, profile.outer + 0.5, 257))
    if np.any(probe < 0) or np.any(probe > 1) or not np.all(np.isfinite(probe)):
        raise ValueError("cutoff profile must take values in [0, 1]")
    windows, values = [], []
    for q in decomp.cubes:
        sl, vals = sample_cutoff(q, decomp.domain.shape, profile)
        windows.append(sl)
        values.append(vals)
    return CutoffFamily(decomp, profile, windows, values)


def cube_restrict(u: GridFunction, q_index: int, cutoffs: CutoffFamily) -> GridFunction:
    """u_Q = η_Q u on the full grid."""
    if u.domain is not cutoffs.decomp.domain and u.domain.shape != cutoffs.decomp.domain.shape:
        raise ValueError("function and decomposition live on different grids")
    out = np.zeros(u.domain.shape)
    w = cutoffs.windows[q_index]
    out[w] = cutoffs.values[q_index] * u.values[w]
    return GridFunction(u.domain, out)
