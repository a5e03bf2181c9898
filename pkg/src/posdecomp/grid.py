"""Uniform grids, interior masks, distance fields, finite differences and
weighted quadrature.

Every domain lives on a vertex grid ``x_i = origin + i*h``. Functions are
stored on the full grid and are zero-extended outside the interior mask.
"""

from __future__ import annotations

import functools
import itertools
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import ndimage

from . import afld

DOMAIN_KINDS = (
    "interval", "box", "ball", "annulus", "l_shape", "cusp",
    "punctured_box", "slit_box", "from_mask_file",
)
BOUNDARY_CONVENTIONS = ("points", "faces")

# relative slack used when testing whether a grid point lies on a boundary
_GEOM_EPS = 1e-9


@dataclass(frozen=True, eq=False)
class GridDomain:
    ndim: int
    shape: tuple[int, ...]
    spacing: float
    origin: tuple[float, ...]
    interior_mask: np.ndarray
    distance: np.ndarray
    width: float
    kind: str = "mask"
    params: dict = field(default_factory=dict)
    boundary: str = "points"

    def __post_init__(self):
        self.interior_mask.setflags(write=False)
        self.distance.setflags(write=False)

    @property
    def cell_volume(self) -> float:
        return self.spacing ** self.ndim

    @property
    def n_interior(self) -> int:
        return int(self.interior_mask.sum())

    def axes(self) -> list[np.ndarray]:
        return [self.origin[b] + self.spacing * np.arange(n) for b, n in enumerate(self.shape)]

    def coords(self) -> list[np.ndarray]:
        """Coordinate arrays, one per axis, each of the grid's shape."""
        return np.meshgrid(*self.axes(), indexing="ij")

    def descriptor(self) -> dict:
        return {"kind": self.kind, "params": dict(self.params), "spacing": self.spacing,
                "shape": list(self.shape), "boundary": self.boundary}

    def refine(self) -> "GridDomain":
        """Same geometry at half the mesh width."""
        if self.kind in DOMAIN_KINDS and self.kind != "from_mask_file":
            return build_domain(self.kind, self.spacing / 2, boundary=self.boundary, **self.params)
        # rasterized masks: a fine point is interior iff all coarse points it
        # interpolates between are interior
        coarse = self.interior_mask
        fine_shape = tuple(2 * n - 1 for n in coarse.shape)
        fine = np.ones(fine_shape, dtype=bool)
        for offsets in itertools.product((0, 1), repeat=self.ndim):
            sl = tuple(slice(o, None, 2) for o in offsets)
            sub = coarse
            for b, o in enumerate(offsets):
                if o:
                    sub = np.minimum(np.take(sub, range(0, sub.shape[b] - 1), axis=b),
                                     np.take(sub, range(1, sub.shape[b]), axis=b))
            fine[sl] = sub
        return domain_from_mask(fine, self.spacing / 2, self.origin, boundary=self.boundary,
                                kind=self.kind, params=self.params)

    def index_of(self, point) -> tuple[int, ...]:
        point = np.broadcast_to(np.asarray(point, float), (self.ndim,))
        idx = np.rint((point - np.asarray(self.origin)) / self.spacing).astype(int)
        if np.any(idx < 0) or np.any(idx >= np.asarray(self.shape)):
            raise ValueError(f"point {tuple(point)} is outside the grid")
        return tuple(int(i) for i in idx)


@dataclass(frozen=True, eq=False)
class GridFunction:
    """Scalar field on a GridDomain.

    ``source`` optionally maps a GridDomain to values; when present it is used
    to resample the same continuous function on refined grids.
    """

    domain: GridDomain
    values: np.ndarray
    source: Callable[[GridDomain], np.ndarray] | None = None

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.shape != self.domain.shape:
            raise ValueError(f"values shape {vals.shape} != grid shape {self.domain.shape}")
        if not np.all(np.isfinite(vals)):
            raise ValueError("GridFunction values must be finite")
        object.__setattr__(self, "values", vals)

    @classmethod
    def from_source(cls, domain: GridDomain, source, zero_outside: bool = True) -> "GridFunction":
        vals = np.asarray(source(domain), dtype=float)
        if zero_outside:
            vals = np.where(domain.interior_mask, vals, 0.0)
        return cls(domain, vals, source)

    @classmethod
    def zeros(cls, domain: GridDomain) -> "GridFunction":
        return cls(domain, np.zeros(domain.shape))

    def with_values(self, values) -> "GridFunction":
        return GridFunction(self.domain, values)

    def vanishes_outside(self) -> bool:
        return not np.any(self.values[~self.domain.interior_mask])

    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.values))) if self.values.size else 0.0

    def scaled(self, lam: float) -> "GridFunction":
        src = None
        if self.source is not None:
            inner = self.source
            src = lambda dom: lam * np.asarray(inner(dom))  # noqa: E731
        return GridFunction(self.domain, lam * self.values, src)

    def refine(self, domain: GridDomain | None = None) -> "GridFunction":
        fine = domain if domain is not None else self.domain.refine()
        if self.source is not None:
            return GridFunction.from_source(fine, self.source)
        coords = [np.arange(n) / 2.0 for n in fine.shape]
        pts = np.meshgrid(*coords, indexing="ij")
        vals = ndimage.map_coordinates(self.values, pts, order=1, mode="constant", cval=0.0)
        return GridFunction(fine, np.where(fine.interior_mask, vals, 0.0))


@dataclass(frozen=True)
class MultiIndexGradient:
    order: int
    multi_indices: list[tuple[int, ...]]
    components: list[np.ndarray]
    domain: GridDomain

    def magnitude(self) -> np.ndarray:
        """Euclidean norm of the symmetric k-tensor, |∇^k u| per grid point."""
        if self.order == 0:
            return np.abs(self.components[0])
        total = np.zeros(self.domain.shape)
        kfact = math.factorial(self.order)
        for alpha, comp in zip(self.multi_indices, self.components):
            mult = kfact / math.prod(math.factorial(a) for a in alpha)
            total += mult * comp * comp
        return np.sqrt(total)


# --------------------------------------------------------------------------
# distance fields

def distance_transform(interior_mask, spacing: float, boundary: str = "points",
                       periodic: bool = False) -> np.ndarray:
    """Euclidean distance from interior grid points to the boundary.

    ``boundary="points"`` measures to the nearest non-interior grid point;
    ``boundary="faces"`` measures to the cell faces separating interior and
    exterior cells. Points beyond the array count as exterior unless
    ``periodic``. Exterior points get 0.
    """
    mask = np.asarray(interior_mask, dtype=bool)
    if mask.ndim not in (1, 2, 3):
        raise ValueError("only 1, 2 and 3 dimensions are supported")
    if not mask.any():
        raise ValueError("interior mask is empty")
    if boundary not in BOUNDARY_CONVENTIONS:
        raise ValueError(f"unknown boundary convention {boundary!r}")

    if periodic:
        if mask.all():
            raise ValueError("periodic mask without exterior points has no boundary")
        tiled = np.tile(mask, (3,) * mask.ndim)
        d = _distance_padded(tiled, spacing, boundary, pad=0)
        centre = tuple(slice(n, 2 * n) for n in mask.shape)
        return d[centre]
    return _distance_padded(mask, spacing, boundary, pad=1)


def _distance_padded(mask: np.ndarray, spacing: float, boundary: str, pad: int) -> np.ndarray:
    padded = np.pad(mask, pad, constant_values=False) if pad else mask
    if boundary == "points":
        d = ndimage.distance_transform_edt(padded, sampling=spacing)
    else:
        # half-step grid: odd indices are grid points, even ones are faces;
        # every exterior cell becomes a closed 3^N block of targets
        fine = np.zeros(tuple(2 * n + 1 for n in padded.shape), dtype=bool)
        fine[tuple(slice(1, None, 2) for _ in padded.shape)] = ~padded
        fine = ndimage.maximum_filter(fine, size=3, mode="constant", cval=False)
        d = ndimage.distance_transform_edt(~fine, sampling=spacing / 2)
        d = d[tuple(slice(1, None, 2) for _ in padded.shape)]
    if pad:
        d = d[tuple(slice(pad, -pad) for _ in mask.shape)]
    return np.where(mask, d, 0.0)


# --------------------------------------------------------------------------
# domain construction

def domain_from_mask(mask, spacing: float, origin=None, boundary: str = "points",
                     kind: str = "mask", params: dict | None = None) -> GridDomain:
    mask = np.array(mask, dtype=bool)
    if not mask.any():
        raise ValueError("domain has empty interior")
    if not spacing > 0:
        raise ValueError("spacing must be positive")
    ndim = mask.ndim
    if origin is None:
        origin = (0.0,) * ndim
    origin = tuple(float(o) for o in np.broadcast_to(np.asarray(origin, float), (ndim,)))
    dist = distance_transform(mask, spacing, boundary=boundary)
    return GridDomain(ndim=ndim, shape=tuple(mask.shape), spacing=float(spacing), origin=origin,
                      interior_mask=mask, distance=dist, width=float(dist.max()),
                      kind=kind, params=dict(params or {}), boundary=boundary)


def _unit_grid(ndim: int, spacing: float, shape, origin, lo: float, hi: float):
    if shape is None:
        n = int(math.floor((hi - lo) / spacing + _GEOM_EPS)) + 1
        shape = (n,) * ndim
        origin = (lo,) * ndim if origin is None else origin
    shape = tuple(int(n) for n in np.broadcast_to(np.asarray(shape), (ndim,)))
    if any(n < 3 for n in shape):
        raise ValueError("grid needs at least 3 points per axis")
    origin = (0.0,) * ndim if origin is None else origin
    origin = tuple(float(o) for o in np.broadcast_to(np.asarray(origin, float), (ndim,)))
    for b in range(ndim):
        top = origin[b] + (shape[b] - 1) * spacing
        if origin[b] > lo + _GEOM_EPS * spacing or top < hi - spacing - _GEOM_EPS * spacing:
            raise ValueError(
                f"domain extent [{lo}, {hi}] on axis {b} is outside the grid "
                f"[{origin[b]}, {top}]")
    axes = [origin[b] + spacing * np.arange(shape[b]) for b in range(ndim)]
    return shape, origin, np.meshgrid(*axes, indexing="ij")


def build_domain(kind: str, spacing: float, shape=None, origin=None,
                 boundary: str = "points", **params) -> GridDomain:
    """Rasterize one of the gallery domains on a vertex grid of width ``spacing``.

    Gallery (all parameters optional):

    interval      a=0, b=1
    box           ndim=2, lo=0, hi=1
    ball          ndim=2, center=0.5, radius=0.5
    annulus       ndim=2, center=0.5, r_in=0.2, r_out=0.5
    l_shape       (0,1)^2 minus [1/2,1)^2
    cusp          (0,1)^2 minus the spike y >= 1/2, |x-1/2| <= (y-1/2)^2
    punctured_box ndim=2, (0,1)^N minus the grid point nearest to ``point``
    slit_box      (0,1)^2 minus the segment y=1/2, x >= 1/2
    from_mask_file path=<AFLD mask file>
    """
    if kind not in DOMAIN_KINDS:
        raise ValueError(f"unknown domain kind {kind!r}; choose from {DOMAIN_KINDS}")
    if not (spacing is not None and spacing > 0) and kind != "from_mask_file":
        raise ValueError("spacing must be positive")
    eps = _GEOM_EPS * (spacing or 1.0)

    if kind == "from_mask_file":
        fld = afld.read_mask(params["path"])
        if spacing is not None and not math.isclose(spacing, fld.spacing, rel_tol=1e-12):
            raise ValueError(f"mask file spacing {fld.spacing} != requested {spacing}")
        return domain_from_mask(fld.values, fld.spacing, fld.origin, boundary=boundary,
                                kind=kind, params={"path": str(params["path"])})

    if kind == "interval":
        a, b = float(params.get("a", 0.0)), float(params.get("b", 1.0))
        if not a < b:
            raise ValueError("interval needs a < b")
        shape, origin, (x,) = _unit_grid(1, spacing, shape, origin, a, b)
        mask = (x > a + eps) & (x < b - eps)
        params = {"a": a, "b": b}
    elif kind == "box":
        ndim = int(params.get("ndim", 2))
        lo, hi = float(params.get("lo", 0.0)), float(params.get("hi", 1.0))
        shape, origin, X = _unit_grid(ndim, spacing, shape, origin, lo, hi)
        mask = np.ones(shape, dtype=bool)
        for x in X:
            mask &= (x > lo + eps) & (x < hi - eps)
        params = {"ndim": ndim, "lo": lo, "hi": hi}
    elif kind in ("ball", "annulus"):
        ndim = int(params.get("ndim", 2))
        c = float(params.get("center", 0.5))
        r_out = float(params.get("radius" if kind == "ball" else "r_out", 0.5))
        r_in = float(params.get("r_in", 0.2)) if kind == "annulus" else 0.0
        if not 0 <= r_in < r_out:
            raise ValueError("need 0 <= r_in < r_out")
        shape, origin, X = _unit_grid(ndim, spacing, shape, origin, c - r_out, c + r_out)
        r = np.sqrt(sum((x - c) ** 2 for x in X))
        mask = r < r_out - eps
        if kind == "annulus":
            mask &= r > r_in + eps
            params = {"ndim": ndim, "center": c, "r_in": r_in, "r_out": r_out}
        else:
            params = {"ndim": ndim, "center": c, "radius": r_out}
    elif kind == "l_shape":
        shape, origin, (x, y) = _unit_grid(2, spacing, shape, origin, 0.0, 1.0)
        mask = (x > eps) & (x < 1 - eps) & (y > eps) & (y < 1 - eps)
        mask &= ~((x >= 0.5 - eps) & (y >= 0.5 - eps))
        params = {}
    elif kind == "cusp":
        shape, origin, (x, y) = _unit_grid(2, spacing, shape, origin, 0.0, 1.0)
        mask = (x > eps) & (x < 1 - eps) & (y > eps) & (y < 1 - eps)
        spike = (y >= 0.5 - eps) & (np.abs(x - 0.5) <= np.clip(y - 0.5, 0, None) ** 2 + eps)
        mask &= ~spike
        params = {}
    elif kind == "punctured_box":
        ndim = int(params.get("ndim", 2))
        shape, origin, X = _unit_grid(ndim, spacing, shape, origin, 0.0, 1.0)
        mask = np.ones(shape, dtype=bool)
        for x in X:
            mask &= (x > eps) & (x < 1 - eps)
        point = np.broadcast_to(np.asarray(params.get("point", 0.5), float), (ndim,))
        idx = tuple(int(round((point[b] - origin[b]) / spacing)) for b in range(ndim))
        mask[idx] = False
        snapped = [origin[b] + idx[b] * spacing for b in range(ndim)]
        params = {"ndim": ndim, "point": snapped}
    else:  # slit_box
        shape, origin, (x, y) = _unit_grid(2, spacing, shape, origin, 0.0, 1.0)
        mask = (x > eps) & (x < 1 - eps) & (y > eps) & (y < 1 - eps)
        on_line = np.abs(y - 0.5) <= eps
        if not on_line.any():
            raise ValueError("slit_box needs y = 1/2 to be a grid line")
        mask &= ~(on_line & (x >= 0.5 - eps))
        params = {}

    return domain_from_mask(mask, spacing, origin, boundary=boundary, kind=kind, params=params)


# --------------------------------------------------------------------------
# finite differences

def multi_indices(ndim: int, k: int) -> list[tuple[int, ...]]:
    """Multi-indices of order k in dimension ndim, lexicographically descending."""
    out = []
    for combo in itertools.combinations_with_replacement(range(ndim), k):
        alpha = [0] * ndim
        for b in combo:
            alpha[b] += 1
        out.append(tuple(alpha))
    return out


@functools.lru_cache(maxsize=None)
def _axis_stencil(order: int) -> tuple[float, ...]:
    """Compact centered stencil of d^order/dx^order (unit spacing).

    Even orders are powers of [1, -2, 1]; odd orders add one [-1/2, 0, 1/2].
    """
    st = np.array([1.0])
    for _ in range(order // 2):
        st = np.convolve(st, [1.0, -2.0, 1.0])
    if order % 2:
        st = np.convolve(st, [-0.5, 0.0, 0.5])
    return tuple(st)


def _axis_derivative(a: np.ndarray, axis: int, order: int, h: float) -> np.ndarray:
    if order == 0:
        return a
    # correlate1d flips nothing: weights[i] multiplies a[x + i - centre]
    return ndimage.correlate1d(a, np.array(_axis_stencil(order)), axis=axis, mode="constant",
                               cval=0.0) / h ** order


def derivative_arrays(values: np.ndarray, h: float, k: int) -> tuple[list, list]:
    """All k-th order partials of a zero-extended array.

    ∂^α applies, per axis b, the compact centered stencil of order α_b.
    """
    if k < 0:
        raise ValueError("derivative order must be nonnegative")
    values = np.asarray(values, dtype=float)
    idx = multi_indices(values.ndim, k)
    comps = []
    for alpha in idx:
        out = values
        for b, a in enumerate(alpha):
            out = _axis_derivative(out, b, a, h)
        comps.append(out)
    return idx, comps


def gradient(u: GridFunction, k: int) -> MultiIndexGradient:
    """k-fold centered differences of the zero-extended function; k=0 is u."""
    if k < 0:
        raise ValueError("derivative order must be nonnegative")
    idx, comps = derivative_arrays(u.values, u.domain.spacing, k)
    return MultiIndexGradient(order=k, multi_indices=idx, components=comps, domain=u.domain)


def gradient_magnitude(values: np.ndarray, h: float, k: int) -> np.ndarray:
    idx, comps = derivative_arrays(values, h, k)
    if k == 0:
        return np.abs(values)
    kfact = math.factorial(k)
    total = np.zeros(values.shape)
    for alpha, comp in zip(idx, comps):
        total += kfact / math.prod(math.factorial(a) for a in alpha) * comp * comp
    return np.sqrt(total)


# --------------------------------------------------------------------------
# weighted quadrature

def weighted_power_sum(values: np.ndarray, domain: GridDomain, p: float, t: float = 0.0,
                       region: np.ndarray | None = None) -> float:
    """Midpoint rule for ∫ |f|^p d^t over the interior (or ``region`` within it)."""
    if p < 1:
        raise ValueError(f"exponent p must be >= 1, got {p}")
    sel = domain.interior_mask if region is None else (domain.interior_mask & region)
    f = np.abs(np.asarray(values)[sel])
    integrand = f ** p
    if t != 0.0:
        integrand = integrand * domain.distance[sel] ** t
    return float(np.sum(integrand)) * domain.cell_volume


def weighted_lp(f: GridFunction, p: float, weight_exponent: float = 0.0) -> float:
    """(Σ_interior |f|^p d^t h^N)^(1/p)."""
    return weighted_power_sum(f.values, f.domain, p, weight_exponent) ** (1.0 / p)


@dataclass(frozen=True)
class DivergenceProbe:
    """Two-resolution growth test for ∫|f|^p d^t.

    ``coarse``/``fine`` hold the integrals (p-th powers) at h and h/2.
    """

    coarse: float
    fine: float
    factor: float

    @property
    def growth(self) -> float:
        if self.coarse == 0.0:
            return 1.0 if self.fine == 0.0 else math.inf
        return self.fine / self.coarse

    @property
    def diverging(self) -> bool:
        return self.growth > self.factor


def divergence_probe(f: GridFunction, p: float, weight_exponent: float,
                     factor: float = 1.5, fine: GridFunction | None = None) -> DivergenceProbe:
    fine = fine if fine is not None else f.refine()
    return DivergenceProbe(weighted_power_sum(f.values, f.domain, p, weight_exponent),
                           weighted_power_sum(fine.values, fine.domain, p, weight_exponent),
                           factor)
