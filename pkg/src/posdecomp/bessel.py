"""Bessel potentials (1 - l^2 Δ)^{-m/2} as Fourier multipliers on zero-padded
periodic grids.

The default symbol uses the eigenvalues of the 3-point discrete Laplacian in
place of |ξ|^2. Writing 1 - l^2 Δ_h = c (I - P) with P a nonnegative averaging
operator of norm < 1, the inverse power is a positive series in P, so the
discrete kernel is nonnegative on any torus. The continuum symbol is kept as
an option.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy import fft as sfft

from .grid import GridFunction, gradient_magnitude

SYMBOLS = ("discrete", "continuum")
FFT_WORKERS = -1


def _laplacian_eigenvalues(padded_shape, spacing: float, symbol: str) -> np.ndarray:
    """-Δ symbol on the rfftn frequency grid."""
    ndim = len(padded_shape)
    total = np.zeros(tuple(padded_shape[:-1]) + (padded_shape[-1] // 2 + 1,))
    for b, n in enumerate(padded_shape):
        if b == ndim - 1:
            k = np.arange(n // 2 + 1)
        else:
            k = np.fft.fftfreq(n) * n
        if symbol == "discrete":
            lam = (2.0 / spacing * np.sin(np.pi * k / n)) ** 2
        else:
            lam = (2.0 * np.pi * k / (n * spacing)) ** 2
        shp = [1] * ndim
        shp[b] = lam.size
        total = total + lam.reshape(shp)
    return total


MAX_TORUS_CELLS = 1 << 25


@dataclass(frozen=True, eq=False)
class BesselMultiplier:
    order: int
    shape: tuple[int, ...]
    spacing: float
    scale: float
    padding: int
    padded_shape: tuple[int, ...]
    symbol_kind: str
    symbol: np.ndarray = field(repr=False)
    kernel_peak: float = 0.0
    tau_ker: float = 0.0
    tail_ratio: float = 0.0

    @property
    def ndim(self) -> int:
        return len(self.shape)

    @property
    def size(self) -> int:
        return int(np.prod(self.padded_shape))

    @property
    def rounding_floor(self) -> float:
        """Relative FFT rounding allowance, eps * log2(size)."""
        return np.finfo(float).eps * max(math.log2(self.size), 1.0)

    # padded-torus primitives -------------------------------------------
    def pad(self, a: np.ndarray) -> np.ndarray:
        a = np.asarray(a, dtype=float)
        if a.shape != self.shape:
            raise ValueError(f"array shape {a.shape} != multiplier grid {self.shape}")
        if _touches_edge(a):
            raise ValueError("support touches the padding margin; wrap-around would corrupt the result")
        return np.pad(a, [(self.padding, m - n - self.padding)
                          for n, m in zip(self.shape, self.padded_shape)])

    def crop(self, a: np.ndarray) -> np.ndarray:
        p = self.padding
        return a[tuple(slice(p, p + n) for n in self.shape)]

    def apply_torus(self, a: np.ndarray) -> np.ndarray:
        return _irfftn(_rfftn(a) * self.symbol, self.padded_shape)

    def invert_torus(self, a: np.ndarray) -> np.ndarray:
        if self.symbol_kind == "discrete" and self.order % 2 == 0:
            # (1 - l^2 Δ_h)^{m/2} is a local stencil, exact on the torus
            out = np.asarray(a, dtype=float)
            for _ in range(self.order // 2):
                out = out - self.scale ** 2 * _torus_laplacian(out, self.spacing)
            return out
        return _irfftn(_rfftn(a) / self.symbol, self.padded_shape)

    def full_symbol(self) -> np.ndarray:
        """Symbol on the complex fftn frequency grid."""
        lam = np.zeros(self.padded_shape)
        for b, n in enumerate(self.padded_shape):
            k = np.fft.fftfreq(n) * n
            if self.symbol_kind == "discrete":
                lb = (2.0 / self.spacing * np.sin(np.pi * k / n)) ** 2
            else:
                lb = (2.0 * np.pi * k / (n * self.spacing)) ** 2
            shp = [1] * self.ndim
            shp[b] = n
            lam = lam + lb.reshape(shp)
        return (1.0 + self.scale ** 2 * lam) ** (-self.order / 2.0)

    def kernel(self) -> np.ndarray:
        """G_m sampled on the padded torus, centred at index 0 (unit mass)."""
        return _kernel(self.symbol, self.padded_shape, self.spacing)


def _rfftn(a):
    return sfft.rfftn(a, workers=FFT_WORKERS)


def _irfftn(a, shape):
    return sfft.irfftn(a, s=shape, workers=FFT_WORKERS)


def _padded_shape(shape, pad: int) -> tuple[int, ...]:
    """Smallest FFT-friendly lengths with at least ``pad`` zero cells on each side."""
    return tuple(sfft.next_fast_len(n + 2 * pad, real=True) for n in shape)


def _torus_laplacian(a: np.ndarray, h: float) -> np.ndarray:
    out = np.zeros_like(a)
    for b in range(a.ndim):
        out += np.roll(a, 1, axis=b) - 2.0 * a + np.roll(a, -1, axis=b)
    return out / (h * h)


def _touches_edge(a: np.ndarray) -> bool:
    for b in range(a.ndim):
        if np.any(np.take(a, 0, axis=b)) or np.any(np.take(a, -1, axis=b)):
            return True
    return False


def _kernel(symbol, padded_shape, spacing) -> np.ndarray:
    return _irfftn(symbol, padded_shape) / spacing ** len(padded_shape)


def _tail_ratio(kernel: np.ndarray, pad: int) -> float:
    """max |K| at torus max-norm distance >= pad cells from the origin, over the peak."""
    far = np.zeros(kernel.shape, dtype=bool)
    for b, n in enumerate(kernel.shape):
        idx = np.arange(n)
        dist = np.minimum(idx, n - idx)
        shp = [1] * kernel.ndim
        shp[b] = n
        far |= (dist >= pad).reshape(shp)
    peak = float(kernel.max())
    return float(np.abs(kernel[far]).max()) / peak if far.any() else 0.0


def build_multiplier(shape, spacing: float, order: int, scale: float = 1.0,
                     padding: int | None = None, symbol: str = "discrete",
                     decay_tol: float = 1e-12, max_steps: int = 24,
                     max_cells: int = MAX_TORUS_CELLS) -> BesselMultiplier:
    """Multiplier (1 + scale^2 |ξ|^2)^{-order/2} for fields of ``shape``.

    The padding starts at scale/spacing * ln(1/decay_tol) / 2 cells per side (at
    least 8) and grows by 1.25 until the delta probe falls below ``decay_tol``
    of its peak at the margin. ``tau_ker`` records the most negative kernel value over the peak.
    The continuum symbol aliases into an algebraic tail, so it usually needs a
    looser ``decay_tol``; a torus above ``max_cells`` points raises instead of
    exhausting memory.
    """
    shape = tuple(int(n) for n in shape)
    return _build_cached(shape, float(spacing), int(order), float(scale), padding, symbol,
                         float(decay_tol), int(max_steps), int(max_cells))


@lru_cache(maxsize=256)
def _build_cached(shape, spacing, order, scale, padding, symbol, decay_tol, max_steps, max_cells):
    if order < 1:
        raise ValueError("Bessel order must be >= 1")
    if symbol not in SYMBOLS:
        raise ValueError(f"symbol must be one of {SYMBOLS}")
    if not (spacing > 0 and scale > 0):
        raise ValueError("spacing and scale must be positive")
    if not decay_tol > 0:
        raise ValueError("decay_tol must be positive")
    # the kernels decay like exp(-r / scale)
    pad = padding if padding is not None else max(8, math.ceil(0.5 * scale / spacing * math.log(1 / decay_tol)))
    for _ in range(max_steps + 1):
        padded = _padded_shape(shape, pad)
        if math.prod(padded) > max_cells:
            raise RuntimeError(f"padded torus {padded} exceeds {max_cells} points before the kernel "
                               f"tail fell below {decay_tol}; loosen decay_tol")
        lam = _laplacian_eigenvalues(padded, spacing, symbol)
        sym = (1.0 + scale ** 2 * lam) ** (-order / 2.0)
        ker = _kernel(sym, padded, spacing)
        tail = _tail_ratio(ker, pad)
        if tail < decay_tol or padding is not None:
            break
        pad = math.ceil(1.25 * pad)
    else:
        raise RuntimeError(f"kernel did not decay below {decay_tol} after {max_steps} enlargements")
    peak = float(ker.max())
    tau = max(0.0, -float(ker.min())) / peak
    sym.setflags(write=False)
    return BesselMultiplier(order, shape, spacing, scale, pad, padded, symbol, sym, peak, tau, tail)


def multiplier_for(u: GridFunction, order: int, **kw) -> BesselMultiplier:
    return build_multiplier(u.domain.shape, u.domain.spacing, order, **kw)


@dataclass(frozen=True, eq=False)
class TorusField:
    """A field on a multiplier's padded torus.

    (1 - l^2 Δ)^{m/2} u is not compactly supported for odd m, so inverted
    fields keep their tails here instead of being cropped.
    """

    values: np.ndarray
    mult: BesselMultiplier

    def restrict(self) -> np.ndarray:
        return self.mult.crop(self.values)

    def lp_norm(self, p: float) -> float:
        vol = self.mult.spacing ** self.mult.ndim
        return (float(np.sum(np.abs(self.values) ** p)) * vol) ** (1.0 / p)

    def l1_norm(self) -> float:
        return float(np.sum(np.abs(self.values))) * self.mult.spacing ** self.mult.ndim


def _to_torus(f, mult: BesselMultiplier) -> np.ndarray:
    if isinstance(f, TorusField):
        if f.mult.padded_shape != mult.padded_shape:
            raise ValueError("torus field belongs to a different multiplier grid")
        return f.values
    return mult.pad(f.values if isinstance(f, GridFunction) else np.asarray(f, dtype=float))


def bessel_apply(f, mult: BesselMultiplier):
    """G_m * f restricted to the original grid.

    ``f`` is a GridFunction or array on the original grid (zero-padded, and
    rejected if its support touches the margin) or a TorusField.
    """
    out = mult.crop(mult.apply_torus(_to_torus(f, mult)))
    return f.with_values(out) if isinstance(f, GridFunction) else out


def bessel_invert(u, mult: BesselMultiplier) -> TorusField:
    """(1 - l^2 Δ)^{m/2} u on the padded torus."""
    return TorusField(mult.invert_torus(_to_torus(u, mult)), mult)


def positive_part(f):
    if isinstance(f, TorusField):
        return TorusField(np.maximum(f.values, 0.0), f.mult)
    if isinstance(f, GridFunction):
        return f.with_values(np.maximum(f.values, 0.0))
    return np.maximum(np.asarray(f, dtype=float), 0.0)


def delta_probe(mult: BesselMultiplier) -> tuple[np.ndarray, float]:
    """Kernel centred in the original grid (unit mass) and its certified τ_ker."""
    delta = np.zeros(mult.padded_shape)
    centre = tuple(mult.padding + n // 2 for n in mult.shape)
    delta[centre] = 1.0 / mult.spacing ** mult.ndim
    torus = mult.apply_torus(delta)
    tau = max(0.0, -float(torus.min())) / float(torus.max())
    return mult.crop(torus), tau


def _sobolev_norm_all(values: np.ndarray, h: float, m: int, p: float) -> float:
    vol = h ** values.ndim
    return sum((float(np.sum(gradient_magnitude(values, h, k) ** p)) * vol) ** (1 / p)
               for k in range(m + 1))


def norm_equivalence_report(u: GridFunction, mult: BesselMultiplier, p: float) -> tuple[float, float]:
    """(‖u‖_{W^{m,p}} / ‖f‖_{L^p}, reciprocal) with f = (1 - l^2 Δ)^{m/2} u.

    Both norms are taken over the whole padded torus.
    """
    if p <= 1:
        raise ValueError("norm equivalence needs p > 1")
    if not np.any(u.values):
        raise ValueError("zero input has no norm ratio")
    upad = mult.pad(u.values)
    f_norm = TorusField(mult.invert_torus(upad), mult).lp_norm(p)
    u_norm = _sobolev_norm_all(upad, mult.spacing, mult.order, p)
    r = u_norm / f_norm
    return r, 1.0 / r


__all__ = [
    "BesselMultiplier", "TorusField", "build_multiplier", "multiplier_for", "bessel_apply", "bessel_invert",
    "positive_part", "delta_probe", "norm_equivalence_report",
]
