"""Reproducible test fields.

Every field is a *source*: a function of a GridDomain returning values on its
grid, so the same continuous function can be resampled on refined grids.
"""

from __future__ import annotations

import numpy as np

from .grid import GridDomain, GridFunction


def _pos(t):
    return np.clip(t, 0.0, None)


def defining_function(domain: GridDomain) -> np.ndarray:
    """Polynomial-type function, positive in Ω and zero on ∂Ω, roughly of size 1.

    Smooth (at least C^3) for the built-in kinds; rasterized masks fall back
    to a smoothstep of the distance field.
    """
    X = domain.coords()
    kind, prm = domain.kind, domain.params

    def unit_box(xs, lo=0.0, hi=1.0):
        out = np.ones(domain.shape)
        for x in xs:
            out = out * 4.0 * (x - lo) * (hi - x) / (hi - lo) ** 2
        return out

    if kind == "interval":
        return unit_box(X, prm["a"], prm["b"])
    if kind == "box":
        return unit_box(X, prm["lo"], prm["hi"])
    if kind in ("ball", "annulus"):
        c = prm["center"]
        r2 = sum((x - c) ** 2 for x in X)
        if kind == "ball":
            return (prm["radius"] ** 2 - r2) / prm["radius"] ** 2
        a, b = prm["r_in"] ** 2, prm["r_out"] ** 2
        return (r2 - a) * (b - r2) / ((b - a) / 2) ** 2
    if kind == "l_shape":
        x, y = X
        return unit_box(X) * 16.0 * (_pos(0.5 - x) ** 4 + _pos(0.5 - y) ** 4)
    if kind == "cusp":
        x, y = X
        return unit_box(X) * 4.0 * ((x - 0.5) ** 2 + _pos(0.5 - y) ** 4 - _pos(y - 0.5) ** 4)
    if kind == "punctured_box":
        pt = prm["point"]
        return unit_box(X) * 4.0 * sum((x - c) ** 2 for x, c in zip(X, pt))
    if kind == "slit_box":
        x, y = X
        return unit_box(X) * 4.0 * ((y - 0.5) ** 2 + _pos(0.5 - x) ** 4)
    t = np.clip(domain.distance / (0.5 * domain.width), 0.0, 1.0)
    return t ** 3 * (10 - 15 * t + 6 * t * t)


def random_bumps(seed: int, ndim: int, n_bumps: int = 4, envelope_power: int = 3):
    """Seeded sum of Gaussians, multiplied by defining_function ** envelope_power.

    Amplitudes alternate in sign so the field changes sign in Ω.
    """
    rng = np.random.default_rng(seed)
    centers = rng.uniform(0.15, 0.85, size=(n_bumps, ndim))
    widths = rng.uniform(0.08, 0.2, size=n_bumps)
    amps = rng.uniform(0.5, 1.0, size=n_bumps) * np.where(np.arange(n_bumps) % 2 == 0, 1.0, -1.0)

    def source(domain: GridDomain) -> np.ndarray:
        if domain.ndim != ndim:
            raise ValueError("field dimension does not match the domain")
        X = domain.coords()
        g = np.zeros(domain.shape)
        for c, w, a in zip(centers, widths, amps):
            g += a * np.exp(-sum((x - ci) ** 2 for x, ci in zip(X, c)) / (2 * w * w))
        env = np.clip(defining_function(domain), 0.0, None) ** envelope_power
        return env * g

    return source


def sin_bump(frequency: int = 2, envelope_power: int = 2):
    """Product of sin(frequency π x_b) with the domain envelope; sign-changing."""
    def source(domain: GridDomain) -> np.ndarray:
        X = domain.coords()
        g = np.ones(domain.shape)
        for x in X:
            g = g * np.sin(frequency * np.pi * x)
        return np.clip(defining_function(domain), 0.0, None) ** envelope_power * g
    return source


def distance_power(alpha: float):
    """d_∂Ω(x)^alpha, the boundary-decay profile."""
    def source(domain: GridDomain) -> np.ndarray:
        return domain.distance ** alpha
    return source


def compact_bump(center, radius: float):
    """C^∞ bump exp(1 - 1/(1 - |x-c|^2/r^2)), supported in the ball B(c, r)."""
    def source(domain: GridDomain) -> np.ndarray:
        X = domain.coords()
        c = np.broadcast_to(np.asarray(center, float), (domain.ndim,))
        t2 = sum((x - ci) ** 2 for x, ci in zip(X, c)) / radius ** 2
        out = np.zeros(domain.shape)
        inside = t2 < 1
        out[inside] = np.exp(1.0 - 1.0 / (1.0 - t2[inside]))
        return out
    return source


def constant(value: float = 1.0):
    def source(domain: GridDomain) -> np.ndarray:
        return np.full(domain.shape, float(value))
    return source


FIELD_KINDS = ("random", "sin", "one", "dist_power", "bump")


def make_field(domain: GridDomain, kind: str = "random", seed: int = 0, alpha: float = 2.0,
               envelope_power: int = 3) -> GridFunction:
    if kind == "random":
        src = random_bumps(seed, domain.ndim, envelope_power=envelope_power)
    elif kind == "sin":
        src = sin_bump(envelope_power=envelope_power)
    elif kind == "one":
        src = constant(1.0)
    elif kind == "dist_power":
        src = distance_power(alpha)
    elif kind == "bump":
        c = np.array([np.mean(a[idx]) for a, idx in zip(domain.axes(), np.nonzero(domain.interior_mask))])
        src = compact_bump(c, 0.25 * domain.width)
    else:
        raise ValueError(f"unknown field kind {kind!r}; choose from {FIELD_KINDS}")
    return GridFunction.from_source(domain, src)
