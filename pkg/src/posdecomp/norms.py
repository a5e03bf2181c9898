"""Weighted Sobolev seminorms, Hardy functionals and local norms."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np
from scipy import ndimage

from .grid import (DivergenceProbe, GridDomain, GridFunction, divergence_probe,
                   gradient_magnitude, weighted_power_sum)

DEFAULT_DIVERGENCE_FACTOR = 1.5


@dataclass(frozen=True)
class SobolevParams:
    """Smoothness m, integrability p and distance-weight exponent s."""

    m: int
    p: float
    s: float = 0.0

    def __post_init__(self):
        if int(self.m) != self.m or self.m < 0:
            raise ValueError(f"m must be a nonnegative integer, got {self.m}")
        if not self.p >= 1:
            raise ValueError(f"p must be >= 1, got {self.p}")
        object.__setattr__(self, "m", int(self.m))
        object.__setattr__(self, "p", float(self.p))
        object.__setattr__(self, "s", float(self.s))

    @property
    def hardy_exponent(self) -> float:
        return -self.m * self.p + self.s

    def require_bessel_route(self) -> None:
        if self.m < 1:
            raise ValueError("the decomposition needs m >= 1")
        if not self.p > 1:
            raise ValueError(f"the Bessel-potential route needs p > 1, got p = {self.p}")

    def to_dict(self) -> dict:
        return {**asdict(self), "hardy_exponent": self.hardy_exponent}


@dataclass(frozen=True)
class NormBundle:
    m: int
    p: float
    s: float
    seminorms: list[float]
    total: float
    hardy_value: float
    hardy_probe: DivergenceProbe | None

    @property
    def hardy_diverging(self) -> bool:
        return self.hardy_probe is not None and self.hardy_probe.diverging

    def to_dict(self) -> dict:
        probe = None
        if self.hardy_probe is not None:
            probe = {"coarse": self.hardy_probe.coarse, "fine": self.hardy_probe.fine,
                     "growth": self.hardy_probe.growth, "factor": self.hardy_probe.factor,
                     "diverging": self.hardy_probe.diverging}
        return {"m": self.m, "p": self.p, "s": self.s, "seminorms": list(self.seminorms),
                "total": self.total, "hardy_value": self.hardy_value, "hardy_probe": probe}


def seminorms(values: np.ndarray, domain: GridDomain, params: SobolevParams) -> list[float]:
    """‖∇^k u‖_{L^p(Ω, d^s)} for k = 0..m."""
    h, p = domain.spacing, params.p
    return [weighted_power_sum(gradient_magnitude(values, h, k), domain, p, params.s) ** (1 / p)
            for k in range(params.m + 1)]


def hardy_functional(u: GridFunction, params: SobolevParams) -> float:
    """∫_Ω |u|^p d^{-mp+s}."""
    return weighted_power_sum(u.values, u.domain, params.p, params.hardy_exponent)


def hardy_probe(u: GridFunction, params: SobolevParams,
                factor: float = DEFAULT_DIVERGENCE_FACTOR,
                fine: GridFunction | None = None) -> DivergenceProbe:
    return divergence_probe(u, params.p, params.hardy_exponent, factor, fine=fine)


def norm_bundle(u: GridFunction, params: SobolevParams, probe: bool = True,
                factor: float = DEFAULT_DIVERGENCE_FACTOR) -> NormBundle:
    parts = seminorms(u.values, u.domain, params)
    hp = hardy_probe(u, params, factor) if probe else None
    hv = hp.coarse if hp is not None else hardy_functional(u, params)
    return NormBundle(params.m, params.p, params.s, parts, float(sum(parts)), hv, hp)


def loc_norm(u: GridFunction, subdomain: GridDomain, m: int, p: float) -> float:
    """Unweighted W^{m,p}(ω) norm for ω compactly inside Ω.

    ω must sit on the same grid and keep every point at least one cell away
    from the boundary (no axis neighbour outside Ω).
    """
    dom = u.domain
    if subdomain.shape != dom.shape or subdomain.spacing != dom.spacing:
        raise ValueError("subdomain must live on the same grid as u")
    core = ndimage.binary_erosion(dom.interior_mask, border_value=0)
    if np.any(subdomain.interior_mask & ~core):
        raise ValueError("subdomain touches the boundary of the domain")
    SobolevParams(m, p)
    region = subdomain.interior_mask
    return float(sum(
        weighted_power_sum(gradient_magnitude(u.values, dom.spacing, k), dom, p, 0.0, region) ** (1 / p)
        for k in range(m + 1)))


def hardy_ratio(u: GridFunction, params: SobolevParams) -> float:
    """H(u)^{1/p} / ‖∇^m u‖_{L^p(Ω, d^s)}."""
    top = seminorms(u.values, u.domain, params)[-1]
    if top == 0.0:
        raise ValueError("‖∇^m u‖ vanishes; Hardy ratio undefined")
    return hardy_functional(u, params) ** (1 / params.p) / top
