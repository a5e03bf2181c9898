import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from posdecomp.fields import make_field
from posdecomp.grid import GridFunction, build_domain, domain_from_mask
from posdecomp.norms import SobolevParams, hardy_ratio, loc_norm, norm_bundle, seminorms


@pytest.fixture(scope="module")
def interval():
    return build_domain("interval", 1 / 1024)


def test_distance_function_seminorms(interval):
    d = GridFunction(interval, interval.distance.copy())
    k0, k1 = seminorms(d.values, interval, SobolevParams(1, 2.0))
    assert k0 == pytest.approx(math.sqrt(1 / 12), rel=1e-4)
    assert k1 == pytest.approx(1.0, abs=2e-3)


@pytest.mark.parametrize("s", [0.0, 1.0, 2.5])
def test_weighted_seminorm_of_distance(interval, s):
    # ∫ d^2 d^s over (0,1) = 2 (1/2)^{s+3} / (s+3)
    d = GridFunction(interval, interval.distance.copy())
    k0 = seminorms(d.values, interval, SobolevParams(0, 2.0, s))[0]
    assert k0 ** 2 == pytest.approx(2 * 0.5 ** (s + 3) / (s + 3), rel=1e-3)


@given(st.integers(0, 10_000), st.sampled_from([1.5, 2.0, 3.0]))
def test_one_dimensional_hardy_constant(interval, seed, p):
    u = make_field(interval, "random", seed=seed)
    assert hardy_ratio(u, SobolevParams(1, p)) <= p / (p - 1) * (1 + 1e-3)


def test_norm_bundle_total_is_sum(interval):
    u = make_field(interval, "sin")
    nb = norm_bundle(u, SobolevParams(2, 2.0))
    assert nb.total == pytest.approx(sum(nb.seminorms))
    assert len(nb.seminorms) == 3
    assert not nb.hardy_diverging
    assert nb.to_dict()["hardy_probe"]["diverging"] is False


def test_constant_field_flags_hardy_divergence():
    dom = build_domain("interval", 1 / 128)
    nb = norm_bundle(make_field(dom, "one"), SobolevParams(1, 2.0))
    assert nb.hardy_diverging


def test_hardy_ratio_needs_nonzero_gradient(interval):
    with pytest.raises(ValueError):
        hardy_ratio(GridFunction.zeros(interval), SobolevParams(1, 2.0))


@pytest.mark.parametrize("m, p", [(-1, 2.0), (1.5, 2.0), (1, 0.5)])
def test_params_validation(m, p):
    with pytest.raises(ValueError):
        SobolevParams(m, p)


def test_bessel_route_needs_p_above_one():
    with pytest.raises(ValueError):
        SobolevParams(1, 1.0).require_bessel_route()
    assert SobolevParams(1, 1.0).hardy_exponent == -1.0


def test_loc_norm_on_inner_square():
    dom = build_domain("box", 1 / 64)
    inner = dom.interior_mask.copy()
    inner[:16] = inner[-16:] = False
    inner[:, :16] = inner[:, -16:] = False
    sub = domain_from_mask(inner, dom.spacing, dom.origin)
    u = GridFunction.from_source(dom, lambda D: np.ones(D.shape))
    # u = 1 on the inner square of side 33h: only the L^p part survives
    assert loc_norm(u, sub, 2, 2.0) == pytest.approx(33 / 64, rel=1e-12)


def test_loc_norm_rejects_boundary_contact():
    dom = build_domain("box", 1 / 16)
    u = make_field(dom, "sin")
    with pytest.raises(ValueError, match="boundary"):
        loc_norm(u, dom, 1, 2.0)


@pytest.mark.parametrize("s", [0.0, 1.5])
def test_seminorms_scale_with_the_domain(s):
    # u_λ(x) = u(x/λ) on λΩ: ‖∇^k u_λ‖ = λ^{(N + s - kp)/p} ‖∇^k u‖, here λ = 2
    p, lam = 2.0, 2.0
    small = build_domain("box", 1 / 32)
    big = build_domain("box", 2 / 32, hi=2.0)
    u = make_field(small, "random", seed=6)
    a = seminorms(u.values, small, SobolevParams(2, p, s))
    b = seminorms(u.values, big, SobolevParams(2, p, s))
    for k, (x, y) in enumerate(zip(a, b)):
        assert y == pytest.approx(lam ** ((2 + s - k * p) / p) * x, rel=1e-12)


def test_hardy_ratio_invariant_under_scalar_multiple(interval):
    u = make_field(interval, "random", seed=9)
    pr = SobolevParams(1, 3.0)
    assert hardy_ratio(u.scaled(7.5), pr) == pytest.approx(hardy_ratio(u, pr), rel=1e-12)
