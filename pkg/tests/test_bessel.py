import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from posdecomp.bessel import (TorusField, bessel_apply, bessel_invert, build_multiplier,
                              delta_probe, norm_equivalence_report, positive_part)
from posdecomp.fields import make_field
from posdecomp.grid import build_domain


@pytest.fixture(scope="module")
def box():
    return build_domain("box", 1 / 32)


@pytest.mark.parametrize("m", [1, 2, 3])
@pytest.mark.parametrize("symbol", ["discrete", "continuum"])
def test_roundtrip(box, m, symbol):
    u = make_field(box, "random", seed=m)
    tol = 1e-12 if symbol == "discrete" else 1e-6
    mult = build_multiplier(box.shape, box.spacing, m, scale=0.25, symbol=symbol, decay_tol=tol)
    back = bessel_apply(bessel_invert(u, mult), mult)
    assert np.max(np.abs(back - u.values)) <= 1e-12 * u.sup_norm()


@pytest.mark.parametrize("m", [2, 4])
def test_stencil_inverse_agrees_with_spectral_division(m):
    dom = build_domain("interval", 1 / 128)
    u = make_field(dom, "random", seed=7)
    mult = build_multiplier(dom.shape, dom.spacing, m, scale=0.1)
    a = mult.pad(u.values)
    spectral = np.fft.irfft(np.fft.rfft(a) / mult.symbol, a.size)
    np.testing.assert_allclose(mult.invert_torus(a), spectral, atol=1e-9 * np.abs(spectral).max())


@pytest.mark.parametrize("ndim", [1, 2])
@pytest.mark.parametrize("m", [1, 2, 3])
def test_discrete_kernel_nonnegative_with_unit_mass(ndim, m):
    shape = (33,) * ndim
    mult = build_multiplier(shape, 1 / 32, m, scale=0.2)
    ker = mult.kernel()
    assert ker.min() >= -1e-15 * ker.max()
    assert ker.sum() * mult.spacing ** ndim == pytest.approx(1.0, rel=1e-12)
    assert mult.tail_ratio < 1e-12


def test_delta_probe_tau_small(box):
    for m in (1, 2, 3):
        mult = build_multiplier(box.shape, box.spacing, m)
        _, tau = delta_probe(mult)
        assert tau < 1e-6


@given(st.sampled_from([0.05, 0.1, 0.2]))
def test_1d_order_two_kernel_is_the_exponential(ell):
    # (1 - l^2 d^2/dx^2)^{-1} has kernel exp(-|x|/l) / (2l)
    h = 1 / 1024
    mult = build_multiplier((257,), h, 2, scale=ell)
    ker, _ = delta_probe(mult)
    x = (np.arange(257) - 128) * h
    exact = np.exp(-np.abs(x) / ell) / (2 * ell)
    np.testing.assert_allclose(ker, exact, rtol=2 * (h / ell) ** 2 + 1e-12)


def test_torus_field_keeps_tails():
    dom = build_domain("interval", 1 / 64)
    u = make_field(dom, "sin")
    mult = build_multiplier(dom.shape, dom.spacing, 1, scale=0.3)
    f = bessel_invert(u, mult)
    assert isinstance(f, TorusField)
    outside = np.ones(mult.padded_shape, dtype=bool)
    outside[mult.padding:mult.padding + dom.shape[0]] = False
    assert np.abs(f.values[outside]).max() > 1e-6  # odd order: nonlocal
    assert f.lp_norm(2) > np.sqrt(np.sum(f.restrict() ** 2) * dom.spacing)


def test_positive_part_of_torus_field_is_majorized():
    dom = build_domain("interval", 1 / 64)
    u = make_field(dom, "random", seed=3)
    mult = build_multiplier(dom.shape, dom.spacing, 3, scale=0.2)
    v = bessel_apply(positive_part(bessel_invert(u, mult)), mult)
    assert np.all(v >= -1e-13)
    assert np.all(v - np.maximum(u.values, 0) >= -1e-12)


def test_foreign_torus_field_rejected():
    dom = build_domain("interval", 1 / 64)
    u = make_field(dom, "sin")
    a = build_multiplier(dom.shape, dom.spacing, 1, scale=0.3)
    b = build_multiplier(dom.shape, dom.spacing, 1, scale=0.6)
    with pytest.raises(ValueError):
        bessel_apply(bessel_invert(u, a), b)


def test_runaway_padding_raises():
    with pytest.raises(RuntimeError, match="decay_tol"):
        build_multiplier((33, 33), 1 / 32, 1, scale=0.25, symbol="continuum", max_cells=1 << 20)


def test_support_touching_margin_rejected():
    mult = build_multiplier((16,), 0.1, 1)
    with pytest.raises(ValueError, match="margin"):
        mult.pad(np.ones(16))


def test_norm_equivalence_ratios_reciprocal(box):
    u = make_field(box, "random", seed=2)
    mult = build_multiplier(box.shape, box.spacing, 2, scale=0.25)
    r, inv = norm_equivalence_report(u, mult, 2.0)
    assert 0 < r < math.inf
    assert r * inv == pytest.approx(1.0)


@pytest.mark.parametrize("kw", [dict(order=0), dict(symbol="bogus"), dict(scale=-1.0)])
def test_bad_multiplier_arguments(kw):
    args = dict(shape=(8,), spacing=0.1, order=1)
    args.update(kw)
    with pytest.raises(ValueError):
        build_multiplier(**args)


@pytest.mark.parametrize("m", [1, 2, 3])
def test_nonnegative_input_stays_nonnegative(box, m):
    mult = build_multiplier(box.shape, box.spacing, m, scale=0.2)
    f = np.maximum(make_field(box, "random", seed=m).values, 0.0)
    out = bessel_apply(f, mult)
    assert out.min() >= -max(mult.tau_ker, mult.rounding_floor) * mult.kernel_peak * f.sum() * box.cell_volume


def test_norm_equivalence_ratio_stable_under_refinement():
    ratios = []
    for n in (32, 64):
        dom = build_domain("box", 1 / n)
        u = make_field(dom, "random", seed=1)
        ratios.append(norm_equivalence_report(u, build_multiplier(dom.shape, dom.spacing, 2, scale=0.25), 2.0)[0])
    assert ratios[1] == pytest.approx(ratios[0], rel=0.25)
