import dataclasses
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from optolev.config import CoatingStack, Layer, MaterialProps, table1
from optolev.optics import (UnstableResonatorError, cavity_linewidth, circulating_power, clipping_loss,
                            derive_pair, effective_roc, mode_geometry, peak_intensity, radiation_force,
                            resonator_g, stack_reflectivity, thermal_load)

LAMBDA = 1.064e-6


def _mat(n):
    return MaterialProps(73e9, 0.17, 1e-6, n, 2200.0)


def brute_force_reflectivity(indices, thicknesses, n_sub, wavelength, n0=1.0):
    """Scalar 2x2 characteristic-matrix product written out element by element."""
    a, b, c, d = 1.0 + 0j, 0j, 0j, 1.0 + 0j
    for n, t in zip(indices, thicknesses):
        ph = 2 * math.pi * n * t / wavelength
        m11, m12, m21, m22 = math.cos(ph), 1j * math.sin(ph) / n, 1j * n * math.sin(ph), math.cos(ph)
        a, b, c, d = a * m11 + b * m21, a * m12 + b * m22, c * m11 + d * m21, c * m12 + d * m22
    bb = a + b * n_sub
    cc = c + d * n_sub
    r = (n0 * bb - cc) / (n0 * bb + cc)
    return abs(r) ** 2


def test_effective_roc_examples():
    mir = table1().mirror
    assert effective_roc(mir, "upper") == pytest.approx(20.69e-3, rel=1e-3)
    assert effective_roc(mir, "lower") == pytest.approx(-30e-3)
    flat = dataclasses.replace(mir, coating=dataclasses.replace(
        mir.coating, substrate=dataclasses.replace(mir.substrate, refractive_index=1.0)))
    assert effective_roc(flat, "upper") == pytest.approx(30e-3)
    with pytest.raises(ValueError):
        effective_roc(dataclasses.replace(mir, hr_side="upper"), "lower")


def test_resonator_g_examples():
    cfg = table1()
    g_l = resonator_g(cfg.lower, -30e-3)
    assert g_l == pytest.approx((0.2083, 4.1667), rel=5e-4)
    assert g_l[0] * g_l[1] == pytest.approx(0.868, rel=1e-3)
    g_u = resonator_g(cfg.upper, 30e-3 / 1.45)
    assert g_u == pytest.approx((-0.6667, -1.4167), rel=5e-4)
    assert g_u[0] * g_u[1] == pytest.approx(0.944, rel=1e-3)
    assert resonator_g(dataclasses.replace(cfg.lower, length=0.0), -30e-3) == (1.0, 1.0)
    with pytest.raises(ZeroDivisionError):
        resonator_g(cfg.lower, 0.0)


def test_mode_geometry_examples():
    lower, upper = derive_pair(table1())
    assert lower.spot_radius_geometric == pytest.approx(0.141e-3, rel=1e-2)
    assert upper.spot_radius_geometric == pytest.approx(0.22e-3, rel=1e-2)
    # override from the bundled config
    assert upper.spot_radius_levitated == pytest.approx(0.19e-3)
    with pytest.raises(UnstableResonatorError):
        mode_geometry(table1().lower, (0.0, 0.0), LAMBDA)


@settings(max_examples=200)
@given(st.floats(-3, 3), st.floats(-3, 3), st.floats(1e-3, 1.0))
def test_mode_self_consistency(g1, g2, length):
    prod = g1 * g2
    if not 0.02 < prod < 0.98 or abs(g1 + g2 - 2 * prod) < 1e-3:
        return
    cav = dataclasses.replace(table1().lower, length=length)
    w0, w_lev, w_fix = mode_geometry(cav, (g1, g2), LAMBDA)
    z_r = math.pi * w0**2 / LAMBDA
    denom = g1 + g2 - 2 * prod
    # distance from each mirror to the waist
    z_fix = length * g2 * (1 - g1) / denom
    z_lev = length * g1 * (1 - g2) / denom
    assert z_fix + z_lev == pytest.approx(length, rel=1e-9)
    assert w0 * math.sqrt(1 + (z_fix / z_r) ** 2) == pytest.approx(w_fix, rel=1e-9)
    assert w0 * math.sqrt(1 + (z_lev / z_r) ** 2) == pytest.approx(w_lev, rel=1e-9)


def test_stack_closed_forms():
    bare = CoatingStack((), _mat(1.45))
    assert stack_reflectivity(bare, LAMBDA).power_reflectivity == pytest.approx(((1.45 - 1) / 2.45) ** 2, rel=1e-12)
    assert stack_reflectivity(bare, LAMBDA).power_reflectivity == pytest.approx(0.0337, rel=2e-3)
    n1 = 2.07
    qw = CoatingStack((Layer(_mat(n1), LAMBDA / (4 * n1)),), _mat(1.45))
    expected = ((1.45 - n1**2) / (1.45 + n1**2)) ** 2
    assert stack_reflectivity(qw, LAMBDA).power_reflectivity == pytest.approx(expected, rel=1e-12)
    assert expected == pytest.approx(0.245, rel=5e-3)


def test_table1_stack_against_brute_force():
    stack = table1().mirror.coating
    got = stack_reflectivity(stack, LAMBDA)
    ref = brute_force_reflectivity([l.material.refractive_index for l in stack.layers],
                                   [l.thickness for l in stack.layers], stack.substrate.refractive_index, LAMBDA)
    assert 0.9 < got.power_reflectivity < 1.0
    assert got.power_reflectivity == pytest.approx(ref, abs=1e-12)
    assert got.power_reflectivity + got.power_transmissivity <= 1.0 + 1e-15


@settings(max_examples=100)
@given(st.lists(st.tuples(st.floats(1.0, 3.5), st.floats(1e-9, 1e-6)), max_size=30),
       st.floats(1.0, 3.5), st.floats(4e-7, 2e-6))
def test_stack_matches_brute_force(layers, n_sub, wavelength):
    stack = CoatingStack(tuple(Layer(_mat(n), t) for n, t in layers), _mat(n_sub))
    ref = brute_force_reflectivity([n for n, _ in layers], [t for _, t in layers], n_sub, wavelength)
    got = stack_reflectivity(stack, wavelength)
    assert got.power_reflectivity == pytest.approx(ref, abs=1e-12)
    assert 0.0 <= got.power_reflectivity <= 1.0 + 1e-12


def test_circulating_power_examples():
    cfg = table1()
    assert circulating_power(cfg.lower) == pytest.approx(413.7, rel=1e-3)
    assert circulating_power(cfg.upper) == pytest.approx(127.3, rel=1e-3)
    assert circulating_power(dataclasses.replace(cfg.lower, detuning_norm=1e12)) < 1e-20


@given(st.floats(0.0, 10.0))
def test_circulating_power_even_and_peaked(d):
    cav = table1().lower
    plus = circulating_power(dataclasses.replace(cav, detuning_norm=d))
    minus = circulating_power(dataclasses.replace(cav, detuning_norm=-d))
    assert plus == minus
    assert plus <= circulating_power(dataclasses.replace(cav, detuning_norm=0.0))


def test_radiation_force_examples():
    assert radiation_force(420) == pytest.approx(2.80e-6, rel=2e-3)
    assert radiation_force(130) == pytest.approx(0.867e-6, rel=2e-3)
    assert radiation_force(0.0) == 0.0


def test_linewidth_examples():
    cfg = table1()
    kappa = cavity_linewidth(cfg.lower)
    assert kappa == pytest.approx(9.92e7, rel=2e-3)
    assert kappa / (4 * math.pi) == pytest.approx(7.9e6, rel=5e-3)
    assert cavity_linewidth(cfg.upper) == pytest.approx(1.885e8, rel=1e-3)
    doubled = dataclasses.replace(cfg.lower, finesse=200)
    assert cavity_linewidth(doubled) == pytest.approx(kappa / 2, rel=1e-14)


def test_clipping_examples():
    chk = clipping_loss(0.35e-3, 0.14e-3, 100)
    assert chk.loss == pytest.approx(3.7e-6, rel=2e-2)
    assert chk.bound == pytest.approx(0.0628, rel=1e-3)
    assert chk.passed
    assert clipping_loss(1e-3, 1e-3).loss == pytest.approx(math.exp(-2))
    assert clipping_loss(1e-3, 1e-6).loss == 0.0


@given(st.floats(1e-5, 1e-3), st.floats(1e-5, 1e-3), st.floats(1.01, 2.0))
def test_clipping_monotone(r, w, f):
    assert clipping_loss(r * f, w).loss <= clipping_loss(r, w).loss
    assert clipping_loss(r, w * f).loss >= clipping_loss(r, w).loss
    if 1e-300 < clipping_loss(r * f, w).loss and clipping_loss(r, w).loss < 1.0:
        assert clipping_loss(r * f, w).loss < clipping_loss(r, w).loss


def test_peak_intensity_examples():
    assert peak_intensity(420, 0.14e-3) == pytest.approx(13.6e9, rel=5e-3)
    assert peak_intensity(130, 0.19e-3) == pytest.approx(2.29e9, rel=5e-3)
    assert peak_intensity(0.0, 1e-4) == 0.0


@given(st.floats(0.0, 1e4), st.floats(1e-6, 1e-2))
def test_peak_intensity_inverse(p, w):
    assert peak_intensity(p, w) * math.pi * w**2 / 2 == pytest.approx(p, rel=1e-14, abs=1e-300)


def test_thermal_load_examples():
    cfg = table1()
    # absorbed power for exactly 420 W circulating
    assert 0.34e-6 * 420 == pytest.approx(0.143e-3, rel=1e-2)
    p_abs, d_t = thermal_load(cfg, derive_pair(cfg))
    assert p_abs == pytest.approx(0.34e-6 * derive_pair(cfg)[0].circulating_power)
    assert d_t == pytest.approx(18.0, rel=0.03)
    lossless = cfg.replace(**{"mirror.absorption": 0.0})
    assert thermal_load(lossless, derive_pair(lossless)) == (0.0, 0.0)


def test_derived_invariants():
    for d in derive_pair(table1()):
        assert 0 < d.g_product < 1
        assert d.circulating_power > 0 and d.radiation_force > 0
        assert min(d.waist_radius, d.spot_radius_levitated, d.spot_radius_fixed) > 0
        assert np.isfinite(d.pole_freq)
