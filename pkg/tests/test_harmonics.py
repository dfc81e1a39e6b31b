import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import binom

from alr.harmonics import (
    EVEN,
    ODD,
    InfiniteEnergyError,
    LayerDensity,
    LayeredHarmonicField,
    Mode,
    TruncationWarning,
    flux_jump,
    gradient_energy,
    interaction_coeff,
    interaction_quadrature,
    interaction_table,
    plasmon_wave,
    q_weighted_sum,
    reexpand_about_origin,
    shifted_trace_expansion,
    single_layer_energy,
    single_layer_solve,
)


def quad_energy(fld, r1, r2, nr=400, nt=256):
    """Tensor-product oracle: Gauss-Legendre in r, trapezoid in theta."""
    x, w = np.polynomial.legendre.leggauss(nr)
    r = 0.5 * (r2 - r1) * x + 0.5 * (r2 + r1)
    wr = 0.5 * (r2 - r1) * w
    t = 2 * np.pi * np.arange(nt) / nt
    z = r[:, None] * np.exp(1j * t[None, :])
    gx, gy = fld.gradient(z)
    dens = np.abs(gx) ** 2 + np.abs(gy) ** 2
    return float(np.sum(dens * (r * wr)[:, None]) * 2 * np.pi / nt)


def fd_gradient(fld, z, h=1e-6):
    gx = (fld(z + h) - fld(z - h)) / (2 * h)
    gy = (fld(z + 1j * h) - fld(z - 1j * h)) / (2 * h)
    return gx, gy


# --------------------------------------------------------------------- modes


def test_mode_zero_only_even():
    Mode(0, EVEN)
    with pytest.raises(ValueError):
        Mode(0, ODD)
    with pytest.raises(ValueError):
        Mode(-1, EVEN)


# ---------------------------------------------------------------- plasmons


def test_plasmon_energy_unit():
    assert gradient_energy(plasmon_wave(1, 1.0)) == pytest.approx(2 * np.pi, rel=1e-14)


def test_plasmon_energy_k2():
    assert gradient_energy(plasmon_wave(2, 1.5)) == pytest.approx(63.61725, rel=1e-6)
    assert gradient_energy(plasmon_wave(2, 1.5)) == pytest.approx(2 * np.pi * 2 * 1.5**4, rel=1e-14)


def test_plasmon_continuity_k3():
    p = plasmon_wave(3, 1.0)
    t = np.linspace(0, 2 * np.pi, 17)
    z = np.exp(1j * t)
    inner = np.real(p(z * (1 - 1e-13)))
    outer = np.real(p(z * (1 + 1e-13)))
    assert np.allclose(inner, np.cos(3 * t), atol=1e-11)
    assert np.allclose(outer, np.cos(3 * t), atol=1e-11)
    assert np.allclose(p.trace(1.0, "in"), p.trace(1.0, "out"))


def test_plasmon_rejects_k0():
    with pytest.raises(ValueError):
        plasmon_wave(0, 1.0)


@given(st.integers(1, 30), st.floats(0.5, 3.0), st.sampled_from([EVEN, ODD]))
def test_plasmon_is_A_harmonic(k, R, parity):
    jump = flux_jump(plasmon_wave(k, R, parity), [-1.0, 1.0], R)
    assert jump.max_abs() == 0.0


def test_plasmon_energy_matches_quadrature():
    p = plasmon_wave(2, 1.2)
    inside = quad_energy(p, 1e-9, 1.2)
    outside = quad_energy(p, 1.2, 200.0, nr=800)
    assert gradient_energy(p, (0.0, 1.2)) == pytest.approx(inside, rel=1e-10)
    assert gradient_energy(p, (1.2, 200.0)) == pytest.approx(outside, rel=1e-8)


# ---------------------------------------------------------------- energies


def test_zero_field_energy():
    assert gradient_energy(LayeredHarmonicField.zero(0.0, (1.0, 2.0))) == 0.0


def test_band_energy_annulus_quadrature():
    c = np.zeros((3, 1, 2), complex)
    c[1, 0, 0] = 1.0
    fld = LayeredHarmonicField(0.0, (1.0, 2.0), (Mode(1, EVEN),), c)
    assert gradient_energy(fld, (1.0, 2.0)) == pytest.approx(3 * np.pi, rel=1e-14)
    assert quad_energy(fld, 1.0, 2.0) == pytest.approx(3 * np.pi, rel=1e-8)


def test_unbounded_growing_band_rejected():
    c = np.zeros((2, 1, 2), complex)
    c[1, 0, 0] = 1.0
    with pytest.raises(InfiniteEnergyError):
        LayeredHarmonicField(0.0, (1.0,), (Mode(1, EVEN),), c)


def test_singular_band_at_center_rejected():
    c = np.zeros((2, 1, 2), complex)
    c[0, 0, 1] = 1.0
    with pytest.raises(ValueError):
        LayeredHarmonicField(0.0, (1.0,), (Mode(1, EVEN),), c)


def test_invariants_enforced():
    c = np.zeros((2, 1, 2), complex)
    c[0, 0, 1] = 1.0
    with pytest.raises(ValueError):
        LayeredHarmonicField(0.0, (1.0,), (Mode(1, EVEN),), c)
    c = np.zeros((2, 1, 2), complex)
    c[1, 0, 0] = 1.0
    with pytest.raises(ValueError):
        LayeredHarmonicField(0.0, (1.0,), (Mode(1, EVEN),), c)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.tuples(st.integers(1, 12), st.sampled_from([EVEN, ODD]), st.floats(-3, 3), st.floats(-3, 3)), min_size=1, max_size=6, unique_by=lambda t: (t[0], t[1])))
def test_orthogonality_of_modes(entries):
    R = 1.7
    total = LayeredHarmonicField.zero(0.0, (R,))
    parts = 0.0
    for k, par, a, b in entries:
        f = plasmon_wave(k, R, par) * complex(a, b)
        parts += gradient_energy(f)
        total = total + f
    assert gradient_energy(total) == pytest.approx(parts, rel=1e-12, abs=1e-300)


def test_gradient_matches_finite_differences():
    c = np.zeros((3, 2, 2), complex)
    c[0, :, 0] = [1.0, 0.5j]
    c[1, :, :] = [[0.3, 0.7], [0.2 - 0.1j, 0.4]]
    c[2, :, 1] = [1.1, -0.6]
    fld = LayeredHarmonicField(0.3 + 0.1j, (0.8, 1.6), (Mode(2, EVEN), Mode(3, ODD)), c)
    z = np.array([0.3 + 0.5j, 1.2 - 0.4j, -1.5 + 1.3j])
    gx, gy = fld.gradient(z)
    fx, fy = fd_gradient(fld, z)
    assert np.allclose(gx, fx, rtol=1e-6, atol=1e-8)
    assert np.allclose(gy, fy, rtol=1e-6, atol=1e-8)


# ---------------------------------------------------------------- flux jumps


def regular_band(k, breakpoints):
    """``r^k cos k theta`` on every region, the core plasmon V_hat_k."""
    c = np.zeros((len(breakpoints) + 1, 1, 2), complex)
    c[:-1, 0, 0] = 1.0
    c[-1, 0, 1] = breakpoints[-1] ** (2 * k)
    return LayeredHarmonicField(0.0, tuple(breakpoints), (Mode(k, EVEN),), c)


@pytest.mark.parametrize("k", [1, 2, 4, 7])
def test_core_plasmon_flux_jump(k):
    fld = regular_band(k, (1.0, 2.0))
    jump = flux_jump(fld, [1.0, -1.0, 1.0], 1.0)
    assert jump.amplitude(Mode(k, EVEN)) == pytest.approx(-2.0 * k, abs=1e-13)


def test_core_plasmon_flux_jump_finite_difference():
    k = 3
    fld = regular_band(k, (1.0, 2.0))
    h = 1e-6
    t = np.linspace(0, 2 * np.pi, 9)
    z = np.exp(1j * t)
    d_out = (np.real(fld(z * (1 + 2 * h))) - np.real(fld(z * (1 + h)))) / h
    d_in = (np.real(fld(z * (1 - h))) - np.real(fld(z * (1 - 2 * h)))) / h
    fd = (-1.0) * d_out - (+1.0) * d_in
    jump = flux_jump(fld, [1.0, -1.0, 1.0], 1.0).amplitude(Mode(k, EVEN))
    assert np.allclose(fd, np.real(jump) * np.cos(k * t), atol=1e-4)


def test_v_hat_jump_at_q():
    # v_hat_k outermost band R^{2k} ... only the jump at q matters
    k, R, q = 3, 1.5, 2.0
    c = np.zeros((2, 1, 2), complex)
    c[0, 0, 0] = R ** (-2 * k)
    c[1, 0, 1] = R ** (-2 * k) * q ** (2 * k)
    fld = LayeredHarmonicField(0.0, (q,), (Mode(k, EVEN),), c)
    jump = flux_jump(fld, [1.0, 1.0], q)
    assert jump.amplitude(Mode(k, EVEN)) == pytest.approx(-(2 * k / q) * q**k * R ** (-2 * k), rel=1e-13)


# ---------------------------------------------------------------- single layers


def test_single_layer_example():
    w = single_layer_solve(LayerDensity(1.0, 0.0, (Mode(1, EVEN),), [2.0]))
    t = np.linspace(0, 2 * np.pi, 7)
    assert np.allclose(np.real(w(0.5 * np.exp(1j * t))), 0.5 * np.cos(t), atol=1e-15)
    back = flux_jump(w, [1.0, 1.0], 1.0)
    assert abs(back.amplitude(Mode(1, EVEN)) + 2.0) <= 1e-12


def test_single_layer_zero():
    w = single_layer_solve(LayerDensity(1.0, 0.0, (), []))
    assert gradient_energy(w) == 0.0


def test_single_layer_rejects_mean():
    with pytest.raises(ValueError):
        LayerDensity(1.0, 0.0, (Mode(0, EVEN),), [1.0])
    with pytest.raises(ValueError):
        single_layer_solve(LayerDensity(1.0, 0.0, (Mode(0, EVEN),), [1.0], allow_mean=True))


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 15), st.floats(0.3, 3.0), st.floats(-2, 2), st.sampled_from([EVEN, ODD]))
def test_single_layer_roundtrip(k, a, g, parity):
    d = LayerDensity(a, 0.0, (Mode(k, parity),), [g])
    w = single_layer_solve(d)
    back = flux_jump(w, [1.0, 1.0], a)
    assert abs(back.amplitude(Mode(k, parity)) + g) <= 1e-12 * max(1, abs(g))
    assert single_layer_energy(d) == pytest.approx(np.pi * a**2 * g**2 / (2 * k), rel=1e-12, abs=1e-300)


def test_single_layer_harmonic_off_circle():
    w = single_layer_solve(LayerDensity(1.3, 0.2j, (Mode(2, EVEN), Mode(3, ODD)), [1.0, -0.7]))
    h = 1e-3
    for z in (0.2j + 0.4, 0.2j - 0.5 + 0.3j, 0.2j + 2.5 - 1.0j):
        lap = (w(z + h) + w(z - h) + w(z + 1j * h) + w(z - 1j * h) - 4 * w(z)) / h**2
        assert abs(lap) <= 1e-6


def test_single_layer_translation_equivariant():
    d0 = LayerDensity(0.7, 0.0, (Mode(2, EVEN),), [1.0])
    d1 = LayerDensity(0.7, 0.3 - 0.2j, (Mode(2, EVEN),), [1.0])
    z = np.array([0.1 + 0.2j, 1.0 - 0.5j])
    assert np.allclose(single_layer_solve(d1)(z + (0.3 - 0.2j)), single_layer_solve(d0)(z))


def test_two_layer_cross_term_quadrature():
    R = 1.8
    d1 = LayerDensity(1.0, 0.0, (Mode(2, EVEN),), [1.0])
    d2 = LayerDensity(R, 0.0, (Mode(2, EVEN),), [0.6])
    w = single_layer_solve(d1) + single_layer_solve(d2)
    e = gradient_energy(w)
    cross = e - single_layer_energy(d1) - single_layer_energy(d2)
    assert abs(cross) > 1e-3
    oracle = quad_energy(w, 1e-9, 1.0) + quad_energy(w, 1.0, R) + quad_energy(w, R, 400.0, nr=1200)
    assert e == pytest.approx(oracle, rel=1e-8)


# ---------------------------------------------------------------- interaction coefficients


def test_interaction_examples():
    assert interaction_coeff(3, 1, 0.5, 0.2) == pytest.approx(0.06283185, rel=1e-7)
    assert interaction_coeff(3, 1, 0.5, 0.2) == pytest.approx(np.pi * 0.5 * 0.04, rel=1e-14)
    assert interaction_coeff(2, 3, 0.7, 0.1 + 0.2j) == 0
    assert interaction_coeff(0, 0, 0.5, 0.0) == pytest.approx(np.pi, rel=1e-15)


def test_interaction_quadrature_examples():
    assert interaction_quadrature(3, 1, 0.5, 0.2) == pytest.approx(0.06283185307179587, rel=1e-10)
    assert interaction_quadrature(0, 0, 0.5, 0.2) == pytest.approx(np.pi, rel=1e-14)
    for m, k in [(1, 2), (3, 1), (4, 2)]:
        assert abs(interaction_quadrature(m, k, 0.8, 0.0)) <= 1e-14


def test_interaction_rejects_origin_outside():
    with pytest.raises(ValueError):
        interaction_coeff(1, 1, 0.3, 0.4)


@pytest.mark.parametrize("rho,z0", [(0.5, 0.1), (0.5, 0.2), (0.9, 0.1 + 0.05j), (0.99, 0.005), (0.9, 0.85)])
def test_interaction_table_matches_quadrature(rho, z0):
    ex = interaction_table(20, 20, rho, z0).entries
    qu = interaction_table(20, 20, rho, z0, method="quadrature").entries
    nz = np.abs(ex) > 0
    assert np.all(np.abs(qu[nz] - ex[nz]) <= 1e-10 * np.abs(ex[nz]))
    m, k = np.indices(ex.shape)
    assert np.all(ex[(m >= 1) & (m < k)] == 0)
    assert np.max(np.abs(qu[~nz])) <= 1e-13


def test_plain_circle_rule_agrees_on_large_entries():
    for m, k in [(3, 1), (5, 5), (8, 3)]:
        plain = interaction_quadrature(m, k, 0.5, 0.2, deform=False)
        assert plain == pytest.approx(interaction_coeff(m, k, 0.5, 0.2), rel=1e-10)


@given(st.integers(1, 25), st.integers(1, 25), st.floats(0.2, 1.0), st.floats(0, 0.95), st.floats(0, 2 * np.pi))
def test_interaction_magnitude_identity(m, k, rho, frac, ang):
    z0 = frac * rho * np.exp(1j * ang)
    v = interaction_coeff(m, k, rho, z0)
    if m < k:
        assert v == 0
    else:
        assert abs(v) == pytest.approx(np.pi * rho * binom(m - 1, m - k) * abs(z0) ** (m - k), rel=1e-12, abs=1e-300)


@given(st.integers(1, 20), st.floats(0.3, 1.0), st.floats(0.0, 0.9), st.floats(0.01, 1.0))
def test_q_weighted_bound(m, rho, frac, Q):
    z0 = frac * rho
    s, bound = q_weighted_sum(m, rho, z0, Q)
    assert s <= bound * (1 + 1e-12)
    assert s == pytest.approx(bound, rel=1e-10)


def test_q_weighted_bound_complex_center_is_inequality():
    s, bound = q_weighted_sum(6, 0.8, 0.2 + 0.3j, 0.4)
    assert s <= bound * (1 + 1e-12)


# ---------------------------------------------------------------- shifted expansions


def test_shifted_expansion_concentric():
    e = shifted_trace_expansion(3, 0.8, 0.0, 10)
    nz = np.nonzero(np.abs(e.coeffs) > 1e-300)[0]
    assert list(nz) == [3]
    assert e.coeffs[3] == pytest.approx(0.8 ** (-6), rel=1e-14)


def test_shifted_expansion_reconstruction():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", TruncationWarning)
        e = shifted_trace_expansion(1, 0.9, 0.1, 40)
    t = 2 * np.pi * np.arange(64) / 64
    z = 0.1 + 0.9 * np.exp(1j * t)
    assert np.max(np.abs(e(z) - np.real(1 / z))) <= 1e-8


def test_shifted_expansion_truncation_warning_carries_bound():
    with pytest.warns(TruncationWarning, match="tail bound"):
        e = shifted_trace_expansion(2, 0.5, 0.3, 5)
    assert e.tail_bound > 0


# ---------------------------------------------------------------- re-expansion


def test_reexpand_concentric_inverse():
    s = reexpand_about_origin(-1, 0.0, 5)
    z = np.array([1.5, 2.0j])
    assert np.allclose(s(z), 1 / z)
    assert np.count_nonzero(s.coeffs) == 1


def test_reexpand_square_binomial():
    z0 = 0.3 - 0.1j
    s = reexpand_about_origin(2, z0)
    assert list(s.powers) == [0, 1, 2]
    assert np.allclose(s.coeffs, [z0**2, -2 * z0, 1.0])


def test_reexpand_negative_power_series():
    z0 = 0.3
    s = reexpand_about_origin(-2, z0, 30)
    z = 0.9 * np.exp(2j * np.pi * np.arange(32) / 32)
    assert np.max(np.abs(s(z) - (z - z0) ** -2)) <= 1e-10


@given(st.integers(0, 12), st.complex_numbers(max_magnitude=1.0), st.complex_numbers(max_magnitude=2.0))
def test_reexpand_positive_exact(m, z0, z):
    s = reexpand_about_origin(m, z0)
    assert abs(s(z) - (z - z0) ** m) <= 1e-11 * max(1.0, (abs(z) + abs(z0)) ** m)
