from __future__ import annotations

import cmath
import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st
from scipy.special import wofz

from fnls.phase import (
    ConePartition,
    PhaseContext,
    T0_at_z0,
    T_fn,
    delta_fn,
    dump_phase_samples,
    nu_integral,
    nu_of,
    partition,
    phase_context,
    r0_modulated,
    theta,
)
from fnls.scattering import (
    ScatteringData,
    gaussian_profile,
    reflection_coefficient,
)
from fnls.solitons import DiscreteDatum

S_GRID = np.linspace(-5.0, 5.0, 2001)
R_SMOOTH = (0.8 * np.exp(-(S_GRID ** 2) / 2) * np.exp(0.3j * S_GRID))
Z0 = 0.6


@pytest.fixture(scope="module")
def smooth():
    return ScatteringData(S_GRID, R_SMOOTH)


@pytest.fixture(scope="module")
def poles():
    return [DiscreteDatum(-0.8 + 0.6j, order=1, c0=1.0, c1=0.0),
            DiscreteDatum(0.45 + 0.9j, order=2, c0=0.2, c1=1.0)]


def _r_at(s0):
    return complex(np.interp(s0, S_GRID, R_SMOOTH.real),
                   np.interp(s0, S_GRID, R_SMOOTH.imag))


# ---------------------------------------------------------------------------
# elementary scalars
# ---------------------------------------------------------------------------

def test_theta_at_the_stationary_point():
    th, dth = theta(0.25, 1.0, -2.0)   # z0 = -x/(2t) = 0.25
    assert th == pytest.approx(-0.0625)
    assert dth == 0.0


def test_theta_direct_value():
    th, dth = theta(1j, 0.0, 1.0)
    assert th == -1.0 and dth == 2j


def test_theta_growth_identity():
    # Re(i theta) must equal -2 Im z (Re z - z0) for every z
    rng = np.random.default_rng(3)
    z = rng.standard_normal(20) + 1j * rng.standard_normal(20)
    th, _ = theta(z, 0.7, 1.3)
    z0 = -0.7 / 2.6
    assert np.max(np.abs((1j * th).real + 2 * z.imag * (z.real - z0))) < 1e-13


def test_theta_rejects_frozen_time():
    with pytest.raises(ValueError, match="t = 0"):
        theta(1j, 1.0, 0.0)


def test_nu_reference_values():
    assert nu_of(0.0) == 0.0
    assert nu_of(1.0) == pytest.approx(-math.log(2) / (2 * math.pi))
    assert nu_of(1.0) == pytest.approx(-0.1103178, abs=1e-7)
    assert nu_of(3.0) == pytest.approx(-math.log(10) / (2 * math.pi))


@given(a=st.floats(0.0, 10.0), d=st.floats(1e-3, 5.0))
def test_nu_strictly_decreasing(a, d):
    assert nu_of(a + d) < nu_of(a)


# ---------------------------------------------------------------------------
# the scalar jump factor
# ---------------------------------------------------------------------------

def test_delta_is_one_without_reflection():
    flat = ScatteringData(S_GRID, np.zeros_like(R_SMOOTH))
    assert delta_fn(0.3 + 0.4j, flat, Z0) == 1.0
    assert np.all(delta_fn(np.array([2j, 5.0 + 0j]), flat, Z0) == 1.0)


def test_delta_matches_faddeeva_closed_form():
    """With density log(1 + |r|^2) = exp(-s^2) over the whole sampled line
    the Cauchy integral is the Faddeeva function, delta = exp(w(z)/2)."""
    sg = np.linspace(-6.0, 6.0, 24001)
    r_abs = np.sqrt(np.expm1(np.exp(-(sg ** 2))))
    scat = ScatteringData(sg, r_abs.astype(complex))
    for z in (0.3 + 0.5j, -1.2 + 0.25j, 2.0j, 1.7 + 1.1j):
        mine = delta_fn(z, scat, 6.0)
        oracle = cmath.exp(complex(wofz(z)) / 2.0)
        assert abs(mine - oracle) < 1e-6


def test_delta_boundary_jump(smooth):
    for s0 in (-2.0, -0.5, 0.1):
        plus = delta_fn(complex(s0), smooth, Z0, side="+")
        minus = delta_fn(complex(s0), smooth, Z0, side="-")
        assert abs(plus / minus - (1.0 + abs(_r_at(s0)) ** 2)) < 1e-10


def test_delta_needs_a_side_on_the_ray(smooth):
    with pytest.raises(ValueError, match="side"):
        delta_fn(-0.5 + 0j, smooth, Z0)


def test_delta_far_field_decay():
    # piecewise-constant reflection on |s| <= 1; the grids align the jump
    for n in (801, 1601):
        sg = np.linspace(-2.0, 2.0, n)
        r = np.where(np.abs(sg) <= 1.0, 1.0, 0.0).astype(complex)
        scat = ScatteringData(sg, r)
        near = abs(delta_fn(20j, scat, 2.0) - 1.0)
        far = abs(delta_fn(40j, scat, 2.0) - 1.0)
        assert 1.8 < near / far < 2.2


# ---------------------------------------------------------------------------
# the full modulation factor
# ---------------------------------------------------------------------------

def test_T_is_one_without_poles_or_reflection(smooth):
    flat = ScatteringData(S_GRID, np.zeros_like(R_SMOOTH))
    assert T_fn(0.7 + 0.9j, (), [], flat, Z0) == 1.0


def test_T_schwarz_symmetry(smooth, poles):
    for z in (0.9 + 0.7j, -1.3 + 0.2j, 0.2 - 1.1j, 3.0 + 0.05j):
        val = (T_fn(z, (0,), poles, smooth, Z0)
               * np.conj(T_fn(np.conj(z), (0,), poles, smooth, Z0)))
        assert abs(val - 1.0) < 1e-10


def test_T_jump_across_the_ray(smooth, poles):
    for s0 in (-2.0, -0.5):
        plus = T_fn(complex(s0), (0,), poles, smooth, Z0, side="+")
        minus = T_fn(complex(s0), (0,), poles, smooth, Z0, side="-")
        assert abs(plus / minus - (1.0 + abs(_r_at(s0)) ** 2)) < 1e-10


def test_T_refuses_points_at_poles(smooth, poles):
    with pytest.raises(ValueError, match="guard radius"):
        T_fn(poles[0].z + 1e-10, (0,), poles, smooth, Z0)


def test_T_large_z_coefficient(smooth, poles):
    """z (T(z) - 1) tends to i (4 sum Im z_k - integral of nu); the integral
    reference comes from plain dense trapezoid quadrature, independent of
    the Cauchy-kernel panels inside T."""
    fine = np.linspace(-5.0, Z0, 200001)
    nu_fine = nu_of(np.abs(np.interp(fine, S_GRID, R_SMOOTH.real)
                           + 1j * np.interp(fine, S_GRID, R_SMOOTH.imag)))
    target = 1j * (4.0 * poles[0].z.imag - np.trapezoid(nu_fine, fine))
    f1 = 200j * (T_fn(200j, (0,), poles, smooth, Z0) - 1.0)
    f2 = 400j * (T_fn(400j, (0,), poles, smooth, Z0) - 1.0)
    assert abs(2.0 * f2 - f1 - target) < 5e-4
    assert abs(nu_integral(smooth, Z0)
               - np.trapezoid(nu_fine, fine)) < 1e-6


def test_boundary_constant_reflectionless(poles):
    flat = ScatteringData(S_GRID, np.zeros_like(R_SMOOTH))
    direct = ((Z0 - np.conj(poles[0].z)) / (Z0 - poles[0].z)) ** 2
    got = T0_at_z0((0,), poles, flat, Z0)
    assert abs(got - direct) < 1e-12
    assert abs(abs(got) - 1.0) < 1e-12
    assert T0_at_z0((), poles, flat, Z0) == 1.0


def test_boundary_constant_is_unimodular(smooth, poles):
    assert abs(abs(T0_at_z0((0,), poles, smooth, Z0)) - 1.0) < 1e-10


def test_boundary_constant_needs_bracketing(smooth, poles):
    with pytest.raises(ValueError, match="bracket"):
        T0_at_z0((0,), poles, smooth, 7.0)


def test_T_approaches_the_boundary_model(smooth, poles):
    # along the diagonal ray the mismatch must stay Hoelder-1/2 bounded
    t0 = T0_at_z0((0,), poles, smooth, Z0)
    nu0 = nu_of(abs(_r_at(Z0)))
    ratios = []
    for d in (0.4, 0.2, 0.1, 0.05, 0.025):
        z = Z0 + d * cmath.exp(0.25j * math.pi)
        model = t0 * (z - Z0) ** (1j * nu0)
        ratios.append(abs(T_fn(z, (0,), poles, smooth, Z0) - model)
                      / math.sqrt(d))
    assert max(ratios) <= 1.05 * ratios[0]


# ---------------------------------------------------------------------------
# partitions
# ---------------------------------------------------------------------------

def test_partition_about_the_stationary_point():
    data = [DiscreteDatum(1.0 + 0.5j, order=1, c0=1.0, c1=0.0),
            DiscreteDatum(-1.0 + 0.5j, order=1, c0=1.0, c1=0.0)]
    part = partition(data, 0.0)
    assert part.delta_minus == (1,) and part.delta_plus == (0,)


def test_partition_tie_goes_right_with_warning():
    data = [DiscreteDatum(0.5 + 1.0j, order=1, c0=1.0, c1=0.0)]
    with pytest.warns(RuntimeWarning, match="stationary point"):
        part = partition(data, 0.5)
    assert part.delta_plus == (0,) and part.delta_minus == ()


def test_cone_membership_and_decay_rate():
    data = [DiscreteDatum(1j, order=2, c0=1.0, c1=1.0),
            DiscreteDatum(0.6 + 0.35j, order=2, c0=1.0, c1=1.0)]
    with pytest.warns(RuntimeWarning, match="stationary point"):
        part = partition(data, 0.0, cone=(-1.0, 1.0, -0.5, 0.5))
    assert part.I == (-0.25, 0.25)
    assert part.zI == (0,)                      # only the imaginary-axis pole
    assert part.mu_I == pytest.approx(0.35 * 0.35, abs=1e-12)


def test_decay_rate_simple_value_and_sentinel():
    lone = [DiscreteDatum(1.0 + 1.0j, order=1, c0=1.0, c1=0.0)]
    part = partition(lone, 0.0, cone=(0.0, 0.0, -1.0, 1.0))
    assert part.mu_I == pytest.approx(0.5)
    inside = partition(lone, 0.0, cone=(0.0, 0.0, -4.0, 4.0))
    assert inside.zI == (0,) and inside.mu_I == math.inf


def test_cone_bounds_must_be_ordered():
    with pytest.raises(ValueError, match="ordered"):
        ConePartition(x1=1.0, x2=0.0, v1=0.0, v2=1.0, I=(-0.5, 0.0),
                      delta_minus=(), delta_plus=(), zI=(), mu_I=1.0)


@settings(max_examples=40)
@given(
    res=st.lists(st.floats(-2.0, 2.0), min_size=3, max_size=3),
    ims=st.lists(st.floats(0.1, 2.0), min_size=3, max_size=3),
    w1=st.floats(0.05, 1.0),
    grow=st.floats(0.05, 2.0),
)
def test_decay_rate_shrinks_as_the_interval_grows(res, ims, w1, grow):
    # monotone only while the membership is unchanged: once a pole is
    # absorbed the minimum runs over fewer terms and may jump up
    data = [DiscreteDatum(complex(re, im), order=1, c0=1.0, c1=0.0)
            for re, im in zip(res, ims)]
    w2 = w1 + grow
    small = partition(data, -5.0, cone=(0.0, 0.0, -2 * w1, 2 * w1))
    large = partition(data, -5.0, cone=(0.0, 0.0, -2 * w2, 2 * w2))
    assume(small.zI == large.zI)
    assert large.mu_I <= small.mu_I


# ---------------------------------------------------------------------------
# context assembly and the modulated amplitude
# ---------------------------------------------------------------------------

def test_phase_context_fields(smooth, poles):
    ctx = phase_context(smooth, poles, x=-1.2, t=1.0)
    assert ctx.z0 == 0.6
    assert ctx.nu0 <= 0
    assert abs(ctx.r_at_z0 - _r_at(0.6)) < 1e-14
    assert abs(abs(ctx.T0_z0) - 1.0) < 1e-8


def test_phase_context_validation(smooth, poles):
    with pytest.raises(ValueError, match="t = 0"):
        phase_context(smooth, poles, x=1.0, t=0.0)
    with pytest.raises(ValueError, match="bracket"):
        phase_context(smooth, poles, x=-100.0, t=1.0)
    with pytest.raises(ValueError, match="exactly"):
        PhaseContext(x=1.0, t=1.0, z0=0.4, nu0=-0.1, T0_z0=1.0 + 0j,
                     r_at_z0=0.1 + 0j)
    with pytest.raises(ValueError, match="never positive"):
        PhaseContext(x=1.0, t=1.0, z0=-0.5, nu0=0.2, T0_z0=1.0 + 0j,
                     r_at_z0=0.1 + 0j)
    with pytest.raises(ValueError, match="unimodular"):
        PhaseContext(x=1.0, t=1.0, z0=-0.5, nu0=-0.1, T0_z0=1.4 + 0j,
                     r_at_z0=0.1 + 0j)


def test_modulated_amplitude_basics(smooth, poles):
    ctx = phase_context(smooth, poles, x=-1.2, t=4.0)
    assert abs(abs(r0_modulated(smooth, ctx, 4.0))
               - abs(r0_modulated(smooth, ctx, 900.0))) < 1e-12
    assert abs(abs(r0_modulated(smooth, ctx, 4.0))
               - abs(ctx.r_at_z0) / abs(ctx.T0_z0) ** 2) < 1e-12
    with pytest.raises(ValueError, match="t > 0"):
        r0_modulated(smooth, ctx, -1.0)
    silent = PhaseContext(x=0.0, t=4.0, z0=0.0, nu0=0.0, T0_z0=1.0 + 0j,
                          r_at_z0=0j)
    assert r0_modulated(smooth, silent, 4.0) == 0.0


def test_gaussian_amplitude_regression_pin():
    prof = gaussian_profile(0.3, np.linspace(-8.0, 8.0, 641))
    scat = reflection_coefficient(prof, np.linspace(-4.0, 4.0, 321))
    ctx = phase_context(scat, [], x=0.0, t=25.0)
    r0 = r0_modulated(scat, ctx, 25.0)
    assert abs(r0 - (-0.5814569003879617 + 0.08915030374014535j)) < 1e-9


def test_debug_dump_round_trips(tmp_path, smooth, poles):
    zs = np.array([0.9 + 0.7j, -1.3 + 0.2j, 2.5j])
    path = tmp_path / "factors.csv"
    dump_phase_samples(path, zs, (0,), poles, smooth, Z0)
    arr = np.loadtxt(path, delimiter=",", comments="#")
    assert arr.shape == (3, 6)
    want = T_fn(zs, (0,), poles, smooth, Z0)
    assert np.max(np.abs(arr[:, 4] + 1j * arr[:, 5] - want)) < 1e-15
