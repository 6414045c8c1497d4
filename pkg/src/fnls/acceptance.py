"""Quantitative acceptance gates for the whole toolkit.

Each ``criterion_*`` function runs one self-contained experiment tying the
closed-form pole solutions, the forward scattering map, the cone asymptotics
and the split-step integrator to each other, and returns a uniform record
(id, measured value, threshold, pass flag).  ``run_all`` executes the lot;
the command-line ``verify`` subcommand and the acceptance test suite both
feed from here.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .asymptotics import pc_coefficients, q_asymptotic
from .phase import T_fn, delta_fn, nu_integral, partition
from .scattering import (
    DiscreteDatum,
    ScatteringData,
    gaussian_profile,
    locate_zeros,
    norming_constants,
    reflection_coefficient,
    sech_profile,
    soliton_profile,
)
from .solitons import reorient_constants, restrict_to_interval, solve_soliton, soliton_field
from .splitstep import Grid, pde_residual, split_step

__all__ = ["CriterionResult", "run_all", "CRITERIA"]


@dataclass(frozen=True)
class CriterionResult:
    cid: str
    description: str
    measured: float
    threshold: float
    passed: bool
    detail: str = ""

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        out = (f"[{status}] criterion {self.cid}: measured {self.measured:.6g}"
               f" vs threshold {self.threshold:.6g} -- {self.description}")
        if self.detail:
            out += f" ({self.detail})"
        return out


_DOUBLE_POLE = (DiscreteDatum(1j, order=2, c0=0.0, c1=1.0),)


def criterion_1() -> CriterionResult:
    """Closed-form double-pole field satisfies the equation pointwise."""
    grid = Grid(n=4096, x_min=-20.0 * math.pi, x_max=20.0 * math.pi)

    def q_fn(x, t):
        return soliton_field(_DOUBLE_POLE, x, t)

    # the collision transient near t = 0 has a large fifth time derivative;
    # the stencil spacing is chosen so the finite-difference floor sits
    # well under the gate
    res = pde_residual(q_fn, grid, (0.0, 0.25, 0.5, 0.75, 1.0),
                       h_t=2e-3, x_window=(-20.0, 20.0))
    return CriterionResult(
        "1", "double-pole field PDE residual on x in [-20,20], t in [0,1]",
        res, 1e-6, res < 1e-6)


def criterion_2() -> CriterionResult:
    """Evolving the t = 0 slice numerically reproduces the closed form."""
    grid = Grid(n=4096, x_min=-20.0 * math.pi, x_max=20.0 * math.pi)
    q0 = soliton_field(_DOUBLE_POLE, grid.x, 0.0)
    ev = split_step(q0, grid, 10.0, dt=5e-4, order=4)
    err = float(np.max(np.abs(ev.slice_at(10.0)
                              - soliton_field(_DOUBLE_POLE, grid.x, 10.0))))
    return CriterionResult(
        "2", "split-step evolution matches the closed form at t = 10",
        err, 1e-6, err < 1e-6)


def criterion_3() -> CriterionResult:
    """Poles outside the cone's velocity window decay exponentially fast."""
    data = (DiscreteDatum(1j, order=2, c0=0.3 - 0.1j, c1=1.0),
            DiscreteDatum(0.6 + 0.35j, order=2, c0=0.5j, c1=0.8))
    cone = (-1.0, 1.0, -0.5, 0.5)
    ts = np.linspace(2.0, 12.0, 11)
    diffs = []
    for t in ts:
        x = 0.1 * t
        z0 = -x / (2.0 * t)
        part = partition(data, z0, cone)
        full = solve_soliton(reorient_constants(data, part.delta_minus),
                             x, t).q
        kept = solve_soliton(restrict_to_interval(data, part.I, z0), x, t).q
        diffs.append(abs(full - kept))
    slope = float(np.polyfit(ts, np.log(diffs), 1)[0])
    mu = partition(data, -0.05, cone).mu_I
    return CriterionResult(
        "3", "cone localisation error decay rate (log-linear fit slope)",
        slope, -2.0 * mu, slope <= -2.0 * mu,
        detail=f"mu(I) = {mu:.4f}, diffs {diffs[0]:.2e} -> {diffs[-1]:.2e}")


def criterion_4() -> CriterionResult:
    """Dispersive remainder: scaled error stays bounded along x = 0."""
    profile = gaussian_profile(0.3, np.linspace(-8.0, 8.0, 641))
    found = locate_zeros(profile, (-1.0, 1.0, 0.05, 1.0), tol=1e-6)
    if found:
        return CriterionResult(
            "4", "dispersive remainder bounded (scaled-error ratio)",
            math.inf, 3.0, False,
            detail=f"unexpected discrete spectrum {found}")
    sc = reflection_coefficient(profile, np.linspace(-4.0, 4.0, 321))

    grid = Grid(n=16384, x_min=-160.0 * math.pi, x_max=160.0 * math.pi)
    q0 = 0.3 * np.exp(-grid.x ** 2)
    ev = split_step(q0, grid, 80.0, dt=4e-3, t_samples=[20.0, 40.0],
                    order=4, edge_guard=1e-7)
    j0 = int(np.argmin(np.abs(grid.x)))
    cone = (-1.0, 1.0, -0.05, 0.05)
    scaled = []
    for t in (20.0, 40.0, 80.0):
        q_pde = complex(ev.slice_at(t)[j0])
        q_asym = q_asymptotic(0.0, t, (), sc, cone).q_total
        scaled.append(t ** 0.75 * abs(q_pde - q_asym))
    ratio = max(scaled) / min(scaled)
    passed = ratio < 3.0 and scaled[-1] <= scaled[0]
    return CriterionResult(
        "4", "dispersive remainder bounded (scaled-error ratio)",
        ratio, 3.0, passed,
        detail="t^(3/4)|q-q_asym| = " + ", ".join(f"{e:.4g}" for e in scaled))


def criterion_5() -> CriterionResult:
    """Bundle of closed-form identities; measured value is the worst
    part-wise ratio to its own tolerance (pass iff < 1)."""
    parts = []

    # (a) coefficient modulus identity
    worst_a = 0.0
    for nu in (-0.05, -0.11, -0.3):
        r0 = math.sqrt(math.expm1(-2.0 * math.pi * nu)) * np.exp(0.4j)
        pc = pc_coefficients(complex(r0), nu)
        worst_a = max(worst_a, abs(abs(pc.beta12) ** 2 - abs(nu)))
    parts.append(("|beta12|^2 = |nu|", worst_a, 1e-10))

    s = np.linspace(-5.0, 5.0, 2001)
    r = 0.8 * np.exp(-s ** 2 / 2.0) * np.exp(0.3j * s)
    sc = ScatteringData(s, r, ())
    data = (DiscreteDatum(-0.8 + 0.6j, order=1, c0=1.0, c1=0.0),
            DiscreteDatum(0.45 + 0.9j, order=2, c0=0.2, c1=1.0))
    z0 = 0.6
    dm = (0, 1)

    # (b) multiplicative jump across the oriented ray
    worst_b = 0.0
    for s0 in (-2.3, -1.1, 0.2):
        plus = T_fn(s0, dm, data, sc, z0, side="+")
        minus = T_fn(s0, dm, data, sc, z0, side="-")
        ramp = 1.0 + abs(complex(np.interp(s0, s, r))) ** 2
        worst_b = max(worst_b, abs(plus - minus * ramp))
    parts.append(("jump of T across the ray", worst_b, 1e-6))

    # (c) large-z coefficient of T via Richardson extrapolation; the
    # three-point rule removes both the 1/z and 1/z^2 truncation terms
    def coef(rr):
        z = complex(0.0, rr)
        return z * (complex(T_fn(z, dm, data, sc, z0)) - 1.0)

    est = (8.0 * coef(1600.0) - 6.0 * coef(800.0) + coef(400.0)) / 3.0
    target = 1j * (4.0 * sum(complex(d.z).imag for d in data)
                   - nu_integral(sc, z0))
    parts.append(("large-z coefficient of T", abs(est - target), 1e-6))

    # (d) unitarity of the scattering row on a two-sech profile
    prof = sech_profile(2.0, np.linspace(-26.0, 26.0, 1041))
    sc2 = reflection_coefficient(prof, np.linspace(-2.0, 2.0, 41))
    unit = np.abs(np.abs(sc2.s11) ** 2 + np.abs(sc2.s21) ** 2 - 1.0)
    parts.append(("|s11|^2 + |s21|^2 = 1", float(np.max(unit)), 1e-8))

    worst = max(v / tol for _, v, tol in parts)
    detail = "; ".join(f"{name}: {v:.3g} (tol {tol:g})"
                       for name, v, tol in parts)
    return CriterionResult(
        "5", "identity bundle (worst part-wise ratio to tolerance)",
        worst, 1.0, worst < 1.0, detail=detail)


def criterion_6() -> CriterionResult:
    """Forward scattering on a generated double-pole slice recovers the
    generating spectrum and constants."""
    datum = DiscreteDatum(1j, order=2, c0=0.36 - 0.24j, c1=1.1 + 0.55j)
    profile = soliton_profile((datum,), np.linspace(-16.0, 16.0, 6401))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        found = locate_zeros(profile, (-0.5, 0.5, 0.5, 1.5), tol=1e-6)
    if len(found) != 1 or found[0][1] != 2:
        return CriterionResult(
            "6", "scattering round trip (zero + constants)",
            math.inf, 1.0, False, detail=f"located {found}")
    z_hat = found[0][0]
    rec = norming_constants(profile, z_hat, order=2)
    zero_err = abs(z_hat - 1j)
    c0_err = abs(rec.c0 - datum.c0) / abs(datum.c0)
    c1_err = abs(rec.c1 - datum.c1) / abs(datum.c1)
    worst = max(zero_err / 1e-4, c0_err / 1e-3, c1_err / 1e-3)
    return CriterionResult(
        "6", "scattering round trip (worst ratio to tolerance)",
        worst, 1.0, worst < 1.0,
        detail=(f"|z-i| = {zero_err:.2e}, rel c0 = {c0_err:.2e}, "
                f"rel c1 = {c1_err:.2e}"))


def criterion_7() -> CriterionResult:
    """Random pole systems stay well-posed with tiny backward residuals."""
    rng = np.random.default_rng(20240817)
    worst = 0.0
    for _ in range(200):
        n = int(rng.integers(1, 5))
        data = []
        for _ in range(n):
            z = complex(rng.uniform(-1.5, 1.5), rng.uniform(0.2, 2.0))
            order = int(rng.integers(1, 3))
            c0 = complex(rng.normal(), rng.normal())
            c1 = complex(rng.normal(), rng.normal()) if order == 2 else 0.0
            data.append(DiscreteDatum(z, order=order, c0=c0, c1=c1))
        x = float(rng.uniform(-3.0, 3.0))
        t = float(rng.uniform(-2.0, 2.0))
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            state = solve_soliton(tuple(data), x, t)
        worst = max(worst, state.residual)
    return CriterionResult(
        "7", "worst scaled residual over 200 random pole systems",
        worst, 1e-10, worst < 1e-10)


CRITERIA = {
    "1": criterion_1,
    "2": criterion_2,
    "3": criterion_3,
    "4": criterion_4,
    "5": criterion_5,
    "6": criterion_6,
    "7": criterion_7,
}


def run_all(which=None) -> list[CriterionResult]:
    ids = list(CRITERIA) if which is None else [str(w) for w in which]
    out = []
    for cid in ids:
        if cid not in CRITERIA:
            raise KeyError(f"unknown criterion {cid!r}")
        out.append(CRITERIA[cid]())
    return out
