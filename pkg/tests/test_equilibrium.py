"""Equilibrium solver against closed-form profiles and contract checks."""

import math

import numpy as np
import pytest

from rtstab.equilibrium import (EquilibriumProfile, PressureLaw,
                                check_admissibility, density_jump,
                                enthalpy_weight, export_profile_csv,
                                solve_equilibrium)
from rtstab.errors import DegeneratePressure, InverseFailure
from tests.conftest import unit_params


def test_isothermal_matches_closed_form(unstable_profile):
    # rho_plus = e^{1-x}, rho_minus = (e/2) e^{-x/2}
    xs = np.linspace(0.0, 1.0, 257)
    exact = np.exp(1.0 - xs)
    rel = np.abs(unstable_profile.rho_plus(xs) - exact) / exact
    assert rel.max() <= 1e-8
    xm = np.linspace(-1.0, 0.0, 257)
    exact_m = 0.5 * np.e * np.exp(-xm / 2.0)
    rel_m = np.abs(unstable_profile.rho_minus(xm) - exact_m) / exact_m
    assert rel_m.max() <= 1e-8


def test_top_boundary_value_exact(unstable_profile):
    # forced by the atmospheric condition P_plus(rho(ell)) = p_atm
    assert unstable_profile.rho1 == 1.0


def test_interface_values_and_jump(unstable_profile, stable_profile):
    assert unstable_profile.rho_top_interface == pytest.approx(np.e, rel=1e-10)
    assert unstable_profile.rho_bot_interface == pytest.approx(np.e / 2, rel=1e-10)
    assert density_jump(unstable_profile) == pytest.approx(np.e / 2, rel=1e-10)
    swapped = math.exp(0.5) / 2 - math.exp(0.5)
    assert density_jump(stable_profile) == pytest.approx(swapped, rel=1e-10)


def test_identical_laws_zero_jump(params):
    prof = solve_equilibrium(PressureLaw.isothermal(1.5),
                             PressureLaw.isothermal(1.5), params)
    assert abs(density_jump(prof)) < 1e-13


def test_jump_sign_flips_with_swapped_constants(params):
    for k1, k2 in [(1.0, 2.0), (0.7, 1.9), (3.0, 5.0)]:
        a = solve_equilibrium(PressureLaw.isothermal(k1),
                              PressureLaw.isothermal(k2), params)
        b = solve_equilibrium(PressureLaw.isothermal(k2),
                              PressureLaw.isothermal(k1), params)
        assert density_jump(a) > 0 > density_jump(b)


def test_polytropic_gamma2_linear_profile(params):
    # P = K rho^2 gives drho/dx = -g/(2K): an exactly linear layer profile
    k = 1.3
    prof = solve_equilibrium(PressureLaw.polytropic(k, 2.0),
                             PressureLaw.polytropic(k, 2.0), params)
    xs = np.linspace(0.0, 1.0, 33)
    top = math.sqrt(params.p_atm / k)
    exact = top + (1.0 - xs) / (2.0 * k)
    assert np.abs(prof.rho_plus(xs) - exact).max() < 1e-10


def test_integrator_order_four(params):
    errs = []
    ns = [17, 33, 65, 129]
    for n in ns:
        prof = solve_equilibrium(PressureLaw.isothermal(1.0),
                                 PressureLaw.isothermal(2.0), params, n)
        exact = np.exp(1.0 - prof.x_plus)
        errs.append(np.abs(prof.rho_plus_samples - exact).max())
    orders = [math.log2(errs[i] / errs[i + 1]) for i in range(len(errs) - 1)]
    assert min(orders) > 3.7


def test_hydrostatic_residual_refines_at_design_order(params):
    resids = []
    for n in (17, 33, 65):
        prof = solve_equilibrium(PressureLaw.isothermal(1.0),
                                 PressureLaw.isothermal(2.0), params, n)
        resids.append(check_admissibility(prof).max_hydrostatic_residual)
    orders = [math.log2(resids[i] / resids[i + 1]) for i in range(len(resids) - 1)]
    assert min(orders) > 3.5


def test_enthalpy_weight(unstable_profile):
    # isothermal: h' = K / rho
    assert enthalpy_weight(unstable_profile, 1.0) == pytest.approx(1.0, rel=1e-9)
    assert enthalpy_weight(unstable_profile, 0.0,
                           unstable_profile.law_plus) == pytest.approx(1 / np.e, rel=1e-8)
    assert enthalpy_weight(unstable_profile, 0.0,
                           unstable_profile.law_minus) == pytest.approx(2 / (np.e / 2), rel=1e-8)
    with pytest.raises(ValueError):
        enthalpy_weight(unstable_profile, 1.5)
    with pytest.raises(ValueError):
        enthalpy_weight(unstable_profile, -0.5, unstable_profile.law_plus)


def test_polytropic_weight_direct():
    law = PressureLaw.polytropic(1.0, 2.0)
    # P' = 2 rho, so h'(2) = P'(2)/2 = 2
    assert float(law.derivative(2.0)) / 2.0 == pytest.approx(2.0)


def test_admissibility_pass(unstable_profile):
    report = check_admissibility(unstable_profile)
    assert report.passed
    assert report.min_density == pytest.approx(1.0, rel=1e-10)
    assert report.argmin_x3 == pytest.approx(1.0)


def test_admissibility_flags_negative_density(unstable_profile, params):
    rho = unstable_profile.rho_plus_samples.copy()
    rho[len(rho) // 2] = -0.1
    bad = EquilibriumProfile.from_samples(
        unstable_profile.law_plus, unstable_profile.law_minus, params,
        unstable_profile.x_plus, rho,
        unstable_profile.x_minus, unstable_profile.rho_minus_samples)
    report = check_admissibility(bad)
    assert not report.passed
    assert "NonPositiveDensity" in report.failures


def test_admissibility_flags_pressure_mismatch(unstable_profile, params):
    # bump the lower interface sample so P_minus(rho^-) shifts by exactly 0.1
    rho_m = unstable_profile.rho_minus_samples.copy()
    rho_m[-1] += 0.05  # P_minus = 2 rho
    bad = EquilibriumProfile.from_samples(
        unstable_profile.law_plus, unstable_profile.law_minus, params,
        unstable_profile.x_plus, unstable_profile.rho_plus_samples,
        unstable_profile.x_minus, rho_m)
    report = check_admissibility(bad)
    assert not report.passed
    assert "PressureContinuity" in report.failures
    assert report.pressure_continuity_residual == pytest.approx(0.1, rel=1e-12)


def test_tabulated_law_roundtrip(params):
    rho = np.linspace(0.3, 5.0, 200)
    table = PressureLaw.tabulated(rho, 1.0 * rho)  # isothermal K=1 sampled
    prof = solve_equilibrium(table, PressureLaw.isothermal(2.0), params)
    xs = np.linspace(0.0, 1.0, 65)
    rel = np.abs(prof.rho_plus(xs) - np.exp(1 - xs)) / np.exp(1 - xs)
    assert rel.max() < 1e-6
    for p in (0.5, 1.0, 3.0):
        assert abs(float(table.value(table.inverse(p))) - p) <= 1e-12 * p


def test_tabulated_law_rejects_nonmonotone():
    rho = np.array([1.0, 2.0, 3.0, 4.0])
    with pytest.raises(ValueError):
        PressureLaw.tabulated(rho, np.array([1.0, 2.0, 1.5, 4.0]))


def test_inverse_failure_outside_table(params):
    rho = np.linspace(1.0, 2.0, 16)
    law = PressureLaw.tabulated(rho, 0.1 * rho)  # table max pressure 0.2 < p_atm
    with pytest.raises(InverseFailure):
        solve_equilibrium(law, PressureLaw.isothermal(1.0), params)


def test_degenerate_pressure_detected():
    # the [2, 3] table segment is flat to 1e-13, so P' collapses below the
    # slope tolerance once the descent enters it
    rho = np.array([0.5, 1.0, 2.0, 3.0, 3.5])
    p = np.array([0.5, 1.0, 2.0, 2.0 + 1e-13, 2.5])
    law = PressureLaw.tabulated(rho, p)
    prm = unit_params(p_atm=2.2)
    with pytest.raises(DegeneratePressure):
        solve_equilibrium(law, PressureLaw.isothermal(1.0), prm)


def test_profile_csv_export(tmp_path, unstable_profile):
    path = tmp_path / "profile.csv"
    export_profile_csv(unstable_profile, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "x3,rho,pressure,h_prime,layer"
    assert lines[1].endswith(",minus") and lines[-1].endswith(",plus")
    # re-read the numeric columns and spot-check hydrostatic consistency
    x3, rho = [], []
    for ln in lines[1:]:
        c = ln.split(",")
        x3.append(float(c[0]))
        rho.append(float(c[1]))
    assert len(x3) == 2 * unstable_profile.x_plus.size


def test_validation_of_params():
    with pytest.raises(ValueError):
        unit_params(mu_plus=-1.0)
    with pytest.raises(ValueError):
        unit_params(b=0.0)
    with pytest.raises(ValueError):
        unit_params(sigma_minus=-0.1)
