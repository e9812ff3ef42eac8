"""Assembly contracts, eigensolver agreement, and variational structure."""

import math

import numpy as np
import pytest

from rtstab.variational import (assemble_forms, assemble_forms_3field,
                                assemble_forms_alt, build_mesh,
                                evaluate_energy, min_eig, min_eig_3field)
from rtstab.equilibrium import PressureLaw, solve_equilibrium
from tests.conftest import unit_params


def test_build_mesh_examples():
    m = build_mesh(1.0, 1.0, 2, 2)
    assert np.allclose(m.nodes, [-1.0, -0.5, 0.0, 0.5, 1.0])
    assert m.ndof == 8
    m2 = build_mesh(2.0, 1.0, 4, 2)
    assert np.allclose(np.diff(m2.nodes), 0.5)
    with pytest.raises(ValueError):
        build_mesh(1.0, 1.0, 1, 2)


def test_zero_vector_zero_forms(unstable_profile, params, mesh40):
    forms = assemble_forms(mesh40, unstable_profile, 1.0, params)
    v = np.zeros(mesh40.ndof)
    e, j = evaluate_energy(forms, v, 0.7)
    assert e == 0.0 and j == 0.0


def test_exact_symmetry_and_definiteness(unstable_profile, params, mesh40):
    forms = assemble_forms(mesh40, unstable_profile, 1.3, params)
    assert np.array_equal(forms.K0, forms.K0.T)
    assert np.array_equal(forms.K1, forms.K1.T)
    assert np.array_equal(forms.M, forms.M.T)
    assert np.linalg.eigvalsh(forms.K1).min() >= -1e-14
    assert np.linalg.eigvalsh(forms.M).min() > 0


def test_stable_orientation_k0_psd(stable_profile, params, mesh40):
    # jump <= 0 and sigma >= 0 make the static energy nonnegative
    forms = assemble_forms(mesh40, stable_profile, 1.0, params)
    scale = np.abs(forms.K0).max()
    assert np.linalg.eigvalsh(forms.K0).min() >= -1e-13 * scale


def test_energy_lower_bound_random(unstable_profile, params, mesh40):
    rng = np.random.default_rng(42)
    for xi in (0.5, 1.0, 2.0):
        forms = assemble_forms(mesh40, unstable_profile, xi, params)
        for _ in range(100):
            v = rng.standard_normal(mesh40.ndof)
            v /= math.sqrt(v @ forms.M @ v)
            e, j = evaluate_energy(forms, v, 0.2)
            assert j == pytest.approx(1.0, abs=1e-10)
            assert e >= -params.g * xi - 1e-10


def test_stable_alpha_nonnegative(stable_profile, params, mesh40):
    forms = assemble_forms(mesh40, stable_profile, 1.0, params)
    for s in np.geomspace(1e-6, 2.0, 8):
        alpha, _ = min_eig(forms, s)
        assert alpha >= -1e-12


def test_alpha_respects_lower_bound(unstable_profile, params, mesh40):
    # sharpest form of the energy bound: the infimum itself sits above -g|xi|
    for xi in (0.5, 1.0, 2.5):
        forms = assemble_forms(mesh40, unstable_profile, xi, params)
        alpha, _ = min_eig(forms, 1e-6)
        assert alpha >= -params.g * xi - 1e-10


def test_dense_vs_iterative(unstable_profile, params):
    mesh = build_mesh(1.0, 1.0, 20, 20)
    rng = np.random.default_rng(3)
    for _ in range(10):
        xi = float(rng.uniform(0.3, 3.0))
        s = float(rng.uniform(1e-4, 1.5))
        forms = assemble_forms(mesh, unstable_profile, xi, params)
        a_dense, _ = min_eig(forms, s, method="dense")
        a_iter, _ = min_eig(forms, s, method="iterative")
        assert abs(a_dense - a_iter) <= 1e-9


def test_rayleigh_identity_and_scaling(unstable_profile, params, mesh40):
    forms = assemble_forms(mesh40, unstable_profile, 1.0, params)
    alpha, v = min_eig(forms, 0.05)
    e, j = evaluate_energy(forms, v, 0.05)
    assert e == pytest.approx(alpha, abs=1e-10)
    assert j == pytest.approx(1.0, abs=1e-12)
    e2, j2 = evaluate_energy(forms, 2.0 * v, 0.05)
    assert e2 == pytest.approx(4 * e, rel=1e-12)
    assert j2 == pytest.approx(4 * j, rel=1e-12)


def test_monotonicity_in_s(unstable_profile, params, mesh40):
    forms = assemble_forms(mesh40, unstable_profile, 1.0, params)
    s_grid = np.geomspace(1e-3, 1.7, 10)
    alphas = []
    e1s = []
    for s in s_grid:
        a, v = min_eig(forms, s)
        alphas.append(a)
        e1s.append(float(v @ forms.K1 @ v))
    for i in range(len(s_grid) - 1):
        assert alphas[i + 1] >= alphas[i] - 1e-12
        if e1s[i + 1] > 1e-12:
            # alpha(s2) >= alpha(s1) + (s2 - s1) E1(minimizer at s2)
            assert alphas[i + 1] - alphas[i] >= \
                0.5 * (s_grid[i + 1] - s_grid[i]) * e1s[i + 1]


def test_minimizer_interface_value_nonzero(unstable_profile, params, mesh40):
    forms = assemble_forms(mesh40, unstable_profile, 1.0, params)
    alpha, v = min_eig(forms, 0.01)
    assert alpha < 0
    assert v[forms.psi_interface_dof] > 1e-8  # sign convention makes it >= 0


def test_mesh_convergence_order(unstable_profile, params):
    alphas = []
    for n in (25, 50, 100):
        mesh = build_mesh(1.0, 1.0, n, n)
        forms = assemble_forms(mesh, unstable_profile, 1.0, params)
        a, _ = min_eig(forms, 0.075)
        alphas.append(a)
    order = math.log2(abs(alphas[1] - alphas[0]) / abs(alphas[2] - alphas[1]))
    assert order > 1.9


def test_k0_alt_agreement(unstable_profile, params):
    rng = np.random.default_rng(11)
    for n in (8, 16, 32):
        mesh = build_mesh(1.0, 1.0, n, n)
        forms = assemble_forms(mesh, unstable_profile, 1.0, params)
        alt = assemble_forms_alt(mesh, unstable_profile, 1.0, params)
        for _ in range(5):
            v = rng.standard_normal(mesh.ndof)
            gap = abs(v @ (forms.K0 - alt) @ v)
            # exact identity at the continuous level; the discrete gap is
            # pure quadrature error, far below the h^2 envelope
            assert gap <= 1e-6 * (1.0 / n) ** 2 * (v @ v)


def test_k0_alt_exact_when_g_zero():
    prm = unit_params(g=1e-30, sigma_plus=0.5, sigma_minus=0.7)
    # g ~ 0 freezes the density, so both assemblies integrate identical bulk
    prof = solve_equilibrium(PressureLaw.isothermal(1.0),
                             PressureLaw.isothermal(2.0), prm)
    mesh = build_mesh(1.0, 1.0, 12, 12)
    forms = assemble_forms(mesh, prof, 1.0, prm)
    alt = assemble_forms_alt(mesh, prof, 1.0, prm)
    assert np.abs(forms.K0 - alt).max() <= 1e-12 * np.abs(alt).max()


def test_theta_decouples_at_negative_alpha(unstable_profile, params, mesh40):
    f3 = assemble_forms_3field(mesh40, unstable_profile, (1.0, 0.0), params)
    f2 = assemble_forms(mesh40, unstable_profile, 1.0, params)
    a3, v3 = min_eig_3field(f3, 0.01)
    a2, _ = min_eig(f2, 0.01)
    assert a3 < 0
    assert a3 == pytest.approx(a2, abs=1e-11)
    nf = f3.n_free
    theta = v3[nf:2 * nf]
    mass = f3.M[nf:2 * nf, nf:2 * nf]
    assert math.sqrt(abs(theta @ mass @ theta)) <= 1e-8


def test_3field_restriction_matches_2field(unstable_profile, params, mesh40):
    f3 = assemble_forms_3field(mesh40, unstable_profile, (1.0, 0.0), params)
    f2 = assemble_forms(mesh40, unstable_profile, 1.0, params)
    nf = f3.n_free
    idx = np.r_[0:nf, 2 * nf:3 * nf]
    assert np.abs(f3.K0[np.ix_(idx, idx)] - f2.K0).max() <= 1e-12
    assert np.abs(f3.K1[np.ix_(idx, idx)] - f2.K1).max() <= 1e-12
    assert np.abs(f3.M[np.ix_(idx, idx)] - f2.M).max() == 0.0


def test_3field_rotation_invariance(unstable_profile, params):
    # alpha depends on |xi| only: compare (1,0) against a rotated frequency
    mesh = build_mesh(1.0, 1.0, 24, 24)
    a_axis, _ = min_eig_3field(
        assemble_forms_3field(mesh, unstable_profile, (1.0, 0.0), params), 0.05)
    c, s = math.cos(0.7), math.sin(0.7)
    a_rot, _ = min_eig_3field(
        assemble_forms_3field(mesh, unstable_profile, (c, s), params), 0.05)
    assert a_rot == pytest.approx(a_axis, abs=1e-11)


def test_min_eig_requires_positive_s(unstable_profile, params, mesh40):
    forms = assemble_forms(mesh40, unstable_profile, 1.0, params)
    with pytest.raises(ValueError):
        min_eig(forms, 0.0)


def test_coordinate_export(tmp_path, unstable_profile, params):
    from rtstab.variational import export_matrix_coordinate
    mesh = build_mesh(1.0, 1.0, 2, 2)
    forms = assemble_forms(mesh, unstable_profile, 1.0, params)
    path = tmp_path / "K0.txt"
    export_matrix_coordinate(forms.K0, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "% 8 8"
    i, j, v = lines[1].split()
    assert forms.K0[int(i), int(j)] == float(v)
