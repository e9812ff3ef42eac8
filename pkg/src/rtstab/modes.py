"""Growing-mode assembly, rotation equivariance, and residual diagnostics.

A converged dispersion point at frequency magnitude |xi| carries the
minimizer (phi, psi) and the rate lam.  The full normal-mode fields follow
from the mode ansatz: with xi = (|xi|, 0) and theta = 0,

    w = (-i phi, -i theta, psi) e^{i xi.x'},
    q_tilde  = -(1/lam) [ (rho psi)' + rho (xi1 phi + xi2 theta) ],
    eta_tilde(+/-) = psi(ell)/lam, psi(0)/lam,

normalized so the interface displacement has unit L2 norm over the periodic
cell: |eta_tilde_minus| * 2 pi sqrt(L1 L2) = 1 (single-Fourier-mode
convention).  q_tilde generally jumps at the interface, so it is stored
broken, with the elementwise expression L2-projected onto per-layer P1.

Rotating the frequency maps (phi, theta) by the same rotation and leaves
psi, lam, q_tilde unchanged.

ode_residual evaluates the strong form of the reduced two-field system at
element midpoints plus every boundary/jump condition.  P1 fields have no
second derivatives, so fluxes are recovered from their midpoint samples with
per-layer finite differences (global L2 recovery pollutes the end elements
of each layer), which restores O(h)-or-better residual decay under
refinement for a converged eigenmode.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace

import numpy as np

from .dispersion import DispersionPoint
from .equilibrium import EquilibriumProfile, PhysicalParams
from .errors import DegenerateMode, NotARotation
from .variational import Mesh1D


@dataclass(frozen=True)
class GrowingMode:
    """Assembled normal-mode profiles on the mesh nodes.

    phi, theta, psi are full nodal arrays (bottom value 0); q_tilde_minus
    and q_tilde_plus are per-layer nodal arrays sharing the interface
    coordinate but not the value.
    """

    xi: tuple[float, float]
    lam: float
    mesh: Mesh1D
    phi: np.ndarray
    theta: np.ndarray
    psi: np.ndarray
    q_tilde_minus: np.ndarray
    q_tilde_plus: np.ndarray
    eta_tilde_plus: float
    eta_tilde_minus: float


def _project_layer_p1(mesh: Mesh1D, elements: range, node_lo: int, node_hi: int,
                      elem_values) -> np.ndarray:
    """L2-project per-element quadrature samples onto one layer's P1 nodes."""
    n = node_hi - node_lo + 1
    mass = np.zeros((n, n))
    rhs = np.zeros(n)
    for e in elements:
        xq, wq, N, _dN = mesh.element_quad(e)
        vals = elem_values(e, xq)
        loc = (e - node_lo, e - node_lo + 1)
        for q in range(xq.size):
            w = wq[q]
            for i in range(2):
                rhs[loc[i]] += w * vals[q] * N[q, i]
                for j in range(2):
                    mass[loc[i], loc[j]] += w * N[q, i] * N[q, j]
    return np.linalg.solve(mass, rhs)


def project_q_tilde(mesh: Mesh1D, profile: EquilibriumProfile, phi: np.ndarray,
                    theta: np.ndarray, psi: np.ndarray, xi: tuple[float, float],
                    lam: float) -> tuple[np.ndarray, np.ndarray]:
    """Broken P1 projection of -(1/lam)[(rho psi)' + rho (xi1 phi + xi2 theta)]."""
    xi1, xi2 = xi

    def raw(e, xq, layer):
        rho = np.asarray(profile.rho(xq, layer), float)
        drho = np.asarray(profile.drho(xq, layer), float)
        h = mesh.nodes[e + 1] - mesh.nodes[e]
        n1 = (mesh.nodes[e + 1] - xq) / h
        n2 = (xq - mesh.nodes[e]) / h
        psi_q = n1 * psi[e] + n2 * psi[e + 1]
        dpsi = (psi[e + 1] - psi[e]) / h
        phi_q = n1 * phi[e] + n2 * phi[e + 1]
        theta_q = n1 * theta[e] + n2 * theta[e + 1]
        horiz = xi1 * phi_q + xi2 * theta_q
        return -(drho * psi_q + rho * dpsi + rho * horiz) / lam

    i0 = mesh.interface_index
    q_minus = _project_layer_p1(mesh, range(0, i0), 0, i0,
                                lambda e, xq: raw(e, xq, "minus"))
    q_plus = _project_layer_p1(mesh, range(i0, mesh.n_elements), i0,
                               mesh.n_nodes - 1, lambda e, xq: raw(e, xq, "plus"))
    return q_minus, q_plus


def assemble_mode(point: DispersionPoint, profile: EquilibriumProfile,
                  mesh: Mesh1D) -> GrowingMode:
    """Build the normalized growing mode from a converged dispersion point."""
    if point.lam <= 0:
        raise ValueError("assemble_mode requires a growing point (lam > 0)")
    nf = mesh.n_free
    phi = np.zeros(mesh.n_nodes)
    psi = np.zeros(mesh.n_nodes)
    phi[1:] = point.minimizer[:nf]
    psi[1:] = point.minimizer[nf:]
    psi0 = psi[mesh.interface_index]
    if abs(psi0) < 1e-10:
        raise DegenerateMode(f"interface psi = {psi0} below 1e-10")
    params = profile.params
    lam = point.lam
    # |eta_minus| * 2 pi sqrt(L1 L2) = 1 after scaling.
    eta_minus_raw = psi0 / lam
    scale = 1.0 / (abs(eta_minus_raw) * 2.0 * math.pi * math.sqrt(params.L1 * params.L2))
    phi *= scale
    psi *= scale
    theta = np.zeros_like(phi)
    xi = (point.xi_abs, 0.0)
    q_minus, q_plus = project_q_tilde(mesh, profile, phi, theta, psi, xi, lam)
    return GrowingMode(xi, lam, mesh, phi, theta, psi, q_minus, q_plus,
                       eta_tilde_plus=psi[-1] / lam,
                       eta_tilde_minus=psi[mesh.interface_index] / lam)


def rotate_mode(mode: GrowingMode, R: np.ndarray) -> GrowingMode:
    """Map the mode to the rotated frequency R xi; psi and lam are unchanged
    while (phi, theta) rotate by R."""
    R = np.asarray(R, dtype=float)
    if R.shape != (2, 2) or np.abs(R.T @ R - np.eye(2)).max() > 1e-12 \
            or abs(np.linalg.det(R) - 1.0) > 1e-12:
        raise NotARotation("R must be a 2x2 proper rotation to 1e-12")
    xi_new = tuple(R @ np.asarray(mode.xi))
    phi_new = R[0, 0] * mode.phi + R[0, 1] * mode.theta
    theta_new = R[1, 0] * mode.phi + R[1, 1] * mode.theta
    return replace(mode, xi=(float(xi_new[0]), float(xi_new[1])),
                   phi=phi_new, theta=theta_new)


@dataclass(frozen=True)
class OdeResidualReport:
    """Max-abs strong-form residuals, one entry per equation/condition."""

    phi_interior: float
    psi_interior: float
    theta_interior: float
    top_shear: float
    top_stress: float
    jump_shear: float
    jump_stress: float
    bottom_phi: float
    bottom_psi: float

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def _flux_slope(mesh: Mesh1D, f_mid: np.ndarray) -> np.ndarray:
    """d/dx3 of a per-element flux at element midpoints, per layer.

    Central differences of the midpoint samples in the layer interior,
    one-sided at the first/last element of each layer (consistent, O(h)).
    """
    mids = 0.5 * (mesh.nodes[:-1] + mesh.nodes[1:])
    i0 = mesh.interface_index
    out = np.empty_like(f_mid)
    for lo, hi in ((0, i0), (i0, mesh.n_elements)):
        f = f_mid[lo:hi]
        m = mids[lo:hi]
        d = np.empty_like(f)
        if f.size >= 3:
            d[1:-1] = (f[2:] - f[:-2]) / (m[2:] - m[:-2])
            d[0] = (f[1] - f[0]) / (m[1] - m[0])
            d[-1] = (f[-1] - f[-2]) / (m[-1] - m[-2])
        else:
            d[:] = (f[-1] - f[0]) / (m[-1] - m[0]) if f.size == 2 else 0.0
        out[lo:hi] = d
    return out


def _flux_ends(mesh: Mesh1D, f_mid: np.ndarray) -> dict[str, float]:
    """Linear extrapolation of midpoint flux samples to the layer end nodes."""
    i0 = mesh.interface_index
    f_lo, f_hi = f_mid[:i0], f_mid[i0:]
    return {
        "bottom": 1.5 * f_lo[0] - 0.5 * f_lo[1],
        "int_minus": 1.5 * f_lo[-1] - 0.5 * f_lo[-2],
        "int_plus": 1.5 * f_hi[0] - 0.5 * f_hi[1],
        "top": 1.5 * f_hi[-1] - 0.5 * f_hi[-2],
    }


def ode_residual(mode: GrowingMode, profile: EquilibriumProfile,
                 params: PhysicalParams) -> OdeResidualReport:
    """Strong-form residuals of the reduced normal-mode ODE system.

    The in-plane component (xi1 phi + xi2 theta)/|xi| feeds the phi equation;
    the transverse component feeds the decoupled theta equation (identically
    zero for modes built here).  Interior residuals are evaluated at element
    midpoints with recovered fluxes; boundary and jump rows use the recovered
    one-sided flux values at the end nodes.
    """
    mesh = mode.mesh
    lam = mode.lam
    xi_abs = math.hypot(*mode.xi)
    if xi_abs == 0:
        raise ValueError("mode frequency must be nonzero")
    phi_par = (mode.xi[0] * mode.phi + mode.xi[1] * mode.theta) / xi_abs
    phi_perp = (-mode.xi[1] * mode.phi + mode.xi[0] * mode.theta) / xi_abs
    psi = mode.psi
    nodes = mesh.nodes
    h = np.diff(nodes)
    dphi = np.diff(phi_par) / h
    dperp = np.diff(phi_perp) / h
    dpsi = np.diff(psi) / h
    i0 = mesh.interface_index

    def coeffs(e):
        layer = mesh.element_layer(e)
        return layer, params.mu(layer), params.mu_prime(layer)

    # Midpoint flux samples.  flux_phi = lam mu phi'; flux_perp likewise for
    # the transverse field; flux_v = (4 lam mu/3 + lam mu') psi'
    #                              + (lam mu' + lam mu/3) |xi| phi;
    # flux_p = h'(rho) [ (rho psi)' + rho |xi| phi ]  (note P' = rho h').
    mids = 0.5 * (nodes[:-1] + nodes[1:])
    ne = mesh.n_elements
    f_phi = np.empty(ne)
    f_perp = np.empty(ne)
    f_v = np.empty(ne)
    f_p = np.empty(ne)
    phi_mid = 0.5 * (phi_par[:-1] + phi_par[1:])
    psi_mid = 0.5 * (psi[:-1] + psi[1:])
    perp_mid = 0.5 * (phi_perp[:-1] + phi_perp[1:])
    rho_mid = np.empty(ne)
    dp_mid = np.empty(ne)
    for e in range(ne):
        layer, mu, mu_p = coeffs(e)
        rho = float(profile.rho(mids[e], layer))
        dp = float(profile.law(layer).derivative(rho))
        drho = -params.g * rho / dp
        rho_mid[e], dp_mid[e] = rho, dp
        f_phi[e] = lam * mu * dphi[e]
        f_perp[e] = lam * mu * dperp[e]
        f_v[e] = (4 * lam * mu / 3 + lam * mu_p) * dpsi[e] \
            + (lam * mu_p + lam * mu / 3) * xi_abs * phi_mid[e]
        f_p[e] = (dp / rho) * (drho * psi_mid[e] + rho * dpsi[e]
                               + rho * xi_abs * phi_mid[e])

    df_phi = _flux_slope(mesh, f_phi)
    df_perp = _flux_slope(mesh, f_perp)
    df_v = _flux_slope(mesh, f_v)
    df_p = _flux_slope(mesh, f_p)

    r_phi = 0.0
    r_psi = 0.0
    r_perp = 0.0
    for e in range(ne):
        layer, mu, mu_p = coeffs(e)
        rho, dp = rho_mid[e], dp_mid[e]
        drho = -params.g * rho / dp
        a_coef = lam**2 * rho + lam * mu * xi_abs**2 \
            + xi_abs**2 * (lam * mu_p + lam * mu / 3 + dp * rho)
        b_term = xi_abs * ((lam * mu_p + lam * mu / 3) * dpsi[e]
                           + dp * (drho * psi_mid[e] + rho * dpsi[e]))
        r_phi = max(r_phi, abs(-df_phi[e] + a_coef * phi_mid[e] + b_term))
        r_psi = max(r_psi, abs(-df_v[e] - rho * df_p[e]
                               + (lam**2 * rho + lam * mu * xi_abs**2) * psi_mid[e]))
        r_perp = max(r_perp, abs(-df_perp[e]
                                 + (lam**2 * rho + lam * mu * xi_abs**2) * perp_mid[e]))

    # Boundary and jump rows from layer-end extrapolated fluxes.
    mu_pl = params.mu_plus
    mu_mi = params.mu_minus
    ends_v = _flux_ends(mesh, f_v)
    ends_p = _flux_ends(mesh, f_p)
    ends_dphi = _flux_ends(mesh, dphi)
    top_shear = abs(mu_pl * lam * (xi_abs * psi[-1] - ends_dphi["top"]))
    # normal stress at the top: -flux_v + lam mu |xi| phi - rho1 flux_p
    #                           = (rho1 g + sigma_+ |xi|^2) psi
    top_stress = abs(-ends_v["top"] + lam * mu_pl * xi_abs * phi_par[-1]
                     - profile.rho1 * ends_p["top"]
                     - (profile.rho1 * params.g + params.sigma_plus * xi_abs**2) * psi[-1])
    jump_shear = abs(mu_pl * lam * (xi_abs * psi[i0] - ends_dphi["int_plus"])
                     - mu_mi * lam * (xi_abs * psi[i0] - ends_dphi["int_minus"]))
    # jump of (flux_v - lam mu |xi| phi + rho flux_p) balances
    # -(jump g - sigma_- |xi|^2) psi(0)
    jump_stress = abs((ends_v["int_plus"] - lam * mu_pl * xi_abs * phi_par[i0]
                       + profile.rho_top_interface * ends_p["int_plus"])
                      - (ends_v["int_minus"] - lam * mu_mi * xi_abs * phi_par[i0]
                         + profile.rho_bot_interface * ends_p["int_minus"])
                      + (profile.jump * params.g - params.sigma_minus * xi_abs**2) * psi[i0])
    return OdeResidualReport(r_phi, r_psi, r_perp, top_shear, top_stress,
                             jump_shear, jump_stress,
                             abs(phi_par[0]), abs(psi[0]))


def export_mode(mode: GrowingMode, csv_path, json_path=None) -> None:
    """Write the mode profiles (CSV) and a JSON sidecar with xi, lam, eta.

    The interface row appears once per layer because q_tilde jumps there.
    """
    if json_path is None:
        json_path = str(csv_path) + ".json"
    mesh = mode.mesh
    i0 = mesh.interface_index
    with open(csv_path, "w", encoding="utf-8") as fh:
        fh.write("x3,phi,theta,psi,q_tilde\n")
        for k in range(i0 + 1):
            fh.write(f"{mesh.nodes[k]:.17g},{mode.phi[k]:.17g},{mode.theta[k]:.17g},"
                     f"{mode.psi[k]:.17g},{mode.q_tilde_minus[k]:.17g}\n")
        for k in range(i0, mesh.n_nodes):
            fh.write(f"{mesh.nodes[k]:.17g},{mode.phi[k]:.17g},{mode.theta[k]:.17g},"
                     f"{mode.psi[k]:.17g},{mode.q_tilde_plus[k - i0]:.17g}\n")
    sidecar = {"xi": [mode.xi[0], mode.xi[1]], "lambda": mode.lam,
               "eta_plus": mode.eta_tilde_plus, "eta_minus": mode.eta_tilde_minus}
    with open(json_path, "w", encoding="utf-8") as fh:
        json.dump(sidecar, fh, indent=2, sort_keys=True)
        fh.write("\n")


def import_mode_csv(csv_path) -> dict[str, np.ndarray]:
    """Re-read an exported mode CSV into column arrays (round-trip exact)."""
    data = np.genfromtxt(csv_path, delimiter=",", names=True)
    return {name: np.atleast_1d(data[name]) for name in data.dtype.names}
