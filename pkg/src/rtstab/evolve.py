"""Time-evolution oracle: semidiscrete linearized dynamics at one frequency.

Restricting the linearized system to a single horizontal Fourier mode
exp(i xi.x') leaves profiles (q_hat(x3), u_hat(x3), eta_hat+-) governed by

    dq/dt = -div_xi(rho u),
    rho du/dt = -rho grad_xi(h'(rho) q) + div_xi S(u),
    deta+-/dt = u3 at the top / interface,

with grad_xi, div_xi the Fourier-substituted operators (horizontal
derivatives become i xi1, i xi2) and the dynamic boundary conditions entering
the weak momentum equation as natural terms with coefficients

    rho1 g + sigma_+ |xi|^2   at the top,
    -(jump g - sigma_- |xi|^2) at the interface,

the same numbers that appear as the variational point masses (times 2, the
matrices there absorb the 1/2).  Velocity components live in continuous P1
(essential zero at the bottom); q lives in P1 broken at the interface with an
h'(rho)-weighted projection of the continuity equation, which makes the
semidiscrete energy identity

    d/dt E + <D u, u> = jump * g * Re(eta_- conj(u3(0)))
    E = 1/2 int rho |u|^2 + 1/2 int h'(rho) |q|^2
      + 1/2 (rho1 g + sigma_+ |xi|^2) |eta_+|^2 + 1/2 sigma_- |xi|^2 |eta_-|^2

hold exactly, and the trapezoidal rule inherits it exactly at step midpoints
(quadratic invariants are preserved).  For a stable orientation (jump < 0)
the full energy adds -1/2 jump g |eta_-|^2 > 0 and is non-increasing at every
step, to round-off.  Growth rates are measured by least squares on
log|eta_-(t)| and cross-checked against the variational fixed point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from .equilibrium import EquilibriumProfile, PhysicalParams
from .errors import SingularStep, ZeroSignal
from .modes import GrowingMode
from .variational import Mesh1D


@dataclass(frozen=True)
class IntegratorParams:
    """Implicit one-step scheme selection and rate-fit window."""

    dt: float
    t_final: float
    scheme: str = "trapezoidal"
    fit_window: float = 0.5

    def __post_init__(self):
        if self.dt == 0:
            raise ValueError("dt must be nonzero")
        if not 0 < self.fit_window <= 1:
            raise ValueError("fit_window must lie in (0, 1]")
        if self.scheme not in ("trapezoidal", "implicit_euler"):
            raise ValueError(f"unknown scheme {self.scheme!r}")


@dataclass(frozen=True)
class FrequencyState:
    """Single-frequency state (q_hat, u_hat, eta_hat+-) at one time.

    u_hat rows are the three velocity components on all mesh nodes (the
    bottom value is pinned to zero); q_hat is broken P1 with the lower-layer
    nodes first, interface repeated.
    """

    q_hat: np.ndarray
    u_hat: np.ndarray
    eta_hat_plus: complex
    eta_hat_minus: complex
    time: float = 0.0


class EvolutionOperators:
    """Assembled semidiscrete system M dy/dt = A y with energy functionals.

    State layout: y = [q (nq) | u1, u2, u3 (each n_free) | eta_+, eta_-].
    """

    def __init__(self, mesh: Mesh1D, profile: EquilibriumProfile,
                 xi: tuple[float, float], params: PhysicalParams):
        self.mesh = mesh
        self.profile = profile
        self.xi = (float(xi[0]), float(xi[1]))
        self.params = params
        xi1, xi2 = self.xi
        xi_sq = xi1 * xi1 + xi2 * xi2
        nf = mesh.n_free
        i0 = mesh.interface_index
        nq = mesh.n_nodes + 1  # broken at the interface
        self.nq, self.nf = nq, nf
        self.nu = 3 * nf
        self.n = nq + self.nu + 2
        self.sigma_top_coef = profile.rho1 * params.g + params.sigma_plus * xi_sq
        self.sigma_int_coef = params.sigma_minus * xi_sq - profile.jump * params.g

        def qdof(e, local):
            node = e + local
            return node if e < i0 else node + 1

        def udof(comp, node):
            return None if node == 0 else nq + comp * nf + (node - 1)

        self.u3_top = udof(2, mesh.n_nodes - 1)
        self.u3_int = udof(2, i0)
        self.eta_plus_idx = nq + self.nu
        self.eta_minus_idx = nq + self.nu + 1

        rows_m, cols_m, vals_m = [], [], []
        rows_a, cols_a, vals_a = [], [], []

        def add(rows, cols, vals, i, j, v):
            if i is None or j is None or v == 0:
                return
            rows.append(i)
            cols.append(j)
            vals.append(v)

        for e in range(mesh.n_elements):
            layer = mesh.element_layer(e)
            mu = params.mu(layer)
            mu_p = params.mu_prime(layer)
            xq, wq, N, dN = mesh.element_quad(e)
            rho = np.asarray(profile.rho(xq, layer), float)
            drho = np.asarray(profile.drho(xq, layer), float)
            hp = np.asarray(profile.h_prime(xq, layer), float)
            udofs = [udof(c, n) for c in range(3) for n in (e, e + 1)]
            qdofs = [qdof(e, 0), qdof(e, 1)]
            mq_loc = np.zeros((2, 2))
            mu_loc = np.zeros((2, 2))
            b_loc = np.zeros((2, 6), dtype=complex)
            d_loc = np.zeros((6, 6), dtype=complex)
            for q in range(xq.size):
                w = wq[q]
                nn = N[q]
                z2 = np.zeros(2)
                r_u1 = np.concatenate([nn, z2, z2])
                r_u2 = np.concatenate([z2, nn, z2])
                r_u3 = np.concatenate([z2, z2, nn])
                r_du1 = np.concatenate([dN, z2, z2])
                r_du2 = np.concatenate([z2, dN, z2])
                r_du3 = np.concatenate([z2, z2, dN])
                mq_loc += w * hp[q] * np.outer(nn, nn)
                mu_loc += w * rho[q] * np.outer(nn, nn)
                # div_xi(rho u) = i xi1 rho u1 + i xi2 rho u2 + (rho u3)'
                div_rho_u = (1j * xi1 * rho[q] * r_u1 + 1j * xi2 * rho[q] * r_u2
                             + drho[q] * r_u3 + rho[q] * r_du3)
                b_loc += w * hp[q] * np.outer(nn, div_rho_u)
                # viscous dissipation, deviatoric split
                dv = 1j * xi1 * r_u1 + 1j * xi2 * r_u2 + r_du3
                d11 = 2j * xi1 * r_u1 - (2.0 / 3.0) * dv
                d22 = 2j * xi2 * r_u2 - (2.0 / 3.0) * dv
                d33 = 2.0 * r_du3 - (2.0 / 3.0) * dv
                d12 = 1j * xi1 * r_u2 + 1j * xi2 * r_u1
                d13 = 1j * xi1 * r_u3 + r_du1
                d23 = 1j * xi2 * r_u3 + r_du2
                herm = (np.outer(d11.conj(), d11) + np.outer(d22.conj(), d22)
                        + np.outer(d33.conj(), d33)
                        + 2.0 * (np.outer(d12.conj(), d12)
                                 + np.outer(d13.conj(), d13)
                                 + np.outer(d23.conj(), d23)))
                d_loc += w * (0.5 * mu * herm + mu_p * np.outer(dv.conj(), dv))
            for i in range(2):
                for j in range(2):
                    add(rows_m, cols_m, vals_m, qdofs[i], qdofs[j], mq_loc[i, j])
            for c in range(3):
                for i in range(2):
                    for j in range(2):
                        add(rows_m, cols_m, vals_m, udofs[2 * c + i],
                            udofs[2 * c + j], mu_loc[i, j])
            # A rows: q gets -B u; u gets +B^H q - D u
            for i in range(2):
                for j in range(6):
                    add(rows_a, cols_a, vals_a, qdofs[i], udofs[j], -b_loc[i, j])
                    add(rows_a, cols_a, vals_a, udofs[j], qdofs[i],
                        np.conj(b_loc[i, j]))
            for i in range(6):
                for j in range(6):
                    add(rows_a, cols_a, vals_a, udofs[i], udofs[j], -d_loc[i, j])

        # eta rows of M (identity) and the kinematic/boundary coupling in A
        for idx in (self.eta_plus_idx, self.eta_minus_idx):
            add(rows_m, cols_m, vals_m, idx, idx, 1.0)
        add(rows_a, cols_a, vals_a, self.eta_plus_idx, self.u3_top, 1.0)
        add(rows_a, cols_a, vals_a, self.eta_minus_idx, self.u3_int, 1.0)
        add(rows_a, cols_a, vals_a, self.u3_top, self.eta_plus_idx,
            -self.sigma_top_coef)
        add(rows_a, cols_a, vals_a, self.u3_int, self.eta_minus_idx,
            -self.sigma_int_coef)

        shape = (self.n, self.n)
        self.M = sp.csr_matrix((np.asarray(vals_m, complex), (rows_m, cols_m)),
                               shape=shape)
        self.A = sp.csr_matrix((np.asarray(vals_a, complex), (rows_a, cols_a)),
                               shape=shape)
        # blocks reused by the quadratic functionals
        self.Mq_block = self.M[:nq, :nq]
        self.Mu_block = self.M[nq:nq + self.nu, nq:nq + self.nu]
        # Hermitian dissipation block, kept separately for diagnostics.
        self.D = -self.A[nq:nq + self.nu, nq:nq + self.nu]

    # -- state packing ---------------------------------------------------
    def pack(self, state: FrequencyState) -> np.ndarray:
        mesh = self.mesh
        i0 = mesh.interface_index
        y = np.zeros(self.n, dtype=complex)
        y[:self.nq] = state.q_hat
        u = np.asarray(state.u_hat, dtype=complex)
        if u.shape != (3, mesh.n_nodes):
            raise ValueError("u_hat must have shape (3, n_nodes)")
        if np.abs(u[:, 0]).max() > 1e-13 * max(1.0, np.abs(u).max()):
            raise ValueError("u_hat must vanish at the bottom node")
        for c in range(3):
            y[self.nq + c * self.nf:self.nq + (c + 1) * self.nf] = u[c, 1:]
        y[self.eta_plus_idx] = state.eta_hat_plus
        y[self.eta_minus_idx] = state.eta_hat_minus
        return y

    def unpack(self, y: np.ndarray, time: float = 0.0) -> FrequencyState:
        mesh = self.mesh
        u = np.zeros((3, mesh.n_nodes), dtype=complex)
        for c in range(3):
            u[c, 1:] = y[self.nq + c * self.nf:self.nq + (c + 1) * self.nf]
        return FrequencyState(y[:self.nq].copy(), u, complex(y[self.eta_plus_idx]),
                              complex(y[self.eta_minus_idx]), time)

    # -- quadratic functionals -------------------------------------------
    def energy(self, y: np.ndarray) -> float:
        q = y[:self.nq]
        u = y[self.nq:self.nq + self.nu]
        e = 0.5 * np.real(np.vdot(q, self.Mq_block @ q)) \
            + 0.5 * np.real(np.vdot(u, self.Mu_block @ u))
        e += 0.5 * self.sigma_top_coef * abs(y[self.eta_plus_idx]) ** 2
        e += 0.5 * self.params.sigma_minus * (self.xi[0]**2 + self.xi[1]**2) \
            * abs(y[self.eta_minus_idx]) ** 2
        return float(e)

    def full_energy(self, y: np.ndarray) -> float:
        """Energy plus the interface term -1/2 jump g |eta_-|^2 (positive when
        the orientation is stable); non-increasing along exact dynamics."""
        return self.energy(y) - 0.5 * self.profile.jump * self.params.g \
            * abs(y[self.eta_minus_idx]) ** 2

    def dissipation(self, y: np.ndarray) -> float:
        u = y[self.nq:self.nq + self.nu]
        return float(np.real(np.vdot(u, self.D @ u)))

    def interface_work(self, y: np.ndarray) -> float:
        u3 = y[self.u3_int]
        eta = y[self.eta_minus_idx]
        return float(self.profile.jump * self.params.g
                     * np.real(eta * np.conj(u3)))


def semidiscretize(profile: EquilibriumProfile, mesh: Mesh1D,
                   xi: tuple[float, float], params: PhysicalParams) -> EvolutionOperators:
    """Assemble the single-frequency semidiscrete operators (mass, dynamics)."""
    return EvolutionOperators(mesh, profile, xi, params)


def state_from_mode(ops: EvolutionOperators, mode: GrowingMode) -> FrequencyState:
    """Growing-mode initial data: u = (-i phi, -i theta, psi), q = q_tilde,
    eta = eta_tilde; an approximate eigenvector of the semidiscrete system."""
    mesh = ops.mesh
    u = np.zeros((3, mesh.n_nodes), dtype=complex)
    u[0] = -1j * mode.phi
    u[1] = -1j * mode.theta
    u[2] = mode.psi
    q = np.concatenate([mode.q_tilde_minus, mode.q_tilde_plus]).astype(complex)
    return FrequencyState(q, u, complex(mode.eta_tilde_plus),
                          complex(mode.eta_tilde_minus), 0.0)


def random_state(ops: EvolutionOperators, seed: int = 0, scale: float = 1.0) -> FrequencyState:
    """Random complex initial data (essential constraints respected)."""
    rng = np.random.default_rng(seed)
    mesh = ops.mesh
    q = scale * (rng.standard_normal(ops.nq) + 1j * rng.standard_normal(ops.nq))
    u = scale * (rng.standard_normal((3, mesh.n_nodes))
                 + 1j * rng.standard_normal((3, mesh.n_nodes)))
    u[:, 0] = 0.0
    eta_p = scale * complex(rng.standard_normal(), rng.standard_normal())
    eta_m = scale * complex(rng.standard_normal(), rng.standard_normal())
    return FrequencyState(q, u, eta_p, eta_m, 0.0)


def interface_bump_state(ops: EvolutionOperators) -> FrequencyState:
    """Quiescent state with a unit interface displacement."""
    mesh = ops.mesh
    return FrequencyState(np.zeros(ops.nq, complex),
                          np.zeros((3, mesh.n_nodes), complex), 0.0 + 0.0j,
                          1.0 + 0.0j, 0.0)


@dataclass(frozen=True)
class Trajectory:
    """Dense record of an advance() run; states[k] is the step-k dof vector."""

    times: np.ndarray
    states: np.ndarray  # (n_steps + 1, n) complex
    scheme: str
    dt: float
    eta_plus_idx: int
    eta_minus_idx: int

    @property
    def eta_minus_abs(self) -> np.ndarray:
        return np.abs(self.states[:, self.eta_minus_idx])

    @property
    def eta_plus_abs(self) -> np.ndarray:
        return np.abs(self.states[:, self.eta_plus_idx])


def advance(state: FrequencyState, ops: EvolutionOperators,
            integ: IntegratorParams) -> Trajectory:
    """Integrate M dy/dt = A y with the chosen implicit one-step scheme.

    Trapezoidal: (M - dt/2 A) y+ = (M + dt/2 A) y;  implicit Euler:
    (M - dt A) y+ = M y.  The step matrix is factorized once.  dt may be
    negative (time reversal), in which case t_final must be too.
    """
    dt = integ.dt
    n_steps = int(round(integ.t_final / dt))
    if n_steps < 1:
        raise ValueError("t_final must cover at least one step of size dt")
    if integ.scheme == "trapezoidal":
        lhs = (ops.M - 0.5 * dt * ops.A).tocsc()
        rhs = (ops.M + 0.5 * dt * ops.A).tocsr()
    else:
        lhs = (ops.M - dt * ops.A).tocsc()
        rhs = ops.M.tocsr()
    try:
        solver = splu(lhs)
    except RuntimeError as exc:
        raise SingularStep(f"implicit step matrix is singular: {exc}") from exc
    y = ops.pack(state)
    out = np.empty((n_steps + 1, ops.n), dtype=complex)
    out[0] = y
    for k in range(n_steps):
        y = solver.solve(rhs @ y)
        if not np.all(np.isfinite(y)):
            raise SingularStep(f"non-finite state at step {k + 1}")
        out[k + 1] = y
    times = state.time + dt * np.arange(n_steps + 1)
    return Trajectory(times, out, integ.scheme, dt,
                      ops.eta_plus_idx, ops.eta_minus_idx)


def measure_growth(traj: Trajectory, fit_window: float) -> float:
    """Least-squares slope of log|eta_-(t)| over the trailing window fraction."""
    if not 0 < fit_window <= 1:
        raise ValueError("fit_window must lie in (0, 1]")
    sig = traj.eta_minus_abs
    k0 = int(math.floor((1.0 - fit_window) * (sig.size - 1)))
    k0 = min(k0, sig.size - 2)
    window = sig[k0:]
    if np.any(window <= 0.0) or not np.all(np.isfinite(window)):
        raise ZeroSignal("interface signal vanished or overflowed in the fit window")
    t = traj.times[k0:]
    return float(np.polyfit(t, np.log(window), 1)[0])


def energy_balance_residual(traj: Trajectory, ops: EvolutionOperators) -> np.ndarray:
    """Per-step defect of the discrete energy identity, relative to the energy.

    Trapezoidal evaluates the identity at step midpoints, where it holds to
    round-off; implicit Euler evaluates at the right endpoint and the
    returned series reflects the scheme's O(dt) dissipation bias.
    """
    n_steps = traj.states.shape[0] - 1
    res = np.empty(n_steps)
    e_prev = ops.energy(traj.states[0])
    for k in range(n_steps):
        y0 = traj.states[k]
        y1 = traj.states[k + 1]
        e_next = ops.energy(y1)
        y_eval = 0.5 * (y0 + y1) if traj.scheme == "trapezoidal" else y1
        flux = -ops.dissipation(y_eval) + ops.interface_work(y_eval)
        scale = max(abs(e_prev), abs(e_next), 1e-300)
        res[k] = (e_next - e_prev - traj.dt * flux) / scale
        e_prev = e_next
    return res


def write_trajectory_csv(traj: Trajectory, ops: EvolutionOperators, path) -> None:
    """CSV: t,abs_eta_minus,abs_eta_plus,energy,dissipation,balance_residual."""
    resid = energy_balance_residual(traj, ops)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("t,abs_eta_minus,abs_eta_plus,energy,dissipation,balance_residual\n")
        for k in range(traj.times.size):
            y = traj.states[k]
            r = 0.0 if k == 0 else resid[k - 1]
            fh.write(f"{traj.times[k]:.17g},{abs(y[traj.eta_minus_idx]):.17g},"
                     f"{abs(y[traj.eta_plus_idx]):.17g},{ops.energy(y):.17g},"
                     f"{ops.dissipation(y):.17g},{r:.17g}\n")
