"""Growth-rate dispersion curve, lattice sweep, and critical quantities.

At each admissible frequency magnitude the growth rate solves the fixed
point s = sqrt(-alpha(s)), i.e. the unique root of

    f(s) = s^2 + alpha(s)

on (0, S_max].  alpha is continuous and strictly increasing in s, so f is
too and bisection from a sign change is unconditionally safe.  Every rate
obeys lambda <= b g jump / mu_minus, which caps the bracket at

    S_max = s_max_factor * b * g * jump / mu_minus.

Instability is confined to the frequency window 0 < |xi| < xi_c with
xi_c = sqrt(jump g / sigma_minus) (all frequencies when sigma_minus = 0),
and disappears entirely once sigma_minus reaches the critical tension

    sigma_c = jump * g * max(L1^2, L2^2),

because the smallest nonzero lattice frequency then falls outside the
window.  The sweep enumerates xi in (1/L1)Z x (1/L2)Z, deduplicates by |xi|
(rates depend on the magnitude alone), solves inside the window and records
an alpha probe at the smallest s elsewhere.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from fractions import Fraction

import numpy as np

from .equilibrium import EquilibriumProfile, PhysicalParams
from .errors import NoSignChange, NotUnstableOrientation, SolverDivergence
from .variational import (Mesh1D, QuadraticForms, assemble_forms,
                          evaluate_energy, min_eig)


@dataclass(frozen=True)
class SolverOptions:
    """Root-finder and eigensolver knobs for a dispersion solve."""

    s_max_factor: float = 1.25
    s_min_frac: float = 1e-8
    root_tol: float = 1e-10
    max_iter: int = 200
    eig_method: str = "auto"


DEFAULT_OPTIONS = SolverOptions()


@dataclass(frozen=True)
class DispersionPoint:
    """One lattice frequency with its growth rate and solve metadata.

    lam is the fixed-point rate (0 when no growing mode exists at this
    frequency); alpha_at_star is alpha evaluated at the returned s (for
    lam = 0 it is the stability probe alpha(s_min) >= 0).
    """

    xi: tuple[float, float]
    xi_abs: float
    lam: float
    alpha_at_star: float
    minimizer: np.ndarray
    iterations: int
    converged: bool


@dataclass(frozen=True)
class GrowthSummary:
    """Sweep result: the sharp rate over the scanned lattice.

    Lambda is attained for sigma_minus > 0 (finitely many admissible
    frequencies); for sigma_minus = 0 the scan is cutoff-limited and
    lambda_star is the achieved lattice maximum without a guarantee that it
    exceeds half the true supremum.
    """

    Lambda: float
    argmax_xi: tuple[float, float] | None
    attained: bool
    lambda_star: float
    lambda_star_guaranteed: bool
    curve: tuple[DispersionPoint, ...]
    sigma_c: float
    xi_c: float


def critical_tension(profile: EquilibriumProfile, params: PhysicalParams) -> float:
    """sigma_c = jump * g * max(L1^2, L2^2)."""
    return profile.jump * params.g * max(params.L1**2, params.L2**2)


def critical_frequency(profile: EquilibriumProfile, params: PhysicalParams) -> float:
    """Frequency cutoff sqrt(jump*g/sigma_minus); +inf when sigma_minus = 0."""
    if profile.jump <= 0:
        raise NotUnstableOrientation(f"density jump {profile.jump} <= 0")
    if params.sigma_minus == 0:
        return math.inf
    return math.sqrt(profile.jump * params.g / params.sigma_minus)


def _bisect_root(f, lo: float, hi: float, f_lo: float, f_hi: float,
                 ftol: float, wtol: float, max_iter: int):
    """Bisection for an increasing f with f(lo) < 0 < f(hi).

    Returns (root, f(root), payload, iterations); f returns (value, payload).
    """
    if f_lo > 0 or f_hi <= 0:
        raise NoSignChange(f"f({lo}) = {f_lo}, f({hi}) = {f_hi} do not bracket a root")
    iterations = 0
    while iterations < max_iter:
        mid = 0.5 * (lo + hi)
        val, payload = f(mid)
        iterations += 1
        if abs(val) <= ftol or (hi - lo) <= wtol:
            return mid, val, payload, iterations
        if val < 0:
            lo = mid
        else:
            hi = mid
    raise SolverDivergence(f"bisection exceeded {max_iter} iterations")


def growth_rate(profile: EquilibriumProfile, xi_abs: float, mesh: Mesh1D,
                params: PhysicalParams, opts: SolverOptions = DEFAULT_OPTIONS,
                forms: QuadraticForms | None = None) -> DispersionPoint:
    """Solve s^2 + alpha(s) = 0 at one frequency magnitude.

    If the probe alpha(s_min) is already nonnegative there is no growing
    mode and lam = 0 is returned with the probe value.  A negative probe
    with no sign change on the bracket is an inconsistency and raises
    NoSignChange rather than being repaired.
    """
    if xi_abs <= 0:
        raise ValueError("xi_abs must be > 0")
    if forms is None:
        forms = assemble_forms(mesh, profile, xi_abs, params)
    jump = profile.jump
    bound = params.b * params.g * max(jump, 0.0) / params.mu_minus
    s_max = opts.s_max_factor * bound if bound > 0 else params.b * params.g / params.mu_minus
    s_min = opts.s_min_frac * s_max
    alpha0, v0 = min_eig(forms, s_min, opts.eig_method)
    xi = (float(xi_abs), 0.0)
    if alpha0 >= 0:
        return DispersionPoint(xi, float(xi_abs), 0.0, alpha0, v0, 1, True)
    f_lo = s_min**2 + alpha0
    if f_lo > 0:
        raise NoSignChange(
            f"alpha({s_min}) = {alpha0} < 0 but f(s_min) = {f_lo} > 0 at |xi| = {xi_abs}")
    alpha1, _v1 = min_eig(forms, s_max, opts.eig_method)
    f_hi = s_max**2 + alpha1
    if f_hi <= 0:
        raise NoSignChange(
            f"f(S_max) = {f_hi} <= 0 at |xi| = {xi_abs}; root exceeds the growth bound")

    def f(s):
        alpha, v = min_eig(forms, s, opts.eig_method)
        return s * s + alpha, (alpha, v)

    ftol = opts.root_tol * s_max**2
    wtol = opts.root_tol * s_max
    root, _fval, (alpha, v), iters = _bisect_root(
        f, s_min, s_max, f_lo, f_hi, ftol, wtol, opts.max_iter)
    return DispersionPoint(xi, float(xi_abs), root, alpha, v, iters + 2, True)


def _dedup_lattice(params: PhysicalParams, limit: float):
    """Nonzero lattice points below `limit`, grouped by exact |xi|^2.

    |xi|^2 = (m/L1)^2 + (n/L2)^2 is compared as an exact rational of the
    float inputs, so lattice images of equal magnitude collapse to a single
    representative (nonnegative components preferred, then largest m).
    """
    l1sq = Fraction(params.L1) ** 2
    l2sq = Fraction(params.L2) ** 2
    m_max = int(math.floor(limit * params.L1)) + 1
    n_max = int(math.floor(limit * params.L2)) + 1
    groups: dict[Fraction, tuple[int, int]] = {}
    for m in range(-m_max, m_max + 1):
        for n in range(-n_max, n_max + 1):
            if m == 0 and n == 0:
                continue
            key = Fraction(m * m) / l1sq + Fraction(n * n) / l2sq
            if float(key) >= limit * limit:
                continue
            cand = (m, n)
            best = groups.get(key)
            if best is None or (cand[0] >= 0, cand[1] >= 0, cand) > (
                    best[0] >= 0, best[1] >= 0, best):
                groups[key] = cand
    return sorted(groups.items(), key=lambda kv: kv[0])


def sweep_lattice(profile: EquilibriumProfile, mesh: Mesh1D, params: PhysicalParams,
                  cutoff: float, opts: SolverOptions = DEFAULT_OPTIONS,
                  threads: int = 1) -> GrowthSummary:
    """Scan lattice frequencies 0 < |xi| < cutoff and maximize the rate.

    Frequencies inside the instability window get a full fixed-point solve;
    the rest get a nonnegativity probe of alpha at the smallest s, recorded
    with lam = 0.  Points are independent, so the solve may run on a thread
    pool; results are reduced deterministically in ascending |xi|^2 order.
    """
    if not math.isfinite(cutoff) or cutoff <= 0:
        raise ValueError("cutoff must be finite and > 0")
    jump = profile.jump
    sigma_c = critical_tension(profile, params)
    if jump > 0:
        xi_c = critical_frequency(profile, params)
    else:
        xi_c = 0.0  # stable orientation: no instability window at all
    groups = _dedup_lattice(params, cutoff)

    def solve_one(item):
        key, (m, n) = item
        xi_abs = math.sqrt(float(key))
        point = growth_rate(profile, xi_abs, mesh, params, opts)
        return replace(point, xi=(m / params.L1, n / params.L2))

    def probe_one(item):
        key, (m, n) = item
        xi_abs = math.sqrt(float(key))
        forms = assemble_forms(mesh, profile, xi_abs, params)
        bound = params.b * params.g * max(jump, 0.0) / params.mu_minus
        s_max = opts.s_max_factor * bound if bound > 0 else params.b * params.g / params.mu_minus
        alpha0, v0 = min_eig(forms, opts.s_min_frac * s_max, opts.eig_method)
        return DispersionPoint((m / params.L1, n / params.L2), xi_abs,
                               0.0, alpha0, v0, 1, True)

    def run(item):
        key, _ = item
        if jump > 0 and math.sqrt(float(key)) < xi_c:
            return solve_one(item)
        return probe_one(item)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            curve = list(pool.map(run, groups))
    else:
        curve = [run(item) for item in groups]

    lam_max = 0.0
    argmax = None
    for pt in curve:
        if pt.lam > lam_max:
            lam_max = pt.lam
            argmax = pt.xi
    attained = jump <= 0 or params.sigma_minus > 0
    return GrowthSummary(lam_max, argmax, attained, lam_max, attained,
                         tuple(curve), sigma_c,
                         xi_c if jump > 0 else math.nan)


def psi_bump(x3, b: float, ell: float, exponent: float):
    """Compactly supported candidate profile ((1 - x3^2/d^2))^(exponent/2)
    with d = ell above and d = b below the interface; vanishes with its slope
    at both outer boundaries for exponent >= 5 and equals 1 at the interface."""
    x = np.asarray(x3, dtype=float)
    d = np.where(x >= 0, ell, b)
    base = np.clip(1.0 - (x / d) ** 2, 0.0, None)
    return base ** (exponent / 2.0)


def psi_bump_norm_sq(b: float, ell: float, exponent: float) -> float:
    """Closed form of int psi_bump^2 over (-b, ell):
    sqrt(pi) (b + ell) Gamma(a+1) / (2 Gamma(a + 3/2)) for a = exponent."""
    a = float(exponent)
    return math.sqrt(math.pi) * (b + ell) * math.gamma(a + 1.0) / (2.0 * math.gamma(a + 1.5))


def _project_p1(mesh: Mesh1D, elem_values) -> np.ndarray:
    """L2-project per-element quadrature samples onto continuous P1 nodes."""
    n = mesh.n_nodes
    mass = np.zeros((n, n))
    rhs = np.zeros(n)
    for e in range(mesh.n_elements):
        xq, wq, N, _dN = mesh.element_quad(e)
        vals = elem_values(e, xq)
        for q in range(xq.size):
            w = wq[q]
            for i, node in enumerate((e, e + 1)):
                rhs[node] += w * vals[q] * N[q, i]
                for j, node_j in enumerate((e, e + 1)):
                    mass[node, node_j] += w * N[q, i] * N[q, j]
    return np.linalg.solve(mass, rhs)


def negativity_probe(profile: EquilibriumProfile, xi_abs: float, s: float,
                     mesh: Mesh1D, params: PhysicalParams,
                     exponent: float = 5.0) -> float:
    """Energy E(.; s) at the interpolated bump candidate with phi = -psi'/|xi|.

    E < 0 certifies alpha(s) < 0 without an eigensolve (the candidate is an
    upper bound for the constrained infimum after J-normalization).  psi' is
    the elementwise derivative of the nodal interpolant, L2-projected back to
    the nodes; the essential value at -b is then enforced.
    """
    if xi_abs <= 0:
        raise ValueError("xi_abs must be > 0")
    if exponent < 5:
        raise ValueError("exponent must be >= 5 for an admissible candidate")
    psi_nodes = psi_bump(mesh.nodes, params.b, params.ell, exponent)
    dpsi_elem = np.diff(psi_nodes) / np.diff(mesh.nodes)

    phi_nodes = _project_p1(mesh, lambda e, xq: np.full(xq.size, -dpsi_elem[e] / xi_abs))
    phi_nodes[0] = 0.0
    v = np.zeros(mesh.ndof)
    v[:mesh.n_free] = phi_nodes[1:]
    v[mesh.n_free:] = psi_nodes[1:]
    forms = assemble_forms(mesh, profile, xi_abs, params)
    e_val, _j = evaluate_energy(forms, v, s)
    return e_val


def write_dispersion_csv(curve, path) -> None:
    """Curve CSV: xi1,xi2,xi_abs,lambda,alpha_at_star,iterations,converged."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("xi1,xi2,xi_abs,lambda,alpha_at_star,iterations,converged\n")
        for pt in curve:
            fh.write(f"{pt.xi[0]:.17g},{pt.xi[1]:.17g},{pt.xi_abs:.17g},"
                     f"{pt.lam:.17g},{pt.alpha_at_star:.17g},{pt.iterations},"
                     f"{'true' if pt.converged else 'false'}\n")


def summary_dict(summary: GrowthSummary) -> dict:
    """JSON-ready summary; an infinite cutoff serializes as the string 'inf'
    and a stable orientation (no cutoff at all) as null."""
    if math.isfinite(summary.xi_c):
        xi_c = summary.xi_c
    elif math.isinf(summary.xi_c):
        xi_c = "inf"
    else:
        xi_c = None
    return {
        "Lambda": summary.Lambda,
        "lambda_star": summary.lambda_star,
        "argmax_xi": list(summary.argmax_xi) if summary.argmax_xi else None,
        "attained": summary.attained,
        "sigma_c": summary.sigma_c,
        "xi_c": xi_c,
    }
