"""Hydrostatic equilibrium of a two-layer barotropic fluid column.

The steady column occupies [-b, 0] (lower fluid, "-") and [0, ell] (upper
fluid, "+").  In each layer the density profile solves

    d(P(rho))/dx3 = -g * rho        <=>      drho/dx3 = -g * rho / P'(rho),

anchored by the atmospheric condition P_plus(rho_plus(ell)) = p_atm at the top
and pressure continuity P_plus(rho_plus(0)) = P_minus(rho_minus(0)) at the
internal interface.  The density itself may jump there; the sign of

    jump = rho_plus(0) - rho_minus(0)

decides between the heavy-above-light (unstable, jump > 0) and stable
orientations.  Everything downstream consumes the profile through rho, its
hydrostatic derivative, and the enthalpy weight h'(rho) = P'(rho)/rho.

Profiles are integrated top-down with classical fixed-step RK4 and stored as
dense samples with a quintic spline per layer, so interpolation error stays
below the integrator's O(h^4) node error.  Closed forms exist for isothermal
and gamma=2 polytropic laws and are used in tests as oracles only; the solver
path is always the integrator.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import PchipInterpolator, make_interp_spline
from scipy.optimize import brentq

from .errors import DegeneratePressure, InverseFailure, NonPositiveDensity

# P'(rho) at or below this value aborts the hydrostatic integration.
PRESSURE_SLOPE_TOL = 1e-12


@dataclass(frozen=True)
class PressureLaw:
    """Barotropic pressure law P(rho) with derivative and inverse.

    kind is one of "isothermal" (P = K rho), "polytropic" (P = K rho^gamma)
    or "tabulated" (monotone cubic through (rho, P) samples).  P must be
    smooth, positive and strictly increasing on the traversed density range.
    """

    kind: str
    params: tuple = ()
    rho_table: np.ndarray | None = field(default=None, repr=False)
    p_table: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.kind == "isothermal":
            (k,) = self.params
            if k <= 0:
                raise ValueError("isothermal coefficient K must be > 0")
        elif self.kind == "polytropic":
            k, gamma = self.params
            if k <= 0 or gamma < 1:
                raise ValueError("polytropic law requires K > 0 and gamma >= 1")
        elif self.kind == "tabulated":
            rho = np.asarray(self.rho_table, dtype=float)
            p = np.asarray(self.p_table, dtype=float)
            if rho.ndim != 1 or rho.shape != p.shape or rho.size < 4:
                raise ValueError("tabulated law needs matching 1d tables, >= 4 points")
            if np.any(np.diff(rho) <= 0) or np.any(np.diff(p) <= 0):
                raise ValueError("tabulated law must be strictly increasing in rho and P")
            if rho[0] <= 0 or p[0] <= 0:
                raise ValueError("tabulated law must have positive rho and P")
            interp = PchipInterpolator(rho, p)
            # Monotone data + pchip give dP/drho >= 0; verify strictness away
            # from the nodes so DegeneratePressure can surface early.
            probe = np.linspace(rho[0], rho[-1], 8 * rho.size)
            if np.any(interp.derivative()(probe) < 0):
                raise ValueError("tabulated interpolant lost monotonicity")
            object.__setattr__(self, "_interp", interp)
            object.__setattr__(self, "_dinterp", interp.derivative())
            object.__setattr__(self, "rho_table", rho)
            object.__setattr__(self, "p_table", p)
        else:
            raise ValueError(f"unknown pressure-law kind {self.kind!r}")

    @classmethod
    def isothermal(cls, k: float) -> "PressureLaw":
        return cls("isothermal", (float(k),))

    @classmethod
    def polytropic(cls, k: float, gamma: float) -> "PressureLaw":
        return cls("polytropic", (float(k), float(gamma)))

    @classmethod
    def tabulated(cls, rho, p) -> "PressureLaw":
        return cls("tabulated", (), np.asarray(rho, float), np.asarray(p, float))

    def value(self, rho):
        """P(rho); vectorized."""
        if self.kind == "isothermal":
            return self.params[0] * np.asarray(rho, float)
        if self.kind == "polytropic":
            k, gamma = self.params
            return k * np.asarray(rho, float) ** gamma
        return self._interp(rho)

    def derivative(self, rho):
        """P'(rho); vectorized."""
        if self.kind == "isothermal":
            return np.full_like(np.asarray(rho, float), self.params[0])
        if self.kind == "polytropic":
            k, gamma = self.params
            return k * gamma * np.asarray(rho, float) ** (gamma - 1.0)
        return self._dinterp(rho)

    def inverse(self, p: float) -> float:
        """rho with P(rho) = p, to relative tolerance 1e-12."""
        if self.kind == "isothermal":
            if p <= 0:
                raise InverseFailure(f"isothermal inverse undefined for p = {p}")
            return p / self.params[0]
        if self.kind == "polytropic":
            if p <= 0:
                raise InverseFailure(f"polytropic inverse undefined for p = {p}")
            k, gamma = self.params
            return (p / k) ** (1.0 / gamma)
        lo, hi = float(self.p_table[0]), float(self.p_table[-1])
        if not (lo <= p <= hi):
            raise InverseFailure(f"pressure {p} outside table range [{lo}, {hi}]")
        root = brentq(lambda r: float(self._interp(r)) - p,
                      float(self.rho_table[0]), float(self.rho_table[-1]),
                      xtol=1e-15, rtol=1e-15)
        return float(root)


@dataclass(frozen=True)
class PhysicalParams:
    """Geometry, gravity, atmosphere, viscosities and surface tensions."""

    b: float
    ell: float
    L1: float
    L2: float
    g: float
    p_atm: float
    mu_plus: float
    mu_minus: float
    mu_prime_plus: float = 0.0
    mu_prime_minus: float = 0.0
    sigma_plus: float = 0.0
    sigma_minus: float = 0.0

    def __post_init__(self):
        for name in ("b", "ell", "L1", "L2", "g", "p_atm"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be > 0")
        if self.mu_plus <= 0 or self.mu_minus <= 0:
            raise ValueError("shear viscosities mu_plus, mu_minus must be > 0")
        if self.mu_prime_plus < 0 or self.mu_prime_minus < 0:
            raise ValueError("bulk viscosities mu_prime_plus, mu_prime_minus must be >= 0")
        if self.sigma_plus < 0 or self.sigma_minus < 0:
            raise ValueError("surface tensions sigma_plus, sigma_minus must be >= 0")

    def mu(self, layer: str) -> float:
        return self.mu_plus if layer == "plus" else self.mu_minus

    def mu_prime(self, layer: str) -> float:
        return self.mu_prime_plus if layer == "plus" else self.mu_prime_minus


@dataclass(frozen=True)
class EquilibriumProfile:
    """Piecewise equilibrium density with layer-wise spline interpolation.

    rho1 is the density at the top surface, rho_top_interface and
    rho_bot_interface the one-sided values at the internal interface, and
    jump their difference (upper minus lower).
    """

    law_plus: PressureLaw
    law_minus: PressureLaw
    params: PhysicalParams
    x_plus: np.ndarray
    rho_plus_samples: np.ndarray
    x_minus: np.ndarray
    rho_minus_samples: np.ndarray
    rho1: float
    rho_top_interface: float
    rho_bot_interface: float
    jump: float

    @classmethod
    def from_samples(cls, law_plus, law_minus, params, x_plus, rho_plus,
                     x_minus, rho_minus) -> "EquilibriumProfile":
        x_plus = np.asarray(x_plus, float)
        x_minus = np.asarray(x_minus, float)
        rho_plus = np.asarray(rho_plus, float)
        rho_minus = np.asarray(rho_minus, float)
        prof = cls(law_plus, law_minus, params, x_plus, rho_plus, x_minus,
                   rho_minus, rho1=float(rho_plus[-1]),
                   rho_top_interface=float(rho_plus[0]),
                   rho_bot_interface=float(rho_minus[-1]),
                   jump=float(rho_plus[0]) - float(rho_minus[-1]))
        k = 5 if x_plus.size >= 6 and x_minus.size >= 6 else 3
        object.__setattr__(prof, "_spl_plus", make_interp_spline(x_plus, rho_plus, k=k))
        object.__setattr__(prof, "_spl_minus", make_interp_spline(x_minus, rho_minus, k=k))
        return prof

    def law(self, layer: str) -> PressureLaw:
        return self.law_plus if layer == "plus" else self.law_minus

    def rho_plus(self, x3):
        return self._spl_plus(x3)

    def rho_minus(self, x3):
        return self._spl_minus(x3)

    def rho(self, x3, layer: str | None = None):
        """Density at x3; the interface value is taken from `layer` (default:
        upper side for x3 >= 0)."""
        if layer is None:
            layer = "plus" if np.all(np.asarray(x3) >= 0) else "minus"
        return self.rho_plus(x3) if layer == "plus" else self.rho_minus(x3)

    def drho(self, x3, layer: str):
        """Hydrostatic density slope -g rho / P'(rho) on the given layer."""
        r = self.rho(x3, layer)
        return -self.params.g * r / self.law(layer).derivative(r)

    def h_prime(self, x3, layer: str):
        """Enthalpy weight h'(rho(x3)) = P'(rho(x3)) / rho(x3)."""
        r = self.rho(x3, layer)
        return self.law(layer).derivative(r) / r

    def pressure(self, x3, layer: str):
        return self.law(layer).value(self.rho(x3, layer))


def _rk4_down(law: PressureLaw, g: float, rho_start: float, x_start: float,
              x_end: float, n_nodes: int) -> tuple[np.ndarray, np.ndarray]:
    """Integrate drho/dx = -g rho/P'(rho) from x_start down to x_end < x_start."""

    def f(rho):
        dp = float(law.derivative(rho))
        if dp <= PRESSURE_SLOPE_TOL:
            raise DegeneratePressure(f"P'({rho}) = {dp} <= {PRESSURE_SLOPE_TOL}")
        return -g * rho / dp

    xs = np.linspace(x_start, x_end, n_nodes)
    h = xs[1] - xs[0]  # negative
    rhos = np.empty(n_nodes)
    rhos[0] = rho_start
    r = rho_start
    for i in range(n_nodes - 1):
        k1 = f(r)
        k2 = f(r + 0.5 * h * k1)
        k3 = f(r + 0.5 * h * k2)
        k4 = f(r + h * k3)
        r = r + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        if r <= 0 or not np.isfinite(r):
            raise NonPositiveDensity(f"rho = {r} at x3 = {xs[i + 1]}")
        rhos[i + 1] = r
    return xs[::-1].copy(), rhos[::-1].copy()


def solve_equilibrium(law_plus: PressureLaw, law_minus: PressureLaw,
                      params: PhysicalParams, n_samples: int = 513) -> EquilibriumProfile:
    """Solve the two-layer hydrostatic ODE system.

    Integrates the upper layer down from rho_plus(ell) = P_plus^{-1}(p_atm),
    matches the pressure at the interface to seed rho_minus(0), then
    integrates the lower layer down to -b.  n_samples is the node count per
    layer for the stored profile.
    """
    if n_samples < 8:
        raise ValueError("n_samples must be >= 8 per layer")
    g = params.g
    rho_top = law_plus.inverse(params.p_atm)
    if rho_top <= 0:
        raise NonPositiveDensity(f"top density {rho_top} <= 0")
    x_p, rho_p = _rk4_down(law_plus, g, rho_top, params.ell, 0.0, n_samples)
    p_interface = float(law_plus.value(rho_p[0]))
    rho_minus_top = law_minus.inverse(p_interface)
    if rho_minus_top <= 0:
        raise NonPositiveDensity(f"lower interface density {rho_minus_top} <= 0")
    x_m, rho_m = _rk4_down(law_minus, g, rho_minus_top, 0.0, -params.b, n_samples)
    return EquilibriumProfile.from_samples(law_plus, law_minus, params,
                                           x_p, rho_p, x_m, rho_m)


def density_jump(profile: EquilibriumProfile) -> float:
    """Signed interface density jump rho_plus(0) - rho_minus(0)."""
    return profile.jump


def enthalpy_weight(profile: EquilibriumProfile, x3: float,
                    law: PressureLaw | None = None) -> float:
    """h'(rho(x3)) = P'(rho(x3))/rho(x3); `law` picks the layer at x3 = 0."""
    p = profile.params
    if not (-p.b <= x3 <= p.ell):
        raise ValueError(f"x3 = {x3} outside [{-p.b}, {p.ell}]")
    if law is None:
        layer = "plus" if x3 >= 0 else "minus"
    elif law is profile.law_plus:
        layer = "plus"
    elif law is profile.law_minus:
        layer = "minus"
    else:
        raise ValueError("law does not belong to this profile")
    if layer == "plus" and x3 < 0:
        raise ValueError(f"x3 = {x3} not in the upper layer")
    if layer == "minus" and x3 > 0:
        raise ValueError(f"x3 = {x3} not in the lower layer")
    return float(profile.h_prime(x3, layer))


@dataclass(frozen=True)
class AdmissibilityReport:
    """Numeric admissibility summary for an equilibrium profile."""

    min_density: float
    argmin_x3: float
    max_hydrostatic_residual: float
    pressure_continuity_residual: float
    top_pressure_residual: float
    min_pressure_slope: float
    passed: bool
    failures: tuple[str, ...]


def check_admissibility(profile: EquilibriumProfile, hydro_tol: float = 1e-6,
                        match_tol: float = 1e-9, n_probe: int = 512) -> AdmissibilityReport:
    """Check positivity, P' > 0, the hydrostatic residual and pressure matching.

    The hydrostatic residual |d(P(rho))/dx3 + g rho| is evaluated through the
    stored spline's derivative on a dense probe grid, so it measures the
    actual integration + interpolation error of the profile.
    """
    p = profile.params
    failures = []
    min_density = math.inf
    argmin = 0.0
    max_resid = 0.0
    min_slope = math.inf
    for layer, (a, b) in (("minus", (-p.b, 0.0)), ("plus", (0.0, p.ell))):
        stored = profile.x_plus if layer == "plus" else profile.x_minus
        xs = np.union1d(np.linspace(a, b, n_probe), stored)
        spl = profile._spl_plus if layer == "plus" else profile._spl_minus
        rho = spl(xs)
        i = int(np.argmin(rho))
        if rho[i] < min_density:
            min_density, argmin = float(rho[i]), float(xs[i])
        if rho[i] <= 0:
            failures.append("NonPositiveDensity")
            continue
        dp = profile.law(layer).derivative(rho)
        min_slope = min(min_slope, float(np.min(dp)))
        resid = np.abs(dp * spl(xs, 1) + p.g * rho)
        max_resid = max(max_resid, float(np.max(resid)))
    if min_slope <= PRESSURE_SLOPE_TOL:
        failures.append("DegeneratePressure")
    if max_resid > hydro_tol:
        failures.append("HydrostaticResidual")
    cont = abs(float(profile.law_plus.value(profile.rho_top_interface))
               - float(profile.law_minus.value(profile.rho_bot_interface)))
    top = abs(float(profile.law_plus.value(profile.rho1)) - p.p_atm)
    if cont > match_tol:
        failures.append("PressureContinuity")
    if top > match_tol:
        failures.append("TopPressure")
    return AdmissibilityReport(min_density, argmin, max_resid, cont, top,
                               min_slope, not failures, tuple(failures))


def export_profile_csv(profile: EquilibriumProfile, path) -> None:
    """Write the sampled profile as CSV: x3,rho,pressure,h_prime,layer."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("x3,rho,pressure,h_prime,layer\n")
        for layer, xs, rhos in (("minus", profile.x_minus, profile.rho_minus_samples),
                                ("plus", profile.x_plus, profile.rho_plus_samples)):
            law = profile.law(layer)
            for x, r in zip(xs, rhos):
                pres = float(law.value(r))
                hp = float(law.derivative(r)) / r
                fh.write(f"{x:.17g},{r:.17g},{pres:.17g},{hp:.17g},{layer}\n")
