"""Linear-stability analyzer for two stacked compressible viscous fluids.

Computes hydrostatic equilibrium profiles, the growth-rate dispersion curve
lambda(|xi|) via a constrained variational eigenvalue problem, the sharp rate
over the frequency lattice, the critical surface tension, and the stability
regime, with an independent time-evolution oracle validating every rate.
"""

from .classify import RegimeLabel, classify_regime, regime_report
from .dispersion import (DispersionPoint, GrowthSummary, SolverOptions,
                         critical_frequency, critical_tension, growth_rate,
                         negativity_probe, psi_bump, psi_bump_norm_sq,
                         sweep_lattice)
from .equilibrium import (EquilibriumProfile, PhysicalParams, PressureLaw,
                          check_admissibility, density_jump, enthalpy_weight,
                          solve_equilibrium)
from .evolve import (FrequencyState, IntegratorParams, Trajectory, advance,
                     energy_balance_residual, measure_growth, semidiscretize)
from .modes import (GrowingMode, assemble_mode, export_mode, ode_residual,
                    rotate_mode)
from .poisson_ext import (ExtensionParams, PeriodicField, extend_down,
                          extend_interface, extend_up_specialized,
                          vandermonde_coeffs)
from .variational import (Mesh1D, QuadraticForms, assemble_forms,
                          assemble_forms_alt, assemble_forms_3field,
                          build_mesh, evaluate_energy, min_eig, min_eig_3field)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
