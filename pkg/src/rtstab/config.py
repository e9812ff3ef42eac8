"""Run-configuration schema: JSON in, validated dataclasses out.

Layout (defaults in parentheses):

    {
      "geometry":  {"b": 1.0, "ell": 1.0, "L1": 1.0, "L2": 1.0},
      "gravity":   1.0,
      "atmosphere": 1.0,
      "fluids": {
        "plus":  {"law": {"kind": "isothermal", "params": [1.0]},
                  "mu": 1.0, "mu_prime": 0.0},
        "minus": {"law": {"kind": "polytropic", "params": [1.0, 2.0]},
                  "mu": 1.0, "mu_prime": 0.0}
      },
      "surface_tension": {"sigma_plus": 0.0, "sigma_minus": 0.0},
      "numerics": { "n_minus" (100), "n_plus" (100), "n_samples" (513),
                    "eig_tol" (1e-10), "root_tol" (1e-10),
                    "s_max_factor" (1.25), "xi_cutoff" (8.0),
                    "dt" (null = 0.01/lambda), "t_final" (null = 6/lambda),
                    "scheme" ("trapezoidal"), "fit_window" (0.5),
                    "zero_epsilon" (1e-12) }
    }

Tabulated laws carry "rho" and "p" arrays instead of "params".  Validation
failures raise ConfigError with the violated constraint spelled out.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from .equilibrium import PhysicalParams, PressureLaw
from .errors import ConfigError


@dataclass(frozen=True)
class NumericsConfig:
    n_minus: int = 100
    n_plus: int = 100
    n_samples: int = 513
    eig_tol: float = 1e-10
    root_tol: float = 1e-10
    s_max_factor: float = 1.25
    xi_cutoff: float = 8.0
    dt: float | None = None
    t_final: float | None = None
    scheme: str = "trapezoidal"
    fit_window: float = 0.5
    zero_epsilon: float = 1e-12

    def __post_init__(self):
        if self.n_minus < 2 or self.n_plus < 2:
            raise ConfigError("numerics.n_minus and numerics.n_plus must be >= 2")
        if self.n_samples < 8:
            raise ConfigError("numerics.n_samples must be >= 8")
        for name in ("eig_tol", "root_tol", "s_max_factor", "xi_cutoff",
                     "fit_window", "zero_epsilon"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"numerics.{name} must be > 0")
        if self.fit_window > 1:
            raise ConfigError("numerics.fit_window must be <= 1")
        if self.dt is not None and self.dt <= 0:
            raise ConfigError("numerics.dt must be > 0 when given")
        if self.t_final is not None and self.t_final <= 0:
            raise ConfigError("numerics.t_final must be > 0 when given")
        if self.scheme not in ("trapezoidal", "implicit_euler"):
            raise ConfigError("numerics.scheme must be trapezoidal or implicit_euler")


@dataclass(frozen=True)
class RunConfig:
    params: PhysicalParams
    law_plus: PressureLaw
    law_minus: PressureLaw
    numerics: NumericsConfig


def _law_from_dict(d: dict, where: str) -> PressureLaw:
    try:
        kind = d["kind"]
        if kind == "isothermal":
            return PressureLaw.isothermal(*d["params"])
        if kind == "polytropic":
            return PressureLaw.polytropic(*d["params"])
        if kind == "tabulated":
            return PressureLaw.tabulated(d["rho"], d["p"])
        raise ConfigError(f"{where}.kind must be isothermal, polytropic or tabulated")
    except ConfigError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"invalid pressure law at {where}: {exc}") from exc


def parse_config(doc: dict) -> RunConfig:
    try:
        geo = doc["geometry"]
        fluids = doc["fluids"]
        st = doc.get("surface_tension", {})
        params = PhysicalParams(
            b=float(geo["b"]), ell=float(geo["ell"]),
            L1=float(geo["L1"]), L2=float(geo["L2"]),
            g=float(doc["gravity"]), p_atm=float(doc["atmosphere"]),
            mu_plus=float(fluids["plus"]["mu"]),
            mu_minus=float(fluids["minus"]["mu"]),
            mu_prime_plus=float(fluids["plus"].get("mu_prime", 0.0)),
            mu_prime_minus=float(fluids["minus"].get("mu_prime", 0.0)),
            sigma_plus=float(st.get("sigma_plus", 0.0)),
            sigma_minus=float(st.get("sigma_minus", 0.0)),
        )
    except KeyError as exc:
        raise ConfigError(f"missing config key: {exc}") from exc
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid physical parameters: {exc}") from exc
    law_plus = _law_from_dict(fluids["plus"]["law"], "fluids.plus.law")
    law_minus = _law_from_dict(fluids["minus"]["law"], "fluids.minus.law")
    try:
        numerics = NumericsConfig(**doc.get("numerics", {}))
    except TypeError as exc:
        raise ConfigError(f"unknown numerics option: {exc}") from exc
    return RunConfig(params, law_plus, law_minus, numerics)


def load_config(path) -> RunConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError("config root must be a JSON object")
    return parse_config(doc)
