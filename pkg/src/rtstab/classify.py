"""Stability-regime classification from the jump sign and surface tensions.

The regime table is an exact piecewise statement in (jump, sigma_plus,
sigma_minus, sigma_c); comparisons here are exact zero tests and the caller
is responsible for any rounding policy (the CLI applies a configurable
epsilon first).  The combination sigma_plus = 0 with sigma_minus > 0 is not
a table row and is rejected rather than guessed.
"""

from __future__ import annotations

import enum

from .errors import InvalidInput


class RegimeLabel(enum.Enum):
    STABLE_ALMOST_EXPONENTIAL_DECAY = "stable_almost_exponential_decay"
    STABLE_EXPONENTIAL_DECAY = "stable_exponential_decay"
    LOCALLY_WELL_POSED = "locally_well_posed"
    NONLINEARLY_UNSTABLE = "nonlinearly_unstable"


DECAY_CLAIM = {
    RegimeLabel.STABLE_ALMOST_EXPONENTIAL_DECAY: "almost_exponential",
    RegimeLabel.STABLE_EXPONENTIAL_DECAY: "exponential",
    RegimeLabel.LOCALLY_WELL_POSED: None,
    RegimeLabel.NONLINEARLY_UNSTABLE: None,
}


def classify_regime(jump: float, sigma_plus: float, sigma_minus: float,
                    sigma_c: float) -> RegimeLabel:
    """Table lookup; sigma_c must come from the same jump when jump > 0.

    Row sigma_+ = sigma_- = 0: almost exponential decay / locally well-posed
    / unstable by the sign of the jump.  Rows sigma_+ > 0: exponential decay
    for jump <= 0; for jump > 0 the position of sigma_- against sigma_c
    decides (below: unstable; equal: locally well-posed; above: decay).
    """
    if sigma_plus < 0 or sigma_minus < 0:
        raise InvalidInput("surface tensions must be >= 0")
    if sigma_plus == 0 and sigma_minus > 0:
        raise InvalidInput("sigma_plus = 0 with sigma_minus > 0 is not a table row")
    if sigma_plus == 0:
        if jump < 0:
            return RegimeLabel.STABLE_ALMOST_EXPONENTIAL_DECAY
        if jump == 0:
            return RegimeLabel.LOCALLY_WELL_POSED
        return RegimeLabel.NONLINEARLY_UNSTABLE
    if jump <= 0:
        return RegimeLabel.STABLE_EXPONENTIAL_DECAY
    if sigma_minus < sigma_c:
        return RegimeLabel.NONLINEARLY_UNSTABLE
    if sigma_minus == sigma_c:
        return RegimeLabel.LOCALLY_WELL_POSED
    return RegimeLabel.STABLE_EXPONENTIAL_DECAY


def regime_report(jump: float, sigma_plus: float, sigma_minus: float,
                  sigma_c: float) -> dict:
    """JSON-ready report with the regime and its decay claim."""
    label = classify_regime(jump, sigma_plus, sigma_minus, sigma_c)
    return {
        "jump": jump,
        "sigma_plus": sigma_plus,
        "sigma_minus": sigma_minus,
        "sigma_c": sigma_c,
        "regime": label.value,
        "decay_claim": DECAY_CLAIM[label],
    }
