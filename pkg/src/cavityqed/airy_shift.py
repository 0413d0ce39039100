"""Closed-form dispersive kernels paired with the Fabry-Perot resonance line.

The damping response of a dipole samples the resonance line itself; the level
shift samples its principal-value frequency transform. For the normalized
resonance line these transforms have closed forms, used as the production
path; the numerical principal-value engine in quadrature.pv_integrate exists
to validate them in the tests.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "FinesseParam",
    "finesse_param",
    "airy_lorentzian",
    "pv_shift",
    "pv_shift_cos",
    "pv_shift_sin",
]


@dataclass(frozen=True)
class FinesseParam:
    """Line-shape coefficient F = 4*rho/(1-rho)^2 and the auxiliary width
    parameter beta > 0 with sinh(beta)^2 = 1/F (infinite for F = 0)."""

    coefficient: float
    beta: float


def finesse_param(rho: float) -> FinesseParam:
    """Line-shape parameters for a round-trip amplitude rho in [0, 1).

    For two different mirrors pass their product rho1*rho2.
    """
    _check_rho(rho)
    if rho == 0.0:
        return FinesseParam(coefficient=0.0, beta=math.inf)
    f = 4.0 * rho / (1.0 - rho) ** 2
    return FinesseParam(coefficient=f, beta=math.asinh(1.0 / math.sqrt(f)))


def _check_rho(rho: float):
    if not 0.0 <= rho < 1.0:
        raise ValueError(f"reflectivity must lie in [0, 1), got {rho}")


def airy_lorentzian(phi, rho: float):
    """Normalized resonance line sqrt(1+F)/(1 + F sin^2 phi).

    Equals (1 - rho^2)/|1 - rho e^{2i phi}|^2; unit average over a period.
    """
    _check_rho(rho)
    f = 4.0 * rho / (1.0 - rho) ** 2
    return math.sqrt(1.0 + f) / (1.0 + f * np.sin(phi) ** 2)


def pv_shift(phi, rho: float):
    """Dispersive partner of the resonance line:
    2*pi*rho*sin(2 phi)/|1 - rho e^{2i phi}|^2. Odd and pi-periodic in phi."""
    _check_rho(rho)
    denom = 1.0 + rho * rho - 2.0 * rho * np.cos(2.0 * np.asarray(phi, dtype=float))
    return 2.0 * math.pi * rho * np.sin(2.0 * np.asarray(phi, dtype=float)) / denom


def pv_shift_cos(phi, rho_eff: float):
    """Dispersive kernel weighted by the in-phase (cosine) quadrature:
    pi*(1+F')*sin(phi)/(1 + F' sin^2 phi), F' built from rho_eff = rho1*rho2."""
    _check_rho(rho_eff)
    f = 4.0 * rho_eff / (1.0 - rho_eff) ** 2
    phi = np.asarray(phi, dtype=float)
    return math.pi * (1.0 + f) * np.sin(phi) / (1.0 + f * np.sin(phi) ** 2)


def pv_shift_sin(phi, rho_eff: float):
    """Dispersive kernel weighted by the out-of-phase (sine) quadrature:
    -pi*cos(phi)/(1 + F' sin^2 phi)."""
    _check_rho(rho_eff)
    f = 4.0 * rho_eff / (1.0 - rho_eff) ** 2
    phi = np.asarray(phi, dtype=float)
    return -math.pi * np.cos(phi) / (1.0 + f * np.sin(phi) ** 2)
