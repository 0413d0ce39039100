"""Physical observables: normalized damping rate and radiative level shift.

A transverse dipole couples to each ray direction with the weight
(3/2)(1 - (d.Omega)^2). The damping rate samples the per-ray resonance
factor of ray_model; the level shift samples the dispersive kernels
(in-phase, out-of-phase and imbalance terms) that follow from the
principal-value frequency transform of the resonance line. Directions
missing the mirrors contribute free vacuum to the damping and nothing to
the shift, so both results reduce to (1, 0) without mirrors.
"""

from __future__ import annotations

import math
import warnings

import numpy as np
from scipy.special import roots_legendre

from .ray_model import (
    RAY_VALIDITY_KR,
    airy_resonance_factor,
    ray_direction_phases,
    ray_integration_nodes,
)
from .structures import (
    CavityGeometry,
    DipoleOrientation,
    FieldPoint,
    ResponseResult,
    ValidityWarning,
)

__all__ = [
    "polarization_factor",
    "orientation_weight",
    "gamma_kernel_symmetric",
    "shift_kernel_symmetric",
    "shift_kernel",
    "response",
    "gamma_ratio",
    "shift_ratio",
    "center_closed_forms",
    "one_mirror_response",
]

_METHODS = ("ray-symmetric", "ray-asymmetric")


def polarization_factor(d_hat, omega_hat):
    """Transverse-coupling weight (3/2)(1 - (d.Omega)^2) for unit vectors.

    Zero along the dipole axis, 3/2 across it, unit average over directions.
    """
    d = np.asarray(d_hat, dtype=float)
    o = np.asarray(omega_hat, dtype=float)
    if abs(np.linalg.norm(d) - 1.0) > 1e-9:
        raise ValueError("d_hat must be a unit vector")
    norms = np.linalg.norm(o, axis=-1)
    if np.any(np.abs(norms - 1.0) > 1e-9):
        raise ValueError("omega_hat must be unit vectors")
    dot = np.tensordot(o, d, axes=([-1], [0]))
    return 1.5 * (1.0 - dot**2)


def orientation_weight(orientation: DipoleOrientation, theta, phi_az):
    """Polarization weight on the direction grid for a tagged or explicit
    dipole orientation; perpendicular averages the dipole azimuth."""
    theta = np.asarray(theta, dtype=float)
    phi_az = np.asarray(phi_az, dtype=float)
    if orientation.tag == "parallel":
        return 1.5 * np.sin(theta) ** 2 + 0.0 * phi_az
    if orientation.tag == "perpendicular":
        return 1.5 * (1.0 - 0.5 * np.sin(theta) ** 2) + 0.0 * phi_az
    if orientation.tag == "isotropic":
        return np.ones(np.broadcast(theta, phi_az).shape)
    dx, dy, dz = orientation.vector
    st = np.sin(theta)
    dot = st * (dx * np.cos(phi_az) + dy * np.sin(phi_az)) + dz * np.cos(theta)
    return 1.5 * (1.0 - dot**2)


def gamma_kernel_symmetric(phi, x, rho):
    """Equal-mirror damping kernel:
    T cos^2(x)/|1 - rho e^{2i phi}|^2 + T sin^2(x)/|1 + rho e^{2i phi}|^2."""
    phi = np.asarray(phi, dtype=float)
    rho = np.asarray(rho, dtype=float)
    t = 1.0 - rho * rho
    cos2phi = np.cos(2.0 * phi)
    d_minus = 1.0 + rho * rho - 2.0 * rho * cos2phi
    d_plus = 1.0 + rho * rho + 2.0 * rho * cos2phi
    return t * np.cos(x) ** 2 / d_minus + t * np.sin(x) ** 2 / d_plus


def shift_kernel_symmetric(phi, x, rho):
    """Equal-mirror shift kernel:
    rho sin(2 phi) [cos^2(x)/|1 - rho e^{2i phi}|^2 - sin^2(x)/|1 + rho e^{2i phi}|^2]."""
    phi = np.asarray(phi, dtype=float)
    rho = np.asarray(rho, dtype=float)
    cos2phi = np.cos(2.0 * phi)
    d_minus = 1.0 + rho * rho - 2.0 * rho * cos2phi
    d_plus = 1.0 + rho * rho + 2.0 * rho * cos2phi
    return rho * np.sin(2.0 * phi) * (np.cos(x) ** 2 / d_minus - np.sin(x) ** 2 / d_plus)


def shift_kernel(phi, x, rho1, rho2):
    """General two-mirror shift kernel with antinode, node and imbalance
    terms over the round-trip resonance denominator |1 - rho1 rho2 e^{4i phi}|^2;
    reduces to shift_kernel_symmetric for rho1 = rho2 and vanishes without
    mirrors."""
    phi = np.asarray(phi, dtype=float)
    x = np.asarray(x, dtype=float)
    rho1 = np.asarray(rho1, dtype=float)
    rho2 = np.asarray(rho2, dtype=float)
    rr = rho1 * rho2
    denom = 1.0 + rr * rr - 2.0 * rr * np.cos(4.0 * phi)
    sin2phi = np.sin(2.0 * phi)
    sin4phi = np.sin(4.0 * phi)
    balanced = 0.5 * (rho1 + rho2) * (1.0 + rr) * sin2phi
    num = (
        (rr * sin4phi + balanced) * np.cos(x) ** 2
        + (rr * sin4phi - balanced) * np.sin(x) ** 2
        + 0.5 * (1.0 - rr) * (rho1 - rho2) * np.cos(2.0 * phi) * np.sin(2.0 * x)
    )
    return num / denom


def response(
    point: FieldPoint,
    orientation: DipoleOrientation,
    geom: CavityGeometry,
    phi0: float,
    *,
    method: str = "ray-asymmetric",
    aberration: bool = True,
    diffraction: bool = True,
    polar_order: int | None = None,
    azimuthal_order: int | None = None,
) -> ResponseResult:
    """Damping-rate and level-shift ratios by angular quadrature of the
    polarization weight times the ray kernels.

    method "ray-symmetric" uses the equal-mirror two-series kernels and
    requires a symmetric cavity; "ray-asymmetric" uses the general
    three-term kernels and handles unequal mirrors and apertures.
    """
    if method not in _METHODS:
        raise ValueError(f"unknown method {method!r}; expected one of {_METHODS}")
    if method == "ray-symmetric" and not geom.is_symmetric:
        raise ValueError("ray-symmetric method requires a symmetric cavity")
    if point.kr > RAY_VALIDITY_KR:
        warnings.warn(
            f"kr={point.kr:.3g} beyond the validated ray-model range",
            ValidityWarning,
            stacklevel=2,
        )
    axisym = point.on_axis and orientation.is_axisymmetric
    theta, w, phi_az = ray_integration_nodes(
        geom, point, diffraction, polar_order, azimuthal_order, axisym
    )
    th2 = theta[:, None]
    ph2 = phi_az[None, :]
    phi_eff, x_eff, rho_f, rho_b = ray_direction_phases(
        geom, point, phi0, th2, ph2, aberration=aberration, diffraction=diffraction
    )
    pol = np.broadcast_to(orientation_weight(orientation, th2, ph2), x_eff.shape)
    if method == "ray-symmetric":
        g = gamma_kernel_symmetric(phi_eff, x_eff, rho_f)
        s = shift_kernel_symmetric(phi_eff, x_eff, rho_f)
    else:
        g = airy_resonance_factor(phi_eff, x_eff, rho_f, rho_b)
        s = shift_kernel(phi_eff, x_eff, rho_f, rho_b)
    gamma = float(np.dot(w, (pol * g).mean(axis=1)))
    shift = float(np.dot(w, (pol * s).mean(axis=1)))
    return ResponseResult(
        gamma_ratio=gamma,
        shift_ratio=shift,
        method=method,
        detail={
            "aberration": aberration,
            "diffraction": diffraction,
            "polar_nodes": theta.size,
            "azimuthal_nodes": phi_az.size,
            "orientation": orientation.label(),
        },
    )


def gamma_ratio(point, orientation, geom, phi0, method="ray-asymmetric", **kwargs) -> float:
    return response(point, orientation, geom, phi0, method=method, **kwargs).gamma_ratio


def shift_ratio(point, orientation, geom, phi0, method="ray-asymmetric", **kwargs) -> float:
    return response(point, orientation, geom, phi0, method=method, **kwargs).shift_ratio


def center_closed_forms(
    orientation: DipoleOrientation, theta_m: float, rho: float, phi0: float
) -> ResponseResult:
    """Exact closed forms at the center of a symmetric cavity.

    The solid-angle fractions are those of the two caps; the resonance and
    dispersive factors are evaluated at the detuning phi0. The three tags
    satisfy (parallel + 2*perpendicular)/3 = isotropic identically.
    """
    if orientation.tag is None:
        raise ValueError("center closed forms are defined for orientation tags")
    if not 0.0 <= rho < 1.0:
        raise ValueError(f"rho must lie in [0, 1), got {rho}")
    c = math.cos(theta_m)
    s2 = math.sin(theta_m) ** 2
    t = 1.0 - rho * rho
    d_minus = 1.0 + rho * rho - 2.0 * rho * math.cos(2.0 * phi0)
    airy = t / d_minus
    disp = rho * math.sin(2.0 * phi0) / d_minus
    cav = 1.0 - c
    if orientation.tag == "parallel":
        w_vac = c * (1.0 + s2 / 2.0)
        w_cav = cav * (1.0 - c * (1.0 + c) / 2.0)
    elif orientation.tag == "perpendicular":
        w_vac = c * (1.0 - s2 / 4.0)
        w_cav = cav * (1.0 + c * (1.0 + c) / 4.0)
    else:
        w_vac = c
        w_cav = cav
    return ResponseResult(
        gamma_ratio=w_vac + w_cav * airy,
        shift_ratio=w_cav * disp,
        method="center-closed-form",
        detail={"orientation": orientation.tag},
    )


def _cap_rule(theta_m: float, order: int):
    """Gauss nodes on the cap mu in [cos(theta_m), 1] under the dmu/2 measure."""
    xs, ws = roots_legendre(order)
    a, b = math.cos(theta_m), 1.0
    return 0.5 * (b - a) * xs + 0.5 * (a + b), 0.25 * (b - a) * ws


def one_mirror_response(
    point: FieldPoint,
    orientation: DipoleOrientation,
    rho: float,
    phi: float,
    theta_m: float,
    *,
    polar_order: int | None = None,
    azimuthal_order: int | None = None,
) -> ResponseResult:
    """Response in front of a single spherical mirror cap (no resonator).

    Gamma/Gamma_vac = 1 + rho * <pol * cos(2(k Omega.r + phi))> over the cap,
    Delta'/Gamma_vac = (rho/2) * <pol * sin(2(k Omega.r + phi))> over the cap,
    with phi the mirror distance phase; both vanish into (1, 0) for rho = 0.
    Spherical aberrations are not included in this single-bounce picture.
    """
    if not 0.0 <= rho < 1.0:
        raise ValueError(f"rho must lie in [0, 1), got {rho}")
    if not 0.0 < theta_m <= math.pi / 2:
        raise ValueError(f"theta_m must lie in (0, pi/2], got {theta_m}")
    order = max(polar_order or 48, 24 + int(1.2 * point.kr * theta_m))
    mu, w = _cap_rule(theta_m, order)
    theta = np.arccos(np.clip(mu, -1.0, 1.0))
    axisym = point.on_axis and orientation.is_axisymmetric
    if axisym:
        phi_az = np.zeros(1)
    else:
        n_az = max(azimuthal_order or 32, 16 + 2 * int(math.ceil(point.kr_perp)))
        phi_az = 2.0 * math.pi * (np.arange(n_az) + 0.5) / n_az
    th2, ph2 = theta[:, None], phi_az[None, :]
    kx, ky, kz = point.kvec
    x = kz * np.cos(th2) + np.sin(th2) * (kx * np.cos(ph2) + ky * np.sin(ph2))
    pol = np.broadcast_to(orientation_weight(orientation, th2, ph2), x.shape)
    gamma = 1.0 + rho * float(np.dot(w, (pol * np.cos(2.0 * (x + phi))).mean(axis=1)))
    shift = 0.5 * rho * float(np.dot(w, (pol * np.sin(2.0 * (x + phi))).mean(axis=1)))
    return ResponseResult(
        gamma_ratio=gamma,
        shift_ratio=shift,
        method="one-mirror",
        detail={"theta_m": theta_m, "orientation": orientation.label()},
    )
