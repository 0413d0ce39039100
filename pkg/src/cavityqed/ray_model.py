"""Corrected ray-optics model of the vacuum-fluctuation ratio.

Every direction on the sphere defines a ray through the evaluation point.
If the ray meets the mirrors it carries a Fabry-Perot buildup factor with
standing-wave weights set by the phase k Omega.r at the point; otherwise it
contributes plain vacuum. Three corrections make the picture quantitative
near (but not at) the center:

* a spherical-aberration phase k(r^2 - (Omega.r)^2)/(2R) added to the
  one-way cavity phase, which dephases off-center rays;
* diffraction losses of rays hitting the mirror edge, absorbed by shrinking
  the aperture to theta_m - 1/sqrt(kR(1-rho_av^2)), the exposed annulus
  counting as free vacuum;
* an axial mispositioning of mirror 2, entering as a direction-dependent
  reflection phase (defocus_profile) that shifts and degrades the resonance.
"""

from __future__ import annotations

import math
import warnings

import numpy as np

from .quadrature import polar_rule
from .structures import CavityGeometry, EnhancementResult, FieldPoint, ValidityWarning

__all__ = [
    "standing_wave_weights",
    "airy_resonance_factor",
    "effective_aperture",
    "defocus_profile",
    "aberration_phase",
    "ray_direction_phases",
    "ray_integration_nodes",
    "enhancement_ray",
    "cavity_linewidth",
    "ApertureCollapseError",
    "ResonanceSingularityError",
    "RAY_VALIDITY_KR",
]

RAY_VALIDITY_KR = 100.0


class ApertureCollapseError(ValueError):
    """Diffraction correction larger than the mirror aperture itself."""


class ResonanceSingularityError(ValueError):
    """Lossless resonance requested exactly on a cavity line."""


def standing_wave_weights(x):
    """Standing-wave pattern weights (cos^2 x, sin^2 x, sin 2x) at phase
    x = k Omega.r: antinode-series weight, node-series weight, and the
    interference cross term."""
    x = np.asarray(x, dtype=float)
    return np.cos(x) ** 2, np.sin(x) ** 2, np.sin(2.0 * x)


def airy_resonance_factor(phi, x, rho1, rho2, *, singular_floor=1e-9):
    """Per-ray vacuum-fluctuation factor for two mirrors of amplitude
    reflectivities rho1 (toward +Omega) and rho2 (toward -Omega).

    phi is the one-way cavity phase, x = k Omega.r the standing-wave phase
    at the point. The three terms weight the antinode series, the node
    series, and the forward/backward imbalance cross term; the cross term
    vanishes for rho1 = rho2 and the whole factor reduces to
    T cos^2(x)/|1 - rho e^{2i phi}|^2 + T sin^2(x)/|1 + rho e^{2i phi}|^2.
    Directions missing both mirrors (rho1 = rho2 = 0) give exactly 1.
    Averaged over a free spectral range in phi the factor is 1 for any x.
    """
    phi = np.asarray(phi, dtype=float)
    x = np.asarray(x, dtype=float)
    rho1 = np.asarray(rho1, dtype=float)
    rho2 = np.asarray(rho2, dtype=float)
    if np.any(rho1 < 0) or np.any(rho1 > 1) or np.any(rho2 < 0) or np.any(rho2 > 1):
        raise ValueError("reflectivities must lie in [0, 1]")
    rr = rho1 * rho2
    if np.any(1.0 - rr < singular_floor):
        bad = np.broadcast_to(phi, np.broadcast(phi, rr).shape)[
            np.broadcast_to(1.0 - rr < singular_floor, np.broadcast(phi, rr).shape)
        ]
        if bad.size and np.any(np.abs(np.sin(2.0 * bad)) < 1e-6):
            raise ResonanceSingularityError(
                "rho1*rho2 within the singular floor of 1 at a resonant phase"
            )
    c2, s2, cross = standing_wave_weights(x)
    cos2phi = np.cos(2.0 * phi)
    denom = 1.0 + rr * rr - 2.0 * rr * np.cos(4.0 * phi)
    num = (
        (1.0 - rr) * (1.0 + rr + (rho1 + rho2) * cos2phi) * c2
        + (1.0 - rr) * (1.0 + rr - (rho1 + rho2) * cos2phi) * s2
        + (1.0 + rr) * (rho2 - rho1) * np.sin(2.0 * phi) * cross
    )
    return num / denom


def effective_aperture(theta_m: float, k_radius: float, rho1: float, rho2: float) -> float:
    """Mirror half-aperture shrunk by the diffraction-loss correction
    delta_theta = 1/sqrt(kR (1 - rho_av^2)), rho_av = (rho1 + rho2)/2.
    For equal mirrors 1 - rho_av^2 is the intensity transmittivity T."""
    rho_av = 0.5 * (rho1 + rho2)
    loss = 1.0 - rho_av * rho_av
    if k_radius <= 0 or loss <= 0:
        raise ValueError("need k_radius > 0 and average reflectivity < 1")
    d_theta = 1.0 / math.sqrt(k_radius * loss)
    if d_theta >= theta_m:
        raise ApertureCollapseError(
            f"diffraction correction {d_theta:.4g} exceeds aperture {theta_m:.4g}; "
            "cavity too lossy or too small for the ray correction"
        )
    return theta_m - d_theta


def defocus_profile(rho0: float, k_delta: float, theta):
    """Complex reflectivity rho0 * exp(2i k_delta cos(theta)) of a mirror
    mispositioned axially by delta, theta being the mirror's local polar
    angle. Modulus is unchanged; only the reflection phase varies."""
    if abs(rho0) > 1.0:
        raise ValueError(f"|rho0| must not exceed 1, got {rho0}")
    return rho0 * np.exp(2j * k_delta * np.cos(np.asarray(theta, dtype=float)))


def aberration_phase(point: FieldPoint, omega_dot_r, k_radius: float):
    """Extra one-way phase k(r^2 - (Omega.r)^2)/(2R) of a ray through the
    point along Omega; nonnegative, zero at the center."""
    kr2 = point.kr**2
    return (kr2 - np.asarray(omega_dot_r, dtype=float) ** 2) / (2.0 * k_radius)


def _effective_edges(geom: CavityGeometry, diffraction: bool):
    th1, th2 = geom.theta_m1, geom.theta_m2
    if diffraction:
        if th1 > 0.0:
            th1 = effective_aperture(th1, geom.k_radius, geom.rho1, geom.rho2)
        if th2 > 0.0:
            th2 = effective_aperture(th2, geom.k_radius, geom.rho1, geom.rho2)
    return th1, th2


def ray_direction_phases(
    geom: CavityGeometry,
    point: FieldPoint,
    phi0: float,
    theta,
    phi_az,
    *,
    aberration: bool = True,
    diffraction: bool = True,
):
    """Per-direction arguments of the ray factors.

    Returns (phi_eff, x_eff, rho_fwd, rho_back): the corrected one-way phase,
    the corrected standing-wave phase, and the reflectivities seen at the
    +Omega and -Omega ends of the ray. Shapes follow numpy broadcasting of
    theta and phi_az.

    The mispositioning phase of mirror 2 (2 k_delta |cos theta| per
    reflection) is split between phi_eff and x_eff; for a ray hitting only
    one mirror this reduces exactly to adding that mirror's reflection
    phase to its interference term.
    """
    theta = np.asarray(theta, dtype=float)
    phi_az = np.asarray(phi_az, dtype=float)
    th1, th2 = _effective_edges(geom, diffraction)
    mu = np.cos(theta)
    sin_th = np.sin(theta)
    kx, ky, kz = point.kvec
    x = kz * mu + sin_th * (kx * np.cos(phi_az) + ky * np.sin(phi_az))
    on1_fwd = theta <= th1 + 1e-14 if th1 > 0 else np.zeros(theta.shape, bool)
    on2_fwd = theta >= math.pi - th2 - 1e-14 if th2 > 0 else np.zeros(theta.shape, bool)
    on1_back = theta >= math.pi - th1 - 1e-14 if th1 > 0 else np.zeros(theta.shape, bool)
    on2_back = theta <= th2 + 1e-14 if th2 > 0 else np.zeros(theta.shape, bool)
    rho_fwd = np.where(on1_fwd, geom.rho1, 0.0) + np.where(on2_fwd, geom.rho2, 0.0)
    rho_back = np.where(on1_back, geom.rho1, 0.0) + np.where(on2_back, geom.rho2, 0.0)
    phi_eff = phi0 + (aberration_phase(point, x, geom.k_radius) if aberration else 0.0)
    x_eff = x
    if geom.k_delta != 0.0:
        alpha = 2.0 * geom.k_delta * np.abs(mu)
        alpha_fwd = np.where(theta >= math.pi / 2, alpha, 0.0)
        alpha_back = alpha - alpha_fwd
        phi_eff = phi_eff + 0.25 * (alpha_fwd + alpha_back)
        x_eff = x + 0.25 * (alpha_fwd - alpha_back)
    phi_eff = np.broadcast_to(phi_eff, x.shape) if np.shape(phi_eff) != x.shape else phi_eff
    return phi_eff, x_eff, np.broadcast_to(rho_fwd, x.shape), np.broadcast_to(rho_back, x.shape)


def _auto_polar_order(kr: float, base: int | None) -> int:
    auto = 48 + int(1.2 * kr)
    return max(base or 64, auto)


def _auto_azimuthal_order(kr_perp: float, base: int | None) -> int:
    auto = 16 + 2 * int(math.ceil(kr_perp))
    return max(base or 32, auto)


def ray_integration_nodes(geom, point, diffraction, polar_order, azimuthal_order, axisym):
    """Direction nodes and weights for ray-model integrals: polar Gauss rule
    split at the (effective) mirror edges, azimuth uniform or collapsed to a
    single column for axisymmetric integrands. Orders scale with kr unless
    larger values are requested."""
    th1, th2 = _effective_edges(geom, diffraction)
    edges = sorted({e for e in (th1, math.pi - th2) if 0.0 < e < math.pi})
    mu, w = polar_rule(edges, _auto_polar_order(point.kr, polar_order))
    theta = np.arccos(np.clip(mu, -1.0, 1.0))
    if axisym:
        phi = np.zeros(1)
    else:
        n_az = _auto_azimuthal_order(point.kr_perp, azimuthal_order)
        phi = 2.0 * math.pi * (np.arange(n_az) + 0.5) / n_az
    return theta, w, phi


def enhancement_ray(
    geom: CavityGeometry,
    point: FieldPoint,
    phi0: float,
    *,
    aberration: bool = True,
    diffraction: bool = True,
    polar_order: int | None = None,
    azimuthal_order: int | None = None,
) -> EnhancementResult:
    """Vacuum-fluctuation ratio from the ray picture: angular average of the
    per-ray resonance factor over all directions.

    With both corrections off this is the naive geometric-ray value, which
    coincides with the operator calculation when all angular-spreading
    phases are neglected. The model is validated for kr up to ~100;
    beyond that a ValidityWarning is issued.
    """
    if point.kr > RAY_VALIDITY_KR:
        warnings.warn(
            f"kr={point.kr:.3g} beyond the validated ray-model range "
            f"(kr <= {RAY_VALIDITY_KR:g})",
            ValidityWarning,
            stacklevel=2,
        )
    theta, w, phi_az = ray_integration_nodes(geom, point, diffraction, polar_order,
                                             azimuthal_order, axisym=point.on_axis)
    phi_eff, x_eff, rho_f, rho_b = ray_direction_phases(
        geom, point, phi0, theta[:, None], phi_az[None, :],
        aberration=aberration, diffraction=diffraction,
    )
    m = airy_resonance_factor(phi_eff, x_eff, rho_f, rho_b)
    value = float(np.dot(w, m.mean(axis=1)))
    tag = "ray" if (aberration or diffraction) else "ray-naive"
    return EnhancementResult(
        value=value,
        method=tag,
        detail={
            "aberration": aberration,
            "diffraction": diffraction,
            "polar_nodes": theta.size,
            "azimuthal_nodes": phi_az.size,
        },
    )


def cavity_linewidth(rho1: float, rho2: float) -> float:
    """Full width at half maximum of the round-trip resonance line,
    2*arcsin((1 - rho1 rho2)/(2 sqrt(rho1 rho2))), used to normalize
    detuning axes. Returns pi (a full free spectral range) when the line
    is broader than the spectral range."""
    rr = rho1 * rho2
    if rr <= 0.0:
        return math.pi
    arg = (1.0 - rr) / (2.0 * math.sqrt(rr))
    if arg >= 1.0:
        return math.pi
    return 2.0 * math.asin(arg)
