"""Stable special functions and spherical-harmonic basis machinery.

Radial solutions regular at the origin are J_{l+1/2}(kr)/sqrt(kr), evaluated
by recurrences that stay accurate deep into the evanescent regime (l >> kr).
Spherical harmonics are normalized to unit mean square over the sphere,
<|Y_lm|^2> = 1 under the measure dOmega/4pi, i.e. sqrt(4pi) times the usual
orthonormal harmonics. That convention makes Parseval sums read directly as
angular averages and is used consistently everywhere in the package.
"""

from __future__ import annotations

import math
import warnings

import numpy as np

from .structures import AngularFunction, FieldPoint, TruncationWarning

__all__ = [
    "radial_bessel",
    "radial_bessel_table",
    "asymptotic_radial_bessel",
    "legendre_table",
    "ylm",
    "plane_wave_coeffs",
    "bessel_weights",
    "SQRT_2_OVER_PI",
]

SQRT_2_OVER_PI = math.sqrt(2.0 / math.pi)
_SQRT_PI_OVER_2 = math.sqrt(math.pi / 2.0)
_RESCALE = 1e250


def _ratio_cf(l: int, x: float, tol: float = 1e-16) -> float:
    """Ratio j_l(x)/j_{l-1}(x) of spherical Bessel functions by the
    continued fraction r_l = 1/(b_l - 1/(b_{l+1} - ...)), b_n = (2n+1)/x,
    evaluated with the modified Lentz algorithm."""
    tiny = 1e-300
    max_iter = int(10 * x) + 2000
    b = (2 * l + 1) / x
    f = b if b != 0.0 else tiny
    c, d = f, 0.0
    for k in range(1, max_iter):
        b = (2 * (l + k) + 1) / x
        d = b - d
        if d == 0.0:
            d = tiny
        c = b - 1.0 / c
        if c == 0.0:
            c = tiny
        d = 1.0 / d
        delta = c * d
        f *= delta
        if abs(delta - 1.0) < tol:
            return 1.0 / f
    raise RuntimeError(f"Bessel ratio CF did not converge for l={l}, x={x}")


def radial_bessel_table(l_max: int, kr: float) -> np.ndarray:
    """J_{l+1/2}(kr)/sqrt(kr) for every l = 0..l_max at fixed kr >= 0.

    For kr > l_max the upward recurrence is stable and used directly.
    Otherwise the table is generated downward from a continued-fraction
    seed at l_max and normalized against the l = 0 (or, near its zeros,
    l = 1) closed form. Values below the double-precision floor underflow
    to zero, which is the correct limit in the deep evanescent regime.
    """
    if l_max < 0:
        raise ValueError(f"l_max must be nonnegative, got {l_max}")
    if kr < 0:
        raise ValueError(f"kr must be nonnegative, got {kr}")
    out = np.zeros(l_max + 1)
    if kr == 0.0:
        out[0] = SQRT_2_OVER_PI
        return out
    x = float(kr)
    j0 = math.sin(x) / x
    if l_max == 0:
        out[0] = j0
        return SQRT_2_OVER_PI * out
    j1 = j0 / x - math.cos(x) / x
    if x > l_max:
        out[0], out[1] = j0, j1
        for l in range(1, l_max):
            out[l + 1] = (2 * l + 1) / x * out[l] - out[l - 1]
        return SQRT_2_OVER_PI * out
    ratio = _ratio_cf(l_max, x)
    out[l_max] = 1.0
    out[l_max - 1] = 1.0 / ratio if ratio != 0.0 else 1.0 / 1e-300
    for l in range(l_max - 1, 0, -1):
        out[l - 1] = (2 * l + 1) / x * out[l] - out[l + 1]
        if abs(out[l - 1]) > _RESCALE:
            # keep the growing minimal solution in range; the rescaled-away
            # top of the table is super-exponentially small and flushes to 0
            out[l - 1 :] *= 1.0 / _RESCALE
    scale = j0 / out[0] if abs(j0) >= abs(j1) else j1 / out[1]
    out *= scale
    return SQRT_2_OVER_PI * out


def radial_bessel(l: int, kr: float) -> float:
    """Radial solution J_{l+1/2}(kr)/sqrt(kr), regular at the origin."""
    if l < 0:
        raise ValueError(f"l must be nonnegative, got {l}")
    return float(radial_bessel_table(l, kr)[l])


def asymptotic_radial_bessel(l: int, kr: float) -> float:
    """Large-kr form sqrt(2/pi)/kr * sin(kr - pi*l/2 + l(l+1)/2kr).

    Three-term phase asymptotic, valid for kr >> l; intended for checks
    against radial_bessel, not as a production path.
    """
    if kr <= 0:
        raise ValueError(f"kr must be positive, got {kr}")
    if l < 0:
        raise ValueError(f"l must be nonnegative, got {l}")
    phase = kr - math.pi * l / 2.0 + l * (l + 1) / (2.0 * kr)
    return SQRT_2_OVER_PI * math.sin(phase) / kr


def bessel_weights(l_max: int, kr: float) -> np.ndarray:
    """Per-l weights (pi/2)(2l+1) * radial_bessel(l, kr)^2.

    They sum to 1 as l_max -> infinity (completeness of the regular radial
    solutions) and give the l-distribution of a unit-amplitude wave focused
    through the origin, evaluated at radius kr.
    """
    u = radial_bessel_table(l_max, kr)
    ls = np.arange(l_max + 1)
    return (math.pi / 2.0) * (2 * ls + 1) * u**2


def legendre_table(l_max: int, m: int, x) -> np.ndarray:
    """Normalized associated Legendre values for l = m..l_max at points x.

    Returns an array of shape (len(x), l_max - m + 1) with column i holding
    l = m + i. Normalization satisfies (1/2) * int_{-1}^{1} P_lm(x)^2 dx = 1,
    matching the unit-mean-square harmonics; the Condon-Shortley sign is
    included. The three-term recurrence in l at fixed m is stable to degrees
    of at least several hundred.
    """
    if m < 0:
        raise ValueError(f"m must be nonnegative here, got {m}")
    if l_max < m:
        raise ValueError(f"l_max={l_max} smaller than m={m}")
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if x.ndim != 1:
        raise ValueError("x must be one-dimensional")
    n = l_max - m + 1
    out = np.zeros((x.size, n))
    u = np.sqrt(np.maximum(0.0, 1.0 - x * x))
    pmm = np.ones_like(x)
    for k in range(1, m + 1):
        pmm = -u * math.sqrt((2 * k + 1) / (2 * k)) * pmm
    out[:, 0] = pmm
    if n > 1:
        out[:, 1] = math.sqrt(2 * m + 3) * x * pmm
    for l in range(m + 2, l_max + 1):
        a = math.sqrt((4 * l * l - 1) / (l * l - m * m))
        b = math.sqrt(((l - 1) ** 2 - m * m) / (4 * (l - 1) ** 2 - 1))
        out[:, l - m] = a * (x * out[:, l - m - 1] - b * out[:, l - m - 2])
    return out


def ylm(l: int, m: int, theta, phi_az) -> complex | np.ndarray:
    """Spherical harmonic with unit mean square: <|Y_lm|^2> = 1 over dOmega/4pi."""
    if l < 0 or abs(m) > l:
        raise ValueError(f"need l >= 0 and |m| <= l, got l={l}, m={m}")
    theta = np.asarray(theta, dtype=float)
    if np.any(theta < -1e-12) or np.any(theta > math.pi + 1e-12):
        raise ValueError("theta must lie in [0, pi]")
    phi_az = np.asarray(phi_az, dtype=float)
    ma = abs(m)
    p = legendre_table(l, ma, np.cos(theta).ravel())[:, l - ma]
    p = p.reshape(theta.shape)
    val = p * np.exp(1j * ma * phi_az)
    if m < 0:
        val = (-1) ** ma * np.conj(val)
    if val.ndim == 0:
        return complex(val)
    return val


def plane_wave_coeffs(
    point: FieldPoint, l_max: int, *, tail_tol: float = 1e-8
) -> AngularFunction:
    """Harmonic coefficients of the focused-wave kernel exp(-i k Omega.r).

    The coefficient of Y_{l,m}(Omega) is
    (-i)^l sqrt(pi/2) * radial_bessel(l, kr) * conj(Y_{l,m}(rhat)).
    The squared coefficient norm tends to 1 from below as l_max grows
    (the kernel has unit modulus); the energy left in the last five l
    values is reported as the truncation tail and triggers a
    TruncationWarning above tail_tol.
    """
    if l_max < 0:
        raise ValueError(f"l_max must be nonnegative, got {l_max}")
    kr = point.kr
    weights = bessel_weights(l_max, kr)
    tail = float(np.sum(weights[max(0, l_max - 4) :]))
    if tail > tail_tol:
        warnings.warn(
            f"truncation tail {tail:.3e} exceeds {tail_tol:.1e} for kr={kr:.6g} "
            f"at l_max={l_max}; increase l_max",
            TruncationWarning,
            stacklevel=2,
        )
    ls = np.arange(l_max + 1)
    pref = (-1j) ** ls * _SQRT_PI_OVER_2 * radial_bessel_table(l_max, kr)
    blocks: dict[int, np.ndarray] = {}
    if kr == 0.0:
        b = np.zeros(l_max + 1, dtype=complex)
        b[0] = 1.0
        blocks[0] = b
    elif point.on_axis:
        # Y_l0 on the axis is sqrt(2l+1) times (sign of kz)^l
        sign = 1.0 if point.kvec[2] > 0 else -1.0
        blocks[0] = pref * np.sqrt(2 * ls + 1) * sign**ls
    else:
        kx, ky, kz = point.kvec
        theta_r = math.acos(min(1.0, max(-1.0, kz / kr)))
        phi_r = math.atan2(ky, kx)
        cx = np.array([math.cos(theta_r)])
        for m in range(0, l_max + 1):
            p = legendre_table(l_max, m, cx)[0]
            ylm_dir = p * np.exp(1j * m * phi_r)
            blocks[m] = pref[m:] * np.conj(ylm_dir)
            if m > 0:
                # conj(Y_{l,-m}) = (-1)^m Y_{l,m}
                blocks[-m] = pref[m:] * (-1) ** m * ylm_dir
    return AngularFunction(l_max=l_max, blocks=blocks, truncation_tail=tail)
