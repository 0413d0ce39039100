"""Angular quadrature over the sphere and a principal-value integration engine.

The sphere is integrated in cos(theta) with Gauss-Legendre rules applied per
segment, segments being split at the mirror edges where integrands are
discontinuous, and uniformly in azimuth. Weights carry the dOmega/4pi
measure, so integrating the constant 1 gives exactly 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import digamma, roots_legendre

__all__ = [
    "AngularGrid",
    "build_grid",
    "polar_rule",
    "solid_angle_fraction",
    "pv_integrate",
    "PVResult",
    "PVConvergenceError",
]


class PVConvergenceError(RuntimeError):
    """Principal-value integral failed to reach the requested tolerance."""


@dataclass(frozen=True)
class AngularGrid:
    """Quadrature nodes on the sphere under the dOmega/4pi measure.

    theta/mu/w_theta describe the polar rule (sum of w_theta is 1);
    phi_az holds uniformly spaced azimuthal nodes, each of weight
    1/len(phi_az). Segment edges record where the polar rule was split.
    """

    theta: np.ndarray
    mu: np.ndarray
    w_theta: np.ndarray
    phi_az: np.ndarray
    edges: tuple[float, ...]

    @property
    def n_polar(self) -> int:
        return self.theta.size

    @property
    def n_azimuthal(self) -> int:
        return self.phi_az.size

    def integrate_polar(self, values: np.ndarray) -> float:
        """Integrate an azimuth-independent integrand given on theta nodes."""
        return float(np.dot(self.w_theta, values))

    def integrate(self, values: np.ndarray) -> float:
        """Integrate values of shape (n_polar, n_azimuthal)."""
        return float(np.dot(self.w_theta, np.asarray(values).mean(axis=1)))


def polar_rule(theta_edges, order: int):
    """Gauss-Legendre nodes/weights in mu = cos(theta), split per segment.

    Returns (mu, w) with weights normalized to the polar half of the
    dOmega/4pi measure: sum(w) = 1 over the full sphere.
    """
    if order < 2:
        raise ValueError(f"polar order must be >= 2, got {order}")
    edges = np.sort(np.asarray(theta_edges, dtype=float))
    if edges.size and (edges[0] <= 0.0 or edges[-1] >= math.pi):
        raise ValueError("theta edges must lie strictly inside (0, pi)")
    mus = np.concatenate(([-1.0], np.cos(edges)[::-1], [1.0]))
    if np.any(np.diff(mus) <= 0.0):
        raise ValueError("degenerate segment: repeated theta edge")
    xs, ws = roots_legendre(order)
    mu_parts, w_parts = [], []
    for a, b in zip(mus[:-1], mus[1:]):
        mu_parts.append(0.5 * (b - a) * xs + 0.5 * (a + b))
        w_parts.append(0.25 * (b - a) * ws)
    return np.concatenate(mu_parts), np.concatenate(w_parts)


def build_grid(theta_edges, order_polar: int, order_azimuthal: int) -> AngularGrid:
    """Spherical product grid: per-segment Gauss in cos(theta), uniform azimuth."""
    if order_azimuthal < 2:
        raise ValueError(f"azimuthal order must be >= 2, got {order_azimuthal}")
    mu, w = polar_rule(theta_edges, order_polar)
    phi = 2.0 * math.pi * (np.arange(order_azimuthal) + 0.5) / order_azimuthal
    return AngularGrid(
        theta=np.arccos(np.clip(mu, -1.0, 1.0)),
        mu=mu,
        w_theta=w,
        phi_az=phi,
        edges=tuple(float(e) for e in np.sort(np.asarray(theta_edges, dtype=float))),
    )


def solid_angle_fraction(theta_m: float) -> float:
    """Fraction of 4pi covered by two symmetric caps of half-aperture theta_m."""
    if not 0.0 <= theta_m <= math.pi / 2:
        raise ValueError(f"theta_m must lie in [0, pi/2], got {theta_m}")
    return 1.0 - math.cos(theta_m)


@dataclass(frozen=True)
class PVResult:
    value: float
    error: float
    periods: int
    n_nodes: int

    @property
    def converged(self) -> bool:
        return math.isfinite(self.value) and math.isfinite(self.error)


def _pv_panels(period, subpanels, refine_points, refine_levels):
    edges = set(np.linspace(0.0, period, subpanels + 1))
    for p in refine_points:
        p = p % period
        h = period / subpanels / 2.0
        for _ in range(refine_levels):
            for e in (p - h, p + h):
                if 0.0 < e < period:
                    edges.add(e)
            h /= 2.0
        if 0.0 < p < period:
            edges.add(p)
    return np.array(sorted(edges))


def pv_integrate(
    kernel,
    *,
    period: float = math.pi,
    num_periods: int = 4096,
    order: int = 16,
    subpanels: int = 8,
    refine_points=(),
    refine_levels: int = 14,
    tol: float | None = None,
) -> PVResult:
    """Principal value of the integral of kernel(d)/d over the real line.

    kernel must be a vectorized function periodic with the given period and
    with zero mean over one period (both hold for resonance-line kernels).
    The pole at d = 0 is removed by the odd-part pairing
    (kernel(d) - kernel(-d))/d, the first period is integrated with
    Gauss-Legendre panels (geometrically refined toward the caller-supplied
    refine_points, e.g. resonance peaks), and every later period reuses the
    same kernel values reweighted by 1/(d + n*period); the reweighted sums
    over the first N periods are evaluated in closed form through digamma
    differences. Partial sums converge like 1/N in the period count and are
    accelerated by two Richardson extrapolation levels on a doubling ladder.

    Raises PVConvergenceError when tol is given and the error estimate,
    relative to max(1, |value|), exceeds it.
    """
    if num_periods < 64:
        raise ValueError("num_periods must be at least 64")
    edges = _pv_panels(period, subpanels, refine_points, refine_levels)
    xs, ws = roots_legendre(order)
    lo, hi = edges[:-1], edges[1:]
    u = (0.5 * (hi - lo)[:, None] * xs[None, :] + 0.5 * (lo + hi)[:, None]).ravel()
    w = (0.5 * (hi - lo)[:, None] * ws[None, :]).ravel()
    h = np.asarray(kernel(u)) - np.asarray(kernel(-u))
    wh = w * h
    # partial sum over the first N periods reuses the same kernel values:
    # sum_{n<N} 1/(u + nP) = (psi(u/P + N) - psi(u/P)) / P
    base = digamma(u / period)
    ns = [num_periods // 8, num_periods // 4, num_periods // 2, num_periods]
    s = [float(np.dot(wh, digamma(u / period + n) - base)) / period for n in ns]
    r1 = [2.0 * s[i + 1] - s[i] for i in range(3)]
    r2 = [(4.0 * r1[i + 1] - r1[i]) / 3.0 for i in range(2)]
    value = r2[-1]
    error = abs(r2[-1] - r2[-2]) + 0.25 * abs(r2[-1] - r1[-1])
    result = PVResult(value=float(value), error=float(error),
                      periods=num_periods, n_nodes=u.size)
    if tol is not None and error > tol * max(1.0, abs(value)):
        raise PVConvergenceError(
            f"principal-value estimate {value:.6e} has error {error:.2e} "
            f"above tolerance {tol:.1e} after {num_periods} periods"
        )
    return result
