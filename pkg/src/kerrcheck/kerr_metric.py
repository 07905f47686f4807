"""Kerr metric in Boyer-Lindquist coordinates.

Coordinates are ordered (t, r, theta, phi) everywhere in the package.
Geometric units G = c = 1: both the spin ``a`` and mass ``m`` are lengths.

All component formulas accept floats, numpy arrays, or :class:`~kerrcheck.jets.Jet`
coordinates, so the same code feeds both plain evaluation and the
automatic-differentiation engine.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import jets as J

T, R, TH, PH = range(4)

#: default exterior margin: points must satisfy r >= R_MARGIN * r_+
R_MARGIN = 1.05
#: default polar margin (radians) from the symmetry axis
THETA_MARGIN = 0.05


class DomainError(ValueError):
    """Input lies outside the domain where the Kerr formulas are used."""


@dataclass(frozen=True)
class KerrParams:
    a: float
    m: float

    def __post_init__(self):
        if self.m < 0:
            raise DomainError(f"mass must be non-negative, got m={self.m}")
        if self.m == 0:
            if self.a != 0:
                raise DomainError("a != 0 with m = 0 is not a black hole")
        elif abs(self.a) >= self.m:
            raise DomainError(f"|a| must be < m (subextremal), got a={self.a}, m={self.m}")

    @property
    def r_plus(self) -> float:
        return horizon_radii(self)[0]


@dataclass(frozen=True)
class BLPoint:
    t: float
    r: float
    theta: float
    phi: float

    def as_array(self) -> np.ndarray:
        return np.array([self.t, self.r, self.theta, self.phi], dtype=float)

    @classmethod
    def from_array(cls, x) -> "BLPoint":
        t, r, th, ph = (float(v) for v in x)
        return cls(t, r, th, ph)


@dataclass(frozen=True)
class MetricAt:
    g: np.ndarray
    g_inv: np.ndarray
    det: float


def coords_array(p) -> np.ndarray:
    """Accept a BLPoint, a sequence of four numbers, or an (N, 4) array."""
    if isinstance(p, BLPoint):
        return p.as_array()
    if isinstance(p, (list, tuple)) and p and isinstance(p[0], BLPoint):
        return np.array([q.as_array() for q in p])
    return np.asarray(p, dtype=float)


def aux_scalars(params: KerrParams, r, theta):
    """Return ``(Delta, q, |q|^2, Sigma^2)``.

    ``Sigma^2`` uses ``(r^2+a^2)|q|^2 + 2 m r a^2 sin^2(theta)``; the
    alternative ``(r^2+a^2)^2 - a^2 sin^2(theta) Delta`` is checked by
    :func:`sigma2_identity_residual`.
    """
    a, m = params.a, params.m
    delta = r * r + a * a - 2 * m * r
    q = r + 1j * a * np.cos(theta)
    q2 = r * r + (a * np.cos(theta)) ** 2
    sigma2 = (r * r + a * a) * q2 + 2 * m * r * a * a * np.sin(theta) ** 2
    return delta, q, q2, sigma2


def sigma2_identity_residual(params: KerrParams, r, theta):
    """Relative mismatch between the two expressions for Sigma^2."""
    a, m = params.a, params.m
    delta, _, q2, sigma2 = aux_scalars(params, r, theta)
    other = (r * r + a * a) ** 2 - a * a * np.sin(theta) ** 2 * delta
    first = (r * r + a * a) * q2 + 2 * m * r * a * a * np.sin(theta) ** 2
    return np.abs(first - other) / np.abs(sigma2)


def horizon_radii(params: KerrParams):
    a, m = params.a, params.m
    if m <= 0 or abs(a) >= m:
        raise DomainError(f"horizons need 0 <= |a| < m, got a={a}, m={m}")
    s = math.sqrt(m * m - a * a)
    return m + s, m - s


def check_exterior(params: KerrParams, x, margin: float = 1.0, theta_margin: float = 0.0):
    """Raise :class:`DomainError` unless every point is outside the horizon.

    ``margin`` multiplies r_+ (use :data:`R_MARGIN` for the conditioned
    domain); ``theta_margin`` keeps points off the axis.
    """
    x = np.atleast_2d(coords_array(x))
    r, th = x[:, R], x[:, TH]
    delta = r * r + params.a**2 - 2 * params.m * r
    if np.any(delta <= 0) or np.any(r <= 0):
        raise DomainError("point at or inside the horizon")
    if params.m > 0 and np.any(r < margin * params.r_plus):
        raise DomainError(f"point closer than {margin} r_+ to the horizon")
    if theta_margin > 0 and np.any((th < theta_margin) | (th > np.pi - theta_margin)):
        raise DomainError("point too close to the symmetry axis")


def unpack(x):
    """Split coordinates into a (t, r, theta, phi) sequence.

    An ndarray of shape (..., 4) is split along its last axis; a list of
    jets or numbers passes through.
    """
    if isinstance(x, BLPoint):
        return x.as_array()
    if isinstance(x, np.ndarray):
        return [x[..., mu] for mu in range(4)]
    return x


def metric_components(a: float, m: float, x):
    """Covariant components g_{mu nu} as a nested 4x4 list.

    ``x`` is a sequence (t, r, theta, phi) of floats, arrays or jets.
    """
    x = unpack(x)
    r, th = x[R], x[TH]
    c, s = J.cos(th), J.sin(th)
    s2 = s * s
    q2 = r * r + a * a * c * c
    delta = r * r + a * a - 2 * m * r
    sigma2 = (r * r + a * a) * q2 + 2 * m * r * a * a * s2
    omega = 2 * a * m * r / sigma2
    gphph = sigma2 * s2 / q2
    gtt = -q2 * delta / sigma2 + gphph * omega * omega
    gtph = -gphph * omega
    grr = q2 / delta
    gthth = q2
    return [
        [gtt, 0.0, 0.0, gtph],
        [0.0, grr, 0.0, 0.0],
        [0.0, 0.0, gthth, 0.0],
        [gtph, 0.0, 0.0, gphph],
    ]


def metric_tensor(params: KerrParams, x):
    """g_{mu nu} stacked as an array/jet with tensor axes after the batch axes."""
    return J.stack(metric_components(params.a, params.m, x))


def inverse_metric_components(a: float, m: float, x):
    """Closed-form contravariant components (used as an independent check)."""
    x = unpack(x)
    r, th = x[R], x[TH]
    c, s = J.cos(th), J.sin(th)
    s2 = s * s
    q2 = r * r + a * a * c * c
    delta = r * r + a * a - 2 * m * r
    sigma2 = (r * r + a * a) ** 2 - a * a * s2 * delta
    gtt = -sigma2 / (q2 * delta)
    gtph = -2 * a * m * r / (q2 * delta)
    gphph = (delta - a * a * s2) / (q2 * delta * s2)
    return [
        [gtt, 0.0, 0.0, gtph],
        [0.0, delta / q2, 0.0, 0.0],
        [0.0, 0.0, 1.0 / q2, 0.0],
        [gtph, 0.0, 0.0, gphph],
    ]


def metric(params: KerrParams, p) -> MetricAt:
    x = coords_array(p)
    check_exterior(params, x)
    g = metric_tensor(params, x)
    g_inv = np.linalg.inv(g)
    return MetricAt(g=g, g_inv=g_inv, det=float(np.linalg.det(g)))


def minkowski_spherical(x):
    """Flat metric in spherical coordinates, for asymptotic comparisons."""
    x = unpack(x)
    r, th = x[R], x[TH]
    return J.stack(
        [
            [-1.0, 0.0, 0.0, 0.0],
            [0.0, 1.0, 0.0, 0.0],
            [0.0, 0.0, r * r, 0.0],
            [0.0, 0.0, 0.0, (r * J.sin(th)) ** 2],
        ]
    )
