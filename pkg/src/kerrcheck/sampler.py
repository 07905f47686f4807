"""Deterministic low-discrepancy samples for the verification suites.

Points come from a randomly shifted rank-1 Korobov lattice evaluated in
integer arithmetic; the only randomness is the integer shift drawn from a
seeded PCG64 stream, so output is identical across platforms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .frames import FrameTransform
from .kerr_metric import BLPoint, KerrParams

F_BOUND = 0.3
LAMBDA_RANGE = (0.5, 2.0)


@dataclass(frozen=True)
class SampleSpec:
    """``r_range = (multiple of r_+, max in units of m)``."""

    seed: int = 0
    n_points: int = 500
    r_range: tuple = (1.05, 20.0)
    theta_margin: float = 0.1
    a_over_m: tuple = (0.0, 0.05, 0.3, 0.7)
    m: tuple = (0.5, 1.0, 2.0)
    n_transforms: int = 100

    def __post_init__(self):
        if self.r_range[0] < 1.01:
            raise ValueError("r_range minimum must be >= 1.01 r_+")
        if not 0 < self.theta_margin < math.pi / 4:
            raise ValueError("theta_margin must lie in (0, pi/4)")
        if self.n_points < 1 or self.n_transforms < 0:
            raise ValueError("sample counts must be positive")
        if any(m <= 0 for m in self.m):
            raise ValueError("masses must be positive")
        if any(not 0 <= abs(x) < 1 for x in self.a_over_m):
            raise ValueError("a/m must satisfy |a/m| < 1")

    def params(self) -> list:
        return [KerrParams(x * m, m) for m in self.m for x in self.a_over_m]


def _korobov_generator(n: int, dim: int) -> list:
    """Generator (1, g, g^2, ...) mod n with g near n (sqrt 5 - 1)/2, coprime to n."""
    g = max((math.isqrt(5 * n * n) - n) // 2, 1)
    while math.gcd(g, n) != 1:
        g += 1
    return [pow(g, k, n) for k in range(dim)]


def lattice(n: int, dim: int, seed: int) -> np.ndarray:
    """Shifted rank-1 lattice in [0, 1)^dim as exact integer fractions."""
    z = _korobov_generator(n, dim)
    shift = np.random.Generator(np.random.PCG64(seed)).integers(0, n, size=dim)
    i = np.arange(n, dtype=np.int64)[:, None]
    num = (i * np.array(z, dtype=np.int64) + shift) % n
    return num / n


def unit_points(spec: SampleSpec) -> np.ndarray:
    """(u_r, u_theta, u_phi, u_t) rows shared by all parameter pairs."""
    return lattice(spec.n_points, 4, spec.seed)


def sample_points(spec: SampleSpec) -> list:
    """List of (KerrParams, BLPoint), ``n_points`` per (a, m) pair."""
    u = unit_points(spec)
    out = []
    for params in spec.params():
        for row in map_points(spec, params, u):
            out.append((params, BLPoint.from_array(row)))
    return out


def map_points(spec: SampleSpec, params: KerrParams, u=None) -> np.ndarray:
    """Lattice mapped to (t, r, theta, phi) rows for one parameter pair."""
    if u is None:
        u = unit_points(spec)
    r_lo = spec.r_range[0] * params.r_plus
    r_hi = spec.r_range[1] * params.m
    if r_hi <= r_lo:
        raise ValueError("empty radial range")
    r = r_lo + (r_hi - r_lo) * u[:, 0]
    # keep the polar nodes strictly inside the open interval
    th = spec.theta_margin + (math.pi - 2 * spec.theta_margin) * (u[:, 1] + 0.5 / spec.n_points)
    ph = 2 * math.pi * u[:, 2]
    t = 10 * params.m * u[:, 3]
    return np.column_stack([t, r, th, ph])


def sample_transforms(spec: SampleSpec) -> list:
    """``n_transforms`` FrameTransforms with |f|, |fb| <= 0.3 and lam in [0.5, 2]."""
    n = max(spec.n_transforms, 1)
    u = lattice(n, 5, spec.seed + 1)[: spec.n_transforms]
    half = F_BOUND / math.sqrt(2)
    lo, hi = LAMBDA_RANGE
    out = []
    for row in u:
        f = tuple(float(half * (2 * v - 1)) for v in row[0:2])
        fb = tuple(float(half * (2 * v - 1)) for v in row[2:4])
        out.append(FrameTransform(f=f, fb=fb, lam=float(lo + (hi - lo) * row[4])))
    return out


def analytic_fields() -> dict:
    """Analytic scalar fields used by the commutator checks."""
    from .carter import TEST_FIELDS

    return dict(TEST_FIELDS)
