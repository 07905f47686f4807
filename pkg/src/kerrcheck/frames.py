"""Null frames of Kerr: principal frame, general transformations, PG rescaling.

Frames are stored contravariantly in the Boyer-Lindquist coordinate basis.
A *frame field* is a callable ``coords -> NullFrame`` that accepts jets, so
frames can be differentiated (Ricci coefficients, Lie brackets).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import jets as J
from .diffgeo import Geometry
from .kerr_metric import DomainError, KerrParams, check_exterior, coords_array, metric_tensor, unpack

T, R, TH, PH = range(4)


class ConvergenceError(RuntimeError):
    pass


@dataclass
class NullFrame:
    """(e4, e3, e1, e2); each entry has shape (..., 4) (array or jet)."""

    e4: object
    e3: object
    e1: object
    e2: object

    def vectors(self):
        """Frame vectors ordered (e1, e2, e3, e4)."""
        return [self.e1, self.e2, self.e3, self.e4]

    def value(self) -> "NullFrame":
        return NullFrame(*(J.value(v) for v in (self.e4, self.e3, self.e1, self.e2)))

    def as_matrix(self) -> np.ndarray:
        """Rows (e1, e2, e3, e4) of plain components, shape (..., 4, 4)."""
        return np.stack([np.asarray(J.value(v)) for v in self.vectors()], axis=-2)


@dataclass(frozen=True)
class FrameTransform:
    """Parameters (f, fb, lam) of a general null-frame change.

    ``f`` and ``fb`` are horizontal 1-forms given in the (e1, e2) basis of
    the frame being transformed; ``lam`` may also be a jet-valued function
    of position (see :func:`pg_frame_field`).
    """

    f: tuple = (0.0, 0.0)
    fb: tuple = (0.0, 0.0)
    lam: object = 1.0

    def __post_init__(self):
        if not isinstance(self.lam, J.Jet) and np.any(np.asarray(self.lam) <= 0):
            raise ValueError("lambda must be positive")

    @classmethod
    def identity(cls) -> "FrameTransform":
        return cls()


FrameField = Callable[[object], NullFrame]


def _scale(s, v):
    """Scalar (per batch point) times vector (..., 4)."""
    if isinstance(s, J.Jet):
        return s.expand_dims(-1) * v
    s = np.asarray(s, dtype=float)
    if s.ndim == 0:
        return v * float(s)
    return v * s[..., None]


def principal_components(params: KerrParams, x) -> NullFrame:
    """Principal null pair and canonical horizontal basis at coordinates ``x``."""
    a, m = params.a, params.m
    x = unpack(x)
    r, th = x[R], x[TH]
    c, s = J.cos(th), J.sin(th)
    q2 = r * r + a * a * c * c
    qabs = J.sqrt(q2)
    delta = r * r + a * a - 2 * m * r
    rr = r * r + a * a
    zero = 0.0 * r
    e4 = J.stack([rr / q2, delta / q2, zero, a / q2])
    e3 = J.stack([rr / delta, zero - 1.0, zero, a / delta])
    e1 = J.stack([zero, zero, 1.0 / qabs, zero])
    e2 = J.stack([a * s / qabs, zero, zero, 1.0 / (qabs * s)])
    return NullFrame(e4=e4, e3=e3, e1=e1, e2=e2)


def principal_frame_field(params: KerrParams) -> FrameField:
    return lambda x: principal_components(params, x)


def _check_off_axis(x):
    th = np.atleast_1d(coords_array(x)[..., TH])
    if np.any(np.abs(np.sin(th)) < 1e-10):
        raise DomainError("horizontal basis is singular on the axis")


def principal_frame(params: KerrParams, p) -> NullFrame:
    x = coords_array(p)
    check_exterior(params, x)
    _check_off_axis(x)
    return principal_components(params, x)


def transform_frame(frame: NullFrame, x: FrameTransform) -> NullFrame:
    """Apply the general (f, fb, lam) change of null frame.

    e4' = lam (e4 + f^b e_b + |f|^2/4 e3)
    e_a' = (delta_a^b + fb_a f^b / 2) e_b + fb_a/2 e4 + (f_a/2 + |f|^2 fb_a/8) e3
    e3' = lam^-1 ((1 + f.fb/2 + |f|^2|fb|^2/16) e3 + (fb^b + |fb|^2 f^b/4) e_b + |fb|^2/4 e4)
    """
    lam = x.lam
    if not isinstance(lam, J.Jet) and np.any(np.asarray(lam) <= 0):
        raise ValueError("lambda must be positive")
    f1, f2 = x.f
    g1, g2 = x.fb
    e1, e2, e3, e4 = frame.e1, frame.e2, frame.e3, frame.e4
    ff = f1 * f1 + f2 * f2
    gg = g1 * g1 + g2 * g2
    fg = f1 * g1 + f2 * g2
    fe = _scale(f1, e1) + _scale(f2, e2)
    ge = _scale(g1, e1) + _scale(g2, e2)

    e4n = _scale(lam, e4 + fe + _scale(0.25 * ff, e3))
    e1n = e1 + _scale(0.5 * g1, fe) + _scale(0.5 * g1, e4) + _scale(0.5 * f1 + 0.125 * ff * g1, e3)
    e2n = e2 + _scale(0.5 * g2, fe) + _scale(0.5 * g2, e4) + _scale(0.5 * f2 + 0.125 * ff * g2, e3)
    e3n = _scale(
        1.0 / lam,
        _scale(1.0 + 0.5 * fg + ff * gg / 16.0, e3) + ge + _scale(0.25 * gg, fe) + _scale(0.25 * gg, e4),
    )
    return NullFrame(e4=e4n, e3=e3n, e1=e1n, e2=e2n)


def transformed_field(field: FrameField, x) -> FrameField:
    """Frame field obtained by applying ``x`` pointwise.

    ``x`` is a FrameTransform with constant entries, or a callable
    ``coords -> FrameTransform`` for position-dependent transforms.
    """
    if callable(x):
        return lambda c: transform_frame(field(c), x(c))
    return lambda c: transform_frame(field(c), x)


# -- invariants --------------------------------------------------------------
def frame_invariants(g: np.ndarray, frame: NullFrame) -> dict:
    """Relative residuals of the null-frame inner-product conditions.

    Each residual is divided by the sum of the absolute terms entering the
    contraction, i.e. measured against the rounding scale.
    """
    fr = frame.value()
    g = np.asarray(g)

    def ip(u, v):
        terms = g * u[..., :, None] * v[..., None, :]
        return terms.sum(axis=(-1, -2)), np.abs(terms).sum(axis=(-1, -2))

    out = {}
    targets = {
        "g(e4,e4)": (fr.e4, fr.e4, 0.0),
        "g(e3,e3)": (fr.e3, fr.e3, 0.0),
        "g(e3,e4)": (fr.e3, fr.e4, -2.0),
        "g(e1,e1)": (fr.e1, fr.e1, 1.0),
        "g(e2,e2)": (fr.e2, fr.e2, 1.0),
        "g(e1,e2)": (fr.e1, fr.e2, 0.0),
        "g(e1,e3)": (fr.e1, fr.e3, 0.0),
        "g(e1,e4)": (fr.e1, fr.e4, 0.0),
        "g(e2,e3)": (fr.e2, fr.e3, 0.0),
        "g(e2,e4)": (fr.e2, fr.e4, 0.0),
    }
    for name, (u, v, target) in targets.items():
        val, scale = ip(u, v)
        denom = np.maximum(scale, max(abs(target), np.finfo(float).tiny))
        out[name] = np.abs(val - target) / denom
    return out


def max_invariant_residual(g, frame) -> np.ndarray:
    return np.max(np.stack(list(frame_invariants(g, frame).values())), axis=0)


# -- inverse transform -------------------------------------------------------
def _pack(x: FrameTransform) -> np.ndarray:
    return np.array([x.f[0], x.f[1], x.fb[0], x.fb[1], x.lam], dtype=float)


def _unpack(v) -> FrameTransform:
    return FrameTransform(f=(v[0], v[1]), fb=(v[2], v[3]), lam=v[4])


def invert_transform(x: FrameTransform, frame: NullFrame, tol: float = 1e-14, max_iter: int = 50) -> FrameTransform:
    """Transform ``y`` taking ``transform_frame(frame, x)`` back to ``frame``.

    The parameters of ``y`` refer to the (e1', e2') basis of the primed
    frame.  ``y`` restores the null pair (e3, e4) and the horizontal plane
    exactly; within the plane the basis comes back rotated by the angle
    returned from :func:`horizontal_rotation` (about ``-f^fb/2``), since the
    (f, fb, lam) family has no rotation generator.

    A fixed-point iteration on the expansion of (e3, e4) in the primed frame
    gives the starting point, and Gauss-Newton on the null-pair components
    polishes it.
    """
    if np.hypot(*x.f) * np.hypot(*x.fb) >= 1.0:
        raise ConvergenceError("transform outside the perturbative regime |f||fb| < 1")
    base = frame.value()
    primed = transform_frame(base, x)
    target = np.concatenate([base.e4, base.e3])
    scale = np.abs(target).max()
    basis = primed.as_matrix()  # rows e1', e2', e3', e4'

    c4 = np.linalg.solve(basis.T, base.e4)
    c3 = np.linalg.solve(basis.T, base.e3)
    lam = c4[3]
    if lam <= 0:
        raise ConvergenceError("primed frame reverses time orientation")
    f = c4[:2] / lam
    fb = np.zeros(2)
    for _ in range(max_iter):
        fb_new = lam * c3[:2] - 0.25 * (fb @ fb) * f
        done = np.max(np.abs(fb_new - fb)) < 1e-15
        fb = fb_new
        if done:
            break
    v = np.array([f[0], f[1], fb[0], fb[1], lam])

    def residual(w):
        if w[4] <= 0:
            return np.full(8, np.inf)
        back = transform_frame(primed, _unpack(w))
        return (np.concatenate([back.e4, back.e3]) - target) / scale

    res = residual(v)
    for _ in range(max_iter):
        if np.max(np.abs(res)) < tol:
            return _unpack(v)
        jac = np.empty((8, 5))
        h = 1e-7
        for k in range(5):
            dv = np.zeros(5)
            dv[k] = h
            jac[:, k] = (residual(v + dv) - residual(v - dv)) / (2 * h)
        step, *_ = np.linalg.lstsq(jac, -res, rcond=None)
        v_new = v + step
        res_new = residual(v_new)
        if not np.max(np.abs(res_new)) < np.max(np.abs(res)):
            break
        v, res = v_new, res_new
    if np.max(np.abs(res)) < 1e-12:
        return _unpack(v)
    raise ConvergenceError(f"inverse transform did not converge (residual {np.max(np.abs(res)):.3g})")


def horizontal_rotation(g, frame: NullFrame, reference: NullFrame) -> np.ndarray:
    """Angle taking (e1, e2) of ``reference`` to those of ``frame``."""
    g = np.asarray(g)
    a, b = frame.value(), reference.value()
    c = np.einsum("...ab,...a,...b->...", g, a.e1, b.e1)
    s = np.einsum("...ab,...a,...b->...", g, a.e1, b.e2)
    return np.arctan2(s, c)


def round_trip_residual(g, frame: NullFrame, x: FrameTransform) -> dict:
    """Apply ``x`` then its numerical inverse and compare with ``frame``.

    Returns the relative componentwise mismatch of the null pair, of the
    horizontal vectors after undoing the in-plane rotation, and the rotation
    angle itself.
    """
    base = frame.value()
    primed = transform_frame(base, x)
    back = transform_frame(primed, invert_transform(x, base))
    scale = np.abs(base.as_matrix()).max()
    angle = horizontal_rotation(g, back, base)
    c, s = np.cos(angle), np.sin(angle)
    e1 = c * base.e1 + s * base.e2
    e2 = -s * base.e1 + c * base.e2
    pair = max(np.abs(back.e4 - base.e4).max(), np.abs(back.e3 - base.e3).max()) / scale
    horiz = max(np.abs(back.e1 - e1).max(), np.abs(back.e2 - e2).max()) / scale
    raw = max(np.abs(back.e1 - base.e1).max(), np.abs(back.e2 - base.e2).max()) / scale
    return {"null_pair": pair, "horizontal": horiz, "componentwise": max(pair, raw), "angle": float(angle)}


# -- integrability -----------------------------------------------------------
def integrability_defect(frame_field: FrameField, params: KerrParams, p):
    """(d3, d4) = (-1/2 g([e1,e2], e4), -1/2 g([e1,e2], e3)).

    Both vanish exactly when the horizontal distribution is integrable.
    """
    geo = Geometry(params, p, order=1)
    fr = frame_field(geo.coords)
    e1, e2 = fr.e1, fr.e2
    d1 = e1.grad().value  # [c, b] = d_b e1^c
    d2 = e2.grad().value
    v1, v2 = e1.value, e2.value
    bracket = np.einsum("...b,...cb->...c", v1, d2) - np.einsum("...b,...cb->...c", v2, d1)
    g = geo.g.value
    e3, e4 = J.value(fr.e3), J.value(fr.e4)
    d3 = -0.5 * np.einsum("...ab,...a,...b->...", g, bracket, e4)
    d4 = -0.5 * np.einsum("...ab,...a,...b->...", g, bracket, e3)
    return d3, d4


# -- PG normalisation --------------------------------------------------------
def pg_lambda(params: KerrParams, x):
    """lam = |q|^2 / Delta, turning the principal e4 into one with e4(r) = 1."""
    x = unpack(x)
    r, th = x[R], x[TH]
    a, m = params.a, params.m
    c = J.cos(th)
    return (r * r + a * a * c * c) / (r * r + a * a - 2 * m * r)


def pg_frame_field(params: KerrParams) -> FrameField:
    def field(x):
        return transform_frame(principal_components(params, x), FrameTransform(lam=pg_lambda(params, x)))

    return field


def pg_normalized_frame(params: KerrParams, p) -> NullFrame:
    x = coords_array(p)
    check_exterior(params, x)
    _check_off_axis(x)
    return pg_frame_field(params)(x)


def frame_metric(params: KerrParams, p) -> np.ndarray:
    return metric_tensor(params, coords_array(p))
