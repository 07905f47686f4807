"""Verification suites producing one report row per check per sample."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import carter, diffgeo, frames, horizontal
from .kerr_metric import KerrParams, aux_scalars, metric_tensor, sigma2_identity_residual
from .sampler import SampleSpec, map_points, sample_transforms

NAN = float("nan")


@dataclass(frozen=True)
class ReportRow:
    check: str
    index: int
    a: float
    m: float
    point: tuple
    residual: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return bool(self.residual < self.tolerance)

    def fields(self) -> list:
        return [self.check, self.index, self.a, self.m, *self.point, self.residual, self.tolerance, int(self.passed)]


REPORT_HEADER = ("check", "index", "a", "m", "t", "r", "theta", "phi", "residual", "tolerance", "pass")

TOLERANCES = {
    "ricci_flat": 1e-8,
    "killing_T": 1e-12,
    "killing_Z": 1e-12,
    "sigma2_identity": 1e-12,
    "frame_invariants": 1e-10,
    "transform_roundtrip": 1e-9,
    "boost_composition": 1e-15,
    "kerr_table": 1e-10,
    "renormalization": 1e-10,
    "carter_killing": 1e-8,
    "carter_commutator": 1e-6,
    "integrability": 1e-12,
    "integrability_cross": 1e-10,
    "ell1_modes": 1e-12,
    "isothermal": 1e-8,
}

SUITES = (
    "ricci-flat",
    "killing",
    "sigma2",
    "frames",
    "roundtrip",
    "kerr-table",
    "renormalization",
    "carter",
    "integrability",
    "modes",
    "isothermal",
)


@dataclass(frozen=True)
class VerifyOptions:
    transform_points: int = 20
    commutator_points: int = 10
    sphere_radii: tuple = (3.0, 6.0, 12.0)  # in units of m


def _rows(check, params, pts, residuals, tol=None, offset=0):
    tol = TOLERANCES[check.split(".")[0]] if tol is None else tol
    residuals = np.broadcast_to(np.asarray(residuals, dtype=float), (len(pts),))
    return [
        ReportRow(check, offset + i, params.a, params.m, tuple(float(v) for v in pts[i]), float(residuals[i]), tol)
        for i in range(len(pts))
    ]


# -- individual suites ---------------------------------------------------------
def suite_ricci(params, pts, opts):
    return _rows("ricci_flat", params, pts, diffgeo.ricci_residual(params, pts))


def suite_killing(params, pts, opts):
    scale = diffgeo.killing_scale(params, pts)
    out = []
    for name in ("T", "Z"):
        res = np.abs(diffgeo.killing_residual(params, name, pts)).max(axis=(-1, -2)) / scale
        out += _rows(f"killing_{name}", params, pts, res)
    return out


def suite_sigma2(params, pts, opts):
    return _rows("sigma2_identity", params, pts, sigma2_identity_residual(params, pts[:, 1], pts[:, 2]))


def _transform_points(params, pts, opts):
    return pts[: opts.transform_points]


def suite_frames(params, pts, opts, transforms):
    pts = _transform_points(params, pts, opts)
    g = metric_tensor(params, pts)
    base = frames.principal_frame(params, pts)
    out = []
    for k, x in enumerate(transforms):
        res = frames.max_invariant_residual(g, frames.transform_frame(base, x))
        out += _rows("frame_invariants", params, pts, res, offset=k * len(pts))
    boost = frames.transform_frame(
        frames.transform_frame(base, frames.FrameTransform(lam=2.0)), frames.FrameTransform(lam=0.25)
    )
    direct = frames.transform_frame(base, frames.FrameTransform(lam=0.5))
    err = np.max(
        [np.abs(u - v).max(axis=-1) / np.abs(v).max(axis=-1) for u, v in zip(boost.vectors(), direct.vectors())],
        axis=0,
    )
    out += _rows("boost_composition", params, pts, err)
    return out


def suite_roundtrip(params, pts, opts, transforms):
    pts = _transform_points(params, pts, opts)
    g = metric_tensor(params, pts)
    out = []
    for k, x in enumerate(transforms):
        res = []
        for i, row in enumerate(pts):
            fr = frames.principal_frame(params, row)
            rt = frames.round_trip_residual(g[i], fr, x)
            res.append(max(rt["null_pair"], rt["horizontal"]))
        out += _rows("transform_roundtrip", params, pts, res, offset=k * len(pts))
    return out


def kerr_table_errors(params: KerrParams, pts) -> dict:
    """Per-quantity errors of the principal-frame Kerr table.

    Closed-form entries are relative errors; vanishing entries are divided
    by |P|.
    """
    rc = horizontal.ricci_coefficients(params, None, pts)
    cc = horizontal.curvature_components(params, None, pts)
    jk = horizontal.jk_form(params, pts)
    kv = horizontal.kerr_values(params.a, params.m, pts[..., 1], pts[..., 2], jk)
    absP = np.abs(kv["P"])
    computed = {"P": cc.P, "trX": rc.trX, "trXb": rc.trXb, "Z": rc.Z, "H": rc.H, "Hb": rc.Hb}
    out = {}
    for name, val in computed.items():
        ref = kv[name]
        err, den = np.abs(val - ref), np.abs(ref)
        if np.ndim(err) > np.ndim(absP):
            err, den = err.max(axis=-1), den.max(axis=-1)
        # Z, H, Hb vanish for a = 0; fall back to the |P| scale there
        out[name] = err / np.where(den > 0, den, absP)
    vanishing = {
        "A": cc.A,
        "Ab": cc.Ab,
        "B": cc.B,
        "Bb": cc.Bb,
        "chihat": rc.chihat,
        "chibhat": rc.chibhat,
    }
    for name, val in vanishing.items():
        axes = tuple(range(np.ndim(absP), np.ndim(val)))
        out[name] = np.abs(val).max(axis=axes) / absP
    return out


def suite_kerr_table(params, pts, opts):
    out = []
    for name, res in kerr_table_errors(params, pts).items():
        out += _rows(f"kerr_table.{name}", params, pts, res)
    return out


def renormalization_errors(params: KerrParams, pts) -> np.ndarray:
    rc = horizontal.ricci_coefficients(params, None, pts)
    cc = horizontal.curvature_components(params, None, pts)
    jk = horizontal.jk_form(params, pts)
    checked = horizontal.renormalize(rc, cc, params, pts[:, 1], pts[:, 2], jk)
    absP = np.abs(cc.P)
    worst = np.zeros(len(pts))
    for val in checked.values():
        v = np.abs(val)
        if v.ndim > 1:
            v = v.max(axis=-1)
        worst = np.maximum(worst, v / absP)
    return worst


def suite_renormalization(params, pts, opts):
    return _rows("renormalization", params, pts, renormalization_errors(params, pts))


def suite_carter(params, pts, opts):
    out = _rows("carter_killing", params, pts, carter.killing_tensor_residual(params, pts))
    sub = pts[: opts.commutator_points]
    for name, field in carter.TEST_FIELDS.items():
        out += _rows(f"carter_commutator.{name}", params, sub, carter.commutator_residual(params, field, sub))
    return out


def atr_closed_forms(params: KerrParams, r, theta):
    """(atr chi, atr chib) of the principal frame: 2 a Delta cos/|q|^4 and 2 a cos/|q|^2."""
    delta, _, q2, _ = aux_scalars(params, r, theta)
    c = np.cos(theta)
    return 2 * params.a * delta * c / q2**2, 2 * params.a * c / q2


def suite_integrability(params, pts, opts):
    rc = horizontal.ricci_coefficients(params, None, pts)
    d3, d4 = frames.integrability_defect(frames.principal_frame_field(params), params, pts)
    r = pts[:, 1]
    atr, atrb = atr_closed_forms(params, r, pts[:, 2])
    out = _rows("integrability.atrchi", params, pts, np.abs(rc.atrchi - atr) * r)
    out += _rows("integrability.atrchib", params, pts, np.abs(rc.atrchib - atrb) * r)
    cross = np.maximum(np.abs(rc.atrchi - 2 * d3), np.abs(rc.atrchib - 2 * d4)) * r
    out += _rows("integrability_cross", params, pts, cross)
    return out


def suite_modes(params, pts, opts):
    out = []
    for k, rm in enumerate(opts.sphere_radii):
        r = rm * params.m
        norm = 4 * math.pi * r * r
        modes = horizontal.ell1_modes(1.0, params, r)
        res = max(abs(v) for v in modes) / norm
        out.append(ReportRow("ell1_modes.const", k, params.a, params.m, (NAN, r, NAN, NAN), res, TOLERANCES["ell1_modes"]))
        if params.a == 0:
            i0, ip, im = horizontal.ell1_modes(lambda th, ph: np.cos(th), params, r)
            res = max(abs(i0 - norm / 3), abs(ip), abs(im)) / norm
            out.append(ReportRow("ell1_modes.cos", k, params.a, params.m, (NAN, r, NAN, NAN), res, TOLERANCES["ell1_modes"]))
    return out


def suite_isothermal(params, pts, opts):
    out = []
    th = np.linspace(0.05, math.pi - 0.05, 41)
    for k, rm in enumerate(opts.sphere_radii):
        r = rm * params.m
        fit = horizontal.isothermal_fit(*horizontal.kerr_sphere_metric(params, r), r)
        if params.a == 0:
            res = max(np.abs(fit.theta_prime(th) - th).max(), np.abs(fit.conformal_factor(th)).max())
            tol = 1e-12
        else:
            res, tol = fit.residual(th).max(), TOLERANCES["isothermal"]
        out.append(ReportRow("isothermal", k, params.a, params.m, (NAN, r, NAN, NAN), float(res), tol))
    return out


POINT_SUITES = {
    "ricci-flat": suite_ricci,
    "killing": suite_killing,
    "sigma2": suite_sigma2,
    "kerr-table": suite_kerr_table,
    "renormalization": suite_renormalization,
    "carter": suite_carter,
    "integrability": suite_integrability,
    "modes": suite_modes,
    "isothermal": suite_isothermal,
}
TRANSFORM_SUITES = {"frames": suite_frames, "roundtrip": suite_roundtrip}


def run_suites(spec: SampleSpec, suites=SUITES, opts: VerifyOptions = VerifyOptions()) -> list:
    """All rows of the selected suites, sorted by check id then sample index."""
    unknown = set(suites) - set(SUITES)
    if unknown:
        raise ValueError(f"unknown suite(s): {', '.join(sorted(unknown))}")
    transforms = sample_transforms(spec) if set(suites) & set(TRANSFORM_SUITES) else []
    rows = []
    for params in spec.params():
        pts = map_points(spec, params)
        for name in suites:
            if name in POINT_SUITES:
                rows += POINT_SUITES[name](params, pts, opts)
            else:
                rows += TRANSFORM_SUITES[name](params, pts, opts, transforms)
    return sort_rows(rows)


def sort_rows(rows):
    # stable: parameter order is kept among rows with equal (check, index)
    return sorted(rows, key=lambda row: (row.check, row.index))
