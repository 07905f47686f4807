"""Curvature and covariant calculus of the Kerr metric via jets.

Every derivative is taken by forward-mode automatic differentiation
(:mod:`kerrcheck.jets`), never by finite differences, so identity residuals
measure rounding only.

Index conventions: ``gamma[..., a, b, c] = Gamma^a_{bc}``;
``R^a_{bcd} = d_c Gamma^a_{db} - d_d Gamma^a_{cb} + Gamma^a_{ce} Gamma^e_{db}
- Gamma^a_{de} Gamma^e_{cb}``; ``R_{abcd} = g_{ae} R^e_{bcd}``; the dual is
``(*R)_{abcd} = 1/2 eps_{ab}^{mn} R_{mncd}`` with ``eps_{t r th ph} = +sqrt|g|``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Sequence

import numpy as np

from . import jets as J
from .jets import JetOrderError
from .kerr_metric import KerrParams, check_exterior, coords_array, metric_tensor

#: max jet order used anywhere (the Carter commutator needs four)
MAX_ORDER = 4

ScalarField = Callable[[Sequence], "J.Jet"]
VectorField = Callable[[Sequence], Sequence]


def levi_civita_symbol() -> np.ndarray:
    eps = np.zeros((4, 4, 4, 4))
    for perm in itertools.permutations(range(4)):
        inv = sum(1 for i in range(4) for j in range(i + 1, 4) if perm[i] > perm[j])
        eps[perm] = -1.0 if inv % 2 else 1.0
    return eps


_EPS = levi_civita_symbol()


class Geometry:
    """Metric jet and derived connection data at a batch of points.

    ``points`` has shape (4,) or (N, 4).  ``order`` is the jet order of the
    metric; Christoffel symbols carry ``order - 1``, curvature ``order - 2``.
    """

    def __init__(self, params: KerrParams, points, order: int = 2, check: bool = True):
        if order > MAX_ORDER:
            raise JetOrderError(f"jet order capped at {MAX_ORDER}")
        self.params = params
        self.points = coords_array(points)
        if check:
            check_exterior(params, self.points)
        self.order = order
        self.coords = J.seed(self.points, order)
        self.g = metric_tensor(params, self.coords)
        self.ginv = J.inv_matrix(self.g)

    @cached_property
    def gamma(self) -> J.Jet:
        if self.order < 1:
            raise JetOrderError("Christoffel symbols need metric jets of order >= 1")
        dg = self.g.grad()  # dg[a, b, c] = d_c g_ab
        return 0.5 * (
            J.contract("ad,dcb->abc", self.ginv, dg)
            + J.contract("ad,dbc->abc", self.ginv, dg)
            - J.contract("ad,bcd->abc", self.ginv, dg)
        )

    @cached_property
    def riemann_up(self) -> J.Jet:
        """R^a_{bcd} as a jet of order ``order - 2``."""
        if self.order < 2:
            raise JetOrderError("curvature needs metric jets of order >= 2")
        gam = self.gamma
        dgam = gam.grad()  # dgam[a, b, c, e] = d_e Gamma^a_bc
        term1 = J.permute("adbc->abcd", dgam)  # d_c Gamma^a_db
        term2 = J.permute("acbd->abcd", dgam)  # d_d Gamma^a_cb
        quad1 = J.contract("ace,edb->abcd", gam, gam)
        quad2 = J.contract("ade,ecb->abcd", gam, gam)
        return term1 - term2 + quad1 - quad2

    @cached_property
    def riemann(self) -> J.Jet:
        """Fully covariant R_{abcd}."""
        return J.contract("ae,ebcd->abcd", self.g, self.riemann_up)

    @cached_property
    def ricci(self) -> J.Jet:
        return J.trace("abad->bd", self.riemann_up)

    def volume_form(self) -> np.ndarray:
        det = np.linalg.det(self.g.value)
        return np.sqrt(np.abs(det))[..., None, None, None, None] * _EPS

    @cached_property
    def riemann_dual(self) -> np.ndarray:
        """(*R)_{abcd} at the base points (values only)."""
        gi = self.ginv.value
        rm = self.riemann.value
        r_up = np.einsum("...mk,...nl,...klcd->...mncd", gi, gi, rm)
        return 0.5 * np.einsum("...abmn,...mncd->...abcd", self.volume_form(), r_up)

    # -- covariant operations on fields --------------------------------------
    def field(self, f: Callable):
        """Evaluate a user field on the coordinate jets."""
        return f(self.coords)

    def nabla_vector(self, v: J.Jet) -> J.Jet:
        """(D v)[b, c] = D_b v^c for a vector-valued jet ``v[..., c]``."""
        dv = v.grad()  # dv[c, b] = d_b v^c
        return J.permute("cb->bc", dv) + J.contract("cba,a->bc", self.gamma, v)

    def nabla_covector(self, w: J.Jet) -> J.Jet:
        """(D w)[a, b] = D_a w_b."""
        dw = w.grad()  # dw[b, a] = d_a w_b
        return J.permute("ba->ab", dw) - J.contract("cab,c->ab", self.gamma, w)

    def nabla_sym2(self, t: J.Jet) -> J.Jet:
        """(D t)[c, a, b] = D_c t_ab for a covariant 2-tensor."""
        dt = t.grad()  # dt[a, b, c] = d_c t_ab
        return (
            J.permute("abc->cab", dt)
            - J.contract("dca,db->cab", self.gamma, t)
            - J.contract("dcb,ad->cab", self.gamma, t)
        )

    def divergence(self, v: J.Jet) -> J.Jet:
        """D_a v^a."""
        dv = v.grad()
        return J.trace("aa->", dv) + J.contract("aab,b->", self.gamma, v)

    def lower(self, v):
        return J.contract("ab,b->a", self.g, v)

    def raise_index2(self, t):
        return J.contract("am,mn->an", self.ginv, J.contract("mb,nb->mn", t, self.ginv))


def christoffel(params: KerrParams, p) -> np.ndarray:
    """Gamma^a_{bc} at ``p`` (shape (4, 4, 4) or (N, 4, 4, 4))."""
    return Geometry(params, p, order=1).gamma.value


def riemann(params: KerrParams, p):
    """Return ``(R_{abcd}, (*R)_{abcd})`` at ``p``."""
    geo = Geometry(params, p, order=2)
    return geo.riemann.value, geo.riemann_dual


def kretschmann(params: KerrParams, p):
    geo = Geometry(params, p, order=2)
    gi = geo.ginv.value
    rm = geo.riemann.value
    up = np.einsum("...ai,...bj,...ck,...dl,...ijkl->...abcd", gi, gi, gi, gi, rm)
    return np.einsum("...abcd,...abcd->...", rm, up)


def curvature_scale(params: KerrParams, r):
    """m / r^3, the size of the Kerr curvature; 1 / r^2 in the flat limit."""
    r = np.asarray(r, dtype=float)
    if params.m == 0:
        return 1.0 / r**2
    return params.m / r**3


def orthonormal_frame(g: np.ndarray) -> np.ndarray:
    """Zero-angular-momentum orthonormal frame of a block-diagonal (t, phi) metric.

    Rows are e_t = (d_t + Omega d_phi)/alpha, d_r/sqrt(g_rr), d_th/sqrt(g_thth),
    d_phi/sqrt(g_phph) with Omega = -g_tph/g_phph and
    alpha^2 = g_tph^2/g_phph - g_tt.
    """
    g = np.asarray(g)
    gtt, gtp, gpp = g[..., 0, 0], g[..., 0, 3], g[..., 3, 3]
    omega = -gtp / gpp
    alpha = np.sqrt(gtp * gtp / gpp - gtt)
    e = np.zeros(g.shape)
    e[..., 0, 0] = 1.0 / alpha
    e[..., 0, 3] = omega / alpha
    e[..., 1, 1] = 1.0 / np.sqrt(g[..., 1, 1])
    e[..., 2, 2] = 1.0 / np.sqrt(g[..., 2, 2])
    e[..., 3, 3] = 1.0 / np.sqrt(gpp)
    return e


def ricci_residual(params: KerrParams, p):
    """max |R(e_a, e_b)| over an orthonormal frame, normalised by m/r^3 (per point).

    Orthonormal components keep the residual independent of the coordinate
    scale factors (g_thth ~ r^2 and so on).
    """
    geo = Geometry(params, p, order=2)
    e = orthonormal_frame(geo.g.value)
    ric = np.einsum("...ac,...bd,...cd->...ab", e, e, geo.ricci.value)
    return np.abs(ric).max(axis=(-1, -2)) / curvature_scale(params, geo.points[..., 1])


def bianchi_residual(params: KerrParams, p):
    """|D^a (R_ab - 1/2 R g_ab)| normalised by m/r^4."""
    geo = Geometry(params, p, order=3)
    ric = geo.ricci
    scal = J.contract("ab,ab->", geo.ginv, ric)
    ein = ric - 0.5 * J.contract(",ab->ab", scal, geo.g)
    dein = geo.nabla_sym2(ein)  # [c, a, b]
    div = J.contract("ca,cab->b", geo.ginv.truncate(dein.order), dein)
    r = geo.points[..., 1]
    return np.abs(div.value).max(axis=-1) / (curvature_scale(params, r) / r)


# -- Killing vector fields ---------------------------------------------------
def _vector_T(x):
    return [1.0, 0.0, 0.0, 0.0]


def _vector_Z(x):
    return [0.0, 0.0, 0.0, 1.0]


def _vector_R(x):
    return [0.0, 1.0, 0.0, 0.0]


VECTOR_FIELDS = {"T": _vector_T, "Z": _vector_Z, "R": _vector_R}


def _vector_jet(geo: Geometry, X) -> J.Jet:
    if isinstance(X, str):
        X = VECTOR_FIELDS[X]
    comps = X(geo.coords)
    batch = geo.points.shape[:-1]
    comps = [c if isinstance(c, J.Jet) else J.Jet.constant(np.broadcast_to(c, batch), geo.order) for c in comps]
    return J.stack(comps)


def killing_residual(params: KerrParams, X, p) -> np.ndarray:
    """(L_X g)_{ab} = D_a X_b + D_b X_a.

    ``X`` is ``"T"`` (d_t), ``"Z"`` (d_phi), ``"R"`` (d_r, not Killing) or a
    callable mapping coordinates to four contravariant components.
    """
    geo = Geometry(params, p, order=1)
    xv = _vector_jet(geo, X)
    dx = geo.nabla_covector(geo.lower(xv)).value
    return dx + np.swapaxes(dx, -1, -2)


def killing_scale(params: KerrParams, p):
    """max |g_ab| / r: natural size of first derivatives of the metric."""
    x = coords_array(p)
    g = metric_tensor(params, x)
    return np.abs(g).max(axis=(-1, -2)) / x[..., 1]


# -- wave operator -----------------------------------------------------------
def _scalar_jet(geo: Geometry, psi) -> J.Jet:
    val = psi(geo.coords)
    if not isinstance(val, J.Jet):
        batch = geo.points.shape[:-1]
        val = J.Jet.constant(np.broadcast_to(np.asarray(val, float), batch), geo.order)
    return val


def box_jet(geo: Geometry, u: J.Jet) -> J.Jet:
    """Wave operator of a scalar jet ``u``; result has order ``u.order - 2``."""
    if u.order < 2:
        raise JetOrderError("wave operator needs scalar jets of order >= 2")
    grad = J.contract("ab,b->a", geo.ginv, u.grad())
    return geo.divergence(grad)


def wave_operator_apply(params: KerrParams, psi: ScalarField, p, order: int = 2):
    """Box psi = D_a (g^{ab} d_b psi) at ``p``.

    ``psi`` maps a list of coordinate jets (t, r, theta, phi) to a jet; use
    the functions in :mod:`kerrcheck.jets` (``sin``, ``exp``, ...) inside it.
    """
    if order < 2:
        raise JetOrderError("wave operator needs at least two derivative orders")
    geo = Geometry(params, p, order=order)
    return box_jet(geo, _scalar_jet(geo, psi)).value


@dataclass(frozen=True)
class CurvatureAt:
    gamma: np.ndarray
    riem: np.ndarray
    ric: np.ndarray
    riem_dual: np.ndarray


def curvature_at(params: KerrParams, p) -> CurvatureAt:
    geo = Geometry(params, p, order=2)
    return CurvatureAt(
        gamma=geo.gamma.value,
        riem=geo.riemann.value,
        ric=geo.ricci.value,
        riem_dual=geo.riemann_dual,
    )


def riemann_symmetry_residual(riem: np.ndarray) -> np.ndarray:
    """Max violation of pair antisymmetry, pair exchange and first Bianchi,
    relative to max |R|."""
    scale = np.abs(riem).max(axis=(-1, -2, -3, -4))
    anti1 = riem + np.swapaxes(riem, -4, -3)
    anti2 = riem + np.swapaxes(riem, -2, -1)
    pair = riem - np.einsum("...cdab->...abcd", riem)
    bianchi = (
        riem
        + np.einsum("...acdb->...abcd", riem)
        + np.einsum("...adbc->...abcd", riem)
    )
    worst = np.stack(
        [np.abs(t).max(axis=(-1, -2, -3, -4)) for t in (anti1, anti2, pair, bianchi)]
    ).max(axis=0)
    return worst / np.where(scale > 0, scale, 1.0)
