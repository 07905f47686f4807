"""Horizontal-structure calculus: Ricci coefficients, null curvature
components, their complexified forms, the 1-form J and renormalisation.

Horizontal indices run over (e1, e2) with orientation eps_12 = +1.  The
horizontal dual is ``(*f)_a = eps_ab f_b`` for 1-forms and
``(*u)_ab = eps_ac u_cb`` for 2-tensors; complexification is ``F = f + i *f``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import jets as J
from .diffgeo import Geometry
from .frames import FrameField, NullFrame, principal_frame_field
from .kerr_metric import KerrParams, aux_scalars, coords_array

EPS2 = np.array([[0.0, 1.0], [-1.0, 0.0]])


# -- horizontal algebra ------------------------------------------------------
def dual1(f):
    """(*f)_a = eps_ab f_b for f of shape (..., 2)."""
    return np.einsum("ab,...b->...a", EPS2, f)


def dual2(u):
    """(*u)_ab = eps_ac u_cb for u of shape (..., 2, 2)."""
    return np.einsum("ac,...cb->...ab", EPS2, u)


def complexify1(f):
    return f + 1j * dual1(f)


def complexify2(u):
    return u + 1j * dual2(u)


def real_part1(F):
    """Inverse of :func:`complexify1` (the real 1-form)."""
    return np.real(F)


def decompose(u):
    """Split a 2x2 tensor into (tr, atr, hat) with
    u = tr/2 delta + atr/2 eps + hat, hat symmetric trace-free."""
    tr = u[..., 0, 0] + u[..., 1, 1]
    atr = u[..., 0, 1] - u[..., 1, 0]
    sym = 0.5 * (u + np.swapaxes(u, -1, -2))
    hat = sym - 0.5 * tr[..., None, None] * np.eye(2)
    return tr, atr, hat


def recompose(tr, atr, hat):
    return 0.5 * tr[..., None, None] * np.eye(2) + 0.5 * atr[..., None, None] * EPS2 + hat


# -- data types --------------------------------------------------------------
@dataclass
class RicciCoefficients:
    chi: np.ndarray
    chib: np.ndarray
    zeta: np.ndarray
    eta: np.ndarray
    etab: np.ndarray
    xi: np.ndarray
    xib: np.ndarray
    omega: np.ndarray
    omegab: np.ndarray
    trchi: np.ndarray = field(init=False)
    atrchi: np.ndarray = field(init=False)
    chihat: np.ndarray = field(init=False)
    trchib: np.ndarray = field(init=False)
    atrchib: np.ndarray = field(init=False)
    chibhat: np.ndarray = field(init=False)

    def __post_init__(self):
        self.trchi, self.atrchi, self.chihat = decompose(self.chi)
        self.trchib, self.atrchib, self.chibhat = decompose(self.chib)

    @property
    def X(self):
        return complexify2(self.chi)

    @property
    def Xb(self):
        return complexify2(self.chib)

    @property
    def trX(self):
        X = self.X
        return X[..., 0, 0] + X[..., 1, 1]

    @property
    def trXb(self):
        X = self.Xb
        return X[..., 0, 0] + X[..., 1, 1]

    @property
    def Xhat(self):
        return complexify2(self.chihat)

    @property
    def Xbhat(self):
        return complexify2(self.chibhat)

    @property
    def H(self):
        return complexify1(self.eta)

    @property
    def Hb(self):
        return complexify1(self.etab)

    @property
    def Z(self):
        return complexify1(self.zeta)


@dataclass
class CurvatureComponents:
    alpha: np.ndarray
    beta: np.ndarray
    rho: np.ndarray
    rho_dual: np.ndarray
    betab: np.ndarray
    alphab: np.ndarray

    @property
    def A(self):
        return complexify2(self.alpha)

    @property
    def B(self):
        return complexify1(self.beta)

    @property
    def P(self):
        return self.rho + 1j * self.rho_dual

    @property
    def Bb(self):
        return complexify1(self.betab)

    @property
    def Ab(self):
        return complexify2(self.alphab)


@dataclass
class HorizontalState:
    ricci: RicciCoefficients
    curvature: CurvatureComponents


# -- computations ------------------------------------------------------------
def _frame_derivatives(geo: Geometry, frame_field: FrameField):
    """Plain frame vectors and their covariant derivatives D_b e^c."""
    fr = frame_field(geo.coords)
    vecs = fr.vectors()  # e1, e2, e3, e4
    vals = [J.value(v) for v in vecs]
    nab = [geo.nabla_vector(v).value for v in vecs]
    return vals, nab


def ricci_coefficients(params: KerrParams, frame_field: FrameField | None, p) -> RicciCoefficients:
    """Connection coefficients of a frame field at ``p``.

    chi_ab = g(D_a e4, e_b), chib_ab = g(D_a e3, e_b), zeta_a = 1/2 g(D_a e4, e3),
    eta_a = 1/2 g(D_3 e4, e_a), etab_a = 1/2 g(D_4 e3, e_a),
    xi_a = 1/2 g(D_4 e4, e_a), xib_a = 1/2 g(D_3 e3, e_a),
    omega = 1/4 g(D_4 e4, e3), omegab = 1/4 g(D_3 e3, e4).
    """
    if frame_field is None:
        frame_field = principal_frame_field(params)
    geo = Geometry(params, p, order=1)
    (e1, e2, e3, e4), (n1, n2, n3, n4) = _frame_derivatives(geo, frame_field)
    g = geo.g.value

    def D(x, nab):
        return np.einsum("...b,...bc->...c", x, nab)

    def ip(u, v):
        return np.einsum("...ab,...a,...b->...", g, u, v)

    horiz = [e1, e2]
    chi = np.stack([np.stack([ip(D(ea, n4), eb) for eb in horiz], -1) for ea in horiz], -2)
    chib = np.stack([np.stack([ip(D(ea, n3), eb) for eb in horiz], -1) for ea in horiz], -2)
    zeta = np.stack([0.5 * ip(D(ea, n4), e3) for ea in horiz], -1)
    d3e4, d4e3 = D(e3, n4), D(e4, n3)
    d4e4, d3e3 = D(e4, n4), D(e3, n3)
    eta = np.stack([0.5 * ip(d3e4, ea) for ea in horiz], -1)
    etab = np.stack([0.5 * ip(d4e3, ea) for ea in horiz], -1)
    xi = np.stack([0.5 * ip(d4e4, ea) for ea in horiz], -1)
    xib = np.stack([0.5 * ip(d3e3, ea) for ea in horiz], -1)
    omega = 0.25 * ip(d4e4, e3)
    omegab = 0.25 * ip(d3e3, e4)
    return RicciCoefficients(chi, chib, zeta, eta, etab, xi, xib, omega, omegab)


def curvature_components(params: KerrParams, frame: NullFrame | FrameField | None, p) -> CurvatureComponents:
    """Null components of Riemann and its dual in ``frame`` at ``p``.

    alpha_ab = R_a4b4, beta_a = 1/2 R_a434, betab_a = 1/2 R_a334,
    alphab_ab = R_a3b3, rho = 1/4 R_3434, *rho = 1/4 *R_3434.
    """
    geo = Geometry(params, p, order=2)
    if frame is None:
        frame = principal_frame_field(params)
    if callable(frame):
        frame = frame(coords_array(p))
    fr = frame.value()
    e = {1: fr.e1, 2: fr.e2, 3: fr.e3, 4: fr.e4}
    rm = geo.riemann.value
    rd = geo.riemann_dual

    def R(t, i, j, k, l):
        return np.einsum("...abcd,...a,...b,...c,...d->...", t, e[i], e[j], e[k], e[l])

    alpha = np.stack([np.stack([R(rm, a, 4, b, 4) for b in (1, 2)], -1) for a in (1, 2)], -2)
    alphab = np.stack([np.stack([R(rm, a, 3, b, 3) for b in (1, 2)], -1) for a in (1, 2)], -2)
    beta = np.stack([0.5 * R(rm, a, 4, 3, 4) for a in (1, 2)], -1)
    betab = np.stack([0.5 * R(rm, a, 3, 3, 4) for a in (1, 2)], -1)
    rho = 0.25 * R(rm, 3, 4, 3, 4)
    rho_dual = 0.25 * R(rd, 3, 4, 3, 4)
    return CurvatureComponents(alpha, beta, rho, rho_dual, betab, alphab)


def horizontal_state(params: KerrParams, frame_field: FrameField | None, p) -> HorizontalState:
    return HorizontalState(
        ricci=ricci_coefficients(params, frame_field, p),
        curvature=curvature_components(params, frame_field, p),
    )


def jk_form(params: KerrParams, p) -> np.ndarray:
    """Complex 1-form J = (i sin(theta)/|q|, sin(theta)/|q|) in the (e1, e2) basis."""
    x = coords_array(p)
    r, th = x[..., 1], x[..., 2]
    qabs = np.sqrt(r * r + (params.a * np.cos(th)) ** 2)
    s = np.sin(th)
    return np.stack([1j * s / qabs, s / qabs + 0j], axis=-1)


# -- Kerr values and renormalisation -----------------------------------------
def kerr_values(a: float, m: float, r, theta, jk) -> dict:
    """Closed-form Kerr values of the non-vanishing complex quantities."""
    r, theta = np.asarray(r, dtype=float), np.asarray(theta, dtype=float)
    delta = r * r + a * a - 2 * m * r
    q = r + 1j * a * np.cos(theta)
    q2 = np.abs(q) ** 2
    fac = (a * q / q2)[..., None]
    return {
        "P": -2 * m / q**3,
        "trX": (2 / q) * delta / q2,
        "trXb": -2 / np.conj(q),
        "Z": fac * jk,
        "H": fac * jk,
        "Hb": -(a * np.conj(q) / q2)[..., None] * jk,
    }


def renormalize(rc: RicciCoefficients, cc: CurvatureComponents, params: KerrParams, r, theta, jk) -> dict:
    """Checked quantities: each input minus its Kerr value built from (a, m, r, theta, J)."""
    kv = kerr_values(params.a, params.m, r, theta, jk)
    return {
        "P": cc.P - kv["P"],
        "trX": rc.trX - kv["trX"],
        "trXb": rc.trXb - kv["trXb"],
        "Z": rc.Z - kv["Z"],
        "H": rc.H - kv["H"],
        "Hb": rc.Hb - kv["Hb"],
    }


def pg_transport_defect(params: KerrParams, frame_field: FrameField, p) -> np.ndarray:
    """Complex 1-form nabla_4(q J) for a frame field.

    (nabla_4 U)_a = e4(U_a) - sum_b g(D_4 e_a, e_b) U_b, with U = q J whose
    components are taken in the frame's own (e1, e2) basis.
    """
    geo = Geometry(params, p, order=1)
    (e1, e2, e3, e4), (n1, n2, _, _) = _frame_derivatives(geo, frame_field)
    g = geo.g.value
    x = geo.coords
    r, th = x[1], x[2]
    a = params.a
    s, c = J.sin(th), J.cos(th)
    qabs = J.sqrt(r * r + a * a * c * c)
    # U_1 = q i s/|q|, U_2 = q s/|q|, q = r + i a c
    u = [(-a * c * s / qabs, r * s / qabs), (r * s / qabs, a * c * s / qabs)]
    out = []
    conn = np.stack(
        [
            np.stack([np.einsum("...ab,...a,...b->...", g, np.einsum("...b,...bc->...c", e4, nab), eb) for eb in (e1, e2)], -1)
            for nab in (n1, n2)
        ],
        -2,
    )  # conn[a, b] = g(D_4 e_a, e_b)
    u_val = np.stack([u[k][0].value + 1j * u[k][1].value for k in range(2)], -1)
    for k in range(2):
        re = np.einsum("...m,...m->...", e4, u[k][0].grad().value)
        im = np.einsum("...m,...m->...", e4, u[k][1].grad().value)
        out.append(re + 1j * im - np.einsum("...b,...b->...", conn[..., k, :], u_val))
    return np.stack(out, -1)


# -- coordinate spheres --------------------------------------------------------
@dataclass(frozen=True)
class HorizontalTensor:
    """Horizontal tensor in the (e1, e2) basis with its complexified form."""

    rank: str  # "scalar", "1-form" or "2-tensor"
    components: np.ndarray

    @property
    def complexified(self):
        if self.rank == "1-form":
            return complexify1(self.components)
        if self.rank == "2-tensor":
            return complexify2(self.components)
        return self.components


def kerr_sphere_metric(params: KerrParams, r: float):
    """Induced metric (g_thth(theta), g_phph(theta)) of the sphere t, r = const."""
    a, m = params.a, params.m

    def g_thth(th):
        return r * r + (a * np.cos(th)) ** 2

    def g_phph(th):
        s2 = np.sin(th) ** 2
        sigma2 = (r * r + a * a) * g_thth(th) + 2 * m * r * a * a * s2
        return sigma2 * s2 / g_thth(th)

    return g_thth, g_phph


def sphere_quadrature(params: KerrParams, r: float, n_theta: int = 64, n_phi: int = 64):
    """Nodes (theta, phi) and area weights for the Kerr coordinate sphere.

    Gauss-Legendre in cos(theta) times the uniform trapezoid rule in phi;
    dA = Sigma sin(theta) dtheta dphi.
    """
    mu, w_mu = np.polynomial.legendre.leggauss(n_theta)
    th = np.arccos(mu)
    phi = 2 * np.pi * np.arange(n_phi) / n_phi
    g_thth, g_phph = kerr_sphere_metric(params, r)
    # sqrt(g_thth g_phph) / sin(theta) = Sigma, regular on the axis
    sigma = np.sqrt((r * r + params.a**2) * g_thth(th) + 2 * params.m * r * params.a**2 * np.sin(th) ** 2)
    weights = (w_mu * sigma)[:, None] * np.full(n_phi, 2 * np.pi / n_phi)[None, :]
    TH, PH = np.meshgrid(th, phi, indexing="ij")
    return TH, PH, weights


def ell1_modes(h, params: KerrParams, r: float, n_theta: int = 64, n_phi: int = 64):
    """(I0, I+, I-) = integrals of h J^(p) over the coordinate sphere S(r).

    J^(0) = cos(theta), J^(+) = sin(theta) cos(phi), J^(-) = sin(theta) sin(phi).
    ``h`` is a callable h(theta, phi) acting on arrays, or a constant.
    """
    th, ph, w = sphere_quadrature(params, r, n_theta, n_phi)
    hv = h(th, ph) if callable(h) else np.full_like(th, float(h))
    s = np.sin(th)
    modes = (np.cos(th), s * np.cos(ph), s * np.sin(ph))
    return tuple(float(np.sum(w * hv * j)) for j in modes)


class ShootingError(RuntimeError):
    pass


@dataclass
class IsothermalFit:
    """theta' reparametrisation and conformal factor of an axisymmetric sphere."""

    g_thth: object
    g_phph: object
    r: float
    log_k: float
    _nodes: np.ndarray = field(repr=False, default=None)
    _weights: np.ndarray = field(repr=False, default=None)

    def __post_init__(self):
        self._nodes, self._weights = np.polynomial.legendre.leggauss(48)

    def _integral(self, th):
        """int_{pi/2}^{theta} (sqrt(g_thth/g_phph) - 1/sin) dtheta, by Gauss-Legendre."""
        th = np.asarray(th, dtype=float)
        half = 0.5 * (th - np.pi / 2)
        s = np.pi / 2 + half[..., None] * (self._nodes + 1)
        f = np.sqrt(self.g_thth(s) / self.g_phph(s)) - 1.0 / np.sin(s)
        return half * np.sum(self._weights * f, axis=-1)

    def theta_prime(self, th):
        th = np.asarray(th, dtype=float)
        return 2 * np.arctan(np.exp(self.log_k + self._integral(th)) * np.tan(th / 2))

    def conformal_factor(self, th):
        """phi_conf with e^{2 phi_conf} = g_phph / (r^2 sin^2 theta')."""
        th = np.asarray(th, dtype=float)
        return 0.5 * np.log(self.g_phph(th) / (self.r * np.sin(self.theta_prime(th))) ** 2)

    def residual(self, th, h: float = 1e-3):
        """Relative mismatch of g_thth against e^{2 phi} r^2 (dtheta'/dtheta)^2.

        The derivative is a five-point finite difference of theta', so the
        check does not reuse the ODE that defines the fit.
        """
        th = np.asarray(th, dtype=float)
        tp = self.theta_prime
        d = (-tp(th + 2 * h) + 8 * tp(th + h) - 8 * tp(th - h) + tp(th - 2 * h)) / (12 * h)
        e2phi = np.exp(2 * self.conformal_factor(th))
        return np.abs(self.g_thth(th) - e2phi * self.r**2 * d * d) / self.g_thth(th)


def isothermal_fit(g_thth, g_phph, r: float, n_quad: int = 96, tol: float = 1e-14) -> IsothermalFit:
    """Effective isothermal coordinates for diag(g_thth, g_phph)(theta).

    theta' solves dtheta'/dtheta = sin(theta') sqrt(g_thth/g_phph) with
    theta'(0) = 0 and theta'(pi) = pi.  Every solution has that form up to
    the integration constant K (the slope at the pole), so K is fixed by
    bisection so that the J^(0) = cos(theta') mode has zero mean over the
    sphere.
    """
    mu, w = np.polynomial.legendre.leggauss(n_quad)
    th = np.arccos(mu)
    area = np.sqrt(g_thth(th) * g_phph(th)) / np.sin(th) * w

    def mode0(log_k):
        fit = IsothermalFit(g_thth, g_phph, r, log_k)
        return float(np.sum(area * np.cos(fit.theta_prime(th))))

    lo, hi = -1.0, 1.0
    for _ in range(60):
        if mode0(lo) > 0 > mode0(hi):
            break
        lo, hi = 2 * lo, 2 * hi
    else:
        raise ShootingError("could not bracket the integration constant")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        val = mode0(mid)
        if val > 0:
            lo = mid
        else:
            hi = mid
        if hi - lo < tol:
            break
    else:
        raise ShootingError("bisection did not converge")
    # exactly isothermal inputs give log K = 0 up to rounding
    return IsothermalFit(g_thth, g_phph, r, 0.5 * (lo + hi))
