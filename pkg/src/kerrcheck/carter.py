"""Carter Killing tensor and the second-order Carter operator.

C = -a^2 cos^2(theta) g + |q|^2 (e1 (x) e1 + e2 (x) e2) with covariant
(metric-dual) horizontal 1-forms, and Cop psi = D_a (C^{ab} d_b psi).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import jets as J
from .diffgeo import Geometry, _scalar_jet, box_jet
from .frames import _check_off_axis, principal_components
from .jets import JetOrderError
from .kerr_metric import KerrParams, coords_array


@dataclass(frozen=True)
class CarterTensorAt:
    C: np.ndarray
    C_inv_mixed: np.ndarray  # C^{ab}


def carter_tensor_jet(geo: Geometry) -> J.Jet:
    """C_ab as a jet of the same order as the metric."""
    a = geo.params.a
    x = geo.coords
    r, th = x[1], x[2]
    c = J.cos(th)
    q2 = r * r + a * a * c * c
    fr = principal_components(geo.params, x)
    e1 = geo.lower(fr.e1)
    e2 = geo.lower(fr.e2)
    horiz = J.contract("a,b->ab", e1, e1) + J.contract("a,b->ab", e2, e2)
    return J.contract(",ab->ab", q2, horiz) - J.contract(",ab->ab", a * a * c * c, geo.g)


def carter_tensor(params: KerrParams, p) -> CarterTensorAt:
    x = coords_array(p)
    _check_off_axis(x)
    geo = Geometry(params, x, order=0)
    C = carter_tensor_jet(geo).value
    gi = geo.ginv.value
    return CarterTensorAt(C=C, C_inv_mixed=np.einsum("...am,...bn,...mn->...ab", gi, gi, C))


def killing_tensor_residual(params: KerrParams, p, modify=None) -> np.ndarray:
    """max |D_(c C_ab)| normalised by max|C| / r.

    ``modify(geo, C)`` may return an altered tensor jet (used for controls).
    """
    x = coords_array(p)
    _check_off_axis(x)
    geo = Geometry(params, x, order=1)
    C = carter_tensor_jet(geo)
    if modify is not None:
        C = modify(geo, C)
    dC = geo.nabla_sym2(C).value  # [c, a, b]
    sym = (
        dC
        + np.einsum("...cab->...abc", dC)
        + np.einsum("...cab->...bca", dC)
    ) / 3.0
    scale = np.abs(C.value).max(axis=(-1, -2)) / geo.points[..., 1]
    return np.abs(sym).max(axis=(-1, -2, -3)) / scale


def carter_jet(geo: Geometry, u: J.Jet) -> J.Jet:
    """Cop u for a scalar jet; the result has order ``u.order - 2``."""
    if u.order < 2:
        raise JetOrderError("the Carter operator needs scalar jets of order >= 2")
    C = carter_tensor_jet(geo)
    gi = geo.ginv
    c_up = J.contract("am,mb->ab", gi, J.contract("mn,nb->mb", C, gi))
    return geo.divergence(J.contract("ab,b->a", c_up, u.grad()))


def carter_operator_apply(params: KerrParams, psi, p, order: int = 2):
    """Cop psi at ``p``; ``psi`` maps coordinate jets to a scalar jet."""
    if order < 2:
        raise JetOrderError("the Carter operator needs at least two derivative orders")
    x = coords_array(p)
    _check_off_axis(x)
    geo = Geometry(params, x, order=order)
    return carter_jet(geo, _scalar_jet(geo, psi)).value


def commutator_terms(params: KerrParams, psi, p):
    """(Cop Box psi, Box Cop psi) from order-4 jets."""
    x = coords_array(p)
    _check_off_axis(x)
    geo = Geometry(params, x, order=4)
    u = _scalar_jet(geo, psi)
    if u.order < 4:
        raise JetOrderError("the commutator needs four derivative orders")
    return carter_jet(geo, box_jet(geo, u)).value, box_jet(geo, carter_jet(geo, u)).value


def commutator_residual(params: KerrParams, psi, p) -> np.ndarray:
    """|(Cop Box - Box Cop) psi| over the larger of the two terms."""
    cb, bc = commutator_terms(params, psi, p)
    scale = np.maximum(np.abs(cb), np.abs(bc))
    return np.abs(cb - bc) / np.where(scale > 0, scale, 1.0)


# -- analytic test fields ----------------------------------------------------
def _gauss_r_cos_t(x):
    t, r, th, ph = x
    return J.exp(-((r - 4.0) ** 2)) * J.cos(th) * J.cos(t)


def _poly_sin_cos(x):
    t, r, th, ph = x
    return r**3 * J.sin(th) * J.cos(ph)


def _decay_sin2_2phi(x):
    t, r, th, ph = x
    return J.exp(-r / 3.0) * J.sin(th) ** 2 * J.sin(2.0 * ph)


def _wave_packet(x):
    t, r, th, ph = x
    return J.cos(0.3 * t) * J.exp(-((r - 5.0) ** 2) / 4.0) * J.cos(th) * J.sin(th) * J.cos(ph)


def _inverse_r(x):
    t, r, th, ph = x
    return J.cos(th) ** 3 / r + t * r * J.cos(th) ** 2


def _mixed(x):
    t, r, th, ph = x
    return J.sin(0.5 * t + ph) * J.exp(-0.1 * r * r) * (1.0 + J.cos(th) ** 2)


TEST_FIELDS = {
    "gauss_r_cos_t": _gauss_r_cos_t,
    "poly_sin_cos": _poly_sin_cos,
    "decay_sin2_2phi": _decay_sin2_2phi,
    "wave_packet": _wave_packet,
    "inverse_r": _inverse_r,
    "mixed": _mixed,
}
