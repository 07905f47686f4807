"""Truncated multivariate Taylor polynomials ("jets") for forward-mode AD.

A :class:`Jet` of order ``K`` in ``n`` variables stores the Taylor
coefficients ``c_alpha = d^alpha f / alpha!`` of a function around a base
point for every multi-index with ``|alpha| <= K``.  Arithmetic and the
elementary functions propagate these coefficients exactly (up to rounding),
so derivatives of the Kerr metric, frames and test fields come out free of
truncation error.

Coefficient arrays carry arbitrary leading axes: the first axes are batch
(sample points), followed by tensor axes, with the monomial axis last.
"""

from __future__ import annotations

import itertools
import math
from functools import lru_cache

import numpy as np

__all__ = [
    "Jet",
    "JetOrderError",
    "seed",
    "sin",
    "cos",
    "exp",
    "log",
    "sqrt",
    "power",
    "contract",
    "stack",
    "inv_matrix",
    "value",
    "permute",
    "trace",
]


class JetOrderError(ValueError):
    """Raised when a computation needs more derivative orders than supplied."""


class _Basis:
    """Monomial bookkeeping for a fixed (nvar, order)."""

    def __init__(self, nvar: int, order: int):
        self.nvar = nvar
        self.order = order
        monos = [
            alpha
            for deg in range(order + 1)
            for alpha in sorted(
                (a for a in itertools.product(range(deg + 1), repeat=nvar) if sum(a) == deg),
                reverse=True,
            )
        ]
        self.monos = np.array(monos, dtype=int).reshape(len(monos), nvar)
        self.size = len(monos)
        self.index = {m: i for i, m in enumerate(monos)}
        self.degree = self.monos.sum(axis=1)
        self.factorial = np.array(
            [math.prod(math.factorial(k) for k in m) for m in monos], dtype=float
        )

        pi, pj, pk = [], [], []
        for i, a in enumerate(monos):
            for j, b in enumerate(monos):
                c = tuple(x + y for x, y in zip(a, b))
                k = self.index.get(c)
                if k is not None:
                    pi.append(i)
                    pj.append(j)
                    pk.append(k)
        self.pair_i = np.array(pi)
        self.pair_j = np.array(pj)
        reduce = np.zeros((len(pk), self.size))
        reduce[np.arange(len(pk)), pk] = 1.0
        self.reduce = reduce

    @lru_cache(maxsize=None)
    def deriv_map(self, var: int):
        # d/dx_var maps order K -> K-1
        low = basis(self.nvar, self.order - 1)
        dst, src, fac = [], [], []
        for k, mono in enumerate(low.monos):
            up = list(mono)
            up[var] += 1
            dst.append(k)
            src.append(self.index[tuple(up)])
            fac.append(float(up[var]))
        return np.array(src), np.array(fac)

    @lru_cache(maxsize=None)
    def truncate_map(self, order: int):
        low = basis(self.nvar, order)
        return np.array([self.index[tuple(m)] for m in low.monos])


@lru_cache(maxsize=None)
def basis(nvar: int, order: int) -> _Basis:
    return _Basis(nvar, order)


class Jet:
    """Array of truncated Taylor expansions sharing one monomial basis."""

    __array_priority__ = 1000

    def __init__(self, coef, order: int, nvar: int = 4):
        self.coef = np.asarray(coef, dtype=float)
        self.order = order
        self.nvar = nvar
        self.basis = basis(nvar, order)
        if self.coef.shape[-1] != self.basis.size:
            raise ValueError("coefficient axis does not match the monomial basis")

    # -- construction helpers -------------------------------------------------
    @classmethod
    def constant(cls, val, order: int, nvar: int = 4) -> "Jet":
        val = np.asarray(val, dtype=float)
        coef = np.zeros(val.shape + (basis(nvar, order).size,))
        coef[..., 0] = val
        return cls(coef, order, nvar)

    def _lift(self, other):
        if isinstance(other, Jet):
            return other
        return Jet.constant(other, self.order, self.nvar)

    def _align(self, other: "Jet"):
        k = min(self.order, other.order)
        return self.truncate(k), other.truncate(k)

    # -- views ----------------------------------------------------------------
    @property
    def shape(self):
        return self.coef.shape[:-1]

    @property
    def ndim(self):
        return self.coef.ndim - 1

    @property
    def value(self) -> np.ndarray:
        return self.coef[..., 0]

    def __getitem__(self, key) -> "Jet":
        if not isinstance(key, tuple):
            key = (key,)
        if any(k is Ellipsis for k in key):
            key = key + (slice(None),)
        else:
            key = key + (Ellipsis, slice(None))
        return Jet(self.coef[key], self.order, self.nvar)

    def __len__(self):
        return self.shape[0]

    def __repr__(self):
        return f"Jet(order={self.order}, shape={self.shape})"

    def truncate(self, order: int) -> "Jet":
        if order == self.order:
            return self
        if order > self.order:
            raise JetOrderError(f"cannot raise jet order {self.order} to {order}")
        idx = self.basis.truncate_map(order)
        return Jet(self.coef[..., idx], order, self.nvar)

    def diff(self, var: int) -> "Jet":
        """Partial derivative along coordinate ``var``; lowers the order by one."""
        if self.order < 1:
            raise JetOrderError("derivative of an order-0 jet")
        src, fac = self.basis.deriv_map(var)
        return Jet(self.coef[..., src] * fac, self.order - 1, self.nvar)

    def grad(self) -> "Jet":
        """Stack of all first partials; new axis appended before the monomials."""
        parts = [self.diff(v).coef for v in range(self.nvar)]
        return Jet(np.stack(parts, axis=-2), self.order - 1, self.nvar)

    def partial(self, alpha) -> np.ndarray:
        """Value of the mixed partial derivative with multi-index ``alpha``."""
        alpha = tuple(alpha)
        if sum(alpha) > self.order:
            raise JetOrderError(f"derivative {alpha} exceeds jet order {self.order}")
        i = self.basis.index[alpha]
        return self.coef[..., i] * self.basis.factorial[i]

    def reshape(self, *shape) -> "Jet":
        return Jet(self.coef.reshape(*shape, self.basis.size), self.order, self.nvar)

    def sum(self, axis) -> "Jet":
        axes = (axis,) if isinstance(axis, int) else tuple(axis)
        axes = tuple(a - 1 if a < 0 else a for a in axes)
        return Jet(self.coef.sum(axis=axes), self.order, self.nvar)

    def swapaxes(self, i, j) -> "Jet":
        i = i - 1 if i < 0 else i
        j = j - 1 if j < 0 else j
        return Jet(np.swapaxes(self.coef, i, j), self.order, self.nvar)

    def expand_dims(self, axis) -> "Jet":
        axis = axis - 1 if axis < 0 else axis
        return Jet(np.expand_dims(self.coef, axis), self.order, self.nvar)

    # -- arithmetic -----------------------------------------------------------
    def __neg__(self):
        return Jet(-self.coef, self.order, self.nvar)

    def __add__(self, other):
        if isinstance(other, Jet):
            a, b = self._align(other)
            return Jet(a.coef + b.coef, a.order, a.nvar)
        other = np.asarray(other, dtype=float)
        shape = np.broadcast_shapes(self.shape, other.shape)
        coef = np.broadcast_to(self.coef, shape + (self.basis.size,)).copy()
        coef[..., 0] += other
        return Jet(coef, self.order, self.nvar)

    __radd__ = __add__

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, Jet):
            a, b = self._align(other)
            bs = a.basis
            prod = a.coef[..., bs.pair_i] * b.coef[..., bs.pair_j]
            return Jet(prod @ bs.reduce, a.order, a.nvar)
        other = np.asarray(other, dtype=float)
        return Jet(self.coef * other[..., None], self.order, self.nvar)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Jet):
            return self * power(other, -1)
        other = np.asarray(other, dtype=float)
        return Jet(self.coef / other[..., None], self.order, self.nvar)

    def __rtruediv__(self, other):
        return power(self, -1) * other

    def __pow__(self, p):
        if isinstance(p, int) and p >= 0:
            out = Jet.constant(np.ones(self.shape), self.order, self.nvar)
            base = self
            while p:
                if p & 1:
                    out = out * base
                base = base * base
                p >>= 1
            return out
        return power(self, p)


def _is_jet(x) -> bool:
    return isinstance(x, Jet)


def value(x):
    """Base-point value of a jet, or ``x`` itself for plain numbers/arrays."""
    return x.value if _is_jet(x) else x


def _compose(x: Jet, taylor):
    """Evaluate ``sum_k taylor[k] * h**k`` where ``h = x - x(0)``.

    ``taylor[k]`` holds ``f^(k)(x0)/k!`` evaluated at the base values.
    """
    h = Jet(x.coef.copy(), x.order, x.nvar)
    h.coef[..., 0] = 0.0
    out = Jet.constant(taylor[x.order], x.order, x.nvar)
    for k in range(x.order - 1, -1, -1):
        out = out * h + taylor[k]
    return out


def sin(x):
    if not _is_jet(x):
        return np.sin(x)
    c0 = x.value
    cycle = [np.sin(c0), np.cos(c0), -np.sin(c0), -np.cos(c0)]
    return _compose(x, [cycle[k % 4] / math.factorial(k) for k in range(x.order + 1)])


def cos(x):
    if not _is_jet(x):
        return np.cos(x)
    c0 = x.value
    cycle = [np.cos(c0), -np.sin(c0), -np.cos(c0), np.sin(c0)]
    return _compose(x, [cycle[k % 4] / math.factorial(k) for k in range(x.order + 1)])


def exp(x):
    if not _is_jet(x):
        return np.exp(x)
    e = np.exp(x.value)
    return _compose(x, [e / math.factorial(k) for k in range(x.order + 1)])


def log(x):
    if not _is_jet(x):
        return np.log(x)
    c0 = x.value
    taylor = [np.log(c0)]
    for k in range(1, x.order + 1):
        taylor.append((-1.0) ** (k + 1) / (k * c0**k))
    return _compose(x, taylor)


def power(x, p: float):
    if not _is_jet(x):
        return np.power(x, p)
    c0 = x.value
    taylor = []
    coeff = 1.0
    for k in range(x.order + 1):
        taylor.append(coeff * c0 ** (p - k))
        coeff *= (p - k) / (k + 1)
    return _compose(x, taylor)


def sqrt(x):
    if not _is_jet(x):
        return np.sqrt(x)
    return power(x, 0.5)


def seed(points, order: int):
    """Coordinate jets ``x^mu = p^mu + h^mu`` for points of shape (..., nvar)."""
    points = np.asarray(points, dtype=float)
    nvar = points.shape[-1]
    b = basis(nvar, order)
    out = []
    for mu in range(nvar):
        coef = np.zeros(points.shape[:-1] + (b.size,))
        coef[..., 0] = points[..., mu]
        if order >= 1:
            unit = [0] * nvar
            unit[mu] = 1
            coef[..., b.index[tuple(unit)]] = 1.0
        out.append(Jet(coef, order, nvar))
    return out


def stack(items):
    """Stack a (possibly nested) list of jets/numbers into one tensor.

    Nested lists become new tensor axes placed after the batch axes, so
    ``stack([[a, b], [c, d]])`` has shape ``batch + (2, 2)``.  Plain numbers
    (typically 0) broadcast against the other leaves.  Returns a Jet if any
    leaf is a Jet, else an ndarray.
    """
    leaves = []

    def walk(obj):
        if isinstance(obj, (list, tuple)):
            for o in obj:
                walk(o)
        else:
            leaves.append(obj)

    walk(items)
    jets = [x for x in leaves if _is_jet(x)]
    batch = np.broadcast_shapes(*[x.shape if _is_jet(x) else np.shape(x) for x in leaves])

    nb = len(batch)
    if not jets:
        def build_plain(obj):
            if isinstance(obj, (list, tuple)):
                return np.stack([build_plain(o) for o in obj], axis=nb)
            return np.broadcast_to(np.asarray(obj, dtype=float), batch)

        return build_plain(items)

    k = min(j.order for j in jets)
    nvar = jets[0].nvar
    size = basis(nvar, k).size

    def build(obj):
        if isinstance(obj, (list, tuple)):
            return np.stack([build(o) for o in obj], axis=nb)
        if _is_jet(obj):
            return np.broadcast_to(obj.truncate(k).coef, batch + (size,))
        return Jet.constant(np.broadcast_to(np.asarray(obj, float), batch), k, nvar).coef

    return Jet(build(items), k, nvar)


def contract(subscripts: str, x, y):
    """``np.einsum`` for two operands, either of which may be a :class:`Jet`.

    ``subscripts`` names only tensor axes; leading batch axes are implicit
    and must broadcast, e.g. ``contract("ab,bc->ac", g, h)``.
    """
    lhs, out = subscripts.split("->")
    sx, sy = lhs.split(",")
    if not _is_jet(x) and not _is_jet(y):
        return np.einsum(f"...{sx},...{sy}->...{out}", x, y)
    if _is_jet(x) and _is_jet(y):
        x, y = x._align(y)
        b = x.basis
        xa = x.coef[..., b.pair_i]
        ya = y.coef[..., b.pair_j]
        prod = np.einsum(f"...{sx}Z,...{sy}Z->...{out}Z", xa, ya)
        return Jet(prod @ b.reduce, x.order, x.nvar)
    if _is_jet(x):
        res = np.einsum(f"...{sx}Z,...{sy}->...{out}Z", x.coef, y)
        return Jet(res, x.order, x.nvar)
    res = np.einsum(f"...{sx},...{sy}Z->...{out}Z", x, y.coef)
    return Jet(res, y.order, y.nvar)


def inv_matrix(g):
    """Inverse of a matrix-valued jet (last two tensor axes).

    Exact to the jet order: with ``g = g0 + n`` and ``n`` nilpotent,
    ``g^-1 = sum_k (-g0^-1 n)^k g0^-1`` terminates after ``order`` terms.
    """
    if not _is_jet(g):
        return np.linalg.inv(g)
    g0inv = np.linalg.inv(g.value)
    n = Jet(g.coef.copy(), g.order, g.nvar)
    n.coef[..., 0] = 0.0
    x = -contract("ab,bc->ac", g0inv, n)
    eye = np.broadcast_to(np.eye(g.shape[-1]), g.shape)
    s = Jet.constant(eye, g.order, g.nvar)
    for _ in range(g.order):
        s = contract("ab,bc->ac", x, s) + eye
    return contract("ab,bc->ac", s, g0inv)


def permute(subscripts: str, x):
    """Relabel/transposes tensor axes, e.g. ``permute("abc->cab", t)``."""
    src, dst = subscripts.split("->")
    if _is_jet(x):
        return Jet(np.einsum(f"...{src}Z->...{dst}Z", x.coef), x.order, x.nvar)
    return np.einsum(f"...{src}->...{dst}", x)


def trace(subscripts: str, x):
    """Single-operand contraction such as ``trace("aab->b", gamma)``."""
    src, dst = subscripts.split("->")
    if _is_jet(x):
        return Jet(np.einsum(f"...{src}Z->...{dst}Z", x.coef), x.order, x.nvar)
    return np.einsum(f"...{src}->...{dst}", x)
