"""1+1 Regge-Wheeler evolution on Schwarzschild in the tortoise coordinate.

The master equation Box_m phi = V phi, V = 4/r^2 (1 - 2m/r), reduces under
phi = psi(t, r) Y_l(theta, phi) / r to

    psi_tt - psi_{r* r*} + W psi = 0,
    W = f (l(l+1)/r^2 + 2m/r^3 + 4 f/r^2),  f = 1 - 2m/r.

Space is discretised with the summation-by-parts second difference on a
uniform r* grid (trapezoid mass matrix, Neumann closure) and time with a
staggered leapfrog.  ``FieldState.pi`` lives half a step ahead of ``psi``;
with this staggering the discrete energy of :func:`energy` is conserved to
rounding for reflecting walls and never increases for outgoing walls.
"""

from __future__ import annotations

import io
from functools import lru_cache
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from . import jets as J
from .diffgeo import Geometry, box_jet
from .kerr_metric import KerrParams

CFL_MAX = 0.9
BOUNDARY_CONDITIONS = ("reflecting", "outgoing")
CSV_COLUMNS = ("t", "E_total", "E_local", "M_degenerate", "psi_at_robs")


class CFLError(ValueError):
    pass


class NewtonError(RuntimeError):
    pass


# -- tortoise coordinate -----------------------------------------------------
def tortoise(r, m: float):
    """r* = r + 2m ln(r/(2m) - 1)."""
    r = np.asarray(r, dtype=float)
    if m == 0:
        return r.copy()
    if np.any(r <= 2 * m):
        raise ValueError("tortoise coordinate needs r > 2m")
    return r + 2 * m * np.log(r / (2 * m) - 1)


def inverse_tortoise(rstar, m: float, tol: float = 1e-15, max_iter: int = 100):
    """Invert :func:`tortoise` by bracketed Newton.

    With x = r/2m - 1 = e^u the equation becomes e^u + u = r*/2m - 1,
    which is monotone in u, so a bracket keeps Newton safe.
    """
    rstar = np.asarray(rstar, dtype=float)
    if m == 0:
        return rstar.copy()
    y = rstar / (2 * m) - 1
    lo = np.where(y < 1, y - np.exp(np.minimum(y, 1.0)), 0.0)
    hi = np.where(y < 1, y, np.log(np.maximum(y, 1.0)))
    u = 0.5 * (lo + hi)
    for _ in range(max_iter):
        g = np.exp(u) + u - y
        lo = np.where(g < 0, u, lo)
        hi = np.where(g > 0, u, hi)
        step = g / (np.exp(u) + 1)
        u_new = u - step
        outside = (u_new <= lo) | (u_new >= hi)
        u_new = np.where(outside, 0.5 * (lo + hi), u_new)
        done = np.abs(u_new - u) <= tol * np.maximum(1.0, np.abs(u))
        u = u_new
        if np.all(done):
            return 2 * m * (1 + np.exp(u))
    raise NewtonError("inverse tortoise map did not converge")


# -- grid, potential, state --------------------------------------------------
@dataclass(frozen=True)
class Grid1D:
    rstar_min: float
    rstar_max: float
    n_points: int
    dt: float

    def __post_init__(self):
        if self.n_points < 16:
            raise ValueError("n_points must be at least 16")
        if not self.rstar_max > self.rstar_min:
            raise ValueError("empty r* interval")
        if not 0 < self.dt <= CFL_MAX * self.dx * (1 + 1e-12):
            raise CFLError(f"dt={self.dt} violates dt <= {CFL_MAX} * dr* = {CFL_MAX * self.dx}")

    @classmethod
    def with_cfl(cls, rstar_min, rstar_max, n_points, cfl=0.5) -> "Grid1D":
        dx = (rstar_max - rstar_min) / (n_points - 1)
        return cls(rstar_min, rstar_max, n_points, cfl * dx)

    @property
    def dx(self) -> float:
        return (self.rstar_max - self.rstar_min) / (self.n_points - 1)

    @property
    def rstar(self) -> np.ndarray:
        return np.linspace(self.rstar_min, self.rstar_max, self.n_points)

    @property
    def mass_weights(self) -> np.ndarray:
        w = np.full(self.n_points, self.dx)
        w[0] = w[-1] = 0.5 * self.dx
        return w

    def r(self, m: float) -> np.ndarray:
        return _radius(self, float(m))


@lru_cache(maxsize=32)
def _radius(grid: Grid1D, m: float) -> np.ndarray:
    r = inverse_tortoise(grid.rstar, m)
    r.setflags(write=False)
    return r


@dataclass(frozen=True)
class EffectivePotential:
    W: np.ndarray
    ell: int
    m: float


@dataclass(frozen=True)
class FieldState:
    """psi at time t and pi = d_t psi at t + dt/2."""

    psi: np.ndarray
    pi: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        if np.shape(self.psi) != np.shape(self.pi):
            raise ValueError("psi and pi must have equal length")


def rw_potential_r(ell: int, m: float, r):
    r = np.asarray(r, dtype=float)
    f = 1 - 2 * m / r
    return f * (ell * (ell + 1) / r**2 + 2 * m / r**3 + 4 * f / r**2)


def rw_potential(ell: int, m: float, grid: Grid1D) -> EffectivePotential:
    if ell < 0:
        raise ValueError("ell must be non-negative")
    return EffectivePotential(W=rw_potential_r(ell, m, grid.r(m)), ell=ell, m=m)


def zero_potential(grid: Grid1D) -> EffectivePotential:
    return EffectivePotential(W=np.zeros(grid.n_points), ell=0, m=0.0)


# -- discrete operator ---------------------------------------------------------
def second_difference(q: np.ndarray, dx: float) -> np.ndarray:
    """SBP second derivative with Neumann closure."""
    out = np.empty_like(q)
    out[1:-1] = q[2:] - 2 * q[1:-1] + q[:-2]
    out[0] = 2 * (q[1] - q[0])
    out[-1] = 2 * (q[-2] - q[-1])
    return out / (dx * dx)


def apply_operator(q: np.ndarray, pot: EffectivePotential, grid: Grid1D) -> np.ndarray:
    """A q = -D2 q + W q."""
    return -second_difference(q, grid.dx) + pot.W * q


def _damping(grid: Grid1D, bc: str) -> np.ndarray:
    if bc not in BOUNDARY_CONDITIONS:
        raise ValueError(f"unknown boundary condition {bc!r}")
    b = np.zeros(grid.n_points)
    if bc == "outgoing":
        b[0] = b[-1] = 2.0 / grid.dx
    return b


def initial_state(grid: Grid1D, pot: EffectivePotential, psi0, pi0=None, bc: str = "reflecting") -> FieldState:
    """Start the staggered scheme from psi(0), pi(0) with a half-step Taylor update."""
    psi0 = np.asarray(psi0, dtype=float)
    pi0 = np.zeros_like(psi0) if pi0 is None else np.asarray(pi0, dtype=float)
    b = _damping(grid, bc)
    half = pi0 - 0.5 * grid.dt * (apply_operator(psi0, pot, grid) + b * pi0)
    return FieldState(psi=psi0.copy(), pi=half, t=0.0)


def step(state: FieldState, pot: EffectivePotential, grid: Grid1D, bc: str = "reflecting") -> FieldState:
    """Advance one time step.

    psi^{n+1} = psi^n + h pi^{n+1/2}, then
    pi^{n+3/2} (1 + h B/2) = pi^{n+1/2} (1 - h B/2) - h A psi^{n+1}.
    Outgoing walls enter through the boundary damping B = 2/dr*, which is the
    summation-by-parts form of (d_t -/+ d_r*) psi = 0.
    """
    if grid.dt > CFL_MAX * grid.dx * (1 + 1e-12):
        raise CFLError("time step violates the CFL bound")
    h = grid.dt
    b = _damping(grid, bc)
    psi = state.psi + h * state.pi
    pi = (state.pi * (1 - 0.5 * h * b) - h * apply_operator(psi, pot, grid)) / (1 + 0.5 * h * b)
    return FieldState(psi=psi, pi=pi, t=state.t + h)


def _half_back(state: FieldState, pot, grid, bc):
    """pi at the integer level t: average of the two neighbouring half steps."""
    h = grid.dt
    b = _damping(grid, bc)
    # invert the update that produced state.pi from pi^{n-1/2}
    prev = (state.pi * (1 + 0.5 * h * b) + h * apply_operator(state.psi, pot, grid)) / (1 - 0.5 * h * b)
    return 0.5 * (prev + state.pi)


# -- diagnostics ---------------------------------------------------------------
def energy(state: FieldState, pot: EffectivePotential, grid: Grid1D) -> float:
    """Discrete energy 1/2 |pi|^2_M + 1/2 <psi, A (psi + dt pi)>_M.

    It is the trapezoid energy 1/2 sum (pi^2 + (d psi)^2 + W psi^2) dr*
    up to O(dt) terms from the staggering, and is the quantity the scheme
    conserves exactly.
    """
    w = grid.mass_weights
    nxt = state.psi + grid.dt * state.pi
    kin = 0.5 * np.sum(w * state.pi**2)
    pot_term = 0.5 * np.sum(w * state.psi * apply_operator(nxt, pot, grid))
    return float(kin + pot_term)


def energy_density(state: FieldState, pot: EffectivePotential, grid: Grid1D, bc: str = "reflecting") -> np.ndarray:
    """1/2 (pi^2 + (d_r* psi)^2 + W psi^2) at the integer time level."""
    pi = _half_back(state, pot, grid, bc)
    d = np.gradient(state.psi, grid.dx)
    return 0.5 * (pi**2 + d**2 + pot.W * state.psi**2)


def local_energy(state, pot, grid, m: float, r_range=(2.5, 5.0), bc: str = "reflecting") -> float:
    """Energy in r in [r_range[0] m, r_range[1] m] (units of m; plain r if m = 0)."""
    scale = m if m > 0 else 1.0
    r = grid.r(m)
    mask = (r >= r_range[0] * scale) & (r <= r_range[1] * scale)
    dens = energy_density(state, pot, grid, bc)
    return float(np.sum((grid.mass_weights * dens)[mask]))


def morawetz_weight(r, m: float):
    return (1 - 3 * m / np.asarray(r, dtype=float)) ** 2


def morawetz_bulk(state: FieldState, grid: Grid1D, m: float, degenerate: bool = True) -> float:
    """sum w(r) ((d_r* psi)^2 + psi^2/r^2) dr* with w = (1 - 3m/r)^2, or w = 1.

    Nodes with r <= 0 (possible on flat grids) are left out.
    """
    r = grid.r(m)
    ok = r > 0
    rs = np.where(ok, r, 1.0)
    w = morawetz_weight(rs, m) if degenerate else np.ones_like(r)
    d = np.gradient(state.psi, grid.dx)
    return float(np.sum((grid.mass_weights * w * (d**2 + state.psi**2 / rs**2))[ok]))


# -- runs ----------------------------------------------------------------------
def gaussian_data(grid: Grid1D, center: float, width: float, amplitude: float = 1.0):
    """Time-symmetric Gaussian in r* (pi = 0)."""
    x = grid.rstar
    return amplitude * np.exp(-(((x - center) / width) ** 2)), np.zeros_like(x)


@dataclass
class RunHistory:
    m: float
    ell: int
    bc: str
    r_obs: float
    rows: list = field(default_factory=list)
    final: FieldState | None = None

    def column(self, name: str) -> np.ndarray:
        k = CSV_COLUMNS.index(name)
        return np.array([row[k] for row in self.rows])

    def to_csv(self, footer: dict | None = None) -> str:
        buf = io.StringIO()
        buf.write(",".join(CSV_COLUMNS) + "\n")
        for row in self.rows:
            buf.write(",".join(format(float(v), ".17g") for v in row) + "\n")
        for key, val in (footer or {}).items():
            buf.write(f"# {key}={format(val, '.17g') if isinstance(val, float) else val}\n")
        return buf.getvalue()


def run(
    grid: Grid1D,
    pot: EffectivePotential,
    psi0,
    pi0=None,
    t_end: float = 100.0,
    bc: str = "reflecting",
    r_obs: float | None = None,
    record_every: int = 1,
    r_range=(2.5, 5.0),
) -> RunHistory:
    """Evolve to ``t_end`` and record one CSV row every ``record_every`` steps."""
    m = pot.m
    state = initial_state(grid, pot, psi0, pi0, bc)
    r = grid.r(m)
    if r_obs is None:
        r_obs = float(r[grid.n_points // 2])
    i_obs = int(np.argmin(np.abs(r - r_obs)))
    hist = RunHistory(m=m, ell=pot.ell, bc=bc, r_obs=float(r[i_obs]))
    n_steps = int(round(t_end / grid.dt))

    def record(s):
        hist.rows.append(
            (
                s.t,
                energy(s, pot, grid),
                local_energy(s, pot, grid, m, r_range, bc),
                morawetz_bulk(s, grid, m),
                s.psi[i_obs],
            )
        )

    record(state)
    for n in range(1, n_steps + 1):
        state = step(state, pot, grid, bc)
        if n % record_every == 0 or n == n_steps:
            record(state)
    hist.final = state
    return hist


def energy_drift(hist: RunHistory) -> float:
    e = hist.column("E_total")
    if e[0] == 0:
        return float(np.max(np.abs(e)))
    return float(np.max(np.abs(e - e[0])) / abs(e[0]))


@dataclass(frozen=True)
class DecayReport:
    t: np.ndarray
    e_local: np.ndarray
    m_degenerate: np.ndarray
    slope: float
    slope_ci: tuple
    drop_orders: float

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("t,E_local,M_degenerate\n")
        for row in zip(self.t, self.e_local, self.m_degenerate):
            buf.write(",".join(format(float(v), ".17g") for v in row) + "\n")
        buf.write(f"# tail_slope={self.slope:.17g}\n")
        buf.write(f"# tail_slope_ci95={self.slope_ci[0]:.17g},{self.slope_ci[1]:.17g}\n")
        buf.write(f"# drop_orders={self.drop_orders:.17g}\n")
        return buf.getvalue()


def decay_report(hist: RunHistory, tail_fraction: float = 1 / 3) -> DecayReport:
    """Local-energy table with a log-log slope fit over the last part of the run.

    ``drop_orders`` is log10(max E_local / final E_local).  The slope is a
    diagnostic with a 95% confidence interval; it carries no pass/fail.
    """
    t = hist.column("t")
    e = hist.column("E_local")
    mdeg = hist.column("M_degenerate")
    peak = e.max() if e.size else 0.0
    drop = float(np.log10(peak / e[-1])) if peak > 0 and e[-1] > 0 else (np.inf if peak > 0 else 0.0)
    sel = (t >= t[-1] * (1 - tail_fraction)) & (t > 0) & (e > 0)
    slope, ci = float("nan"), (float("nan"), float("nan"))
    if np.count_nonzero(sel) >= 3:
        fit = stats.linregress(np.log(t[sel]), np.log(e[sel]))
        half = stats.t.ppf(0.975, np.count_nonzero(sel) - 2) * fit.stderr
        slope, ci = float(fit.slope), (float(fit.slope - half), float(fit.slope + half))
    return DecayReport(t, e, mdeg, slope, ci, drop)


def self_convergence(
    m: float,
    ell: int,
    rstar_range=(-60.0, 80.0),
    n_coarse: int = 513,
    cfl: float = 0.5,
    t_end: float = 30.0,
    center: float = 10.0,
    width: float = 3.0,
) -> float:
    """Convergence order log2(|u_h - u_h/2| / |u_h/2 - u_h/4|) at ``t_end``.

    Grids have 2^k + 1 points so coarse nodes are a subset of fine ones.
    """
    sols = []
    dt0 = cfl * (rstar_range[1] - rstar_range[0]) / (n_coarse - 1)
    n_steps = int(round(t_end / dt0))
    t_end = n_steps * dt0
    for k in range(3):
        n = (n_coarse - 1) * 2**k + 1
        grid = Grid1D(rstar_range[0], rstar_range[1], n, dt0 / 2**k)
        pot = rw_potential(ell, m, grid)
        psi0, pi0 = gaussian_data(grid, center, width)
        state = initial_state(grid, pot, psi0, pi0)
        for _ in range(n_steps * 2**k):
            state = step(state, pot, grid)
        sols.append(state.psi[:: 2**k])
    e1 = np.sqrt(np.mean((sols[0] - sols[1]) ** 2))
    e2 = np.sqrt(np.mean((sols[1] - sols[2]) ** 2))
    return float(np.log2(e1 / e2))


# -- mode-reduction oracle -----------------------------------------------------
def legendre_jet(ell: int, c):
    """P_l(c) by Bonnet's recursion (works on jets)."""
    p0, p1 = 1.0 + 0.0 * c, c
    if ell == 0:
        return p0
    for n in range(1, ell):
        p0, p1 = p1, ((2 * n + 1) * c * p1 - n * p0) / (n + 1)
    return p1


def _default_profile(t, r):
    return J.exp(-((r - 5.0) ** 2) / 4.0) * J.cos(0.7 * t)


def mode_reduction_residual(ell: int, m: float, points, profile=_default_profile) -> np.ndarray:
    """Relative mismatch between the 4D operator and the reduced one.

    phi = profile(t, r) P_l(cos theta) / r is fed to Box_m - V computed by
    the curvature engine, and compared with
    (-psi_tt + psi_{r* r*} - W psi) P_l / (r f) evaluated with r-jets.
    ``points`` are (t, r, theta, phi) rows.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    params = KerrParams(0.0, m)
    geo = Geometry(params, pts, order=2)
    t, r, th, _ = geo.coords
    c = J.cos(th)
    f = 1 - 2 * m / r
    phi = profile(t, r) * legendre_jet(ell, c) / r
    lhs = (box_jet(geo, phi) - (4 / (r * r)) * f.truncate(0) * phi.truncate(0)).value

    # reduced side: derivatives in (t, r) only
    psi = profile(t, r)
    psi_tt = psi.diff(0).diff(0)
    flux = f.truncate(1) * psi.diff(1)
    psi_ss = f.truncate(0) * flux.diff(1)
    W = rw_potential_r(ell, m, geo.points[..., 1])
    rv = geo.points[..., 1]
    fv = 1 - 2 * m / rv
    ang = legendre_jet(ell, np.cos(geo.points[..., 2]))
    rhs = (-psi_tt.value + psi_ss.value - W * psi.value) * ang / (rv * fv)
    scale = np.maximum.reduce([np.abs(lhs), np.abs(rhs), np.abs(W * psi.value * ang / (rv * fv))])
    return np.abs(lhs - rhs) / np.where(scale > 0, scale, 1.0)
