"""The integrated one-dimensional model and its barrier constructions.

For monotone primitives v(x) = integral of the density up to x, the flow

    v_t = -|v_x|^(m-1) (-Delta)^alpha v,     alpha = 1 - s,

is advanced by a monotone explicit scheme.  The primitive runs from 0 to
the total mass M across the box, so it is not periodic; the linear ramp
matching those boundary values is subtracted before the spectral operator
is applied (the whole-line fractional Laplacian of an affine function is
zero) and boundary cells are frozen so the wrap region never feeds back
into measurements.

The barrier side implements the comparison machinery used to witness
infinite propagation speed for m < 2: a decaying power profile plus a
compactly supported bump whose fractional Laplacian has a strictly
negative power tail on the far left.  The subsolution inequality for the
combined barrier is checked numerically by whole-line quadrature rather
than assumed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .grid import Field, FracOrder, Grid1D
from .operators import (
    frac_laplacian,
    line_frac_laplacian,
    line_frac_laplacian_outside,
)

__all__ = [
    "PrimitiveField",
    "BarrierParams",
    "BarrierBump",
    "integrate_density",
    "differentiate_primitive",
    "heaviside_primitive",
    "integrated_cfl_dt",
    "step_integrated",
    "simulate_integrated",
    "make_barrier_bump",
    "barrier_subsolution",
    "barrier_exponents",
    "subsolution_inequality_check",
    "parabola_supersolution",
    "contact_check",
    "ContactReport",
    "infinite_speed_witness",
    "WitnessReport",
]

CFL_SAFETY = 0.4
MONOTONE_TOL = 1e-12
BOUNDARY_TOL = 1e-6
FROZEN_FRACTION = 0.96  # cells with |x| > this fraction of L never move


@dataclass
class PrimitiveField:
    """Nondecreasing primitive running from ~0 at -L to ~M at +L."""

    grid: Grid1D
    values: np.ndarray
    total_mass: float

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != (self.grid.n,):
            raise ValueError("values do not match grid size")
        M = self.total_mass
        scale = max(M, 1.0)
        if np.min(np.diff(v)) < -MONOTONE_TOL * scale:
            raise ValueError("primitive is not monotone within tolerance")
        if v.min() < -BOUNDARY_TOL * scale or v.max() > M + BOUNDARY_TOL * scale:
            raise ValueError("primitive leaves [0, M]")
        if abs(v[0]) > BOUNDARY_TOL * scale or abs(v[-1] - M) > BOUNDARY_TOL * scale:
            raise ValueError("primitive does not match its boundary values 0 and M")
        self.values = v

    def copy(self) -> "PrimitiveField":
        return PrimitiveField(self.grid, self.values.copy(), self.total_mass)


def integrate_density(u: Field) -> PrimitiveField:
    """Cumulative trapezoid of a nonnegative density from the left edge."""
    if np.any(u.values < -1e-13):
        raise ValueError("integrate_density requires a nonnegative density")
    v = np.asarray(u.values, dtype=float)
    h = u.grid.spacing
    cum = np.concatenate([[0.0], np.cumsum(0.5 * h * (v[1:] + v[:-1]))])
    total = float(h * v.sum())
    # snap the cumulative into [0, total]; the wrap cell carries the rest
    cum = np.clip(cum, 0.0, total)
    return PrimitiveField(u.grid, cum, total)


def differentiate_primitive(v: PrimitiveField) -> Field:
    """Centered finite difference of the primitive (one-sided at the ends)."""
    dv = np.gradient(v.values, v.grid.spacing)
    if dv.min() < -1e-9 * max(v.total_mass, 1.0):
        raise ValueError("primitive is not monotone enough to differentiate")
    return Field(v.grid, np.maximum(dv, 0.0))


def heaviside_primitive(grid: Grid1D, mass: float, x0: float) -> PrimitiveField:
    """Step primitive: 0 left of x0, `mass` to the right of it."""
    vals = np.where(grid.nodes > x0, float(mass), 0.0)
    return PrimitiveField(grid, vals, float(mass))


def _ramp(v: PrimitiveField) -> np.ndarray:
    g = v.grid
    return v.total_mass * (g.nodes + g.half_length) / (2.0 * g.half_length)


def _one_sided_slopes(values: np.ndarray, h: float):
    """Backward and forward difference quotients of a monotone primitive.

    The wrap faces see the 0 -> M jump of the primitive; they are replaced
    by the interior one-sided values (those cells sit inside the frozen
    boundary band anyway).
    """
    left = np.roll(values, 1)
    right = np.roll(values, -1)
    dminus = np.maximum((values - left) / h, 0.0)
    dplus = np.maximum((right - values) / h, 0.0)
    dminus[0] = dplus[0] = max(values[1] - values[0], 0.0) / h
    dminus[-1] = dplus[-1] = max(values[-1] - values[-2], 0.0) / h
    return dminus, dplus


def _godunov_slope(values: np.ndarray, h: float, A: np.ndarray) -> np.ndarray:
    """Upwinded slope magnitude for the factor |v_x|^(m-1).

    Where the nonlocal term pushes v down (A > 0) the backward difference
    is used, where it pushes v up the forward difference: the motion of a
    cell then stalls as it approaches the neighbor it would cross, which is
    what makes the scheme order-preserving, while degenerate feet keep the
    forward slope and stay mobile (the infinite-propagation creep).
    """
    dminus, dplus = _one_sided_slopes(values, h)
    return np.where(A > 0.0, dminus, dplus)


def integrated_cfl_dt(v: PrimitiveField, m: float, alpha: FracOrder,
                      cap: float = math.inf) -> float:
    """Stable step: safety * h^(2 alpha) / max|v_x|^(m-1), with the spectral
    stability factor min(1, 2/pi^(2 alpha)) folded in."""
    h = v.grid.spacing
    dminus, dplus = _one_sided_slopes(v.values, h)
    gmax = float(np.max(np.maximum(dminus, dplus)) ** (m - 1.0))
    if gmax <= 0.0:
        return float(cap)
    dt = CFL_SAFETY * h ** (2.0 * alpha.alpha) / gmax
    dt *= min(1.0, 2.0 / math.pi ** (2.0 * alpha.alpha))
    return float(min(dt, cap))


@dataclass
class RepairStats:
    monotonicity_mass: float = 0.0  # L1 size of cumulative-max repairs
    clamp_mass: float = 0.0


def step_integrated(v: PrimitiveField, m: float, alpha: FracOrder, dt: float,
                    stats: RepairStats | None = None) -> PrimitiveField:
    """One explicit step of v_t = -|v_x|^(m-1) (-Delta)^alpha v.

    The ramp matching the boundary values is subtracted before the spectral
    operator (its own whole-line fractional Laplacian is zero), the slope
    factor is the upwinded one-sided difference of :func:`_godunov_slope`,
    each cell's update is bracketed by its neighbors' previous values so
    cells cannot cross, boundary cells stay frozen, and the result is
    re-monotonized by a cumulative max and clamped to [0, M] with any
    repaired mass recorded.
    """
    if m <= 1.0:
        raise ValueError(f"m must exceed 1, got {m}")
    g = v.grid
    h = g.spacing
    w = Field(g, v.values - _ramp(v))
    A = frac_laplacian(w, alpha).values
    slope = _godunov_slope(v.values, h, A) ** (m - 1.0)
    new = v.values - dt * slope * A
    if not np.all(np.isfinite(new)):
        raise RuntimeError("integrated step produced NaN (step too large)")

    new = np.clip(new, np.roll(v.values, 1), np.roll(v.values, -1))
    new[0], new[-1] = v.values[0], v.values[-1]
    frozen = np.abs(g.nodes) > FROZEN_FRACTION * g.half_length
    new[frozen] = v.values[frozen]

    mono = np.maximum.accumulate(new)
    repair = float(h * np.sum(np.abs(mono - new)))
    clamped = np.clip(mono, 0.0, v.total_mass)
    clamp = float(h * np.sum(np.abs(clamped - mono)))
    if stats is not None:
        stats.monotonicity_mass += repair
        stats.clamp_mass += clamp
    return PrimitiveField(g, clamped, v.total_mass)


def simulate_integrated(v0: PrimitiveField, m: float, alpha: FracOrder,
                        t_end: float, snap_times=None,
                        max_steps: int = 2_000_000):
    """Adaptive-step evolution of the primitive; returns (times, states, stats)."""
    if snap_times is None:
        snap_times = [0.0, t_end]
    snap_times = np.sort(np.asarray(snap_times, dtype=float))
    stats = RepairStats()
    t = 0.0
    v = v0.copy()
    out_t, out_v = [], []
    pending = list(snap_times)
    while pending and abs(pending[0] - t) <= 1e-14 * max(1.0, t_end):
        pending.pop(0)
        out_t.append(t)
        out_v.append(v.copy())
    steps = 0
    while t < t_end - 1e-14 and pending:
        dt = integrated_cfl_dt(v, m, alpha, cap=t_end - t)
        v_next = step_integrated(v, m, alpha, dt, stats)
        t_next = t + dt
        while pending and pending[0] <= t_next + 1e-14:
            ts = pending.pop(0)
            theta = min(max((ts - t) / dt, 0.0), 1.0)
            vals = (1 - theta) * v.values + theta * v_next.values
            out_t.append(ts)
            out_v.append(PrimitiveField(v.grid, vals, v.total_mass))
        v, t = v_next, t_next
        steps += 1
        if steps >= max_steps:
            raise RuntimeError(f"exceeded {max_steps} steps at t={t:.6g}")
    return np.asarray(out_t), out_v, stats


# --- barriers ------------------------------------------------------------


def barrier_exponents(m: float, alpha: float) -> tuple[float, float]:
    """Decay and time exponents (gamma, b) of the self-similar barrier.

    gamma = (m + 2 alpha)/(2 - m) requires m < 2; b = 1/(m - 1 + 2 alpha).
    """
    if not 1.0 < m < 2.0:
        raise ValueError(f"the barrier construction needs 1 < m < 2, got {m}")
    gamma = (m + 2.0 * alpha) / (2.0 - m)
    b = 1.0 / (m - 1.0 + 2.0 * alpha)
    return gamma, b


@dataclass(frozen=True)
class BarrierParams:
    """Parameters of the moving subsolution barrier.

    Phi(x, t) = (t + tau)^(b*gamma) * ((|x| + xi)^(-gamma) + G(x)) - eps_b,
    where G is the verified right-side bump.  `cap` bounds G from above and
    `tail_coef` is the measured strength of the negative tail of its
    fractional Laplacian left of x0.
    """

    x0: float
    xi: float
    eps_b: float
    tau: float
    cap: float
    tail_coef: float
    gamma: float
    b: float

    def __post_init__(self):
        if self.xi <= 0 or self.eps_b <= 0 or self.tau <= 0:
            raise ValueError("xi, eps_b and tau must be positive")
        if self.gamma <= 0 or self.b <= 0:
            raise ValueError("gamma and b must be positive (requires m < 2)")


@dataclass
class BarrierBump:
    """Compact bump G plus the measured constants of its left tail."""

    field: Field
    center: float
    radius: float
    height: float
    cap: float        # sup G
    tail_coef: float  # inf over probes of |x|^(1+2s) * (-(-Delta)^s G)
    probe_nodes: np.ndarray
    probe_values: np.ndarray  # (-Delta)^s G at the probes

    def __call__(self, x):
        y = (np.asarray(x, dtype=float) - self.center) / self.radius
        out = np.zeros_like(y)
        inside = np.abs(y) < 1.0
        out[inside] = self.height * np.exp(1.0 - 1.0 / (1.0 - y[inside] ** 2))
        return out


def make_barrier_bump(grid: Grid1D, x0: float, s: float, height: float = 1.0,
                      offset: float = 1.0, width: float = 2.0) -> BarrierBump:
    """Place a smooth bump right of -x0 and verify its left fractional tail.

    The bump exp(1 - 1/(1-y^2)) is supported on [-x0+offset, -x0+offset+width].
    The construction is accepted only if the whole-line (-Delta)^s of the
    bump is strictly negative at every grid node left of x0, in which case
    the measured decay constant tail_coef = min |x|^(1+2s) |(-Delta)^s G| is
    returned with the bump.  Fails for a zero bump (no negative tail).
    """
    if not 0.0 < s < 1.0:
        raise ValueError(f"s must lie in (0, 1), got {s}")
    if not -grid.half_length < x0 < 0.0:
        raise ValueError(f"x0 must be negative and inside the grid, got {x0}")
    center = -x0 + offset + 0.5 * width
    radius = 0.5 * width
    if center + radius >= grid.half_length:
        raise ValueError("bump support leaves the grid")
    bump = BarrierBump(
        field=Field(grid, np.zeros(grid.n)),
        center=center,
        radius=radius,
        height=height,
        cap=0.0,
        tail_coef=0.0,
        probe_nodes=np.empty(0),
        probe_values=np.empty(0),
    )
    values = bump(grid.nodes)
    bump.field = Field(grid, values)
    # the bump attains exactly `height` at its center, so the sup bound is
    # the height itself rather than the sampled maximum
    bump.cap = float(height)
    if bump.cap <= 0.0:
        raise ValueError("bump verification failed: zero bump has no negative tail")

    probes = grid.nodes[grid.nodes < x0]
    lap = line_frac_laplacian_outside(
        bump, (center - radius, center + radius), probes, s
    )
    if np.any(lap >= 0.0):
        raise ValueError("bump verification failed: sign check of (-Delta)^s G")
    coef = np.abs(probes) ** (1.0 + 2.0 * s) * (-lap)
    bump.tail_coef = float(coef.min())
    bump.probe_nodes = probes
    bump.probe_values = lap
    return bump


def barrier_subsolution(bp: BarrierParams, G: Field, t: float) -> Field:
    """Evaluate the barrier on the grid at time t."""
    x = G.grid.nodes
    core = (np.abs(x) + bp.xi) ** (-bp.gamma) + G.values
    return Field(G.grid, (t + bp.tau) ** (bp.b * bp.gamma) * core - bp.eps_b)


def subsolution_inequality_check(
    bp: BarrierParams, bump: BarrierBump, m: float, alpha: float,
    times=(0.0, 0.05, 0.1), probe_limit: int = 40,
) -> dict:
    """Numerically check Phi_t + |Phi_x|^(m-1) (-Delta)^alpha Phi <= 0 left of x0.

    The time derivative and slope are analytic; the nonlocal term is the
    whole-line quadrature of the power part plus the measured bump values.
    Returns the worst value found and per-time maxima.
    """
    grid = bump.field.grid
    probes = grid.nodes[grid.nodes < bp.x0]
    if len(probes) > probe_limit:
        idx = np.linspace(0, len(probes) - 1, probe_limit).astype(int)
        probes = probes[idx]

    def power_part(y):
        return (np.abs(y) + bp.xi) ** (-bp.gamma)

    lap_power = line_frac_laplacian(power_part, probes, alpha)
    lap_bump = line_frac_laplacian_outside(
        bump, (bump.center - bump.radius, bump.center + bump.radius), probes, alpha
    )
    core = power_part(probes)  # G vanishes left of x0
    slope_core = bp.gamma * (np.abs(probes) + bp.xi) ** (-bp.gamma - 1.0)

    worst = -math.inf
    per_time = {}
    for t in times:
        tb = (t + bp.tau) ** (bp.b * bp.gamma)
        phi_t = bp.b * bp.gamma * (t + bp.tau) ** (bp.b * bp.gamma - 1.0) * core
        phi_x = tb * slope_core
        lap = tb * (lap_power + lap_bump)
        lhs = phi_t + np.abs(phi_x) ** (m - 1.0) * lap
        per_time[t] = float(lhs.max())
        worst = max(worst, per_time[t])
    return {"max_lhs": worst, "per_time": per_time, "passed": worst <= 0.0,
            "n_probes": len(probes)}


def parabola_supersolution(C: float, b: float, t: float, grid: Grid1D) -> Field:
    """Truncated parabola ((C t - (|x| - b))_+)^2; support radius b + C t."""
    if C <= 0 or b <= 0:
        raise ValueError("C and b must be positive")
    core = np.maximum(C * t - (np.abs(grid.nodes) - b), 0.0)
    return Field(grid, core**2)


@dataclass
class ContactReport:
    margin: float            # min(U - u) over all nodes
    margin_interior: float   # min(U - u) where U > 0
    location: float          # node of the overall minimum
    strict: bool             # interior margin strictly positive


def contact_check(u: Field, U: Field) -> ContactReport:
    """Report the minimal gap between a solution and a supersolution."""
    if u.grid != U.grid:
        raise ValueError("contact_check requires fields on the same grid")
    diff = U.values - u.values
    i = int(np.argmin(diff))
    inside = U.values > 0.0
    margin_int = float(diff[inside].min()) if np.any(inside) else float(diff.min())
    return ContactReport(
        margin=float(diff.min()),
        margin_interior=margin_int,
        location=float(u.grid.nodes[i]),
        strict=bool(margin_int > 0.0),
    )


@dataclass
class WitnessReport:
    """Outcome of the infinite-propagation barrier witness."""

    params: BarrierParams
    probe_x: float
    probe_time: float
    v_at_probe: float
    barrier_at_probe: float
    initial_domination: bool   # Phi(x,0) <= v(x,0) everywhere
    right_domination: bool     # Phi <= v on x >= x0 for sampled times
    inequality: dict           # subsolution_inequality_check output
    passed: bool


def infinite_speed_witness(
    v0: PrimitiveField, m: float, s: float, x0: float,
    t_probe: float = 0.1, probe_x: float | None = None,
    eps_b: float | None = None, tau: float = 1.0,
    bump_height: float | None = None,
) -> WitnessReport:
    """Run the integrated flow and verify the barrier witness chain.

    Checks, in order: the bump verification, the subsolution inequality on
    the probe region, domination of the barrier by v at t = 0 and on the
    right region over [0, t_probe], and finally positivity of both v and
    the barrier at a probe strictly left of the initial support.  eps_b is
    auto-calibrated to sit below the measured v at the probe when not given.
    """
    alpha = 1.0 - s
    gamma, b = barrier_exponents(m, alpha)
    grid = v0.grid

    times, states, _ = simulate_integrated(
        v0, m, FracOrder(alpha), t_probe, snap_times=np.linspace(0, t_probe, 6)
    )
    v_end = states[-1]

    tol0 = 1e-12 * max(v0.total_mass, 1.0)
    left_edge = float(grid.nodes[np.argmax(v0.values > tol0)])
    if probe_x is None:
        # pick a node strictly left of the initial support but well inside
        # the region the scheme has already invaded, so v there is sizable
        invaded = np.argmax(v_end.values > 0.0)
        x_inv = float(grid.nodes[invaded])
        if x_inv < left_edge - grid.spacing:
            probe_x = left_edge - 0.25 * (left_edge - x_inv)
        else:
            probe_x = left_edge - grid.spacing
    probe_i = int(np.argmin(np.abs(grid.nodes - probe_x)))
    probe_x = float(grid.nodes[probe_i])
    v_probe = float(v_end.values[probe_i])

    # right-region floor of v over the run, used to size the bump height
    right = grid.nodes >= x0
    k1 = min(float(st.values[right].min()) for st in states)
    if bump_height is None:
        bump_height = 0.5 * k1 if k1 > 0 else 0.5
    bump = make_barrier_bump(grid, x0, s, height=bump_height)

    def build(eb: float) -> BarrierParams:
        xi = (x0 + eb ** (-1.0 / gamma)) * 1.0001
        return BarrierParams(x0=x0, xi=xi, eps_b=eb, tau=tau, cap=bump.cap,
                             tail_coef=bump.tail_coef, gamma=gamma, b=b)

    if eps_b is None:
        # shrink eps_b geometrically until the barrier is positive at the
        # probe yet still below the measured v there
        eps_b = max(v_probe * 1e-3, 1e-60)
        for _ in range(60):
            bp_try = build(eps_b)
            val = float(barrier_subsolution(bp_try, bump.field, t_probe).values[probe_i])
            if 0.0 < val <= max(v_probe, 0.0):
                break
            eps_b *= 0.1
    bp = build(eps_b)

    ineq = subsolution_inequality_check(bp, bump, m, alpha,
                                        times=(0.0, 0.5 * t_probe, t_probe))

    phi0 = barrier_subsolution(bp, bump.field, 0.0)
    initial_dom = bool(np.all(phi0.values <= v0.values + 1e-15))
    right_dom = True
    for t, st in zip(times, states):
        phi = barrier_subsolution(bp, bump.field, t)
        if not np.all(phi.values[right] <= st.values[right] + 1e-15):
            right_dom = False
            break

    phi_probe = float(barrier_subsolution(bp, bump.field, t_probe).values[probe_i])
    passed = (
        ineq["passed"]
        and initial_dom
        and right_dom
        and v_probe > 0.0
        and phi_probe > 0.0
        and v_probe >= phi_probe
    )
    return WitnessReport(
        params=bp,
        probe_x=probe_x,
        probe_time=t_probe,
        v_at_probe=v_probe,
        barrier_at_probe=phi_probe,
        initial_domination=initial_dom,
        right_domination=right_dom,
        inequality=ineq,
        passed=passed,
    )
