"""Measurable consequences of the theory, as runtime checks.

Everything here turns a qualitative statement about the flow into a
number: mass conservation, decay of the norms and energies, the
L^1 -> L^inf smoothing exponent, support growth and tail masses for the
finite/infinite propagation dichotomy, weak-form residuals against test
functions, and the Cauchy behavior of rescaled solution families that
stands in for convergence to the self-similar attractor.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .grid import Field
from .evolve import ModelParams, Trajectory, simulate_density
from .operators import riesz_gradient
from .similarity import ExponentSet, extract_profile

__all__ = [
    "mass",
    "lp_norm",
    "support_radius",
    "tail_mass",
    "DecayFit",
    "smoothing_fit",
    "MonotonicityReport",
    "energy_monotonicity",
    "standard_checks",
    "SeparableTestFunction",
    "weak_form_residual",
    "FamilyMember",
    "rescaled_family",
    "ConvergenceReport",
    "asymptotic_convergence",
    "PropagationReport",
    "finite_propagation_report",
    "infinite_propagation_report",
]


def mass(u: Field) -> float:
    """Box integral of the samples (periodic trapezoid = rectangle sum)."""
    return float(u.grid.spacing * u.values.sum())


def lp_norm(u: Field, p: float) -> float:
    """(int |u|^p)^(1/p); p = inf returns the max norm."""
    if math.isinf(p):
        return float(np.max(np.abs(u.values)))
    if p < 1.0:
        raise ValueError(f"p must be >= 1, got {p}")
    return float((u.grid.spacing * np.sum(np.abs(u.values) ** p)) ** (1.0 / p))


def support_radius(u: Field, threshold: float) -> float:
    """Largest |x_i| with u_i > threshold, or 0 for no such node."""
    if threshold <= 0.0:
        raise ValueError(f"threshold must be positive, got {threshold}")
    above = np.abs(u.values) > threshold
    if not np.any(above):
        return 0.0
    return float(np.max(np.abs(u.grid.nodes[above])))


def tail_mass(u: Field, R: float) -> float:
    """Mass at |x| >= R; R = 0 returns the total mass."""
    if R >= u.grid.half_length:
        raise ValueError(f"R={R} reaches past the box half-length")
    if R < 0.0:
        raise ValueError(f"R must be nonnegative, got {R}")
    outside = np.abs(u.grid.nodes) >= R
    return float(u.grid.spacing * u.values[outside].sum())


@dataclass
class DecayFit:
    times: np.ndarray
    values: np.ndarray
    fitted_exponent: float
    theory_exponent: float
    relative_gap: float
    fit_window: tuple


def smoothing_fit(traj: Trajectory, ex: ExponentSet,
                  window: tuple = (1.0, 20.0)) -> DecayFit:
    """Log-log slope of the sup-norm against the predicted t^(-gamma).

    Needs at least 5 snapshots spanning a decade inside the window; the
    theory exponent is gamma_1 of the exponent set and relative_gap is
    |fitted + gamma| / gamma (1.0 for a constant-in-time trajectory).
    """
    t0, t1 = window
    times = traj.times
    sups = np.array([d.sup_norm for d in traj.diagnostics])
    sel = (times >= t0) & (times <= t1) & (sups > 0)
    if sel.sum() < 5 or times[sel][-1] < 10.0 * times[sel][0]:
        raise ValueError("fit needs >= 5 snapshots spanning at least a decade")
    slope = float(np.polyfit(np.log(times[sel]), np.log(sups[sel]), 1)[0])
    gamma = ex.gamma_p
    return DecayFit(
        times=times[sel],
        values=sups[sel],
        fitted_exponent=slope,
        theory_exponent=-gamma,
        relative_gap=abs(slope + gamma) / gamma,
        fit_window=window,
    )


@dataclass
class MonotonicityReport:
    quantity: str
    values: np.ndarray
    max_violation: float  # largest relative uptick between snapshots
    passed: bool

    @staticmethod
    def check(name: str, values, tol: float = 1e-8) -> "MonotonicityReport":
        values = np.asarray(values, dtype=float)
        worst = 0.0
        for a, b in zip(values, values[1:]):
            if a > 0:
                worst = max(worst, (b - a) / a)
        return MonotonicityReport(name, values, worst, worst < tol)


def energy_monotonicity(traj: Trajectory, p: float = 2.0,
                        tol: float = 1e-8) -> dict:
    """Check the L^p norm and the second-energy surrogate decay in time."""
    if not p > 1.0:
        raise ValueError(f"p must exceed 1, got {p}")
    lp = [lp_norm(s, p) for s in traj.snapshots]
    e2 = [d.second_energy for d in traj.diagnostics]
    return {
        "lp": MonotonicityReport.check(f"L{p:g}", lp, tol),
        "second_energy": MonotonicityReport.check("second-energy", e2, tol),
    }


def standard_checks(traj: Trajectory, ex: ExponentSet | None = None,
                    tol: float = 1e-8, envelope_margin: float = 2.0) -> dict:
    """The per-run conservation and monotonicity battery.

    mass drift, sup / L2 / L4 / second-energy monotonicity, and (when the
    exponent set is given and the run spans past t=1) the smoothing
    envelope sup u(t) <= margin * C * t^(-gamma) M^delta with C fitted at
    the first snapshot past t=1.
    """
    d = traj.diagnostics
    m0 = d[0].mass
    drift = max(abs(x.mass - m0) for x in d) / m0 if m0 > 0 else 0.0
    checks = {
        "mass_drift": (drift, drift < tol),
        "sup_monotone": MonotonicityReport.check(
            "sup", [x.sup_norm for x in d], tol),
        "l2_monotone": MonotonicityReport.check(
            "l2", [x.l2_norm for x in d], tol),
        "l4_monotone": MonotonicityReport.check(
            "l4", [x.l4_norm for x in d], tol),
        "second_energy_monotone": MonotonicityReport.check(
            "second-energy", [x.second_energy for x in d], tol),
    }
    if ex is not None and m0 > 0:
        times = traj.times
        sups = np.array([x.sup_norm for x in d])
        past = np.where(times >= 1.0)[0]
        if len(past) >= 2:
            i0 = past[0]
            gamma, delta = ex.gamma_p, ex.delta_p
            C = sups[i0] * times[i0] ** gamma / m0**delta
            bound = envelope_margin * C * times[past] ** (-gamma) * m0**delta
            ok = bool(np.all(sups[past] <= bound))
            checks["decay_envelope"] = (float(np.max(sups[past] / bound)), ok)
    return checks


class SeparableTestFunction:
    """Space-time test function phi(x, t) = X(x) * T(t) for the weak form.

    X is a smooth compact bump on [x_lo, x_hi]; T is a smooth function with
    T(t_end) = 0 (compact support at the final time).  When T(0) != 0 the
    weak-form residual picks up the initial term.
    """

    def __init__(self, x_lo: float, x_hi: float, t_end: float):
        if x_hi <= x_lo:
            raise ValueError("need x_lo < x_hi")
        self.x_lo, self.x_hi, self.t_end = x_lo, x_hi, t_end

    def _bump(self, x):
        y = (2.0 * (x - self.x_lo) / (self.x_hi - self.x_lo)) - 1.0
        out = np.zeros_like(y)
        inside = np.abs(y) < 1.0
        out[inside] = np.exp(1.0 - 1.0 / (1.0 - y[inside] ** 2))
        return out

    def _tfac(self, t: float) -> float:
        z = t / self.t_end
        return float((1.0 - z) ** 2) if z <= 1.0 else 0.0

    def _dtfac(self, t: float) -> float:
        z = t / self.t_end
        return float(-2.0 * (1.0 - z) / self.t_end) if z <= 1.0 else 0.0

    def value(self, x, t: float):
        return self._bump(np.asarray(x)) * self._tfac(t)

    def time_derivative(self, x, t: float):
        return self._bump(np.asarray(x)) * self._dtfac(t)

    def space_derivative(self, x, t: float):
        x = np.asarray(x)
        y = (2.0 * (x - self.x_lo) / (self.x_hi - self.x_lo)) - 1.0
        out = np.zeros_like(y)
        inside = np.abs(y) < 1.0
        yi = y[inside]
        out[inside] = (
            np.exp(1.0 - 1.0 / (1.0 - yi**2))
            * (-2.0 * yi / (1.0 - yi**2) ** 2)
            * (2.0 / (self.x_hi - self.x_lo))
        )
        return out * self._tfac(t)


def weak_form_residual(traj: Trajectory, testfn: SeparableTestFunction) -> float:
    """Residual of the weak formulation against a space-time test function.

    Quadrature of  int int u phi_t - int int u^(m-1) W . phi_x + int u0 phi(.,0)
    with W the pressure gradient, trapezoid in time over the stored
    snapshots.  Vanishes for an exact weak solution; decreases under grid
    refinement for the scheme.  The test function must vanish near the box
    boundary and at the final time.
    """
    grid = traj.grid
    h = grid.spacing
    edge = 0.95 * grid.half_length
    probe = testfn.value(grid.nodes, traj.times[0])
    if abs(testfn.value(np.array([-edge]), 0.0)[0]) > 0 or \
       abs(testfn.value(np.array([edge]), 0.0)[0]) > 0:
        raise ValueError("test function touches the box boundary")
    if testfn._tfac(traj.times[-1]) > 1e-14:
        raise ValueError("test function must vanish at the trajectory's final time")
    del probe

    p = traj.params
    integrand = np.empty(len(traj.times))
    for i, (t, snap) in enumerate(zip(traj.times, traj.snapshots)):
        u = snap.values
        phi_t = testfn.time_derivative(grid.nodes, t)
        phi_x = testfn.space_derivative(grid.nodes, t)
        W = riesz_gradient(snap, p.s).values
        flux = np.maximum(u, 0.0) ** (p.m - 1.0) * W
        integrand[i] = h * np.sum(u * phi_t) - h * np.sum(flux * phi_x)
    total = float(np.trapezoid(integrand, traj.times))
    total += float(h * np.sum(traj.snapshots[0].values
                              * testfn.value(grid.nodes, traj.times[0])))
    return total


@dataclass
class FamilyMember:
    lam: float
    trajectory: Trajectory

    @property
    def final(self) -> Field:
        return self.trajectory.snapshots[-1]


def _rescale_initial(u0: Field, lam: float) -> Field:
    """lam * u0(lam x) on the same grid, mass-renormalized to mass(u0).

    Errors out if a visible fraction of the mass lives beyond the box after
    the dilation (the box is too small for this lambda).
    """
    grid = u0.grid
    vals = lam * np.interp(lam * grid.nodes, grid.nodes, u0.values,
                           left=0.0, right=0.0)
    m0 = mass(u0)
    m1 = float(grid.spacing * vals.sum())
    if m0 > 0 and abs(m1 - m0) / m0 > 1e-3:
        raise ValueError(
            f"box too small for lambda={lam}: {abs(m1 - m0) / m0:.2e} of the mass clipped"
        )
    if m1 > 0:
        vals *= m0 / m1
    return u0.with_values(vals)


def rescaled_family(u0: Field, p: ModelParams, lambdas, t_probe: float,
                    n_snapshots: int = 6, threads: int = 1) -> list:
    """Evolve lam^N u0(lam x) to t_probe for each lam.

    All members share mass(u0) by construction plus conservation.  Returns
    FamilyMember entries holding full trajectories (snapshot at t_probe is
    member.final).  Members are independent, so with threads > 1 they run
    concurrently; each member is computed identically either way and the
    assembly order is fixed, so results do not depend on the thread count.
    """
    lambdas = [float(l) for l in lambdas]
    if any(l < 1.0 for l in lambdas) or any(
        b <= a for a, b in zip(lambdas, lambdas[1:])
    ):
        raise ValueError("lambdas must be >= 1 and increasing")
    snap_times = np.linspace(0.0, t_probe, n_snapshots)

    def run(lam: float) -> FamilyMember:
        init = _rescale_initial(u0, lam)
        return FamilyMember(lam, simulate_density(init, p, t_probe,
                                                  snap_times=snap_times))

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(run, lambdas))
    return [run(lam) for lam in lambdas]


@dataclass
class ConvergenceReport:
    lambdas: list
    pairwise_distances: list     # L^p distance between consecutive members
    decreasing: bool
    weighted_profile_distances: list  # t^(N beta (1-1/p)) ||u - profile|| along the largest run
    weighted_decreasing: bool
    masses: list


def asymptotic_convergence(u0: Field, p: ModelParams, lambdas, t_probe: float,
                           lp: float = 2.0, threads: int = 1) -> ConvergenceReport:
    """Cauchy record of the rescaled family at t_probe.

    Consecutive L^p distances between family members must decrease for the
    family to be consistent with convergence to a self-similar limit.  The
    report also tracks t^(N beta (1-1/p)) ||u(t) - profile|| along the
    largest-lambda run, with the profile extracted at that run's final time.
    """
    from .similarity import scaling_exponents

    ex = scaling_exponents(p.m, p.s, p.N, 1.0)
    members = rescaled_family(u0, p, lambdas, t_probe, threads=threads)
    h = u0.grid.spacing

    def dist(a: Field, b: Field) -> float:
        return float((h * np.sum(np.abs(a.values - b.values) ** lp)) ** (1.0 / lp))

    finals = [m.final for m in members]
    pairwise = [dist(a, b) for a, b in zip(finals, finals[1:])]

    big = members[-1].trajectory
    profile = extract_profile(big, ex, big.times[-1])
    weighted = []
    for t, snap in zip(big.times, big.snapshots):
        if t <= 0.0:
            continue
        ref = extract_profile_inverse(profile, ex, t)
        w = t ** (p.N * ex.beta2 * (1.0 - 1.0 / lp))
        weighted.append(w * dist(snap, ref))
    return ConvergenceReport(
        lambdas=[m.lam for m in members],
        pairwise_distances=pairwise,
        decreasing=all(b < a for a, b in zip(pairwise, pairwise[1:])),
        weighted_profile_distances=weighted,
        weighted_decreasing=all(b < a for a, b in zip(weighted, weighted[1:])),
        masses=[mass(m.final) for m in members],
    )


def extract_profile_inverse(profile: Field, ex: ExponentSet, t: float) -> Field:
    """Self-similar state t^(-alpha2) phi(x t^(-beta2)) built from a profile."""
    grid = profile.grid
    pos = grid.nodes * t ** (-ex.beta2)
    vals = t ** (-ex.alpha2) * np.interp(
        pos, grid.nodes, profile.values,
        left=profile.values[0], right=profile.values[-1],
    )
    return profile.with_values(vals)


@dataclass
class PropagationReport:
    kind: str                 # "finite" or "infinite-witness"
    times: np.ndarray
    support_radii: np.ndarray
    tail_masses: np.ndarray
    threshold: float
    probe_radius: float
    fit: tuple | None         # (intercept, slope, relative residual) for finite
    verdict: bool


def finite_propagation_report(traj: Trajectory, threshold_rel: float = 1e-8,
                              window: tuple = (0.1, 1.0),
                              max_residual: float = 0.05) -> PropagationReport:
    """Fit the support radius to an affine function of time.

    The support threshold is relative to each snapshot's sup-norm; the
    verdict holds if the relative RMS residual of the affine fit stays
    under `max_residual` over the window.
    """
    sel = (traj.times >= window[0]) & (traj.times <= window[1])
    times = traj.times[sel]
    radii, tails = [], []
    thr_used = 0.0
    for snap in [s for s, keep in zip(traj.snapshots, sel) if keep]:
        thr_used = threshold_rel * float(np.max(snap.values))
        radii.append(support_radius(snap, thr_used))
        tails.append(tail_mass(snap, 0.9 * traj.grid.half_length))
    radii = np.asarray(radii)
    coeffs = np.polyfit(times, radii, 1)
    fitvals = np.polyval(coeffs, times)
    resid = float(np.sqrt(np.mean((radii - fitvals) ** 2)) / np.mean(radii))
    return PropagationReport(
        kind="finite",
        times=times,
        support_radii=radii,
        tail_masses=np.asarray(tails),
        threshold=thr_used,
        probe_radius=0.0,
        fit=(float(coeffs[1]), float(coeffs[0]), resid),
        verdict=resid < max_residual,
    )


def infinite_propagation_report(traj: Trajectory, initial_radius: float,
                                witness_passed: bool,
                                probe_factor: float = 1.5,
                                floor_factor: float = 1e3) -> PropagationReport:
    """Tail-mass witness of infinite propagation speed.

    Verdict: the mass beyond probe_factor * initial support radius at the
    final time exceeds floor_factor times the solver's clipping floor, and
    the integrated-model barrier witness passed.
    """
    probe = probe_factor * initial_radius
    tails = np.array([tail_mass(s, probe) for s in traj.snapshots])
    radii = np.array([
        support_radius(s, 1e-8 * max(float(np.max(s.values)), 1e-300))
        for s in traj.snapshots
    ])
    total = traj.diagnostics[0].mass
    floor = max(traj.clipped_mass, 1e-15 * total)
    verdict = bool(tails[-1] > floor_factor * floor) and witness_passed
    return PropagationReport(
        kind="infinite-witness",
        times=traj.times,
        support_radii=radii,
        tail_masses=tails,
        threshold=1e-8,
        probe_radius=probe,
        fit=None,
        verdict=verdict,
    )
