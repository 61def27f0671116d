"""Density-solver and FPME-integrator checks.

Oracles: stationarity of constants, exact flux telescoping for mass,
re-evaluation of the stepped field for the sup-norm bound, the exact
Fourier-multiplier semigroup for the linear FPME, and the scaling algebra
of the flow for the rescaling-commutation test.
"""

import numpy as np
import pytest

from nlpme.evolve import (
    ModelParams,
    cfl_dt,
    continuation_limit,
    fpme_cfl_dt,
    fractional_heat_evolution,
    simulate_density,
    simulate_fpme,
    step_density,
    step_fpme,
)
from nlpme.grid import Field, make_grid
from nlpme.initial_data import gaussian_bump, mollified_dirac


def test_model_params_validation():
    with pytest.raises(ValueError):
        ModelParams(1.0, 0.5)
    with pytest.raises(ValueError):
        ModelParams(2.0, 1.0)
    with pytest.raises(ValueError):
        ModelParams(2.0, 0.5, eps=-0.1)


def test_step_constant_is_stationary():
    g = make_grid(10.0, 128)
    u = Field(g, np.full(g.n, 0.7))
    p = ModelParams(2.0, 0.5, delta=0.01)
    out = step_density(u, p, 1e-3)
    assert np.max(np.abs(out.values - 0.7)) < 1e-14


def test_step_conserves_mass_exactly():
    g = make_grid(10.0, 256)
    u = gaussian_bump(g, 1.0, width=0.7)
    p = ModelParams(2.0, 0.5)
    dt = cfl_dt(u, p)
    out = step_density(u, p, dt)
    m0 = g.spacing * u.values.sum()
    m1 = g.spacing * out.values.sum()
    assert abs(m1 - m0) / m0 < 1e-12


def test_step_rejects_negative_input():
    g = make_grid(10.0, 128)
    vals = np.zeros(g.n)
    vals[3] = -0.1
    with pytest.raises(ValueError):
        step_density(Field(g, vals), ModelParams(2.0, 0.5), 1e-4)


def test_step_sup_norm_does_not_increase():
    """One CFL step from a Gaussian; oracle = direct re-evaluation."""
    g = make_grid(15.0, 1024)
    u = gaussian_bump(g, 1.0, width=0.8)
    p = ModelParams(2.0, 0.5)
    dt = cfl_dt(u, p)
    out = step_density(u, p, dt)
    sup0 = float(np.max(u.values))
    sup1 = float(np.max(out.values))
    assert sup1 <= sup0 * (1.0 + 1e-10)


def test_cfl_zero_field_returns_cap():
    g = make_grid(10.0, 128)
    u = Field(g, np.zeros(g.n))
    p = ModelParams(2.0, 0.5)
    assert cfl_dt(u, p, cap=7.5) == 7.5


def test_cfl_delta_limit_halves():
    """Doubling delta at fixed u at most halves the delta-limited step."""
    g = make_grid(10.0, 256)
    u = gaussian_bump(g, 1.0, width=0.7)
    d1 = cfl_dt(u, ModelParams(2.0, 0.5, delta=50.0))
    d2 = cfl_dt(u, ModelParams(2.0, 0.5, delta=100.0))
    assert d2 <= 0.5 * d1 * (1.0 + 1e-12)


def test_cfl_step_is_finite_and_stable():
    g = make_grid(15.0, 512)
    u = gaussian_bump(g, 1.0, width=0.8)
    p = ModelParams(2.0, 0.5)
    dt = cfl_dt(u, p)
    assert dt > 0.0
    out = step_density(u, p, dt)
    assert np.all(np.isfinite(out.values))


def test_simulate_zero_initial_data():
    g = make_grid(10.0, 128)
    traj = simulate_density(Field(g, np.zeros(g.n)), ModelParams(2.0, 0.5), 1.0,
                            n_snapshots=3)
    for s in traj.snapshots:
        assert np.all(s.values == 0.0)


def test_simulate_mass_conservation_tight():
    g = make_grid(15.0, 512)
    u0 = gaussian_bump(g, 1.0, width=0.8)
    traj = simulate_density(u0, ModelParams(1.8, 0.4), 2.0, n_snapshots=9)
    masses = [d.mass for d in traj.diagnostics]
    assert max(abs(m - masses[0]) / masses[0] for m in masses) < 1e-8


def test_simulate_snapshots_nonnegative_and_increasing_times():
    g = make_grid(15.0, 512)
    u0 = gaussian_bump(g, 1.0, width=0.8)
    traj = simulate_density(u0, ModelParams(1.5, 0.5), 1.0, n_snapshots=6)
    assert np.all(np.diff(traj.times) > 0)
    for s in traj.snapshots:
        assert np.min(s.values) >= 0.0


def test_simulate_sup_decay_rate_matches_smoothing_exponent():
    """Sup-norm over t in [1, 10]: log-log slope близ -1/((m-1)+2(1-s)).

    Oracle: least-squares slope of the stored diagnostics; the exponent for
    m=1.5, s=0.5 is 2/3, and a 10% desk-scale agreement is required.
    """
    g = make_grid(30.0, 1024)
    u0 = mollified_dirac(g, mass=1.0)
    p = ModelParams(1.5, 0.5)
    snaps = np.concatenate([[0.0], np.geomspace(0.5, 10.0, 17)])
    traj = simulate_density(u0, p, 10.0, snap_times=snaps)
    sel = traj.times >= 1.0
    sups = np.array([d.sup_norm for d in traj.diagnostics])[sel]
    slope = np.polyfit(np.log(traj.times[sel]), np.log(sups), 1)[0]
    gamma = 1.0 / ((1.5 - 1.0) + 2.0 * (1.0 - 0.5))
    assert abs(slope + gamma) / gamma < 0.10


def test_scaling_commutation_lambda_two():
    """Rescaling u -> lam u(lam x) commutes with evolution to t/lam^b.

    Oracle: evolve both routes and compare in relative L1; b = (m-1)+2-2s.
    """
    lam, m, s, t = 2.0, 2.0, 0.5, 0.5
    b = (m - 1.0) + 2.0 - 2.0 * s
    g = make_grid(20.0, 1024)
    p = ModelParams(m, s)
    u0 = gaussian_bump(g, 1.0, width=1.0)
    direct = simulate_density(u0, p, t, snap_times=[0.0, t]).snapshots[-1]
    squeezed = Field(g, lam * np.interp(lam * g.nodes, g.nodes, u0.values,
                                        left=0.0, right=0.0))
    other = simulate_density(squeezed, p, t / lam**b,
                             snap_times=[0.0, t / lam**b]).snapshots[-1]
    target = lam * np.interp(lam * g.nodes, g.nodes, direct.values,
                             left=0.0, right=0.0)
    rel = np.abs(other.values - target).sum() / np.abs(target).sum()
    assert rel < 0.02


def test_mollified_pressure_route_approaches_spectral():
    """The eps > 0 pressure path converges to the Riesz gradient."""
    from nlpme.evolve import pressure_gradient

    g = make_grid(10.0, 512)
    u = gaussian_bump(g, 1.0, width=0.8)
    ref = pressure_gradient(u, ModelParams(2.0, 0.5)).values
    errs = []
    for eps in (0.2, 0.05):
        w = pressure_gradient(u, ModelParams(2.0, 0.5, eps=eps)).values
        errs.append(np.sqrt(g.spacing * np.sum((w - ref) ** 2)))
    # first order in eps at s = 0.5: a quarter of the eps should give about
    # a quarter of the error
    assert errs[1] < 0.35 * errs[0]
    assert errs[1] < 2e-2


def test_rk2_method_runs_conservatively():
    """The optional Heun stepper conserves mass, stays nonnegative, and
    tracks the Euler reference at first-order distance."""
    g = make_grid(15.0, 512)
    u0 = gaussian_bump(g, 1.0, width=0.8)
    p = ModelParams(2.0, 0.5)
    euler = simulate_density(u0, p, 1.0, snap_times=[0.0, 1.0])
    heun = simulate_density(u0, p, 1.0, snap_times=[0.0, 1.0], method="rk2")
    masses = [d.mass for d in heun.diagnostics]
    assert max(abs(m - masses[0]) / masses[0] for m in masses) < 1e-8
    assert np.min(heun.snapshots[-1].values) >= 0.0
    gap = np.abs(heun.snapshots[-1].values - euler.snapshots[-1].values).sum()
    gap *= g.spacing
    assert gap < 0.02
    with pytest.raises(ValueError):
        simulate_density(u0, p, 0.1, method="rk3")


def test_clipping_budget_untouched_on_degenerate_fronts():
    """m < 2 runs must not burn the clipping budget at starved front cells."""
    g = make_grid(15.0, 512)
    u0 = gaussian_bump(g, 1.0, width=0.6)
    traj = simulate_density(u0, ModelParams(1.5, 0.5), 2.0, n_snapshots=5)
    assert traj.clipped_mass < 1e-8


# --- continuation --------------------------------------------------------


def test_continuation_single_zero_entry_matches_plain_run():
    g = make_grid(15.0, 256)
    u0 = gaussian_bump(g, 1.0, width=1.0)
    p = ModelParams(2.0, 0.5)
    final, rep = continuation_limit(u0, p, [(0.0, 0.0, 0.0)], t_end=0.5)
    snap_times = sorted(set(np.linspace(0.0, 0.5, 5)) | {0.5})
    ref = simulate_density(u0, p, 0.5, snap_times=snap_times)
    assert np.array_equal(final.snapshots[-1].values, ref.snapshots[-1].values)
    assert rep.distances == []


def test_continuation_distances_decrease():
    g = make_grid(15.0, 512)
    u0 = gaussian_bump(g, 1.0, width=1.0)
    p = ModelParams(2.0, 0.5)
    schedule = [(0.1, 0.01, 0.01), (0.05, 0.005, 0.005), (0.025, 0.0025, 0.0025)]
    final, rep = continuation_limit(u0, p, schedule, t_end=1.0)
    assert rep.decreasing
    assert len(rep.distances) == 2
    m0 = g.spacing * u0.values.sum()
    assert max(abs(m - m0) / m0 for m in rep.masses) < 1e-8


def test_continuation_rejects_non_monotone_schedule():
    g = make_grid(15.0, 256)
    u0 = gaussian_bump(g, 1.0, width=1.0)
    p = ModelParams(2.0, 0.5)
    with pytest.raises(ValueError):
        continuation_limit(u0, p, [(0.1, 0.01, 0.01), (0.2, 0.005, 0.005)])


# --- FPME ----------------------------------------------------------------


def test_fpme_constant_is_stationary():
    g = make_grid(10.0, 128)
    u = Field(g, np.full(g.n, 0.4))
    out = step_fpme(u, 2.0, 0.5, 1e-3)
    assert np.max(np.abs(out.values - 0.4)) < 1e-15


def test_fpme_parameter_validation():
    g = make_grid(10.0, 128)
    u = Field(g, np.zeros(g.n))
    with pytest.raises(ValueError):
        step_fpme(u, 0.0, 0.5, 1e-3)
    with pytest.raises(ValueError):
        step_fpme(u, 2.0, 1.0, 1e-3)


def test_fpme_linear_matches_multiplier_semigroup():
    """q = 1 with small fixed steps against the exact multiplier evolution."""
    g = make_grid(10.0, 256)
    u = gaussian_bump(g, 1.0, width=0.8)
    sigma = 0.5
    dt = 2e-6
    steps = 50
    v = u.copy()
    for _ in range(steps):
        v = step_fpme(v, 1.0, sigma, dt)
    exact = fractional_heat_evolution(u, sigma, dt * steps)
    err = np.sqrt(g.spacing * np.sum((v.values - exact.values) ** 2))
    assert err < 1e-8


def test_fpme_mass_conserved_per_step():
    g = make_grid(10.0, 256)
    u = gaussian_bump(g, 1.0, width=0.8)
    dt = fpme_cfl_dt(u, 2.0, 0.5)
    out = step_fpme(u, 2.0, 0.5, dt)
    m0 = g.spacing * u.values.sum()
    m1 = g.spacing * out.values.sum()
    assert abs(m1 - m0) / m0 < 1e-10


def test_fpme_long_run_decay_exponent():
    """Sup decay of the q=2 flow matches beta1 = 1/(q-1+2 sigma) = 1/2."""
    g = make_grid(40.0, 1024)
    u = gaussian_bump(g, 1.0, width=0.5)
    ts, sups = [], []
    t = 0.0
    for tn in np.geomspace(1.0, 30.0, 10):
        u, _ = simulate_fpme(u, 2.0, 0.5, tn, t_start=t)
        t = tn
        ts.append(t)
        sups.append(float(u.values.max()))
    slope = np.polyfit(np.log(ts), np.log(sups), 1)[0]
    assert abs(slope + 0.5) < 0.05
