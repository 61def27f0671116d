"""Numerical laboratory for the porous medium equation with nonlocal pressure.

The density flow u_t = div(u^(m-1) grad (-Delta)^(-s) u) for m > 1 and
0 < s < 1 on a truncated periodic box, together with its regularized
approximation chain, the integrated one-dimensional form solved as a
monotone scheme, the self-similar exponent algebra with profile
transformations to the fractional porous medium equation, and diagnostics
that turn the flow's structural properties (conservation, monotone norms,
smoothing exponents, propagation speed, rescaled-family convergence) into
pass/fail checks.
"""

from .grid import Field, FracOrder, Grid1D, make_grid
from .evolve import (
    ContinuationReport,
    ModelParams,
    SimulationUnstable,
    Trajectory,
    cfl_dt,
    continuation_limit,
    fpme_cfl_dt,
    fpme_profile_by_rescaling,
    fractional_heat_evolution,
    pressure_gradient,
    simulate_density,
    simulate_fpme,
    step_density,
    step_fpme,
)
from .integrated import (
    BarrierParams,
    PrimitiveField,
    barrier_exponents,
    barrier_subsolution,
    contact_check,
    differentiate_primitive,
    heaviside_primitive,
    infinite_speed_witness,
    integrate_density,
    integrated_cfl_dt,
    make_barrier_bump,
    parabola_supersolution,
    simulate_integrated,
    step_integrated,
    subsolution_inequality_check,
)
from .operators import (
    frac_constant,
    frac_laplacian,
    half_order_energy,
    inv_laplacian_gradient,
    mollified_frac_laplacian,
    mollified_half_apply,
    mollified_symbol,
    neg_half_order_norm,
    riesz_gradient,
    spectral_derivative,
    spectral_laplacian,
)
from .similarity import (
    ExponentSet,
    ProfileFamily,
    ProfileKind,
    extract_profile,
    fpme_parameter_map,
    fpme_rate,
    profile_residual,
    residual_report,
    scaling_exponents,
    transform_fpme_profile,
    transform_profile_high_m,
)
from .diagnostics import (
    asymptotic_convergence,
    energy_monotonicity,
    finite_propagation_report,
    infinite_propagation_report,
    lp_norm,
    mass,
    rescaled_family,
    smoothing_fit,
    standard_checks,
    support_radius,
    tail_mass,
    weak_form_residual,
)

__version__ = "0.1.0"
