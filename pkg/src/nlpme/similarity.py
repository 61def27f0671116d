"""Self-similar exponent algebra, profile equations, and profile maps.

The nonlocal-pressure flow u_t = div(u^(m-1) grad (-Delta)^(-s) u) admits
self-similar solutions t^(-N*beta) phi(x t^(-beta)) with
beta = 1/(N(m-1) + 2 - 2s); the companion fractional porous medium
equation u_t + (-Delta)^sigma u^q = 0 has Barenblatt profiles with rate
beta1 = 1/(N(q-1) + 2 sigma).  An algebraic change of variables carries
profiles of one family into the other, and for m > 2 a further power map
reaches the quadratic-factor companion equation
v_t + v^2 (-Delta)^(1-s) v^(1/(m-2)) = 0.

Profile residuals discretize each stationary profile equation with the
spectral operators; the drift divergence is expanded by the product rule
(N phi + y phi') so that only periodic factors ever see a spectral
derivative, and residuals are reported on the central part of the box
where the truncation of the y-weighted terms is immaterial.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .grid import Field, FracOrder
from .operators import frac_laplacian, riesz_gradient, spectral_derivative

__all__ = [
    "ExponentSet",
    "ProfileFamily",
    "ProfileKind",
    "scaling_exponents",
    "fpme_rate",
    "fpme_parameter_map",
    "FpmeTransformResult",
    "transform_fpme_profile",
    "HighMTransformResult",
    "transform_profile_high_m",
    "profile_residual",
    "residual_report",
    "extract_profile",
]


@dataclass(frozen=True)
class ExponentSet:
    """Scaling exponents of the nonlocal-pressure flow for given (m, s, N, p).

    beta2 = 1/(N(m-1)+2-2s) and alpha2 = N*beta2 govern the mass-conserving
    self-similar form; b = 1/beta2 is the time-rescaling power; gamma_p and
    delta_p are the L^p -> L^inf smoothing exponents.
    """

    m: float
    s: float
    N: int
    p: float
    alpha2: float
    beta2: float
    b: float
    gamma_p: float
    delta_p: float


def scaling_exponents(m: float, s: float, N: int = 1, p: float = 1.0) -> ExponentSet:
    """Exponent algebra for the nonlocal-pressure model.

    Requires m > 1, 0 < s < 1, p >= 1.  beta2 * b = 1 by construction and
    gamma_p * ((m-1)N + 2p(1-s)) = N.
    """
    if not m > 1.0:
        raise ValueError(f"m must exceed 1, got {m}")
    if not 0.0 < s < 1.0:
        raise ValueError(f"s must lie in (0, 1), got {s}")
    if p < 1.0:
        raise ValueError(f"p must be >= 1, got {p}")
    if N < 1:
        raise ValueError(f"N must be a positive integer, got {N}")
    b = N * (m - 1.0) + 2.0 - 2.0 * s
    denom_p = (m - 1.0) * N + 2.0 * p * (1.0 - s)
    return ExponentSet(
        m=m, s=s, N=N, p=p,
        alpha2=N / b,
        beta2=1.0 / b,
        b=b,
        gamma_p=N / denom_p,
        delta_p=2.0 * p * (1.0 - s) / denom_p,
    )


def fpme_rate(q: float, sigma: float, N: int = 1) -> float:
    """Barenblatt rate beta1 = 1/(N(q-1) + 2 sigma) of the FPME.

    Defined (positive) only above the critical exponent q > (N - 2 sigma)/N.
    """
    if not 0.0 < sigma < 1.0:
        raise ValueError(f"sigma must lie in (0, 1), got {sigma}")
    if q <= (N - 2.0 * sigma) / N:
        raise ValueError(
            f"q={q} is at or below the critical exponent {(N - 2.0 * sigma) / N}"
        )
    return 1.0 / (N * (q - 1.0) + 2.0 * sigma)


class ProfileFamily(enum.Enum):
    MASS_CONSERVING = "mass-conserving"   # forward self-similar, rate beta2
    EXTINCTION = "extinction"             # backward (finite time), rate -beta2
    ETERNAL = "eternal"                   # exponential, free rate c
    FPME = "fpme"                         # Barenblatt of the FPME, rate beta1
    COMPANION = "companion"               # quadratic-factor model, rate b


@dataclass(frozen=True)
class ProfileKind:
    """A profile equation selector plus its rate parameter."""

    family: ProfileFamily
    rate: float

    def __post_init__(self):
        if not self.rate > 0.0:
            raise ValueError(f"profile rate must be positive, got {self.rate}")


def mass_conserving_kind(m: float, s: float, N: int = 1) -> ProfileKind:
    """Forward self-similar kind; requires m > (N-2+2s)/N for a positive rate."""
    if m <= (N - 2.0 + 2.0 * s) / N:
        raise ValueError(
            f"mass-conserving self-similarity needs m > {(N - 2.0 + 2.0 * s) / N}"
        )
    return ProfileKind(ProfileFamily.MASS_CONSERVING, scaling_exponents(m, s, N).beta2)


def extinction_kind(m: float, s: float, N: int = 1) -> ProfileKind:
    """Finite-time-extinction kind; requires m < (N-2+2s)/N for a positive rate."""
    if m >= (N - 2.0 + 2.0 * s) / N:
        raise ValueError(
            f"extinction self-similarity needs m < {(N - 2.0 + 2.0 * s) / N}"
        )
    rate = 1.0 / (N * (1.0 - m) + 2.0 * s - 2.0)
    return ProfileKind(ProfileFamily.EXTINCTION, rate)


def fpme_parameter_map(q: float, sigma: float, N: int = 1):
    """Raw parameter correspondence (q, sigma) -> (m, s, family).

    m = (2q-1)/q, s = 1 - sigma; the family is selected by the position of
    q relative to N/(N+2 sigma).  No range restriction is applied here: the
    caller is responsible for checking that m lands in (1, infinity) before
    using it with the evolution solvers.
    """
    if q <= 0.0:
        raise ValueError(f"q must be positive, got {q}")
    if not 0.0 < sigma < 1.0:
        raise ValueError(f"sigma must lie in (0, 1), got {sigma}")
    m = (2.0 * q - 1.0) / q
    s = 1.0 - sigma
    q_star = N / (N + 2.0 * sigma)
    if q > q_star:
        fam = ProfileFamily.MASS_CONSERVING
    elif q < q_star:
        fam = ProfileFamily.EXTINCTION
    else:
        fam = ProfileFamily.ETERNAL
    return m, s, fam


@dataclass
class FpmeTransformResult:
    profile: Field
    m: float
    s: float
    kind: ProfileKind
    prefactor: float


def transform_fpme_profile(
    phi1: Field, q: float, sigma: float, N: int = 1, c: float = 1.0
) -> FpmeTransformResult:
    """Map an FPME Barenblatt profile to a nonlocal-pressure profile.

    The image profile is (beta1/rate)^(q/(1-q)) * phi1^q with
    m = (2q-1)/q and s = 1 - sigma.  q = 1 makes the prefactor exponent
    degenerate, and any q <= 1 lands at m <= 1, outside the range of the
    pressure model; both are rejected (a documented exclusion: on the
    borderline q = N/(N+2 sigma) the image m = (N-2+2s)/N never exceeds 1).
    For the eternal borderline the free rate c is used with prefactor
    (beta1/c)^(N/(2 sigma)) and power N/(N+2 sigma).
    """
    if np.any(phi1.values < 0):
        raise ValueError("transform_fpme_profile requires a nonnegative profile")
    if q == 1.0:
        raise ValueError("q = 1 degenerates the prefactor exponent q/(1-q)")
    beta1 = fpme_rate(q, sigma, N)
    m, s, fam = fpme_parameter_map(q, sigma, N)
    if m <= 1.0:
        raise ValueError(
            f"image exponent m={m:.6g} <= 1 is outside the pressure model's range "
            f"(q={q}); only q > 1 produces admissible profiles"
        )
    if fam is ProfileFamily.MASS_CONSERVING:
        kind = mass_conserving_kind(m, s, N)
        pref = (beta1 / kind.rate) ** (q / (1.0 - q))
        power = q
    elif fam is ProfileFamily.EXTINCTION:
        kind = extinction_kind(m, s, N)
        pref = (beta1 / kind.rate) ** (q / (1.0 - q))
        power = q
    else:
        kind = ProfileKind(ProfileFamily.ETERNAL, c)
        pref = (beta1 / c) ** (N / (2.0 * sigma))
        power = N / (N + 2.0 * sigma)
    profile = phi1.with_values(pref * phi1.values**power)
    return FpmeTransformResult(profile=profile, m=m, s=s, kind=kind, prefactor=pref)


@dataclass
class HighMTransformResult:
    profile: Field
    mhat: float
    b: float
    c: float


def transform_profile_high_m(
    phi: Field, m: float, beta: float, s: float, N: int = 1
) -> HighMTransformResult:
    """Map an m > 2 pressure-model profile to the companion equation.

    With mhat = 1/(m-2), b = 1/(N(mhat+1) + 2(1-s)) and
    c = (beta/b)^(1/(m-1)), the companion profile is psi = (phi/c)^(1/mhat),
    i.e. (phi/c)^(m-2).  Nonnegative input is required; the inverse map is
    phi = c * psi^mhat.
    """
    if m <= 2.0:
        raise ValueError(f"the companion transformation needs m > 2, got {m}")
    if np.any(phi.values < 0):
        raise ValueError("profile must be nonnegative on the evaluation set")
    mhat = 1.0 / (m - 2.0)
    b = 1.0 / (N * (mhat + 1.0) + 2.0 * (1.0 - s))
    c = (beta / b) ** (1.0 / (m - 1.0))
    psi = phi.with_values((phi.values / c) ** (m - 2.0))
    return HighMTransformResult(profile=psi, mhat=mhat, b=b, c=c)


def _drift_divergence(phi: Field, N: int) -> np.ndarray:
    """div(y phi) expanded as N phi + y phi' with a spectral phi'.

    Multiplying by y before differentiating would feed the sawtooth jump of
    y at the box wrap into the FFT; the product rule keeps every
    differentiated factor periodic.
    """
    dphi = spectral_derivative(phi).values
    return N * phi.values + phi.grid.nodes * dphi


def profile_residual(
    phi: Field, kind: ProfileKind, m_or_q: float, s_or_sigma: float,
    N: int = 1, interior: float = 0.6,
) -> Field:
    """Pointwise residual of the selected stationary profile equation.

    Residuals (zero for an exact profile):

    * MASS_CONSERVING:  div(phi^(m-1) grad (-Delta)^(-s) phi) + rate*div(y phi)
    * EXTINCTION:       same nonlinear term - rate*div(y phi)
    * ETERNAL:          same nonlinear term + rate*div(y phi)
    * FPME:             (-Delta)^sigma (phi^q) - rate*div(y phi)
    * COMPANION:        phi^2 (-Delta)^(1-s) phi^mhat - rate*(N phi - y phi')

    Cells outside the central `interior` fraction of the box are masked to
    zero: the y-weighted drift is meaningless near the truncation boundary.
    """
    fam = kind.family
    x = phi.grid.nodes
    if fam in (ProfileFamily.MASS_CONSERVING, ProfileFamily.EXTINCTION,
               ProfileFamily.ETERNAL):
        m, s = m_or_q, s_or_sigma
        w = riesz_gradient(phi, s)
        flux = phi.with_values(np.maximum(phi.values, 0.0) ** (m - 1.0) * w.values)
        nonlinear = spectral_derivative(flux).values
        drift = _drift_divergence(phi, N)
        sign = -1.0 if fam is ProfileFamily.EXTINCTION else 1.0
        res = nonlinear + sign * kind.rate * drift
    elif fam is ProfileFamily.FPME:
        q, sigma = m_or_q, s_or_sigma
        nonlinear = frac_laplacian(
            phi.with_values(np.maximum(phi.values, 0.0) ** q), FracOrder(sigma)
        ).values
        res = nonlinear - kind.rate * _drift_divergence(phi, N)
    elif fam is ProfileFamily.COMPANION:
        mhat, s = m_or_q, s_or_sigma
        lap = frac_laplacian(
            phi.with_values(np.maximum(phi.values, 0.0) ** mhat), FracOrder(1.0 - s)
        ).values
        dphi = spectral_derivative(phi).values
        res = phi.values**2 * lap - kind.rate * (N * phi.values - x * dphi)
    else:  # pragma: no cover
        raise ValueError(f"unknown profile family {fam}")
    mask = phi.grid.interior_mask(interior)
    return phi.with_values(np.where(mask, res, 0.0))


@dataclass
class ResidualReport:
    residual: Field
    term_scale: float      # max magnitude of the individual equation terms
    interior_max: float    # max |residual| on the interior window
    relative: float        # interior_max / term_scale


def residual_report(
    phi: Field, kind: ProfileKind, m_or_q: float, s_or_sigma: float,
    N: int = 1, interior: float = 0.6,
) -> ResidualReport:
    """Residual plus a normalization by the size of the equation's terms."""
    res = profile_residual(phi, kind, m_or_q, s_or_sigma, N, interior)
    mask = phi.grid.interior_mask(interior)
    fam = kind.family
    if fam is ProfileFamily.FPME:
        nonlinear = frac_laplacian(
            phi.with_values(np.maximum(phi.values, 0.0) ** m_or_q),
            FracOrder(s_or_sigma),
        ).values
    elif fam is ProfileFamily.COMPANION:
        nonlinear = phi.values**2 * frac_laplacian(
            phi.with_values(np.maximum(phi.values, 0.0) ** m_or_q),
            FracOrder(1.0 - s_or_sigma),
        ).values
    else:
        w = riesz_gradient(phi, s_or_sigma)
        nonlinear = spectral_derivative(
            phi.with_values(np.maximum(phi.values, 0.0) ** (m_or_q - 1.0) * w.values)
        ).values
    drift = kind.rate * _drift_divergence(phi, N)
    scale = max(
        float(np.max(np.abs(nonlinear[mask]))), float(np.max(np.abs(drift[mask])))
    )
    interior_max = float(np.max(np.abs(res.values)))
    return ResidualReport(
        residual=res,
        term_scale=scale,
        interior_max=interior_max,
        relative=interior_max / scale if scale > 0 else 0.0,
    )


def extract_profile(traj, ex: ExponentSet, t: float) -> Field:
    """Self-similar profile y -> t^alpha2 * u(y t^beta2, t) from a run.

    The snapshot at time t is taken from the trajectory (linear time
    interpolation), resampled at y * t^beta2 by linear interpolation in
    space, and rescaled by the single factor that restores the snapshot's
    exact mass (point sampling alone drifts the quadrature mass at order
    h^2).  At t = 1 the extraction is the identity.
    """
    snap = traj.snapshot_at(t)
    grid = snap.grid
    pos = grid.nodes * t**ex.beta2
    vals = t**ex.alpha2 * np.interp(
        pos, grid.nodes, snap.values, left=snap.values[0], right=snap.values[-1]
    )
    mass_snap = grid.spacing * snap.values.sum()
    mass_prof = grid.spacing * vals.sum()
    if mass_prof > 0.0 and mass_snap > 0.0:
        vals = vals * (mass_snap / mass_prof)
    return snap.with_values(vals)
