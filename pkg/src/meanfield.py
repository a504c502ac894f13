"""
Closed-form mean-field analytics of the spherically constrained filament gas.

All functions are pure and take the non-extensively scaled parameters
(α′ = α/N, β′ = βN). The multiplier λ = iτ + 2μ lives on the open interval
(0, 2μ); evaluations outside it raise DomainError instead of returning NaN.
"""

import math

import numpy as np

from src.errors import DomainError, NumericalInstabilityError
from src.schemas.data_schema import MeanFieldResult, ScaledParams


def _check_multiplier(lam: float, p: ScaledParams, upper: bool = True) -> None:
    if not lam > 0 or (upper and not lam < 2.0 * p.mu):
        raise DomainError(f"lambda={lam!r} outside (0, 2*mu={2.0 * p.mu!r})")


def rsq_2d(beta_p: float, mu: float) -> float:
    """Low-temperature mean-square radius of the straight (2D) point-vortex gas."""
    if not (beta_p > 0 and mu > 0):
        raise DomainError(f"rsq_2d needs beta_p > 0 and mu > 0, got {beta_p!r}, {mu!r}")
    return beta_p / (4.0 * mu)


def _surd_terms(p: ScaledParams) -> tuple[float, float]:
    """b = β′^{3/2}√α′ and s = √(b² + 32μ), the pieces of the stationarity quadratic."""
    b = p.beta_p * math.sqrt(p.stiffness)
    s = math.sqrt(b * b + 32.0 * p.mu)
    return b, s


def saddle_eta(p: ScaledParams) -> float:
    """
    Saddle point η of the ground free energy.

    With u = √λ the stationarity condition is 2u² + b·u − 4μ = 0, whose positive
    root, multiplied through by its conjugate, is u = 8μ/(s + b). Squaring gives
    η = 2μ − β′(−β′²α′ + √(β′⁴α′² + 32α′β′μ))/8 without subtracting nearly equal
    numbers.
    """
    b, s = _surd_terms(p)
    u = 8.0 * p.mu / (s + b)
    eta = u * u
    if not 0.0 < eta < 2.0 * p.mu:
        raise NumericalInstabilityError(
            f"saddle point eta={eta!r} left (0, 2mu) for {p}"
        )
    return eta


def rsq_from_multiplier(lam: float, p: ScaledParams) -> float:
    """R² = β′/(4(μ − λ/2)), the radius that makes ∂f/∂R² vanish."""
    _check_multiplier(lam, p)
    return p.beta_p / (4.0 * (p.mu - 0.5 * lam))


def rsq_3d(p: ScaledParams) -> float:
    """Explicit quasi-2D mean-square radius."""
    a_b2 = p.alpha_p * p.beta_p * p.beta_p
    surd = math.sqrt(a_b2 * a_b2 + 32.0 * p.alpha_p * p.beta_p * p.mu)
    return (a_b2 + surd) / (8.0 * p.stiffness * p.mu)


def relative_error(p: ScaledParams) -> float:
    """
    E = (R² − R²_2D)/R²_2D.

    With x = 32μ/(α′β′³) this is (√(1 + x) − 1)/2, evaluated as x/(2(√(1 + x) + 1)).
    """
    x = 32.0 * p.mu / (p.alpha_p * p.beta_p**3)
    return x / (2.0 * (math.sqrt(1.0 + x) + 1.0))


def ground_free_energy(lam: float, p: ScaledParams) -> float:
    """Free energy per unit length in the L → ∞ limit."""
    _check_multiplier(lam, p)
    return (
        0.25 * p.beta_p
        + math.sqrt(lam / p.stiffness)
        - 0.25 * p.beta_p * math.log(p.beta_p / (4.0 * (p.mu - 0.5 * lam)))
    )


def _log_one_minus_exp(x: float) -> float:
    """log(1 − e^{−x}) for x > 0."""
    if x > math.log(2.0):
        return math.log1p(-math.exp(-x))
    gap = -math.expm1(-x)
    if gap <= 0.0:
        raise NumericalInstabilityError(
            f"omega*L={x!r} too small, log(1 - exp(-omega*L)) overflows"
        )
    return math.log(gap)


def oscillator_log_partition(lam: float, p: ScaledParams) -> float:
    """ln h for periodic oscillator paths, h = e^{−ωL}/(e^{−ωL} − 1)², ω = √(λ/(α′β′))."""
    _check_multiplier(lam, p, upper=False)
    omega_l = math.sqrt(lam / p.stiffness) * p.L
    return -omega_l - 2.0 * _log_one_minus_exp(omega_l)


def free_energy_finite_L(lam: float, r2: float, p: ScaledParams) -> float:
    """Finite-length free energy as a function of the multiplier and of R²."""
    _check_multiplier(lam, p, upper=False)
    if not r2 > 0:
        raise DomainError(f"r2 must be positive, got {r2!r}")
    return (
        (p.mu - 0.5 * lam) * p.L * r2
        - 0.25 * p.beta_p * p.L * math.log(r2)
        - oscillator_log_partition(lam, p)
    )


def dfree_energy_dr2(lam: float, r2: float, p: ScaledParams) -> float:
    """∂f/∂R² = (μ − λ/2)L − Lβ′/(4R²)."""
    if not r2 > 0:
        raise DomainError(f"r2 must be positive, got {r2!r}")
    return (p.mu - 0.5 * lam) * p.L - 0.25 * p.L * p.beta_p / r2


def free_energy_lambda(lam: float, p: ScaledParams) -> float:
    """Finite-length free energy with R² eliminated through its stationarity relation."""
    _check_multiplier(lam, p)
    omega_l = math.sqrt(lam / p.stiffness) * p.L
    quarter_bl = 0.25 * p.beta_p * p.L
    return (
        quarter_bl
        + omega_l
        + 2.0 * _log_one_minus_exp(omega_l)
        - quarter_bl * math.log(p.beta_p / (4.0 * (p.mu - 0.5 * lam)))
    )


def beta0(alpha_p: float, mu: float) -> float:
    """Scaled inverse temperature at which the quasi-2D radius turns upward."""
    if not (alpha_p > 0 and mu > 0):
        raise DomainError(f"beta0 needs positive inputs, got {alpha_p!r}, {mu!r}")
    return np.cbrt(4.0 * mu / alpha_p).item()


def beta_for_error(E: float, alpha_p: float, mu: float) -> float:
    """β′ at which the quasi-2D radius exceeds the 2D one by the relative error E."""
    if not E > 0:
        raise DomainError(f"relative error must be positive, got {E!r}")
    if not (alpha_p > 0 and mu > 0):
        raise DomainError(f"beta_for_error needs positive inputs, got {alpha_p!r}, {mu!r}")
    return np.cbrt(8.0 * mu / (alpha_p * E * (E + 1.0))).item()


def solve(p: ScaledParams) -> MeanFieldResult:
    eta = saddle_eta(p)
    return MeanFieldResult(
        eta=eta,
        f_grnd=ground_free_energy(eta, p),
        r2_3d=rsq_3d(p),
        r2_2d=rsq_2d(p.beta_p, p.mu),
        beta0_p=beta0(p.alpha_p, p.mu),
        mu=p.mu,
    )
