"""
Independent verifiers for the analytic module and the sampler.

Nothing here shares code with the quantities it checks: energies are recomputed
with explicit loops, the saddle point is found numerically, Gaussian statistics
come from the circulant eigenvalues, and the two-vortex average is integrated
by quadrature.
"""

import math
from typing import Callable, Iterable, List

import numpy as np
from scipy import integrate, optimize

from src import meanfield
from src.errors import DomainError, SolverError
from src.logger_config import app_logger
from src.schemas.data_schema import (
    CirculantSpec,
    EnergyBreakdown,
    FilamentEnsemble,
    ModelParams,
    ScaledParams,
)


def circulant_spec(p: ModelParams) -> CirculantSpec:
    """Precision of the free trapped filament, per planar component."""
    return CirculantSpec.for_model(p)


def free_filament_bead_variance(p: ModelParams) -> float:
    """⟨|ψ_j|²⟩ of the free trapped filament; factor 2 for the two components."""
    eig = circulant_spec(p).eigenvalues()
    return 2.0 * float(np.sum(1.0 / eig)) / p.n_segments


def free_filament_lag_covariance(p: ModelParams, lag: int = 1) -> float:
    """⟨ψ_j · ψ_{j+lag}⟩ of the free trapped filament."""
    spec = circulant_spec(p)
    q = np.arange(spec.M)
    weights = np.cos(2.0 * np.pi * q * lag / spec.M)
    return 2.0 * float(np.sum(weights / spec.eigenvalues())) / spec.M


def _require_two_point_vortices(p: ModelParams) -> None:
    if p.n_filaments != 2 or p.n_segments != 1:
        raise DomainError(
            f"two-vortex closed form needs N=2, M=1, got N={p.n_filaments}, M={p.n_segments}"
        )


def two_vortex_r2_closed_form(p: ModelParams) -> float:
    """
    ⟨R²_MC⟩ for two single-bead vortices, weight |ψ₁−ψ₂|^{βL} e^{−μL(|ψ₁|²+|ψ₂|²)}.

    The centre of mass contributes 1/(2μL), the separation (βL + 2)/(4μL).
    """
    _require_two_point_vortices(p)
    return (p.beta * p.length + 4.0) / (4.0 * p.mu * p.length)


def _radial_moment_ratio(power: float) -> float:
    """∫ s^{power+3} e^{−s²} ds / ∫ s^{power+1} e^{−s²} ds by quadrature around the peak."""
    peak = math.sqrt(0.5 * (power + 1.0))
    shift = (power + 1.0) * math.log(peak) - peak * peak
    upper = peak + 30.0

    def integrand(s: float, exponent: float) -> float:
        if s <= 0.0:
            return 0.0
        return math.exp(exponent * math.log(s) - s * s - shift)

    opts = dict(points=[peak], epsabs=0.0, epsrel=1e-12, limit=400)
    num, _ = integrate.quad(integrand, 0.0, upper, args=(power + 3.0,), **opts)
    den, _ = integrate.quad(integrand, 0.0, upper, args=(power + 1.0,), **opts)
    return num / den


def two_vortex_r2_quadrature(p: ModelParams) -> float:
    """The same average as ``two_vortex_r2_closed_form``, by 1-D radial quadrature."""
    _require_two_point_vortices(p)
    mu_l = p.mu * p.length
    # centre c = (ψ₁+ψ₂)/2 has weight e^{−2μL|c|²}; separation r has |r|^{βL} e^{−μL|r|²/2}
    centre = _radial_moment_ratio(0.0) / (2.0 * mu_l)
    separation = _radial_moment_ratio(p.beta * p.length) / (0.5 * mu_l)
    return centre + 0.25 * separation


def ground_free_energy_derivative(lam: float, p: ScaledParams) -> float:
    """d f_grnd/dλ = 1/(2√(λα′β′)) − β′/(8(μ − λ/2)); strictly decreasing on (0, 2μ)."""
    return 0.5 / math.sqrt(lam * p.stiffness) - p.beta_p / (8.0 * (p.mu - 0.5 * lam))


def _bracket(p: ScaledParams) -> tuple[float, float]:
    eps = 1e-9 * p.mu
    low, high = eps, 2.0 * p.mu - eps
    # f_grnd is concave, so the derivative must start positive
    while ground_free_energy_derivative(low, p) <= 0.0:
        low *= 1e-3
        if low < 1e-300:
            raise SolverError(f"no sign change of df/dlambda near 0 for {p}")
    if ground_free_energy_derivative(high, p) >= 0.0:
        raise SolverError(f"no sign change of df/dlambda near 2mu for {p}")
    return low, high


def minimize_ground_free_energy(p: ScaledParams, method: str = "bisection") -> float:
    """
    Numeric saddle point of the ground free energy over λ ∈ (0, 2μ).

    Along the real axis f_grnd is concave and the saddle is its unique stationary
    point. ``bisection`` brackets the sign change of df/dλ; ``golden`` maximizes
    f over log λ by golden-section search.
    """
    low, high = _bracket(p)
    if method == "bisection":
        root, info = optimize.brentq(
            ground_free_energy_derivative,
            low,
            high,
            args=(p,),
            xtol=1e-300,
            rtol=4.0 * np.finfo(float).eps,
            full_output=True,
        )
        if not info.converged:
            raise SolverError(f"saddle bisection did not converge: {info.flag}")
        return root
    if method == "golden":
        res = optimize.minimize_scalar(
            lambda t: -meanfield.ground_free_energy(math.exp(t), p),
            bounds=(math.log(low), math.log(high)),
            method="bounded",
            options={"xatol": 1e-10},
        )
        if not res.success:
            raise SolverError(f"golden-section search failed: {res.message}")
        return math.exp(res.x)
    raise DomainError(f"unknown method {method!r}")


def alternate_saddle_root(p: ScaledParams) -> float:
    """The '−' branch 2μ − β′(−β′²α′ − √(…))/8, which always exceeds 2μ."""
    a_b2 = p.alpha_p * p.beta_p**2
    surd = math.sqrt(a_b2 * a_b2 + 32.0 * p.stiffness * p.mu)
    return 2.0 * p.mu + 0.125 * p.beta_p * (a_b2 + surd)


def stationarity_residual(
    p: ScaledParams, eta: float | None = None, rel_step: float = 1e-3
) -> float:
    """
    |λ·df/dλ| / |f| at λ = η from a five-point difference. Unchanged by a
    rescaling of λ.

    The step is a fraction of the distance from η to the nearer end of (0, 2μ), so
    the stencil stays inside the domain and resolves the log singularity at 2μ.
    """
    eta = meanfield.saddle_eta(p) if eta is None else eta
    step = rel_step * min(eta, 2.0 * p.mu - eta)

    def f(lam: float) -> float:
        return meanfield.ground_free_energy(lam, p)

    derivative = (
        8.0 * (f(eta + step) - f(eta - step)) - (f(eta + 2.0 * step) - f(eta - 2.0 * step))
    ) / (12.0 * step)
    return abs(eta * derivative) / abs(f(eta))


def free_energy_lambda_derivative(lam: float, p: ScaledParams) -> float:
    """d/dλ of the finite-length free energy with R² eliminated."""
    omega_l = math.sqrt(lam / p.stiffness) * p.L
    return p.L * (
        0.5 / (math.sqrt(lam * p.stiffness) * math.tanh(0.5 * omega_l))
        - p.beta_p / (8.0 * (p.mu - 0.5 * lam))
    )


def stationary_free_energy_lambda(p: ScaledParams) -> float:
    """Stationary point of the finite-length free energy by bisection."""
    low = 1e-9 * p.mu
    high = 2.0 * p.mu * (1.0 - 1e-12)
    while free_energy_lambda_derivative(low, p) <= 0.0:
        low *= 1e-3
        if low < 1e-300:
            raise SolverError(f"no finite-L stationary point found for {p}")
    return optimize.brentq(free_energy_lambda_derivative, low, high, args=(p,), xtol=1e-300)


def argmin_rsq_3d(alpha_p: float, mu: float, L: float = 10.0) -> float:
    """β′ minimizing the quasi-2D radius, by bounded search over log β′."""
    base = ScaledParams(alpha_p=alpha_p, beta_p=1.0, mu=mu, L=L)
    res = optimize.minimize_scalar(
        lambda t: math.log(meanfield.rsq_3d(base.with_beta(math.exp(t)))),
        bounds=(-40.0, 40.0),
        method="bounded",
        options={"xatol": 1e-11},
    )
    if not res.success:
        raise SolverError(f"rsq_3d minimization failed: {res.message}")
    return math.exp(res.x)


def recompute_energies(ens: FilamentEnsemble, p: ModelParams) -> EnergyBreakdown:
    """From-scratch O(N²M) evaluation with plain loops, for auditing caches."""
    beads = ens.beads
    n, m = beads.shape[0], beads.shape[1]
    self_sum = 0.0
    i_sum = 0.0
    for k in range(n):
        for j in range(m):
            nxt = beads[k, (j + 1) % m]
            dx = nxt[0] - beads[k, j, 0]
            dy = nxt[1] - beads[k, j, 1]
            self_sum += dx * dx + dy * dy
            i_sum += beads[k, j, 0] ** 2 + beads[k, j, 1] ** 2
    log_sum = 0.0
    for j in range(m):
        for k in range(n):
            for i in range(k + 1, n):
                dist = math.hypot(beads[i, j, 0] - beads[k, j, 0], beads[i, j, 1] - beads[k, j, 1])
                if dist == 0.0:
                    log_sum = -math.inf
                    break
                log_sum += math.log(dist)
    return EnergyBreakdown.from_terms(
        h_self=p.alpha * self_sum / (2.0 * p.delta),
        h_int=-p.delta * log_sum,
        i_n=p.delta * i_sum,
        params=p,
    )


def laplace_limit(
    f: Callable[[float], float], x0: float, bounds: tuple[float, float], n_values: Iterable[float]
) -> List[float]:
    """−(1/N) log ∫ e^{−N f(x)} dx for each N; tends to f(x₀) at the global minimum x₀."""
    f0 = f(x0)
    results = []
    for n in n_values:
        integral, _ = integrate.quad(
            lambda x: math.exp(-n * (f(x) - f0)), bounds[0], bounds[1], points=[x0], limit=400
        )
        results.append(f0 - math.log(integral) / n)
        app_logger.debug(f"Laplace check N={n}: {results[-1]!r} vs f(x0)={f0!r}")
    return results
