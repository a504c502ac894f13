"""
Self-check suite behind the ``verify`` subcommand.

Each check compares a production code path against an independent oracle and
returns a CheckResult; ``run_all`` runs them in order and logs every outcome.
"""

import itertools
import math
from typing import Callable, List

import numpy as np

from src import meanfield, observables, oracle
from src.logger_config import app_logger
from src.sampler import free_sampler, run_chain
from src.schemas.data_schema import CheckResult, ModelParams, SamplerConfig, ScaledParams

SADDLE_GRID_TOL = 1e-6
STATIONARITY_TOL = 1e-8
CONSISTENCY_TOL = 1e-10
LIMIT_2D_TOL = 1e-3
BETA0_TOL = 1e-4
ERROR_LOCUS_TOL = 1e-6
QUADRATURE_TOL = 1e-8
N_SIGMA = 3.0


def saddle_grid() -> List[ScaledParams]:
    """5 × 5 × 5 log-spaced points over α′ ∈ [1e3, 1e7], β′ ∈ [0.05, 50], μ ∈ [100, 1e4]."""
    return [
        ScaledParams(alpha_p=float(a), beta_p=float(b), mu=float(m))
        for a, b, m in itertools.product(
            np.geomspace(1e3, 1e7, 5), np.geomspace(0.05, 50.0, 5), np.geomspace(100.0, 1e4, 5)
        )
    ]


def check_saddle_agreement(perturb_eta: float = 0.0) -> CheckResult:
    worst = 0.0
    for p in saddle_grid():
        explicit = meanfield.saddle_eta(p) * (1.0 + perturb_eta)
        numeric = oracle.minimize_ground_free_energy(p)
        worst = max(worst, abs(explicit - numeric) / numeric)
    return CheckResult(
        "saddle agreement", worst <= SADDLE_GRID_TOL, worst, SADDLE_GRID_TOL, "125-point grid"
    )


def check_stationarity() -> CheckResult:
    worst = max(oracle.stationarity_residual(p) for p in saddle_grid())
    return CheckResult("stationarity", worst <= STATIONARITY_TOL, worst, STATIONARITY_TOL)


def check_radius_consistency() -> CheckResult:
    worst = 0.0
    for p in saddle_grid():
        direct = meanfield.rsq_3d(p)
        via_eta = meanfield.rsq_from_multiplier(meanfield.saddle_eta(p), p)
        worst = max(worst, abs(direct - via_eta) / direct)
    return CheckResult("radius consistency", worst <= CONSISTENCY_TOL, worst, CONSISTENCY_TOL)


def check_2d_limit() -> CheckResult:
    """R² → R²_2D as α′ grows, with the gap shrinking at least as fast as 1/√α′."""
    base = ScaledParams(alpha_p=1e4, beta_p=20.0, mu=2000.0)
    alphas = np.geomspace(1e4, 1e12, 9)
    errors = np.array([meanfield.relative_error(base.with_alpha(float(a))) for a in alphas])
    scaled = errors * np.sqrt(alphas)
    decreasing = bool(np.all(np.diff(errors) < 0) and np.all(np.diff(scaled) <= 0))
    stiff = base.with_alpha(1e12)
    recovered = meanfield.beta_for_error(meanfield.relative_error(stiff), stiff.alpha_p, stiff.mu)
    round_trip = abs(recovered - stiff.beta_p) / stiff.beta_p
    passed = decreasing and errors[0] <= LIMIT_2D_TOL and round_trip <= 1e-5
    return CheckResult(
        "2D limit",
        passed,
        float(errors[0]),
        LIMIT_2D_TOL,
        f"sqrt(alpha')*E <= {scaled.max():.2e}; beta round trip {round_trip:.1e}",
    )


def check_beta0_round_trip() -> CheckResult:
    worst = 0.0
    for alpha_p, mu in ((5e5, 2000.0), (1e5, 100.0), (1e3, 1e4), (1e7, 500.0)):
        numeric = oracle.argmin_rsq_3d(alpha_p, mu)
        worst = max(worst, abs(numeric - meanfield.beta0(alpha_p, mu)) / numeric)
    return CheckResult(
        "beta0 round trip", worst <= BETA0_TOL, worst, BETA0_TOL,
        f"beta0'(alpha'=5e5, mu=2000)={meanfield.beta0(5e5, 2000.0):.6g}",
    )


def check_error_locus() -> CheckResult:
    worst = 0.0
    alpha_p, mu = 5e5, 2000.0
    for target in (0.1, 0.5, 1.0, 2.0):
        beta_p = meanfield.beta_for_error(target, alpha_p, mu)
        achieved = meanfield.relative_error(ScaledParams(alpha_p=alpha_p, beta_p=beta_p, mu=mu))
        worst = max(worst, abs(achieved - target) / target)
    return CheckResult("error locus", worst <= ERROR_LOCUS_TOL, worst, ERROR_LOCUS_TOL)


def check_two_vortex_quadrature() -> CheckResult:
    worst = 0.0
    for beta in (0.1, 1.0, 10.0):
        p = ModelParams(n_filaments=2, n_segments=1, length=10.0, alpha=1.0, beta=beta, mu=2000.0)
        closed = oracle.two_vortex_r2_closed_form(p)
        worst = max(worst, abs(oracle.two_vortex_r2_quadrature(p) - closed) / closed)
    return CheckResult("two-vortex quadrature", worst <= QUADRATURE_TOL, worst, QUADRATURE_TOL)


def check_free_sampler(n_samples: int = 20_000, seed: int = 11) -> CheckResult:
    """Exact unconditional and conditional draws against the circulant statistics."""
    p = ModelParams(n_filaments=1, n_segments=16, length=10.0, alpha=1.0, beta=1.0, mu=1.0)
    rng = np.random.default_rng(seed)
    sampler = free_sampler(p)
    expected = oracle.free_filament_bead_variance(p)
    expected_lag = oracle.free_filament_lag_covariance(p, 1)

    worst = 0.0
    for conditional in (False, True):
        draws = np.empty((n_samples, p.n_segments, 2))
        for i in range(n_samples):
            if conditional:
                anchor = rng.normal(scale=math.sqrt(0.5 * expected), size=2)
                draws[i] = sampler.sample_conditional(anchor, rng)
            else:
                draws[i] = sampler.sample(rng)
        norms = np.einsum("sjc,sjc->sj", draws, draws).mean(axis=1)
        lag = np.einsum("sjc,sjc->s", draws, np.roll(draws, -1, axis=1)) / p.n_segments
        for values, target in ((norms, expected), (lag, expected_lag)):
            stderr = values.std(ddof=1) / math.sqrt(n_samples)
            worst = max(worst, abs(values.mean() - target) / stderr)
    return CheckResult(
        "free sampler vs circulant", worst <= N_SIGMA, worst, N_SIGMA, "deviation in standard errors"
    )


def _chain_deviation(p: ModelParams, cfg: SamplerConfig, target: float, seed: int) -> float:
    record = observables.aggregate(list(run_chain(p, cfg, seed)))
    stderr = record.std_errors["r2_mc"]
    if stderr == 0.0:
        return math.inf
    return abs(record.r2_mc - target) / stderr


def check_two_vortex_chain(seed: int = 5) -> CheckResult:
    cfg = SamplerConfig(
        translation_halfwidth=0.01,
        moves_per_sweep=10,
        burn_in_sweeps=1000,
        measure_interval=2,
        n_measurements=4096,
        equilibration_window=200,
        init_square_side=0.1,
    )
    worst = 0.0
    for beta in (0.1, 1.0):
        p = ModelParams(n_filaments=2, n_segments=1, length=10.0, alpha=1.0, beta=beta, mu=2000.0)
        worst = max(worst, _chain_deviation(p, cfg, oracle.two_vortex_r2_closed_form(p), seed))
    return CheckResult(
        "two-vortex chain", worst <= N_SIGMA, worst, N_SIGMA, "deviation in standard errors"
    )


def check_free_chain(seed: int = 7) -> CheckResult:
    p = ModelParams(n_filaments=1, n_segments=8, length=8.0, alpha=1.0, beta=1.0, mu=1.0)
    cfg = SamplerConfig(
        translation_halfwidth=0.5,
        moves_per_sweep=4,
        burn_in_sweeps=500,
        measure_interval=2,
        n_measurements=4096,
        equilibration_window=200,
        init_square_side=1.0,
    )
    deviation = _chain_deviation(p, cfg, oracle.free_filament_bead_variance(p), seed)
    return CheckResult(
        "free chain vs circulant", deviation <= N_SIGMA, deviation, N_SIGMA,
        "deviation in standard errors",
    )


def check_small_beta_limit() -> CheckResult:
    """
    The quasi-2D radius at small β′ and the continuum variance of a free trapped
    filament share the value 1/√(2μαβ); the circulant sum approaches it as M grows.
    """
    small = ScaledParams(alpha_p=1.0, beta_p=1e-12, mu=1.0)
    continuum = 1.0 / math.sqrt(2.0 * small.mu * small.stiffness)
    meanfield_gap = abs(meanfield.rsq_3d(small) / continuum - 1.0)

    gaps = []
    for m in (256, 1024, 4096):
        p = ModelParams(n_filaments=1, n_segments=m, length=200.0, alpha=1.0, beta=1.0, mu=1.0)
        limit = 1.0 / math.sqrt(2.0 * p.mu * p.alpha * p.beta)
        gaps.append(abs(oracle.free_filament_bead_variance(p) / limit - 1.0))
    monotone = gaps[0] > gaps[1] > gaps[2]
    worst = max(meanfield_gap, gaps[-1])
    return CheckResult(
        "small-beta limit", monotone and worst <= 1e-3, worst, 1e-3,
        f"circulant gaps {', '.join(f'{g:.1e}' for g in gaps)}",
    )


def check_laplace_limit() -> CheckResult:
    def f(x: float) -> float:
        return (x - 1.0) ** 2 + 0.1 * (x - 1.0) ** 4 + 0.5

    values = oracle.laplace_limit(f, 1.0, (-4.0, 6.0), [10, 100, 1000, 10_000])
    gaps = [abs(v - f(1.0)) for v in values]
    monotone = all(a > b for a, b in zip(gaps, gaps[1:]))
    return CheckResult("Laplace limit", monotone and gaps[-1] <= 1e-3, gaps[-1], 1e-3)


def run_all(perturb_eta: float = 0.0, include_chains: bool = True) -> List[CheckResult]:
    checks: List[Callable[[], CheckResult]] = [
        lambda: check_saddle_agreement(perturb_eta),
        check_stationarity,
        check_radius_consistency,
        check_2d_limit,
        check_beta0_round_trip,
        check_error_locus,
        check_two_vortex_quadrature,
        check_free_sampler,
        check_small_beta_limit,
        check_laplace_limit,
    ]
    if include_chains:
        checks += [check_two_vortex_chain, check_free_chain]

    results = []
    for check in checks:
        result = check()
        if result.passed:
            app_logger.info(str(result))
        else:
            app_logger.error(str(result))
        results.append(result)
    return results
