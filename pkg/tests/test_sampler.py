import math

import numpy as np
import pytest
from scipy import linalg

from src import ensemble, observables, oracle, sampler
from src.errors import InsufficientDataError
from src.schemas.data_schema import (
    ChainState,
    CirculantSpec,
    FilamentEnsemble,
    ModelParams,
    MoveCounters,
    SamplerConfig,
)

N_SIGMA = 4.0


def model(n, m, length=10.0, alpha=1.0, beta=1.0, mu=1.0):
    return ModelParams(n_filaments=n, n_segments=m, length=length, alpha=alpha, beta=beta, mu=mu)


def chain_for(ens, p, seed=3, halfwidth=0.1):
    return ChainState(
        ensemble=ens,
        energy=ensemble.compute_energy(ens, p),
        rng=np.random.default_rng(seed),
        halfwidth=halfwidth,
        counters=MoveCounters(),
    )


def test_single_bead_draw_variance(rng):
    p = model(1, 1, mu=2.0)
    draws = np.array([sampler.sample_free_filament(p, rng) for _ in range(20_000)])
    assert draws.shape == (20_000, 1, 2)
    norms = np.einsum("sjc,sjc->s", draws, draws)
    stderr = norms.std(ddof=1) / math.sqrt(norms.size)
    assert abs(norms.mean() - 1.0 / (p.mu * p.length)) < N_SIGMA * stderr


def test_free_draws_match_circulant_statistics(rng):
    p = ModelParams(n_filaments=1, n_segments=64, length=10.0, alpha=1e7, beta=0.1, mu=2000.0)
    draws = np.array([sampler.sample_free_filament(p, rng) for _ in range(5000)])
    per_sample = np.einsum("sjc,sjc->sj", draws, draws)
    pooled = per_sample.mean(axis=1)
    stderr = pooled.std(ddof=1) / math.sqrt(pooled.size)
    assert abs(pooled.mean() - oracle.free_filament_bead_variance(p)) < N_SIGMA * stderr

    # every layer sees the same variance
    layer_means = per_sample.mean(axis=0)
    layer_err = per_sample.std(axis=0, ddof=1) / math.sqrt(per_sample.shape[0])
    target = oracle.free_filament_bead_variance(p)
    assert np.all(np.abs(layer_means - target) < 5.0 * layer_err)


def test_conditional_draw_keeps_anchor(rng):
    p = model(1, 8)
    anchor = np.array([0.3, -0.2])
    beads = sampler.free_sampler(p).sample_conditional(anchor, rng)
    assert beads.shape == (8, 2)
    assert np.array_equal(beads[0], anchor)


def test_conditional_draw_matches_dense_gaussian(rng):
    p = model(1, 5, length=5.0)
    precision = linalg.circulant(CirculantSpec.for_model(p).first_column())
    inner, link = precision[1:, 1:], precision[1:, 0]
    anchor = np.array([0.8, -0.5])
    expected_mean = -np.linalg.solve(inner, link)[:, None] * anchor[None, :]
    expected_var = np.diag(np.linalg.inv(inner))

    draws = np.array(
        [sampler.free_sampler(p).sample_conditional(anchor, rng)[1:] for _ in range(40_000)]
    )
    mean = draws.mean(axis=0)
    stderr = draws.std(axis=0, ddof=1) / math.sqrt(draws.shape[0])
    assert np.all(np.abs(mean - expected_mean) < N_SIGMA * stderr)
    var = draws.var(axis=0, ddof=1).mean(axis=1)
    assert var == pytest.approx(expected_var, rel=0.05)


def test_two_segment_conditional_mean():
    p = model(1, 2, length=2.0)
    spec = CirculantSpec.for_model(p)
    coeff = 2.0 * spec.coupling / (2.0 * spec.coupling + spec.trap)
    beads = sampler.free_sampler(p).sample_conditional(np.array([1.0, 0.0]), np.random.default_rng(0))
    assert beads.shape == (2, 2)
    assert sampler.free_sampler(p)._mean_coeff[0] == pytest.approx(coeff)


def test_zero_translation_is_accepted(small_model, random_ensemble):
    chain = chain_for(random_ensemble.copy(), small_model)
    before = chain.ensemble.beads.copy()
    assert sampler.apply_translation(chain, small_model, 1, np.zeros(2))
    assert np.array_equal(chain.ensemble.beads, before)
    assert chain.counters.translate_accepted == 1


def test_identical_regrow_is_accepted(small_model, random_ensemble):
    chain = chain_for(random_ensemble.copy(), small_model)
    assert sampler.apply_regrow(chain, small_model, 0, chain.ensemble.beads[0].copy())
    assert chain.counters.regrow_accepted == chain.counters.regrow_proposed == 1


def test_single_filament_regrow_always_accepted():
    p = model(1, 8)
    chain = chain_for(FilamentEnsemble(np.zeros((1, 8, 2))), p)
    assert all(sampler.regrow_move(chain, p) for _ in range(50))


def test_single_bead_regrow_is_noop():
    p = model(2, 1)
    ens = FilamentEnsemble(np.array([[[0.0, 0.0]], [[1.0, 0.0]]]))
    chain = chain_for(ens, p)
    assert sampler.regrow_move(chain, p)
    assert np.array_equal(chain.ensemble.beads, ens.beads)


def test_distant_stiff_filaments_regrow_freely():
    p = ModelParams(n_filaments=2, n_segments=8, length=10.0, alpha=1e9, beta=10.0, mu=1.0)
    spread = math.sqrt(oracle.free_filament_bead_variance(p))
    ens = FilamentEnsemble.straight(np.array([[0.0, 0.0], [1e3 * spread, 0.0]]), 8)
    chain = chain_for(ens, p)
    for _ in range(200):
        sampler.regrow_move(chain, p)
    assert chain.counters.regrow_rate() > 0.95


def test_sweep_counts_moves(small_model, random_ensemble):
    cfg = SamplerConfig(moves_per_sweep=7)
    chain = chain_for(random_ensemble.copy(), small_model)
    sampler.sweep(chain, small_model, cfg)
    assert chain.counters.proposed == 7
    assert chain.sweep_index == 1
    assert chain.counters.translate_accepted <= chain.counters.translate_proposed


def test_energy_cache_stays_consistent(small_model, random_ensemble):
    cfg = SamplerConfig(moves_per_sweep=5)
    chain = chain_for(random_ensemble.copy(), small_model, halfwidth=0.3)
    for _ in range(200):
        sampler.sweep(chain, small_model, cfg)
    assert chain.counters.translate_accepted > 0 and chain.counters.regrow_accepted > 0
    sampler.audit_energy_cache(chain, small_model)


def test_is_equilibrated():
    cfg = SamplerConfig(equilibration_window=500)
    assert sampler.is_equilibrated(np.full(1000, -3.5), cfg)
    assert not sampler.is_equilibrated(1.0 + np.arange(1000.0), cfg)
    with pytest.raises(InsufficientDataError):
        sampler.is_equilibrated(np.ones(999), cfg)


def test_equilibration_ignores_initial_collapse():
    rng = np.random.default_rng(4)
    cfg = SamplerConfig(equilibration_window=500, equilibration_tolerance=1e-3)
    trace = np.concatenate([np.full(500, 1e4), rng.normal(655.0, 19.0, size=7500)])
    assert sampler.is_equilibrated(trace, cfg)


def test_decaying_trace_not_equilibrated():
    cfg = SamplerConfig(equilibration_window=500, equilibration_tolerance=1e-3)
    t = np.arange(2000.0)
    assert not sampler.is_equilibrated(655.0 + 1e4 * np.exp(-t / 2000.0), cfg)


@pytest.mark.slow
def test_chain_equilibrates_before_cap():
    p = ModelParams(n_filaments=2, n_segments=1, length=10.0, alpha=1.0, beta=1.0, mu=2000.0)
    cfg = SamplerConfig(
        translation_halfwidth=0.01, moves_per_sweep=10, burn_in_sweeps=200,
        measure_interval=1, n_measurements=10, equilibration_window=100,
        max_burn_in_sweeps=20000, init_square_side=10.0,
    )
    chain = sampler.FilamentChain.start(p, cfg, 3)
    while chain.state.phase == "burn_in":
        chain.advance()
    assert chain.state.equilibrated
    assert chain.state.burn_in_sweeps_run < cfg.max_burn_in_sweeps


def test_run_chain_is_deterministic(quick_sampler):
    p = model(2, 4, length=4.0)
    first = [s.ensemble.beads for s in sampler.run_chain(p, quick_sampler, 99)]
    second = [s.ensemble.beads for s in sampler.run_chain(p, quick_sampler, 99)]
    assert len(first) == quick_sampler.n_measurements
    assert all(np.array_equal(a, b) for a, b in zip(first, second))


def test_halfwidth_frozen_during_measurement(quick_sampler):
    p = model(2, 4, length=4.0)
    chain = sampler.FilamentChain.start(p, quick_sampler, 5)
    while chain.state.phase == "burn_in":
        chain.advance()
    frozen = chain.state.halfwidth
    while not chain.done:
        chain.advance()
        assert chain.state.halfwidth == frozen


def test_unequilibrated_chain_still_measures():
    cfg = SamplerConfig(
        burn_in_sweeps=20,
        max_burn_in_sweeps=60,
        equilibration_window=500,
        measure_interval=1,
        n_measurements=5,
    )
    chain = sampler.FilamentChain.start(model(1, 2), cfg, 1)
    snapshots = []
    while not chain.done:
        snap = chain.advance()
        if snap is not None:
            snapshots.append(snap)
    assert not chain.state.equilibrated
    assert chain.state.burn_in_sweeps_run == 60
    assert len(snapshots) == 5


def test_chain_starts_from_straight_filaments_in_square():
    cfg = SamplerConfig(init_square_side=10.0)
    state = sampler.initial_state(model(4, 6), cfg, 8)
    beads = state.ensemble.beads
    assert np.all(np.abs(beads) <= 5.0)
    assert np.all(beads == beads[:, :1, :])


def _chain_r2(p, cfg, seed):
    return observables.aggregate(list(sampler.run_chain(p, cfg, seed)))


@pytest.mark.slow
def test_single_bead_chain_matches_closed_form():
    p = ModelParams(n_filaments=1, n_segments=1, length=10.0, alpha=1.0, beta=1.0, mu=2000.0)
    cfg = SamplerConfig(
        translation_halfwidth=0.01, moves_per_sweep=10, burn_in_sweeps=1000,
        measure_interval=2, n_measurements=4096, equilibration_window=200, init_square_side=0.1,
    )
    record = _chain_r2(p, cfg, 21)
    target = 1.0 / (p.mu * p.length)
    assert abs(record.r2_mc - target) < 3.0 * record.std_errors["r2_mc"]


@pytest.mark.slow
@pytest.mark.parametrize("beta", [0.1, 1.0])
def test_two_vortex_chain_matches_closed_form(beta):
    p = ModelParams(n_filaments=2, n_segments=1, length=10.0, alpha=1.0, beta=beta, mu=2000.0)
    cfg = SamplerConfig(
        translation_halfwidth=0.01, moves_per_sweep=10, burn_in_sweeps=1000,
        measure_interval=2, n_measurements=4096, equilibration_window=200, init_square_side=0.1,
    )
    record = _chain_r2(p, cfg, 5)
    target = oracle.two_vortex_r2_closed_form(p)
    assert abs(record.r2_mc - target) < 3.0 * record.std_errors["r2_mc"]


@pytest.mark.slow
def test_free_chain_matches_circulant():
    p = ModelParams(n_filaments=1, n_segments=8, length=8.0, alpha=1.0, beta=1.0, mu=1.0)
    cfg = SamplerConfig(
        translation_halfwidth=0.5, moves_per_sweep=4, burn_in_sweeps=500,
        measure_interval=2, n_measurements=4096, equilibration_window=200, init_square_side=1.0,
    )
    record = _chain_r2(p, cfg, 7)
    target = oracle.free_filament_bead_variance(p)
    assert abs(record.r2_mc - target) < 3.0 * record.std_errors["r2_mc"]


def _chain_beads(p, cfg, seed):
    return np.array([s.ensemble.beads[0] for s in sampler.run_chain(p, cfg, seed)])


@pytest.mark.slow
def test_stiff_free_chain_matches_circulant():
    p = ModelParams(n_filaments=1, n_segments=64, length=10.0, alpha=1e7, beta=0.1, mu=2000.0)
    cfg = SamplerConfig(
        translation_halfwidth=0.005, moves_per_sweep=4, burn_in_sweeps=2000,
        measure_interval=1, n_measurements=16384, equilibration_window=500, init_square_side=0.02,
    )
    beads = _chain_beads(p, cfg, 11)
    bead_sq = np.einsum("sjc,sjc->s", beads, beads) / p.n_segments
    neighbour = np.einsum("sjc,sjc->s", beads, np.roll(beads, -1, axis=1)) / p.n_segments

    for series, target in (
        (bead_sq, oracle.free_filament_bead_variance(p)),
        (neighbour, oracle.free_filament_lag_covariance(p, 1)),
    ):
        stderr = observables.blocking_standard_error(series)
        assert abs(series.mean() - target) < 3.0 * stderr


@pytest.mark.slow
def test_two_bead_chain_histogram_matches_free_measure():
    p = model(1, 2)
    cfg = SamplerConfig(
        translation_halfwidth=0.5, moves_per_sweep=2, burn_in_sweeps=500,
        measure_interval=1, n_measurements=32768, equilibration_window=200, init_square_side=1.0,
    )
    beads = _chain_beads(p, cfg, 13)
    norms = np.einsum("sjc,sjc->sj", beads, beads)

    # |ψ_j|² is exponential with mean ⟨|ψ_j|²⟩; 20 equal-probability bins
    n_bins = 20
    mean = oracle.free_filament_bead_variance(p)
    edges = -mean * np.log1p(-np.arange(n_bins) / n_bins)
    bins = np.searchsorted(edges, norms, side="right") - 1
    for b in range(n_bins):
        in_bin = (bins == b).mean(axis=1)
        stderr = observables.blocking_standard_error(in_bin)
        assert abs(in_bin.mean() - 1.0 / n_bins) < N_SIGMA * stderr, b
