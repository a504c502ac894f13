import numpy as np
import pytest

from src.schemas.data_schema import FilamentEnsemble, ModelParams, SamplerConfig, ScaledParams


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture
def small_model():
    return ModelParams(n_filaments=3, n_segments=4, length=4.0, alpha=1.0, beta=1.0, mu=1.0)


@pytest.fixture
def moderate_point():
    """The moderate-regime point whose saddle is η ≈ 2438.45."""
    return ScaledParams(alpha_p=5e5, beta_p=0.2, mu=2000.0)


@pytest.fixture
def random_ensemble(rng, small_model):
    beads = rng.normal(size=(small_model.n_filaments, small_model.n_segments, 2))
    return FilamentEnsemble(beads)


@pytest.fixture
def quick_sampler():
    return SamplerConfig(
        translation_halfwidth=0.2,
        moves_per_sweep=2,
        burn_in_sweeps=50,
        measure_interval=1,
        n_measurements=16,
        equilibration_window=10,
        max_burn_in_sweeps=100,
        tune_interval=10,
        init_square_side=2.0,
    )
