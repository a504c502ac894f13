"""
Markov-chain Monte Carlo over filament ensembles.

Two moves: a rigid translation of one filament by a vector uniform in
[−Δ, Δ]², and a regrow that resamples every bead of one filament except bead 0
from the exact free (self-induction plus trap) Gaussian conditioned on bead 0.
The free part of the regrow is sampled exactly, so only the interaction change
enters its acceptance.
"""

import math
from functools import lru_cache
from typing import Iterator, Optional

import numpy as np
from scipy import linalg

from src import ensemble
from src.config import DEBUG_AUDIT_INTERVAL
from src.errors import InsufficientDataError, NumericalInstabilityError
from src.logger_config import app_logger
from src.oracle import recompute_energies
from src.schemas.data_schema import (
    ChainState,
    CirculantSpec,
    FilamentEnsemble,
    ModelParams,
    MoveCounters,
    SamplerConfig,
    Snapshot,
)


class FreeFilamentSampler:
    """
    Exact sampler of the single-filament measure
    exp(−Σ_j [(βα/(2δ))|ψ(j+1) − ψ(j)|² + μδ|ψ(j)|²]) with periodic layers.

    The per-component precision P is circulant. Unconditional draws use its
    Fourier diagonalization; draws conditioned on bead 0 use a banded Cholesky
    factor of the tridiagonal block P[1:, 1:], computed once.
    """

    def __init__(self, p: ModelParams):
        self.n_segments = p.n_segments
        spec = CirculantSpec.for_model(p)
        eig = spec.eigenvalues()
        self._inv_sqrt_eig = 1.0 / np.sqrt(eig[: self.n_segments // 2 + 1])
        self._band_u = 0
        self._factor: Optional[np.ndarray] = None
        self._mean_coeff: Optional[np.ndarray] = None
        if self.n_segments >= 2:
            precision = linalg.circulant(spec.first_column())
            inner = precision[1:, 1:]
            coupling_to_anchor = precision[1:, 0]
            if inner.shape[0] >= 2:
                self._band_u = 1
                banded = np.zeros((2, inner.shape[0]))
                banded[0, 1:] = np.diag(inner, 1)
                banded[1] = np.diag(inner)
            else:
                banded = np.diag(inner).reshape(1, 1).copy()
            self._factor = linalg.cholesky_banded(banded, lower=False)
            self._mean_coeff = linalg.solveh_banded(banded, -coupling_to_anchor, lower=False)

    def sample(self, rng: np.random.Generator) -> np.ndarray:
        """Unconditional draw of all M beads, shape (M, 2)."""
        noise = rng.standard_normal((self.n_segments, 2))
        spectrum = np.fft.rfft(noise, axis=0) * self._inv_sqrt_eig[:, None]
        return np.fft.irfft(spectrum, n=self.n_segments, axis=0)

    def sample_conditional(self, anchor: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        """Draw beads 1..M−1 given bead 0 = ``anchor``; returns all M beads."""
        beads = np.empty((self.n_segments, 2))
        beads[0] = anchor
        if self.n_segments == 1:
            return beads
        noise = rng.standard_normal((self.n_segments - 1, 2))
        fluctuation = linalg.solve_banded((0, self._band_u), self._factor, noise)
        beads[1:] = self._mean_coeff[:, None] * anchor[None, :] + fluctuation
        return beads


@lru_cache(maxsize=64)
def free_sampler(p: ModelParams) -> FreeFilamentSampler:
    return FreeFilamentSampler(p)


def sample_free_filament(p: ModelParams, rng: np.random.Generator) -> np.ndarray:
    """Exact draw of one free trapped filament, shape (M, 2)."""
    return free_sampler(p).sample(rng)


def _metropolis(rng: np.random.Generator, log_ratio: float) -> bool:
    u = rng.random()
    if log_ratio >= 0.0:
        return True
    return u < math.exp(log_ratio)


def apply_translation(
    chain: ChainState, p: ModelParams, filament_index: int, displacement: np.ndarray
) -> bool:
    """Metropolis step for a given rigid translation proposal."""
    d_int, d_i = ensemble.delta_action_translate(chain.ensemble, p, filament_index, displacement)
    accept = _metropolis(chain.rng, -p.beta * d_int - p.mu * d_i)
    chain.counters.translate_proposed += 1
    if accept:
        chain.ensemble.beads[filament_index] += displacement
        chain.energy = chain.energy.shifted(p, d_int=d_int, d_i=d_i)
        chain.counters.translate_accepted += 1
    return accept


def apply_regrow(
    chain: ChainState, p: ModelParams, filament_index: int, new_beads: np.ndarray
) -> bool:
    """Metropolis step for a given regrown filament; acceptance sees ΔH_int only."""
    d_int = ensemble.delta_hint_regrow(chain.ensemble, p, filament_index, new_beads)
    accept = _metropolis(chain.rng, -p.beta * d_int)
    chain.counters.regrow_proposed += 1
    if accept:
        old = chain.ensemble.beads[filament_index]
        d_self = (
            p.alpha
            * (ensemble.filament_increment_sq(new_beads) - ensemble.filament_increment_sq(old))
            / (2.0 * p.delta)
        )
        d_i = p.delta * (float(np.sum(new_beads * new_beads)) - float(np.sum(old * old)))
        chain.ensemble.beads[filament_index] = new_beads
        chain.energy = chain.energy.shifted(p, d_self=d_self, d_int=d_int, d_i=d_i)
        chain.counters.regrow_accepted += 1
    return accept


def translate_move(chain: ChainState, p: ModelParams) -> bool:
    k = int(chain.rng.integers(p.n_filaments))
    displacement = chain.rng.uniform(-chain.halfwidth, chain.halfwidth, size=2)
    return apply_translation(chain, p, k, displacement)


def regrow_move(chain: ChainState, p: ModelParams) -> bool:
    if p.n_segments == 1:
        # nothing to regrow once bead 0 is held fixed
        chain.counters.regrow_proposed += 1
        chain.counters.regrow_accepted += 1
        return True
    k = int(chain.rng.integers(p.n_filaments))
    anchor = chain.ensemble.beads[k, 0].copy()
    new_beads = free_sampler(p).sample_conditional(anchor, chain.rng)
    return apply_regrow(chain, p, k, new_beads)


def sweep(chain: ChainState, p: ModelParams, cfg: SamplerConfig) -> ChainState:
    for _ in range(cfg.moves_per_sweep):
        if chain.rng.random() < cfg.translate_probability:
            translate_move(chain, p)
        else:
            regrow_move(chain, p)
    chain.sweep_index += 1
    return chain


def _settled_mean(trace: np.ndarray, n: int) -> float:
    """Cumulative mean of the first n entries with the older half discarded."""
    return float(trace[n // 2 : n].mean())


def is_equilibrated(energy_trace, cfg: SamplerConfig) -> bool:
    """
    True when the cumulative energy mean moved by less than ε_eq (relative) over
    the last W entries. The mean runs over the newer half of the trace only, so
    the collapse from the initial configuration drops out as the trace grows.
    The scale is the larger of |mean| and the spread of that half.
    """
    window = cfg.equilibration_window
    trace = np.asarray(energy_trace, dtype=np.float64)
    if trace.size < 2 * window:
        raise InsufficientDataError(
            f"equilibration test needs {2 * window} entries, got {trace.size}"
        )
    n = trace.size
    now = _settled_mean(trace, n)
    change = abs(now - _settled_mean(trace, n - window))
    if change == 0.0:
        return True
    scale = max(abs(now), float(trace[n // 2 :].std()))
    return change < cfg.equilibration_tolerance * scale


def audit_energy_cache(chain: ChainState, p: ModelParams, rel_tol: float = 1e-8) -> None:
    """Compare the cached energies with a from-scratch evaluation."""
    fresh = recompute_energies(chain.ensemble, p)
    cached = chain.energy
    scale = abs(fresh.h_self) + abs(fresh.h_int) + abs(fresh.i_n)
    for name in ("h_self", "h_int", "i_n"):
        a, b = getattr(cached, name), getattr(fresh, name)
        if not math.isclose(a, b, rel_tol=rel_tol, abs_tol=rel_tol * scale):
            app_logger.error(
                f"Energy cache drift in {name} at sweep {chain.sweep_index}: cached={a!r} fresh={b!r}"
            )
            raise NumericalInstabilityError(f"energy cache drifted in {name}: {a!r} vs {b!r}")
    app_logger.debug(f"Energy cache audit passed at sweep {chain.sweep_index}")


def initial_state(p: ModelParams, cfg: SamplerConfig, seed) -> ChainState:
    """Straight filaments with endpoints uniform in a square centred on the trap."""
    rng = np.random.default_rng(seed)
    half = 0.5 * cfg.init_square_side
    positions = rng.uniform(-half, half, size=(p.n_filaments, 2))
    ens = FilamentEnsemble.straight(positions, p.n_segments)
    return ChainState(
        ensemble=ens,
        energy=ensemble.compute_energy(ens, p),
        rng=rng,
        halfwidth=cfg.translation_halfwidth,
        counters=MoveCounters(),
    )


class FilamentChain:
    """
    One chain driven sweep by sweep: burn-in with optional Δ tuning until the
    cumulative energy mean settles (or the burn-in cap is hit), then measurement.
    """

    def __init__(
        self,
        params: ModelParams,
        cfg: SamplerConfig,
        state: ChainState,
        audit_interval: int = DEBUG_AUDIT_INTERVAL,
    ):
        self.params = params
        self.cfg = cfg
        self.state = state
        self.audit_interval = audit_interval

    @classmethod
    def start(cls, params: ModelParams, cfg: SamplerConfig, seed, **kwargs) -> "FilamentChain":
        app_logger.info(
            f"Starting chain N={params.n_filaments} M={params.n_segments} beta={params.beta:g}"
        )
        return cls(params, cfg, initial_state(params, cfg, seed), **kwargs)

    @property
    def done(self) -> bool:
        return self.state.phase == "done"

    def _tune(self) -> None:
        s = self.state
        proposed0, accepted0 = s.tune_marker
        proposed = s.counters.translate_proposed - proposed0
        if proposed == 0:
            return
        rate = (s.counters.translate_accepted - accepted0) / proposed
        target = 0.5 * (self.cfg.target_acceptance_low + self.cfg.target_acceptance_high)
        if not self.cfg.target_acceptance_low <= rate <= self.cfg.target_acceptance_high:
            factor = min(max(rate / target, 0.5), 2.0)
            s.halfwidth = min(s.halfwidth * factor, self.cfg.init_square_side)
            app_logger.debug(f"Translate acceptance {rate:.3f}, halfwidth -> {s.halfwidth:.4g}")
        s.tune_marker = (s.counters.translate_proposed, s.counters.translate_accepted)

    def _begin_measurement(self) -> None:
        s = self.state
        s.phase = "measure"
        s.energy_trace = []
        if s.equilibrated:
            app_logger.info(
                f"Equilibrated after {s.burn_in_sweeps_run} sweeps (beta={self.params.beta:g}); "
                f"halfwidth frozen at {s.halfwidth:.4g}"
            )
        else:
            app_logger.warning(
                f"Not equilibrated within {s.burn_in_sweeps_run} burn-in sweeps "
                f"(beta={self.params.beta:g}); measuring anyway"
            )

    def advance(self) -> Optional[Snapshot]:
        """Run one sweep; return a snapshot when this sweep is a measurement point."""
        if self.done:
            return None
        s = self.state
        sweep(s, self.params, self.cfg)
        if self.audit_interval and s.sweep_index % self.audit_interval == 0:
            audit_energy_cache(s, self.params)

        if s.phase == "burn_in":
            s.energy_trace.append(s.energy.energy)
            s.burn_in_sweeps_run += 1
            if self.cfg.autotune and s.burn_in_sweeps_run % self.cfg.tune_interval == 0:
                self._tune()
            if s.burn_in_sweeps_run >= self.cfg.burn_in_sweeps:
                if len(s.energy_trace) >= 2 * self.cfg.equilibration_window and is_equilibrated(
                    s.energy_trace, self.cfg
                ):
                    s.equilibrated = True
                    self._begin_measurement()
                elif s.burn_in_sweeps_run >= self.cfg.max_burn_in_sweeps:
                    self._begin_measurement()
            return None

        if (s.sweep_index - s.burn_in_sweeps_run) % self.cfg.measure_interval != 0:
            return None
        s.measurements_taken += 1
        if s.measurements_taken >= self.cfg.n_measurements:
            s.phase = "done"
        return Snapshot(sweep_index=s.sweep_index, ensemble=s.ensemble.copy(), energy=s.energy)


def run_chain(p: ModelParams, cfg: SamplerConfig, seed) -> Iterator[Snapshot]:
    """Stream of measurement snapshots of one chain."""
    chain = FilamentChain.start(p, cfg, seed)
    while not chain.done:
        snapshot = chain.advance()
        if snapshot is not None:
            yield snapshot
