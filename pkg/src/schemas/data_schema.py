from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Dict, List, Optional

import numpy as np

from src.errors import ConfigError, DomainError


def _require_positive(**values: float) -> None:
    for name, value in values.items():
        if not (value > 0 and math.isfinite(value)):
            raise DomainError(f"{name} must be positive and finite, got {value!r}")


@dataclass(frozen=True)
class ScaledParams:
    """Non-extensively scaled parameters of the mean-field theory (α′ = α/N, β′ = βN)."""

    alpha_p: float
    beta_p: float
    mu: float
    L: float = 10.0

    def __post_init__(self):
        _require_positive(alpha_p=self.alpha_p, beta_p=self.beta_p, mu=self.mu, L=self.L)

    @property
    def stiffness(self) -> float:
        """α′β′, which equals the unscaled αβ."""
        return self.alpha_p * self.beta_p

    def with_beta(self, beta_p: float) -> ScaledParams:
        return replace(self, beta_p=beta_p)

    def with_alpha(self, alpha_p: float) -> ScaledParams:
        return replace(self, alpha_p=alpha_p)


@dataclass(frozen=True)
class ModelParams:
    """Physical and discretization constants of the filament ensemble."""

    n_filaments: int
    n_segments: int
    length: float
    alpha: float
    beta: float
    mu: float

    def __post_init__(self):
        if self.n_filaments < 1 or self.n_segments < 1:
            raise DomainError(
                f"need N >= 1 and M >= 1, got N={self.n_filaments}, M={self.n_segments}"
            )
        _require_positive(length=self.length, alpha=self.alpha, beta=self.beta, mu=self.mu)

    @property
    def delta(self) -> float:
        """Segment length δ = L/M."""
        return self.length / self.n_segments

    def scaled(self) -> ScaledParams:
        return ScaledParams(
            alpha_p=self.alpha / self.n_filaments,
            beta_p=self.beta * self.n_filaments,
            mu=self.mu,
            L=self.length,
        )

    def with_beta(self, beta: float) -> ModelParams:
        return replace(self, beta=beta)

    def to_dict(self) -> Dict[str, float]:
        return asdict(self)


@dataclass
class FilamentEnsemble:
    """
    N filaments of M planar beads each.

    ``beads[k, j]`` is the (x, y) position of filament k at layer j. Layers are
    periodic, bead M wraps to bead 0. Storage is filament-major and C-contiguous,
    so one filament occupies one contiguous block.
    """

    beads: np.ndarray

    def __post_init__(self):
        beads = np.ascontiguousarray(self.beads, dtype=np.float64)
        if beads.ndim != 3 or beads.shape[2] != 2:
            raise DomainError(f"beads must have shape (N, M, 2), got {beads.shape}")
        if not np.all(np.isfinite(beads)):
            raise DomainError("bead coordinates must be finite")
        self.beads = beads

    @property
    def n_filaments(self) -> int:
        return self.beads.shape[0]

    @property
    def n_segments(self) -> int:
        return self.beads.shape[1]

    def copy(self) -> FilamentEnsemble:
        return FilamentEnsemble(self.beads.copy())

    @classmethod
    def straight(cls, positions: np.ndarray, n_segments: int) -> FilamentEnsemble:
        """Perfectly straight filaments standing at the given planar positions."""
        positions = np.asarray(positions, dtype=np.float64).reshape(-1, 2)
        return cls(np.repeat(positions[:, None, :], n_segments, axis=1))

    def __len__(self) -> int:
        return self.n_filaments


@dataclass(frozen=True)
class EnergyBreakdown:
    h_self: float
    h_int: float
    i_n: float
    total_action: float

    @classmethod
    def from_terms(
        cls, h_self: float, h_int: float, i_n: float, params: ModelParams
    ) -> EnergyBreakdown:
        return cls(
            h_self=h_self,
            h_int=h_int,
            i_n=i_n,
            total_action=-params.beta * (h_self + h_int) - params.mu * i_n,
        )

    @property
    def energy(self) -> float:
        """Total Hamiltonian H = H_self + H_int."""
        return self.h_self + self.h_int

    def shifted(
        self, params: ModelParams, d_self: float = 0.0, d_int: float = 0.0, d_i: float = 0.0
    ) -> EnergyBreakdown:
        return EnergyBreakdown.from_terms(
            self.h_self + d_self, self.h_int + d_int, self.i_n + d_i, params
        )


@dataclass
class MoveCounters:
    translate_proposed: int = 0
    translate_accepted: int = 0
    regrow_proposed: int = 0
    regrow_accepted: int = 0

    @property
    def proposed(self) -> int:
        return self.translate_proposed + self.regrow_proposed

    def translate_rate(self) -> float:
        if self.translate_proposed == 0:
            return 0.0
        return self.translate_accepted / self.translate_proposed

    def regrow_rate(self) -> float:
        if self.regrow_proposed == 0:
            return 0.0
        return self.regrow_accepted / self.regrow_proposed

    def to_dict(self) -> Dict[str, int]:
        return asdict(self)


@dataclass(frozen=True)
class SamplerConfig:
    translation_halfwidth: float = 5e-3
    moves_per_sweep: int = 1
    burn_in_sweeps: int = 1000
    measure_interval: int = 10
    n_measurements: int = 1000
    equilibration_window: int = 500
    equilibration_tolerance: float = 1e-3
    autotune: bool = True
    max_burn_in_sweeps: int = 50_000
    translate_probability: float = 0.5
    init_square_side: float = 10.0
    tune_interval: int = 50
    target_acceptance_low: float = 0.3
    target_acceptance_high: float = 0.5

    def __post_init__(self):
        if not self.translation_halfwidth > 0:
            raise ConfigError("translation_halfwidth must be positive")
        counts = {
            "moves_per_sweep": self.moves_per_sweep,
            "burn_in_sweeps": self.burn_in_sweeps,
            "measure_interval": self.measure_interval,
            "n_measurements": self.n_measurements,
            "equilibration_window": self.equilibration_window,
            "max_burn_in_sweeps": self.max_burn_in_sweeps,
            "tune_interval": self.tune_interval,
        }
        for name, value in counts.items():
            if value < 1:
                raise ConfigError(f"{name} must be >= 1, got {value}")
        if not 0 < self.equilibration_tolerance < 1:
            raise ConfigError("equilibration_tolerance must lie in (0, 1)")
        # Both moves need nonzero probability for ergodicity.
        if not 0 < self.translate_probability < 1:
            raise ConfigError("translate_probability must lie strictly inside (0, 1)")
        if not self.init_square_side > 0:
            raise ConfigError("init_square_side must be positive")
        if not 0 < self.target_acceptance_low < self.target_acceptance_high < 1:
            raise ConfigError("target acceptance band must satisfy 0 < low < high < 1")

    def to_dict(self) -> Dict:
        return asdict(self)


@dataclass
class ChainState:
    """Everything needed to continue a Markov chain bit-for-bit."""

    ensemble: FilamentEnsemble
    energy: EnergyBreakdown
    rng: np.random.Generator
    halfwidth: float
    counters: MoveCounters = field(default_factory=MoveCounters)
    sweep_index: int = 0
    phase: str = "burn_in"
    equilibrated: bool = False
    burn_in_sweeps_run: int = 0
    measurements_taken: int = 0
    energy_trace: List[float] = field(default_factory=list)
    tune_marker: tuple = (0, 0)


@dataclass(frozen=True)
class Snapshot:
    sweep_index: int
    ensemble: FilamentEnsemble
    energy: EnergyBreakdown


@dataclass(frozen=True)
class MeanFieldResult:
    eta: float
    f_grnd: float
    r2_3d: float
    r2_2d: float
    beta0_p: float
    mu: float

    def __post_init__(self):
        if not 0 < self.eta < 2.0 * self.mu:
            raise DomainError(f"saddle point must lie in (0, 2mu), got {self.eta} with mu={self.mu}")
        _require_positive(r2_3d=self.r2_3d, r2_2d=self.r2_2d, beta0_p=self.beta0_p)


@dataclass(frozen=True)
class CirculantSpec:
    """Precision of one planar component of a free trapped filament."""

    M: int
    coupling: float
    trap: float

    @classmethod
    def for_model(cls, p: ModelParams) -> CirculantSpec:
        return cls(M=p.n_segments, coupling=p.beta * p.alpha / p.delta, trap=2.0 * p.mu * p.delta)

    def eigenvalues(self) -> np.ndarray:
        q = np.arange(self.M)
        return 2.0 * self.coupling * (1.0 - np.cos(2.0 * np.pi * q / self.M)) + self.trap

    def first_column(self) -> np.ndarray:
        column = np.zeros(self.M)
        column[0] += 2.0 * self.coupling + self.trap
        column[1 % self.M] -= self.coupling
        column[-1 % self.M] -= self.coupling
        return column


OBSERVABLE_NAMES = ("r2_mc", "a2_amp", "a2_seg", "d2_nn", "energy")


@dataclass(frozen=True)
class ObservableSample:
    """Observables of a single measured configuration."""

    r2_mc: float
    a2_amp: float
    a2_seg: float
    d2_nn: Optional[float]
    energy: float

    def as_row(self) -> List[float]:
        return [
            self.r2_mc,
            self.a2_amp,
            self.a2_seg,
            math.nan if self.d2_nn is None else self.d2_nn,
            self.energy,
        ]

    @classmethod
    def from_row(cls, row) -> ObservableSample:
        d2 = float(row[3])
        return cls(
            r2_mc=float(row[0]),
            a2_amp=float(row[1]),
            a2_seg=float(row[2]),
            d2_nn=None if math.isnan(d2) else d2,
            energy=float(row[4]),
        )


@dataclass(frozen=True)
class ObservableRecord:
    r2_mc: float
    a2_amp: float
    a2_seg: float
    d2_nn: Optional[float]
    energy_mean: float
    energy_var: float
    n_samples: int
    std_errors: Dict[str, float] = field(default_factory=dict)


@dataclass(frozen=True)
class ValidityFlags:
    straight_ok: bool
    no_braiding: bool
    threshold_ratio: float


@dataclass(frozen=True)
class BetaGrid:
    """Explicit β values plus an optional inclusive log-spaced range."""

    explicit: tuple = ()
    log_count: int = 0
    log_min: float = 0.0
    log_max: float = 0.0
    extra: tuple = ()


@dataclass(frozen=True)
class SweepConfig:
    n_filaments: int
    n_segments: int
    length: float
    alpha: float
    mu: float
    betas: tuple
    sampler: SamplerConfig
    master_seed: int
    output_dir: Path
    checkpoint_interval: int = 1000
    workers: int = 1
    keep_raw: bool = True
    straightness_threshold: float = 0.1

    def __post_init__(self):
        if not self.betas:
            raise ConfigError("at least one beta value is required")
        if any(not b > 0 for b in self.betas):
            raise ConfigError(f"beta values must be positive: {self.betas}")
        if len(set(self.betas)) != len(self.betas):
            raise ConfigError(f"duplicate beta values: {self.betas}")
        if self.checkpoint_interval < 1 or self.workers < 1:
            raise ConfigError("checkpoint_interval and workers must be >= 1")
        if not 0 <= self.master_seed < 2**64:
            raise ConfigError("master_seed must be a 64-bit unsigned integer")

    def model(self, beta: float) -> ModelParams:
        return ModelParams(
            n_filaments=self.n_filaments,
            n_segments=self.n_segments,
            length=self.length,
            alpha=self.alpha,
            beta=beta,
            mu=self.mu,
        )


@dataclass(frozen=True)
class RunRecord:
    index: int
    beta: float
    observables: ObservableRecord
    flags: ValidityFlags
    r2_3d_pred: float
    r2_2d_pred: float
    equilibrated: bool
    sweeps_run: int
    wall_time: float
    seed: int

    def __str__(self) -> str:
        return (
            f"RunRecord(beta={self.beta:g}, r2_mc={self.observables.r2_mc:.6g}, "
            f"r2_3d={self.r2_3d_pred:.6g}, r2_2d={self.r2_2d_pred:.6g})"
        )


@dataclass(frozen=True)
class BetaJob:
    """One chain of a sweep, self-contained so it can cross a process boundary."""

    index: int
    params: ModelParams
    sampler: SamplerConfig
    seed: int
    output_dir: Path
    checkpoint_interval: int = 1000
    keep_raw: bool = True
    straightness_threshold: float = 0.1
    interrupt_after: Optional[int] = None
    show_progress: bool = False

    @property
    def beta(self) -> float:
        return self.params.beta


@dataclass(frozen=True)
class CheckResult:
    """Outcome of one verification check; ``measured`` is compared against ``tolerance``."""

    name: str
    passed: bool
    measured: float
    tolerance: float
    detail: str = ""

    def __str__(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        text = f"[{status}] {self.name}: measured={self.measured:.3e} tolerance={self.tolerance:.1e}"
        return f"{text} ({self.detail})" if self.detail else text
