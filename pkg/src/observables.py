"""
Equilibrium statistics of measured ensembles and the model-validity flags.

Per-configuration observables are plain functions of a FilamentEnsemble.
``aggregate`` turns a run of measurements into means with blocked standard
errors, which absorb the autocorrelation left between measurements.
"""

import math
from typing import Dict, List, Optional, Sequence, Union

import numpy as np
from scipy import stats

from src.errors import InsufficientDataError, NumericalInstabilityError
from src.logger_config import app_logger
from src.schemas.data_schema import (
    FilamentEnsemble,
    ModelParams,
    ObservableRecord,
    ObservableSample,
    Snapshot,
    ValidityFlags,
)


def r2_mc(ens: FilamentEnsemble) -> float:
    """Mean square bead distance from the trap axis."""
    return float(np.einsum("kjc,kjc->", ens.beads, ens.beads)) / (
        ens.n_filaments * ens.n_segments
    )


def amplitude_sq(ens: FilamentEnsemble) -> float:
    """Mean square excursion of each bead from bead 0 of its own filament."""
    excursion = ens.beads - ens.beads[:, :1, :]
    return float(np.einsum("kjc,kjc->", excursion, excursion)) / (
        ens.n_filaments * ens.n_segments
    )


def amplitude_sq_per_segment(ens: FilamentEnsemble) -> float:
    steps = np.roll(ens.beads, -1, axis=1) - ens.beads
    return float(np.einsum("kjc,kjc->", steps, steps)) / (ens.n_filaments * ens.n_segments)


def nn_distance_sq(ens: FilamentEnsemble) -> Optional[float]:
    """
    Mean over filaments of the smallest same-layer squared distance to any other
    filament. Returns None for a single filament, where it is undefined.
    """
    if ens.n_filaments < 2:
        return None
    sep = ens.beads[:, None, :, :] - ens.beads[None, :, :, :]
    dist_sq = np.einsum("ikjc,ikjc->ikj", sep, sep)
    idx = np.arange(ens.n_filaments)
    dist_sq[idx, idx, :] = np.inf
    return float(np.mean(dist_sq.min(axis=(1, 2))))


def measure(snapshot: Snapshot) -> ObservableSample:
    """All per-configuration observables of one snapshot."""
    ens = snapshot.ensemble
    a2_amp = amplitude_sq(ens)
    a2_seg = amplitude_sq_per_segment(ens)
    # adjacent increments are bounded by two excursions from bead 0
    if a2_seg > 4.0 * a2_amp * (1.0 + 1e-12) + 1e-300:
        app_logger.error(
            f"Amplitude bound violated at sweep {snapshot.sweep_index}: a2={a2_seg!r}, A2={a2_amp!r}"
        )
        raise NumericalInstabilityError(f"a2_seg={a2_seg!r} exceeds 4*A2={4.0 * a2_amp!r}")
    return ObservableSample(
        r2_mc=r2_mc(ens),
        a2_amp=a2_amp,
        a2_seg=a2_seg,
        d2_nn=nn_distance_sq(ens),
        energy=snapshot.energy.energy,
    )


def blocking_standard_error(series: Sequence[float], confidence: float = 0.99) -> float:
    """
    Standard error of the mean of a correlated series by automated blocking.

    The series is truncated to its leading power-of-two length and halved by
    pair averaging. The first blocking level whose remaining autocorrelation
    statistic falls below the chi-squared quantile gives the variance estimate.
    """
    x = np.asarray(series, dtype=np.float64)
    if x.size < 2:
        raise InsufficientDataError(f"blocking needs at least 2 values, got {x.size}")
    depth = int(math.floor(math.log2(x.size)))
    x = x[: 2**depth]
    mean = x.mean()
    variances = np.empty(depth)
    lag_cov = np.empty(depth)
    for level in range(depth):
        n = x.size
        lag_cov[level] = np.sum((x[:-1] - mean) * (x[1:] - mean)) / n
        variances[level] = x.var()
        x = 0.5 * (x[0::2] + x[1::2])
    if variances[0] == 0.0:
        return 0.0
    ratio = np.divide(lag_cov, variances, out=np.zeros(depth), where=variances > 0)
    block_counts = 2.0 ** np.arange(depth, 0, -1)
    statistic = np.cumsum((ratio**2 * block_counts)[::-1])[::-1]
    quantiles = stats.chi2.ppf(confidence, np.arange(1, depth + 1))
    passing = np.nonzero(statistic < quantiles)[0]
    if passing.size == 0:
        app_logger.warning(
            f"Blocking found no plateau for a series of length {2**depth}; "
            "standard error is a lower bound"
        )
        level = depth - 1
    else:
        level = int(passing[0])
    return math.sqrt(variances[level] / block_counts[level])


def aggregate(samples: Sequence[Union[ObservableSample, Snapshot]]) -> ObservableRecord:
    """Means and blocked standard errors over a run of measurements."""
    samples = [measure(s) if isinstance(s, Snapshot) else s for s in samples]
    if len(samples) < 2:
        raise InsufficientDataError(f"aggregate needs at least 2 snapshots, got {len(samples)}")

    columns: Dict[str, List[float]] = {
        "r2_mc": [s.r2_mc for s in samples],
        "a2_amp": [s.a2_amp for s in samples],
        "a2_seg": [s.a2_seg for s in samples],
        "energy": [s.energy for s in samples],
    }
    has_d2 = all(s.d2_nn is not None for s in samples)
    if has_d2:
        columns["d2_nn"] = [s.d2_nn for s in samples]

    means = {name: float(np.mean(values)) for name, values in columns.items()}
    std_errors = {name: blocking_standard_error(values) for name, values in columns.items()}
    return ObservableRecord(
        r2_mc=means["r2_mc"],
        a2_amp=means["a2_amp"],
        a2_seg=means["a2_seg"],
        d2_nn=means["d2_nn"] if has_d2 else None,
        energy_mean=means["energy"],
        energy_var=float(np.var(columns["energy"], ddof=1)),
        n_samples=len(samples),
        std_errors=std_errors,
    )


def validity_flags(
    record: ObservableRecord, p: ModelParams, threshold_ratio: float = 0.1
) -> ValidityFlags:
    """
    Straightness: the rms segment amplitude is small against the layer spacing.
    Non-braiding: nearest-neighbour distance strictly exceeds the amplitude.
    """
    straight_ok = math.sqrt(record.a2_seg) * p.n_segments / p.length < threshold_ratio
    no_braiding = True if record.d2_nn is None else record.d2_nn > record.a2_amp
    return ValidityFlags(
        straight_ok=straight_ok, no_braiding=no_braiding, threshold_ratio=threshold_ratio
    )
