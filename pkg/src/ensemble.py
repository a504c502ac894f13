"""
Discretized filament Hamiltonian and angular momentum.

Circulations are all 1. A coincident pair of beads in the same layer has
infinite interaction energy; such states are forbidden and every function here
reports them as ``math.inf`` rather than raising.
"""

import math

import numpy as np

from src.errors import DomainError
from src.schemas.data_schema import EnergyBreakdown, FilamentEnsemble, ModelParams


def _check_shape(ens: FilamentEnsemble, p: ModelParams) -> None:
    if ens.beads.shape[:2] != (p.n_filaments, p.n_segments):
        raise DomainError(
            f"ensemble shape {ens.beads.shape[:2]} does not match "
            f"N={p.n_filaments}, M={p.n_segments}"
        )


def filament_increment_sq(beads_k: np.ndarray) -> float:
    """Σ_j |ψ(j+1) − ψ(j)|² over one periodic filament."""
    steps = np.roll(beads_k, -1, axis=0) - beads_k
    return float(np.einsum("ij,ij->", steps, steps))


def h_self(ens: FilamentEnsemble, p: ModelParams) -> float:
    _check_shape(ens, p)
    steps = np.roll(ens.beads, -1, axis=1) - ens.beads
    return p.alpha * float(np.einsum("kjc,kjc->", steps, steps)) / (2.0 * p.delta)


def h_int(ens: FilamentEnsemble, p: ModelParams) -> float:
    _check_shape(ens, p)
    if p.n_filaments < 2:
        return 0.0
    upper, lower = np.triu_indices(p.n_filaments, k=1)
    sep = ens.beads[upper] - ens.beads[lower]
    dist_sq = np.einsum("pjc,pjc->pj", sep, sep)
    if np.any(dist_sq == 0.0):
        return math.inf
    return -0.5 * p.delta * float(np.sum(np.log(dist_sq)))


def angular_momentum(ens: FilamentEnsemble, p: ModelParams) -> float:
    _check_shape(ens, p)
    return p.delta * float(np.einsum("kjc,kjc->", ens.beads, ens.beads))


def compute_energy(ens: FilamentEnsemble, p: ModelParams) -> EnergyBreakdown:
    return EnergyBreakdown.from_terms(
        h_self(ens, p), h_int(ens, p), angular_momentum(ens, p), p
    )


def _others(ens: FilamentEnsemble, filament_index: int) -> np.ndarray:
    return np.delete(ens.beads, filament_index, axis=0)


def _log_distance_sum(beads_k: np.ndarray, others: np.ndarray) -> float:
    """Σ log|ψ_k(j) − ψ_i(j)|² over other filaments i and layers j; −inf on contact."""
    sep = others - beads_k[None, :, :]
    dist_sq = np.einsum("ijc,ijc->ij", sep, sep)
    if np.any(dist_sq == 0.0):
        return -math.inf
    return float(np.sum(np.log(dist_sq)))


def _check_index(ens: FilamentEnsemble, filament_index: int) -> None:
    if not 0 <= filament_index < ens.n_filaments:
        raise DomainError(
            f"filament index {filament_index} out of range for N={ens.n_filaments}"
        )


def delta_action_translate(
    ens: FilamentEnsemble, p: ModelParams, filament_index: int, displacement
) -> tuple[float, float]:
    """
    Change of (H_int, I_N) when filament ``filament_index`` moves rigidly.

    H_self is invariant under the move. ΔI uses δ(2 d·Σψ + M|d|²) so no large
    totals are subtracted.
    """
    _check_index(ens, filament_index)
    d = np.asarray(displacement, dtype=np.float64)
    old = ens.beads[filament_index]
    d_i = p.delta * (2.0 * float(d @ old.sum(axis=0)) + p.n_segments * float(d @ d))
    if p.n_filaments < 2 or not np.any(d):
        return 0.0, d_i
    others = _others(ens, filament_index)
    new_sum = _log_distance_sum(old + d, others)
    if new_sum == -math.inf:
        return math.inf, d_i
    old_sum = _log_distance_sum(old, others)
    return -0.5 * p.delta * (new_sum - old_sum), d_i


def delta_hint_regrow(
    ens: FilamentEnsemble, p: ModelParams, filament_index: int, new_beads: np.ndarray
) -> float:
    """Change of H_int when filament ``filament_index`` is replaced by ``new_beads``."""
    _check_index(ens, filament_index)
    new_beads = np.asarray(new_beads, dtype=np.float64)
    if new_beads.shape != (p.n_segments, 2):
        raise DomainError(
            f"new_beads must have shape ({p.n_segments}, 2), got {new_beads.shape}"
        )
    if p.n_filaments < 2:
        return 0.0
    old = ens.beads[filament_index]
    if np.array_equal(old, new_beads):
        return 0.0
    others = _others(ens, filament_index)
    new_sum = _log_distance_sum(new_beads, others)
    if new_sum == -math.inf:
        return math.inf
    return -0.5 * p.delta * (new_sum - _log_distance_sum(old, others))
