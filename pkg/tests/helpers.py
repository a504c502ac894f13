import numpy as np

from src.schemas.data_schema import FilamentEnsemble, ObservableRecord, RunRecord, ValidityFlags


def straight(*positions, n_segments=4):
    return FilamentEnsemble.straight(np.array(positions, dtype=float), n_segments)


def make_record(index=0, beta=1.0, d2_nn=0.5, straight_ok=True, equilibrated=True):
    std_errors = {"r2_mc": 0.01, "a2_amp": 1e-4, "a2_seg": 2e-5, "energy": 0.3}
    if d2_nn is not None:
        std_errors["d2_nn"] = 0.02
    return RunRecord(
        index=index,
        beta=beta,
        observables=ObservableRecord(
            r2_mc=0.25 * beta,
            a2_amp=1e-3,
            a2_seg=2e-4,
            d2_nn=d2_nn,
            energy_mean=-1.5,
            energy_var=0.75,
            n_samples=400,
            std_errors=std_errors,
        ),
        flags=ValidityFlags(straight_ok=straight_ok, no_braiding=True, threshold_ratio=0.05),
        r2_3d_pred=0.2 * beta,
        r2_2d_pred=0.3 * beta,
        equilibrated=equilibrated,
        sweeps_run=1234,
        wall_time=1.5,
        seed=2**63 + 5,
    )
