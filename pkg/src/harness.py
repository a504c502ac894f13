"""
β-sweep orchestration: one independent chain per β, run serially or on a
process pool, with periodic checkpoints and per-β record files.

Output directory layout::

    records/beta_<i>.xml      one RunRecord per β point
    raw/beta_<i>.csv          per-snapshot observables (keep_raw)
    checkpoints/beta_<i>.ckpt chain state while a point is unfinished
    comparison.csv, curves.csv
"""

import time
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import replace
from pathlib import Path
from typing import List, Optional, Sequence

import numpy as np
from tqdm import tqdm

from src import meanfield, observables
from src.checkpoint import load_checkpoint, save_checkpoint
from src.errors import InsufficientDataError
from src.exporters import ComparisonTableExporter, CurvesExporter, RunRecordExporter
from src.exporters.tables import write_raw_samples
from src.logger_config import app_logger
from src.parser import RunRecordParser, expand_betas  # noqa: F401  (re-exported)
from src.sampler import FilamentChain
from src.schemas.data_schema import (
    BetaJob,
    ObservableSample,
    RunRecord,
    SweepConfig,
)

RECORDS_DIR = "records"
RAW_DIR = "raw"
CHECKPOINT_DIR = "checkpoints"
COMPARISON_FILE = "comparison.csv"
CURVES_FILE = "curves.csv"


def chain_seed(master_seed: int, index: int) -> int:
    """Seed of the chain at β index ``index``; depends on the index only, never on scheduling."""
    sequence = np.random.SeedSequence(master_seed, spawn_key=(index,))
    return int(sequence.generate_state(1, np.uint64)[0])


def record_path(output_dir: Path, index: int) -> Path:
    return Path(output_dir) / RECORDS_DIR / f"beta_{index:03d}.xml"


def raw_path(output_dir: Path, index: int) -> Path:
    return Path(output_dir) / RAW_DIR / f"beta_{index:03d}.csv"


def checkpoint_path(output_dir: Path, index: int) -> Path:
    return Path(output_dir) / CHECKPOINT_DIR / f"beta_{index:03d}.ckpt"


def build_jobs(cfg: SweepConfig, interrupt_after: Optional[int] = None) -> List[BetaJob]:
    return [
        BetaJob(
            index=index,
            params=cfg.model(beta),
            sampler=cfg.sampler,
            seed=chain_seed(cfg.master_seed, index),
            output_dir=Path(cfg.output_dir),
            checkpoint_interval=cfg.checkpoint_interval,
            keep_raw=cfg.keep_raw,
            straightness_threshold=cfg.straightness_threshold,
            interrupt_after=interrupt_after,
        )
        for index, beta in enumerate(cfg.betas)
    ]


def summarize(job: BetaJob, rows: Sequence[Sequence[float]], chain: FilamentChain, wall_time: float) -> RunRecord:
    """Aggregate measured rows of a finished chain into its RunRecord."""
    record = observables.aggregate([ObservableSample.from_row(row) for row in rows])
    predictions = meanfield.solve(job.params.scaled())
    return RunRecord(
        index=job.index,
        beta=job.beta,
        observables=record,
        flags=observables.validity_flags(record, job.params, job.straightness_threshold),
        r2_3d_pred=predictions.r2_3d,
        r2_2d_pred=predictions.r2_2d,
        equilibrated=chain.state.equilibrated,
        sweeps_run=chain.state.sweep_index,
        wall_time=wall_time,
        seed=job.seed,
    )


def run_beta_point(job: BetaJob) -> Optional[RunRecord]:
    """
    Run (or finish) the chain of one β point.

    A point whose record already exists is read back instead of rerun. A point
    with a checkpoint continues from it. Returns None when ``interrupt_after``
    stops the chain early, after leaving a checkpoint behind.
    """
    out_record = record_path(job.output_dir, job.index)
    if out_record.is_file():
        app_logger.info(f"Record for beta={job.beta:g} exists, skipping")
        return RunRecordParser(str(out_record)).parse()

    started = time.perf_counter()
    ckpt = checkpoint_path(job.output_dir, job.index)
    if ckpt.is_file():
        state, rows = load_checkpoint(ckpt, job.params, job.sampler, job.seed)
        chain = FilamentChain(job.params, job.sampler, state)
    else:
        chain = FilamentChain.start(job.params, job.sampler, job.seed)
        rows = []

    with tqdm(
        total=job.sampler.n_measurements,
        initial=len(rows),
        desc=f"beta={job.beta:g}",
        disable=not job.show_progress,
    ) as progress:
        while not chain.done:
            snapshot = chain.advance()
            if snapshot is not None:
                rows.append(observables.measure(snapshot).as_row())
                progress.update(1)
            sweep_index = chain.state.sweep_index
            if job.interrupt_after is not None and sweep_index >= job.interrupt_after:
                save_checkpoint(ckpt, chain.state, job.params, job.sampler, job.seed, rows)
                app_logger.info(f"Chain beta={job.beta:g} interrupted at sweep {sweep_index}")
                return None
            if sweep_index % job.checkpoint_interval == 0 and not chain.done:
                save_checkpoint(ckpt, chain.state, job.params, job.sampler, job.seed, rows)

    record = summarize(job, rows, chain, time.perf_counter() - started)
    if job.keep_raw:
        write_raw_samples(raw_path(job.output_dir, job.index), rows)
    RunRecordExporter(record).export(out_record)
    if ckpt.is_file():
        ckpt.unlink()
    app_logger.info(f"Finished {record}")
    return record


def run_sweep(cfg: SweepConfig, interrupt_after: Optional[int] = None) -> List[RunRecord]:
    """
    One chain per β over ``cfg.workers`` processes. Tables are written once every
    point has a record.
    """
    output_dir = Path(cfg.output_dir)
    for sub in (RECORDS_DIR, RAW_DIR, CHECKPOINT_DIR):
        (output_dir / sub).mkdir(parents=True, exist_ok=True)

    jobs = build_jobs(cfg, interrupt_after)
    app_logger.info(
        f"Sweep over {len(jobs)} beta values, N={cfg.n_filaments}, M={cfg.n_segments}, "
        f"workers={cfg.workers}"
    )
    results: List[Optional[RunRecord]] = [None] * len(jobs)
    if cfg.workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=min(cfg.workers, len(jobs))) as pool:
            futures = {pool.submit(run_beta_point, job): job.index for job in jobs}
            for future in tqdm(as_completed(futures), total=len(futures), desc="beta points"):
                results[futures[future]] = future.result()
    else:
        for job in tqdm(jobs, desc="beta points"):
            results[job.index] = run_beta_point(replace(job, show_progress=True))

    records = [r for r in results if r is not None]
    if len(records) < len(jobs):
        app_logger.warning(
            f"{len(jobs) - len(records)} beta points unfinished; run 'resume' to continue"
        )
        return records
    emit_comparison_table(records, output_dir)
    return records


def resume(cfg: SweepConfig) -> List[RunRecord]:
    """Continue an interrupted sweep; finished points are read back, the rest continue."""
    app_logger.info(f"Resuming sweep in {cfg.output_dir}")
    return run_sweep(cfg)


def emit_comparison_table(records: Sequence[RunRecord], output_dir: Path) -> Path:
    if not records:
        app_logger.error("No records to tabulate")
        raise InsufficientDataError("comparison table needs at least one record")
    output_dir = Path(output_dir)
    CurvesExporter(records).export(output_dir / CURVES_FILE)
    return ComparisonTableExporter(records).export(output_dir / COMPARISON_FILE)


def load_records(output_dir: Path) -> List[RunRecord]:
    """Every stored record of a sweep, ordered by β index."""
    files = sorted((Path(output_dir) / RECORDS_DIR).glob("beta_*.xml"))
    records = [RunRecordParser(str(path)).parse() for path in files]
    return sorted(records, key=lambda r: r.index)
