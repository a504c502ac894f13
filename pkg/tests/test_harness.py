from dataclasses import replace

import pytest

import main
from src import harness, meanfield
from src.errors import InsufficientDataError
from src.schemas.data_schema import SamplerConfig, SweepConfig

TINY_CONFIG = """<?xml version="1.0" encoding="UTF-8"?>
<sweep version="1">
  <model n_filaments="2" n_segments="2" length="2" alpha="1" mu="1"/>
  <betas><beta>0.5</beta><beta>2</beta></betas>
  <sampler>
    <translation_halfwidth>0.2</translation_halfwidth>
    <moves_per_sweep>2</moves_per_sweep>
    <burn_in_sweeps>30</burn_in_sweeps>
    <measure_interval>1</measure_interval>
    <n_measurements>8</n_measurements>
    <equilibration_window>10</equilibration_window>
    <max_burn_in_sweeps>60</max_burn_in_sweeps>
    <init_square_side>2</init_square_side>
  </sampler>
  <run master_seed="99" checkpoint_interval="10" workers="1"/>
</sweep>
"""


@pytest.fixture
def sweep_config(tmp_path):
    return SweepConfig(
        n_filaments=2,
        n_segments=2,
        length=2.0,
        alpha=1.0,
        mu=1.0,
        betas=(0.5, 2.0, 8.0),
        sampler=SamplerConfig(
            translation_halfwidth=0.2,
            moves_per_sweep=2,
            burn_in_sweeps=40,
            measure_interval=1,
            n_measurements=16,
            equilibration_window=10,
            max_burn_in_sweeps=80,
            tune_interval=10,
            init_square_side=2.0,
        ),
        master_seed=2024,
        output_dir=tmp_path / "run",
        checkpoint_interval=10,
        workers=1,
    )


def relocate(cfg, path, **changes):
    return replace(cfg, output_dir=path, **changes)


def raw_files(output_dir):
    return {p.name: p.read_bytes() for p in sorted((output_dir / harness.RAW_DIR).glob("*.csv"))}


def without_timing(record):
    return replace(record, wall_time=0.0)


def test_chain_seeds_are_deterministic_and_distinct():
    seeds = [harness.chain_seed(7, i) for i in range(200)]

    assert seeds == [harness.chain_seed(7, i) for i in range(200)]
    assert len(set(seeds)) == len(seeds)
    assert harness.chain_seed(8, 0) != seeds[0]
    assert all(0 <= s < 2**64 for s in seeds)


def test_jobs_follow_beta_order(sweep_config):
    jobs = harness.build_jobs(sweep_config)

    assert [j.index for j in jobs] == [0, 1, 2]
    assert [j.beta for j in jobs] == [0.5, 2.0, 8.0]
    assert jobs[1].seed == harness.chain_seed(sweep_config.master_seed, 1)


def test_serial_sweep_writes_outputs(sweep_config):
    records = harness.run_sweep(sweep_config)
    out = sweep_config.output_dir

    assert [r.index for r in records] == [0, 1, 2]
    for i in range(3):
        assert harness.record_path(out, i).is_file()
        assert harness.raw_path(out, i).is_file()
        assert not harness.checkpoint_path(out, i).exists()
    assert (out / harness.COMPARISON_FILE).is_file()
    assert (out / harness.CURVES_FILE).is_file()
    assert all(r.observables.n_samples == 16 for r in records)


def test_predictions_match_mean_field(sweep_config):
    for record in harness.run_sweep(sweep_config):
        expected = meanfield.solve(sweep_config.model(record.beta).scaled())
        assert record.r2_3d_pred == expected.r2_3d
        assert record.r2_2d_pred == expected.r2_2d


def test_results_do_not_depend_on_output_dir(sweep_config, tmp_path):
    first = harness.run_sweep(sweep_config)
    second = harness.run_sweep(relocate(sweep_config, tmp_path / "elsewhere"))

    assert [without_timing(r) for r in first] == [without_timing(r) for r in second]
    assert raw_files(sweep_config.output_dir) == raw_files(tmp_path / "elsewhere")


def test_interrupted_sweep_resumes_bit_identically(sweep_config, tmp_path):
    reference = harness.run_sweep(sweep_config)

    interrupted = relocate(sweep_config, tmp_path / "interrupted")
    assert harness.run_sweep(interrupted, interrupt_after=25) == []
    for i in range(3):
        assert harness.checkpoint_path(interrupted.output_dir, i).is_file()
        assert not harness.record_path(interrupted.output_dir, i).exists()
    assert not (interrupted.output_dir / harness.COMPARISON_FILE).exists()

    resumed = harness.resume(interrupted)

    assert [without_timing(r) for r in resumed] == [without_timing(r) for r in reference]
    assert raw_files(interrupted.output_dir) == raw_files(sweep_config.output_dir)
    assert not any((interrupted.output_dir / harness.CHECKPOINT_DIR).iterdir())


def test_rerun_is_idempotent(sweep_config):
    first = harness.run_sweep(sweep_config)
    out = sweep_config.output_dir
    record_bytes = harness.record_path(out, 0).read_bytes()
    table_bytes = (out / harness.COMPARISON_FILE).read_bytes()

    second = harness.run_sweep(sweep_config)

    assert second == first
    assert harness.record_path(out, 0).read_bytes() == record_bytes
    assert (out / harness.COMPARISON_FILE).read_bytes() == table_bytes


def test_table_regenerated_from_records(sweep_config):
    harness.run_sweep(sweep_config)
    out = sweep_config.output_dir
    before = (out / harness.COMPARISON_FILE).read_bytes()
    (out / harness.COMPARISON_FILE).unlink()

    harness.emit_comparison_table(harness.load_records(out), out)

    assert (out / harness.COMPARISON_FILE).read_bytes() == before


def test_empty_table_rejected(tmp_path):
    with pytest.raises(InsufficientDataError):
        harness.emit_comparison_table([], tmp_path)


@pytest.mark.slow
def test_parallel_matches_serial(sweep_config, tmp_path):
    serial = harness.run_sweep(sweep_config)
    parallel = harness.run_sweep(relocate(sweep_config, tmp_path / "parallel", workers=3))

    assert [without_timing(r) for r in parallel] == [without_timing(r) for r in serial]
    assert raw_files(tmp_path / "parallel") == raw_files(sweep_config.output_dir)


def test_cli_run_and_table(tmp_path):
    config = tmp_path / "tiny.xml"
    config.write_text(TINY_CONFIG, encoding="utf-8")
    out = tmp_path / "cli"

    assert main.main(["run", str(config), "--output-dir", str(out), "--seed", "3"]) == main.EXIT_OK
    assert len(harness.load_records(out)) == 2

    (out / harness.COMPARISON_FILE).unlink()
    assert main.main(["table", str(out)]) == main.EXIT_OK
    assert (out / harness.COMPARISON_FILE).is_file()


def test_cli_bad_config(tmp_path):
    assert main.main(["run", str(tmp_path / "missing.xml")]) == main.EXIT_BAD_INPUT

    broken = tmp_path / "broken.xml"
    broken.write_text("<sweep version='1'>", encoding="utf-8")
    assert main.main(["resume", str(broken), "--output-dir", str(tmp_path)]) == main.EXIT_BAD_INPUT


def test_cli_table_without_records(tmp_path):
    assert main.main(["table", str(tmp_path)]) == main.EXIT_BAD_INPUT


def test_cli_verify_analytic_checks():
    assert main.main(["verify", "--skip-chains"]) == main.EXIT_OK


def test_cli_verify_detects_perturbed_saddle():
    assert (
        main.main(["verify", "--skip-chains", "--perturb-eta", "1e-3"]) == main.EXIT_CHECK_FAILED
    )
