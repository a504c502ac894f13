import csv
from pathlib import Path
from typing import Iterable, Sequence

from src.logger_config import app_logger
from src.schemas.data_schema import OBSERVABLE_NAMES

from .base import BaseExporter

COMPARISON_COLUMNS = (
    "beta",
    "r2_mc",
    "r2_mc_stderr",
    "r2_3d_pred",
    "r2_2d_pred",
    "A2",
    "a2",
    "d2",
    "straight_ok",
    "no_braiding",
    "equilibrated",
)
CURVE_COLUMNS = ("beta", "series", "value", "stderr")


class ComparisonTableExporter(BaseExporter):
    """Monte Carlo radius against both predictions, one row per β, largest β first."""

    def _sorted(self):
        return sorted(self.records, key=lambda r: r.beta, reverse=True)

    def export(self, output_path: Path) -> Path:
        output_path = Path(output_path)
        output_path.parent.mkdir(parents=True, exist_ok=True)
        with open(output_path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(COMPARISON_COLUMNS)
            for rec in self._sorted():
                obs = rec.observables
                writer.writerow(
                    [
                        self._number(rec.beta),
                        self._number(obs.r2_mc),
                        self._number(obs.std_errors.get("r2_mc")),
                        self._number(rec.r2_3d_pred),
                        self._number(rec.r2_2d_pred),
                        self._number(obs.a2_amp),
                        self._number(obs.a2_seg),
                        self._number(obs.d2_nn),
                        self._flag(rec.flags.straight_ok),
                        self._flag(rec.flags.no_braiding),
                        self._flag(rec.equilibrated),
                    ]
                )
        app_logger.info(f"Comparison table with {len(self.records)} rows written to {output_path}")
        return output_path


class CurvesExporter(ComparisonTableExporter):
    """Long-format (beta, series, value, stderr) rows for generic plotting tools."""

    def export(self, output_path: Path) -> Path:
        output_path = Path(output_path)
        output_path.parent.mkdir(parents=True, exist_ok=True)
        with open(output_path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(CURVE_COLUMNS)
            for rec in self._sorted():
                obs = rec.observables
                series = (
                    ("r2_mc", obs.r2_mc, obs.std_errors.get("r2_mc")),
                    ("r2_3d_pred", rec.r2_3d_pred, None),
                    ("r2_2d_pred", rec.r2_2d_pred, None),
                    ("A2", obs.a2_amp, obs.std_errors.get("a2_amp")),
                    ("a2", obs.a2_seg, obs.std_errors.get("a2_seg")),
                    ("d2", obs.d2_nn, obs.std_errors.get("d2_nn")),
                )
                for name, value, stderr in series:
                    if value is None:
                        continue
                    writer.writerow(
                        [self._number(rec.beta), name, self._number(value), self._number(stderr)]
                    )
        app_logger.info(f"Curve data written to {output_path}")
        return output_path


def write_raw_samples(output_path: Path, rows: Iterable[Sequence[float]]) -> Path:
    """Per-snapshot observables, kept so the series can be re-blocked later."""
    output_path = Path(output_path)
    output_path.parent.mkdir(parents=True, exist_ok=True)
    with open(output_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(OBSERVABLE_NAMES)
        for row in rows:
            writer.writerow([repr(float(v)) for v in row])
    return output_path

