import os
from dataclasses import fields
from pathlib import Path
from typing import Dict, Optional, Tuple

import numpy as np
from lxml import etree as ET  # type: ignore

from src.config import (
    CONFIG_SCHEMA_VERSION,
    DEFAULT_WORKERS,
    OUTPUT_DIR,
    RUN_RECORD_SCHEMA_FILE,
    SWEEP_CONFIG_SCHEMA_FILE,
)
from src.errors import ConfigError
from src.logger_config import app_logger
from src.schemas import data_schema
from src.validators.xsd_validator import XmlSchemaValidator

_TRUE = {"true", "1"}


def _as_bool(text: Optional[str], default: bool) -> bool:
    if text is None:
        return default
    return text.strip().lower() in _TRUE


def expand_betas(grid: data_schema.BetaGrid) -> Tuple[float, ...]:
    """
    Explicit values, then the inclusive log-spaced range, then the extra points.

    The order fixes each β's index and therefore its chain seed.
    """
    values = list(grid.explicit)
    if grid.log_count:
        if not 0 < grid.log_min <= grid.log_max:
            raise ConfigError(
                f"logspace needs 0 < min <= max, got min={grid.log_min}, max={grid.log_max}"
            )
        values.extend(float(b) for b in np.geomspace(grid.log_min, grid.log_max, grid.log_count))
    values.extend(grid.extra)
    return tuple(float(b) for b in values)


class _XmlFileParser:
    """Loads one XML file, optionally checking it against an XSD first."""

    schema_file: Optional[Path] = None

    def __init__(self, file_path: str, validate: bool = True):
        """
        :param file_path: Path to the XML file.
        :param validate: Check the file against ``schema_file`` before parsing.
        :raises ConfigError: If the file is missing, malformed or invalid.
        """
        if not os.path.exists(file_path):
            app_logger.error(f"File not found at path: {file_path}")
            raise ConfigError(f"File not found at path: {file_path}")
        self.file_path = str(file_path)
        if validate and self.schema_file is not None:
            validator = XmlSchemaValidator(schema_path=self.schema_file)
            if not validator.validate(Path(self.file_path)):
                raise ConfigError(f"{self.file_path} does not conform to {self.schema_file.name}")
        self._root = self._get_xml_root()

    def _get_xml_root(self) -> ET._Element:
        try:
            parser = ET.XMLParser(resolve_entities=False)
            return ET.parse(self.file_path, parser).getroot()
        except ET.XMLSyntaxError as e:
            app_logger.error(f"XML syntax error in file {self.file_path}: {e}")
            raise ConfigError(f"XML syntax error in file {self.file_path}: {e}")
        except OSError as e:
            app_logger.error(f"Error reading file {self.file_path}: {e}")
            raise ConfigError(f"Error reading file {self.file_path}: {e}")

    def _require(self, parent: ET._Element, tag: str) -> ET._Element:
        element = parent.find(tag)
        if element is None:
            app_logger.error(f"<{tag}> tag not found in file {self.file_path}")
            raise ConfigError(f"<{tag}> tag not found in {self.file_path}")
        return element


class SweepConfigParser(_XmlFileParser):
    """
    Reads a β-sweep configuration file into a SweepConfig.
    Keyword overrides take precedence over the file's values.
    """

    schema_file = SWEEP_CONFIG_SCHEMA_FILE

    def parse(
        self,
        output_dir: Optional[Path] = None,
        master_seed: Optional[int] = None,
        workers: Optional[int] = None,
        max_sweeps: Optional[int] = None,
    ) -> data_schema.SweepConfig:
        root = self._root
        if root.tag != "sweep":
            raise ConfigError(f"root element must be <sweep>, got <{root.tag}>")
        if root.get("version") != CONFIG_SCHEMA_VERSION:
            app_logger.error(f"Unsupported config version {root.get('version')!r}")
            raise ConfigError(f"unsupported config version {root.get('version')!r}")

        model = self._require(root, "model")
        sampler = self._parse_sampler(root.find("sampler"), max_sweeps)
        run = root.find("run")
        run_attrs: Dict[str, str] = dict(run.attrib) if run is not None else {}

        if output_dir is None:
            output_dir = Path(run_attrs["output_dir"]) if "output_dir" in run_attrs else OUTPUT_DIR
        try:
            return data_schema.SweepConfig(
                n_filaments=int(model.get("n_filaments")),
                n_segments=int(model.get("n_segments")),
                length=float(model.get("length")),
                alpha=float(model.get("alpha")),
                mu=float(model.get("mu")),
                betas=expand_betas(self._parse_betas(self._require(root, "betas"))),
                sampler=sampler,
                master_seed=(
                    int(run_attrs.get("master_seed", 0)) if master_seed is None else master_seed
                ),
                output_dir=Path(output_dir),
                checkpoint_interval=int(run_attrs.get("checkpoint_interval", 1000)),
                workers=int(run_attrs.get("workers", DEFAULT_WORKERS)) if workers is None else workers,
                keep_raw=_as_bool(run_attrs.get("keep_raw"), True),
                straightness_threshold=float(run_attrs.get("straightness_threshold", 0.1)),
            )
        except (TypeError, ValueError) as e:
            app_logger.error(f"Invalid value in {self.file_path}: {e}")
            raise ConfigError(f"Invalid value in {self.file_path}: {e}") from e

    def _parse_betas(self, betas: ET._Element) -> data_schema.BetaGrid:
        logspace = betas.find("logspace")
        return data_schema.BetaGrid(
            explicit=tuple(float(b.text) for b in betas.findall("beta")),
            log_count=int(logspace.get("count")) if logspace is not None else 0,
            log_min=float(logspace.get("min")) if logspace is not None else 0.0,
            log_max=float(logspace.get("max")) if logspace is not None else 0.0,
            extra=tuple(float(b.text) for b in betas.findall("extra")),
        )

    def _parse_sampler(
        self, sampler: Optional[ET._Element], max_sweeps: Optional[int]
    ) -> data_schema.SamplerConfig:
        values = {}
        if sampler is not None:
            for field in fields(data_schema.SamplerConfig):
                text = sampler.findtext(field.name)
                if text is None:
                    continue
                if field.type in ("bool", bool):
                    values[field.name] = _as_bool(text, True)
                elif field.type in ("int", int):
                    values[field.name] = int(text)
                else:
                    values[field.name] = float(text)
        if max_sweeps is not None:
            values["max_burn_in_sweeps"] = max_sweeps
            values["burn_in_sweeps"] = min(
                values.get("burn_in_sweeps", data_schema.SamplerConfig.burn_in_sweeps), max_sweeps
            )
        return data_schema.SamplerConfig(**values)


class RunRecordParser(_XmlFileParser):
    """Reads a per-β record file written by RunRecordExporter."""

    schema_file = RUN_RECORD_SCHEMA_FILE

    def parse(self) -> data_schema.RunRecord:
        root = self._root
        observables = self._require(root, "observables")
        estimates = {
            e.get("name"): (float(e.get("mean")), e.get("stderr"))
            for e in observables.findall("estimate")
        }
        std_errors = {
            name: float(stderr) for name, (_, stderr) in estimates.items() if stderr is not None
        }
        try:
            record = data_schema.ObservableRecord(
                r2_mc=estimates["r2_mc"][0],
                a2_amp=estimates["a2_amp"][0],
                a2_seg=estimates["a2_seg"][0],
                d2_nn=estimates["d2_nn"][0] if "d2_nn" in estimates else None,
                energy_mean=estimates["energy"][0],
                energy_var=float(observables.get("energy_var")),
                n_samples=int(observables.get("n_samples")),
                std_errors=std_errors,
            )
        except KeyError as e:
            app_logger.error(f"Missing estimate {e} in {self.file_path}")
            raise ConfigError(f"Missing estimate {e} in {self.file_path}") from e

        flags = self._require(root, "flags")
        predictions = self._require(root, "predictions")
        return data_schema.RunRecord(
            index=int(root.get("index")),
            beta=float(root.get("beta")),
            observables=record,
            flags=data_schema.ValidityFlags(
                straight_ok=_as_bool(flags.get("straight_ok"), False),
                no_braiding=_as_bool(flags.get("no_braiding"), False),
                threshold_ratio=float(flags.get("threshold_ratio")),
            ),
            r2_3d_pred=float(predictions.get("r2_3d")),
            r2_2d_pred=float(predictions.get("r2_2d")),
            equilibrated=_as_bool(root.get("equilibrated"), False),
            sweeps_run=int(root.get("sweeps_run")),
            wall_time=float(root.get("wall_time")),
            seed=int(root.get("seed")),
        )
