import os
from pathlib import Path

from lxml import etree as ET  # type: ignore

from src.config import CONFIG_SCHEMA_VERSION, RUN_RECORD_SCHEMA_FILE
from src.errors import ConfigError
from src.logger_config import app_logger
from src.validators.xsd_validator import XmlSchemaValidator

from ..schemas import data_schema
from .base import BaseExporter


class RunRecordExporter(BaseExporter):
    """
    Writes one β point's RunRecord as an XML record file and checks it against
    the record schema.
    """

    def __init__(self, record: data_schema.RunRecord, validate: bool = True):
        super().__init__([record])
        self.record = record
        self.validate = validate

    def _build_tree(self) -> ET._ElementTree:
        rec = self.record
        obs = rec.observables
        root = ET.Element("record")
        root.set("version", CONFIG_SCHEMA_VERSION)
        self._set_attributes(
            root,
            index=rec.index,
            beta=float(rec.beta),
            equilibrated=bool(rec.equilibrated),
            sweeps_run=rec.sweeps_run,
            wall_time=float(rec.wall_time),
            seed=rec.seed,
        )

        observables = self._create_sub_element(
            root, "observables", n_samples=obs.n_samples, energy_var=float(obs.energy_var)
        )
        means = {
            "r2_mc": obs.r2_mc,
            "a2_amp": obs.a2_amp,
            "a2_seg": obs.a2_seg,
            "d2_nn": obs.d2_nn,
            "energy": obs.energy_mean,
        }
        for name, mean in means.items():
            if mean is None:
                continue
            self._create_sub_element(
                observables,
                "estimate",
                name=name,
                mean=float(mean),
                stderr=obs.std_errors.get(name),
            )

        self._create_sub_element(
            root,
            "flags",
            straight_ok=bool(rec.flags.straight_ok),
            no_braiding=bool(rec.flags.no_braiding),
            threshold_ratio=float(rec.flags.threshold_ratio),
        )
        self._create_sub_element(
            root, "predictions", r2_3d=float(rec.r2_3d_pred), r2_2d=float(rec.r2_2d_pred)
        )
        return ET.ElementTree(root)

    def export(self, output_path: Path) -> Path:
        output_path = Path(output_path)
        output_path.parent.mkdir(parents=True, exist_ok=True)
        tmp = output_path.with_suffix(output_path.suffix + ".tmp")
        self._build_tree().write(str(tmp), pretty_print=True, xml_declaration=True, encoding="UTF-8")
        if self.validate:
            validator = XmlSchemaValidator(schema_path=RUN_RECORD_SCHEMA_FILE)
            if not validator.validate(tmp):
                tmp.unlink(missing_ok=True)
                raise ConfigError(f"record {output_path} failed schema validation")
        os.replace(tmp, output_path)
        app_logger.info(f"Record for beta={self.record.beta:g} written to {output_path}")
        return output_path
