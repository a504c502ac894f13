from pathlib import Path
from typing import List, Optional
from xml.etree.ElementTree import ParseError

import xmlschema

from src.logger_config import app_logger


class XmlSchemaValidator:
    """
    Checks config and record files against one XSD, compiled once on construction.

    ``validate`` may be called for any number of files; the reasons of the last
    failed validation are kept in ``errors``.
    """

    def __init__(self, schema_path: Path):
        """
        :param schema_path: Path to the XSD file.
        """
        self.schema_path = Path(schema_path)
        self.errors: List[str] = []
        self.schema: Optional[xmlschema.XMLSchema11] = self._load_schema()

    def _load_schema(self) -> Optional[xmlschema.XMLSchema11]:
        if not self.schema_path.is_file():
            app_logger.error(f"Schema file not found at '{self.schema_path}'")
            return None
        try:
            return xmlschema.XMLSchema11(str(self.schema_path))
        except xmlschema.XMLSchemaException as e:
            app_logger.error(f"Failed to compile schema {self.schema_path.name}: {e}")
            return None

    def validate(self, xml_path: Path) -> bool:
        """
        :param xml_path: File to check.
        :return: True if the file conforms to the schema.
        """
        self.errors = []
        if self.schema is None:
            self.errors.append(f"schema {self.schema_path.name} is not loaded")
            app_logger.error(f"Validation skipped for '{xml_path}': schema not loaded")
            return False
        xml_path = Path(xml_path)
        if not xml_path.is_file():
            self.errors.append(f"{xml_path} not found")
            app_logger.error(f"Validation failed: '{xml_path}' not found")
            return False

        try:
            for error in self.schema.iter_errors(str(xml_path)):
                line = getattr(error, "sourceline", None)
                location = f"line {line}" if line is not None else "unknown location"
                self.errors.append(f"{location}: {error.reason} (path {error.path})")
        except ParseError as e:
            self.errors.append(str(e))
            app_logger.error(f"Validation failed: '{xml_path.name}' cannot be parsed: {e}")
            return False
        except Exception as e:
            self.errors.append(str(e))
            app_logger.error(f"Validation failed for '{xml_path.name}': {e}")
            return False

        if self.errors:
            app_logger.error(f"'{xml_path.name}' does not conform to {self.schema_path.name}:")
            for message in self.errors:
                app_logger.error(f"  - {message}")
            return False
        app_logger.debug(f"'{xml_path.name}' is valid against {self.schema_path.name}")
        return True
