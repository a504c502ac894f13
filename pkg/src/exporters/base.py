from abc import ABC, abstractmethod
from pathlib import Path
from typing import Any, Sequence

import numpy as np
from lxml import etree as ET  # type: ignore

from ..schemas import data_schema


class BaseExporter(ABC):
    """
    Common contract of every exporter: take run records and write them to a path.
    """

    def __init__(self, records: Sequence[data_schema.RunRecord]):
        self.records = list(records)
        super().__init__()

    @abstractmethod
    def export(self, output_path: Path) -> Path:
        """Write the records and return the path written."""

    @staticmethod
    def _create_sub_element(parent: ET._Element, tag_name: str, **attributes: Any) -> ET._Element:
        """
        Create an XML sub-element carrying the given attributes.

        :param parent: Parent XML element.
        :param tag_name: Name of the new sub-element.
        :param attributes: Attribute values; None is skipped, bools render as true/false.
        :return: Created XML sub-element.
        """
        element = ET.SubElement(parent, tag_name)
        BaseExporter._set_attributes(element, **attributes)
        return element

    @staticmethod
    def _set_attributes(element: ET._Element, **attributes: Any) -> None:
        for name, value in attributes.items():
            if value is None:
                continue
            if isinstance(value, (bool, np.bool_)):
                element.set(name, "true" if value else "false")
            elif isinstance(value, (float, np.floating)):
                element.set(name, repr(float(value)))
            else:
                element.set(name, str(value))

    @staticmethod
    def _flag(value: bool) -> int:
        return 1 if value else 0

    @staticmethod
    def _number(value) -> str:
        if value is None:
            return ""
        return repr(float(value))
