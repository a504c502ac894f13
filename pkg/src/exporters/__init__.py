from src.exporters.record import RunRecordExporter
from src.exporters.tables import ComparisonTableExporter, CurvesExporter
