from pathlib import Path
import os
from dotenv import load_dotenv

load_dotenv()

BASE_DIR: Path | None = Path(__file__).resolve().parent.parent
SCHEMA_DIR: Path = BASE_DIR / "src" / "schemas"
SWEEP_CONFIG_SCHEMA_FILE: Path = SCHEMA_DIR / "sweep_config.xsd"
RUN_RECORD_SCHEMA_FILE: Path = SCHEMA_DIR / "run_record.xsd"

OUTPUT_DIR: Path = Path(os.getenv("FILAMENT_OUTPUT_DIR", str(BASE_DIR / "output")))
LOG_DIR: Path = Path(os.getenv("FILAMENT_LOG_DIR", str(BASE_DIR / "logs")))
LOG_LEVEL: str = os.getenv("FILAMENT_LOG_LEVEL", "INFO").upper()

DEFAULT_WORKERS: int = int(os.getenv("FILAMENT_WORKERS", str(os.cpu_count() or 1)))
# Sweeps between from-scratch audits of the energy cache; 0 disables.
DEBUG_AUDIT_INTERVAL: int = int(os.getenv("FILAMENT_AUDIT_INTERVAL", "0"))

CHECKPOINT_FORMAT_VERSION: int = 1
CONFIG_SCHEMA_VERSION: str = "1"
