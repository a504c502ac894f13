import logging

from .config import BASE_DIR, LOG_DIR, LOG_LEVEL

app_logger = logging.getLogger("filament_equilibrium")
app_logger.setLevel(getattr(logging, LOG_LEVEL, logging.INFO))
if not BASE_DIR:
    raise ValueError("BASE_DIR is not set in config.py")
LOG_DIR.mkdir(parents=True, exist_ok=True)
log_file_path = LOG_DIR / "logfile.log"

file_handler = logging.FileHandler(log_file_path, mode="a", encoding="utf-8")
file_handler.setLevel(logging.DEBUG)

file_formatter = logging.Formatter(
    "%(asctime)s [%(levelname)-8s] %(name)-15s - %(message)s",
    datefmt="%Y-%m-%d %H:%M:%S",
)
file_handler.setFormatter(file_formatter)

console_handler = logging.StreamHandler()
console_handler.setLevel(logging.WARNING)
console_handler.setFormatter(logging.Formatter("[%(levelname)s] %(message)s"))

if not app_logger.handlers:
    app_logger.addHandler(file_handler)
    app_logger.addHandler(console_handler)

logging.getLogger("xmlschema").setLevel(logging.WARNING)
