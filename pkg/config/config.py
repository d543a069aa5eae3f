import os
import logging
from dotenv import load_dotenv

# Initialize logger
logger = logging.getLogger(__name__)

load_dotenv()


def _env_int(name: str, default: int) -> int:
    raw = os.getenv(name)
    if raw is None or raw == "":
        return default
    try:
        return max(1, int(raw))
    except ValueError:
        logger.warning(f"⚠️ Ignoring non-integer {name}={raw!r}, using {default}")
        return default


# Data-parallel worker count for descriptor maps
WORKERS = _env_int("GRAPHOPT_WORKERS", 1)

LOG_LEVEL = os.getenv("GRAPHOPT_LOG_LEVEL", "INFO").upper()

# Where bare BAL file names are looked up
DATA_DIR = os.getenv("GRAPHOPT_DATA_DIR", os.path.join(os.getcwd(), "data"))

# Where report files given by bare name are written
OUTPUT_DIR = os.getenv("GRAPHOPT_OUTPUT_DIR", os.path.join(os.getcwd(), "reports"))


def configure_logging(level: str = None) -> None:
    """Configure root logging once for an entry point"""
    logging.basicConfig(
        level=getattr(logging, (level or LOG_LEVEL), logging.INFO),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )


def resolve_data_path(path: str) -> str:
    """Resolve a BAL path, falling back to DATA_DIR for bare names"""
    if os.path.exists(path):
        return path
    candidate = os.path.join(DATA_DIR, path)
    if os.path.exists(candidate):
        return candidate
    return path


def resolve_output_path(path: str) -> str:
    """Bare report names go to OUTPUT_DIR; paths with a directory are kept"""
    if os.path.dirname(path):
        return path
    return os.path.join(OUTPUT_DIR, path)
