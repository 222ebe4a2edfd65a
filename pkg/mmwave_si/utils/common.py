# === Python Modules ===
import os
import sys
import json
import logging
from pathlib import Path
from typing import Dict, Any, List, TextIO

# === Package ===
from mmwave_si import __version__

# === Utils ===
from mmwave_si.utils.exceptions import ConfigError

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


# === Function to get a module logger ===
def get_logger(
        name: str
) -> logging.Logger:
    """
    Returns the package logger for a module. Handlers are only installed by `configure_logging`.
    """
    return logging.getLogger(name)


# === Function to install the stderr handler once ===
def configure_logging(
        level: str | None = None
) -> None:
    """
    Routes package logs to standard error.

    Args:
        - level (str | None): Log level name. Falls back to MMWAVE_SI_LOG_LEVEL, then INFO.
    """
    level_name = (level or os.getenv("MMWAVE_SI_LOG_LEVEL") or "INFO").upper()
    root = logging.getLogger("mmwave_si")

    handler = next((h for h in root.handlers if getattr(h, "_mmwave_si", False)), None)
    if handler is None:
        handler = logging.StreamHandler(stream = sys.stderr)
        handler.setFormatter(logging.Formatter(LOG_FORMAT))
        handler._mmwave_si = True
        root.addHandler(handler)
    else:
        handler.setStream(sys.stderr)

    root.setLevel(level_name)


# === Function to Open a saved JSON file ===
def open_file(
        file_path: Path
) -> Dict[str, Any]:
    """
    Opens and loads a JSON file.

    Args:
        - file_path (Path): Path to the JSON file.

    Returns:
        - data_dict (Dict[str, Any]): Parsed JSON content.
    """
    file_path = Path(file_path)

    ## === Check if the file exists ===
    if not file_path.exists():
        raise ConfigError(f"The specified file does not exist: {file_path}")

    try:
        with open(
            file_path,
            "r",
            encoding = "utf-8"
        ) as f:
            data_dict: Dict[str, Any] = json.load(f)

    except json.JSONDecodeError as e:
        raise ConfigError(f"Error Reading file {file_path}: {e}") from e

    return data_dict


# === Function to save a JSON file ===
def save_file(
        data: Dict[str, Any],
        file_path: Path
) -> Path:
    """
    Saves a dictionary as indented JSON, creating parent folders when needed.
    """
    file_path = Path(file_path)
    os.makedirs(
        file_path.parent,
        exist_ok = True
    )

    with open(
        file_path,
        "w",
        encoding = "utf-8"
    ) as f:
        json.dump(
            data,
            f,
            indent = 4,
            ensure_ascii = False
        )
        f.write("\n")

    return file_path


# === Metadata block written at the top of every tabular output ===
def build_metadata(
        command: List[str] | None = None,
        seed: int | None = None,
        extra: Dict[str, Any] | None = None
) -> Dict[str, Any]:
    """
    Collects the run metadata recorded in each output: command line, seed, package version.
    Nothing time-dependent goes in, so identical runs produce identical files.
    """
    metadata: Dict[str, Any] = {
        "generator": "mmwave-si",
        "version": __version__,
        "command": " ".join(command) if command else "",
        "seed": seed
    }
    if extra:
        metadata.update(extra)

    return metadata


def write_metadata_header(
        f: TextIO,
        metadata: Dict[str, Any]
) -> None:
    """
    Writes `# key: value` comment lines; dict values are written as compact sorted JSON.
    """
    for key, value in metadata.items():
        if isinstance(value, (dict, list)):
            value = json.dumps(
                value,
                sort_keys = True,
                separators = (",", ":")
            )
        f.write(f"# {key}: {value}\n")


def count_comment_lines(
        file_path: Path
) -> int:
    """
    Counts the leading `#` lines of a text file.
    """
    n = 0
    with open(
        file_path,
        "r",
        encoding = "utf-8"
    ) as f:
        for line in f:
            if not line.startswith("#"):
                break
            n += 1

    return n


# === Function to validate input paths before any compute starts ===
def require_file(
        file_path: Path,
        what: str = "input"
) -> Path:
    file_path = Path(file_path)
    if not file_path.is_file():
        raise ConfigError(f"{what} file does not exist: {file_path}")
    return file_path
