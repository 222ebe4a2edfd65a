# === Python Modules ===
import sys
import json
from pathlib import Path
from typing import Any, Dict, List

import numpy as np

# === Components ===
from mmwave_si.components.grid import load_any_grid
from mmwave_si.components.linkmath import LOW_INR_THRESHOLD_DB
from mmwave_si.components.models import global_prob_below

# === Utils ===
from mmwave_si.utils.common import (
    build_metadata,
    get_logger,
    require_file,
    save_file,
    write_metadata_header
)
from mmwave_si.utils.exceptions import ConfigError

logger = get_logger(__name__)


# === Function to compute the headline statistics of a grid ===
def grid_headlines(
        values_db: np.ndarray
) -> Dict[str, float]:
    """
    Minimum, maximum and median INR, plus the fractions of beam pairs above 0 dB, at least 10 dB
    and at most 3 dB.
    """
    values = np.asarray(values_db, dtype = np.float64).ravel()

    return {
        "n_pairs": int(values.size),
        "min_inr_db": float(values.min()),
        "max_inr_db": float(values.max()),
        "median_inr_db": float(np.median(values)),
        "fraction_above_0db": float(np.mean(values > LOW_INR_THRESHOLD_DB)),
        "fraction_at_least_10db": float(np.mean(values >= 10.0)),
        "fraction_at_most_3db": float(np.mean(values <= 3.0))
    }


def model_headlines() -> Dict[str, float]:
    """The same fractions predicted by the global log-normal model."""
    return {
        "model_fraction_above_0db": 1.0 - global_prob_below(0.0),
        "model_fraction_at_least_10db": 1.0 - global_prob_below(10.0),
        "model_fraction_at_most_3db": global_prob_below(3.0)
    }


# === Main Report Pipeline ===
class ReportPipeline:
    def __init__(
            self,
            grid_path: Path,
            out_path: Path | None = None,
            output_format: str = "text",
            command: List[str] | None = None
    ):
        """
        Initializes the ReportPipeline.

        Args:
            - grid_path (Path): Grid CSV or binary cache.
            - out_path (Path | None): Report file; standard output when omitted.
            - output_format (str): "text" (`key: value` lines) or "json".
            - command (List[str] | None): Command line recorded in the output.
        """
        if output_format not in ("text", "json"):
            raise ConfigError(f"unknown report format {output_format!r}")

        self.grid_path: Path = require_file(grid_path, "grid")
        self.out_path: Path | None = out_path
        self.output_format: str = output_format
        self.command: List[str] = command or []

    def report(
            self
    ) -> Dict[str, Any]:
        """
        Computes the headline statistics of the grid next to the global-model predictions.

        Returns:
            - Dict[str, Any]: Grid statistics followed by model predictions.
        """
        grid = load_any_grid(self.grid_path)
        summary = {
            **grid_headlines(grid.values_db),
            **model_headlines()
        }
        metadata = build_metadata(command = self.command)

        if self.output_format == "json":
            if self.out_path is None:
                json.dump({"metadata": metadata, **summary}, sys.stdout, indent = 4)
                sys.stdout.write("\n")
            else:
                save_file({"metadata": metadata, **summary}, self.out_path)
        else:
            if self.out_path is None:
                self._write_text(sys.stdout, metadata, summary)
            else:
                self.out_path.parent.mkdir(
                    parents = True,
                    exist_ok = True
                )
                with open(self.out_path, "w", encoding = "utf-8") as f:
                    self._write_text(f, metadata, summary)

        if self.out_path is not None:
            logger.info(f"Saved: {self.out_path}")

        return summary

    @staticmethod
    def _write_text(f, metadata: Dict[str, Any], summary: Dict[str, Any]) -> None:
        write_metadata_header(f, metadata)
        for key, value in summary.items():
            f.write(f"{key}: {value:.6g}\n" if isinstance(value, float) else f"{key}: {value}\n")
