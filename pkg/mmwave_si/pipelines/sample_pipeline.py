# === Python Modules ===
import sys
from pathlib import Path
from typing import Callable, Dict, List

import numpy as np
import pandas as pd

# === Schema ===
from mmwave_si.schema.schema import NeighborhoodSpec

# === Components ===
from mmwave_si.components import models
from mmwave_si.components.grid import FLOAT_FORMAT
from mmwave_si.components.stats import make_rng

# === Utils ===
from mmwave_si.utils.common import (
    build_metadata,
    get_logger,
    write_metadata_header
)
from mmwave_si.utils.exceptions import ConfigError

logger = get_logger(__name__)

CONDITIONED = ("inr-min-cond", "inr-max-cond")
QUANTITIES = (
    "global",
    "inr-min",
    "inr-max",
    "inr-min-cond",
    "inr-max-cond",
    "inr-min-composed",
    "inr-max-composed",
    "range"
)
FORMATS = ("lines", "csv")


# === Main Sampling Pipeline ===
class SamplePipeline:
    def __init__(
            self,
            quantity: str = "global",
            neighborhood: NeighborhoodSpec = NeighborhoodSpec(dtheta_deg = 1, dphi_deg = 1),
            inr_db: float | None = None,
            n: int = 1,
            seed: int | None = None,
            out_path: Path | None = None,
            output_format: str = "lines",
            command: List[str] | None = None
    ):
        """
        Initializes the SamplePipeline.

        Args:
            - quantity (str): One of QUANTITIES.
            - neighborhood (NeighborhoodSpec): Table cell to draw from.
            - inr_db (float | None): Nominal INR, required by the conditioned quantities.
            - n (int): Number of draws.
            - seed (int | None): Generator seed; a fresh one is drawn and recorded when omitted.
            - out_path (Path | None): Output file; standard output when omitted.
            - output_format (str): "lines" (one value per line) or "csv".
            - command (List[str] | None): Command line recorded in the output.
        """
        if quantity not in QUANTITIES:
            raise ConfigError(f"unknown quantity {quantity!r}; choose from {', '.join(QUANTITIES)}")
        if quantity in CONDITIONED and inr_db is None:
            raise ConfigError(f"--inr-db is required for {quantity}")
        if output_format not in FORMATS:
            raise ConfigError(f"unknown format {output_format!r}; choose from {', '.join(FORMATS)}")
        if n < 1:
            raise ConfigError("--n must be at least 1")

        self.quantity: str = quantity
        self.neighborhood: NeighborhoodSpec = neighborhood
        self.inr_db: float | None = inr_db
        self.n: int = n
        self.seed: int = seed if seed is not None else int(np.random.SeedSequence().entropy % 2 ** 63)
        self.out_path: Path | None = out_path
        self.output_format: str = output_format
        self.command: List[str] = command or []

    def _draw(
            self,
            rng: np.random.Generator
    ) -> np.ndarray:
        spec, n = self.neighborhood, self.n
        samplers: Dict[str, Callable[[], np.ndarray]] = {
            "global": lambda: models.sample_global_inr(rng, n),
            "inr-min": lambda: models.sample_inr_min(spec, rng, n),
            "inr-max": lambda: models.sample_inr_max(spec, rng, n),
            "inr-min-cond": lambda: models.sample_inr_min_conditioned(spec, self.inr_db, rng, n),
            "inr-max-cond": lambda: models.sample_inr_max_conditioned(spec, self.inr_db, rng, n),
            "inr-min-composed": lambda: models.sample_inr_min_composed(spec, rng, n),
            "inr-max-composed": lambda: models.sample_inr_max_composed(spec, rng, n),
            "range": lambda: models.sample_inr_range(spec, rng, n)
        }
        return np.atleast_1d(samplers[self.quantity]())

    def sample(
            self
    ) -> np.ndarray:
        """
        Draws the samples and writes them after the metadata block.

        Returns:
            - np.ndarray: The draws, in dB.
        """
        values = self._draw(make_rng(self.seed))

        extra = {
            "quantity": self.quantity,
            "neighborhood": str(self.neighborhood)
        }
        if self.inr_db is not None:
            extra["inr_db"] = self.inr_db
        metadata = build_metadata(
            command = self.command,
            seed = self.seed,
            extra = extra
        )

        if self.out_path is not None:
            self.out_path.parent.mkdir(
                parents = True,
                exist_ok = True
            )
            with open(self.out_path, "w", encoding = "utf-8", newline = "") as f:
                self._write(f, values, metadata)
            logger.info(f"Saved: {self.out_path}")
        else:
            self._write(sys.stdout, values, metadata)

        return values

    def _write(self, f, values: np.ndarray, metadata: Dict) -> None:
        write_metadata_header(f, metadata)
        if self.output_format == "csv":
            pd.DataFrame({"sample": np.arange(values.size), "value_db": values}).to_csv(
                f,
                index = False,
                float_format = FLOAT_FORMAT,
                lineterminator = "\n"
            )
        else:
            f.writelines(f"{FLOAT_FORMAT % v}\n" for v in values)
