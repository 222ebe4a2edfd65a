# === Python Modules ===
from pathlib import Path
from typing import Dict, List

import numpy as np

# === Schema ===
from mmwave_si.schema.schema import (
    FitRecord,
    FitReport,
    GammaFitDb,
    InrGrid,
    NeighborhoodSpec,
    NormalFitDb
)

# === Components ===
from mmwave_si.components.grid import load_any_grid
from mmwave_si.components.neighborhood import (
    delta_max_db,
    delta_min_db,
    pair_neighborhood_stats
)
from mmwave_si.components.stats import fit_gamma_db, fit_normal_db

# === Utils ===
from mmwave_si.utils.common import (
    build_metadata,
    get_logger,
    require_file,
    save_file
)
from mmwave_si.utils.exceptions import DegenerateSampleError

logger = get_logger(__name__)

# Nominal INR values at which conditioned fits are computed.
CONDITIONED_INR_DB = [-20.0, -10.0, 0.0, 10.0, 20.0, 30.0, 40.0]


def _record(
        fit: NormalFitDb | GammaFitDb,
        n_samples: int
) -> FitRecord:
    return FitRecord(
        **fit.to_json_dict(),
        n_samples = n_samples
    )


def _positive(values: np.ndarray) -> np.ndarray:
    values = np.asarray(values).ravel()
    return values[values > 0]


# === Main Fitting Pipeline ===
class FitPipeline:
    def __init__(
            self,
            grid_path: Path,
            out_path: Path,
            max_neighborhood: int = 5,
            bin_width_db: float = 1.0,
            min_bin_samples: int = 100,
            command: List[str] | None = None
    ):
        """
        Initializes the FitPipeline.

        Args:
            - grid_path (Path): Grid CSV or binary cache.
            - out_path (Path): Fit JSON to write.
            - max_neighborhood (int): Fits cover dtheta, dphi in 0..max_neighborhood degrees.
            - bin_width_db (float): Width of the center-INR bins for conditioned fits.
            - min_bin_samples (int): Bins with fewer positive samples are reported as absent.
            - command (List[str] | None): Command line recorded in the output.
        """
        self.grid_path: Path = require_file(grid_path, "grid")
        self.out_path: Path = Path(out_path)
        self.max_neighborhood: int = max_neighborhood
        self.bin_width_db: float = bin_width_db
        self.min_bin_samples: int = max(min_bin_samples, 10)
        self.command: List[str] = command or []

    def _conditioned(
            self,
            grid: InrGrid,
            deltas: np.ndarray,
            d: int,
            target: Dict[str, FitRecord | None]
    ) -> None:
        """Gamma fits of `deltas` over pairs whose INR lies in each center bin."""
        inr = grid.values_db.ravel()
        deltas = deltas.ravel()

        for center in CONDITIONED_INR_DB:
            key = f"{d},{center:g}"
            in_bin = np.abs(inr - center) <= self.bin_width_db / 2.0
            samples = _positive(deltas[in_bin])

            if samples.size < self.min_bin_samples:
                target[key] = None
                continue
            try:
                target[key] = _record(fit_gamma_db(samples), samples.size)
            except DegenerateSampleError as e:
                logger.warning(f"conditioned bin {key} marked absent: {e}")
                target[key] = None

    def fit(
            self
    ) -> FitReport:
        """
        Fits the global model and the neighborhood tables to a grid and writes them as JSON.

        Returns:
            - FitReport: Every fit, with absent conditioned bins as None.
        """
        ## === Step 1: Global fit ===
        grid = load_any_grid(self.grid_path)
        values = grid.values_db.ravel()
        report = FitReport(
            global_fit = _record(fit_normal_db(values), values.size),
            bin_width_db = self.bin_width_db
        )
        logger.info(f"Global fit: {report.global_fit.params}")

        ## === Step 2: Neighborhood tables ===
        for dphi in range(self.max_neighborhood + 1):
            for dtheta in range(self.max_neighborhood + 1):
                spec = NeighborhoodSpec(dtheta_deg = dtheta, dphi_deg = dphi)
                key = f"{dtheta},{dphi}"
                stats = pair_neighborhood_stats(grid, spec)

                report.min[key] = _record(fit_normal_db(stats.inr_min_db), values.size)
                report.max[key] = _record(fit_normal_db(stats.inr_max_db), values.size)

                if (dtheta, dphi) != (0, 0):
                    ranges = _positive(stats.inr_rng_db)
                    report.rng[key] = _record(fit_gamma_db(ranges), ranges.size)

                ## === Conditioned fits exist only on the diagonal ===
                if dtheta == dphi and dtheta > 0:
                    self._conditioned(grid, delta_min_db(grid, stats), dtheta, report.delta_min)
                    self._conditioned(grid, delta_max_db(grid, stats), dtheta, report.delta_max)

                logger.info(f"Processed: neighborhood {spec}")

        ## === Step 3: Save ===
        save_file(
            data = {
                "metadata": build_metadata(command = self.command),
                **report.model_dump(mode = "json")
            },
            file_path = self.out_path
        )
        logger.info(f"Saved: {self.out_path}")

        return report
