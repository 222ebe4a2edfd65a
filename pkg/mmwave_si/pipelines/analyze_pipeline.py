# === Python Modules ===
from pathlib import Path
from typing import Dict, List

import numpy as np
import pandas as pd

# === Schema ===
from mmwave_si.schema.schema import Direction, InrGrid, NeighborhoodSpec

# === Components ===
from mmwave_si.components.grid import (
    grid_frame,
    load_any_grid,
    slice_for_rx,
    slice_for_tx,
    slice_frame,
    write_frame
)
from mmwave_si.components.neighborhood import (
    SIDES,
    beam_frame,
    neighborhood_threshold_fraction,
    pair_neighborhood_stats,
    per_beam_summary,
    threshold_fraction
)
from mmwave_si.components.stats import CDF_EXPORT_POINTS, empirical_cdf

# === Utils ===
from mmwave_si.utils.common import build_metadata, get_logger, require_file

logger = get_logger(__name__)


def parse_direction(
        text: str
) -> Direction:
    """Parses 'AZ,EL' in degrees."""
    parts = [p.strip() for p in str(text).split(",")]
    if len(parts) != 2:
        raise ValueError(f"direction must be 'AZ,EL', got {text!r}")
    return Direction(
        azimuth_deg = float(parts[0]),
        elevation_deg = float(parts[1])
    )


# === Main Analysis Pipeline ===
class AnalyzePipeline:
    def __init__(
            self,
            grid_path: Path,
            out_dir: Path,
            neighborhood: NeighborhoodSpec = NeighborhoodSpec(dtheta_deg = 5, dphi_deg = 5),
            thresholds_db: List[float] | None = None,
            neighborhood_threshold_db: float = 0.0,
            slice_tx: Direction | None = None,
            slice_rx: Direction | None = None,
            write_pairs: bool = True,
            cdf_points: int = CDF_EXPORT_POINTS,
            command: List[str] | None = None
    ):
        """
        Initializes the AnalyzePipeline.

        Args:
            - grid_path (Path): Grid CSV or binary cache.
            - out_dir (Path): Folder receiving every output CSV.
            - neighborhood (NeighborhoodSpec): Neighborhood for the per-pair statistics.
            - thresholds_db (List[float] | None): Per-beam threshold levels; 10/20/30 dB by default.
            - neighborhood_threshold_db (float): Level for the neighborhood threshold fractions.
            - slice_tx, slice_rx (Direction | None): Beams whose 2-D INR maps are exported.
            - write_pairs (bool): Write the per-pair statistics (one row per beam pair).
            - cdf_points (int): Points kept per exported CDF.
            - command (List[str] | None): Command line recorded in the outputs.
        """
        self.grid_path: Path = require_file(grid_path, "grid")
        self.out_dir: Path = Path(out_dir)
        self.neighborhood: NeighborhoodSpec = neighborhood
        self.thresholds_db: List[float] = list(thresholds_db) if thresholds_db is not None else [10.0, 20.0, 30.0]
        self.neighborhood_threshold_db: float = neighborhood_threshold_db
        self.slice_tx: Direction | None = slice_tx
        self.slice_rx: Direction | None = slice_rx
        self.write_pairs: bool = write_pairs
        self.cdf_points: int = cdf_points
        self.command: List[str] = command or []

    def _save(
            self,
            frame: pd.DataFrame,
            name: str,
            **extra
    ) -> Path:
        return write_frame(
            frame = frame,
            path = self.out_dir / name,
            metadata = build_metadata(
                command = self.command,
                extra = extra or None
            )
        )

    def analyze(
            self
    ) -> Dict[str, Path]:
        """
        Runs every grid analysis and writes one CSV per product.

        Returns:
            - Dict[str, Path]: Output name -> written file.
        """
        outputs: Dict[str, Path] = {}

        ## === Step 1: Load the grid ===
        grid: InrGrid = load_any_grid(self.grid_path)
        logger.info(f"Loaded grid {grid.shape} from {self.grid_path}")

        ## === Step 2: Neighborhood statistics ===
        spec = self.neighborhood
        stats = pair_neighborhood_stats(grid, spec)
        logger.info(f"Computed {spec} neighborhood statistics")

        if self.write_pairs:
            outputs["pair_stats"] = self._save(
                grid_frame(
                    grid,
                    extra = {
                        "inr_min_db": stats.inr_min_db,
                        "inr_max_db": stats.inr_max_db,
                        "inr_rng_db": stats.inr_rng_db
                    }
                ),
                "pair_stats.csv",
                neighborhood = str(spec)
            )

        ## === Step 3: Per-beam summaries and threshold fractions ===
        outputs["beam_summary"] = self._save(
            pd.concat([per_beam_summary(grid, side) for side in SIDES], ignore_index = True),
            "beam_summary.csv"
        )

        fractions = [
            beam_frame(
                grid,
                side,
                threshold_db = np.full(side_size, threshold),
                fraction = threshold_fraction(grid, side, threshold)
            )
            for threshold in self.thresholds_db
            for side, side_size in zip(SIDES, (grid.tx_grid.size, grid.rx_grid.size))
        ]
        outputs["threshold_fractions"] = self._save(
            pd.concat(fractions, ignore_index = True),
            "threshold_fractions.csv"
        )

        outputs["neighborhood_fractions"] = self._save(
            pd.concat(
                [
                    beam_frame(
                        grid,
                        side,
                        fraction = neighborhood_threshold_fraction(
                            grid = grid,
                            side = side,
                            spec = spec,
                            threshold_db = self.neighborhood_threshold_db,
                            stats = stats
                        )
                    )
                    for side in SIDES
                ],
                ignore_index = True
            ),
            "neighborhood_fractions.csv",
            neighborhood = str(spec),
            threshold_db = self.neighborhood_threshold_db
        )

        ## === Step 4: Decimated CDFs for plotting ===
        cdf_frames = []
        for quantity, values in (
            ("inr", grid.values_db),
            ("inr_min", stats.inr_min_db),
            ("inr_max", stats.inr_max_db),
            ("inr_rng", stats.inr_rng_db)
        ):
            cdf_values, probabilities = empirical_cdf(values).decimate(self.cdf_points)
            cdf_frames.append(pd.DataFrame({
                "quantity": quantity,
                "value_db": cdf_values,
                "probability": probabilities
            }))
        outputs["cdf"] = self._save(
            pd.concat(cdf_frames, ignore_index = True),
            "cdf.csv",
            neighborhood = str(spec)
        )

        ## === Step 5: Optional 2-D slices ===
        if self.slice_tx is not None:
            outputs["slice_tx"] = self._save(
                slice_frame(grid.rx_grid, slice_for_tx(grid, self.slice_tx)),
                "slice_tx.csv",
                tx_direction = f"{self.slice_tx.azimuth_deg:g},{self.slice_tx.elevation_deg:g}"
            )
        if self.slice_rx is not None:
            outputs["slice_rx"] = self._save(
                slice_frame(grid.tx_grid, slice_for_rx(grid, self.slice_rx)),
                "slice_rx.csv",
                rx_direction = f"{self.slice_rx.azimuth_deg:g},{self.slice_rx.elevation_deg:g}"
            )

        logger.info(f"Analysis complete: {len(outputs)} files in {self.out_dir}")

        return outputs
