# === Python Modules ===
from pathlib import Path
from typing import List

import numpy as np
import pandas as pd

# === Schema ===
from mmwave_si.schema.schema import Direction, DirectionGrid, SimulationConfig

# === Components ===
from mmwave_si.components.beamforming import (
    beam_gain_pattern,
    conjugate_weights,
    half_power_beamwidth
)
from mmwave_si.components.geometry import load_simulation_config
from mmwave_si.components.grid import write_frame
from mmwave_si.components.linkmath import eirp_dbm

# === Utils ===
from mmwave_si.utils.common import build_metadata, get_logger, require_file
from mmwave_si.utils.exceptions import ConfigError

logger = get_logger(__name__)


# === Main Pattern Export Pipeline ===
class PatternPipeline:
    """
    Exports a 1-D cut of a conjugate beam's gain pattern as `az_deg,el_deg,gain_db`.
    """

    def __init__(
            self,
            out_path: Path,
            steer: Direction = Direction(azimuth_deg = 0.0, elevation_deg = 0.0),
            axis: str = "azimuth",
            span_deg: float = 90.0,
            resolution_deg: float = 0.1,
            config_path: Path | None = None,
            command: List[str] | None = None
    ):
        if axis not in ("azimuth", "elevation"):
            raise ConfigError(f"axis must be 'azimuth' or 'elevation', got {axis!r}")
        if not (span_deg > 0 and resolution_deg > 0):
            raise ConfigError("span and resolution must be positive")

        if config_path is not None:
            self.config: SimulationConfig = load_simulation_config(require_file(config_path, "config"))
        else:
            self.config = SimulationConfig()

        self.out_path: Path = Path(out_path)
        self.steer: Direction = steer
        self.axis: str = axis
        self.span_deg: float = span_deg
        self.resolution_deg: float = resolution_deg
        self.command: List[str] = command or []

    def _probe_grid(self) -> DirectionGrid:
        n = int(round(self.span_deg / self.resolution_deg))
        offsets = self.resolution_deg * np.arange(-n, n + 1)

        if self.axis == "azimuth":
            return DirectionGrid(
                azimuths = self.steer.azimuth_deg + offsets,
                elevations = [self.steer.elevation_deg]
            )
        elevations = self.steer.elevation_deg + offsets
        return DirectionGrid(
            azimuths = [self.steer.azimuth_deg],
            elevations = elevations[np.abs(elevations) <= 90.0]
        )

    def export_pattern(
            self
    ) -> pd.DataFrame:
        """
        Writes the pattern cut and returns it.

        Returns:
            - pd.DataFrame: Columns az_deg, el_deg, gain_db.
        """
        upa = self.config.upa()
        budget = self.config.budget()
        w = conjugate_weights(upa, self.steer)
        probe = self._probe_grid()

        ## === Step 1: Pattern ===
        gain = beam_gain_pattern(
            cfg = upa,
            w = w,
            probe_grid = probe,
            budget = budget
        )
        az, el = probe.flat_directions()
        frame = pd.DataFrame({
            "az_deg": az,
            "el_deg": el,
            "gain_db": gain.ravel()
        })

        ## === Step 2: Beamwidth and EIRP for the header ===
        beamwidth = half_power_beamwidth(upa, w, axis = self.axis)
        logger.info(f"3 dB {self.axis} beamwidth: {beamwidth:.2f} deg")

        write_frame(
            frame = frame,
            path = self.out_path,
            metadata = build_metadata(
                command = self.command,
                extra = {
                    "steering": f"{self.steer.azimuth_deg:g},{self.steer.elevation_deg:g}",
                    "axis": self.axis,
                    "half_power_beamwidth_deg": round(beamwidth, 2),
                    "broadside_eirp_dbm": round(eirp_dbm(budget, upa), 6)
                }
            )
        )

        return frame
