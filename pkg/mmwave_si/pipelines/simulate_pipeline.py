# === Python Modules ===
from pathlib import Path
from typing import List

# === Schema ===
from mmwave_si.schema.schema import InrGrid, SimulationConfig

# === Components ===
from mmwave_si.components.channel import save_channel, spherical_wave_channel
from mmwave_si.components.geometry import (
    far_field_distance,
    load_simulation_config,
    nearfield_boundary,
    platform_from_config
)
from mmwave_si.components.grid import (
    save_grid,
    save_grid_cache,
    simulate_from_config
)

# === Utils ===
from mmwave_si.utils.common import (
    build_metadata,
    get_logger,
    require_file,
    save_file
)

logger = get_logger(__name__)


# === Main Simulation Pipeline ===
class SimulatePipeline:
    def __init__(
            self,
            out_path: Path,
            config_path: Path | None = None,
            cache_path: Path | None = None,
            channel_path: Path | None = None,
            threads: int | None = None,
            command: List[str] | None = None
    ):
        """
        Initializes the SimulatePipeline.

        Args:
            - out_path (Path): Grid CSV to write. Run metadata goes next to it as `<stem>.json`.
            - config_path (Path | None): Geometry/link JSON config. Defaults apply when omitted.
            - cache_path (Path | None): Optional binary cache of the grid.
            - channel_path (Path | None): Optional dump of the calibrated channel matrix.
            - threads (int | None): Worker threads for the simulation.
            - command (List[str] | None): Command line recorded in the outputs.
        """
        ## === Validate inputs before any compute ===
        if config_path is not None:
            self.config: SimulationConfig = load_simulation_config(require_file(config_path, "config"))
        else:
            self.config = SimulationConfig()

        self.out_path: Path = Path(out_path)
        self.cache_path: Path | None = cache_path
        self.channel_path: Path | None = channel_path
        self.threads: int | None = threads
        self.command: List[str] = command or []

    def simulate(
            self
    ) -> InrGrid:
        """
        Simulates the INR grid, then writes the CSV, the metadata JSON and the optional dumps.

        Returns:
            - InrGrid: The simulated grid.
        """
        upa = self.config.upa()
        logger.info(
            f"Array {upa.rows}x{upa.cols}: far field at {far_field_distance(upa):.3f} m, "
            f"near-field boundary at {nearfield_boundary(upa):.3f} m, separation {self.config.separation_m} m"
        )

        ## === Step 1: Simulate ===
        grid = simulate_from_config(
            config = self.config,
            threads = self.threads
        )
        logger.info(f"Simulated {grid.tx_grid.size} x {grid.rx_grid.size} beam pairs")

        ## === Step 2: Save the grid with its metadata ===
        metadata = build_metadata(
            command = self.command,
            extra = {"calibration_db": grid.metadata["calibration_db"]}
        )
        save_grid(
            grid = grid,
            path = self.out_path,
            metadata = metadata
        )

        save_file(
            data = {
                **metadata,
                "geometry": grid.metadata["geometry"],
                "grid": grid.metadata["grid"],
                "target_broadside_inr_db": grid.metadata["target_broadside_inr_db"]
            },
            file_path = self.out_path.with_suffix(".json")
        )

        ## === Step 3: Optional dumps ===
        if self.cache_path is not None:
            save_grid_cache(grid, self.cache_path)

        if self.channel_path is not None:
            H = spherical_wave_channel(
                tx_cfg = upa,
                rx_cfg = upa,
                geom = platform_from_config(self.config),
                calibration_db = grid.metadata["calibration_db"]
            )
            save_channel(H, self.channel_path)

        return grid
