# === Python Modules ===
import math
from pathlib import Path
from typing import Tuple

import numpy as np
from pydantic import ValidationError

# === Schema ===
from mmwave_si.schema.schema import (
    Direction,
    DirectionGrid,
    PlatformGeometry,
    SimulationConfig,
    UpaConfig
)

# === Utils ===
from mmwave_si.utils.common import open_file
from mmwave_si.utils.exceptions import ConfigError


# === Absolute difference between two angles ===
def angle_diff(
        alpha: float | np.ndarray,
        beta: float | np.ndarray
) -> float | np.ndarray:
    """
    Absolute angular difference in degrees, wrapped into [0, 180].

    Args:
        - alpha, beta (float | np.ndarray): Angles in degrees. Arrays broadcast.

    Returns:
        - float | np.ndarray: Difference in [0, 180].
    """
    zeta = np.mod(np.abs(np.subtract(alpha, beta)), 360.0)
    diff = np.where(zeta > 180.0, 360.0 - zeta, zeta)

    if np.ndim(diff) == 0:
        return float(diff)
    return diff


# === Steering direction to unit vector ===
def unit_vectors(
        azimuth_deg: np.ndarray,
        elevation_deg: np.ndarray
) -> np.ndarray:
    """
    Vectorized [cos(el)cos(az), cos(el)sin(az), sin(el)]; returns shape (..., 3).
    """
    az = np.deg2rad(np.asarray(azimuth_deg, dtype = np.float64))
    el = np.deg2rad(np.asarray(elevation_deg, dtype = np.float64))
    cos_el = np.cos(el)

    return np.stack(
        [cos_el * np.cos(az), cos_el * np.sin(az), np.sin(el)],
        axis = -1
    )


def direction_unit_vector(
        d: Direction
) -> np.ndarray:
    """
    Unit vector of a steering direction. Broadside (0, 0) is +x, azimuth turns toward +y,
    elevation toward +z.
    """
    return unit_vectors(d.azimuth_deg, d.elevation_deg)


# === Element layout ===
def element_positions(
        cfg: UpaConfig
) -> np.ndarray:
    """
    Element positions of a UPA in its local frame.

    Elements sit on the y-z plane centered at the origin; element n = row * cols + col,
    with columns along y and rows along z.

    Args:
        - cfg (UpaConfig): Array configuration.

    Returns:
        - positions (np.ndarray): Shape (rows * cols, 3), in meters.
    """
    d = cfg.spacing_m
    y = (np.arange(cfg.cols) - (cfg.cols - 1) / 2.0) * d
    z = (np.arange(cfg.rows) - (cfg.rows - 1) / 2.0) * d
    zz, yy = np.meshgrid(z, y, indexing = "ij")

    positions = np.zeros((cfg.num_elements, 3))
    positions[:, 1] = yy.ravel()
    positions[:, 2] = zz.ravel()

    return positions


# === Rules of thumb ===
def far_field_distance(
        cfg: UpaConfig
) -> float:
    """2 D^2 / lambda, with D the aperture diagonal."""
    return 2.0 * cfg.aperture_m ** 2 / cfg.wavelength_m


def nearfield_boundary(
        cfg: UpaConfig
) -> float:
    """Reactive/radiating near-field boundary 0.62 sqrt(D^3 / lambda)."""
    return 0.62 * math.sqrt(cfg.aperture_m ** 3 / cfg.wavelength_m)


# === Measurement lattice ===
def _lattice_axis(
        lo: float,
        hi: float,
        step: float,
        name: str
) -> np.ndarray:
    if hi < lo:
        raise ConfigError(f"invalid grid spec: {name} max {hi} is below min {lo}")
    n_steps = (hi - lo) / step
    if abs(n_steps - round(n_steps)) > 1e-9 * max(1.0, n_steps):
        raise ConfigError(f"invalid grid spec: {name} range [{lo}, {hi}] is not divisible by step {step}")

    return lo + step * np.arange(int(round(n_steps)) + 1)


def build_measurement_grid(
        az_min: float = -60.0,
        az_max: float = 60.0,
        el_min: float = -10.0,
        el_max: float = 10.0,
        step: float = 1.0
) -> DirectionGrid:
    """
    Inclusive azimuth x elevation lattice. The defaults give 121 x 21 = 2541 directions.
    """
    if not step > 0:
        raise ConfigError(f"invalid grid spec: step must be positive, got {step}")

    return DirectionGrid(
        azimuths = _lattice_axis(az_min, az_max, step, "azimuth"),
        elevations = _lattice_axis(el_min, el_max, step, "elevation")
    )


# === Platform ===
def default_platform(
        separation_m: float = 0.30,
        panel_angle_deg: float = 60.0,
        mirrored_frames: bool = True
) -> PlatformGeometry:
    """
    Two panels on adjacent sides of the triangular platform.

    The transmit panel sits at -y and the receive panel at +y, each `separation_m / 2` from the
    origin; boresights point outward at -/+ panel_angle_deg of global azimuth. With
    `mirrored_frames` the receive azimuth axis is the mirror image (across y = 0) of the transmit
    one, so positive azimuth on either panel turns toward its partner.
    """
    a = math.radians(panel_angle_deg)
    half = separation_m / 2.0

    tx_boresight = (math.cos(a), -math.sin(a), 0.0)
    rx_boresight = (math.cos(a), math.sin(a), 0.0)

    ## === Right-handed transmit frame: y = z x x ===
    tx_azimuth_axis = (math.sin(a), math.cos(a), 0.0)

    if mirrored_frames:
        rx_azimuth_axis = (math.sin(a), -math.cos(a), 0.0)
    else:
        rx_azimuth_axis = (-math.sin(a), math.cos(a), 0.0)

    return PlatformGeometry(
        tx_center = (0.0, -half, 0.0),
        rx_center = (0.0, half, 0.0),
        tx_boresight = tx_boresight,
        rx_boresight = rx_boresight,
        tx_azimuth_axis = tx_azimuth_axis,
        rx_azimuth_axis = rx_azimuth_axis,
        panel_angle_deg = panel_angle_deg,
        separation_m = separation_m
    )


def panel_frame(
        geom: PlatformGeometry,
        side: str
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Returns (center, rotation) of a panel; rotation columns are the local x, y, z axes.
    """
    if side not in ("tx", "rx"):
        raise ValueError(f"side must be 'tx' or 'rx', got {side!r}")

    center = np.asarray(getattr(geom, f"{side}_center"), dtype = np.float64)
    rotation = np.column_stack([
        getattr(geom, f"{side}_boresight"),
        getattr(geom, f"{side}_azimuth_axis"),
        getattr(geom, f"{side}_elevation_axis")
    ]).astype(np.float64)

    return center, rotation


def panel_element_positions(
        cfg: UpaConfig,
        geom: PlatformGeometry,
        side: str
) -> np.ndarray:
    """
    Element positions of one panel in the global frame, shape (N, 3).
    """
    center, rotation = panel_frame(geom, side)
    return center + element_positions(cfg) @ rotation.T


# === Config file ===
def load_simulation_config(
        file_path: Path
) -> SimulationConfig:
    """
    Loads the JSON geometry/link configuration.

    Args:
        - file_path (Path): Config file with keys rows, cols, spacing_wl, carrier_hz,
          separation_m, panel_angle_deg and the optional link/lattice keys.

    Returns:
        - SimulationConfig: Validated configuration.
    """
    data = open_file(file_path = Path(file_path))

    try:
        return SimulationConfig.model_validate(data)
    except ValidationError as e:
        raise ConfigError(f"Invalid configuration in {file_path}: {e}") from e


def platform_from_config(
        config: SimulationConfig
) -> PlatformGeometry:
    return default_platform(
        separation_m = config.separation_m,
        panel_angle_deg = config.panel_angle_deg,
        mirrored_frames = config.mirrored_frames
    )
