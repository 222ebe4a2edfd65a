# === Python Modules ===
import math
from pathlib import Path

import numpy as np

# === Schema ===
from mmwave_si.schema.schema import (
    BeamWeights,
    ChannelMatrix,
    Direction,
    LinkBudget,
    PlatformGeometry,
    UpaConfig
)

# === Components ===
from mmwave_si.components.geometry import panel_element_positions
from mmwave_si.components.beamforming import conjugate_weights
from mmwave_si.components.linkmath import isolation_db

# === Utils ===
from mmwave_si.utils.common import get_logger, open_file, save_file
from mmwave_si.utils.exceptions import DataError, DegenerateGeometryError

logger = get_logger(__name__)

# Element pairs closer than this are treated as coincident.
MIN_ELEMENT_DISTANCE_M = 1e-12

CHANNEL_DTYPE = "<c8"


# === Function to synthesize the spherical-wave self-interference channel ===
def spherical_wave_channel(
        tx_cfg: UpaConfig,
        rx_cfg: UpaConfig,
        geom: PlatformGeometry,
        calibration_db: float = 0.0
) -> ChannelMatrix:
    """
    Near-field line-of-sight channel between the two panels.

    Entry (m, n) = (r0 / r_mn) exp(-j 2pi r_mn / lambda), with r_mn the distance between receive
    element m and transmit element n in the global frame and r0 the center-to-center distance.

    Args:
        - tx_cfg (UpaConfig): Transmit array.
        - rx_cfg (UpaConfig): Receive array.
        - geom (PlatformGeometry): Panel poses.
        - calibration_db (float): Uniform gain applied on top of the entries.

    Returns:
        - ChannelMatrix: (rx elements) x (tx elements).
    """
    if not math.isclose(tx_cfg.carrier_hz, rx_cfg.carrier_hz, rel_tol = 1e-12):
        raise DataError("transmit and receive arrays must share a carrier frequency")

    tx_pos = panel_element_positions(tx_cfg, geom, "tx")
    rx_pos = panel_element_positions(rx_cfg, geom, "rx")

    ## === Exact distance of every receive/transmit element pair ===
    distances = np.linalg.norm(rx_pos[:, None, :] - tx_pos[None, :, :], axis = -1)

    closest = float(distances.min())
    if closest <= MIN_ELEMENT_DISTANCE_M:
        m, n = np.unravel_index(int(np.argmin(distances)), distances.shape)
        raise DegenerateGeometryError(
            f"rx element {m} and tx element {n} coincide (distance {closest:.3e} m)"
        )

    r0 = float(np.linalg.norm(np.subtract(geom.rx_center, geom.tx_center)))
    wavelength = tx_cfg.wavelength_m
    entries = (r0 / distances) * np.exp(-2j * math.pi * distances / wavelength)

    return ChannelMatrix(
        entries = entries,
        calibration_db = calibration_db
    )


def with_calibration(
        H: ChannelMatrix,
        calibration_db: float
) -> ChannelMatrix:
    return ChannelMatrix(
        entries = H.entries,
        calibration_db = calibration_db
    )


# === Function to evaluate the beamformed coupling w^T H f ===
def coupling_gain(
        w: BeamWeights,
        H: ChannelMatrix,
        f: BeamWeights
) -> complex:
    """
    Beamformed coupling w^T H f (unconjugated transpose on w), calibration gain included.

    Args:
        - w (BeamWeights): Receive weights, length = H rows.
        - H (ChannelMatrix): Channel.
        - f (BeamWeights): Transmit weights, length = H columns.

    Returns:
        - complex: Coupling scalar.
    """
    n_rx, n_tx = H.shape
    if w.weights.size != n_rx or f.weights.size != n_tx:
        raise DataError(
            f"dimension mismatch: w has {w.weights.size} entries, f has {f.weights.size}, H is {n_rx}x{n_tx}"
        )

    return complex(w.weights @ H.entries @ f.weights * H.gain)


def coupling_matrix(
        W: np.ndarray,
        H: ChannelMatrix,
        F: np.ndarray
) -> np.ndarray:
    """
    Batched coupling: W^T H F for weight matrices whose columns are beams. Returns (K_rx, K_tx).
    """
    if W.shape[0] != H.shape[0] or F.shape[0] != H.shape[1]:
        raise DataError(f"dimension mismatch: W {W.shape}, H {H.shape}, F {F.shape}")

    return (W.T @ (H.entries @ F)) * H.gain


# === Function to derive the calibration that pins the broadside INR ===
def broadside_calibration_db(
        tx_cfg: UpaConfig,
        rx_cfg: UpaConfig,
        H: ChannelMatrix,
        budget: LinkBudget,
        target_inr_db: float = 40.0
) -> float:
    """
    Calibration (dB) such that the broadside/broadside beam pair sees `target_inr_db`.

    Args:
        - tx_cfg, rx_cfg (UpaConfig): Arrays.
        - H (ChannelMatrix): Channel; its own calibration is ignored.
        - budget (LinkBudget): Link powers.
        - target_inr_db (float): INR wanted at broadside.

    Returns:
        - float: calibration_db to use with `H.entries`.
    """
    broadside = Direction(azimuth_deg = 0.0, elevation_deg = 0.0)
    raw = coupling_gain(
        w = conjugate_weights(rx_cfg, broadside),
        H = with_calibration(H, 0.0),
        f = conjugate_weights(tx_cfg, broadside)
    )

    raw_isolation = isolation_db(raw)
    if math.isinf(raw_isolation):
        raise DegenerateGeometryError("broadside coupling is exactly zero; cannot calibrate")

    target_isolation = budget.ptx_dbm - (budget.pnoise_dbm + target_inr_db)

    return raw_isolation - target_isolation


# === Channel dump ===
def _sidecar_path(path: Path) -> Path:
    return path.with_name(path.name + ".json")


def save_channel(
        H: ChannelMatrix,
        path: Path
) -> Path:
    """
    Writes little-endian complex64 entries, row-major (receive-major), plus a JSON sidecar
    `<path>.json` with dimensions and calibration.
    """
    path = Path(path)
    path.parent.mkdir(
        parents = True,
        exist_ok = True
    )
    np.ascontiguousarray(H.entries, dtype = CHANNEL_DTYPE).tofile(path)

    save_file(
        data = {
            "rows": H.shape[0],
            "cols": H.shape[1],
            "dtype": CHANNEL_DTYPE,
            "order": "row-major",
            "calibration_db": H.calibration_db
        },
        file_path = _sidecar_path(path)
    )
    logger.info(f"Saved: {path}")

    return path


def load_channel(
        path: Path
) -> ChannelMatrix:
    path = Path(path)
    meta = open_file(file_path = _sidecar_path(path))

    try:
        rows, cols = int(meta["rows"]), int(meta["cols"])
        entries = np.fromfile(path, dtype = meta.get("dtype", CHANNEL_DTYPE))
    except (KeyError, OSError) as e:
        raise DataError(f"Error reading channel dump {path}: {e}") from e

    if entries.size != rows * cols:
        raise DataError(f"channel dump {path} holds {entries.size} entries, sidecar says {rows}x{cols}")

    return ChannelMatrix(
        entries = entries.reshape(rows, cols),
        calibration_db = float(meta.get("calibration_db", 0.0))
    )
