# === Python Modules ===
import math

import numpy as np

# === Schema ===
from mmwave_si.schema.schema import (
    BeamWeights,
    Direction,
    DirectionGrid,
    LinkBudget,
    UpaConfig
)

# === Components ===
from mmwave_si.components.geometry import (
    element_positions,
    unit_vectors
)
from mmwave_si.components.linkmath import default_tx_chain_gain_db


# === Function to compute array responses for many directions at once ===
def array_responses(
        cfg: UpaConfig,
        azimuth_deg: np.ndarray,
        elevation_deg: np.ndarray
) -> np.ndarray:
    """
    Array response vectors for a batch of directions.

    Args:
        - cfg (UpaConfig): Array configuration.
        - azimuth_deg (np.ndarray): Azimuths, shape (K,).
        - elevation_deg (np.ndarray): Elevations, shape (K,).

    Returns:
        - np.ndarray: Complex matrix of shape (N, K); column k is a(d_k), unit norm.
    """
    positions = element_positions(cfg)
    directions = unit_vectors(
        np.atleast_1d(azimuth_deg),
        np.atleast_1d(elevation_deg)
    )
    wavenumber = 2.0 * math.pi / cfg.wavelength_m

    ## === Phase of every element toward every direction ===
    phase = wavenumber * (positions @ directions.T)

    return np.exp(1j * phase) / math.sqrt(cfg.num_elements)


# === Function to compute the array response toward one direction ===
def array_response(
        cfg: UpaConfig,
        d: Direction
) -> np.ndarray:
    """
    a_n(d) = exp(+j 2pi/lambda <p_n, u(d)>) / sqrt(N), with p_n in the array-local frame.
    """
    return array_responses(cfg, d.azimuth_deg, d.elevation_deg)[:, 0]


# === Function to build matched-filter weights ===
def conjugate_weights(
        cfg: UpaConfig,
        d: Direction
) -> BeamWeights:
    """
    Conjugate (matched-filter) beamforming weights steered toward `d`.

    Args:
        - cfg (UpaConfig): Array configuration.
        - d (Direction): Steering direction.

    Returns:
        - BeamWeights: conj(a(d)); unit norm.
    """
    return BeamWeights(
        weights = np.conj(array_response(cfg, d)),
        steering = d
    )


def conjugate_weight_matrix(
        cfg: UpaConfig,
        grid: DirectionGrid
) -> np.ndarray:
    """
    Conjugate weights for every lattice direction, shape (N, grid.size), columns in flat-index order.
    """
    az, el = grid.flat_directions()
    return np.conj(array_responses(cfg, az, el))


# === Function to evaluate the beam pattern over a probe lattice ===
def beam_gain_pattern(
        cfg: UpaConfig,
        w: BeamWeights,
        probe_grid: DirectionGrid,
        tx_chain_gain_db: float | None = None,
        budget: LinkBudget | None = None
) -> np.ndarray:
    """
    Power gain of a beam toward every direction of `probe_grid`.

    gain(d) = 20 log10(|w^T a(d)| sqrt(N)) + g0, where g0 is the transmit chain gain. The default
    g0 makes the broadside EIRP equal the budget's EIRP.

    Args:
        - cfg (UpaConfig): Array configuration.
        - w (BeamWeights): Beam to evaluate.
        - probe_grid (DirectionGrid): Directions to probe.
        - tx_chain_gain_db (float | None): Chain gain g0 in dB.
        - budget (LinkBudget | None): Budget used to derive the default g0.

    Returns:
        - np.ndarray: Gain in dB, shape (n_az, n_el) of the probe grid. Exact nulls are -inf.
    """
    if tx_chain_gain_db is None:
        tx_chain_gain_db = default_tx_chain_gain_db(
            budget = budget or LinkBudget(),
            cfg = cfg
        )

    az, el = probe_grid.flat_directions()
    response = w.weights @ array_responses(cfg, az, el)
    array_gain = np.abs(response) * math.sqrt(cfg.num_elements)

    with np.errstate(divide = "ignore"):
        gain_db = 20.0 * np.log10(array_gain) + tx_chain_gain_db

    return gain_db.reshape(probe_grid.shape)


# === Function to measure the 3 dB beamwidth ===
def half_power_beamwidth(
        cfg: UpaConfig,
        w: BeamWeights,
        axis: str = "azimuth",
        resolution_deg: float = 0.01,
        span_deg: float = 30.0
) -> float:
    """
    3 dB beamwidth of a beam along one axis, by a 1-D pattern cut through its steering direction.

    Args:
        - cfg (UpaConfig): Array configuration.
        - w (BeamWeights): Beam to measure.
        - axis (str): "azimuth" or "elevation".
        - resolution_deg (float): Scan step.
        - span_deg (float): Half-span of the scan around the steering direction.

    Returns:
        - float: Width in degrees of the contiguous main-lobe region within 3 dB of the peak.
    """
    if axis not in ("azimuth", "elevation"):
        raise ValueError(f"axis must be 'azimuth' or 'elevation', got {axis!r}")
    if not resolution_deg > 0:
        raise ValueError("resolution_deg must be positive")

    n = int(round(span_deg / resolution_deg))
    offsets = resolution_deg * np.arange(-n, n + 1)
    steer = w.steering

    if axis == "azimuth":
        probe = DirectionGrid(
            azimuths = steer.azimuth_deg + offsets,
            elevations = [steer.elevation_deg]
        )
    else:
        elevations = steer.elevation_deg + offsets
        probe = DirectionGrid(
            azimuths = [steer.azimuth_deg],
            elevations = elevations[np.abs(elevations) <= 90.0]
        )

    gain = beam_gain_pattern(cfg, w, probe, tx_chain_gain_db = 0.0).ravel()
    peak = int(np.argmax(gain))
    above = gain >= gain[peak] - 3.0

    ## === Walk out from the peak to the first samples below the half-power level ===
    left = peak
    while left > 0 and above[left - 1]:
        left -= 1
    right = peak
    while right < above.size - 1 and above[right + 1]:
        right += 1

    return float((right - left) * resolution_deg)
