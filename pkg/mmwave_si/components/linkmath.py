# === Python Modules ===
import math

import numpy as np

# === Schema ===
from mmwave_si.schema.schema import LinkBudget, UpaConfig

# INR at or below this is what a full-duplex link can live with.
LOW_INR_THRESHOLD_DB = 0.0

# Margin around 0 dB separating the two limiting regimes.
REGIME_MARGIN_DB = 3.0

SI_LIMITED = "self-interference-limited"
NOISE_LIMITED = "noise-limited"
TRANSITIONAL = "transitional"


# === dB conversions ===
def to_db(
        power_lin: float | np.ndarray
) -> float | np.ndarray:
    with np.errstate(divide = "ignore"):
        return 10.0 * np.log10(power_lin)


def from_db(
        value_db: float | np.ndarray
) -> float | np.ndarray:
    return np.power(10.0, np.divide(value_db, 10.0))


# === Function to turn beamformed coupling into isolation ===
def isolation_db(
        coupling: complex | np.ndarray
) -> float | np.ndarray:
    """
    Isolation between transmit-array input and receive-array output, 1 / |w^T H f|^2 in dB.

    Args:
        - coupling (complex | np.ndarray): Beamformed coupling w^T H f (calibration included).

    Returns:
        - float | np.ndarray: -20 log10 |coupling|. Zero coupling is below the measurement floor
          and comes back as +inf.
    """
    magnitude = np.abs(coupling)
    with np.errstate(divide = "ignore"):
        isolation = -20.0 * np.log10(magnitude)

    if np.ndim(isolation) == 0:
        return float(isolation)
    return isolation


def is_below_floor(
        isolation: float | np.ndarray
) -> bool | np.ndarray:
    return np.isposinf(isolation)


# === Power bookkeeping ===
def self_interference_dbm(
        budget: LinkBudget,
        isolation_db: float | np.ndarray
) -> float | np.ndarray:
    """P_SI = P_tx - L, in dBm."""
    return budget.ptx_dbm - isolation_db


def inr_db(
        budget: LinkBudget,
        psi_dbm: float | np.ndarray
) -> float | np.ndarray:
    """INR = P_SI - P_noise, in dB."""
    return psi_dbm - budget.pnoise_dbm


def sinr_db(
        snr_db: float | np.ndarray,
        inr_db: float | np.ndarray
) -> float | np.ndarray:
    """
    SINR = SNR / (1 + INR), all in dB. An INR of -inf leaves the SNR unchanged.
    """
    penalty = 10.0 * np.log1p(from_db(inr_db)) / math.log(10.0)
    sinr = np.subtract(snr_db, penalty)

    if np.ndim(sinr) == 0:
        return float(sinr)
    return sinr


# === Function to name the regime a beam pair operates in ===
def classify_regime(
        inr_db: float
) -> str:
    """
    Self-interference-limited when INR >= +3 dB, noise-limited when INR <= -3 dB,
    transitional in between.
    """
    if inr_db >= LOW_INR_THRESHOLD_DB + REGIME_MARGIN_DB:
        return SI_LIMITED
    if inr_db <= LOW_INR_THRESHOLD_DB - REGIME_MARGIN_DB:
        return NOISE_LIMITED
    return TRANSITIONAL


# === EIRP bookkeeping ===
def default_tx_chain_gain_db(
        budget: LinkBudget,
        cfg: UpaConfig
) -> float:
    """
    Transmit chain gain that, added to the array gain 10 log10(N), lifts P_tx to the broadside EIRP.
    """
    return budget.eirp_dbm - budget.ptx_dbm - 10.0 * math.log10(cfg.num_elements)


def eirp_dbm(
        budget: LinkBudget,
        cfg: UpaConfig,
        tx_chain_gain_db: float | None = None,
        array_gain_db: float | None = None
) -> float:
    """
    EIRP = P_tx + chain gain + array gain.

    Args:
        - budget (LinkBudget): Link powers.
        - cfg (UpaConfig): Transmit array.
        - tx_chain_gain_db (float | None): Defaults to `default_tx_chain_gain_db`.
        - array_gain_db (float | None): Beamforming gain toward the observer; defaults to the
          broadside maximum 10 log10(N).

    Returns:
        - float: EIRP in dBm.
    """
    if tx_chain_gain_db is None:
        tx_chain_gain_db = default_tx_chain_gain_db(budget, cfg)
    if array_gain_db is None:
        array_gain_db = 10.0 * math.log10(cfg.num_elements)

    return budget.ptx_dbm + tx_chain_gain_db + array_gain_db
