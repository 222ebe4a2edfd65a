# === Python Modules ===
import math
from typing import List, Tuple

import numpy as np
import pandas as pd
from scipy import ndimage

# === Schema ===
from mmwave_si.schema.schema import (
    Direction,
    DirectionGrid,
    InrGrid,
    NeighborhoodSpec,
    PairNeighborhoodStats
)

# === Components ===
from mmwave_si.components.geometry import angle_diff

SIDES = ("tx", "rx")

# Slack when comparing angular offsets against a neighborhood half-width.
ANGLE_TOL_DEG = 1e-9


# === Lattice helpers ===
def _half_width(
        step: float | None,
        delta_deg: float
) -> int:
    """Number of lattice steps that fit within `delta_deg`."""
    if step is None:
        return 0
    return int(math.floor(delta_deg / step + ANGLE_TOL_DEG))


def _spans_circle(
        lattice: DirectionGrid
) -> bool:
    step = lattice.step_az
    return step is not None and abs(lattice.n_az * step - 360.0) <= 1e-6


def half_widths(
        lattice: DirectionGrid,
        spec: NeighborhoodSpec
) -> Tuple[int, int]:
    """(azimuth, elevation) half-widths of the neighborhood in lattice steps."""
    return (
        _half_width(lattice.step_az, spec.dtheta_deg),
        _half_width(lattice.step_el, spec.dphi_deg)
    )


def _axis_counts(
        n: int,
        k: int,
        wraps: bool
) -> np.ndarray:
    if wraps:
        return np.full(n, min(2 * k + 1, n), dtype = np.int64)
    i = np.arange(n)
    return np.minimum(i + k, n - 1) - np.maximum(i - k, 0) + 1


def _check_side(side: str) -> None:
    if side not in SIDES:
        raise ValueError(f"side must be 'tx' or 'rx', got {side!r}")


# === Function to list the directions of one neighborhood ===
def neighborhood_directions(
        grid: DirectionGrid,
        center: Direction,
        spec: NeighborhoodSpec
) -> List[Direction]:
    """
    Lattice directions within dtheta in azimuth and dphi in elevation of `center` (angle_diff
    metric). The center must be a lattice point.

    Args:
        - grid (DirectionGrid): Lattice.
        - center (Direction): Center direction.
        - spec (NeighborhoodSpec): Half-widths.

    Returns:
        - List[Direction]: Members in flat-index order, center included.
    """
    grid.index_of(center)

    az_in = np.flatnonzero(angle_diff(grid.azimuths, center.azimuth_deg) <= spec.dtheta_deg + ANGLE_TOL_DEG)
    el_in = np.flatnonzero(angle_diff(grid.elevations, center.elevation_deg) <= spec.dphi_deg + ANGLE_TOL_DEG)

    return [grid.direction(ia, ie) for ia in az_in for ie in el_in]


# === Function to compute min/max/range over every beam-pair neighborhood ===
def pair_neighborhood_stats(
        grid: InrGrid,
        spec: NeighborhoodSpec
) -> PairNeighborhoodStats:
    """
    Minimum, maximum and range of INR over the product neighborhood of every beam pair.

    The 4-D box min/max is separable, so it is computed with running min/max filters along each
    axis. Edge windows are clipped to the lattice (nearest-value padding does not change a min or
    max); an azimuth axis covering the full circle wraps instead.

    Args:
        - grid (InrGrid): INR tensor.
        - spec (NeighborhoodSpec): Half-widths, applied on both sides.

    Returns:
        - PairNeighborhoodStats: Three tensors aligned with `grid.values_db`.
    """
    tx_k = half_widths(grid.tx_grid, spec)
    rx_k = half_widths(grid.rx_grid, spec)
    size = tuple(2 * k + 1 for k in tx_k + rx_k)
    mode = [
        "wrap" if _spans_circle(grid.tx_grid) else "nearest",
        "nearest",
        "wrap" if _spans_circle(grid.rx_grid) else "nearest",
        "nearest"
    ]

    inr_min = ndimage.minimum_filter(grid.values_db, size = size, mode = mode)
    inr_max = ndimage.maximum_filter(grid.values_db, size = size, mode = mode)

    for tensor in (inr_min, inr_max):
        tensor.setflags(write = False)
    inr_rng = inr_max - inr_min
    inr_rng.setflags(write = False)

    return PairNeighborhoodStats(
        spec = spec,
        inr_min_db = inr_min,
        inr_max_db = inr_max,
        inr_rng_db = inr_rng
    )


def pair_neighborhood_counts(
        grid: InrGrid,
        spec: NeighborhoodSpec
) -> np.ndarray:
    """|T_tx(i)| * |T_rx(j)| for every pair, as a tensor aligned with the grid."""
    counts = []
    for lattice in (grid.tx_grid, grid.rx_grid):
        k_az, k_el = half_widths(lattice, spec)
        counts.append(_axis_counts(lattice.n_az, k_az, _spans_circle(lattice)))
        counts.append(_axis_counts(lattice.n_el, k_el, False))

    return np.einsum("i,j,k,l->ijkl", *counts)


def max_pair_count(
        spec: NeighborhoodSpec,
        step_deg: float = 1.0
) -> int:
    """Pairs in an interior neighborhood: ((2 k_az + 1)(2 k_el + 1))^2."""
    k_az = _half_width(step_deg, spec.dtheta_deg)
    k_el = _half_width(step_deg, spec.dphi_deg)
    return ((2 * k_az + 1) * (2 * k_el + 1)) ** 2


def delta_min_db(
        grid: InrGrid,
        stats: PairNeighborhoodStats
) -> np.ndarray:
    """INR reduction available by moving within the neighborhood: INR - INR^min."""
    return grid.values_db - stats.inr_min_db


def delta_max_db(
        grid: InrGrid,
        stats: PairNeighborhoodStats
) -> np.ndarray:
    """INR increase possible within the neighborhood: INR^max - INR."""
    return stats.inr_max_db - grid.values_db


# === Per-beam views ===
def _per_beam(
        grid: InrGrid,
        side: str,
        tensor: np.ndarray
) -> np.ndarray:
    """Rows = beams of `side`, columns = counterpart beams."""
    _check_side(side)
    matrix = np.asarray(tensor).reshape(grid.tx_grid.size, grid.rx_grid.size)
    return matrix if side == "tx" else matrix.T


def side_lattice(
        grid: InrGrid,
        side: str
) -> DirectionGrid:
    _check_side(side)
    return grid.tx_grid if side == "tx" else grid.rx_grid


def beam_frame(
        grid: InrGrid,
        side: str,
        **columns: np.ndarray
) -> pd.DataFrame:
    """
    DataFrame with `side, az_deg, el_deg` followed by one per-beam column per keyword.
    """
    az, el = side_lattice(grid, side).flat_directions()
    frame = pd.DataFrame({
        "side": side,
        "az_deg": az,
        "el_deg": el
    })
    for name, values in columns.items():
        frame[name] = np.asarray(values).ravel()

    return frame


def per_beam_summary(
        grid: InrGrid,
        side: str
) -> pd.DataFrame:
    """
    Maximum, median and minimum INR of each beam on `side` across all counterpart beams.
    Even counts take the mean of the two central values as the median.

    Returns:
        - pd.DataFrame: Columns side, az_deg, el_deg, max_db, median_db, min_db.
    """
    matrix = _per_beam(grid, side, grid.values_db)

    return beam_frame(
        grid,
        side,
        max_db = matrix.max(axis = 1),
        median_db = np.median(matrix, axis = 1),
        min_db = matrix.min(axis = 1)
    )


def threshold_fraction(
        grid: InrGrid,
        side: str,
        threshold_db: float
) -> np.ndarray:
    """
    Fraction of counterpart beams with INR <= threshold_db, per beam of `side`.

    Returns:
        - np.ndarray: Shape (n_az, n_el) of the side's lattice.
    """
    matrix = _per_beam(grid, side, grid.values_db)
    fraction = np.mean(matrix <= threshold_db, axis = 1)
    return fraction.reshape(side_lattice(grid, side).shape)


def neighborhood_threshold_fraction(
        grid: InrGrid,
        side: str,
        spec: NeighborhoodSpec,
        threshold_db: float,
        stats: PairNeighborhoodStats | None = None
) -> np.ndarray:
    """
    Fraction of counterpart beams c for which some pair in the neighborhood of (b, c) reaches
    INR <= threshold_db, per beam b of `side`.
    """
    if stats is None:
        stats = pair_neighborhood_stats(grid, spec)
    elif stats.spec != spec:
        raise ValueError(f"stats were computed for neighborhood {stats.spec}, not {spec}")

    matrix = _per_beam(grid, side, stats.inr_min_db)
    fraction = np.mean(matrix <= threshold_db, axis = 1)
    return fraction.reshape(side_lattice(grid, side).shape)
