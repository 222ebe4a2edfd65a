# === Python Modules ===
import os
from pathlib import Path
from itertools import islice
from concurrent.futures import ThreadPoolExecutor
from typing import Any, Dict, List, Tuple

import numpy as np
import pandas as pd

# === Schema ===
from mmwave_si.schema.schema import (
    Direction,
    DirectionGrid,
    InrGrid,
    LinkBudget,
    PlatformGeometry,
    SimulationConfig,
    UpaConfig
)

# === Components ===
from mmwave_si.components.beamforming import conjugate_weight_matrix
from mmwave_si.components.channel import (
    broadside_calibration_db,
    coupling_matrix,
    spherical_wave_channel,
    with_calibration
)
from mmwave_si.components.geometry import (
    build_measurement_grid,
    platform_from_config
)
from mmwave_si.components.linkmath import (
    inr_db,
    isolation_db,
    self_interference_dbm
)

# === Utils ===
from mmwave_si.utils.common import (
    count_comment_lines,
    get_logger,
    open_file,
    save_file,
    write_metadata_header
)
from mmwave_si.utils.exceptions import DataError, GridParseError

logger = get_logger(__name__)

GRID_COLUMNS = ["tx_az_deg", "tx_el_deg", "rx_az_deg", "rx_el_deg", "inr_db"]
FLOAT_FORMAT = "%.17g"
CACHE_DTYPE = "<f8"

# Transmit directions per work item; fixed so results do not depend on the worker count.
SIM_CHUNK_SIZE = 128


# === Function to simulate the INR of every beam pair ===
def simulate_grid(
        tx_cfg: UpaConfig,
        rx_cfg: UpaConfig,
        geom: PlatformGeometry,
        budget: LinkBudget,
        tx_grid: DirectionGrid,
        rx_grid: DirectionGrid,
        calibration_db: float | None = None,
        target_broadside_inr_db: float = 40.0,
        inr_floor_db: float = -200.0,
        threads: int | None = None,
        chunk_size: int = SIM_CHUNK_SIZE
) -> InrGrid:
    """
    INR of every transmit/receive beam pair under conjugate beamforming over the spherical-wave
    channel.

    Args:
        - tx_cfg, rx_cfg (UpaConfig): Arrays.
        - geom (PlatformGeometry): Panel poses.
        - budget (LinkBudget): Link powers.
        - tx_grid, rx_grid (DirectionGrid): Beam lattices.
        - calibration_db (float | None): Channel gain; None pins the broadside pair to
          `target_broadside_inr_db`.
        - target_broadside_inr_db (float): See above.
        - inr_floor_db (float): Reported for pairs whose coupling is exactly zero.
        - threads (int | None): Worker threads; defaults to the available cores.
        - chunk_size (int): Transmit beams per work item.

    Returns:
        - InrGrid: Tensor indexed [tx_az, tx_el, rx_az, rx_el].
    """
    ## === Step 1: Channel and calibration ===
    H = spherical_wave_channel(tx_cfg, rx_cfg, geom)
    if calibration_db is None:
        calibration_db = broadside_calibration_db(
            tx_cfg = tx_cfg,
            rx_cfg = rx_cfg,
            H = H,
            budget = budget,
            target_inr_db = target_broadside_inr_db
        )
    H = with_calibration(H, calibration_db)

    ## === Step 2: Beam weights for every lattice direction, computed once ===
    F = conjugate_weight_matrix(tx_cfg, tx_grid)
    W = conjugate_weight_matrix(rx_cfg, rx_grid)

    out = np.empty((tx_grid.size, rx_grid.size), dtype = np.float64)
    starts = range(0, tx_grid.size, chunk_size)

    def run_chunk(start: int) -> int:
        stop = min(start + chunk_size, tx_grid.size)
        coupling = coupling_matrix(W, H, F[:, start:stop])
        psi = self_interference_dbm(budget, isolation_db(coupling))
        out[start:stop, :] = inr_db(budget, psi).T
        return stop - start

    ## === Step 3: Transmit chunks in parallel; each writes a disjoint block of rows ===
    workers = threads or os.cpu_count() or 1
    with ThreadPoolExecutor(max_workers = workers) as pool:
        done = sum(pool.map(run_chunk, starts))
    logger.debug(f"Simulated {done} transmit beams with {workers} threads")

    below_floor = ~np.isfinite(out)
    if below_floor.any():
        logger.warning(
            f"{int(below_floor.sum())} beam pairs have zero coupling; reporting {inr_floor_db} dB"
        )
        out[below_floor] = inr_floor_db

    return InrGrid(
        tx_grid = tx_grid,
        rx_grid = rx_grid,
        values_db = out.reshape(tx_grid.shape + rx_grid.shape),
        metadata = {
            "calibration_db": float(calibration_db),
            "target_broadside_inr_db": float(target_broadside_inr_db)
        }
    )


def simulate_from_config(
        config: SimulationConfig,
        threads: int | None = None
) -> InrGrid:
    """
    Runs `simulate_grid` with the arrays, platform, budget and lattice of a config file.
    """
    upa = config.upa()
    lattice = build_measurement_grid(
        az_min = config.grid.az_min,
        az_max = config.grid.az_max,
        el_min = config.grid.el_min,
        el_max = config.grid.el_max,
        step = config.grid.step
    )

    grid = simulate_grid(
        tx_cfg = upa,
        rx_cfg = upa,
        geom = platform_from_config(config),
        budget = config.budget(),
        tx_grid = lattice,
        rx_grid = lattice,
        calibration_db = config.calibration_db,
        target_broadside_inr_db = config.target_broadside_inr_db,
        inr_floor_db = config.inr_floor_db,
        threads = threads
    )
    grid.metadata.update({
        "geometry": config.model_dump(mode = "json", exclude = {"grid"}),
        "grid": config.grid.model_dump(mode = "json")
    })

    return grid


# === Tabular view ===
def pair_coordinates(
        grid: InrGrid
) -> Dict[str, np.ndarray]:
    """
    The four direction columns of every pair, in tensor (C) order.
    """
    tx_az, tx_el, rx_az, rx_el = np.meshgrid(
        grid.tx_grid.azimuths,
        grid.tx_grid.elevations,
        grid.rx_grid.azimuths,
        grid.rx_grid.elevations,
        indexing = "ij"
    )

    return {
        "tx_az_deg": tx_az.ravel(),
        "tx_el_deg": tx_el.ravel(),
        "rx_az_deg": rx_az.ravel(),
        "rx_el_deg": rx_el.ravel()
    }


def grid_frame(
        grid: InrGrid,
        extra: Dict[str, np.ndarray] | None = None
) -> pd.DataFrame:
    """
    One row per beam pair with the canonical columns, plus optional tensors aligned with the grid.
    """
    columns = pair_coordinates(grid)
    columns["inr_db"] = grid.values_db.ravel()
    for name, tensor in (extra or {}).items():
        columns[name] = np.asarray(tensor).ravel()

    return pd.DataFrame(columns)


def write_frame(
        frame: pd.DataFrame,
        path: Path,
        metadata: Dict[str, Any] | None = None
) -> Path:
    """
    Writes a CSV preceded by the `# key: value` metadata block.
    """
    path = Path(path)
    os.makedirs(
        path.parent,
        exist_ok = True
    )

    with open(
        path,
        "w",
        encoding = "utf-8",
        newline = ""
    ) as f:
        write_metadata_header(f, metadata or {})
        frame.to_csv(
            f,
            index = False,
            float_format = FLOAT_FORMAT,
            lineterminator = "\n"
        )
    logger.info(f"Saved: {path}")

    return path


# === Function to save a grid as canonical CSV ===
def save_grid(
        grid: InrGrid,
        path: Path,
        metadata: Dict[str, Any] | None = None
) -> Path:
    return write_frame(
        frame = grid_frame(grid),
        path = path,
        metadata = metadata
    )


# === Function to load a canonical CSV grid ===
def _check_encoding(
        path: Path
) -> None:
    with open(path, "rb") as f:
        for lineno, raw in enumerate(f, start = 1):
            try:
                raw.decode("utf-8")
            except UnicodeDecodeError as e:
                raise GridParseError(
                    f"invalid UTF-8 byte 0x{raw[e.start]:02x} at column {e.start + 1}",
                    line = lineno
                ) from e


def _raw_line(
        path: Path,
        line: int
) -> str:
    with open(path, "r", encoding = "utf-8") as f:
        return next(islice(f, line - 1, line), "").rstrip("\r\n")


def _first_bad_field_count(
        path: Path,
        first_data_line: int
) -> Tuple[int, int] | None:
    with open(path, "r", encoding = "utf-8") as f:
        for lineno, text in enumerate(f, start = 1):
            if lineno < first_data_line:
                continue
            n_fields = len(text.rstrip("\r\n").split(","))
            if n_fields != len(GRID_COLUMNS):
                return lineno, n_fields
    return None


def _read_rows(
        path: Path,
        header_line: int
) -> pd.DataFrame:
    options = dict(
        skiprows = header_line - 1,
        skip_blank_lines = False,
        float_precision = "round_trip"
    )
    try:
        try:
            return pd.read_csv(path, dtype = np.float64, **options)
        except ValueError:
            ## === Non-numeric text somewhere: reread as strings and coerce to find it ===
            raw = pd.read_csv(path, dtype = str, keep_default_na = False, **options)
            return raw.apply(pd.to_numeric, errors = "coerce")

    except pd.errors.ParserError as e:
        bad = _first_bad_field_count(path, header_line + 1)
        if bad is None:
            raise GridParseError(f"could not parse grid: {e}") from e
        lineno, n_fields = bad
        raise GridParseError(
            f"expected {len(GRID_COLUMNS)} fields, found {n_fields}",
            line = lineno
        ) from e


def _infer_axis(
        values: np.ndarray,
        name: str
) -> np.ndarray:
    axis = np.unique(values)
    try:
        DirectionGrid(azimuths = axis, elevations = [0.0])
    except DataError as e:
        raise GridParseError(f"{name} values do not form a uniform lattice: {e}") from e
    return axis


def load_grid(
        path: Path
) -> InrGrid:
    """
    Loads a canonical CSV grid (any row order) into a dense tensor.

    Args:
        - path (Path): CSV with header tx_az_deg,tx_el_deg,rx_az_deg,rx_el_deg,inr_db, optionally
          preceded by `#` comment lines.

    Returns:
        - InrGrid: Grid whose lattices are inferred from the data. Metadata comments are kept.
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"grid file not found: {path}")

    ## === Step 1: Encoding and header ===
    _check_encoding(path)
    n_comments = count_comment_lines(path)
    header_line = n_comments + 1
    header = _raw_line(path, header_line)
    if [h.strip() for h in header.split(",")] != GRID_COLUMNS:
        raise GridParseError(
            f"header must be {','.join(GRID_COLUMNS)}, got {header!r}",
            line = header_line
        )

    ## === Step 2: Rows ===
    frame = _read_rows(path, header_line)
    if frame.empty:
        raise GridParseError("grid file has no data rows")

    values = frame[GRID_COLUMNS].to_numpy(dtype = np.float64)
    bad_rows = np.flatnonzero(~np.isfinite(values).all(axis = 1))
    if bad_rows.size:
        lineno = header_line + 1 + int(bad_rows[0])
        raise GridParseError(
            f"malformed row {_raw_line(path, lineno)!r}: expected {len(GRID_COLUMNS)} finite numbers",
            line = lineno
        )

    ## === Step 3: Lattices and dense placement ===
    axes = [_infer_axis(values[:, k], GRID_COLUMNS[k]) for k in range(4)]
    index = [np.searchsorted(axes[k], values[:, k]) for k in range(4)]
    shape = tuple(axis.size for axis in axes)
    flat = np.ravel_multi_index(index, shape)

    order = np.argsort(flat, kind = "stable")
    repeats = np.flatnonzero(flat[order][1:] == flat[order][:-1])
    if repeats.size:
        row = int(order[repeats + 1].min())
        first = int(np.flatnonzero(flat == flat[row])[0])
        raise GridParseError(
            f"duplicate direction tuple {tuple(values[row, :4])} (first seen on line {header_line + 1 + first})",
            line = header_line + 1 + row
        )

    total = int(np.prod(shape))
    if flat.size != total:
        present = np.zeros(total, dtype = bool)
        present[flat] = True
        missing = np.unravel_index(int(np.flatnonzero(~present)[0]), shape)
        coords = tuple(float(axes[k][missing[k]]) for k in range(4))
        raise GridParseError(f"missing beam pair {coords}; {total - flat.size} pairs absent in total")

    dense = np.empty(total, dtype = np.float64)
    dense[flat] = values[:, 4]

    return InrGrid(
        tx_grid = DirectionGrid(azimuths = axes[0], elevations = axes[1]),
        rx_grid = DirectionGrid(azimuths = axes[2], elevations = axes[3]),
        values_db = dense.reshape(shape),
        metadata = read_metadata(path, n_comments)
    )


def read_metadata(
        path: Path,
        n_comments: int | None = None
) -> Dict[str, str]:
    """
    Parses the leading `# key: value` block of a text output.
    """
    if n_comments is None:
        n_comments = count_comment_lines(path)

    metadata: Dict[str, str] = {}
    with open(path, "r", encoding = "utf-8") as f:
        for line in islice(f, n_comments):
            key, sep, value = line[1:].strip().partition(":")
            if sep:
                metadata[key.strip()] = value.strip()

    return metadata


# === Binary cache ===
def save_grid_cache(
        grid: InrGrid,
        path: Path
) -> Path:
    """
    Little-endian float64 tensor plus a `<path>.json` sidecar with both lattices.
    """
    path = Path(path)
    path.parent.mkdir(
        parents = True,
        exist_ok = True
    )
    np.ascontiguousarray(grid.values_db, dtype = CACHE_DTYPE).tofile(path)

    save_file(
        data = {
            "dtype": CACHE_DTYPE,
            "shape": list(grid.shape),
            "tx_grid": grid.tx_grid.to_json_dict(),
            "rx_grid": grid.rx_grid.to_json_dict(),
            "metadata": grid.metadata
        },
        file_path = path.with_name(path.name + ".json")
    )
    logger.info(f"Saved: {path}")

    return path


def load_grid_cache(
        path: Path
) -> InrGrid:
    path = Path(path)
    meta = open_file(file_path = path.with_name(path.name + ".json"))

    try:
        tx_grid = DirectionGrid(**meta["tx_grid"])
        rx_grid = DirectionGrid(**meta["rx_grid"])
        values = np.fromfile(path, dtype = meta.get("dtype", CACHE_DTYPE))
    except (KeyError, TypeError, OSError) as e:
        raise DataError(f"Error reading grid cache {path}: {e}") from e

    shape = tx_grid.shape + rx_grid.shape
    if values.size != int(np.prod(shape)):
        raise DataError(f"grid cache {path} holds {values.size} values, lattices need {shape}")

    return InrGrid(
        tx_grid = tx_grid,
        rx_grid = rx_grid,
        values_db = values.reshape(shape),
        metadata = meta.get("metadata", {})
    )


# === Slices ===
def slice_for_tx(
        grid: InrGrid,
        tx_dir: Direction
) -> np.ndarray:
    """INR over every receive beam for one transmit beam, shape (rx n_az, rx n_el)."""
    ia, ie = grid.tx_grid.index_of(tx_dir)
    return grid.values_db[ia, ie]


def slice_for_rx(
        grid: InrGrid,
        rx_dir: Direction
) -> np.ndarray:
    """INR over every transmit beam for one receive beam, shape (tx n_az, tx n_el)."""
    ia, ie = grid.rx_grid.index_of(rx_dir)
    return grid.values_db[:, :, ia, ie]


def slice_frame(
        lattice: DirectionGrid,
        values: np.ndarray
) -> pd.DataFrame:
    az, el = lattice.flat_directions()
    return pd.DataFrame({
        "az_deg": az,
        "el_deg": el,
        "inr_db": np.asarray(values).ravel()
    })


def pair_index(
        grid: InrGrid,
        flat: int
) -> Tuple[int, int, int, int]:
    """Flat pair index (tx flat * rx size + rx flat) to tensor coordinates."""
    return tuple(int(i) for i in np.unravel_index(flat, grid.shape))


def pair_flat_index(
        grid: InrGrid,
        coords: List[int] | Tuple[int, int, int, int]
) -> int:
    return int(np.ravel_multi_index(tuple(coords), grid.shape))


def load_any_grid(
        path: Path
) -> InrGrid:
    """
    Loads a CSV grid, or a binary cache when the file is not a `.csv` and has a JSON sidecar.
    """
    path = Path(path)
    if path.suffix.lower() != ".csv" and path.with_name(path.name + ".json").exists():
        return load_grid_cache(path)
    return load_grid(path)
