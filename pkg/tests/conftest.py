# === Python Modules ===
import sys
import json
from pathlib import Path

import numpy as np
import pytest

## === Adding the project root directory to sys.path so tests import the package without installing it ===
sys.path.insert(
    0,
    str(Path(__file__).resolve().parent.parent)
)

from mmwave_si.schema.schema import DirectionGrid, InrGrid


def make_lattice(n_az: int, n_el: int, az0: float = -3.0, el0: float = -1.0, step: float = 1.0) -> DirectionGrid:
    return DirectionGrid(
        azimuths = az0 + step * np.arange(n_az),
        elevations = el0 + step * np.arange(n_el)
    )


def make_grid(values: np.ndarray, step: float = 1.0) -> InrGrid:
    values = np.asarray(values, dtype = np.float64)
    n_tx_az, n_tx_el, n_rx_az, n_rx_el = values.shape
    return InrGrid(
        tx_grid = make_lattice(n_tx_az, n_tx_el, step = step),
        rx_grid = make_lattice(n_rx_az, n_rx_el, az0 = 10.0, el0 = -2.0, step = step),
        values_db = values
    )


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(12345)


@pytest.fixture
def random_grid(rng) -> InrGrid:
    return make_grid(rng.normal(20.0, 8.0, size = (7, 3, 7, 3)))


@pytest.fixture
def tiny_config(tmp_path) -> Path:
    """A 4x4 array on a 3x1 lattice: 9 beam pairs."""
    path = tmp_path / "tiny.json"
    path.write_text(json.dumps({
        "rows": 4,
        "cols": 4,
        "spacing_wl": 0.5,
        "carrier_hz": 28e9,
        "separation_m": 0.30,
        "panel_angle_deg": 60.0,
        "grid": {"az_min": -1, "az_max": 1, "el_min": 0, "el_max": 0, "step": 1}
    }))
    return path


@pytest.fixture
def small_config(tmp_path) -> Path:
    """A 4x4 array on a 5x3 lattice."""
    path = tmp_path / "small.json"
    path.write_text(json.dumps({
        "rows": 4,
        "cols": 4,
        "grid": {"az_min": -4, "az_max": 4, "el_min": -2, "el_max": 2, "step": 2}
    }))
    return path
