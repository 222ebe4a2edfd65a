import math

import numpy as np
import pytest

from mmwave_si.components.beamforming import conjugate_weight_matrix, conjugate_weights
from mmwave_si.components.channel import (
    broadside_calibration_db,
    coupling_gain,
    coupling_matrix,
    load_channel,
    save_channel,
    spherical_wave_channel,
    with_calibration
)
from mmwave_si.components.geometry import build_measurement_grid, default_platform
from mmwave_si.components.linkmath import inr_db, isolation_db, self_interference_dbm
from mmwave_si.schema.schema import (
    BeamWeights,
    ChannelMatrix,
    Direction,
    LinkBudget,
    PlatformGeometry,
    UpaConfig
)
from mmwave_si.utils.exceptions import DataError, DegenerateGeometryError


BROADSIDE = Direction(azimuth_deg = 0.0, elevation_deg = 0.0)


def _random_beam(rng, n: int) -> BeamWeights:
    w = rng.normal(size = n) + 1j * rng.normal(size = n)
    return BeamWeights(weights = w / np.linalg.norm(w), steering = BROADSIDE)


def test_single_element_channel_is_free_space_phase():
    cfg = UpaConfig(rows = 1, cols = 1)
    H = spherical_wave_channel(cfg, cfg, default_platform())

    assert H.shape == (1, 1)
    assert abs(H.entries[0, 0]) == pytest.approx(1.0)
    expected = np.exp(-2j * math.pi * 0.30 / cfg.wavelength_m)
    assert H.entries[0, 0] == pytest.approx(expected, abs = 1e-9)


def test_mirrored_platform_gives_symmetric_channel():
    cfg = UpaConfig(rows = 4, cols = 4)
    H = spherical_wave_channel(cfg, cfg, default_platform())

    assert H.shape == (16, 16)
    np.testing.assert_allclose(H.entries, H.entries.T, rtol = 0, atol = 1e-9)


def test_channel_amplitude_falls_with_distance():
    cfg = UpaConfig(rows = 4, cols = 4)
    H = spherical_wave_channel(cfg, cfg, default_platform())
    ## === Amplitude is r0 / r; the closest element pair couples hardest ===
    assert np.abs(H.entries).max() > 1.0 > np.abs(H.entries).min()


def test_coincident_elements_are_rejected():
    cfg = UpaConfig(rows = 1, cols = 2)
    s = cfg.spacing_m
    geom = PlatformGeometry(
        tx_center = (0.0, -s / 2, 0.0),
        rx_center = (0.0, s / 2, 0.0),
        tx_boresight = (1.0, 0.0, 0.0),
        rx_boresight = (1.0, 0.0, 0.0),
        tx_azimuth_axis = (0.0, 1.0, 0.0),
        rx_azimuth_axis = (0.0, 1.0, 0.0),
        separation_m = s
    )
    with pytest.raises(DegenerateGeometryError):
        spherical_wave_channel(cfg, cfg, geom)


def test_carrier_mismatch_is_rejected():
    with pytest.raises(DataError):
        spherical_wave_channel(UpaConfig(rows = 2, cols = 2), UpaConfig(rows = 2, cols = 2, carrier_hz = 60e9), default_platform())


def test_coupling_gain_is_the_double_sum(rng):
    H = ChannelMatrix(
        entries = rng.normal(size = (3, 2)) + 1j * rng.normal(size = (3, 2)),
        calibration_db = 6.0
    )
    w = _random_beam(rng, 3)
    f = _random_beam(rng, 2)

    expected = sum(
        w.weights[m] * H.entries[m, n] * f.weights[n]
        for m in range(3)
        for n in range(2)
    ) * 10 ** (6.0 / 20)

    assert coupling_gain(w, H, f) == pytest.approx(expected)


def test_coupling_gain_dimension_mismatch(rng):
    H = ChannelMatrix(entries = np.ones((3, 2)))
    with pytest.raises(DataError, match = "dimension mismatch"):
        coupling_gain(_random_beam(rng, 2), H, _random_beam(rng, 2))


def test_coupling_matrix_matches_pairwise_coupling():
    cfg = UpaConfig(rows = 4, cols = 4)
    H = spherical_wave_channel(cfg, cfg, default_platform(), calibration_db = 3.0)
    grid = build_measurement_grid(-4, 4, -2, 2, 2)
    W = conjugate_weight_matrix(cfg, grid)

    C = coupling_matrix(W, H, W)

    assert C.shape == (grid.size, grid.size)
    tx = grid.direction(1, 2)
    rx = grid.direction(4, 0)
    single = coupling_gain(conjugate_weights(cfg, rx), H, conjugate_weights(cfg, tx))
    assert C[grid.flat_index(4, 0), grid.flat_index(1, 2)] == pytest.approx(single)


def test_broadside_calibration_pins_inr():
    cfg = UpaConfig(rows = 4, cols = 4)
    budget = LinkBudget()
    H = spherical_wave_channel(cfg, cfg, default_platform())

    cal = broadside_calibration_db(cfg, cfg, H, budget, target_inr_db = 40.0)
    coupling = coupling_gain(
        conjugate_weights(cfg, BROADSIDE),
        with_calibration(H, cal),
        conjugate_weights(cfg, BROADSIDE)
    )
    inr = inr_db(budget, self_interference_dbm(budget, isolation_db(coupling)))

    assert inr == pytest.approx(40.0)


def test_channel_dump_round_trip(tmp_path):
    cfg = UpaConfig(rows = 2, cols = 3)
    H = spherical_wave_channel(cfg, cfg, default_platform(), calibration_db = -12.5)
    path = save_channel(H, tmp_path / "H.bin")

    assert path.stat().st_size == 6 * 6 * 8
    assert (tmp_path / "H.bin.json").is_file()

    loaded = load_channel(path)
    assert loaded.calibration_db == -12.5
    np.testing.assert_allclose(loaded.entries, H.entries, rtol = 1e-6)


def test_channel_dump_size_mismatch(tmp_path):
    H = ChannelMatrix(entries = np.ones((2, 2)))
    path = save_channel(H, tmp_path / "H.bin")
    path.write_bytes(path.read_bytes()[:8])

    with pytest.raises(DataError):
        load_channel(path)
