import math

import numpy as np
import pytest

from mmwave_si.components.beamforming import (
    array_response,
    array_responses,
    beam_gain_pattern,
    conjugate_weight_matrix,
    conjugate_weights,
    half_power_beamwidth
)
from mmwave_si.components.geometry import build_measurement_grid
from mmwave_si.schema.schema import Direction, DirectionGrid, LinkBudget, UpaConfig


BROADSIDE = Direction(azimuth_deg = 0.0, elevation_deg = 0.0)


def test_array_response_is_unit_norm():
    cfg = UpaConfig()
    a = array_response(cfg, Direction(azimuth_deg = 23.0, elevation_deg = -7.0))
    assert a.shape == (256,)
    assert np.linalg.norm(a) == pytest.approx(1.0)


def test_broadside_response_is_in_phase():
    cfg = UpaConfig(rows = 4, cols = 4)
    np.testing.assert_allclose(array_response(cfg, BROADSIDE), np.full(16, 0.25))


def test_conjugate_weights_match_their_direction():
    cfg = UpaConfig()
    d = Direction(azimuth_deg = 20.0, elevation_deg = 5.0)
    w = conjugate_weights(cfg, d)

    assert np.linalg.norm(w.weights) == pytest.approx(1.0)
    assert abs(w.weights @ array_response(cfg, d)) == pytest.approx(1.0)


def test_weight_matrix_columns_follow_flat_index():
    cfg = UpaConfig(rows = 2, cols = 3)
    grid = build_measurement_grid(-2, 2, -1, 1, 1)
    W = conjugate_weight_matrix(cfg, grid)

    assert W.shape == (6, grid.size)
    np.testing.assert_allclose(W[:, grid.flat_index(3, 0)], conjugate_weights(cfg, grid.direction(3, 0)).weights)


def test_batched_responses_match_single():
    cfg = UpaConfig(rows = 3, cols = 5)
    batch = array_responses(cfg, np.array([0.0, 12.0]), np.array([0.0, -4.0]))
    np.testing.assert_allclose(batch[:, 1], array_response(cfg, Direction(azimuth_deg = 12, elevation_deg = -4)))


def test_broadside_gain_equals_eirp_over_ptx():
    cfg = UpaConfig()
    budget = LinkBudget()
    directions = DirectionGrid(azimuths = [0.0], elevations = [0.0])

    gain = beam_gain_pattern(cfg, conjugate_weights(cfg, BROADSIDE), directions, budget = budget)

    assert gain.shape == (1, 1)
    assert budget.ptx_dbm + gain[0, 0] == pytest.approx(budget.eirp_dbm)


def test_pattern_peaks_at_steering_direction():
    cfg = UpaConfig()
    steer = Direction(azimuth_deg = 20.0, elevation_deg = 5.0)
    directions = build_measurement_grid(10, 30, 0, 10, 1)

    gain = beam_gain_pattern(cfg, conjugate_weights(cfg, steer), directions, tx_chain_gain_db = 0.0)

    assert np.unravel_index(np.argmax(gain), gain.shape) == directions.index_of(steer)
    assert gain.max() == pytest.approx(10 * math.log10(256))


def test_first_null_of_broadside_beam():
    cfg = UpaConfig()
    null_deg = math.degrees(math.asin(2.0 / 16.0))
    directions = DirectionGrid(azimuths = [0.0, null_deg], elevations = [0.0])

    gain = beam_gain_pattern(cfg, conjugate_weights(cfg, BROADSIDE), directions, tx_chain_gain_db = 0.0).ravel()

    assert null_deg == pytest.approx(7.18, abs = 0.01)
    assert gain[1] - gain[0] < -40.0


@pytest.mark.parametrize("axis", ["azimuth", "elevation"])
def test_half_power_beamwidth(axis):
    cfg = UpaConfig()
    width = half_power_beamwidth(cfg, conjugate_weights(cfg, BROADSIDE), axis = axis)
    assert 6.0 <= width <= 8.0
    assert width == pytest.approx(6.35, abs = 0.05)


def test_half_power_beamwidth_rejects_unknown_axis():
    cfg = UpaConfig(rows = 2, cols = 2)
    with pytest.raises(ValueError):
        half_power_beamwidth(cfg, conjugate_weights(cfg, BROADSIDE), axis = "diagonal")
