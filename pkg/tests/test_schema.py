import numpy as np
import pytest
from pydantic import ValidationError

from mmwave_si.schema.schema import (
    BeamWeights,
    Direction,
    DirectionGrid,
    FitRecord,
    FitTables,
    GammaFitDb,
    GammaParametrization,
    InrGrid,
    NeighborhoodSpec,
    NormalFitDb,
    PlatformGeometry,
    UpaConfig
)
from mmwave_si.utils.exceptions import DataError, OffLatticeError


def test_direction_wraps_azimuth():
    assert Direction(azimuth_deg = 190.0, elevation_deg = 0.0).azimuth_deg == pytest.approx(-170.0)
    assert Direction(azimuth_deg = 180.0, elevation_deg = 0.0).azimuth_deg == pytest.approx(-180.0)
    assert Direction(azimuth_deg = -540.0, elevation_deg = 0.0).azimuth_deg == pytest.approx(-180.0)


def test_direction_rejects_bad_elevation():
    with pytest.raises(ValidationError):
        Direction(azimuth_deg = 0.0, elevation_deg = 91.0)


def test_upa_derived_lengths():
    cfg = UpaConfig()
    assert cfg.num_elements == 256
    assert cfg.wavelength_m == pytest.approx(0.0107069, rel = 1e-5)
    assert cfg.spacing_m == pytest.approx(cfg.wavelength_m / 2)
    assert cfg.aperture_m == pytest.approx(cfg.spacing_m * 15 * np.sqrt(2))


def test_direction_grid_indexing():
    grid = DirectionGrid(azimuths = [-2, -1, 0, 1, 2], elevations = [-1, 0, 1])
    assert grid.shape == (5, 3)
    assert grid.size == 15
    assert grid.step_az == 1.0
    assert grid.flat_index(2, 1) == 7
    assert grid.unflatten(7) == (2, 1)

    az, el = grid.flat_directions()
    assert (az[7], el[7]) == (0.0, 0.0)
    assert grid.index_of(Direction(azimuth_deg = 1.0, elevation_deg = -1.0)) == (3, 0)


def test_direction_grid_off_lattice_names_nearest_point():
    grid = DirectionGrid(azimuths = [-2, -1, 0, 1, 2], elevations = [-1, 0, 1])
    with pytest.raises(OffLatticeError, match = r"nearest lattice point is \(1, 0\)"):
        grid.index_of(Direction(azimuth_deg = 0.7, elevation_deg = 0.2))


@pytest.mark.parametrize("azimuths", [[0, 1, 3], [1, 0], []])
def test_direction_grid_rejects_irregular_axes(azimuths):
    with pytest.raises(DataError):
        DirectionGrid(azimuths = azimuths, elevations = [0])


def test_direction_grid_does_not_freeze_caller_array():
    azimuths = np.arange(3.0)
    DirectionGrid(azimuths = azimuths, elevations = [0.0])
    azimuths[0] = -1.0


def test_beam_weights_must_be_unit_norm():
    with pytest.raises(DataError):
        BeamWeights(weights = np.ones(4), steering = Direction(azimuth_deg = 0, elevation_deg = 0))


def test_inr_grid_validates_shape_and_values():
    tx = DirectionGrid(azimuths = [0, 1], elevations = [0])
    rx = DirectionGrid(azimuths = [0, 1, 2], elevations = [0])

    with pytest.raises(DataError):
        InrGrid(tx_grid = tx, rx_grid = rx, values_db = np.zeros((2, 1, 2, 1)))
    with pytest.raises(DataError):
        InrGrid(tx_grid = tx, rx_grid = rx, values_db = np.full((2, 1, 3, 1), np.nan))

    grid = InrGrid(tx_grid = tx, rx_grid = rx, values_db = np.arange(6.0).reshape(2, 1, 3, 1))
    assert grid.matrix.shape == (2, 3)
    assert grid.matrix[1, 2] == 5.0


def test_neighborhood_spec_parse_and_key():
    spec = NeighborhoodSpec.parse(" 2, 3 ")
    assert spec.key == (2, 3)
    assert str(spec) == "(2,3)"

    with pytest.raises(ValueError):
        NeighborhoodSpec.parse("1.5,1").key
    with pytest.raises(ValueError):
        NeighborhoodSpec.parse("1")
    with pytest.raises(ValueError):
        NeighborhoodSpec.parse("-1,0")


def test_gamma_from_table_rate_inverts_second_parameter():
    scale = GammaFitDb.from_table(4.52, 4.10)
    rate = GammaFitDb.from_table(4.52, 4.10, GammaParametrization.RATE)

    assert scale.mean_db == pytest.approx(18.532)
    assert rate.scale_db == pytest.approx(1 / 4.10)
    assert scale.variance_db == pytest.approx(4.52 * 4.10 ** 2)


def test_fit_tables_reject_zero_neighborhood_range():
    with pytest.raises(ValidationError):
        FitTables(rng_table = {(0, 0): GammaFitDb(shape = 1.0, scale_db = 1.0)})

    with pytest.raises(ValidationError):
        FitTables(
            min_table = {(0, 0): NormalFitDb(mu_db = 20.32, sigma2_db = 70.69)},
            max_table = {(0, 0): NormalFitDb(mu_db = 20.0, sigma2_db = 70.69)}
        )


def test_fit_record_checks_parameter_names():
    FitRecord(family = "normal_db", params = {"mu_db": 1.0, "sigma2_db": 2.0})
    with pytest.raises(ValidationError):
        FitRecord(family = "gamma_db", params = {"shape": 1.0, "rate": 2.0})
    with pytest.raises(ValidationError):
        FitRecord(family = "weibull", params = {})


def test_platform_geometry_checks_pose():
    with pytest.raises(ValidationError):
        PlatformGeometry(
            tx_center = (0.0, -0.15, 0.0),
            rx_center = (0.0, 0.15, 0.0),
            tx_boresight = (1.0, 0.0, 0.0),
            rx_boresight = (1.0, 0.0, 0.0),
            tx_azimuth_axis = (0.0, 1.0, 0.0),
            rx_azimuth_axis = (0.0, 1.0, 0.0),
            separation_m = 0.5
        )

    with pytest.raises(ValidationError):
        PlatformGeometry(
            tx_center = (0.0, -0.15, 0.0),
            rx_center = (0.0, 0.15, 0.0),
            tx_boresight = (1.0, 0.0, 0.0),
            rx_boresight = (1.0, 0.0, 0.0),
            tx_azimuth_axis = (1.0, 0.0, 0.0),
            rx_azimuth_axis = (0.0, 1.0, 0.0)
        )
