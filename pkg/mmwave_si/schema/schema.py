# === Python Modules ===
import math
from enum import Enum
from dataclasses import dataclass, field
from typing import Dict, Tuple, Any

import numpy as np
from scipy.constants import c as SPEED_OF_LIGHT
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

# === Utils ===
from mmwave_si.utils.exceptions import DataError, OffLatticeError

Vector3 = Tuple[float, float, float]

# Directions are matched to lattice points within this many degrees.
LATTICE_TOL_DEG = 1e-6


# === Direction ===
class Direction(BaseModel):
    """
    An azimuth-elevation steering direction in the array-local frame, in degrees.
    """
    model_config = ConfigDict(frozen = True)

    azimuth_deg: float = Field(
        description = "Azimuth, normalized to [-180, 180). Positive toward the local +y axis."
    )
    elevation_deg: float = Field(
        ge = -90.0,
        le = 90.0,
        description = "Elevation in [-90, 90]. Positive toward the local +z axis."
    )

    @field_validator("azimuth_deg")
    @classmethod
    def _normalize_azimuth(cls, value: float) -> float:
        if not math.isfinite(value):
            raise ValueError("azimuth must be finite")
        wrapped = math.fmod(value + 180.0, 360.0)
        if wrapped < 0.0:
            wrapped += 360.0
        return wrapped - 180.0


# === Uniform Planar Array ===
class UpaConfig(BaseModel):
    """
    A rows x cols uniform planar array on the local y-z plane.
    """
    model_config = ConfigDict(frozen = True)

    rows: int = Field(
        default = 16,
        ge = 1,
        description = "Number of element rows (along local z)."
    )
    cols: int = Field(
        default = 16,
        ge = 1,
        description = "Number of element columns (along local y)."
    )
    element_spacing_wavelengths: float = Field(
        default = 0.5,
        gt = 0.0,
        description = "Element spacing in wavelengths."
    )
    carrier_hz: float = Field(
        default = 28e9,
        gt = 0.0,
        description = "Carrier frequency in Hz."
    )

    @property
    def wavelength_m(self) -> float:
        return SPEED_OF_LIGHT / self.carrier_hz

    @property
    def spacing_m(self) -> float:
        return self.element_spacing_wavelengths * self.wavelength_m

    @property
    def num_elements(self) -> int:
        return self.rows * self.cols

    @property
    def aperture_m(self) -> float:
        """Diagonal of the element footprint."""
        return self.spacing_m * math.hypot(self.rows - 1, self.cols - 1)


# === Two-panel platform ===
class PlatformGeometry(BaseModel):
    """
    Global pose of the transmit and receive panels.

    Each panel carries an orthonormal local frame: boresight (local x), azimuth axis (local y)
    and elevation axis (local z). The frame is not required to be right-handed, so a mirrored
    receive frame can be expressed.
    """
    model_config = ConfigDict(frozen = True)

    tx_center: Vector3
    rx_center: Vector3
    tx_boresight: Vector3
    rx_boresight: Vector3
    tx_azimuth_axis: Vector3
    rx_azimuth_axis: Vector3
    tx_elevation_axis: Vector3 = (0.0, 0.0, 1.0)
    rx_elevation_axis: Vector3 = (0.0, 0.0, 1.0)
    panel_angle_deg: float = Field(
        default = 60.0,
        description = "Angle of the triangular platform the panels are mounted on."
    )
    separation_m: float = Field(
        default = 0.30,
        gt = 0.0,
        description = "Distance between the two panel centers."
    )

    @model_validator(mode = "after")
    def _check_pose(self) -> "PlatformGeometry":
        distance = float(np.linalg.norm(np.subtract(self.tx_center, self.rx_center)))
        if abs(distance - self.separation_m) > 1e-9:
            raise ValueError(
                f"panel centers are {distance:.12f} m apart, expected separation_m = {self.separation_m}"
            )

        for side in ("tx", "rx"):
            axes = [
                np.asarray(getattr(self, f"{side}_{name}"), dtype = float)
                for name in ("boresight", "azimuth_axis", "elevation_axis")
            ]
            for vec in axes:
                if abs(np.linalg.norm(vec) - 1.0) > 1e-12:
                    raise ValueError(f"{side} frame axis {tuple(vec)} is not unit-norm")
            for a, b in ((0, 1), (0, 2), (1, 2)):
                if abs(float(np.dot(axes[a], axes[b]))) > 1e-9:
                    raise ValueError(f"{side} frame axes are not orthogonal")

        return self


# === Measurement direction lattice ===
def _axis_step(values: np.ndarray) -> float | None:
    return float(values[1] - values[0]) if values.size > 1 else None


@dataclass(frozen = True, eq = False)
class DirectionGrid:
    """
    Uniform azimuth x elevation lattice. Flat index = az_index * n_el + el_index.
    """
    azimuths: np.ndarray
    elevations: np.ndarray

    def __post_init__(self):
        for name in ("azimuths", "elevations"):
            values = np.array(getattr(self, name), dtype = np.float64)
            if values.ndim != 1 or values.size == 0:
                raise DataError(f"{name} must be a non-empty 1-D sequence")
            if values.size > 1:
                steps = np.diff(values)
                if np.any(steps <= 0):
                    raise DataError(f"{name} must be strictly increasing")
                if not np.allclose(steps, steps[0], rtol = 0.0, atol = 1e-9 * max(1.0, abs(steps[0]))):
                    raise DataError(f"{name} must be uniformly spaced")
            values.setflags(write = False)
            object.__setattr__(self, name, values)

    @property
    def n_az(self) -> int:
        return int(self.azimuths.size)

    @property
    def n_el(self) -> int:
        return int(self.elevations.size)

    @property
    def shape(self) -> Tuple[int, int]:
        return (self.n_az, self.n_el)

    @property
    def size(self) -> int:
        return self.n_az * self.n_el

    @property
    def step_az(self) -> float | None:
        return _axis_step(self.azimuths)

    @property
    def step_el(self) -> float | None:
        return _axis_step(self.elevations)

    def flat_index(self, az_index: int, el_index: int) -> int:
        return az_index * self.n_el + el_index

    def unflatten(self, flat: int) -> Tuple[int, int]:
        return divmod(int(flat), self.n_el)

    def flat_directions(self) -> Tuple[np.ndarray, np.ndarray]:
        """
        Returns (azimuths, elevations) of every lattice point in flat-index order.
        """
        az, el = np.meshgrid(self.azimuths, self.elevations, indexing = "ij")
        return az.ravel(), el.ravel()

    def direction(self, az_index: int, el_index: int) -> Direction:
        return Direction(
            azimuth_deg = float(self.azimuths[az_index]),
            elevation_deg = float(self.elevations[el_index])
        )

    def index_of(self, direction: Direction) -> Tuple[int, int]:
        """
        Lattice indices of a direction; raises OffLatticeError naming the nearest lattice point.
        """
        ia = int(np.argmin(np.abs(self.azimuths - direction.azimuth_deg)))
        ie = int(np.argmin(np.abs(self.elevations - direction.elevation_deg)))
        near_az = float(self.azimuths[ia])
        near_el = float(self.elevations[ie])

        if abs(near_az - direction.azimuth_deg) > LATTICE_TOL_DEG or abs(near_el - direction.elevation_deg) > LATTICE_TOL_DEG:
            raise OffLatticeError(
                f"direction ({direction.azimuth_deg:g}, {direction.elevation_deg:g}) is not on the lattice; "
                f"nearest lattice point is ({near_az:g}, {near_el:g})"
            )

        return ia, ie

    def to_json_dict(self) -> Dict[str, Any]:
        return {
            "azimuths": self.azimuths.tolist(),
            "elevations": self.elevations.tolist()
        }


# === Beam weights ===
@dataclass(frozen = True, eq = False)
class BeamWeights:
    weights: np.ndarray
    steering: Direction

    def __post_init__(self):
        weights = np.array(self.weights, dtype = np.complex128)
        norm = float(np.linalg.norm(weights))
        if abs(norm - 1.0) > 1e-10:
            raise DataError(f"beam weights must be unit-norm, got norm {norm}")
        weights.setflags(write = False)
        object.__setattr__(self, "weights", weights)


# === Channel matrix ===
@dataclass(frozen = True, eq = False)
class ChannelMatrix:
    """
    Coupling from transmit elements (columns) to receive elements (rows).
    `calibration_db` is a uniform amplitude gain applied on top of `entries`.
    """
    entries: np.ndarray
    calibration_db: float = 0.0

    def __post_init__(self):
        entries = np.array(self.entries, dtype = np.complex128)
        if entries.ndim != 2:
            raise DataError("channel entries must be a 2-D matrix")
        if not np.all(np.isfinite(entries)):
            raise DataError("channel entries must be finite")
        if not math.isfinite(self.calibration_db):
            raise DataError("calibration_db must be finite")
        entries.setflags(write = False)
        object.__setattr__(self, "entries", entries)

    @property
    def shape(self) -> Tuple[int, int]:
        return self.entries.shape

    @property
    def gain(self) -> float:
        return 10.0 ** (self.calibration_db / 20.0)


# === Link budget ===
class LinkBudget(BaseModel):
    """
    Power levels of the measurement link.
    """
    model_config = ConfigDict(
        frozen = True,
        allow_inf_nan = False
    )

    ptx_dbm: float = Field(
        default = -15.0,
        description = "Power into the transmit array."
    )
    pnoise_dbm: float = Field(
        default = -68.0,
        description = "Noise power at the receive array output over 100 MHz."
    )
    eirp_dbm: float = Field(
        default = 60.0,
        description = "Effective isotropic radiated power at broadside."
    )


# === INR grid ===
@dataclass(frozen = True, eq = False)
class InrGrid:
    """
    INR in dB for every transmit/receive direction pair, indexed [tx_az, tx_el, rx_az, rx_el].
    """
    tx_grid: DirectionGrid
    rx_grid: DirectionGrid
    values_db: np.ndarray
    metadata: Dict[str, Any] = field(default_factory = dict)

    def __post_init__(self):
        values = np.array(self.values_db, dtype = np.float64)
        expected = self.tx_grid.shape + self.rx_grid.shape
        if values.shape != expected:
            raise DataError(f"INR tensor shape {values.shape} does not match grids {expected}")
        if not np.all(np.isfinite(values)):
            raise DataError("INR tensor contains non-finite values")
        values.setflags(write = False)
        object.__setattr__(self, "values_db", values)

    @property
    def shape(self) -> Tuple[int, int, int, int]:
        return self.values_db.shape

    @property
    def matrix(self) -> np.ndarray:
        """The tensor viewed as (tx flat index, rx flat index)."""
        return self.values_db.reshape(self.tx_grid.size, self.rx_grid.size)


# === Neighborhood ===
class NeighborhoodSpec(BaseModel):
    """
    Half-widths of a (dtheta, dphi)-neighborhood in degrees.
    """
    model_config = ConfigDict(frozen = True)

    dtheta_deg: float = Field(
        default = 0.0,
        ge = 0.0,
        description = "Allowed azimuth deviation."
    )
    dphi_deg: float = Field(
        default = 0.0,
        ge = 0.0,
        description = "Allowed elevation deviation."
    )

    @classmethod
    def parse(cls, text: str) -> "NeighborhoodSpec":
        """Parses 'DTHETA,DPHI'."""
        parts = [p.strip() for p in str(text).split(",")]
        if len(parts) != 2:
            raise ValueError(f"neighborhood must be 'DTHETA,DPHI', got {text!r}")
        return cls(
            dtheta_deg = float(parts[0]),
            dphi_deg = float(parts[1])
        )

    @property
    def key(self) -> Tuple[int, int]:
        """Integer table key; raises when the half-widths are not whole degrees."""
        if not (float(self.dtheta_deg).is_integer() and float(self.dphi_deg).is_integer()):
            raise ValueError(f"({self.dtheta_deg:g}, {self.dphi_deg:g}) is not an integer neighborhood")
        return int(self.dtheta_deg), int(self.dphi_deg)

    def __str__(self) -> str:
        return f"({self.dtheta_deg:g},{self.dphi_deg:g})"


@dataclass(frozen = True, eq = False)
class PairNeighborhoodStats:
    spec: NeighborhoodSpec
    inr_min_db: np.ndarray
    inr_max_db: np.ndarray
    inr_rng_db: np.ndarray


# === Fitted distributions ===
class GammaParametrization(str, Enum):
    SCALE = "scale"
    RATE = "rate"


class NormalFitDb(BaseModel):
    """
    Normal distribution over a dB-valued quantity.
    """
    model_config = ConfigDict(
        frozen = True,
        allow_inf_nan = False
    )

    mu_db: float = Field(description = "Mean (dB).")
    sigma2_db: float = Field(
        gt = 0.0,
        description = "Variance (dB^2)."
    )

    @property
    def sigma_db(self) -> float:
        return math.sqrt(self.sigma2_db)

    def to_json_dict(self) -> Dict[str, Any]:
        return {
            "family": "normal_db",
            "params": {
                "mu_db": self.mu_db,
                "sigma2_db": self.sigma2_db
            }
        }


class GammaFitDb(BaseModel):
    """
    Gamma distribution over a non-negative dB quantity, stored as (shape, scale).
    """
    model_config = ConfigDict(
        frozen = True,
        allow_inf_nan = False
    )

    shape: float = Field(
        gt = 0.0,
        description = "Shape alpha."
    )
    scale_db: float = Field(
        gt = 0.0,
        description = "Scale s in dB; mean = shape * scale_db."
    )

    @classmethod
    def from_table(
            cls,
            shape: float,
            second: float,
            parametrization: GammaParametrization = GammaParametrization.SCALE
    ) -> "GammaFitDb":
        """
        Builds a fit from a tabulated pair whose second entry is a scale or a rate.
        """
        if GammaParametrization(parametrization) is GammaParametrization.RATE:
            if second <= 0:
                raise ValueError("rate must be positive")
            second = 1.0 / second
        return cls(
            shape = shape,
            scale_db = second
        )

    @property
    def mean_db(self) -> float:
        return self.shape * self.scale_db

    @property
    def variance_db(self) -> float:
        return self.shape * self.scale_db ** 2

    def to_json_dict(self) -> Dict[str, Any]:
        return {
            "family": "gamma_db",
            "params": {
                "shape": self.shape,
                "scale_db": self.scale_db
            },
            "parametrization": GammaParametrization.SCALE.value
        }


class GlobalFit(BaseModel):
    """
    Log-normal model of the INR of a random beam pair (normal over dB).
    """
    model_config = ConfigDict(frozen = True)

    normal: NormalFitDb = Field(
        default = NormalFitDb(mu_db = 20.32, sigma2_db = 70.69),
        description = "Normal fit of INR in dB over all beam pairs."
    )


class FitRecord(BaseModel):
    """
    One serialized fit as written by the `fit` command.
    """
    family: str = Field(description = "'normal_db' or 'gamma_db'.")
    params: Dict[str, float] = Field(description = "mu_db/sigma2_db or shape/scale_db.")
    parametrization: GammaParametrization | None = Field(
        default = None,
        description = "Meaning of the Gamma second parameter; always 'scale' when written."
    )
    n_samples: int = Field(
        default = 0,
        ge = 0,
        description = "Number of samples the fit was computed from."
    )

    @model_validator(mode = "after")
    def _check_family(self) -> "FitRecord":
        expected = {
            "normal_db": {"mu_db", "sigma2_db"},
            "gamma_db": {"shape", "scale_db"}
        }
        if self.family not in expected:
            raise ValueError(f"unknown family {self.family!r}")
        if set(self.params) != expected[self.family]:
            raise ValueError(f"{self.family} params must be {sorted(expected[self.family])}")
        return self


class FitReport(BaseModel):
    """
    Output of the `fit` command. Neighborhood keys are 'DTHETA,DPHI'; conditioned keys are
    'D,INR'. A null conditioned entry marks a bin with too few samples.
    """
    global_fit: FitRecord
    rng: Dict[str, FitRecord] = Field(default_factory = dict)
    min: Dict[str, FitRecord] = Field(default_factory = dict)
    max: Dict[str, FitRecord] = Field(default_factory = dict)
    delta_min: Dict[str, FitRecord | None] = Field(default_factory = dict)
    delta_max: Dict[str, FitRecord | None] = Field(default_factory = dict)
    bin_width_db: float = Field(
        default = 1.0,
        description = "Width of the center-INR bins used for the conditioned fits."
    )


class FitTables(BaseModel):
    """
    Neighborhood fit tables keyed by (dtheta, dphi); conditioned tables keyed by (d, inr_db)
    with dtheta = dphi = d.
    """
    model_config = ConfigDict(frozen = True)

    parametrization: GammaParametrization = GammaParametrization.SCALE
    rng_table: Dict[Tuple[int, int], GammaFitDb] = Field(default_factory = dict)
    min_table: Dict[Tuple[int, int], NormalFitDb] = Field(default_factory = dict)
    max_table: Dict[Tuple[int, int], NormalFitDb] = Field(default_factory = dict)
    delta_min_table: Dict[Tuple[int, int], GammaFitDb] = Field(default_factory = dict)
    delta_max_table: Dict[Tuple[int, int], GammaFitDb] = Field(default_factory = dict)

    @model_validator(mode = "after")
    def _check_zero_neighborhood(self) -> "FitTables":
        if (0, 0) in self.rng_table:
            raise ValueError("the (0,0) range fit is undefined (range is identically 0)")
        zero_min = self.min_table.get((0, 0))
        zero_max = self.max_table.get((0, 0))
        if zero_min is not None and zero_max is not None and zero_min != zero_max:
            raise ValueError("(0,0) min and max fits must both equal the global fit")
        return self


# === Geometry / link configuration file ===
class GridSpec(BaseModel):
    model_config = ConfigDict(
        frozen = True,
        extra = "forbid"
    )

    az_min: float = -60.0
    az_max: float = 60.0
    el_min: float = -10.0
    el_max: float = 10.0
    step: float = Field(
        default = 1.0,
        gt = 0.0
    )


class SimulationConfig(BaseModel):
    """
    JSON configuration for grid simulation: arrays, platform, link budget, lattice.
    """
    model_config = ConfigDict(
        frozen = True,
        extra = "forbid"
    )

    rows: int = Field(default = 16, ge = 1)
    cols: int = Field(default = 16, ge = 1)
    spacing_wl: float = Field(
        default = 0.5,
        gt = 0.0,
        description = "Element spacing in wavelengths."
    )
    carrier_hz: float = Field(default = 28e9, gt = 0.0)
    separation_m: float = Field(default = 0.30, gt = 0.0)
    panel_angle_deg: float = Field(default = 60.0)
    mirrored_frames: bool = Field(
        default = True,
        description = "Receive azimuth axis mirrors the transmit one, so both point toward the partner panel."
    )
    ptx_dbm: float = -15.0
    pnoise_dbm: float = -68.0
    eirp_dbm: float = 60.0
    calibration_db: float | None = Field(
        default = None,
        description = "Channel gain in dB. None derives it from target_broadside_inr_db."
    )
    target_broadside_inr_db: float = 40.0
    inr_floor_db: float = Field(
        default = -200.0,
        description = "INR reported for beam pairs whose coupling is exactly zero."
    )
    grid: GridSpec = Field(default_factory = GridSpec)

    def upa(self) -> UpaConfig:
        return UpaConfig(
            rows = self.rows,
            cols = self.cols,
            element_spacing_wavelengths = self.spacing_wl,
            carrier_hz = self.carrier_hz
        )

    def budget(self) -> LinkBudget:
        return LinkBudget(
            ptx_dbm = self.ptx_dbm,
            pnoise_dbm = self.pnoise_dbm,
            eirp_dbm = self.eirp_dbm
        )
