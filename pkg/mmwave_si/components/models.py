# === Python Modules ===
import warnings
from pathlib import Path
from functools import lru_cache
from typing import Any, Dict, List, Tuple

import numpy as np

# === Schema ===
from mmwave_si.schema.schema import (
    FitTables,
    GammaFitDb,
    GammaParametrization,
    GlobalFit,
    NeighborhoodSpec,
    NormalFitDb
)

# === Components ===
from mmwave_si.components.stats import (
    gamma_cdf,
    normal_cdf,
    sample_gamma,
    sample_normal
)

# === Utils ===
from mmwave_si.utils.common import open_file
from mmwave_si.utils.exceptions import InrClampWarning, TableDomainError

FIT_TABLES_PATH = Path(__file__).resolve().parent.parent / "data" / "fit_tables.json"

GLOBAL_FIT = GlobalFit()

MIN = "min"
MAX = "max"


# === Table asset (de)serialization ===
def _neighborhood_table(
        cells: List[List[Any]],
        build
) -> Dict[Tuple[int, int], Any]:
    table = {}
    for dphi, row in enumerate(cells):
        for dtheta, cell in enumerate(row):
            if cell is not None:
                table[(dtheta, dphi)] = build(*cell)
    return table


def _conditioned_table(
        rows: Dict[str, List[Any]],
        inr_columns: List[float],
        build
) -> Dict[Tuple[int, int], GammaFitDb]:
    table = {}
    for d, row in rows.items():
        if len(row) != len(inr_columns):
            raise TableDomainError(f"conditioned row {d} has {len(row)} cells, expected {len(inr_columns)}")
        for inr, cell in zip(inr_columns, row):
            if cell is not None:
                table[(int(d), int(inr))] = build(*cell)
    return table


def fit_tables_from_json(
        data: Dict[str, Any],
        parametrization: GammaParametrization | None = None
) -> FitTables:
    """
    Builds FitTables from the tabulated layout of `fit_tables.json`.

    Args:
        - data (Dict[str, Any]): Parsed asset.
        - parametrization (GammaParametrization | None): Overrides the asset's declared meaning of the
          Gamma second parameter.

    Returns:
        - FitTables: Validated tables, Gamma fits stored as (shape, scale).
    """
    param = GammaParametrization(parametrization or data.get("parametrization", "scale"))

    def gamma(shape: float, second: float) -> GammaFitDb:
        return GammaFitDb.from_table(shape, second, param)

    def normal(mu: float, sigma2: float) -> NormalFitDb:
        return NormalFitDb(mu_db = mu, sigma2_db = sigma2)

    inr_columns = data.get("inr_db", [])

    return FitTables(
        parametrization = param,
        rng_table = _neighborhood_table(data.get("rng_table", []), gamma),
        min_table = _neighborhood_table(data.get("min_table", []), normal),
        max_table = _neighborhood_table(data.get("max_table", []), normal),
        delta_min_table = _conditioned_table(data.get("delta_min_table", {}), inr_columns, gamma),
        delta_max_table = _conditioned_table(data.get("delta_max_table", {}), inr_columns, gamma)
    )


@lru_cache(maxsize = None)
def _embedded_tables(
        parametrization: GammaParametrization | None
) -> FitTables:
    return fit_tables_from_json(
        data = open_file(file_path = FIT_TABLES_PATH),
        parametrization = parametrization
    )


def load_fit_tables(
        path: Path | None = None,
        parametrization: GammaParametrization | None = None
) -> FitTables:
    """
    Loads fit tables; without a path, the embedded tables are returned (cached).
    """
    if path is None:
        return _embedded_tables(parametrization)

    return fit_tables_from_json(
        data = open_file(file_path = Path(path)),
        parametrization = parametrization
    )


def load_global_fit(
        path: Path | None = None
) -> GlobalFit:
    data = open_file(file_path = Path(path) if path else FIT_TABLES_PATH)
    return GlobalFit(normal = NormalFitDb(**data["global"]))


# === Lookups ===
def _table_key(
        spec: NeighborhoodSpec
) -> Tuple[int, int]:
    try:
        return spec.key
    except ValueError as e:
        raise TableDomainError(str(e)) from e


def _cell(
        table: Dict[Tuple[int, int], Any],
        spec: NeighborhoodSpec,
        name: str
):
    key = _table_key(spec)
    if key not in table:
        raise TableDomainError(f"no {name} fit for neighborhood {spec}")
    return table[key]


def _tables(tables: FitTables | None) -> FitTables:
    return tables if tables is not None else load_fit_tables()


def range_fit(spec: NeighborhoodSpec, tables: FitTables | None = None) -> GammaFitDb:
    return _cell(_tables(tables).rng_table, spec, "range")


def min_fit(spec: NeighborhoodSpec, tables: FitTables | None = None) -> NormalFitDb:
    return _cell(_tables(tables).min_table, spec, "minimum")


def max_fit(spec: NeighborhoodSpec, tables: FitTables | None = None) -> NormalFitDb:
    return _cell(_tables(tables).max_table, spec, "maximum")


# === Global model ===
def global_prob_below(
        threshold_db: float,
        global_fit: GlobalFit = GLOBAL_FIT
) -> float:
    """Probability that a random beam pair has INR <= threshold_db."""
    return normal_cdf(threshold_db, global_fit.normal)


def expected_range_db(
        spec: NeighborhoodSpec,
        tables: FitTables | None = None
) -> float:
    """
    Mean INR range over a neighborhood, shape * scale of its range fit. (0,0) has no fit.
    """
    return range_fit(spec, tables).mean_db


# === Samplers ===
def sample_global_inr(
        rng: np.random.Generator,
        size: int | None = None,
        global_fit: GlobalFit = GLOBAL_FIT
) -> float | np.ndarray:
    return sample_normal(global_fit.normal, rng, size)


def sample_inr_min(
        spec: NeighborhoodSpec,
        rng: np.random.Generator,
        size: int | None = None,
        tables: FitTables | None = None
) -> float | np.ndarray:
    return sample_normal(min_fit(spec, tables), rng, size)


def sample_inr_max(
        spec: NeighborhoodSpec,
        rng: np.random.Generator,
        size: int | None = None,
        tables: FitTables | None = None
) -> float | np.ndarray:
    return sample_normal(max_fit(spec, tables), rng, size)


def sample_inr_range(
        spec: NeighborhoodSpec,
        rng: np.random.Generator,
        size: int | None = None,
        tables: FitTables | None = None
) -> float | np.ndarray:
    return sample_gamma(range_fit(spec, tables), rng, size)


# === Conditioned (delta) fits ===
def _delta_columns(
        kind: str,
        spec: NeighborhoodSpec,
        tables: FitTables | None
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Returns (inr columns, shapes, scales) of one diagonal row of the conditioned table.
    """
    if kind not in (MIN, MAX):
        raise ValueError(f"table must be 'min' or 'max', got {kind!r}")

    dtheta, dphi = _table_key(spec)
    if dtheta != dphi:
        raise TableDomainError(f"conditioned fits exist only for dtheta = dphi, got {spec}")

    table = getattr(_tables(tables), f"delta_{kind}_table")
    row = sorted((inr, fit) for (d, inr), fit in table.items() if d == dtheta)
    if not row:
        raise TableDomainError(f"no conditioned {kind} fits for neighborhood {spec}")

    return (
        np.array([inr for inr, _ in row], dtype = np.float64),
        np.array([fit.shape for _, fit in row]),
        np.array([fit.scale_db for _, fit in row])
    )


def _clamp_inr(
        inr_db: float | np.ndarray,
        columns: np.ndarray
) -> np.ndarray:
    inr = np.asarray(inr_db, dtype = np.float64)
    lo, hi = float(columns[0]), float(columns[-1])

    if np.any((inr < lo) | (inr > hi)):
        warnings.warn(
            f"nominal INR outside [{lo:g}, {hi:g}] dB; clamped to the boundary column",
            InrClampWarning,
            stacklevel = 3
        )

    return np.clip(inr, lo, hi)


def delta_fit_lookup(
        table: str,
        spec: NeighborhoodSpec,
        inr_db: float,
        tables: FitTables | None = None
) -> GammaFitDb:
    """
    Gamma fit of the INR reduction ("min") or increase ("max") over a diagonal neighborhood,
    conditioned on the nominal INR.

    Args:
        - table (str): "min" or "max".
        - spec (NeighborhoodSpec): Diagonal neighborhood (dtheta = dphi).
        - inr_db (float): Nominal INR. Between columns, shape and scale are interpolated linearly;
          outside the tabulated span the boundary column is used and InrClampWarning is issued.
        - tables (FitTables | None): Defaults to the embedded tables.

    Returns:
        - GammaFitDb: Fit at `inr_db`.
    """
    columns, shapes, scales = _delta_columns(table, spec, tables)
    inr = float(_clamp_inr(inr_db, columns))

    return GammaFitDb(
        shape = float(np.interp(inr, columns, shapes)),
        scale_db = float(np.interp(inr, columns, scales))
    )


def _conditioned_draw(
        kind: str,
        spec: NeighborhoodSpec,
        inr_db: float | np.ndarray,
        rng: np.random.Generator,
        size: int | None,
        tables: FitTables | None
) -> np.ndarray:
    columns, shapes, scales = _delta_columns(kind, spec, tables)
    inr = _clamp_inr(inr_db, columns)

    ## === Per-draw interpolation so a vector of nominal INRs is handled in one call ===
    shape = np.interp(inr, columns, shapes)
    scale = np.interp(inr, columns, scales)

    if size is None and np.ndim(inr) > 0:
        size = inr.shape

    return rng.gamma(shape, scale, size = size)


def sample_inr_min_conditioned(
        spec: NeighborhoodSpec,
        inr_db: float | np.ndarray,
        rng: np.random.Generator,
        size: int | None = None,
        tables: FitTables | None = None
) -> float | np.ndarray:
    """inr_db minus a Gamma-distributed reduction."""
    value = np.asarray(inr_db, dtype = np.float64) - _conditioned_draw(MIN, spec, inr_db, rng, size, tables)
    return float(value) if np.ndim(value) == 0 else value


def sample_inr_max_conditioned(
        spec: NeighborhoodSpec,
        inr_db: float | np.ndarray,
        rng: np.random.Generator,
        size: int | None = None,
        tables: FitTables | None = None
) -> float | np.ndarray:
    """inr_db plus a Gamma-distributed increase."""
    value = np.asarray(inr_db, dtype = np.float64) + _conditioned_draw(MAX, spec, inr_db, rng, size, tables)
    return float(value) if np.ndim(value) == 0 else value


def sample_inr_min_composed(
        spec: NeighborhoodSpec,
        rng: np.random.Generator,
        size: int | None = None,
        tables: FitTables | None = None,
        global_fit: GlobalFit = GLOBAL_FIT
) -> float | np.ndarray:
    """
    Nominal INR from the global model, then the conditioned minimum around it.
    """
    nominal = sample_global_inr(rng, size, global_fit)
    return sample_inr_min_conditioned(spec, nominal, rng, tables = tables)


def sample_inr_max_composed(
        spec: NeighborhoodSpec,
        rng: np.random.Generator,
        size: int | None = None,
        tables: FitTables | None = None,
        global_fit: GlobalFit = GLOBAL_FIT
) -> float | np.ndarray:
    nominal = sample_global_inr(rng, size, global_fit)
    return sample_inr_max_conditioned(spec, nominal, rng, tables = tables)


# === CDF evaluators ===
def prob_min_below(
        spec: NeighborhoodSpec,
        threshold_db: float,
        inr_db: float | None = None,
        tables: FitTables | None = None
) -> float:
    """
    Probability that the minimum INR over the neighborhood is at most `threshold_db`.

    Unconditioned, this is the normal CDF of the minimum fit. Given a nominal INR it is the
    probability that the Gamma reduction reaches inr_db - threshold_db.
    """
    if inr_db is None:
        return normal_cdf(threshold_db, min_fit(spec, tables))

    fit = delta_fit_lookup(MIN, spec, inr_db, tables)
    return 1.0 - gamma_cdf(inr_db - threshold_db, fit)


def prob_max_above(
        spec: NeighborhoodSpec,
        threshold_db: float,
        inr_db: float | None = None,
        tables: FitTables | None = None
) -> float:
    """
    Probability that the maximum INR over the neighborhood is at least `threshold_db`.
    """
    if inr_db is None:
        return 1.0 - normal_cdf(threshold_db, max_fit(spec, tables))

    fit = delta_fit_lookup(MAX, spec, inr_db, tables)
    return 1.0 - gamma_cdf(threshold_db - inr_db, fit)


def prob_range_above(
        spec: NeighborhoodSpec,
        x_db: float,
        tables: FitTables | None = None
) -> float:
    """Probability that the INR range over the neighborhood exceeds `x_db`."""
    return 1.0 - gamma_cdf(x_db, range_fit(spec, tables))
