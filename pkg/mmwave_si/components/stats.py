# === Python Modules ===
import math
from typing import Tuple

import numpy as np
from scipy import special

# === Schema ===
from mmwave_si.schema.schema import GammaFitDb, NormalFitDb

# === Utils ===
from mmwave_si.utils.common import get_logger
from mmwave_si.utils.exceptions import (
    ConvergenceError,
    DataError,
    DegenerateSampleError
)

logger = get_logger(__name__)

MIN_GAMMA_SAMPLES = 10
GAMMA_TOL = 1e-10
GAMMA_MAX_ITER = 100

# Points kept when a CDF is exported for plotting.
CDF_EXPORT_POINTS = 10_000


def _scalar_or_array(value: np.ndarray) -> float | np.ndarray:
    if np.ndim(value) == 0:
        return float(value)
    return value


# === Special functions ===
def erf(
        x: float | np.ndarray
) -> float | np.ndarray:
    x = np.asarray(x, dtype = np.float64)
    if np.any(np.isnan(x)):
        raise DataError("erf is undefined for NaN")
    return _scalar_or_array(special.erf(x))


def normal_cdf(
        x: float | np.ndarray,
        fit: NormalFitDb
) -> float | np.ndarray:
    """
    P(X <= x) = 1/2 [1 + erf((x - mu) / (sigma sqrt 2))].
    """
    z = (np.asarray(x, dtype = np.float64) - fit.mu_db) / (fit.sigma_db * math.sqrt(2.0))
    return _scalar_or_array(0.5 * (1.0 + special.erf(z)))


def lower_incomplete_gamma_regularized(
        a: float | np.ndarray,
        x: float | np.ndarray
) -> float | np.ndarray:
    """
    Regularized lower incomplete gamma P(a, x) = gamma(a, x) / Gamma(a).

    Args:
        - a (float | np.ndarray): Shape, > 0.
        - x (float | np.ndarray): Upper integration limit, >= 0.

    Returns:
        - float | np.ndarray: P(a, x) in [0, 1].
    """
    a = np.asarray(a, dtype = np.float64)
    x = np.asarray(x, dtype = np.float64)

    if np.any(~np.isfinite(a)) or np.any(a <= 0):
        raise DataError("incomplete gamma requires a > 0")
    if np.any(np.isnan(x)) or np.any(x < 0):
        raise DataError("incomplete gamma requires x >= 0")

    return _scalar_or_array(special.gammainc(a, x))


def gamma_cdf(
        x: float | np.ndarray,
        fit: GammaFitDb
) -> float | np.ndarray:
    """
    P(X <= x) = P(shape, x / scale_db); zero for x < 0.
    """
    x = np.asarray(x, dtype = np.float64)
    if np.any(np.isnan(x)):
        raise DataError("gamma_cdf is undefined for NaN")

    cdf = special.gammainc(fit.shape, np.maximum(x, 0.0) / fit.scale_db)
    return _scalar_or_array(np.where(x < 0, 0.0, cdf))


def digamma(
        x: float | np.ndarray
) -> float | np.ndarray:
    x = np.asarray(x, dtype = np.float64)
    if np.any(np.isnan(x)) or np.any((x <= 0) & (x == np.floor(x))):
        raise DataError("digamma has poles at non-positive integers")
    return _scalar_or_array(special.digamma(x))


# === Fitting ===
def _clean_samples(samples) -> np.ndarray:
    values = np.asarray(samples, dtype = np.float64).ravel()
    if not np.all(np.isfinite(values)):
        raise DegenerateSampleError("samples contain non-finite values")
    return values


def fit_normal_db(
        samples
) -> NormalFitDb:
    """
    Normal fit: sample mean and population (n-denominator) variance.

    Args:
        - samples (array-like): dB values, at least 2.

    Returns:
        - NormalFitDb: Fitted (mu_db, sigma2_db).
    """
    values = _clean_samples(samples)
    if values.size < 2:
        raise DegenerateSampleError(f"a normal fit needs at least 2 samples, got {values.size}")

    variance = float(np.var(values))
    if not variance > 0:
        raise DegenerateSampleError("samples have zero variance")

    return NormalFitDb(
        mu_db = float(np.mean(values)),
        sigma2_db = variance
    )


def _solve_gamma_shape(
        s: float,
        tol: float,
        max_iter: int
) -> Tuple[float, bool]:
    """
    Newton iteration on ln(a) - psi(a) = s, started from the closed-form approximation.
    """
    alpha = (3.0 - s + math.sqrt((s - 3.0) ** 2 + 24.0 * s)) / (12.0 * s)

    for _ in range(max_iter):
        f = math.log(alpha) - special.digamma(alpha) - s
        df = 1.0 / alpha - special.polygamma(1, alpha)
        step = f / df
        new_alpha = alpha - step
        if not new_alpha > 0:
            new_alpha = alpha / 2.0
        if abs(new_alpha - alpha) <= tol * max(1.0, alpha):
            return float(new_alpha), True
        alpha = new_alpha

    return float(alpha), False


def fit_gamma_db(
        samples,
        tol: float = GAMMA_TOL,
        max_iter: int = GAMMA_MAX_ITER
) -> GammaFitDb:
    """
    Maximum-likelihood Gamma fit (shape, scale) of strictly positive dB samples.

    Solves ln(a) - psi(a) = ln(mean) - mean(ln x) by Newton's method; the scale is mean / a.
    Falls back to the method of moments when the iteration does not converge.

    Args:
        - samples (array-like): At least 10 values, all > 0.
        - tol (float): Relative tolerance on the shape.
        - max_iter (int): Newton iteration cap.

    Returns:
        - GammaFitDb: Fitted (shape, scale_db).
    """
    values = _clean_samples(samples)
    if values.size < MIN_GAMMA_SAMPLES:
        raise DegenerateSampleError(
            f"a Gamma fit needs at least {MIN_GAMMA_SAMPLES} samples, got {values.size}"
        )
    if np.any(values <= 0):
        raise DegenerateSampleError("Gamma samples must be strictly positive")

    mean = float(np.mean(values))
    s = math.log(mean) - float(np.mean(np.log(values)))
    if not s > 0:
        raise DegenerateSampleError("samples have zero variance")

    shape, converged = _solve_gamma_shape(s, tol, max_iter)

    if not converged or not math.isfinite(shape):
        ## === Method-of-moments fallback ===
        logger.warning(
            f"Gamma MLE did not converge in {max_iter} iterations; using method of moments"
        )
        with np.errstate(over = "ignore", invalid = "ignore"):
            shape = float(np.float64(mean) ** 2 / np.var(values))
        if not (math.isfinite(shape) and shape > 0):
            raise ConvergenceError(
                f"Gamma fit did not converge and the method of moments gave shape {shape}"
            )

    return GammaFitDb(
        shape = shape,
        scale_db = mean / shape
    )


# === Empirical CDF ===
class EmpiricalCdf:
    """
    Right-continuous step CDF of a sample. Quantiles average the two central order statistics
    when q * n lands on an integer.
    """

    def __init__(
            self,
            samples
    ):
        values = np.sort(np.asarray(samples, dtype = np.float64).ravel())
        if values.size == 0:
            raise DegenerateSampleError("empirical CDF needs at least one sample")
        if np.any(np.isnan(values)):
            raise DegenerateSampleError("empirical CDF samples contain NaN")
        values.setflags(write = False)
        self.values: np.ndarray = values

    def __len__(self) -> int:
        return int(self.values.size)

    def cdf(
            self,
            x: float | np.ndarray
    ) -> float | np.ndarray:
        counts = np.searchsorted(self.values, x, side = "right")
        return _scalar_or_array(counts / self.values.size)

    def quantile(
            self,
            q: float | np.ndarray
    ) -> float | np.ndarray:
        q = np.asarray(q, dtype = np.float64)
        if np.any((q < 0) | (q > 1)):
            raise ValueError("quantile levels must lie in [0, 1]")
        return _scalar_or_array(
            np.quantile(self.values, q, method = "averaged_inverted_cdf")
        )

    def median(self) -> float:
        return float(np.median(self.values))

    def decimate(
            self,
            max_points: int = CDF_EXPORT_POINTS
    ) -> Tuple[np.ndarray, np.ndarray]:
        """
        Thins the step function to at most `max_points` (value, probability) points lying on it.
        """
        n = self.values.size
        if n <= max_points:
            index = np.arange(n)
        else:
            index = np.unique(np.round(np.linspace(0, n - 1, max_points)).astype(np.int64))

        return self.values[index], (index + 1) / n


def empirical_cdf(
        samples
) -> EmpiricalCdf:
    return EmpiricalCdf(samples)


# === Samplers ===
def sample_normal(
        fit: NormalFitDb,
        rng: np.random.Generator,
        size: int | Tuple[int, ...] | None = None
) -> float | np.ndarray:
    return _scalar_or_array(rng.normal(fit.mu_db, fit.sigma_db, size = size))


def sample_gamma(
        fit: GammaFitDb,
        rng: np.random.Generator,
        size: int | Tuple[int, ...] | None = None
) -> float | np.ndarray:
    return _scalar_or_array(rng.gamma(fit.shape, fit.scale_db, size = size))


def make_rng(
        seed: int | None
) -> np.random.Generator:
    return np.random.default_rng(seed)
