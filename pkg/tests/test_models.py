import json
import math
import warnings

import numpy as np
import pytest
from scipy import stats as sps

from mmwave_si.components import models
from mmwave_si.components.stats import make_rng
from mmwave_si.schema.schema import GammaParametrization, NeighborhoodSpec
from mmwave_si.utils.exceptions import InrClampWarning, TableDomainError


def spec(dtheta, dphi) -> NeighborhoodSpec:
    return NeighborhoodSpec(dtheta_deg = dtheta, dphi_deg = dphi)


# === Embedded tables ===
def test_embedded_tables_are_complete():
    tables = models.load_fit_tables()

    assert tables.parametrization is GammaParametrization.SCALE
    assert len(tables.rng_table) == 35
    assert len(tables.min_table) == 36
    assert len(tables.max_table) == 36
    assert len(tables.delta_min_table) == 35
    assert len(tables.delta_max_table) == 35
    assert (0, 0) not in tables.rng_table


def test_embedded_table_checksums():
    tables = models.load_fit_tables()

    rng_sum = sum(f.shape + f.scale_db for f in tables.rng_table.values())
    min_sum = sum(f.mu_db + f.sigma2_db for f in tables.min_table.values())
    max_sum = sum(f.mu_db + f.sigma2_db for f in tables.max_table.values())
    dmin_sum = sum(f.shape + f.scale_db for f in tables.delta_min_table.values())
    dmax_sum = sum(f.shape + f.scale_db for f in tables.delta_max_table.values())

    assert rng_sum == pytest.approx(860.44, abs = 1e-6)
    assert min_sum == pytest.approx(3594.33, abs = 1e-6)
    assert max_sum == pytest.approx(2344.60, abs = 1e-6)
    assert dmin_sum == pytest.approx(536.13, abs = 1e-6)
    assert dmax_sum == pytest.approx(1493.13, abs = 1e-6)


def test_zero_neighborhood_min_and_max_are_the_global_fit():
    assert models.min_fit(spec(0, 0)) == models.GLOBAL_FIT.normal
    assert models.max_fit(spec(0, 0)) == models.GLOBAL_FIT.normal
    assert models.load_global_fit() == models.GLOBAL_FIT


def test_table_axes_are_dtheta_then_dphi():
    assert models.min_fit(spec(5, 0)).mu_db == 1.31
    assert models.min_fit(spec(0, 5)).mu_db == 3.39
    assert models.range_fit(spec(0, 1)).shape == 2.59


def test_expected_range():
    assert models.expected_range_db(spec(1, 1)) == pytest.approx(18.532)
    assert models.expected_range_db(spec(0, 1)) == pytest.approx(8.2621)
    with pytest.raises(TableDomainError):
        models.expected_range_db(spec(0, 0))


def test_range_means_agree_with_min_and_max_means():
    tables = models.load_fit_tables()
    for key, fit in tables.rng_table.items():
        gap = tables.max_table[key].mu_db - tables.min_table[key].mu_db
        assert fit.mean_db == pytest.approx(gap, abs = 0.5), key


def test_rate_reading_breaks_the_consistency_checks():
    rate = models.load_fit_tables(parametrization = GammaParametrization.RATE)

    assert models.expected_range_db(spec(1, 1), rate) == pytest.approx(4.52 / 4.10)
    gap = models.max_fit(spec(1, 1)).mu_db - models.min_fit(spec(1, 1)).mu_db
    assert abs(models.expected_range_db(spec(1, 1), rate) - gap) > 10.0

    ## === Mean conditioned minimum at 20 dB nominal should sit near the unconditioned minimum ===
    scale_mean = 20.0 - models.delta_fit_lookup("min", spec(2, 2), 20.0).mean_db
    rate_mean = 20.0 - models.delta_fit_lookup("min", spec(2, 2), 20.0, rate).mean_db
    target = models.min_fit(spec(2, 2)).mu_db
    assert scale_mean == pytest.approx(-5.40, abs = 0.01)
    assert abs(scale_mean - target) < abs(rate_mean - target)


@pytest.mark.parametrize("bad", [spec(6, 0), spec(0, 6), spec(1.5, 1)])
def test_lookups_outside_tables(bad):
    with pytest.raises(TableDomainError):
        models.min_fit(bad)


# === Global model ===
def test_global_probabilities():
    assert models.global_prob_below(0.0) == pytest.approx(0.0078, abs = 5e-4)
    assert 1.0 - models.global_prob_below(10.0) == pytest.approx(0.890, abs = 1e-3)
    assert models.global_prob_below(3.0) == pytest.approx(0.0197, abs = 5e-4)


def test_global_sampler(rng):
    draws = models.sample_global_inr(rng, 20_000)
    assert np.mean(draws) == pytest.approx(20.32, abs = 0.2)
    assert np.var(draws) == pytest.approx(70.69, rel = 0.05)


# === Conditioned lookups ===
def test_delta_lookup_hits_table_columns():
    fit = models.delta_fit_lookup("min", spec(2, 2), 20.0)
    assert (fit.shape, fit.scale_db) == pytest.approx((8.67, 2.93))

    fit = models.delta_fit_lookup("max", spec(1, 1), 0.0)
    assert (fit.shape, fit.scale_db) == pytest.approx((22.22, 0.83))


def test_delta_lookup_interpolates_between_columns():
    fit = models.delta_fit_lookup("min", spec(2, 2), 15.0)
    assert fit.shape == pytest.approx((10.28 + 8.67) / 2)
    assert fit.scale_db == pytest.approx((2.21 + 2.93) / 2)


def test_delta_lookup_clamps_with_warning():
    with pytest.warns(InrClampWarning):
        high = models.delta_fit_lookup("max", spec(3, 3), 55.0)
    assert (high.shape, high.scale_db) == pytest.approx((5.37, 0.88))

    with pytest.warns(InrClampWarning):
        low = models.delta_fit_lookup("max", spec(3, 3), -35.0)
    assert (low.shape, low.scale_db) == pytest.approx((132.69, 0.36))


def test_in_range_lookup_does_not_warn():
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        models.delta_fit_lookup("min", spec(1, 1), -20.0)
        models.delta_fit_lookup("min", spec(1, 1), 40.0)


@pytest.mark.parametrize("bad", [spec(1, 2), spec(0, 0), spec(6, 6)])
def test_delta_lookup_domain(bad):
    with pytest.raises(TableDomainError):
        models.delta_fit_lookup("min", bad, 10.0)


def test_delta_lookup_rejects_unknown_table():
    with pytest.raises(ValueError):
        models.delta_fit_lookup("range", spec(1, 1), 10.0)


# === Conditioned samplers ===
def test_conditioned_min_distribution():
    draws = models.sample_inr_min_conditioned(spec(2, 2), 20.0, make_rng(3), 4000)

    assert draws.shape == (4000,)
    assert np.all(draws < 20.0)
    reduction = 20.0 - draws
    assert sps.kstest(reduction, "gamma", args = (8.67, 0.0, 2.93)).pvalue > 1e-3


def test_conditioned_max_is_above_nominal():
    draws = models.sample_inr_max_conditioned(spec(1, 1), 0.0, make_rng(4), 4000)
    assert np.all(draws > 0.0)
    assert np.mean(draws) == pytest.approx(22.22 * 0.83, rel = 0.03)


def test_conditioned_sampler_accepts_nominal_vector(rng):
    nominal = np.array([-20.0, 0.0, 40.0])
    draws = models.sample_inr_max_conditioned(spec(1, 1), nominal, rng)
    assert draws.shape == (3,)
    assert np.all(draws > nominal)


def test_composed_samplers(rng):
    ## === Some global draws fall outside the tabulated span and are clamped ===
    with pytest.warns(InrClampWarning):
        low = models.sample_inr_min_composed(spec(2, 2), rng, 5000)
    with pytest.warns(InrClampWarning):
        high = models.sample_inr_max_composed(spec(2, 2), rng, 5000)

    assert low.shape == high.shape == (5000,)
    assert np.mean(low) < models.GLOBAL_FIT.normal.mu_db < np.mean(high)


def test_unconditioned_samplers(rng):
    assert np.mean(models.sample_inr_min(spec(1, 1), rng, 20_000)) == pytest.approx(8.32, abs = 0.3)
    assert np.mean(models.sample_inr_max(spec(1, 1), rng, 20_000)) == pytest.approx(26.85, abs = 0.3)
    ranges = models.sample_inr_range(spec(1, 1), rng, 20_000)
    assert np.all(ranges > 0)
    assert np.mean(ranges) == pytest.approx(18.532, rel = 0.03)


# === CDF evaluators ===
def test_prob_min_below():
    assert models.prob_min_below(spec(1, 1), 0.0) == pytest.approx(sps.norm.cdf(0.0, 8.32, np.sqrt(148.79)))
    assert models.prob_min_below(spec(2, 2), 0.0, inr_db = 20.0) == pytest.approx(
        sps.gamma.sf(20.0, 8.67, scale = 2.93)
    )


def test_prob_max_above():
    assert models.prob_max_above(spec(1, 1), 30.0) == pytest.approx(sps.norm.sf(30.0, 26.85, np.sqrt(39.31)))
    assert models.prob_max_above(spec(1, 1), 10.0, inr_db = 0.0) == pytest.approx(
        sps.gamma.sf(10.0, 22.22, scale = 0.83)
    )
    ## === Threshold below the nominal INR: the maximum is always above it ===
    assert models.prob_max_above(spec(1, 1), -5.0, inr_db = 0.0) == 1.0


def test_prob_range_above():
    assert models.prob_range_above(spec(1, 1), 18.0) == pytest.approx(sps.gamma.sf(18.0, 4.52, scale = 4.10))
    assert models.prob_range_above(spec(1, 1), 0.0) == 1.0


# === Custom table files ===
def test_load_tables_from_file(tmp_path):
    path = tmp_path / "tables.json"
    path.write_text(json.dumps({
        "parametrization": "rate",
        "rng_table": [[None, [2.0, 4.0]]],
        "min_table": [[[0.0, 1.0]]],
        "inr_db": [0, 10],
        "delta_min_table": {"1": [[1.0, 2.0], [3.0, 4.0]]}
    }))

    tables = models.load_fit_tables(path)

    assert models.range_fit(spec(1, 0), tables).scale_db == pytest.approx(0.25)
    assert models.delta_fit_lookup("min", spec(1, 1), 5.0, tables).shape == pytest.approx(2.0)


def test_conditioned_row_length_is_checked(tmp_path):
    path = tmp_path / "tables.json"
    path.write_text(json.dumps({
        "inr_db": [0, 10],
        "delta_max_table": {"1": [[1.0, 2.0]]}
    }))
    with pytest.raises(TableDomainError):
        models.load_fit_tables(path)


def test_prob_min_below_at_two_degrees():
    assert models.prob_min_below(spec(2, 2), 0.0) == pytest.approx(0.60, abs = 0.01)


# === Sampler accuracy at scale ===
N_DRAWS = 1_000_000


def embedded_cells(kind: str):
    tables = models.load_fit_tables()
    if kind == "global":
        return [(None, models.GLOBAL_FIT.normal)]
    table = {"min": tables.min_table, "max": tables.max_table, "range": tables.rng_table}[kind]
    return sorted(table.items())


def draw(kind: str, key, rng):
    if kind == "global":
        return models.sample_global_inr(rng, N_DRAWS)
    sampler = {"min": models.sample_inr_min, "max": models.sample_inr_max, "range": models.sample_inr_range}[kind]
    return sampler(spec(*key), rng, N_DRAWS)


@pytest.mark.parametrize("kind", ["global", "min", "max", "range"])
def test_samplers_reproduce_embedded_fits(kind):
    for key, fit in embedded_cells(kind):
        x = draw(kind, key, make_rng(2024))

        if kind == "range":
            mean, var = fit.shape * fit.scale_db, fit.shape * fit.scale_db ** 2
            ks = sps.kstest(x, sps.gamma(fit.shape, scale = fit.scale_db).cdf).statistic
        else:
            mean, var = fit.mu_db, fit.sigma2_db
            ks = sps.kstest(x, sps.norm(fit.mu_db, fit.sigma_db).cdf).statistic

        # Tolerance on the mean scales with max(|mean|, sigma); normal means sit near 0 dB.
        assert abs(x.mean() - mean) <= 0.01 * max(abs(mean), math.sqrt(var)), key
        assert x.var() == pytest.approx(var, rel = 0.01), key
        assert ks < 0.002, key
