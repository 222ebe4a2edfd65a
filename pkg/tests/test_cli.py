import json

import numpy as np
import pytest

from mmwave_si.components.grid import load_grid, read_metadata, save_grid
from mmwave_si.main import main
from mmwave_si.pipelines.fit_pipeline import FitPipeline
from mmwave_si.utils.exceptions import ConvergenceError

from conftest import make_grid


@pytest.fixture
def grid_csv(tmp_path, random_grid):
    return save_grid(random_grid, tmp_path / "grid.csv")


def test_help_exits_cleanly(capsys):
    assert main(["--help"]) == 0
    assert "mmwave-si" in capsys.readouterr().out


def test_missing_subcommand_is_a_usage_error():
    assert main([]) == 2


def test_simulate_command(tmp_path, tiny_config):
    out = tmp_path / "grid.csv"
    code = main(["--threads", "1", "simulate", "--config", str(tiny_config), "--out", str(out)])

    assert code == 0
    grid = load_grid(out)
    assert grid.shape == (3, 1, 3, 1)
    assert grid.values_db[1, 0, 1, 0] == pytest.approx(40.0)
    assert read_metadata(out)["command"].startswith("mmwave-si --threads 1 simulate")
    assert (tmp_path / "grid.json").is_file()


def test_simulate_with_missing_config(tmp_path):
    assert main(["simulate", "--config", str(tmp_path / "nope.json"), "--out", str(tmp_path / "g.csv")]) == 2


def test_analyze_command(tmp_path, grid_csv):
    out_dir = tmp_path / "analysis"
    code = main([
        "analyze",
        "--grid", str(grid_csv),
        "--out-dir", str(out_dir),
        "--neighborhood", "1,1",
        "--thresholds", "[10,20]",
        "--slice-tx", "0,0"
    ])

    assert code == 0
    for name in ("pair_stats.csv", "beam_summary.csv", "threshold_fractions.csv", "cdf.csv"):
        assert (out_dir / name).is_file()


@pytest.mark.parametrize("neighborhood", ["1", "a,b", "-1,2"])
def test_analyze_rejects_bad_neighborhood(grid_csv, tmp_path, neighborhood):
    assert main(["analyze", "--grid", str(grid_csv), "--out-dir", str(tmp_path), f"--neighborhood={neighborhood}"]) == 2


def test_analyze_missing_grid(tmp_path):
    assert main(["analyze", "--grid", str(tmp_path / "absent.csv"), "--out-dir", str(tmp_path)]) == 2


def test_analyze_malformed_grid_is_a_data_error(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("tx_az_deg,tx_el_deg,rx_az_deg,rx_el_deg,inr_db\n0,0,0,0,1\n0,0,1,0\n", encoding = "utf-8")
    assert main(["analyze", "--grid", str(path), "--out-dir", str(tmp_path / "a")]) == 3


def test_analyze_off_lattice_slice_is_a_data_error(tmp_path, grid_csv):
    assert main(["analyze", "--grid", str(grid_csv), "--out-dir", str(tmp_path / "a"), "--slice-tx", "0.5,0"]) == 3


def test_fit_command(tmp_path, grid_csv):
    out = tmp_path / "fits.json"
    code = main([
        "fit",
        "--grid", str(grid_csv),
        "--out", str(out),
        "--max-neighborhood", "1",
        "--bin-width", "10",
        "--min-bin-samples", "10"
    ])

    assert code == 0
    saved = json.loads(out.read_text())
    assert set(saved["min"]) == {"0,0", "0,1", "1,0", "1,1"}


def test_fit_rejects_tiny_bins(tmp_path, grid_csv):
    assert main(["fit", "--grid", str(grid_csv), "--min-bin-samples", "3"]) == 2


def test_sample_to_stdout(capsys):
    code = main(["sample", "--quantity", "inr-max-cond", "--neighborhood", "1,1", "--inr-db=-10", "--n", "5", "--seed", "3"])

    assert code == 0
    lines = capsys.readouterr().out.splitlines()
    assert "# seed: 3" in lines
    values = np.array([float(line) for line in lines if not line.startswith("#")])
    assert values.shape == (5,)
    assert np.all(values > -10.0)


def test_sample_to_file_is_reproducible(tmp_path):
    paths = [tmp_path / "a.csv", tmp_path / "b.csv"]
    for path in paths:
        assert main(["sample", "--quantity", "range", "--n", "20", "--seed", "5", "--format", "csv", "--out", str(path)]) == 0
    assert paths[0].read_text() == paths[1].read_text()


@pytest.mark.parametrize(
    "args",
    [
        ["sample", "--quantity", "median"],
        ["sample", "--n", "0"],
        ["sample", "--quantity", "inr-min-cond"],
        ["sample", "--format", "parquet"]
    ]
)
def test_sample_usage_errors(args):
    assert main(args) == 2


def test_sample_outside_the_tables_is_a_data_error():
    assert main(["sample", "--quantity", "inr-min", "--neighborhood", "7,7"]) == 3


def test_report_command(tmp_path, capsys):
    grid_path = save_grid(make_grid(np.array([-5.0, 2.0, 10.0, 30.0]).reshape(2, 1, 2, 1)), tmp_path / "g.csv")

    assert main(["report", "--grid", str(grid_path)]) == 0
    assert "fraction_above_0db: 0.75" in capsys.readouterr().out

    out = tmp_path / "report.json"
    assert main(["report", "--grid", str(grid_path), "--format", "json", "--out", str(out)]) == 0
    assert json.loads(out.read_text())["n_pairs"] == 4


def test_pattern_command(tmp_path):
    out = tmp_path / "pattern.csv"
    assert main(["pattern", "--out", str(out), "--span", "5", "--resolution", "1", "--steer", "10,0"]) == 0
    assert read_metadata(out)["steering"] == "10,0"


def test_pattern_bad_direction():
    assert main(["pattern", "--steer", "north"]) == 2


def test_convergence_errors_map_to_their_own_code():
    assert ConvergenceError("did not converge").exit_code == 4


def test_report_on_undecodable_grid_is_a_data_error(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_bytes(b"tx_az_deg,tx_el_deg,rx_az_deg,rx_el_deg,inr_db\n0,0,0,0,1.5\n0,0,1,0,\xff\n")
    assert main(["report", "--grid", str(path)]) == 3


@pytest.mark.parametrize(
    "args",
    [
        ["pattern", "--axis", "diagonal"],
        ["sample", "--quantity", "inr-median"],
        ["sample", "--format", "json"]
    ]
)
def test_choice_options_reject_unknown_values(args):
    assert main(args) == 2


def test_report_rejects_unknown_format(grid_csv):
    assert main(["report", "--grid", str(grid_csv), "--format", "xml"]) == 2


def test_sample_help_lists_quantities(capsys):
    assert main(["sample", "--help"]) == 0
    out = capsys.readouterr().out
    assert "inr-min-composed" in out
    assert "inr-max-cond" in out


def test_fit_convergence_failure_exits_with_four(monkeypatch, grid_csv, tmp_path):
    def fail(self):
        raise ConvergenceError("Gamma fit did not converge")

    monkeypatch.setattr(FitPipeline, "fit", fail)
    assert main(["fit", "--grid", str(grid_csv), "--out", str(tmp_path / "fits.json")]) == 4
