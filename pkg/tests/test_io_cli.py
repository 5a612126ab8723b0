import copy
import csv

import numpy as np
import pytest
import yaml

from hydrocascade.cli import TIME_LIMIT_ENV, run_cli
from hydrocascade.domain import validate_topology
from hydrocascade.errors import InputError
from hydrocascade.io import (
    case_from_dict,
    case_to_dict,
    load_document,
    parse_cascade_file,
    read_timeseries_csv,
    write_case_file,
    write_timeseries_csv,
)
from hydrocascade.synthetic import generate_synthetic_cascade


@pytest.fixture
def minimal_doc(data_dir):
    return load_document(data_dir / "minimal.yaml")


def write_yaml(path, doc):
    path.write_text(yaml.safe_dump(doc), encoding="utf-8")
    return path


def read_summary(path):
    return dict(line.split(": ", 1) for line in path.read_text().splitlines() if ": " in line)


class TestParsing:
    def test_minimal_case(self, data_dir):
        case = parse_cascade_file(data_dir / "minimal.yaml")
        s = case.system
        assert [r.id for r in s.reservoirs] == ["R1"] and [u.id for u in s.units] == ["U1"]
        assert s.T == 2 and s.dt == 3600.0
        assert case.inflows == {"R1": (0.0, 0.0)}
        assert s.reservoir("R1").elevation(123.0) == 50.0

    def test_decreasing_storage_table_is_rejected(self, minimal_doc):
        doc = copy.deepcopy(minimal_doc)
        doc["reservoirs"][0]["storage_elevation"] = {"kind": "table", "x": [0, 1e6], "y": [60, 40]}
        with pytest.raises(ValueError, match="nondecreasing"):
            case_from_dict(doc)

    def test_missing_curve_csv_names_the_file(self, minimal_doc, tmp_path):
        doc = copy.deepcopy(minimal_doc)
        doc["reservoirs"][0]["storage_elevation"] = {"kind": "table", "csv": "nowhere.csv"}
        with pytest.raises(FileNotFoundError, match="nowhere.csv"):
            case_from_dict(doc, tmp_path)

    def test_unknown_key_reports_its_path(self, minimal_doc):
        doc = copy.deepcopy(minimal_doc)
        doc["units"][0]["colour"] = "blue"
        with pytest.raises(InputError, match="units/0"):
            case_from_dict(doc)

    def test_curve_from_csv(self, minimal_doc, tmp_path):
        (tmp_path / "elev.csv").write_text("x,y\n0,40\n1000000,60\n", encoding="utf-8")
        doc = copy.deepcopy(minimal_doc)
        doc["reservoirs"][0]["storage_elevation"] = {"kind": "table", "csv": "elev.csv"}
        case = case_from_dict(doc, tmp_path)
        assert case.system.reservoir("R1").elevation(5e5) == pytest.approx(50.0)

    def test_round_trip(self, data_dir, tmp_path):
        for name in ("minimal.yaml", "ac1.yaml", "ac6.yaml"):
            case = parse_cascade_file(data_dir / name)
            write_case_file(case, tmp_path / name)
            again = parse_cascade_file(tmp_path / name)
            assert case_to_dict(again) == case_to_dict(case)
            assert again.system == case.system


class TestTimeseriesCsv:
    def test_round_trip(self, tmp_path):
        series = {"A": (1.5, 2.0, 0.1), "B": (0.0, 1e-3, 7.0)}
        write_timeseries_csv(tmp_path / "w.csv", series)
        assert read_timeseries_csv(tmp_path / "w.csv") == series

    def test_missing_period(self, tmp_path):
        p = tmp_path / "w.csv"
        p.write_text("entity_id,period,value\nA,1,1\nA,2,1\nB,1,3\n", encoding="utf-8")
        with pytest.raises(InputError, match="missing periods \\[2\\]"):
            read_timeseries_csv(p)

    def test_duplicate_row(self, tmp_path):
        p = tmp_path / "w.csv"
        p.write_text("entity_id,period,value\nA,1,1\nA,1,2\n", encoding="utf-8")
        with pytest.raises(InputError, match="duplicate"):
            read_timeseries_csv(p)

    def test_bad_header(self, tmp_path):
        p = tmp_path / "w.csv"
        p.write_text("id,t,v\nA,1,1\n", encoding="utf-8")
        with pytest.raises(InputError, match="header"):
            read_timeseries_csv(p)


class TestSynthetic:
    def test_same_seed_same_system(self):
        assert generate_synthetic_cascade(3, 2, 7) == generate_synthetic_cascade(3, 2, 7)

    def test_different_seed_differs(self):
        assert generate_synthetic_cascade(3, 2, 7)[1] != generate_synthetic_cascade(3, 2, 8)[1]

    def test_single_reservoir_has_no_arcs(self):
        s, w = generate_synthetic_cascade(1, 1, 0)
        assert s.arcs == () and set(w) == {"R1"}

    @pytest.mark.parametrize("size", [1, 2, 5])
    def test_generated_systems_validate(self, size):
        s, _ = generate_synthetic_cascade(size, 2, size)
        assert validate_topology(s).ok


class TestCli:
    def test_validate(self, data_dir, capsys):
        assert run_cli(["validate", str(data_dir / "minimal.yaml")]) == 0
        assert "1 reservoirs" in capsys.readouterr().out

    def test_solve_writes_schedule_and_summary(self, data_dir, tmp_path):
        out = tmp_path / "run"
        assert run_cli(["solve", str(data_dir / "ac1.yaml"), "--out", str(out), "--write-lp"]) == 0
        summary = read_summary(out / "summary.txt")
        assert summary["status"] == "optimal"
        assert float(summary["objective"]) == pytest.approx(8.829, rel=1e-9)
        assert (out / "schedule.csv").is_file() and (out / "model.lp").is_file()

    def test_simulate_consumes_solve_output(self, data_dir, tmp_path):
        case = str(data_dir / "ac1.yaml")
        assert run_cli(["solve", case, "--out", str(tmp_path / "s")]) == 0
        sched = str(tmp_path / "s" / "schedule.csv")
        assert run_cli(["simulate", case, "--schedule", sched, "--out", str(tmp_path / "m")]) == 0
        summary = read_summary(tmp_path / "m" / "summary.txt")
        assert float(summary["energy_realized_mwh"]) == pytest.approx(8.829, rel=1e-9)
        assert float(summary["energy_gap_percent"]) == pytest.approx(0.0, abs=1e-9)
        with open(tmp_path / "m" / "violations.csv", newline="") as fh:
            assert list(csv.reader(fh)) == [["kind", "entity_id", "period", "magnitude"]]

    def test_unknown_subcommand_exits_two(self, capsys):
        assert run_cli(["frobnicate"]) == 2
        captured = capsys.readouterr()
        assert captured.out == "" and captured.err

    def test_missing_file_exits_two(self, tmp_path, capsys):
        assert run_cli(["validate", str(tmp_path / "absent.yaml")]) == 2
        assert "absent.yaml" in capsys.readouterr().err

    def test_infeasible_exits_one_with_diagnosis(self, minimal_doc, tmp_path, capsys):
        doc = copy.deepcopy(minimal_doc)
        r = doc["reservoirs"][0]
        r.update(v_initial=100000, e_min=55)
        r["storage_elevation"] = {"kind": "table", "x": [0, 1000000], "y": [40, 60]}
        path = write_yaml(tmp_path / "bad.yaml", doc)
        out = tmp_path / "run"
        assert run_cli(["solve", str(path), "--out", str(out), "--tier", "milp_pwl1d"]) == 1
        assert "infeasible" in capsys.readouterr().err
        summary = (out / "summary.txt").read_text()
        assert "status: infeasible" in summary and "binding: E_R1" in summary

    def test_time_limit_from_environment(self, data_dir, tmp_path, monkeypatch):
        monkeypatch.setenv(TIME_LIMIT_ENV, "not-a-number")
        assert run_cli(["solve", str(data_dir / "minimal.yaml"), "--out", str(tmp_path)]) == 2
        monkeypatch.setenv(TIME_LIMIT_ENV, "5")
        assert run_cli(["solve", str(data_dir / "minimal.yaml"), "--out", str(tmp_path)]) == 0

    def test_compare_writes_gap_table(self, data_dir, tmp_path):
        out = tmp_path / "cmp"
        assert run_cli(["compare", str(data_dir / "minimal.yaml"), "--tiers", "lp_fixed,lp_mccormick", "--out", str(out)]) == 0
        with open(out / "gaps.csv", newline="") as fh:
            rows = list(csv.DictReader(fh))
        assert [r["tier"] for r in rows] == ["lp_fixed", "lp_mccormick"]
        assert all(r["status"] == "optimal" for r in rows)

    def test_fitpwl(self, tmp_path, capsys):
        x = np.linspace(0.0, 1.0, 21)
        samples = tmp_path / "s.csv"
        samples.write_text("x,y\n" + "".join(f"{a},{abs(a - 0.5)}\n" for a in x), encoding="utf-8")
        out = tmp_path / "fit.csv"
        assert run_cli(["fitpwl", "--samples", str(samples), "--epsilon", "0", "--out", str(out)]) == 0
        assert "2 pieces" in capsys.readouterr().out
        with open(out, newline="") as fh:
            assert len(list(csv.reader(fh))) == 4

    def test_fitpwl_piece_cap_exits_two(self, tmp_path):
        samples = tmp_path / "s.csv"
        samples.write_text("x,y\n0,0\n1,1\n2,0\n3,1\n", encoding="utf-8")
        args = ["fitpwl", "--samples", str(samples), "--epsilon", "0", "--max-pieces", "1", "--out", str(tmp_path / "f.csv")]
        assert run_cli(args) == 2

    def test_bench(self, tmp_path):
        out = tmp_path / "b"
        assert run_cli(["bench", "--sizes", "1,2", "--periods", "2", "--tiers", "lp_fixed,milp_poz", "--out", str(out)]) == 0
        with open(out / "bench.csv", newline="") as fh:
            rows = list(csv.DictReader(fh))
        assert len(rows) == 4 and all(r["status"] == "optimal" for r in rows)
