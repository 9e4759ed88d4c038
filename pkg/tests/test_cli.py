"""CLI contract: deterministic machine-readable output and error paths."""
import json
from pathlib import Path

import pytest

from affine_cf.cli import main

MODELS = Path(__file__).resolve().parent.parent / "models"


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


class TestEval:
    def test_single_row_matches_levy(self, capsys):
        code, out, _ = run(capsys, "eval", "--model", f"{MODELS}/bm.json",
                           "--k", "20", "--t", "0.5", "--u", "1.0",
                           "--x", "0.0")
        assert code == 0
        lines = out.strip().splitlines()
        assert lines[0] == "# affine-cf v1"
        header = lines[1].split(",")
        row = dict(zip(header, lines[2].split(",")))
        # BM with a0 = 1: exp(-u^2 t / 2) = exp(-0.25)
        assert abs(float(row["re"]) - 0.7788007830714049) <= 1e-12
        assert abs(float(row["im"])) <= 1e-12

    def test_u0_row_normalized(self, capsys):
        _, out, _ = run(capsys, "eval", "--model", f"{MODELS}/vasicek.json",
                        "--t", "0.5", "--u=-1:1:3", "--x", "0.1")
        rows = out.strip().splitlines()[2:]
        middle = rows[1].split(",")
        assert float(middle[3]) == 1.0  # re at u = 0
        assert float(middle[4]) == 0.0  # im at u = 0

    def test_grid_row_count_and_order(self, capsys):
        _, out, _ = run(capsys, "eval", "--model", f"{MODELS}/vasicek.json",
                        "--t", "0.1:1:5", "--u=-2:2:4", "--x", "0:0.2:3")
        rows = out.strip().splitlines()[2:]
        assert len(rows) == 5 * 4 * 3
        # t-major ordering: first 12 rows share the first t value
        first_t = rows[0].split(",")[0]
        assert all(r.split(",")[0] == first_t for r in rows[:12])

    def test_deterministic_output(self, capsys):
        args = ("eval", "--model", f"{MODELS}/heston.json", "--t", "0.2:1:3",
                "--u", "0.5:2:3;0", "--x", "0;0.04", "--jobs", "4")
        _, first, _ = run(capsys, *args)
        _, second, _ = run(capsys, *args)
        assert first == second

    def test_json_format(self, capsys):
        _, out, _ = run(capsys, "eval", "--model", f"{MODELS}/bm.json",
                        "--format", "json")
        payload = json.loads(out)
        assert payload["version"] == "affine-cf v1"
        assert payload["rows"]

    def test_out_file(self, capsys, tmp_path):
        path = tmp_path / "rows.csv"
        code, out, _ = run(capsys, "eval", "--model", f"{MODELS}/bm.json",
                           "--out", str(path))
        assert code == 0 and out == ""
        assert path.read_text().startswith("# affine-cf v1")


class TestCompare:
    def test_levy_model_uses_levy_oracle(self, capsys):
        _, out, _ = run(capsys, "compare", "--model",
                        f"{MODELS}/bm_jumps.json", "--k", "20",
                        "--u=-3:3:7", "--t", "0.5", "--format", "json")
        payload = json.loads(out)
        assert payload["oracle"] == "levy-khintchine"
        assert payload["summary"]["max_rel_err"] <= 1e-10

    def test_vasicek_against_riccati(self, capsys):
        _, out, _ = run(capsys, "compare", "--model",
                        f"{MODELS}/vasicek.json", "--k", "14",
                        "--t", "0.1:0.5:3", "--u", "1.0", "--x", "0.05",
                        "--format", "json")
        payload = json.loads(out)
        assert payload["oracle"] == "riccati-rk4"
        assert payload["summary"]["max_rel_err"] <= 1e-6
        assert payload["summary"]["series_seconds"] >= 0.0

    def test_generalized_heston_baseline(self, capsys):
        _, out, _ = run(capsys, "compare", "--model", f"{MODELS}/heston.json",
                        "--mode", "generalized", "--baseline", "heston",
                        "--t", "1.0", "--u", "1.0;0.0", "--x", "0.0;0.04",
                        "--format", "json")
        payload = json.loads(out)
        assert payload["summary"]["max_rel_err"] <= 1e-7


class TestTables:
    def test_rows_1_to_3(self, capsys):
        _, out, _ = run(capsys, "tables", "--k", "3", "--format", "json")
        payload = json.loads(out)
        coeffs = payload["coefficients"]
        assert len(coeffs["1"]) == 1
        assert len(coeffs["2"]) == 2
        assert len(coeffs["3"]) == 4
        values2 = sorted((e["num"], e["den"]) for e in coeffs["2"])
        assert values2 == [(1, 2), (1, 2)]

    def test_cap_enforced(self, capsys):
        code, _, err = run(capsys, "tables", "--k", "25")
        assert code != 0
        assert json.loads(err)["error"]


class TestTriangle:
    def test_rows_and_flags(self, capsys):
        _, out, _ = run(capsys, "triangle", "--k", "5", "--format", "json")
        payload = json.loads(out)
        assert [r["counts"] for r in payload["rows"][:3]] == [
            [1], [1, 1], [1, 3, 2]]
        assert all(r["within_bound"] for r in payload["rows"])
        assert all(r["R_over_factorial"] <= 1.0 + 1e-15
                   for r in payload["rows"])


class TestErrors:
    def test_missing_model(self, capsys):
        code, out, err = run(capsys, "eval", "--model", "no-such.json")
        assert code == 2 and out == ""
        payload = json.loads(err)
        assert payload["error"] and payload["message"]

    def test_bad_axis_spec(self, capsys):
        code, _, err = run(capsys, "eval", "--model", f"{MODELS}/bm.json",
                           "--t", "1:2:3:4")
        assert code == 2
        assert "axis" in json.loads(err)["message"]

    def test_unknown_baseline(self, capsys):
        code, _, err = run(capsys, "eval", "--model", f"{MODELS}/bm.json",
                           "--mode", "generalized", "--baseline", "nope")
        assert code == 2
        assert "baseline" in json.loads(err)["message"]
