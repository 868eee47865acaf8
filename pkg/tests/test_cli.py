"""Command-line interface: record contents, formats, exit codes, determinism."""

import io
import json
import math

import numpy as np
import pytest

from bernrdp import scalar_rdp
from bernrdp.cli import main

TERN_01_005_025 = 0.238077788518041652


def run_cli(argv, capsys):
    code = main(argv)
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def json_lines(out):
    return [json.loads(line) for line in out.strip().splitlines()]


class TestEval:
    def test_equal_pair_record(self, capsys):
        code, out, _ = run_cli(["eval", "--q", "0.25,0.25", "-D", "0.2", "-P", "0.1"], capsys)
        assert code == 0
        rec = json.loads(out)
        assert rec["region"] == "C"
        assert rec["rate_nats"] == pytest.approx(2 * TERN_01_005_025, rel=1e-9)
        assert rec["rate_bits"] == pytest.approx(rec["rate_nats"] / math.log(2), rel=1e-12)
        assert len(rec["allocation"]) == 2
        assert rec["allocation"][0]["region"] == "U"

    def test_large_distortion_region_b(self, capsys):
        code, out, _ = run_cli(["eval", "--q", "0.3,0.1", "-D", "0.9", "-P", "0.2"], capsys)
        assert code == 0
        rec = json.loads(out)
        assert rec["region"] == "B"
        assert rec["rate_nats"] == 0.0

    def test_malformed_q_exits_2(self, capsys):
        code, out, err = run_cli(["eval", "--q", "1.2,0.3", "-D", "0.1", "-P", "0.1"], capsys)
        assert code == 2
        assert out == ""
        assert json.loads(err)["error"]["exit_code"] == 2

    def test_q_file_input(self, tmp_path, capsys):
        path = tmp_path / "source.json"
        path.write_text(json.dumps({"q": [0.25, 0.25]}))
        code, out, _ = run_cli(["eval", "--q", str(path), "-D", "0.2", "-P", "0.1"], capsys)
        assert code == 0
        assert json.loads(out)["rate_nats"] == pytest.approx(2 * TERN_01_005_025, rel=1e-9)

    def test_csv_format(self, capsys):
        code, out, _ = run_cli(["eval", "--q", "0.3,0.1", "-D", "0.2", "-P", "0.05",
                                "--format", "csv"], capsys)
        assert code == 0
        lines = out.strip().splitlines()
        assert lines[0].startswith("D,P,region,rate_nats")
        assert len(lines) == 3  # header + one row per component

    def test_env_tolerance_override(self, capsys, monkeypatch):
        monkeypatch.setenv("BERNRDP_TOL", "1e-6")
        code, out, _ = run_cli(["eval", "--q", "0.3,0.1", "-D", "0.2", "-P", "0.05"], capsys)
        assert code == 0


class TestCurve:
    def test_d_sweep_endpoints(self, capsys):
        code, out, _ = run_cli(["curve", "--q", "0.3,0.1", "--axis", "D",
                                "--start", "0", "--stop", "1", "--count", "5",
                                "-P", "0", "--self-check"], capsys)
        assert code == 0
        recs = json_lines(out)
        assert len(recs) == 5
        assert recs[0]["rate_nats"] == pytest.approx(0.935947275446341703, rel=1e-9)
        assert recs[-1]["rate_nats"] == 0.0

    def test_p_sweep_constant_in_region_a(self, capsys):
        code, out, _ = run_cli(["curve", "--q", "0.3,0.1", "--axis", "P",
                                "--start", "0.3", "--stop", "0.6", "--count", "4",
                                "-D", "0.1"], capsys)
        assert code == 0
        rates = [r["rate_nats"] for r in json_lines(out)]
        assert all(r == pytest.approx(rates[0], abs=1e-10) for r in rates)

    def test_count_one_matches_eval(self, capsys):
        code, out, _ = run_cli(["curve", "--q", "0.3,0.1", "--axis", "D",
                                "--start", "0.2", "--stop", "0.2", "--count", "1",
                                "-P", "0.05"], capsys)
        sweep_rec = json_lines(out)[0]
        code2, out2, _ = run_cli(["eval", "--q", "0.3,0.1", "-D", "0.2", "-P", "0.05"], capsys)
        assert sweep_rec == json.loads(out2)

    def test_byte_identical_runs(self, capsys):
        argv = ["curve", "--q", "0.3,0.1", "--axis", "D",
                "--start", "0", "--stop", "0.6", "--count", "25", "-P", "0.05"]
        _, out1, _ = run_cli(argv, capsys)
        _, out2, _ = run_cli(argv, capsys)
        assert out1 == out2


class TestRegion:
    def test_map_and_boundaries(self, capsys):
        code, out, _ = run_cli(["region", "--q", "0.3,0.1", "--d-max", "0.7",
                                "--d-count", "8", "--p-max", "0.5", "--p-count", "6",
                                "--self-check"], capsys)
        assert code == 0
        recs = json_lines(out)
        cells = [r for r in recs if r["kind"] == "cell"]
        bounds = [r for r in recs if r["kind"] == "boundary"]
        assert len(cells) == 48 and len(bounds) == 8
        assert {c["region"] for c in cells} == {"A", "B", "C"}
        for b in bounds:
            assert (b["T"] is None) != (b["S"] is None)

    def test_all_b_beyond_caps(self, capsys):
        code, out, _ = run_cli(["region", "--q", "0.3,0.1", "--d-min", "0.61",
                                "--d-max", "0.9", "--d-count", "4",
                                "--p-max", "0.5", "--p-count", "4"], capsys)
        cells = [r for r in json_lines(out) if r["kind"] == "cell"]
        assert all(c["region"] == "B" for c in cells)


class TestGraphCmd:
    def _write_matrix(self, tmp_path, probs, n):
        path = tmp_path / "matrix.json"
        path.write_text(json.dumps({"n_vertices": n, "probs": probs}))
        return str(path)

    def test_homogeneous_matches_eval(self, tmp_path, capsys):
        probs = [[0.0, 0.25, 0.25], [0.25, 0.0, 0.25], [0.25, 0.25, 0.0]]
        path = self._write_matrix(tmp_path, probs, 3)
        code, out, _ = run_cli(["graph", "--matrix", path, "-D", "0.3", "-P", "0.15"], capsys)
        assert code == 0
        rec = json.loads(out)
        code2, out2, _ = run_cli(["eval", "--q", "0.25,0.25,0.25",
                                  "-D", "0.3", "-P", "0.15"], capsys)
        assert rec["rate_nats"] == json.loads(out2)["rate_nats"]
        assert len(rec["edges"]) == 3

    def test_asymmetric_matrix_exit_2(self, tmp_path, capsys):
        path = self._write_matrix(tmp_path, [[0.0, 0.3], [0.4, 0.0]], 2)
        code, _, err = run_cli(["graph", "--matrix", path, "-D", "0.1", "-P", "0.1"], capsys)
        assert code == 2
        assert "probs" in json.loads(err)["error"]["message"]

    def test_zero_distortion_entropy(self, tmp_path, capsys):
        probs = [[0.0, 0.2, 0.9], [0.2, 0.0, 0.5], [0.9, 0.5, 0.0]]
        path = self._write_matrix(tmp_path, probs, 3)
        code, out, _ = run_cli(["graph", "--matrix", path, "-D", "0", "-P", "0.5"], capsys)
        rec = json.loads(out)
        want = sum(-u * math.log(u) - (1 - u) * math.log(1 - u) for u in (0.2, 0.1, 0.5))
        assert rec["rate_nats"] == pytest.approx(want, rel=1e-9)


class TestBounds:
    def test_region_b_bounds(self, capsys):
        code, out, _ = run_cli(["bounds", "--q", "0.3,0.1", "-D", "0.9", "-P", "0.3"], capsys)
        rec = json.loads(out)
        assert (rec["lower_bits"], rec["upper_bits"]) == (0.0, 5.0)

    def test_bounds_identity(self, capsys):
        code, out, _ = run_cli(["bounds", "--q", "0.3,0.1", "-D", "0.1", "-P", "0.02"], capsys)
        rec = json.loads(out)
        lo, hi = rec["lower_bits"], rec["upper_bits"]
        assert lo <= hi
        assert hi - lo == pytest.approx(math.log2(lo + 1) + 5, rel=1e-9)


class TestVerify:
    def test_scalar_only_pass(self, capsys):
        code, out, _ = run_cli(["verify", "--q", "0.3", "--scalar-only",
                                "--grid-resolution", "200", "--refine-rounds", "2",
                                "--budget-count", "3"], capsys)
        assert code == 0
        rec = json.loads(out)
        assert rec["pass"] is True
        assert rec["stages"]["scalar_channel"]["pass"] is True

    def test_vector_stages(self, capsys):
        code, out, _ = run_cli(["verify", "--q", "0.3,0.1",
                                "--grid-resolution", "120", "--refine-rounds", "2",
                                "--budget-count", "3", "--scalar-tol", "5e-3",
                                "--vector-tol", "5e-3"], capsys)
        assert code == 0
        rec = json.loads(out)
        assert set(rec["stages"]) == {"scalar_channel", "vector_allocation", "s_curve"}
        assert rec["pass"] is True

    def test_n4_vector_exits_5(self, capsys):
        code, _, err = run_cli(["verify", "--q", "0.3,0.2,0.15,0.1",
                                "--budget-count", "2"], capsys)
        assert code == 5
        assert json.loads(err)["error"]["exit_code"] == 5

    def test_n4_scalar_only_allowed(self, capsys):
        code, out, _ = run_cli(["verify", "--q", "0.3,0.2,0.15,0.1", "--scalar-only",
                                "--grid-resolution", "100", "--refine-rounds", "1",
                                "--budget-count", "2", "--scalar-tol", "2e-2"], capsys)
        assert code == 0

    def test_impossible_tolerance_exits_4(self, capsys):
        code, out, err = run_cli(["verify", "--q", "0.3", "--scalar-only",
                                  "--grid-resolution", "50", "--refine-rounds", "0",
                                  "--budget-count", "2", "--scalar-tol", "1e-12"], capsys)
        assert code == 4
        assert json.loads(out)["pass"] is False
