"""End-to-end solver runs and the command-line interface."""

from __future__ import annotations

import json

import numpy as np
import pytest

import sketchmatch as sm
from sketchmatch.cli import main

from conftest import EPS, random_instance, triangle_paper

REPORT_KEYS = {
    "matching",
    "weight",
    "rescaled_weight",
    "ratio_bound",
    "rounds",
    "peak_space",
    "round_cap",
    "space_cap",
    "lambda_start",
    "lambda_final",
    "certified",
    "beta_final",
    "steps",
    "certificates",
    "harvests",
    "lambda_trace",
    "beta_trace",
    "round_spaces",
    "weight_vs_beta",
    "config_echo",
    "n",
    "m",
    "levels",
    "scale",
}


class TestSolve:
    def test_single_edge(self):
        g = sm.load_graph("0 1 5\n")
        rep = sm.solve(g, sm.SolverConfig())
        assert rep.weight == pytest.approx(5.0)
        assert list(map(tuple, rep.matching)) == [(0, 1, 1)]
        assert rep.rounds >= 2
        assert rep.ratio_bound == pytest.approx(1.0 - 14.0 * EPS)

    def test_triangle_picks_a_unit_edge(self):
        g = triangle_paper()
        rep = sm.solve(g, sm.SolverConfig())
        assert rep.weight == pytest.approx(1.0)
        assert len(rep.matching) == 1
        i, j, mult = rep.matching[0]
        assert mult == 1
        assert (i, j) in {(0, 1), (0, 2)}

    def test_random_instance_beats_ratio_floor(self):
        g = random_instance(321)
        rep = sm.solve(g, sm.SolverConfig())
        opt, _ = sm.brute_force_bmatching(g)
        assert rep.weight >= (1.0 - 14.0 * EPS) * opt - 1e-9

    def test_deterministic_reports(self):
        g = random_instance(77)
        cfg = sm.SolverConfig(seed=9)
        a = json.dumps(sm.solve(g, cfg).as_dict(), sort_keys=True)
        b = json.dumps(sm.solve(g, cfg).as_dict(), sort_keys=True)
        assert a == b

    def test_report_schema(self):
        g = sm.load_graph("0 1 5\n")
        d = sm.solve(g, sm.SolverConfig()).as_dict()
        assert set(d) == REPORT_KEYS
        assert d["rounds"] <= d["round_cap"]
        assert d["peak_space"] <= d["space_cap"]
        assert len(d["round_spaces"]) == d["rounds"]
        assert d["config_echo"]["epsilon"] == EPS

    def test_round_cap_respected(self):
        g = random_instance(55)
        rep = sm.solve(g, sm.SolverConfig(max_rounds=12))
        assert rep.rounds <= 12

    def test_assert_mode_matches_plain(self):
        g = random_instance(88)
        plain = sm.solve(g, sm.SolverConfig(seed=2))
        checked = sm.solve(g, sm.SolverConfig(seed=2, assert_mode=True))
        assert checked.weight == pytest.approx(plain.weight)
        assert checked.rounds == plain.rounds

    def test_invalid_epsilon_rejected(self):
        with pytest.raises(ValueError):
            sm.SolverConfig(epsilon=0.2)
        with pytest.raises(ValueError):
            sm.SolverConfig(epsilon=0.0)

    def test_caps_formulas(self):
        assert sm.round_cap_for(2.0, EPS) == 8 * 32
        got = sm.space_cap_for(10, 2.0, 20, 16.0)
        want = 16.0 * 10 ** 1.5 * np.log2(22.0)
        assert got == pytest.approx(want)


class TestCoverageExamples:
    def test_start_coverage_single_edge(self):
        g = sm.load_graph("0 1 7\n")
        lv = sm.discretize(g, EPS)
        index = sm.SystemIndex(lv, EPS, sm.enumerate_small_odd_sets(g, EPS))
        it, _beta0, _lam0 = sm.initial_solution(index, 2.0, 0)
        lam, _row = index.coverage_lambda(index.cover_values(it))
        assert lam == pytest.approx(EPS / 128.0)

    def test_coverage_scales_linearly(self):
        g = sm.load_graph("0 1 7\n")
        lv = sm.discretize(g, EPS)
        index = sm.SystemIndex(lv, EPS, sm.enumerate_small_odd_sets(g, EPS))
        it, _beta0, _lam0 = sm.initial_solution(index, 2.0, 0)
        doubled = it.copy()
        for key in doubled.x_level:
            doubled.x_level[key] *= 2.0
        for key in doubled.x_top:
            doubled.x_top[key] *= 2.0
        lam1, _ = index.coverage_lambda(index.cover_values(it))
        lam2, _ = index.coverage_lambda(index.cover_values(doubled))
        assert lam2 == pytest.approx(2.0 * lam1)

    def test_uncovered_row_gives_zero(self):
        g = sm.load_graph("0 1 7\n0 2 7\n")
        lv = sm.discretize(g, EPS)
        index = sm.SystemIndex(lv, EPS, sm.enumerate_small_odd_sets(g, EPS))
        it = sm.DualIterate.zeros(beta=1.0)
        # price only vertex 1: the (0, 2) row stays uncovered
        (e, i, j, k) = next(iter(lv.retained()))
        it.x_level[(j, k)] = lv.level_weight(k)
        it.x_top[j] = lv.level_weight(k)
        lam, _row = index.coverage_lambda(index.cover_values(it))
        assert lam == 0.0


def _write_graph(tmp_path, name="g.txt", text="0 1 5\n"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


class TestCli:
    def test_solve_json(self, tmp_path, capsys):
        path = _write_graph(tmp_path)
        code = main(["solve", "--input", path, "--json"])
        out = capsys.readouterr().out
        assert code == 0
        payload = json.loads(out)
        assert payload["weight"] == pytest.approx(5.0)

    def test_solve_human_lines(self, tmp_path, capsys):
        path = _write_graph(tmp_path)
        code = main(["solve", "--input", path])
        out = capsys.readouterr().out
        assert code == 0
        assert "weight" in out

    def test_solve_out_file(self, tmp_path):
        path = _write_graph(tmp_path)
        out_path = tmp_path / "report.json"
        code = main(["solve", "--input", path, "--out", str(out_path)])
        assert code == 0
        payload = json.loads(out_path.read_text())
        assert payload["weight"] == pytest.approx(5.0)

    def test_missing_input_exits_2(self, tmp_path, capsys):
        code = main(["solve", "--input", str(tmp_path / "absent.txt")])
        assert code == 2

    def test_usage_error_exits_2(self):
        with pytest.raises(SystemExit) as exc:
            main(["solve"])  # --input is required
        assert exc.value.code == 2

    def test_bad_graph_exits_1(self, tmp_path, capsys):
        path = _write_graph(tmp_path, text="0 0 5\n")
        code = main(["solve", "--input", path])
        assert code == 1

    def test_bad_epsilon_exits_1(self, tmp_path):
        path = _write_graph(tmp_path)
        code = main(["solve", "--input", path, "--epsilon", "0.5"])
        assert code == 1

    def test_sparsify_streaming(self, tmp_path, capsys):
        text = "\n".join(
            f"{i} {j} 1" for i in range(5) for j in range(i + 1, 5)
        )
        path = _write_graph(tmp_path, text=text + "\n")
        code = main(["sparsify", "--input", path, "--xi", "0.25", "--json"])
        out = capsys.readouterr().out
        assert code == 0
        payload = json.loads(out)
        assert payload["kept_edges"] >= 4  # spanning structure survives

    def test_sparsify_deferred(self, tmp_path, capsys):
        path = _write_graph(tmp_path, text="0 1 2\n1 2 3\n")
        code = main(
            ["sparsify", "--input", path, "--deferred", "--chi", "2.0", "--json"]
        )
        out = capsys.readouterr().out
        assert code == 0
        payload = json.loads(out)
        assert payload["mode"] == "deferred"
        assert payload["chi"] == pytest.approx(2.0)

    def test_stats(self, tmp_path, capsys):
        path = _write_graph(tmp_path, text="0 1 5\n1 2 12\n")
        code = main(["stats", "--input", path, "--json"])
        out = capsys.readouterr().out
        assert code == 0
        payload = json.loads(out)
        assert payload["n"] == 3
        assert payload["m"] == 2

    def test_verify_full(self, tmp_path, capsys):
        path = _write_graph(tmp_path, text="0 1 5\n2 3 4\n")
        code = main(["verify", "--input", path, "--json"])
        out = capsys.readouterr().out
        assert code == 0
        payload = json.loads(out)
        assert all(payload["checks"].values())

    def test_verify_external_matching(self, tmp_path, capsys):
        path = _write_graph(tmp_path, text="0 1 5\n2 3 4\n")
        mpath = tmp_path / "m.json"
        mpath.write_text(json.dumps([[0, 1, 1], [2, 3, 1]]))
        code = main(
            ["verify", "--input", path, "--matching", str(mpath), "--json"]
        )
        out = capsys.readouterr().out
        assert code == 0
        payload = json.loads(out)
        assert payload["matching_weight"] == pytest.approx(9.0)
        assert payload["feasible"] and payload["meets_ratio_floor"]

    def test_verify_infeasible_matching_fails(self, tmp_path):
        path = _write_graph(tmp_path, text="0 1 5\n0 2 4\n")
        mpath = tmp_path / "m.json"
        mpath.write_text(json.dumps([[0, 1, 1], [0, 2, 1]]))  # b_0 = 1 exceeded
        code = main(
            ["verify", "--input", path, "--matching", str(mpath), "--json"]
        )
        assert code == 1

    def test_b_file(self, tmp_path, capsys):
        path = _write_graph(tmp_path, text="0 1 5\n0 2 4\n")
        bpath = tmp_path / "b.txt"
        bpath.write_text("0 2\n1 1\n2 1\n")
        code = main(["solve", "--input", path, "--b", str(bpath), "--json"])
        out = capsys.readouterr().out
        assert code == 0
        payload = json.loads(out)
        assert payload["weight"] == pytest.approx(9.0)
