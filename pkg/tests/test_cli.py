import json
from pathlib import Path

import numpy as np

from equipart.cli import main
from equipart.scenario_io import (
    Scenario,
    canonical_json,
    dump_scenario,
    load_result,
    load_scenario,
    scenario_to_dict,
)
from equipart.measures import projection_assignment
from equipart.scenarios import gen_gaussian_mixture


def make_scenario(tmp_path, problem="sphere", d=2, k=2, count=3, n=300,
                  seed0=40, h=None):
    assignments = [projection_assignment(
        gen_gaussian_mixture(d, 3, n, seed=seed0 + j).points)
        for j in range(count)]
    scenario = Scenario(problem=problem, d=d, k=k, assignments=assignments,
                        smoothing_h=h, seed=0)
    path = tmp_path / f"{problem}.json"
    dump_scenario(scenario, path)
    return path


class TestRoundTrip:
    def test_byte_identical(self, tmp_path):
        path = make_scenario(tmp_path)
        original = Path(path).read_bytes()
        reloaded = load_scenario(path)
        rewritten = canonical_json(scenario_to_dict(reloaded)).encode()
        assert rewritten == original


class TestSolveCommands:
    def test_sphere_solve_verify_plot(self, tmp_path):
        scenario = make_scenario(tmp_path)
        out = tmp_path / "result.json"
        plot = tmp_path / "plot"
        code = main(["solve-sphere", "--scenario", str(scenario),
                     "--out", str(out), "--plot", str(plot)])
        assert code == 0
        result = load_result(out)
        assert result["solution"]["type"] in ("sphere", "halfspace")
        assert max(result["residuals"]) <= 1e-3 * 300
        assert (tmp_path / "plot.csv").exists()
        assert (tmp_path / "plot.svg").exists()
        assert main(["verify", "--result", str(out)]) == 0

    def test_result_is_self_contained(self, tmp_path):
        scenario = make_scenario(tmp_path, problem="slab", seed0=60)
        out = tmp_path / "result.json"
        assert main(["solve-slab", "--scenario", str(scenario),
                     "--out", str(out)]) == 0
        # re-verification reads only the result file
        assert main(["verify", "--result", str(out)]) == 0
        # tampering with stored residuals must be detected
        data = json.loads(out.read_text())
        data["residuals"][0] += 1.0
        out.write_text(json.dumps(data))
        assert main(["verify", "--result", str(out)]) == 1

    def test_wedge_planar_exact(self, tmp_path):
        scenario = make_scenario(tmp_path, problem="wedge", d=2, k=2, count=2,
                                 n=120, seed0=80, h=0.0)
        out = tmp_path / "wedge.json"
        assert main(["solve-wedge", "--scenario", str(scenario),
                     "--out", str(out)]) == 0
        result = load_result(out)
        assert result["solution"]["type"] == "down_wedge"

    def test_wrong_problem_is_input_error(self, tmp_path):
        scenario = make_scenario(tmp_path)
        assert main(["solve-slab", "--scenario", str(scenario)]) == 3

    def test_missing_file_is_input_error(self, tmp_path):
        assert main(["solve-sphere", "--scenario",
                     str(tmp_path / "absent.json")]) == 3


class TestGen:
    def test_gen_gauss_and_solve(self, tmp_path):
        out = tmp_path / "g.json"
        assert main(["gen", "gauss", "--problem", "sphere", "--d", "2",
                     "--k", "2", "--n", "200", "--seed", "4",
                     "--out", str(out)]) == 0
        scenario = load_scenario(out)
        assert len(scenario.assignments) == 3

    def test_gen_lines(self, tmp_path):
        out = tmp_path / "l.json"
        assert main(["gen", "lines", "--n", "6", "--seed", "1",
                     "--out", str(out)]) == 0
        scenario = load_scenario(out)
        assert scenario.problem == "lines"
        assert len(scenario.assignments) == 4

    def test_counterexample_solve_exits_2_with_scan(self, tmp_path):
        cx = tmp_path / "cx.json"
        assert main(["gen", "counterexample", "--d", "2", "--k", "2",
                     "--n", "400", "--seed", "0", "--out", str(cx)]) == 0
        out = tmp_path / "cx_result.json"
        code = main(["solve-sphere", "--scenario", str(cx),
                     "--out", str(out)])
        assert code == 2
        result = load_result(out)
        assert result["solution"] is None
        assert result["optimality"]["relative_delta"] >= 0.05
