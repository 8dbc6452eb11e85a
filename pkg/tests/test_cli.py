import json
import subprocess
import sys

import pytest
from conftest import make_triangle

from nba.cli import run
from nba.generate import GenSpec, generate, instance_to_document
from nba.io import instance_to_json, plan_to_json
from nba.model import AllocationPlan, BillingConfig, Instance, Network, SlotDemand, Source


def write(path, doc):
    path.write_text(json.dumps(doc))
    return str(path)


def invoke(capsys, *argv):
    code = run([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, json.loads(out), err


@pytest.fixture
def files(tmp_path):
    triangle = write(tmp_path / "triangle.json", instance_to_json(make_triangle()))
    chain = write(tmp_path / "chain.json", plan_to_json(AllocationPlan({(1, 1): [(1, 2), (2, 3)]})))
    net = Network(2, [1, 1], [10, 10], [10, 10], [(1, 2)])
    heavy = Instance(net, BillingConfig(1), (SlotDemand(1, [(1, 2)], (Source(1, 12, {2}),)),))
    heavy_inst = write(tmp_path / "heavy.json", instance_to_json(heavy))
    heavy_plan = write(tmp_path / "heavy_plan.json", plan_to_json(AllocationPlan({(1, 1): [(1, 2)]})))
    return {"dir": tmp_path, "triangle": triangle, "chain": chain, "heavy": heavy_inst, "heavy_plan": heavy_plan}


class TestCost:
    def test_triangle_chain(self, capsys, files):
        code, doc, _ = invoke(capsys, "cost", "--instance", files["triangle"], "--plan", files["chain"])
        assert code == 0 and doc == {"cost": 3}

    def test_plan_outside_instance(self, capsys, files, tmp_path):
        bad = write(tmp_path / "bad.json", plan_to_json(AllocationPlan({(1, 2): [(2, 3)]})))
        code, doc, err = invoke(capsys, "cost", "--instance", files["triangle"], "--plan", bad)
        assert code == 2 and "error" in doc and err.startswith("nba:")


class TestValidate:
    def test_capacity_violation(self, capsys, files):
        code, doc, _ = invoke(capsys, "validate", "--instance", files["heavy"], "--plan", files["heavy_plan"])
        assert code == 1 and doc["valid"] is False
        assert [v["kind"] for v in doc["violations"]] == ["EgressCapExceeded", "IngressCapExceeded"]

    def test_instance_only(self, capsys, files):
        code, doc, _ = invoke(capsys, "validate", "--instance", files["triangle"])
        assert code == 0 and doc == {"valid": True, "schema": "generic"}

    def test_malformed_json_names_field(self, capsys, files, tmp_path):
        doc = instance_to_json(make_triangle())
        doc["network"]["prices"] = [1, "x", 1]
        path = write(tmp_path / "broken.json", doc)
        code, out, _ = invoke(capsys, "validate", "--instance", path)
        assert code == 2 and "prices" in (out["field"] or "")

    def test_not_json(self, capsys, tmp_path):
        path = tmp_path / "junk.json"
        path.write_text("{not json")
        code, out, _ = invoke(capsys, "validate", "--instance", path)
        assert code == 2 and "error" in out


class TestSolve:
    @pytest.mark.parametrize("strategy", ["exact", "greedy", "local"])
    def test_solve_then_validate_and_cost(self, capsys, files, strategy):
        plan = files["dir"] / f"{strategy}.json"
        report = files["dir"] / f"{strategy}_report.json"
        code, doc, _ = invoke(capsys, "solve", "--instance", files["triangle"], "--strategy", strategy, "--out", plan, "--report", report)
        assert code == 0 and json.loads(report.read_text()) == doc
        code, checked, _ = invoke(capsys, "validate", "--instance", files["triangle"], "--plan", plan)
        assert code == 0 and checked["valid"] is True
        code, cost, _ = invoke(capsys, "cost", "--instance", files["triangle"], "--plan", plan)
        assert cost["cost"] == doc["cost"]

    def test_infeasible_exit_one(self, capsys, tmp_path):
        path = write(tmp_path / "big.json", instance_to_json(make_triangle(w=20)))
        code, doc, _ = invoke(capsys, "solve", "--instance", path)
        assert code == 1 and doc["status"] == "Infeasible"

    def test_resource_limit_exit_three(self, capsys, tmp_path):
        n = 8
        edges = [(i, j) for i in range(1, n + 1) for j in range(1, n + 1) if i != j]
        net = Network(n, [1] * n, [None] * n, [None] * n, edges)
        inst = Instance(net, BillingConfig(1), (SlotDemand(1, edges, (Source(1, 1, set(range(2, n + 1))),)),))
        code, doc, _ = invoke(capsys, "solve", "--instance", write(tmp_path / "k8.json", instance_to_json(inst)))
        assert code == 3 and doc["counts"]

    def test_deterministic_output(self, capsys, files):
        first = invoke(capsys, "solve", "--instance", files["triangle"], "--strategy", "greedy", "--seed", 4)[1]
        assert invoke(capsys, "solve", "--instance", files["triangle"], "--strategy", "greedy", "--seed", 4)[1] == first

    def test_timing_only_on_request(self, capsys, files):
        assert "wall_time_s" not in invoke(capsys, "solve", "--instance", files["triangle"])[1]["statistics"]
        assert "wall_time_s" in invoke(capsys, "solve", "--instance", files["triangle"], "--timing")[1]["statistics"]

    @pytest.mark.parametrize("scenario", ["cdn", "cwan", "lvdn", "rtcn"])
    def test_scenarios(self, capsys, tmp_path, scenario):
        knobs = {"rtcn": dict(n=2, sources=(2, 3), dests=(2, 3)), "lvdn": dict(n=2, sources=(1, 2))}
        spec = GenSpec(seed=1, scenario=scenario, p=1, **knobs.get(scenario, dict(n=3)))
        path = write(tmp_path / "s.json", instance_to_document(generate(spec)))
        code, doc, _ = invoke(capsys, "solve", "--instance", path)
        assert code == 0 and doc["cost"] is not None

    def test_local_rejected_for_cdn(self, capsys, tmp_path):
        path = write(tmp_path / "c.json", instance_to_document(generate(GenSpec(seed=1, scenario="cdn", n=3, p=1))))
        code, doc, _ = invoke(capsys, "solve", "--instance", path, "--strategy", "local")
        assert code == 2 and doc["field"] == "--strategy"


class TestArguments:
    @pytest.mark.parametrize(
        "argv",
        [[], ["frobnicate"], ["cost", "--instance", "x.json"], ["solve", "--instance", "x.json", "--strategy", "magic"], ["gen", "--spec", "s.json", "--bogus"]],
    )
    def test_bad_arguments_exit_two(self, capsys, argv):
        code, doc, _ = invoke(capsys, *argv)
        assert code == 2 and doc["field"] == "argv"

    def test_missing_file(self, capsys, tmp_path):
        code, doc, _ = invoke(capsys, "validate", "--instance", tmp_path / "absent.json")
        assert code == 2 and "error" in doc


class TestGen:
    def test_gen_stdout_and_file_agree(self, capsys, tmp_path):
        spec = write(tmp_path / "spec.json", {"seed": 3, "n": 4, "p": 2})
        code, doc, _ = invoke(capsys, "gen", "--spec", spec)
        assert code == 0 and doc["schema"] == "nba-instance/1"
        out = tmp_path / "inst.json"
        code, info, _ = invoke(capsys, "gen", "--spec", spec, "--out", out)
        assert info == {"written": str(out), "schema": "nba-instance/1", "seed": 3}
        assert json.loads(out.read_text()) == doc

    def test_unknown_knob(self, capsys, tmp_path):
        code, doc, _ = invoke(capsys, "gen", "--spec", write(tmp_path / "s.json", {"seed": 1, "sizes": 3}))
        assert code == 2 and doc["field"] == "/sizes"


class TestExport:
    @pytest.mark.parametrize("fmt,marker", [("lp", "Minimize"), ("mps", "ROWS")])
    def test_formats(self, capsys, files, fmt, marker):
        code, doc, _ = invoke(capsys, "export-milp", "--instance", files["triangle"], "--format", fmt)
        assert code == 0 and marker in doc["text"]
        assert doc["counts"] == {"binary": 6, "integer": 0, "continuous": 3, "constraints": 16}

    def test_write_file(self, capsys, files):
        out = files["dir"] / "m.lp"
        code, doc, _ = invoke(capsys, "export-milp", "--instance", files["triangle"], "--out", out)
        assert code == 0 and doc["written"] == str(out) and out.read_text().startswith("\\ nba")

    def test_scenario_rejected(self, capsys, tmp_path):
        path = write(tmp_path / "c.json", instance_to_document(generate(GenSpec(seed=1, scenario="cwan", n=2, p=1))))
        assert invoke(capsys, "export-milp", "--instance", path)[0] == 2


class TestCheckTu:
    def test_cloudwan_slot(self, capsys, tmp_path):
        path = write(tmp_path / "cw.json", instance_to_document(generate(GenSpec(seed=2, scenario="cwan", n=2, p=2))))
        code, doc, _ = invoke(capsys, "check-tu", "--instance", path, "--slot", 2, "--max-sub", 4)
        assert code == 0 and doc["slot"] == 2

    def test_generic_rejected(self, capsys, files):
        assert invoke(capsys, "check-tu", "--instance", files["triangle"])[0] == 2


def test_log_level_goes_to_stderr(files):
    env = {"NBA_LOG": "info", "PATH": "/usr/bin:/bin"}
    proc = subprocess.run(
        [sys.executable, "-m", "nba.cli", "solve", "--instance", files["triangle"]], capture_output=True, text=True, env=env
    )
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["cost"] == 3
    assert "solve finished" in proc.stderr
