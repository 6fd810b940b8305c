import copy
import json

import numpy as np
import pytest

from delaylab import (SCENARIO_NAMES, Scenario, ScenarioError,
                      builtin_scenario, builtin_scenarios,
                      evaluate_expectations)
from delaylab.cli import (EXIT_CHECK, EXIT_INPUT, EXIT_IO, EXIT_OK,
                          execute_scenario, main)


def quick_dict(name: str = "quick") -> dict:
    """Scalar paradigm on a constant history: converges instantly."""
    return {
        "name": name,
        "n": 1,
        "system": {"kind": "neutral", "m": 1},
        "profiles": [{"kind": "constant", "h": 1.0}],
        "history": {"kind": "constant", "value": [1.0]},
        "integration": {"step": 0.05, "t_end": 8.0},
        "expect": {"converged": True},
    }


def two_node_dict(name: str = "pair") -> dict:
    return {
        "name": name,
        "n": 2,
        "system": {"kind": "linear"},
        "links": [
            {"from": 1, "to": 2, "weight": 1.0, "delay": 1},
            {"from": 2, "to": 1, "weight": 1.0, "delay": 2},
        ],
        "profiles": [{"kind": "constant", "h": 1.0},
                     {"kind": "constant", "h": 1.0}],
        "history": {"kind": "constant", "value": [1.0, 0.0]},
        "integration": {"step": 0.05, "t_end": 30.0},
    }


def write_scenario(tmp_path, data: dict) -> str:
    path = tmp_path / f"{data['name']}.json"
    path.write_text(json.dumps(data))
    return str(path)


# -- parsing and round-trips -------------------------------------------------------


def test_builtin_corpus_shape():
    scenarios = builtin_scenarios()
    assert len(scenarios) == 10
    assert [s.name for s in scenarios] == list(SCENARIO_NAMES)
    assert len(set(SCENARIO_NAMES)) == 10
    assert builtin_scenario("scalar_sinshift_tv").name == "scalar_sinshift_tv"
    with pytest.raises(ValueError, match="no built-in"):
        builtin_scenario("nope")


def test_builtin_scenarios_round_trip_through_json():
    for scenario in builtin_scenarios():
        encoded = json.dumps(scenario.to_dict())
        again = Scenario.from_dict(json.loads(encoded))
        assert again.to_dict() == scenario.to_dict()


def test_scenario_file_round_trip(tmp_path):
    scenario = Scenario.from_dict(quick_dict())
    path = tmp_path / "quick.json"
    scenario.write(path)
    raw = path.read_bytes()
    assert raw.endswith(b"\n") and b"\r" not in raw
    again = Scenario.from_file(path)
    assert again.to_dict() == scenario.to_dict()


def test_from_file_failures(tmp_path):
    with pytest.raises(ScenarioError, match="cannot read"):
        Scenario.from_file(tmp_path / "missing.json")
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(ScenarioError, match="not valid JSON"):
        Scenario.from_file(bad)


def test_unknown_keys_rejected_at_every_level():
    for mutate in (
        lambda d: d.update(extra=1),
        lambda d: d["system"].update(extra=1),
        lambda d: d["profiles"][0].update(extra=1),
        lambda d: d["history"].update(extra=1),
        lambda d: d["integration"].update(extra=1),
        lambda d: d.update(analysis={"extra": 1}),
        lambda d: d["expect"].update(extra=1),
    ):
        data = quick_dict()
        mutate(data)
        with pytest.raises(ScenarioError, match="unknown key|extra"):
            Scenario.from_dict(data)
    data = two_node_dict()
    data["links"][0]["extra"] = 1
    with pytest.raises(ScenarioError, match="unknown key"):
        Scenario.from_dict(data)


def test_name_and_shape_validation():
    data = quick_dict()
    data["name"] = "has space"
    with pytest.raises(ScenarioError, match="name"):
        Scenario.from_dict(data)
    data = quick_dict()
    data["n"] = 0
    with pytest.raises(ScenarioError, match="n:"):
        Scenario.from_dict(data)
    data = quick_dict()
    del data["integration"]
    with pytest.raises(ScenarioError, match="missing required key"):
        Scenario.from_dict(data)


def test_system_validation():
    data = quick_dict()
    data["system"] = {"kind": "quartic"}
    with pytest.raises(ScenarioError, match="kind"):
        Scenario.from_dict(data)
    data = quick_dict()
    data["n"] = 2
    data["history"]["value"] = [1.0, 1.0]
    with pytest.raises(ScenarioError, match="scalar"):
        Scenario.from_dict(data)
    data = quick_dict()
    data["links"] = [{"from": 1, "to": 1, "weight": 1.0, "delay": 1}]
    with pytest.raises(ScenarioError, match="no links"):
        Scenario.from_dict(data)
    data = two_node_dict()
    data["system"] = {"kind": "odd_power"}
    with pytest.raises(ScenarioError, match="power"):
        Scenario.from_dict(data)
    data = two_node_dict()
    data["system"] = {"kind": "odd_power", "power": 0}
    with pytest.raises(ScenarioError, match="power"):
        Scenario.from_dict(data)


def test_link_validation():
    data = two_node_dict()
    del data["links"]
    with pytest.raises(ScenarioError, match="nonempty list of links"):
        Scenario.from_dict(data)
    for patch, message in (
        ({"from": 0}, "outside 1..2"),
        ({"to": 3}, "outside 1..2"),
        ({"delay": 0}, "1-based"),
    ):
        data = two_node_dict()
        data["links"][0].update(patch)
        with pytest.raises(ScenarioError, match=message):
            Scenario.from_dict(data)


def test_profile_count_must_match_channels():
    data = two_node_dict()
    data["profiles"] = [{"kind": "constant", "h": 1.0}]
    with pytest.raises(ScenarioError, match="expected 2 profiles"):
        Scenario.from_dict(data)


def test_history_validation():
    data = quick_dict()
    data["history"] = {"kind": "sampled", "points": [[-1.0, 1.0], [-0.5, 0.0]]}
    with pytest.raises(ScenarioError, match="theta = 0"):
        Scenario.from_dict(data)
    data = quick_dict()
    data["history"] = {"kind": "sampled", "points": [[-1.0, 1.0, 2.0],
                                                     [0.0, 1.0, 2.0]]}
    with pytest.raises(ScenarioError, match="points"):
        Scenario.from_dict(data)
    data = quick_dict()
    data["history"] = {"kind": "random_constant", "amplitude": 0.0}
    with pytest.raises(ScenarioError, match="positive"):
        Scenario.from_dict(data)
    data = quick_dict()
    data["history"]["value"] = [1.0, 2.0]
    with pytest.raises(ScenarioError, match="expected 1 entries"):
        Scenario.from_dict(data)
    data = quick_dict()
    data["history"]["horizon"] = -1.0
    with pytest.raises(ScenarioError, match="horizon"):
        Scenario.from_dict(data)


def test_integration_and_analysis_validation():
    data = quick_dict()
    data["integration"]["step"] = 0.0
    with pytest.raises(ScenarioError, match="integration"):
        Scenario.from_dict(data)
    data = quick_dict()
    data["analysis"] = {"convergence_tol": 0.0}
    with pytest.raises(ScenarioError, match="convergence_tol"):
        Scenario.from_dict(data)
    data = quick_dict()
    data["analysis"] = {"razumikhin_slack": -1.0}
    with pytest.raises(ScenarioError, match="razumikhin_slack"):
        Scenario.from_dict(data)
    data = quick_dict()
    data["analysis"] = {"razumikhin_slack": None}
    assert Scenario.from_dict(data).razumikhin_slack is None
    data = quick_dict()
    data["seed"] = "7"
    with pytest.raises(ScenarioError, match="integer"):
        Scenario.from_dict(data)
    data = quick_dict()
    data["expect"]["converged"] = "yes"
    with pytest.raises(ScenarioError, match="true or false"):
        Scenario.from_dict(data)


# -- builders ------------------------------------------------------------------------


def test_build_network_maps_one_based_indices():
    scenario = Scenario.from_dict(two_node_dict())
    net = scenario.build_network()
    assert net.n == 2 and net.m == 2
    first = net.links[0]
    assert (first.agent, first.neighbor, first.channel) == (0, 1, 0)
    second = net.links[1]
    assert (second.agent, second.neighbor, second.channel) == (1, 0, 1)


def test_history_horizon_rules():
    scenario = Scenario.from_dict(quick_dict())
    assert scenario.history_horizon() == 1.0
    data = quick_dict()
    data["history"]["horizon"] = 2.5
    assert Scenario.from_dict(data).history_horizon() == 2.5
    data = quick_dict()
    data["history"] = {"kind": "sampled",
                       "points": [[-1.5, 1.0], [0.0, 0.5]]}
    assert Scenario.from_dict(data).history_horizon() == 1.5


def test_random_constant_history_is_seeded():
    data = quick_dict()
    data["history"] = {"kind": "random_constant", "amplitude": 1.0}
    data["seed"] = 11
    one = Scenario.from_dict(data).build_history()
    two = Scenario.from_dict(copy.deepcopy(data)).build_history()
    assert np.array_equal(one.evaluate(0.0), two.evaluate(0.0))
    data["seed"] = 12
    other = Scenario.from_dict(data).build_history()
    assert not np.array_equal(one.evaluate(0.0), other.evaluate(0.0))
    assert float(np.max(np.abs(one.evaluate(0.0)))) <= 1.0


def test_config_with_step_override():
    scenario = Scenario.from_dict(quick_dict())
    assert scenario.config_with_step(None) is scenario.integration
    finer = scenario.config_with_step(0.01)
    assert finer.step == 0.01
    assert finer.t_end == scenario.integration.t_end


def test_evaluate_expectations_pass_and_fail():
    scenario = Scenario.from_dict(quick_dict())
    _, report = execute_scenario(scenario)
    assert evaluate_expectations(scenario, report) == ()
    data = quick_dict()
    data["expect"] = {"converged": True, "alpha": 2.0, "alpha_tol": 1e-6}
    strict = Scenario.from_dict(data)
    failures = evaluate_expectations(strict, report)
    assert len(failures) == 1 and "alpha" in failures[0]


# -- command line --------------------------------------------------------------------


def test_cli_run_writes_outputs(tmp_path, capsys):
    path = write_scenario(tmp_path, quick_dict())
    out = tmp_path / "out"
    assert main(["run", path, "--out", str(out)]) == EXIT_OK
    text = capsys.readouterr().out
    assert "converged = true" in text
    assert "wrote" in text
    run_dir = out / "quick"
    for name in ("trajectory.csv", "report.txt", "residual.csv",
                 "extrema.csv", "conserved.csv", "scenario.json"):
        assert (run_dir / name).is_file()
    traj = (run_dir / "trajectory.csv").read_bytes()
    assert traj.startswith(b"t,x_1\n")
    assert b"\r" not in traj


def test_cli_run_is_byte_deterministic(tmp_path):
    path = write_scenario(tmp_path, quick_dict())
    outs = []
    for label in ("a", "b"):
        out = tmp_path / label
        assert main(["run", path, "--out", str(out)]) == EXIT_OK
        run_dir = out / "quick"
        outs.append({p.name: p.read_bytes() for p in run_dir.iterdir()})
    assert outs[0] == outs[1]


def test_cli_run_flags_expectation_mismatch(tmp_path, capsys):
    data = quick_dict()
    data["expect"] = {"converged": False}
    path = write_scenario(tmp_path, data)
    assert main(["run", path, "--out", str(tmp_path / "out")]) == EXIT_CHECK
    assert "check failed" in capsys.readouterr().out


def test_cli_run_input_errors(tmp_path, capsys):
    assert main(["run", str(tmp_path / "none.json"),
                 "--out", str(tmp_path / "out")]) == EXIT_INPUT
    bad = tmp_path / "bad.json"
    bad.write_text("{")
    assert main(["run", str(bad), "--out", str(tmp_path / "out")]) == EXIT_INPUT
    capsys.readouterr()


def test_cli_run_io_failure(tmp_path):
    path = write_scenario(tmp_path, quick_dict())
    blocker = tmp_path / "blocker"
    blocker.write_text("plain file")
    assert main(["run", path, "--out", str(blocker / "out")]) == EXIT_IO


def test_cli_validate_passes_clean_scenario(tmp_path, capsys):
    path = write_scenario(tmp_path, two_node_dict())
    assert main(["validate", path]) == EXIT_OK
    text = capsys.readouterr().out
    assert "all checks pass" in text
    assert text.count("pass") >= 8


def test_cli_validate_flags_unbalanced_weights(tmp_path, capsys):
    data = two_node_dict()
    data["links"][0]["weight"] = 2.0
    path = write_scenario(tmp_path, data)
    assert main(["validate", path]) == EXIT_CHECK
    text = capsys.readouterr().out
    assert "col_sums_zero" in text and "validation failed" in text
    # Row sums stay zero by construction of the drift matrix.
    row_line = next(line for line in text.splitlines()
                    if line.startswith("row_sums_zero"))
    assert "pass" in row_line


def test_cli_validate_flags_short_history(tmp_path, capsys):
    data = quick_dict()
    data["history"]["horizon"] = 0.5
    path = write_scenario(tmp_path, data)
    assert main(["validate", path]) == EXIT_CHECK
    assert "history_coverage" in capsys.readouterr().out


def test_cli_validate_rejects_self_link(tmp_path, capsys):
    data = two_node_dict()
    data["links"][0]["to"] = 1
    path = write_scenario(tmp_path, data)
    assert main(["validate", path]) == EXIT_INPUT
    capsys.readouterr()


def test_cli_sweep_runs_and_is_deterministic(tmp_path, capsys):
    path = write_scenario(tmp_path, two_node_dict())
    args = ["sweep", path, "--count", "3", "--amplitude", "1.0",
            "--seed", "42"]
    outs = []
    for label in ("a", "b"):
        out = tmp_path / label
        assert main(args + ["--out", str(out)]) == EXIT_OK
        run_dir = out / "pair"
        outs.append({p.name: p.read_bytes() for p in run_dir.iterdir()})
    assert outs[0] == outs[1]
    assert set(outs[0]) == {"runs.csv", "summary.txt"}
    text = capsys.readouterr().out
    assert "converged_count = 3" in text
    runs = outs[0]["runs.csv"].decode()
    assert runs.splitlines()[0] == ("index,h_1,h_2,converged,alpha,predicted,"
                                    "excursion_ratio,error")


def test_cli_sweep_argument_errors(tmp_path, capsys):
    path = write_scenario(tmp_path, two_node_dict())
    assert main(["sweep", path, "--count", "1", "--amplitude", "1.0",
                 "--seed", "0", "--out", str(tmp_path / "o")]) == EXIT_INPUT
    assert main(["sweep", path, "--count", "3", "--amplitude", "0.0",
                 "--seed", "0", "--out", str(tmp_path / "o")]) == EXIT_INPUT
    capsys.readouterr()


def test_cli_sweep_reports_failed_runs(tmp_path, capsys):
    data = two_node_dict()
    data["profiles"][1] = {"kind": "exp_approach", "h": 1.0}
    data["integration"] = {"step": 0.5, "t_end": 10.0,
                           "max_fixed_point_iters": 1}
    path = write_scenario(tmp_path, data)
    assert main(["sweep", path, "--count", "2", "--amplitude", "1.0",
                 "--seed", "3", "--out", str(tmp_path / "o")]) == EXIT_CHECK
    text = capsys.readouterr().out
    assert "failed_runs = 2" in text
