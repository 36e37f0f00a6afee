import json

import pytest

from labseq import scenario as sio
from labseq.demo import COMPARE_DEMO, MICHAEL_DEMO, build_compare_scenario, build_michael_scenario, data_path, load_demo
from labseq.kinematics import JointConfig
from labseq.orchestrator import compile, split_runs


def test_round_trip_is_identity(michael_demo):
    text = sio.dumps(michael_demo)
    again = sio.loads(text)
    assert again == michael_demo
    assert sio.dumps(again) == text


def test_round_trip_through_file(tmp_path, compare_demo):
    path = tmp_path / "s.json"
    sio.dump(compare_demo, path)
    assert sio.load(path) == compare_demo


@pytest.mark.parametrize("name, builder", [(COMPARE_DEMO, build_compare_scenario),
                                           (MICHAEL_DEMO, build_michael_scenario)])
def test_shipped_files_match_builders(name, builder):
    assert load_demo(name) == builder()
    assert data_path(name).read_text(encoding="utf-8") == sio.dumps(builder())


def test_syntax_error_reports_position():
    with pytest.raises(sio.ScenarioError) as err:
        sio.loads('{\n  "version": 1,\n  "home": [0, 0,\n}')
    assert err.value.line == 4
    assert err.value.column == 1
    assert str(err.value).startswith("line 4, column 1:")


def _minimal(**extra):
    data = {"version": 1, "home": [0.0] * 6,
            "tasks": [{"name": "t", "layers": [{"label": "a", "candidates": [[0.1] * 6]}]}]}
    data.update(extra)
    return data


def test_minimal_scenario_defaults():
    s = sio.scenario_from_dict(_minimal())
    assert s.home == JointConfig((0.0,) * 6)
    assert s.procedure == () and s.feasibility is None
    assert s.instance().path_count() == 1


@pytest.mark.parametrize("data, fragment", [
    ([], "must be a JSON object"),
    (_minimal(version=2), "unsupported scenario version"),
    ({"version": 1, "home": [0.0] * 6}, "scenario.tasks is missing"),
    (_minimal(tasks=[]), "non-empty list"),
    (_minimal(home=[0.0] * 5), "invalid scenario"),
    (_minimal(procedure=[{"type": "Dance", "task": "t"}]), "unknown step type 'Dance'"),
    (_minimal(procedure=[{"type": "Stir", "task": "t", "speed": 3}]), "unknown fields"),
    (_minimal(procedure=[{"type": "Stir", "task": "elsewhere"}]), "unknown task 'elsewhere'"),
    (_minimal(procedure=[{"type": "Pour", "task": "t", "profile": "nope"}]), "no twist profile named 'nope'"),
    (_minimal(twist_rate=0), "twist_rate must be positive"),
    (_minimal(home=[9.0] * 6), "invalid scenario"),
])
def test_semantic_errors(data, fragment):
    with pytest.raises(sio.ScenarioError, match=fragment):
        sio.scenario_from_dict(data)


def test_inline_profile_and_feasibility():
    data = _minimal(feasibility={"max_joint_jump": 0.5},
                    procedure=[{"type": "Pour", "task": "t",
                                "profile": {"total_angle": 30, "total_dx": 10}}])
    s = sio.scenario_from_dict(data)
    assert s.procedure[0].profile.total_angle == 30.0
    assert s.feasibility(JointConfig((0.0,) * 6), JointConfig((0.5,) * 6))
    assert not s.feasibility(JointConfig((0.0,) * 6), JointConfig((0.51,) * 6))
    again = sio.loads(sio.dumps(s))
    assert again == s


def test_demo_compiles(michael_demo):
    for _, steps in split_runs(michael_demo.procedure):
        compile(steps, michael_demo.instance(), michael_demo.twist_rate)


def test_profiles_are_referenced_by_name(michael_demo):
    data = json.loads(sio.dumps(michael_demo))
    pours = [s for s in data["procedure"] if s["type"] == "Pour"]
    assert {p["profile"] for p in pours} == {"stir_bar_vial", "flush_vial"}
