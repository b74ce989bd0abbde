import json
import shutil

import pytest

from conftest import wait_game
from main import main, sidecar_path
from wtg import serialize


@pytest.fixture
def compiled_game(tmp_path, fixtures_path):
    def compile_fixture(name, *extra):
        output = tmp_path / f"{name}.json"
        assert main(["compile", str(fixtures_path / f"{name}.tcm"), "-o", str(output), *extra]) == 0
        return output
    return compile_fixture


def test_compile_writes_game_and_anchors(compiled_game, capsys):
    output = compiled_game("inc-halt")
    assert output.exists()
    assert sidecar_path(output).name == "inc-halt.anchors.json"
    sidecar = json.loads(sidecar_path(output).read_text())
    assert sidecar["variant"] == "value"
    assert "COMPILED" in capsys.readouterr().out


def test_compile_default_output(tmp_path, fixtures_path):
    machine = tmp_path / "inc-halt.tcm"
    shutil.copy(fixtures_path / "inc-halt.tcm", machine)
    assert main(["compile", str(machine)]) == 0
    assert (tmp_path / "inc-halt.json").exists()
    assert (tmp_path / "inc-halt.anchors.json").exists()


def test_existence_variant_records_the_soft_exit(compiled_game):
    output = compiled_game("inc-halt", "--variant", "existence")
    sidecar = json.loads(sidecar_path(output).read_text())
    assert sidecar["exits"]["q1"][1]["kind"] == "SOFT_EXIT"


def test_malformed_machine_is_a_parse_error(tmp_path, capsys):
    machine = tmp_path / "bad.tcm"
    machine.write_text("q0: inc c q1\nq0: inc d q1\nq1: halt\n")
    assert main(["compile", str(machine)]) == 2
    assert "line 2" in capsys.readouterr().out


def test_missing_file_is_a_fault(tmp_path):
    assert main(["compile", str(tmp_path / "absent.tcm")]) == 1


def test_simulate_faithful(compiled_game, capsys):
    game = compiled_game("inc-halt")
    capsys.readouterr()
    assert main(["simulate", str(game)]) == 0
    out = capsys.readouterr().out
    assert "611/10" in out
    assert "GOAL" in out


def test_simulate_cheater_against_the_punisher(compiled_game, capsys):
    game = compiled_game("inc-inc-halt")
    capsys.readouterr()
    assert main(["simulate", str(game), "--min", "cheat:1=+30^-10", "--max", "punisher"]) == 0
    out = capsys.readouterr().out
    assert "punished in" in out
    assert f"{61 * 30**9 + 1}/{30**9}" in out


def test_simulate_loop_with_precision(compiled_game, capsys):
    game = compiled_game("loop")
    capsys.readouterr()
    assert main(["--decimal", "simulate", str(game), "--max", "punisher", "--N", "2"]) == 0
    out = capsys.readouterr().out
    assert "61001/1000" in out
    assert "~61.001000000000" in out


def test_simulate_writes_traces(compiled_game, tmp_path):
    game = compiled_game("inc-halt")
    text_trace = tmp_path / "trace.txt"
    json_trace = tmp_path / "trace.json"
    assert main(["simulate", str(game), "--trace", str(text_trace)]) == 0
    assert main(["simulate", str(game), "--trace", str(json_trace)]) == 0
    assert "q0.enter" in text_trace.read_text()
    assert json.loads(json_trace.read_text())["weight"] == "611/10"


def test_simulate_status_codes(compiled_game):
    game = compiled_game("inc-halt")
    assert main(["simulate", str(game), "--min", "lazy"]) == 2
    assert main(["simulate", str(game), "--min", "cheat:1=-1/1"]) == 1


def test_simulate_needs_matching_anchors(compiled_game, tmp_path):
    game = compiled_game("inc-halt")
    other = compiled_game("inc-inc-halt")
    shutil.copy(sidecar_path(other), sidecar_path(game))
    assert main(["simulate", str(game)]) == 1


def test_verify_gadgets(tmp_path, capsys):
    report = tmp_path / "report.json"
    assert main(["verify", "--suite", "gadgets", "--report", str(report)]) == 0
    assert json.loads(report.read_text())["passed"] is True
    assert "VERIFICATION" in capsys.readouterr().out


def test_verify_detects_a_mutation(capsys):
    assert main(["verify", "--suite", "gadgets", "--mutate", "CEC:upper1"]) == 3
    assert "verification failed" in capsys.readouterr().out


def test_grid_value(tmp_path, capsys):
    game = tmp_path / "wait.json"
    game.write_text(serialize(wait_game()))
    assert main(["grid-value", str(game), "--D", "2", "--H", "1"]) == 0
    out = capsys.readouterr().out
    assert out.splitlines()[0] == "2/1"
    assert "restricted game" in out


def test_grid_value_budget(compiled_game):
    game = compiled_game("inc-halt")
    assert main(["grid-value", str(game), "--budget", "5"]) == 4


def test_grid_value_bad_file(tmp_path):
    game = tmp_path / "broken.json"
    game.write_text("{")
    assert main(["grid-value", str(game)]) == 2
