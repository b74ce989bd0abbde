import json

import pytest

from compiler import cec_params, compile_machine
from conftest import load_machine
from errors import DomainError
from gadgets import build_cec, build_cnz, build_cz
from harness import (
    CONTROL_SAMPLES, SUITES, apply_mutation, cheating_family, control_play,
    control_structure_checks, fixtures_dir, load_fixtures, mutate_handles, report_document,
    run_all, suite_cz_cnz, suite_existence, suite_gadgets, suite_reduction, summary_rows,
    write_report,
)
from rational import ONE, Q
from wtg import Owner


def test_gadget_suite_passes():
    report = suite_gadgets()
    assert report.passed, report.failures
    assert any(c.identifier.startswith("grid minimax") for c in report.checks)


def test_gadget_suite_catches_a_mutation():
    report = suite_gadgets("CEC:upper1")
    assert not report.passed
    assert any(c.identifier == "contract CEC cec3" for c in report.failures)


def test_mutation_syntax():
    handle = build_cec(cec_params(3), "cec3")
    assert apply_mutation(handle, None) is handle
    assert apply_mutation(handle, "CM:upper1") is handle
    mutated = apply_mutation(handle, "CEC:upper2")
    assert [loc.weight for loc in mutated.fragment.locations if loc.id == "cec3.upper2"] == [4]
    with pytest.raises(DomainError):
        apply_mutation(handle, "GADGET:upper1")
    assert apply_mutation(handle, "CEC:upper9") is handle
    with pytest.raises(DomainError):
        mutate_handles([handle], "CEC:upper9")
    with pytest.raises(DomainError):
        apply_mutation(handle, "CEC:")


def test_control_suite_passes():
    report = suite_cz_cnz()
    assert report.passed, report.failures
    samples = sum(len(e) + len(n) for e, n in CONTROL_SAMPLES.values())
    assert len(report.checks) == samples + 2 * len(CONTROL_SAMPLES)


def test_control_suite_catches_a_mutation():
    assert not suite_cz_cnz("CZ:flag2").passed
    assert not suite_cz_cnz("CZ:flag1").passed
    assert not suite_cz_cnz("CNZ:force").passed


def test_mutation_skips_controls_without_the_location():
    cz1, cz2 = build_cz(1, 0, "cz1"), build_cz(2, 0, "cz2")
    mutated = mutate_handles([cz1, cz2], "CZ:cm3.lower3")
    assert mutated[0] is not cz1
    assert mutated[1] is cz2
    assert not suite_cz_cnz("CZ:cm3.lower3").passed
    with pytest.raises(DomainError):
        mutate_handles([cz1, cz2], "CZ:cm7.lower3")


@pytest.mark.parametrize("handle", [build_cz(1, 0, "cz1"), build_cnz(2, 0, "cnz2")],
                         ids=["cz1", "cnz2"])
def test_every_control_location_is_checked(handle):
    assert all(c.passed for c in control_structure_checks(handle))
    for loc in handle.fragment.locations:
        if loc.owner is Owner.GOAL:
            continue
        mutated = handle.with_weight(loc.id, loc.weight + 1)
        assert not all(c.passed for c in control_structure_checks(mutated)), loc.id


def test_parallel_checks_keep_their_order():
    serial = [c.identifier for c in suite_cz_cnz().checks]
    parallel = [c.identifier for c in suite_cz_cnz(jobs=4).checks]
    assert serial == parallel


@pytest.mark.parametrize("a, mu, total", [
    (Q(1, 10), Q(1, 90), 61 + Q(1, 30)),
    (Q(1, 5), 0, 61),
    (ONE, 0, 61),
    (Q(4, 5), Q(1, 5), 62),
])
def test_control_play(a, mu, total):
    outcome, observed_mu, observed_total = control_play(build_cz(1), a)
    assert observed_mu == mu
    assert observed_total == total
    assert outcome.reached_goal


def test_cheating_family():
    family = cheating_family(compile_machine(load_machine("inc-inc-halt")), 2)
    assert len(family) == 13
    assert family[0] == ("step 1 wait +1/30^10", {"perturbations": {1: Q(1, 30**10)}})
    assert ("exit before step 2", {"exit_at": 2}) in family
    assert ("idle then exit before step 2", {"idle_at": 2}) in family
    assert family[-1] == ("idle then exit before step 3", {"idle_at": 3})
    tested = cheating_family(compile_machine(load_machine("inc-test-dec-halt")), 3)
    assert [label for label, _ in tested if label.startswith("flip")] == [
        "flip claim at step 2", "flip claim at step 3"]


@pytest.mark.parametrize("name", ["inc-halt", "inc-inc-halt", "inc-test-dec-halt"])
def test_reduction_on_halting_machines(name):
    report = suite_reduction(load_machine(name), name)
    assert report.passed, report.failures


def test_reduction_on_a_looping_machine():
    report = suite_reduction(load_machine("loop"), "loop", samples=3)
    assert report.passed, report.failures


@pytest.mark.parametrize("name", ["inc-halt", "loop"])
def test_existence(name):
    report = suite_existence(load_machine(name), name, samples=3)
    assert report.passed, report.failures


def test_fixtures_directory(monkeypatch, fixtures_path, tmp_path):
    assert set(load_fixtures(fixtures_path)) == {
        "inc-halt", "inc-inc-halt", "inc-test-dec-halt", "loop", "clear-c"}
    monkeypatch.setenv("WTG_FIXTURES", str(tmp_path))
    assert fixtures_dir() == tmp_path
    (tmp_path / "tiny.tcm").write_text("a: halt\n")
    assert list(load_fixtures()) == ["tiny"]


def test_reports(tmp_path):
    reports = [suite_cz_cnz()]
    doc = json.loads(json.dumps(report_document(reports)))
    assert doc["passed"] is True
    assert doc["reports"][0]["suite"] == "cz"
    assert {"id", "provenance", "expected", "observed", "verdict", "witness"} <= set(
        doc["reports"][0]["checks"][0])
    assert summary_rows(reports) == [("cz", f"{len(reports[0].checks)}/{len(reports[0].checks)} PASS")]
    write_report(tmp_path / "report.json", reports)
    assert json.loads((tmp_path / "report.json").read_text()) == doc


def test_unknown_suite():
    assert "gadgets" in SUITES
    with pytest.raises(DomainError):
        run_all("everything")
