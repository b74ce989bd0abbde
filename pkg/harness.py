#!/usr/bin/env python3
"""
Verification suites

Each suite replays gadgets or compiled games under explicit strategy
profiles and compares exact costs with the values the construction
predicts. Lower and upper bounds are only ever checked against the
opponents a suite actually plays, never as true game values.
"""

from __future__ import annotations

import json
import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

from compiler import Variant, cec_params, compile_machine
from constants import (
    ALPHA, CEC_BETAS, CM_FACTORS, DEFAULT_FIXTURES_DIR, DEFAULT_N, DEFAULT_RANDOM_SAMPLES,
    FIXTURES_ENV_VAR, HARNESS_STEP_CAP, MACHINE_SUFFIX, MAX_PLAY_DURATION, STATE_WEIGHT,
    TARGET_COST,
)
from counter_machine import Test, encode, mu_nonzero, mu_zero, parse_machine, run_machine
from engine import INFINITE, Status, grid_minimax, play
from errors import DomainError
from gadgets import (
    STOP_LOWER, STOP_UPPER, GadgetKind, build_cec, build_cm, build_cnz, build_cz, build_exit,
    build_soft_exit, cec_stop_cost, check_gadget_contract, cm_stop_cost, control_weights,
    inner_cm_params,
)
from lib import FractionFormat
from rational import ONE, ZERO, Q, Rational, format_rational
from strategies import (
    BookkeepingTracker, cheating_min, cz_max_strategy, cz_min_strategy, faithful_min,
    honest_max, punisher_max, random_max,
)
from wtg import Configuration, Valuation

logger = logging.getLogger(__name__)

SUITES = ("gadgets", "cz", "reduction", "existence")
SAMPLED_OPPONENTS_NOTE = (
    "bounds hold against the opponents played here only; "
    "a lower bound over every Min strategy cannot be sampled"
)

# (a, b) pairs for the closed-form checks
IDENTITY_SAMPLES = tuple((Q(i, 6), Q(j, 11)) for i in range(5) for j in range(4))
CEC_MINIMIZER_AS = (ZERO, Q(1, 2), Q(4, 5))
CM_MINIMIZER_AS = (Q(1, 10), Q(1, 7))
MINIMIZER_GRID = 1000

# Entry values a of the control modules: exact family members, then near misses
CONTROL_SAMPLES = {
    (GadgetKind.CZ, 1): ((ONE, Q(1, 3), Q(1, 5), Q(1, 9), Q(1, 15)),
                         (Q(1, 10), Q(91, 900), Q(21, 100), Q(201, 1000), Q(4, 5))),
    (GadgetKind.CZ, 2): ((ONE, Q(1, 2), Q(1, 4), Q(1, 5), Q(1, 10)),
                         (Q(1, 3), Q(3, 10), Q(11, 50), Q(201, 1000), Q(9, 10))),
    (GadgetKind.CNZ, 1): ((Q(1, 2), Q(1, 4), Q(1, 6), Q(1, 10), Q(1, 12)),
                          (Q(1, 25), Q(1, 5), Q(11, 20), Q(501, 1000), Q(1, 9))),
    (GadgetKind.CNZ, 2): ((Q(1, 3), Q(1, 6), Q(1, 9), Q(1, 12), Q(1, 15)),
                          (Q(1, 4), Q(1, 5), Q(7, 20), Q(1003, 3000), Q(1, 2))),
}


@dataclass(frozen=True)
class Check:
    identifier: str
    provenance: str          # where the expected value comes from
    expected: str
    observed: str
    passed: bool
    witness: str = ""


@dataclass(frozen=True)
class VerificationReport:
    suite: str
    checks: tuple[Check, ...]
    header: str = SAMPLED_OPPONENTS_NOTE

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def failures(self) -> tuple[Check, ...]:
        return tuple(c for c in self.checks if not c.passed)


def fixtures_dir() -> Path:
    """Fixture directory, overridable with WTG_FIXTURES"""
    override = os.environ.get(FIXTURES_ENV_VAR)
    if override:
        return Path(override)
    return Path(__file__).resolve().parent / DEFAULT_FIXTURES_DIR


def load_fixtures(directory: Path | None = None) -> dict:
    """name -> TwoCounterMachine for every machine file in the directory"""
    directory = Path(directory) if directory is not None else fixtures_dir()
    return {path.stem: parse_machine(path.read_text())
            for path in sorted(directory.glob(f"*{MACHINE_SUFFIX}"))}


def _run_checks(thunks, jobs: int = 1) -> tuple[Check, ...]:
    """Run zero-argument check builders, in order, on up to `jobs` threads"""
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            batches = list(pool.map(lambda thunk: thunk(), thunks))
    else:
        batches = [thunk() for thunk in thunks]
    return tuple(check for batch in batches for check in batch)


def _witness(outcome, punisher=None) -> str:
    trace = outcome.trace
    last = trace.steps[-1].move.transition if trace.steps else "-"
    text = f"{len(trace)} moves, last {last}, duration {format_rational(outcome.duration)}"
    if punisher is not None and punisher.punishments:
        text += ", punished by " + ", ".join(f"{m} ({r})" for m, r in punisher.punishments)
    return text


def _parse_mutation(mutation: str) -> tuple[str, str]:
    kind, _, suffix = mutation.partition(":")
    try:
        GadgetKind(kind)
    except ValueError:
        raise DomainError(f"unknown gadget kind in mutation {mutation!r}") from None
    if not suffix:
        raise DomainError(f"mutation {mutation!r} names no location")
    return kind, suffix


def apply_mutation(handle, mutation: str | None):
    """
    Add 1 to one location weight of a gadget

    mutation is '<KIND>:<location suffix>', e.g. 'CEC:upper1' or 'CZ:cm5.lower3';
    handles of another kind, or without that location, come back unchanged.
    """
    if mutation is None:
        return handle
    kind, suffix = _parse_mutation(mutation)
    location = f"{handle.prefix}.{suffix}"
    if kind != handle.kind.value or not handle.contains(location):
        return handle
    weight = next(loc.weight for loc in handle.fragment.locations if loc.id == location)
    logger.info("mutating %s: weight %d -> %d", location, weight, weight + 1)
    return handle.with_weight(location, weight + 1)


def mutate_handles(handles, mutation: str | None) -> list:
    """
    apply_mutation over every handle of a suite

    Raises:
        DomainError: handles of the mutation's kind exist but none has the location
    """
    mutated = [apply_mutation(h, mutation) for h in handles]
    if mutation is not None:
        kind, _ = _parse_mutation(mutation)
        same_kind = [(h, m) for h, m in zip(handles, mutated) if h.kind.value == kind]
        if same_kind and all(h is m for h, m in same_kind):
            raise DomainError(f"mutation {mutation!r} matches no {kind} location")
    return mutated


# Gadget suite

def _contract_check(handle):
    report = check_gadget_contract(handle)
    failed = [f"{f.check}: expected {f.expected}, observed {f.observed}"
              for f in report.findings if not f.ok]
    return [Check(f"contract {handle.kind.value} {handle.prefix}", "affine cost contract",
                  "every resolution matches its contract", "; ".join(failed) or "all match",
                  not failed, f"{len(report.findings)} findings")]


def _max_stop_total(handle, a, b):
    entry = handle.params.alpha * (a + b)
    return entry + max(handle.contract[STOP_UPPER].evaluate(a, b, ZERO),
                       handle.contract[STOP_LOWER].evaluate(a, b, ZERO))


def _identity_check(handle, closed_form):
    mismatches = []
    for a, b in IDENTITY_SAMPLES:
        observed = _max_stop_total(handle, a, b)
        expected = closed_form(handle.params, a, b)
        if observed != expected:
            mismatches.append(f"({a}, {b}): {format_rational(observed)} != {format_rational(expected)}")
    return [Check(f"closed form {handle.prefix}", "best stop closed form",
                  f"{len(IDENTITY_SAMPLES)} samples equal", "; ".join(mismatches) or "all equal",
                  not mismatches)]


def _minimizer_check(handle, a, best_b):
    grid = [Q(i, MINIMIZER_GRID) for i in range(MINIMIZER_GRID) if a + Q(i, MINIMIZER_GRID) < 1]
    argmin = min(grid, key=lambda b: _max_stop_total(handle, a, b))
    close = abs(argmin - best_b) <= Q(1, MINIMIZER_GRID)
    return Check(f"minimizer {handle.prefix} a={a}", "closed form argmin",
                 f"b within 1/{MINIMIZER_GRID} of {format_rational(best_b)}",
                 format_rational(argmin), close)


def _cec_minimizer_checks(handle):
    gamma = ONE - Q(handle.params.beta, handle.params.alpha)
    checks = []
    for a in CEC_MINIMIZER_AS:
        best_b = gamma * (1 - a)
        checks.append(_minimizer_check(handle, a, best_b))
        cost = cec_stop_cost(handle.params, a, best_b)
        checks.append(Check(f"optimal stop cost {handle.prefix} a={a}", "closed form",
                            format_rational(Rational(TARGET_COST)), format_rational(cost),
                            cost == TARGET_COST))
    return checks


def _cm_minimizer_checks(handle):
    factor = handle.params.k // handle.params.beta
    return [_minimizer_check(handle, a, (factor - 1) * a) for a in CM_MINIMIZER_AS]


def _grid_oracle_check():
    handle = build_cec(cec_params(3), "grid")
    a, b = Q(4, 5), ZERO
    initial = Configuration(handle.entry, Valuation.of(x=a + b, y=b))
    value = grid_minimax(handle.game(), initial, denominator=5, horizon=3)
    expected = cec_stop_cost(handle.params, a, b) - ALPHA * (a + b)
    return [Check("grid minimax CEC a=4/5 b=0 D=5", "closed form vs restricted game",
                  format_rational(expected), FractionFormat.format_fraction(value),
                  value is not INFINITE and value == expected)]


def suite_gadgets(mutation: str | None = None, jobs: int = 1) -> VerificationReport:
    """Contracts of every gadget the compiler uses, closed forms and minimizers"""
    cecs = [build_cec(cec_params(beta), f"cec{beta}") for beta in CEC_BETAS]
    cms = [build_cm(inner_cm_params(factor, 0), f"cm{factor}") for factor in CM_FACTORS]
    exits = [build_exit("exit"), build_soft_exit("soft_exit")]
    cecs, cms, exits = (mutate_handles(group, mutation) for group in (cecs, cms, exits))

    thunks = [lambda h=h: _contract_check(h) for h in cecs + cms + exits]
    thunks += [lambda h=h: _identity_check(h, cec_stop_cost) for h in cecs]
    thunks += [lambda h=h: _identity_check(h, cm_stop_cost) for h in cms]
    thunks += [lambda h=h: _cec_minimizer_checks(h) for h in cecs]
    thunks += [lambda h=h: _cm_minimizer_checks(h) for h in cms]
    thunks.append(_grid_oracle_check)
    report = VerificationReport("gadgets", _run_checks(thunks, jobs))
    logger.info("gadget suite: %d checks, %s", len(report.checks), "PASS" if report.passed else "FAIL")
    return report


# Control module suite

def control_play(handle, a):
    """cz_min against cz_max from entry x = 1 - a, y = 0; returns (outcome, mu, total)"""
    mu = (mu_zero if handle.kind is GadgetKind.CZ else mu_nonzero)(a, handle.params.k)
    offset = STATE_WEIGHT * (1 - a)
    initial = Configuration(handle.entry, Valuation.of(x=1 - a, y=0))
    sigma_max = cz_max_strategy(handle, mu, offset)
    outcome = play(handle.game(), initial, cz_min_strategy(handle), sigma_max, HARNESS_STEP_CAP)
    total = None if outcome.weight is INFINITE else outcome.weight + offset
    return outcome, mu, total


def _control_check(handle, a):
    outcome, mu, total = control_play(handle, a)
    low = TARGET_COST + mu
    high = TARGET_COST + 5 * mu
    passed = total is not None and low <= total <= high
    expected = (f"= {format_rational(low)}" if mu == 0
                else f"in [{format_rational(low)}, {format_rational(high)}]")
    return [Check(f"{handle.kind.value}_{handle.params.k} a={a}", "mu bound",
                  expected, "INFINITE" if total is None else format_rational(total), passed,
                  f"mu={format_rational(mu)}, " + _witness(outcome))]


def _layout_check(handle):
    weights = {loc.id: loc.weight for loc in handle.fragment.locations}
    wrong = [f"{location}: {weights.get(location)} != {weight}"
             for location, weight in control_weights(handle).items() if weights.get(location) != weight]
    return [Check(f"layout {handle.kind.value} {handle.prefix}", "control module weights",
                  "every own location at its rate", "; ".join(wrong) or "all match", not wrong)]


def control_structure_checks(handle):
    """Own location weights plus the contract of every inner CM"""
    return _layout_check(handle) + _contract_check(handle)


def suite_cz_cnz(mutation: str | None = None, jobs: int = 1) -> VerificationReport:
    """Structure of both control modules, then cz_min against cz_max over members and near misses"""
    keys = list(CONTROL_SAMPLES)
    handles = [(build_cz if kind is GadgetKind.CZ else build_cnz)(k, 0, f"{kind.value.lower()}{k}")
               for kind, k in keys]
    thunks = []
    for key, handle in zip(keys, mutate_handles(handles, mutation)):
        exact, near = CONTROL_SAMPLES[key]
        thunks.append(lambda h=handle: control_structure_checks(h))
        thunks += [lambda h=handle, a=a: _control_check(h, a) for a in exact + near]
    report = VerificationReport("cz", _run_checks(thunks, jobs))
    logger.info("control suite: %d checks, %s", len(report.checks), "PASS" if report.passed else "FAIL")
    return report


# Compiled games

def cheating_family(result, n: int, steps=None):
    """
    (label, cheating_min keyword arguments) for every planned mistake up to step n

    Idling is also tried at the state reached after the last step, where only
    the exit is left.
    """
    big, small = Rational(1, ALPHA ** (5 * n)), Rational(1, ALPHA ** (5 * n + 2))
    family = []
    configs = run_machine(result.machine, n).trajectory
    for p in range(1, (steps or n) + 1):
        for delta, label in ((big, f"+1/30^{5 * n}"), (-big, f"-1/30^{5 * n}"),
                             (small, f"+1/30^{5 * n + 2}"), (-small, f"-1/30^{5 * n + 2}")):
            family.append((f"step {p} wait {label}", {"perturbations": {p: delta}}))
        family.append((f"exit before step {p}", {"exit_at": p}))
        family.append((f"idle then exit before step {p}", {"idle_at": p}))
        if p <= len(configs) and isinstance(result.machine.transition(configs[p - 1].state), Test):
            family.append((f"flip claim at step {p}", {"flips": {p}}))
    last = (steps or n) + 1
    family.append((f"idle then exit before step {last}", {"idle_at": last}))
    return family


def _duration_check(suite, outcomes):
    longest = max((o.duration for o in outcomes), default=ZERO)
    return Check(f"{suite}: play duration", "time bound", f"<= {MAX_PLAY_DURATION}",
                 format_rational(longest), longest <= MAX_PLAY_DURATION,
                 f"{len(outcomes)} plays")


def _halting_reduction(name, result, n, jobs, step_cap):
    bound = TARGET_COST + Rational(11, 12 * ALPHA ** (5 * n))
    expected = f">= {format_rational(bound)}"
    outcomes = []

    def faithful_vs_punisher():
        punisher = punisher_max(result, n)
        outcome = play(result.game, None, faithful_min(result, n), punisher, step_cap)
        outcomes.append(outcome)
        return [Check(f"{name}: faithful vs punisher", "halting lower bound", expected,
                      FractionFormat.format_fraction(outcome.weight), outcome.reached_goal and outcome.at_least(bound),
                      _witness(outcome, punisher))]

    def clock_identity():
        tracker = BookkeepingTracker(result)
        outcome = play(result.game, None, faithful_min(result, n), honest_max(), step_cap,
                       observers=(tracker,))
        outcomes.append(outcome)
        configs = run_machine(result.machine, n).trajectory
        wrong = [f"p={r.p}: x={format_rational(r.a)}, E={format_rational(r.E)}"
                 for r, c in zip(tracker.records, configs)
                 if r.a != encode(c.c, c.d, r.p - 1) or r.E != 0]
        wrong += tracker.violations
        complete = len(tracker.records) >= len(configs)
        return [Check(f"{name}: clock encodes the configuration", "derived",
                      "x = encode(c_p, d_p, p - 1) and E_p = 0 at every state",
                      "; ".join(wrong) or f"{len(tracker.records)} entries agree",
                      complete and not wrong, _witness(outcome))]

    def cheater(label, plan):
        def run():
            punisher = punisher_max(result, n)
            sigma_min = cheating_min(faithful_min(result, n), **plan)
            outcome = play(result.game, None, sigma_min, punisher, step_cap)
            outcomes.append(outcome)
            return [Check(f"{name}: cheat {label} vs punisher", "halting lower bound", expected,
                          FractionFormat.format_fraction(outcome.weight), outcome.at_least(bound),
                          _witness(outcome, punisher))]
        return run

    thunks = [faithful_vs_punisher, clock_identity]
    thunks += [cheater(label, plan) for label, plan in cheating_family(result, n)]
    checks = _run_checks(thunks, jobs)
    return checks + (_duration_check(name, outcomes),)


def _looping_reduction(name, result, jobs, step_cap, samples):
    outcomes = []

    def against(n, label, make_max):
        bound = TARGET_COST + Rational(1, ALPHA ** n)

        def run():
            worst = None
            witness = ""
            ok = True
            for sigma_max in make_max():
                outcome = play(result.game, None, faithful_min(result, n), sigma_max, step_cap)
                outcomes.append(outcome)
                ok &= outcome.reached_goal and outcome.at_most(bound)
                if worst is None or outcome.weight is INFINITE or \
                        (worst is not INFINITE and outcome.weight > worst):
                    worst, witness = outcome.weight, _witness(outcome)
            return [Check(f"{name}: faithful N={n} vs {label}", "non-halting upper bound",
                          f"<= {format_rational(bound)}", FractionFormat.format_fraction(worst), ok, witness)]
        return run

    thunks = []
    for n in (1, 2, 3):
        thunks += [
            against(n, "punisher", lambda n=n: [punisher_max(result, n)]),
            against(n, "honest", lambda: [honest_max()]),
            against(n, f"{samples} random samples",
                    lambda: [random_max(seed) for seed in range(samples)]),
        ]
    checks = _run_checks(thunks, jobs)
    return checks + (_duration_check(name, outcomes),)


def suite_reduction(machine, name: str = "machine", jobs: int = 1,
                    step_cap: int = HARNESS_STEP_CAP,
                    samples: int = DEFAULT_RANDOM_SAMPLES) -> VerificationReport:
    """Value variant: lower bound on a halting machine, upper bound on a looping one"""
    result = compile_machine(machine, Variant.VALUE)
    machine_run = run_machine(machine, step_cap)
    if machine_run.halts:
        checks = _halting_reduction(name, result, machine_run.outcome.steps, jobs, step_cap)
    else:
        checks = _looping_reduction(name, result, jobs, step_cap, samples)
    report = VerificationReport(f"reduction:{name}", checks)
    logger.info("reduction suite on %s: %s", name, "PASS" if report.passed else "FAIL")
    return report


def suite_existence(machine, name: str = "machine", jobs: int = 1,
                    step_cap: int = HARNESS_STEP_CAP,
                    samples: int = DEFAULT_RANDOM_SAMPLES) -> VerificationReport:
    """Existence variant: exactly 61 iff the machine halts"""
    result = compile_machine(machine, Variant.EXISTENCE)
    target = Rational(TARGET_COST)
    outcomes = []

    def exact(label, make_max):
        def run():
            outcome = play(result.game, None, faithful_min(result, None), make_max(), step_cap)
            outcomes.append(outcome)
            return [Check(f"{name}: faithful vs {label}", "soft exit cost", f"= {TARGET_COST}",
                          FractionFormat.format_fraction(outcome.weight),
                          outcome.reached_goal and outcome.weight == target, _witness(outcome))]
        return run

    def sampled():
        worst = None
        for seed in range(samples):
            outcome = play(result.game, None, faithful_min(result, None), random_max(seed), step_cap)
            outcomes.append(outcome)
            if worst is None or outcome.weight is INFINITE or \
                    (worst is not INFINITE and outcome.weight > worst):
                worst = outcome.weight
        ok = worst is not None and worst is not INFINITE and worst <= target
        return [Check(f"{name}: faithful vs {samples} random samples", "Max delays only lower the cost",
                      f"<= {TARGET_COST}", FractionFormat.format_fraction(worst), ok)]

    def endless():
        punisher = punisher_max(result, DEFAULT_N)
        outcome = play(result.game, None, faithful_min(result, None), punisher, step_cap)
        outcomes.append(outcome)
        return [Check(f"{name}: faithful vs punisher", "never ends", "STEP_CAP",
                      outcome.status.value, outcome.status is Status.STEP_CAP, _witness(outcome))]

    def cheater(label, plan):
        def run():
            punisher = punisher_max(result, DEFAULT_N)
            sigma_min = cheating_min(faithful_min(result, None), **plan)
            outcome = play(result.game, None, sigma_min, punisher, step_cap)
            outcomes.append(outcome)
            ok = outcome.status is Status.STEP_CAP or outcome.above(target)
            return [Check(f"{name}: cheat {label} vs punisher", "never ends or costs more",
                          f"STEP_CAP or > {TARGET_COST}", FractionFormat.format_fraction(outcome.weight), ok,
                          _witness(outcome, punisher))]
        return run

    if run_machine(machine, step_cap).halts:
        thunks = [exact("punisher", lambda: punisher_max(result, DEFAULT_N)),
                  exact("honest", honest_max), sampled]
    else:
        thunks = [endless] + [cheater(label, plan)
                              for label, plan in cheating_family(result, DEFAULT_N, steps=3)]
    checks = _run_checks(thunks, jobs)
    report = VerificationReport(f"existence:{name}", checks + (_duration_check(name, outcomes),))
    logger.info("existence suite on %s: %s", name, "PASS" if report.passed else "FAIL")
    return report


def run_all(suite: str = "all", directory: Path | None = None, mutation: str | None = None,
            jobs: int = 1) -> list[VerificationReport]:
    """Run one suite or every suite; machine suites go over every fixture"""
    if suite != "all" and suite not in SUITES:
        raise DomainError(f"unknown suite {suite!r}")
    reports = []
    if suite in ("all", "gadgets"):
        reports.append(suite_gadgets(mutation, jobs))
    if suite in ("all", "cz"):
        reports.append(suite_cz_cnz(mutation, jobs))
    if suite in ("all", "reduction", "existence"):
        for name, machine in load_fixtures(directory).items():
            if suite in ("all", "reduction"):
                reports.append(suite_reduction(machine, name, jobs))
            if suite in ("all", "existence"):
                reports.append(suite_existence(machine, name, jobs))
    return reports


# Report formats

def report_document(reports) -> dict:
    return {
        "passed": all(r.passed for r in reports),
        "reports": [
            {
                "suite": r.suite,
                "header": r.header,
                "passed": r.passed,
                "checks": [
                    {"id": c.identifier, "provenance": c.provenance, "expected": c.expected,
                     "observed": c.observed, "verdict": "PASS" if c.passed else "FAIL",
                     "witness": c.witness}
                    for c in r.checks
                ],
            }
            for r in reports
        ],
    }


def write_report(path, reports):
    Path(path).write_text(json.dumps(report_document(reports), indent=2) + "\n")


def summary_rows(reports) -> list[tuple[str, str]]:
    """(suite, 'passed/total PASS|FAIL') per report"""
    return [(r.suite, f"{sum(c.passed for c in r.checks)}/{len(r.checks)} "
                      f"{'PASS' if r.passed else 'FAIL'}") for r in reports]
