#!/usr/bin/env python3
"""
Compile a two-counter machine into a two-clock weighted timed game

Every machine state becomes a Min location of weight 30. Increments pass
through a CEC; tests go through a Max branch location where Max may divert a
wrong claim into CZ/CNZ, then a weight-30 wait and a CEC. Every state gets
Min's exit, and the Existence variant adds a soft exit at the halting state.
Exits and branch claims need y = 0, so Min can only take them on arrival;
the increment wait at a state location is audited by its CEC.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import Enum

from constants import (
    ALPHA, BETA_DEC_C, BETA_DEC_D, BETA_INC_C, BETA_INC_D, BETA_ZERO, CLOCK_X, CLOCK_Y,
    EXIT_WEIGHT, STATE_WEIGHT,
)
from counter_machine import COUNTER_INDEX, Inc, TwoCounterMachine, format_machine, parse_machine
from errors import StructuralError
from gadgets import (
    GadgetHandle, GadgetKind, GadgetParams, build_cec, build_cnz, build_cz, build_exit,
    build_soft_exit,
)
from rational import ONE, Q, Rational
from wtg import (
    GOAL_ID, WTG, ClockConstraint, Location, Owner, TransitionDef, add_deadlock_escapes,
    game_document, validate,
)

logger = logging.getLogger(__name__)

MAX_GUARD_BOUND = 2

_OP_BETAS = {
    ("inc", "c"): BETA_INC_C,
    ("inc", "d"): BETA_INC_D,
    ("dec", "c"): BETA_DEC_C,
    ("dec", "d"): BETA_DEC_D,
    ("zero", None): BETA_ZERO,
}


class Variant(Enum):
    VALUE = "value"
    EXISTENCE = "existence"


@dataclass(frozen=True)
class BranchModule:
    """One side of a test: Min's claim, Max's accept/divert choice, Min's wait, the CEC"""

    state: str
    counter: str
    zero: bool
    choice: str          # Max location
    wait: str            # Min location of weight 30
    accept: str          # transition ids
    divert: str
    cec: GadgetHandle
    control: GadgetHandle


@dataclass(frozen=True)
class AuditReport:
    findings: tuple[str, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.findings


@dataclass(frozen=True)
class CompilationResult:
    machine: TwoCounterMachine
    variant: Variant
    game: WTG
    state_map: dict                       # machine state -> location id
    module_index: dict                    # machine state -> tuple of GadgetHandle
    exits: dict                           # machine state -> (exit, soft exit or None)
    branches: dict = field(default_factory=dict)   # branch choice location -> BranchModule
    _owners: dict = field(init=False, repr=False, compare=False)
    _states: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        owners = {}
        handles = [h for hs in self.module_index.values() for h in hs]
        handles += [h for pair in self.exits.values() for h in pair if h is not None]
        for handle in handles:
            for loc in handle.fragment.locations:
                owners[loc.id] = handle
        object.__setattr__(self, "_owners", owners)
        object.__setattr__(self, "_states", {loc: state for state, loc in self.state_map.items()})

    def module_at(self, location_id: str) -> GadgetHandle | None:
        """The embedded module a location belongs to, if any"""
        return self._owners.get(location_id)

    def state_at(self, location_id: str) -> str | None:
        return self._states.get(location_id)

    def branch_by_wait(self, location_id: str) -> BranchModule | None:
        return next((b for b in self.branches.values() if b.wait == location_id), None)


def op_parameters(kind: str, counter: str | None = None) -> tuple[Rational, int]:
    """
    Wait fraction gamma and CEC beta of a machine operation

    Args:
        kind: 'inc', 'dec' or 'zero'
        counter: 'c' or 'd' (ignored for 'zero')

    Returns:
        (gamma, beta) with gamma = 1 - beta/30
    """
    key = (kind, None if kind == "zero" else counter)
    if key not in _OP_BETAS:
        raise StructuralError(f"unknown operation {kind} {counter}")
    beta = _OP_BETAS[key]
    return ONE - Q(beta, ALPHA), beta


def cec_params(beta: int) -> GadgetParams:
    """CEC_{30,beta}^{31-beta,31}"""
    return GadgetParams(alpha=ALPHA, beta=beta, m=EXIT_WEIGHT - beta, n=EXIT_WEIGHT)


def _le_one():
    return (ClockConstraint(CLOCK_X, "<=", 1),)


def _urgent():
    # y is 0 on every state entry: the initial location and every CEC continue
    return (ClockConstraint(CLOCK_Y, "=", 0),)


def compile_machine(machine: TwoCounterMachine, variant: Variant = Variant.VALUE) -> CompilationResult:
    """
    Build G_M

    Returns:
        CompilationResult: the game starting at the initial state, plus the
        module index strategies use to find their way around
    """
    locations = [Location(GOAL_ID, Owner.GOAL)]
    transitions = []
    module_index = {}
    exits = {}
    branches = {}

    def add(handle):
        locations.extend(handle.fragment.locations)
        transitions.extend(handle.fragment.transitions)
        return handle

    for state in machine.states:
        locations.append(Location(state, Owner.MIN, STATE_WEIGHT))

    for state in machine.states:
        t = machine.transition(state)
        if state == machine.halt or t is None:
            module_index[state] = ()
        elif isinstance(t, Inc):
            _, beta = op_parameters("inc", t.counter)
            cec = add(build_cec(cec_params(beta), f"{state}.inc", exit=t.next, goal=GOAL_ID))
            transitions.append(TransitionDef(f"{state}.enter", state, cec.entry, _le_one()))
            module_index[state] = (cec,)
        else:
            k = COUNTER_INDEX[t.counter]
            handles = []
            for zero in (True, False):
                side = "zero" if zero else "nonzero"
                p = f"{state}.{side}"
                _, beta = op_parameters("zero") if zero else op_parameters("dec", t.counter)
                target = t.if_zero if zero else t.if_nonzero
                cec = add(build_cec(cec_params(beta), f"{p}.cec", exit=target, goal=GOAL_ID))
                builder = build_cz if zero else build_cnz
                control = add(builder(k, 0, f"{p}.{'cz' if zero else 'cnz'}", goal=GOAL_ID))
                locations += [Location(p, Owner.MAX, 0), Location(f"{p}.wait", Owner.MIN, STATE_WEIGHT)]
                transitions += [
                    TransitionDef(f"{state}.choose_{side}", state, p, _le_one() + _urgent(), (CLOCK_Y,)),
                    TransitionDef(f"{p}.accept", p, f"{p}.wait", _le_one()),
                    TransitionDef(f"{p}.divert", p, control.entry, _le_one()),
                    TransitionDef(f"{p}.wait.go", f"{p}.wait", cec.entry, _le_one()),
                ]
                branches[p] = BranchModule(state, t.counter, zero, p, f"{p}.wait",
                                           f"{p}.accept", f"{p}.divert", cec, control)
                handles += [cec, control]
            module_index[state] = tuple(handles)

        exit_handle = add(build_exit(f"{state}.exit", goal=GOAL_ID))
        transitions.append(TransitionDef(f"{state}.to_exit", state, exit_handle.entry, _urgent()))
        soft = None
        if variant is Variant.EXISTENCE and state == machine.halt:
            soft = add(build_soft_exit(f"{state}.soft_exit", goal=GOAL_ID))
            transitions.append(TransitionDef(f"{state}.to_soft_exit", state, soft.entry, _urgent()))
        exits[state] = (exit_handle, soft)

    game = add_deadlock_escapes(WTG((CLOCK_X, CLOCK_Y), tuple(locations), tuple(transitions),
                                    machine.initial))
    logger.info("compiled %d-state machine (%s): %d locations, %d transitions",
                len(machine.states), variant.value, len(game.locations), len(game.transitions))
    return CompilationResult(machine, variant, game, {s: s for s in machine.states},
                             module_index, exits, branches)


def structural_audit(result: CompilationResult) -> AuditReport:
    """Check the invariants every compiled game must keep; findings, never exceptions"""
    game = result.game
    findings = list(validate(game).violations)

    if set(game.clocks) != {CLOCK_X, CLOCK_Y}:
        findings.append(f"clocks are {list(game.clocks)}, expected x and y")
    for state, location_id in result.state_map.items():
        if not game.has_location(location_id):
            findings.append(f"state {state!r} has no location")
            continue
        loc = game.location(location_id)
        if loc.owner is not Owner.MIN or loc.weight != STATE_WEIGHT:
            findings.append(f"state location {location_id!r} is not Min with weight {STATE_WEIGHT}")
        for t in game.outgoing(location_id):
            urgent = ClockConstraint(CLOCK_Y, "=", 0) in t.guard
            if not t.is_escape and not t.id.endswith(".enter") and not urgent:
                findings.append(f"{t.id!r} can be taken after waiting at state {state!r}")

    for t in game.transitions:
        if CLOCK_X in t.resets:
            module = result.module_at(t.source)
            if module is None or module.kind not in (GadgetKind.CZ, GadgetKind.CNZ):
                findings.append(f"clock x reset by {t.id!r} outside the control modules")
        for c in t.guard:
            if c.bound > MAX_GUARD_BOUND:
                findings.append(f"guard {c} on {t.id!r} exceeds {MAX_GUARD_BOUND}")

    for handles in result.module_index.values():
        stack = list(handles)
        while stack:
            handle = stack.pop()
            stack.extend(handle.parts)
            if handle.kind not in (GadgetKind.CEC, GadgetKind.CM):
                continue
            continue_id = handle.resolutions.get("CONTINUE")
            if continue_id is None or game.transition(continue_id).source != handle.entry:
                findings.append(f"Max entry {handle.entry!r} has no CONTINUE option")
            elif game.location(handle.entry).owner is not Owner.MAX:
                findings.append(f"entry {handle.entry!r} is not owned by Max")

    return AuditReport(tuple(findings))


# Sidecar ("anchors") document

def sidecar_document(result: CompilationResult) -> dict:
    def describe(handle):
        return {
            "kind": handle.kind.value,
            "anchors": dict(handle.anchors),
            "params": {"alpha": handle.params.alpha, "beta": handle.params.beta,
                       "k": handle.params.k, "M": handle.params.m, "N": handle.params.n},
        }

    return {
        "variant": result.variant.value,
        "machine": format_machine(result.machine),
        "state_map": dict(result.state_map),
        "module_index": {state: [describe(h) for h in handles]
                         for state, handles in result.module_index.items()},
        "exits": {state: [describe(h) for h in pair if h is not None]
                  for state, pair in result.exits.items()},
    }


def load_sidecar(game: WTG, doc: dict) -> CompilationResult:
    """Rebuild the compilation behind a game file and check that it matches"""
    try:
        machine = parse_machine(doc["machine"])
        variant = Variant(doc["variant"])
    except (KeyError, TypeError, ValueError) as exc:
        raise StructuralError(f"sidecar is incomplete: {exc}") from exc
    result = compile_machine(machine, variant)
    if game_document(result.game) != game_document(game):
        raise StructuralError("game file does not match the machine recorded in its sidecar")
    return result
