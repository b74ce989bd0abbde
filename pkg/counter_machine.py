#!/usr/bin/env python3
"""
Deterministic two-counter machines and the counter encoding used by the reduction
"""

from __future__ import annotations

import itertools
import logging
import math
import re
from dataclasses import dataclass, field
from enum import Enum

from constants import DEFAULT_STEP_CAP
from errors import DeterminismError, DomainError, HaltError, ParseError, StructuralError
from rational import ONE, Rational

logger = logging.getLogger(__name__)

COUNTERS = ("c", "d")
COUNTER_INDEX = {"c": 1, "d": 2}     # k used by the control modules

_STATE = r"[A-Za-z_][A-Za-z0-9_]*"
_LINE = re.compile(rf"^\s*({_STATE})\s*:\s*(.*?)\s*$")
_INIT = re.compile(rf"^\s*@init\s+({_STATE})\s*$")


class Halted(Enum):
    HALTED = "HALTED"


HALTED = Halted.HALTED


@dataclass(frozen=True)
class Inc:
    counter: str
    next: str


@dataclass(frozen=True)
class Test:
    __test__ = False

    counter: str
    if_zero: str
    if_nonzero: str


@dataclass(frozen=True)
class TwoCounterMachine:
    states: tuple[str, ...]
    initial: str
    halt: str
    transitions: dict = field(hash=False)

    def transition(self, state: str) -> Inc | Test | None:
        return self.transitions.get(state)


@dataclass(frozen=True)
class MachineConfig:
    state: str
    c: int = 0
    d: int = 0

    def counter(self, name: str) -> int:
        return self.c if name == "c" else self.d

    def encoding(self, n: int) -> Rational:
        return encode(self.c, self.d, n)


@dataclass(frozen=True)
class HaltsIn:
    steps: int


@dataclass(frozen=True)
class NoHaltWithin:
    cap: int


@dataclass(frozen=True)
class MachineRun:
    outcome: HaltsIn | NoHaltWithin
    trajectory: tuple[MachineConfig, ...]

    @property
    def halts(self) -> bool:
        return isinstance(self.outcome, HaltsIn)


def parse_machine(text: str) -> TwoCounterMachine:
    """
    Parse the line-based machine format

    Args:
        text: lines of '<state>: inc <c|d> <next>', '<state>: test <c|d> <zero> <nonzero>'
              or '<state>: halt', '#' comments and an optional '@init <state>'

    Returns:
        TwoCounterMachine: a validated deterministic machine
    """
    transitions = {}
    order = []
    halt = None
    initial = None
    references = []

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0]
        if not line.strip():
            continue
        init = _INIT.match(line)
        if init:
            if initial is not None:
                raise ParseError("more than one @init line", lineno)
            initial = init.group(1)
            references.append((initial, lineno))
            continue
        match = _LINE.match(line)
        if match is None:
            raise ParseError(f"cannot read {raw.strip()!r}", lineno, 1)
        state, body = match.groups()
        words = body.split()
        column = line.index(":") + 2

        if state in order:
            if state == halt or words == ["halt"]:
                raise HaltError(f"halting state {state!r} cannot have a transition", lineno, 1)
            raise DeterminismError(f"second transition for state {state!r}", lineno, 1)
        order.append(state)

        if words == ["halt"]:
            if halt is not None:
                raise ParseError(f"second halting state {state!r} (already {halt!r})", lineno, column)
            halt = state
            continue
        if len(words) == 3 and words[0] == "inc" and words[1] in COUNTERS:
            transitions[state] = Inc(words[1], words[2])
            references.append((words[2], lineno))
        elif len(words) == 4 and words[0] == "test" and words[1] in COUNTERS:
            transitions[state] = Test(words[1], words[2], words[3])
            references.extend([(words[2], lineno), (words[3], lineno)])
        else:
            raise ParseError(f"expected 'inc', 'test' or 'halt' after {state!r}", lineno, column)
        if not all(re.fullmatch(_STATE, w) for w in words[2:]):
            raise ParseError("malformed state name", lineno, column)

    if not order:
        raise ParseError("machine has no states")
    if halt is None:
        raise ParseError("machine has no halting state")
    for name, lineno in references:
        if name not in order:
            raise ParseError(f"unknown state {name!r}", lineno)

    machine = TwoCounterMachine(tuple(order), initial or order[0], halt, transitions)
    logger.debug("parsed machine with %d states, initial %s, halt %s",
                 len(order), machine.initial, halt)
    return machine


def format_machine(machine: TwoCounterMachine) -> str:
    """Inverse of parse_machine"""
    lines = [f"@init {machine.initial}"]
    for state in machine.states:
        t = machine.transition(state)
        if state == machine.halt:
            lines.append(f"{state}: halt")
        elif isinstance(t, Inc):
            lines.append(f"{state}: inc {t.counter} {t.next}")
        else:
            lines.append(f"{state}: test {t.counter} {t.if_zero} {t.if_nonzero}")
    return "\n".join(lines) + "\n"


def step_machine(config: MachineConfig, machine: TwoCounterMachine) -> MachineConfig | Halted:
    if config.state not in machine.states:
        raise StructuralError(f"unknown machine state {config.state!r}")
    if config.state == machine.halt:
        return HALTED
    t = machine.transition(config.state)
    if t is None:
        raise StructuralError(f"state {config.state!r} has no transition")
    if isinstance(t, Inc):
        if t.counter == "c":
            return MachineConfig(t.next, config.c + 1, config.d)
        return MachineConfig(t.next, config.c, config.d + 1)
    if config.counter(t.counter) == 0:
        return MachineConfig(t.if_zero, config.c, config.d)
    if t.counter == "c":
        return MachineConfig(t.if_nonzero, config.c - 1, config.d)
    return MachineConfig(t.if_nonzero, config.c, config.d - 1)


def run_machine(machine: TwoCounterMachine, step_cap: int = DEFAULT_STEP_CAP) -> MachineRun:
    """Run from (initial, 0, 0) until halt or step_cap steps"""
    config = MachineConfig(machine.initial)
    trajectory = [config]
    for _ in range(step_cap):
        following = step_machine(config, machine)
        if following is HALTED:
            break
        config = following
        trajectory.append(config)
    if config.state == machine.halt:
        return MachineRun(HaltsIn(len(trajectory) - 1), tuple(trajectory))
    return MachineRun(NoHaltWithin(step_cap), tuple(trajectory))


class MachineTrajectory:
    """Lazily extended trajectory; index 0 is the initial configuration"""

    def __init__(self, machine: TwoCounterMachine):
        self.machine = machine
        self._configs = [MachineConfig(machine.initial)]
        self._halted = False

    def config(self, index: int) -> MachineConfig | None:
        while len(self._configs) <= index and not self._halted:
            following = step_machine(self._configs[-1], self.machine)
            if following is HALTED:
                self._halted = True
            else:
                self._configs.append(following)
        return self._configs[index] if index < len(self._configs) else None


def encode(c: int, d: int, n: int) -> Rational:
    """1 - 1/(2^c 3^d 5^n)"""
    return ONE - Rational(1, 2**c * 3**d * 5**n)


def decode_best(a: Rational, p: int) -> tuple[int, int, Rational, Rational]:
    """
    Closest encoding with c + d <= p

    Returns:
        (c, d, mu, delta) where delta = encode(c, d, p) - a and mu = |delta|;
        ties prefer the smaller c, then the smaller d
    """
    if not 0 <= a < 1:
        raise DomainError(f"a = {a} is outside [0, 1)")
    best = None
    for c in range(p + 1):
        for d in range(p + 1 - c):
            delta = encode(c, d, p) - a
            if best is None or abs(delta) < abs(best[3]):
                best = (c, d, abs(delta), delta)
    return best


def _max_exponent(base: int, bound: int) -> int:
    exponent = 0
    while base ** (exponent + 1) <= bound:
        exponent += 1
    return exponent


def nearest_member(a: Rational, bases: tuple[int, ...], require_first: bool = False):
    """
    Closest 1/(b1^e1 b2^e2 ...) to a, with e1 >= 1 when require_first

    The minimiser is the largest member <= a or the smallest member >= a;
    both have a denominator below max(5/a, b1), so the search is finite.

    Returns:
        (member, exponents, distance); ties prefer the larger member
    """
    if a <= 0:
        raise DomainError(f"a = {a} must be positive")
    a = Rational(a)
    bound = max(-(-5 * a.denominator // a.numerator), bases[0] if require_first else 1)
    best = None
    for exponents in itertools.product(*(range(_max_exponent(b, bound) + 1) for b in bases)):
        if require_first and exponents[0] == 0:
            continue
        denominator = math.prod(b**e for b, e in zip(bases, exponents))
        if denominator > bound:
            continue
        member = Rational(1, denominator)
        distance = abs(member - a)
        if best is None or distance < best[2] or (distance == best[2] and member > best[0]):
            best = (member, exponents, distance)
    return best


def _check_k(k):
    if k not in (1, 2):
        raise DomainError(f"k must be 1 or 2, got {k}")


def mu_zero(a: Rational, k: int) -> Rational:
    """min |1/((4-k)^d 5^n) - a| over d, n"""
    _check_k(k)
    if not 0 < a <= 1:
        raise DomainError(f"a = {a} is outside (0, 1]")
    return nearest_member(a, (4 - k, 5))[2]


def mu_nonzero(a: Rational, k: int) -> Rational:
    """min |1/((k+1)^c (4-k)^d 5^n) - a| over c >= 1, d, n"""
    _check_k(k)
    if not 0 < a <= 1:
        raise DomainError(f"a = {a} is outside (0, 1]")
    return nearest_member(a, (k + 1, 4 - k, 5), require_first=True)[2]
