#!/usr/bin/env python3
"""
Turn-based weighted timed games over two clocks

Valuations, clock guards, delayed moves, runs and their weights, structural
validation, the deadlock escape convention and the JSON game file format.
Every value here is immutable; operations return new values.
"""

from __future__ import annotations

import json
import logging
import operator
from dataclasses import dataclass, field
from enum import Enum

from constants import CLOCKS
from errors import GuardViolation, InvalidDelay, ParseError, StructuralError
from rational import ZERO, Rational

logger = logging.getLogger(__name__)

COMPARATORS = {
    "<": operator.lt,
    "<=": operator.le,
    "=": operator.eq,
    ">=": operator.ge,
    ">": operator.gt,
}
LOWER_BOUND_OPS = frozenset({">", ">="})
ESCAPE_SUFFIX = ".escape"
SINK_ID = "sink"
GOAL_ID = "goal"


class Owner(Enum):
    MIN = "MIN"
    MAX = "MAX"
    GOAL = "GOAL"


@dataclass(frozen=True)
class ClockConstraint:
    """x ⋈ n with ⋈ one of <, <=, =, >=, >"""

    clock: str
    op: str
    bound: int

    def holds(self, value: Rational) -> bool:
        return COMPARATORS[self.op](value, self.bound)

    def __str__(self):
        return f"{self.clock}{self.op}{self.bound}"


@dataclass(frozen=True)
class Valuation:
    """Clock values, stored as sorted (clock, value) pairs so it hashes"""

    values: tuple[tuple[str, Rational], ...]

    @classmethod
    def zero(cls, clocks=CLOCKS) -> Valuation:
        return cls(tuple((clock, ZERO) for clock in sorted(clocks)))

    @classmethod
    def of(cls, **values) -> Valuation:
        return cls(tuple(sorted((clock, Rational(value)) for clock, value in values.items())))

    def __getitem__(self, clock: str) -> Rational:
        for name, value in self.values:
            if name == clock:
                return value
        raise StructuralError(f"unknown clock {clock!r}")

    @property
    def clocks(self) -> tuple[str, ...]:
        return tuple(name for name, _ in self.values)

    def delay(self, d: Rational) -> Valuation:
        """ν + d"""
        return Valuation(tuple((name, value + d) for name, value in self.values))

    def reset(self, clocks) -> Valuation:
        """ν[X := 0]"""
        clocks = set(clocks)
        unknown = clocks - set(self.clocks)
        if unknown:
            raise StructuralError(f"unknown clock(s) {sorted(unknown)}")
        return Valuation(tuple((name, ZERO if name in clocks else value)
                               for name, value in self.values))

    def as_dict(self) -> dict[str, Rational]:
        return dict(self.values)


@dataclass(frozen=True)
class Location:
    id: str
    owner: Owner
    weight: int = 0


@dataclass(frozen=True)
class TransitionDef:
    id: str
    source: str
    target: str
    guard: tuple[ClockConstraint, ...] = ()
    resets: tuple[str, ...] = ()
    weight: int = 0

    @property
    def is_escape(self) -> bool:
        return self.id.endswith(ESCAPE_SUFFIX)


@dataclass(frozen=True)
class WTG:
    """A turn-based weighted timed game; the source location owns each transition"""

    clocks: tuple[str, ...]
    locations: tuple[Location, ...]
    transitions: tuple[TransitionDef, ...]
    initial: str
    _locations: dict = field(init=False, repr=False, compare=False, hash=False)
    _transitions: dict = field(init=False, repr=False, compare=False, hash=False)
    _outgoing: dict = field(init=False, repr=False, compare=False, hash=False)

    def __post_init__(self):
        outgoing = {}
        for transition in self.transitions:
            outgoing.setdefault(transition.source, []).append(transition)
        object.__setattr__(self, "_locations", {loc.id: loc for loc in self.locations})
        object.__setattr__(self, "_transitions", {t.id: t for t in self.transitions})
        object.__setattr__(self, "_outgoing", {k: tuple(v) for k, v in outgoing.items()})

    def location(self, location_id: str) -> Location:
        try:
            return self._locations[location_id]
        except KeyError:
            raise StructuralError(f"unknown location {location_id!r}") from None

    def transition(self, transition_id: str) -> TransitionDef:
        try:
            return self._transitions[transition_id]
        except KeyError:
            raise StructuralError(f"unknown transition {transition_id!r}") from None

    def has_location(self, location_id: str) -> bool:
        return location_id in self._locations

    def outgoing(self, location_id: str) -> tuple[TransitionDef, ...]:
        return self._outgoing.get(location_id, ())

    def initial_configuration(self) -> Configuration:
        return Configuration(self.initial, Valuation.zero(self.clocks))


@dataclass(frozen=True)
class Configuration:
    location: str
    valuation: Valuation


@dataclass(frozen=True)
class DelayedMove:
    delay: Rational
    transition: str


@dataclass(frozen=True)
class Step:
    move: DelayedMove
    source: Configuration
    target: Configuration
    cost: Rational


@dataclass(frozen=True)
class Run:
    """A finite run with cached weight and duration"""

    initial: Configuration
    steps: tuple[Step, ...] = ()
    weight: Rational = ZERO
    duration: Rational = ZERO

    @property
    def final(self) -> Configuration:
        return self.steps[-1].target if self.steps else self.initial

    def __len__(self):
        return len(self.steps)

    def extend(self, move: DelayedMove, game: WTG) -> Run:
        """Append one delayed move, validating it against the game"""
        source = self.final
        target = apply_move(source, move, game)
        cost = step_cost(game, source.location, move)
        return Run(self.initial, self.steps + (Step(move, source, target, cost),),
                   self.weight + cost, self.duration + move.delay)

    def concat(self, other: Run) -> Run:
        if other.initial != self.final:
            raise StructuralError("runs do not meet: second run starts elsewhere")
        return Run(self.initial, self.steps + other.steps,
                   self.weight + other.weight, self.duration + other.duration)


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[str, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.violations


@dataclass(frozen=True)
class DelayWindow:
    """Set of delays d >= 0 after which a guard holds"""

    low: Rational
    low_open: bool
    high: Rational | None      # None: unbounded
    high_open: bool

    def contains(self, d: Rational) -> bool:
        if d < self.low or (self.low_open and d == self.low):
            return False
        if self.high is None:
            return True
        return d < self.high or (not self.high_open and d == self.high)

    def earliest(self) -> Rational | None:
        return None if self.low_open else self.low

    def latest(self) -> Rational | None:
        if self.high is None or self.high_open:
            return None
        return self.high


def satisfies(valuation: Valuation, guard) -> bool:
    """True iff every constraint of the guard holds at the valuation"""
    return all(constraint.holds(valuation[constraint.clock]) for constraint in guard)


def delay_window(valuation: Valuation, guard) -> DelayWindow | None:
    """Delays d >= 0 with ν + d satisfying the guard, or None when there are none"""
    low, low_open = ZERO, False
    high, high_open = None, False
    for constraint in guard:
        gap = Rational(constraint.bound) - valuation[constraint.clock]
        if constraint.op in (">", ">=", "="):
            is_open = constraint.op == ">"
            if gap > low or (gap == low and is_open):
                low, low_open = gap, is_open
        if constraint.op in ("<", "<=", "="):
            is_open = constraint.op == "<"
            if high is None or gap < high or (gap == high and is_open):
                high, high_open = gap, is_open
    if high is not None:
        if high < low or (high == low and (low_open or high_open)):
            return None
    return DelayWindow(low, low_open, high, high_open)


def earliest_delay(valuation: Valuation, guard) -> Rational | None:
    """Smallest delay after which the guard holds; None if never or not attained"""
    window = delay_window(valuation, guard)
    return None if window is None else window.earliest()


def step_cost(game: WTG, location_id: str, move: DelayedMove) -> Rational:
    transition = game.transition(move.transition)
    return move.delay * game.location(location_id).weight + transition.weight


def apply_move(config: Configuration, move: DelayedMove, game: WTG) -> Configuration:
    """(ℓ, ν) --(d, t)--> (ℓ', (ν + d)[X := 0])"""
    if move.delay < 0:
        raise InvalidDelay(f"negative delay {move.delay}")
    transition = game.transition(move.transition)
    if transition.source != config.location:
        raise StructuralError(
            f"transition {transition.id!r} leaves {transition.source!r}, not {config.location!r}")
    if game.location(config.location).owner is Owner.GOAL:
        raise StructuralError(f"no move is possible from goal {config.location!r}")
    delayed = config.valuation.delay(move.delay)
    if not satisfies(delayed, transition.guard):
        guard = " & ".join(str(c) for c in transition.guard)
        raise GuardViolation(f"{transition.id!r}: guard {guard} fails after delay {move.delay}")
    return Configuration(transition.target, delayed.reset(transition.resets))


def run_weight(run: Run, game: WTG) -> Rational:
    """Σ (d_i · w(ℓ_i) + w(t_i)), recomputed by replaying every step"""
    config = run.initial
    total = ZERO
    for step in run.steps:
        if step.source != config:
            raise StructuralError("run is not contiguous")
        try:
            following = apply_move(config, step.move, game)
        except (GuardViolation, InvalidDelay) as exc:
            raise StructuralError(f"invalid run: {exc}") from exc
        if following != step.target:
            raise StructuralError("run step does not match the game semantics")
        total += step_cost(game, config.location, step.move)
        config = following
    return total


def run_duration(run: Run) -> Rational:
    return sum((step.move.delay for step in run.steps), ZERO)


def has_escape(game: WTG, location_id: str) -> bool:
    """A transition guarded only from below can be taken from every valuation eventually"""
    return any(all(c.op in LOWER_BOUND_OPS for c in t.guard)
               for t in game.outgoing(location_id))


def validate(game: WTG, require_escapes: bool = True) -> ValidationReport:
    """
    List structural problems; never raises

    With require_escapes, every Min or Max location must have a transition
    guarded only from below (see add_deadlock_escapes). Gadget fragments are
    checked without it: they get their escapes once embedded.
    """
    violations = []
    seen = {}
    for loc in game.locations:
        if loc.id in seen:
            if seen[loc.id] is not loc.owner:
                violations.append(f"not turn-based: location {loc.id!r} owned by "
                                  f"{seen[loc.id].value} and {loc.owner.value}")
            else:
                violations.append(f"duplicate location {loc.id!r}")
        seen[loc.id] = loc.owner
        if not isinstance(loc.weight, int) or isinstance(loc.weight, bool):
            violations.append(f"non-integer weight at location {loc.id!r}")
        elif loc.weight < 0:
            violations.append(f"negative weight at location {loc.id!r}")
        elif loc.owner is Owner.GOAL and loc.weight != 0:
            violations.append(f"goal location {loc.id!r} carries weight")

    transition_ids = set()
    for t in game.transitions:
        if t.id in transition_ids:
            violations.append(f"duplicate transition {t.id!r}")
        transition_ids.add(t.id)
        for end in (t.source, t.target):
            if end not in seen:
                violations.append(f"transition {t.id!r} refers to unknown location {end!r}")
        if seen.get(t.source) is Owner.GOAL:
            violations.append(f"goal location {t.source!r} has outgoing transition {t.id!r}")
        if not isinstance(t.weight, int) or isinstance(t.weight, bool):
            violations.append(f"non-integer weight on transition {t.id!r}")
        elif t.weight < 0:
            violations.append(f"negative weight on transition {t.id!r}")
        for c in t.guard:
            if c.clock not in game.clocks:
                violations.append(f"transition {t.id!r} guards unknown clock {c.clock!r}")
            if c.op not in COMPARATORS:
                violations.append(f"transition {t.id!r} uses unknown comparator {c.op!r}")
            if not isinstance(c.bound, int) or isinstance(c.bound, bool) or c.bound < 0:
                violations.append(f"transition {t.id!r}: guard bound {c.bound!r} is not a natural")
        for clock in t.resets:
            if clock not in game.clocks:
                violations.append(f"transition {t.id!r} resets unknown clock {clock!r}")

    if require_escapes:
        for loc in game.locations:
            if loc.owner is not Owner.GOAL and not has_escape(game, loc.id):
                violations.append(f"location {loc.id!r} has no deadlock escape")

    if game.initial not in seen:
        violations.append(f"initial location {game.initial!r} does not exist")
    return ValidationReport(tuple(violations))


def add_deadlock_escapes(game: WTG) -> WTG:
    """
    Give every non-goal location that could get stuck a way out

    MIN locations get an unguarded weight-0 transition to a sink that loops
    forever; MAX locations get one to the goal. Neither is ever worth taking.
    """
    locations = list(game.locations)
    transitions = list(game.transitions)
    if not game.has_location(GOAL_ID):
        locations.append(Location(GOAL_ID, Owner.GOAL))
    needs_sink = False
    for loc in game.locations:
        if loc.owner is Owner.GOAL or loc.id == SINK_ID or has_escape(game, loc.id):
            continue
        target = SINK_ID if loc.owner is Owner.MIN else GOAL_ID
        needs_sink |= loc.owner is Owner.MIN
        transitions.append(TransitionDef(f"{loc.id}{ESCAPE_SUFFIX}", loc.id, target))
    if needs_sink and not game.has_location(SINK_ID):
        locations.append(Location(SINK_ID, Owner.MIN))
        transitions.append(TransitionDef(f"{SINK_ID}{ESCAPE_SUFFIX}", SINK_ID, SINK_ID))
    added = len(transitions) - len(game.transitions)
    logger.debug("added %d escape transitions", added)
    return WTG(game.clocks, tuple(locations), tuple(transitions), game.initial)


# Game file format

def game_document(game: WTG) -> dict:
    return {
        "clocks": list(game.clocks),
        "locations": [{"id": loc.id, "owner": loc.owner.value, "weight": loc.weight}
                      for loc in game.locations],
        "transitions": [
            {
                "id": t.id,
                "source": t.source,
                "target": t.target,
                "guard": [{"clock": c.clock, "op": c.op, "bound": c.bound} for c in t.guard],
                "resets": list(t.resets),
                "weight": t.weight,
            }
            for t in game.transitions
        ],
        "initial": game.initial,
    }


def serialize(game: WTG) -> str:
    return json.dumps(game_document(game), indent=2) + "\n"


def _field(record, key, kind, where):
    if not isinstance(record, dict) or key not in record:
        raise ParseError(f"{where}: missing {key!r} field")
    value = record[key]
    if kind is int and (isinstance(value, bool) or not isinstance(value, int)):
        raise ParseError(f"{where}: {key!r} must be an integer")
    if kind is not int and not isinstance(value, kind):
        raise ParseError(f"{where}: {key!r} must be of type {kind.__name__}")
    return value


def game_from_document(doc) -> WTG:
    if not isinstance(doc, dict):
        raise ParseError("game document must be an object")
    clocks = _field(doc, "clocks", list, "game")
    locations = []
    for i, record in enumerate(_field(doc, "locations", list, "game")):
        where = f"locations[{i}]"
        owner = _field(record, "owner", str, where)
        if owner not in Owner.__members__:
            raise ParseError(f"{where}: unknown owner {owner!r}")
        locations.append(Location(_field(record, "id", str, where), Owner[owner],
                                  _field(record, "weight", int, where)))
    transitions = []
    for i, record in enumerate(_field(doc, "transitions", list, "game")):
        where = f"transitions[{i}]"
        guard = []
        for j, constraint in enumerate(_field(record, "guard", list, where)):
            cwhere = f"{where}.guard[{j}]"
            op = _field(constraint, "op", str, cwhere)
            if op not in COMPARATORS:
                raise ParseError(f"{cwhere}: unknown comparator {op!r}")
            guard.append(ClockConstraint(_field(constraint, "clock", str, cwhere), op,
                                         _field(constraint, "bound", int, cwhere)))
        transitions.append(TransitionDef(
            _field(record, "id", str, where),
            _field(record, "source", str, where),
            _field(record, "target", str, where),
            tuple(guard),
            tuple(_field(record, "resets", list, where)),
            _field(record, "weight", int, where),
        ))
    return WTG(tuple(clocks), tuple(locations), tuple(transitions),
               _field(doc, "initial", str, "game"))


def deserialize(text: str) -> WTG:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, exc.lineno, exc.colno) from exc
    return game_from_document(doc)
