#!/usr/bin/env python3
"""
Min and Max strategies for compiled games

Every strategy is deterministic: decide() depends only on the observed
prefix, and the internal state (position on the machine trajectory, number
of simulation waits, the active control module) is advanced in observe(),
which the engine calls on every prefix of the play.
"""

from __future__ import annotations

import logging
import random
import re
from dataclasses import dataclass, replace

from constants import (
    ALPHA, CLOCK_X, CLOCK_Y, CZ_RATE, DEFAULT_N, DEFAULT_STOP_PROBABILITY, RANDOM_WAIT_STEPS,
    STATE_WEIGHT,
)
from compiler import CompilationResult, Variant
from counter_machine import Inc, MachineTrajectory, mu_nonzero, mu_zero, nearest_member
from errors import DomainError, ParseError, StructuralError
from gadgets import CONTINUE, STOP_LOWER, STOP_UPPER, GadgetHandle, GadgetKind, forced_move
from rational import ONE, ZERO, Q, Rational, parse_rational
from wtg import WTG, Configuration, DelayedMove, Owner, Run, Valuation, delay_window, satisfies

logger = logging.getLogger(__name__)

CONTROL_KINDS = (GadgetKind.CZ, GadgetKind.CNZ)
HONEST_SUFFIXES = (".continue", ".accept")
_POWER = re.compile(r"^\s*([+-]?)(\d+)\^-(\d+)\s*$")


def default_move(game: WTG, config: Configuration) -> DelayedMove:
    """Forced move of a single-choice location; the escape when nothing else is possible"""
    options = [t for t in game.outgoing(config.location) if not t.is_escape]
    try:
        return forced_move(game, config)
    except StructuralError:
        escape = next((t for t in game.outgoing(config.location) if t.is_escape), None)
        if escape is None or len(options) > 1:
            raise
        return DelayedMove(ZERO, escape.id)


def best_stop(handle: GadgetHandle, a, b, t=ZERO) -> str:
    """The stop resolution with the larger contract cost; ties go to STOP-UPPER"""
    upper = handle.contract[STOP_UPPER].evaluate(a, b, t)
    lower = handle.contract[STOP_LOWER].evaluate(a, b, t)
    return STOP_UPPER if upper >= lower else STOP_LOWER


def entry_mu(handle: GadgetHandle, valuation: Valuation) -> Rational:
    """Distance of the control module's entry value a = 1 - x + y to its family"""
    a = ONE - valuation[CLOCK_X] + valuation[CLOCK_Y]
    if not 0 < a <= 1:
        return ZERO
    if handle.kind is GadgetKind.CZ:
        return mu_zero(a, handle.params.k)
    return mu_nonzero(a, handle.params.k)


@dataclass(frozen=True)
class SimBookkeeping:
    """Quantities at the p-th state-location entry; t and eps are filled at entry p + 1"""

    p: int
    a: Rational
    C: Rational
    E: Rational
    t: Rational | None = None
    eps: Rational | None = None


@dataclass(frozen=True)
class CzBookkeeping:
    """One multiplication round inside a control module, seen from Max's decision point"""

    p: int
    a: Rational
    C: Rational
    E: Rational             # C - 30 - 27 a
    t: Rational
    eps: Rational
    factor: int
    eta: Rational           # |t - (factor - 1) a|


class Progress:
    """p: state-location entries so far; waits: simulation waits (moves into a CEC) so far"""

    def __init__(self, result: CompilationResult):
        self.result = result
        self.p = 0
        self.waits = 0
        self.cec_entries = frozenset(h.entry for hs in result.module_index.values()
                                     for h in hs if h.kind is GadgetKind.CEC)

    def advance(self, run: Run):
        if not run.steps:
            self.p = 1 if self.result.state_at(run.initial.location) is not None else 0
            self.waits = 0
            return
        target = run.steps[-1].target.location
        if self.result.state_at(target) is not None:
            self.p += 1
        if target in self.cec_entries:
            self.waits += 1


class Strategy:
    """Deterministic strategy: decide() picks the next move, observe() sees every prefix"""

    player = "Min"

    def decide(self, game: WTG, run: Run) -> DelayedMove:
        return default_move(game, run.final)

    def observe(self, game: WTG, run: Run):
        pass


class HonestMax(Strategy):
    """Never waits; always continues a CEC or CM and accepts every branch claim"""

    player = "Max"

    def decide(self, game, run):
        for t in game.outgoing(run.final.location):
            if t.id.endswith(HONEST_SUFFIXES):
                return DelayedMove(ZERO, t.id)
        return default_move(game, run.final)


class ControlMin(Strategy):
    """
    Min inside a CZ or CNZ module

    The entry picks the flag4 shortcut when 0 < 1 - a <= (3 - k)/(8 - 2k)
    (CZ only). From flag1 Min multiplies y towards the closest member of the
    module's family and leaves at y = 1.
    """

    def __init__(self, handle: GadgetHandle):
        if handle.kind not in CONTROL_KINDS:
            raise DomainError(f"{handle.kind.value} is not a control module")
        self.handle = handle
        self.k = handle.params.k
        self.prefix = handle.prefix
        if handle.kind is GadgetKind.CZ:
            self._bases = (4 - self.k, 5)
            self._flags = ("flag3", "flag2")
        else:
            self._bases = (self.k + 1, 4 - self.k, 5)
            self._flags = ("flag5", "flag3", "flag2")

    def plan(self, y: Rational) -> tuple[str, Rational]:
        """Flag to take from flag1 at this y, and the y it should reach"""
        member, exponents, _ = nearest_member(y, self._bases)
        named = dict(zip(self._flags, exponents))
        for flag in ("flag3", "flag2", "flag5"):
            if named.get(flag, 0) >= 1:
                return flag, self.handle.factors[flag] * member
        return "flag3", ONE

    def decide(self, game, run):
        config = run.final
        location = config.location
        x, y = config.valuation[CLOCK_X], config.valuation[CLOCK_Y]
        anchors = self.handle.anchors
        p = self.prefix

        if location == anchors["entry"]:
            a = ONE - x + y
            move = "translate"
            if self.handle.kind is GadgetKind.CZ and 0 < 1 - a <= Q(3 - self.k, 8 - 2 * self.k):
                move = "direct"
            return DelayedMove(max(ZERO, ONE - x), f"{p}.{move}")
        if location == anchors["flag1"]:
            if y == 1:
                return DelayedMove(ZERO, f"{p}.flag1.goal")
            flag, _ = self.plan(y)
            return DelayedMove(ZERO, f"{p}.to_{flag}")
        if location == anchors.get("force"):
            member = nearest_member(y, self._bases, require_first=True)[0]
            return DelayedMove(max(ZERO, (self.k + 1) * member - y), f"{p}.force.go")
        for flag in self._flags:
            if location == anchors[flag]:
                _, target = self.plan(y)
                return DelayedMove(max(ZERO, target - y), f"{p}.{flag}.go")
        return default_move(game, config)


class ControlMax(Strategy):
    """
    Max inside a CZ or CNZ module

    Never waits. At an inner CM it stops, on the costlier path, as soon as
    eta = |t - (factor - 1) a| is positive and at least mu.
    """

    player = "Max"

    def __init__(self, handle: GadgetHandle, mu: Rational, cost_offset: Rational = ZERO):
        self.handle = handle
        self.mu = Rational(mu)
        self.cost_offset = Rational(cost_offset)
        self.bookkeeping: list[CzBookkeeping] = []

    def decide(self, game, run):
        config = run.final
        part = self.handle.part_at(config.location)
        if part is None or config.location != part.entry:
            return HonestMax().decide(game, run)
        big, small = part.roles
        a = config.valuation[big] - config.valuation[small]
        t = config.valuation[small]
        factor = part.params.k // part.params.beta
        eta = abs(t - (factor - 1) * a)
        cost = run.weight + self.cost_offset - CZ_RATE * t
        self.bookkeeping.append(CzBookkeeping(len(self.bookkeeping) + 1, a, cost,
                                              cost - STATE_WEIGHT - CZ_RATE * a, t, ZERO, factor, eta))
        if eta > 0 and eta >= self.mu:
            resolution = best_stop(part, a, t)
            logger.debug("%s: eta %s >= mu %s, taking %s", part.prefix, eta, self.mu, resolution)
            return DelayedMove(ZERO, part.resolutions[resolution])
        return DelayedMove(ZERO, part.resolutions[CONTINUE])


class FaithfulMin(Strategy):
    """
    Min simulating the machine

    At the p-th state location Min exits when 1 - x < 1/30^N (threshold
    first), or when the wait to the next encoding would be negative;
    otherwise it waits until x encodes the next configuration. Branch claims
    follow the true trajectory. At the halting state it takes the soft exit
    when there is one.
    """

    def __init__(self, result: CompilationResult, exit_threshold: int | None = DEFAULT_N):
        self.result = result
        self.machine = result.machine
        self.exit_threshold = exit_threshold
        self.progress = Progress(result)
        self.trajectory = MachineTrajectory(result.machine)
        self.control: ControlMin | None = None

    def observe(self, game, run):
        self.progress.advance(run)

    def target(self) -> Rational | None:
        """Encoding of the next configuration on the trajectory"""
        following = self.trajectory.config(self.progress.p)
        return None if following is None else following.encoding(self.progress.p)

    def _at_state(self, state: str, x: Rational) -> DelayedMove:
        leave = DelayedMove(ZERO, f"{state}.to_exit")
        if state == self.machine.halt:
            if self.result.exits[state][1] is not None:
                return DelayedMove(ZERO, f"{state}.to_soft_exit")
            return leave
        if self.exit_threshold is not None and ONE - x < Rational(1, ALPHA ** self.exit_threshold):
            return leave
        target = self.target()
        if target is None or target < x:
            return leave
        transition = self.machine.transition(state)
        if isinstance(transition, Inc):
            return DelayedMove(target - x, f"{state}.enter")
        truth = self.trajectory.config(self.progress.p - 1)
        side = "zero" if truth.counter(transition.counter) == 0 else "nonzero"
        return DelayedMove(ZERO, f"{state}.choose_{side}")

    def decide(self, game, run):
        config = run.final
        location = config.location
        x = config.valuation[CLOCK_X]
        state = self.result.state_at(location)
        if state is not None:
            return self._at_state(state, x)
        branch = self.result.branch_by_wait(location)
        if branch is not None:
            target = self.target()
            if target is None:
                raise StructuralError(f"no configuration to encode at {location!r}")
            return DelayedMove(max(ZERO, target - x), f"{location}.go")
        module = self.result.module_at(location)
        if module is not None and module.kind in CONTROL_KINDS:
            if self.control is None or self.control.handle is not module:
                self.control = ControlMin(module)
            return self.control.decide(game, run)
        return default_move(game, config)


class PunisherMax(Strategy):
    """
    Max checking the simulation

    Never waits. Diverts a branch claim that contradicts the machine, accepts
    a CEC iff |b - (1 - beta/30)(1 - a)| < 1/30^(5N+1) and otherwise stops on
    the costlier path. Inside a control module it plays ControlMax.
    """

    player = "Max"

    def __init__(self, result: CompilationResult, n: int = DEFAULT_N):
        self.result = result
        self.n = n
        self.threshold = Rational(1, ALPHA ** (5 * n + 1))
        self.progress = Progress(result)
        self.trajectory = MachineTrajectory(result.machine)
        self.control: ControlMax | None = None
        self.punishments: list[tuple[str, str]] = []

    def observe(self, game, run):
        self.progress.advance(run)
        config = run.final
        module = self.result.module_at(config.location)
        if module is not None and module.kind in CONTROL_KINDS and config.location == module.entry:
            self.control = ControlMax(module, entry_mu(module, config.valuation))

    def _judge(self, handle: GadgetHandle, valuation: Valuation) -> DelayedMove:
        a = valuation[CLOCK_X] - valuation[CLOCK_Y]
        b = valuation[CLOCK_Y]
        gamma = ONE - Q(handle.params.beta, handle.params.alpha)
        deviation = abs(b - gamma * (1 - a))
        if deviation < self.threshold:
            return DelayedMove(ZERO, handle.resolutions[CONTINUE])
        resolution = best_stop(handle, a, b)
        self.punishments.append((handle.prefix, resolution))
        logger.debug("%s: deviation %s, punishing with %s", handle.prefix, deviation, resolution)
        return DelayedMove(ZERO, handle.resolutions[resolution])

    def decide(self, game, run):
        config = run.final
        location = config.location
        branch = self.result.branches.get(location)
        if branch is not None:
            truth = self.trajectory.config(self.progress.p - 1)
            if truth is not None and (truth.counter(branch.counter) == 0) != branch.zero:
                self.punishments.append((branch.control.prefix, "DIVERT"))
                logger.debug("%s: wrong claim, diverting", location)
                return DelayedMove(ZERO, branch.divert)
            return DelayedMove(ZERO, branch.accept)
        module = self.result.module_at(location)
        if module is not None and module.kind is GadgetKind.CEC and location == module.entry:
            return self._judge(module, config.valuation)
        if module is not None and module.kind in CONTROL_KINDS and self.control is not None:
            return self.control.decide(game, run)
        return HonestMax().decide(game, run)


class CheatingMin(Strategy):
    """
    A faithful Min with planned mistakes

    Step p is the p-th simulation wait. perturbations adds a delta to the wait
    of step p, flips inverts the branch claim made before step p, exit_at
    leaves through the exit instead of performing step p and idle_at waits at
    the state location until x = 1 before step p, then tries the exit.
    """

    def __init__(self, base: FaithfulMin, perturbations=None, flips=(), exit_at: int | None = None,
                 idle_at: int | None = None):
        self.base = base
        self.result = base.result
        self.perturbations = {int(p): Rational(d) for p, d in (perturbations or {}).items()}
        self.flips = frozenset(flips)
        self.exit_at = exit_at
        self.idle_at = idle_at
        self.progress = Progress(base.result)

    def observe(self, game, run):
        self.base.observe(game, run)
        self.progress.advance(run)

    def _idle(self, game, config: Configuration, state: str, move: DelayedMove) -> DelayedMove:
        """The exit if it is still open at x = 1, else the planned move, else the escape"""
        delay = max(ZERO, ONE - config.valuation[CLOCK_X])
        later = config.valuation.delay(delay)
        candidates = [f"{state}.to_exit", move.transition]
        candidates += [t.id for t in game.outgoing(config.location) if t.is_escape]
        for transition_id in candidates:
            if satisfies(later, game.transition(transition_id).guard):
                return DelayedMove(delay, transition_id)
        return DelayedMove(delay, move.transition)

    def decide(self, game, run):
        move = self.base.decide(game, run)
        index = self.progress.waits + 1
        state = self.result.state_at(run.final.location)
        if state is not None and self.idle_at == index:
            return self._idle(game, run.final, state, move)
        if state is not None and self.exit_at == index and not move.transition.endswith("exit"):
            return DelayedMove(ZERO, f"{state}.to_exit")
        if index in self.flips:
            if move.transition.endswith(".choose_zero"):
                return replace(move, transition=move.transition[:-len("zero")] + "nonzero")
            if move.transition.endswith(".choose_nonzero"):
                return replace(move, transition=move.transition[:-len("nonzero")] + "zero")
        if index in self.perturbations and game.transition(move.transition).target in self.progress.cec_entries:
            return replace(move, delay=move.delay + self.perturbations[index])
        return move


class RandomMax(Strategy):
    """
    Seeded Max sampling the options a real opponent has

    Picks the honest option except with probability stop_probability, when
    it picks one of the others uniformly; waits r/100 of the delay budget the
    chosen guard leaves, r uniform in 0..10.
    """

    player = "Max"

    def __init__(self, seed: int, stop_probability=DEFAULT_STOP_PROBABILITY):
        self.seed = seed
        self.rng = random.Random(seed)
        self.stop_probability = stop_probability

    def decide(self, game, run):
        config = run.final
        options = [t for t in game.outgoing(config.location) if not t.is_escape]
        honest = [t for t in options if t.id.endswith(HONEST_SUFFIXES)]
        if not honest:
            return default_move(game, config)
        others = [t for t in options if t not in honest]
        chosen = honest[0]
        numerator, denominator = self.stop_probability
        if others and self.rng.randrange(denominator) < numerator:
            chosen = self.rng.choice(others)
        fraction = Rational(self.rng.randint(0, RANDOM_WAIT_STEPS), 100)
        window = delay_window(config.valuation, chosen.guard)
        delay = ZERO
        if window is not None and window.earliest() is not None:
            latest = window.latest()
            delay = window.low if latest is None else window.low + fraction * (latest - window.low)
        return DelayedMove(delay, chosen.id)


class BookkeepingTracker:
    """
    Observer recording (a_p, C_p, E_p, t_p, eps_p) at every state-location entry

    Min's waits count towards t, Max's towards eps; on each entry the
    recurrences a' = a + t + eps, C' = C + 30 t and E' = E - 30 eps are
    checked and any mismatch is appended to violations.
    """

    def __init__(self, result: CompilationResult):
        self.result = result
        self.records: list[SimBookkeeping] = []
        self.violations: list[str] = []
        self._t = ZERO
        self._eps = ZERO

    def _enter(self, config: Configuration, weight: Rational):
        a = config.valuation[CLOCK_X]
        record = SimBookkeeping(len(self.records) + 1, a, weight, weight - STATE_WEIGHT * a)
        if self.records:
            previous = replace(self.records[-1], t=self._t, eps=self._eps)
            self.records[-1] = previous
            checks = (
                ("a", previous.a + self._t + self._eps, a),
                ("C", previous.C + STATE_WEIGHT * self._t, weight),
                ("E", previous.E - STATE_WEIGHT * self._eps, record.E),
            )
            for name, expected, observed in checks:
                if expected != observed:
                    self.violations.append(f"p={record.p}: {name} is {observed}, recurrence gives {expected}")
        self.records.append(record)
        self._t = self._eps = ZERO

    def observe(self, game, run):
        if not run.steps:
            self.records, self.violations = [], []
            self._t = self._eps = ZERO
            if self.result.state_at(run.initial.location) is not None:
                self._enter(run.initial, ZERO)
            return
        step = run.steps[-1]
        if game.location(step.source.location).owner is Owner.MIN:
            self._t += step.move.delay
        else:
            self._eps += step.move.delay
        if self.result.state_at(step.target.location) is not None:
            self._enter(step.target, run.weight)


# Factories

def honest_max() -> HonestMax:
    return HonestMax()


def faithful_min(result: CompilationResult, exit_threshold: int | None = DEFAULT_N) -> FaithfulMin:
    return FaithfulMin(result, exit_threshold)


def punisher_max(result: CompilationResult, n: int = DEFAULT_N) -> PunisherMax:
    return PunisherMax(result, n)


def cz_min_strategy(handle: GadgetHandle) -> ControlMin:
    return ControlMin(handle)


def cz_max_strategy(handle: GadgetHandle, mu, cost_offset=ZERO) -> ControlMax:
    return ControlMax(handle, mu, cost_offset)


def cheating_min(base: FaithfulMin, perturbations=None, flips=(), exit_at=None,
                 idle_at=None) -> CheatingMin:
    return CheatingMin(base, perturbations, flips, exit_at, idle_at)


def random_max(seed: int, stop_probability=DEFAULT_STOP_PROBABILITY) -> RandomMax:
    return RandomMax(seed, stop_probability)


# Command-line strategy descriptions

def parse_delta(text: str) -> Rational:
    """'p/q', or '[+-]B^-E' for +-1/B^E"""
    match = _POWER.match(text)
    if match:
        sign, base, exponent = match.groups()
        value = Rational(1, int(base) ** int(exponent))
        return -value if sign == "-" else value
    return parse_rational(text)


def parse_cheat(text: str) -> dict:
    """
    Read 'cheat:' items into cheating_min keyword arguments

    Items are comma separated: '<p>=<delta>' perturbs step p, 'flip@<p>'
    inverts the claim before step p, 'exit@<p>' exits instead of step p and
    'idle@<p>' idles at the state location until x = 1 before step p.
    """
    perturbations, flips, exit_at, idle_at = {}, set(), None, None
    for item in filter(None, (part.strip() for part in text.split(","))):
        if item.startswith("flip@"):
            flips.add(int(item[5:]))
        elif item.startswith("exit@"):
            exit_at = int(item[5:])
        elif item.startswith("idle@"):
            idle_at = int(item[5:])
        elif "=" in item:
            step, delta = item.split("=", 1)
            perturbations[int(step)] = parse_delta(delta)
        else:
            raise ParseError(f"unknown cheat item {item!r}")
    return {"perturbations": perturbations, "flips": frozenset(flips), "exit_at": exit_at,
            "idle_at": idle_at}


def min_from_text(text: str, result: CompilationResult, n: int = DEFAULT_N) -> Strategy:
    threshold = n if result.variant is Variant.VALUE else None
    if text == "faithful":
        return faithful_min(result, threshold)
    if text.startswith("cheat:"):
        try:
            plan = parse_cheat(text[len("cheat:"):])
        except ValueError as exc:
            raise ParseError(f"bad cheat description {text!r}: {exc}") from exc
        return cheating_min(faithful_min(result, threshold), **plan)
    raise ParseError(f"unknown Min strategy {text!r}")


def max_from_text(text: str, result: CompilationResult, n: int = DEFAULT_N) -> Strategy:
    if text == "honest":
        return honest_max()
    if text == "punisher":
        return punisher_max(result, n)
    if text.startswith("random:"):
        try:
            return random_max(int(text[len("random:"):]))
        except ValueError as exc:
            raise ParseError(f"bad seed in {text!r}") from exc
    raise ParseError(f"unknown Max strategy {text!r}")
