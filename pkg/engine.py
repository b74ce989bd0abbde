#!/usr/bin/env python3
"""
Playing strategy profiles and the restricted grid minimax oracle

Nothing here computes the value of a game. play() reports the cost one
strategy profile produces; grid_minimax() solves the finite game in which
both players only wait multiples of 1/D, which is neither an upper nor a
lower bound of the real value in general.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from enum import Enum

from constants import DEFAULT_GRID_NODE_BUDGET, DEFAULT_STEP_CAP, GRID_STEP_CAP
from errors import DomainError, GuardViolation, InvalidDelay, ResourceExceeded, StrategyFault, StructuralError
from rational import ZERO, Rational, format_rational
from wtg import WTG, Configuration, Owner, Run, satisfies

logger = logging.getLogger(__name__)


class Status(Enum):
    GOAL = "GOAL"
    STEP_CAP = "STEP_CAP"


class Infinity(Enum):
    INFINITE = "INFINITE"


INFINITE = Infinity.INFINITE


@dataclass(frozen=True)
class PlayOutcome:
    """
    status: GOAL or STEP_CAP
    weight: cost of the play; INFINITE when the cap was hit (the run never ends)
    accumulated: finite weight of the trace, kept for diagnostics
    """

    status: Status
    weight: Rational | Infinity
    accumulated: Rational
    duration: Rational
    trace: Run

    @property
    def reached_goal(self) -> bool:
        return self.status is Status.GOAL

    def at_least(self, bound) -> bool:
        return self.weight is INFINITE or self.weight >= bound

    def at_most(self, bound) -> bool:
        return self.weight is not INFINITE and self.weight <= bound

    def above(self, bound) -> bool:
        return self.weight is INFINITE or self.weight > bound


def _player(owner: Owner) -> str:
    return "Min" if owner is Owner.MIN else "Max"


def play(game: WTG, initial: Configuration | None, sigma_min, sigma_max,
         step_cap: int = DEFAULT_STEP_CAP, observers=()) -> PlayOutcome:
    """
    Run the unique play of a strategy profile

    Args:
        game: the game
        initial: start configuration (the game's initial location at 0 when None)
        sigma_min, sigma_max: objects with decide(game, run) and observe(game, run)
        step_cap: maximal number of moves
        observers: extra objects whose observe(game, run) sees every prefix

    Returns:
        PlayOutcome

    Raises:
        StrategyFault: a strategy picked a move that is not valid
    """
    if step_cap < 1:
        raise DomainError("step_cap must be at least 1")
    run = Run(initial or game.initial_configuration())
    watchers = (sigma_min, sigma_max, *observers)
    for watcher in watchers:
        watcher.observe(game, run)

    while len(run) < step_cap:
        location = game.location(run.final.location)
        if location.owner is Owner.GOAL:
            break
        strategy = sigma_min if location.owner is Owner.MIN else sigma_max
        player = _player(location.owner)
        step = len(run) + 1
        try:
            move = strategy.decide(game, run)
            run = run.extend(move, game)
        except (GuardViolation, InvalidDelay, StructuralError) as exc:
            raise StrategyFault(player, step, str(exc)) from exc
        for watcher in watchers:
            watcher.observe(game, run)

    if game.location(run.final.location).owner is Owner.GOAL:
        outcome = PlayOutcome(Status.GOAL, run.weight, run.weight, run.duration, run)
    else:
        outcome = PlayOutcome(Status.STEP_CAP, INFINITE, run.weight, run.duration, run)
    logger.debug("play ended with %s after %d moves, weight %s", outcome.status.value,
                 len(run), _weight_text(outcome.weight))
    return outcome


def _weight_text(weight) -> str:
    return "INFINITE" if weight is INFINITE else format_rational(weight)


def _valuation_text(valuation) -> str:
    return " ".join(f"{clock}={format_rational(value)}" for clock, value in valuation.values)


def render_trace(run: Run, game: WTG) -> str:
    """One line per step: location, owner, delay, transition, step cost, total, valuation after"""
    lines = [f"start {run.initial.location} {_valuation_text(run.initial.valuation)}"]
    total = ZERO
    for i, step in enumerate(run.steps, start=1):
        total += step.cost
        owner = game.location(step.source.location).owner.value
        lines.append(
            f"{i:>4} {step.source.location:<28} {owner:<4} "
            f"delay={format_rational(step.move.delay):<12} via {step.move.transition:<32} "
            f"cost={format_rational(step.cost):<14} total={format_rational(total):<14} "
            f"{_valuation_text(step.target.valuation)}"
        )
    return "\n".join(lines) + "\n"


def trace_document(outcome: PlayOutcome, game: WTG) -> dict:
    """Machine-readable trace, rationals as 'numerator/denominator' strings"""
    run = outcome.trace
    steps = []
    total = ZERO
    for step in run.steps:
        total += step.cost
        steps.append({
            "location": step.source.location,
            "owner": game.location(step.source.location).owner.value,
            "delay": format_rational(step.move.delay),
            "transition": step.move.transition,
            "cost": format_rational(step.cost),
            "total": format_rational(total),
            "valuation": {c: format_rational(v) for c, v in step.target.valuation.values},
        })
    return {
        "initial": {
            "location": run.initial.location,
            "valuation": {c: format_rational(v) for c, v in run.initial.valuation.values},
        },
        "steps": steps,
        "status": outcome.status.value,
        "weight": _weight_text(outcome.weight),
        "accumulated": format_rational(outcome.accumulated),
        "duration": format_rational(outcome.duration),
    }


# Restricted game oracle

_INF = (True, ZERO)


def _can_reach_goal(game: WTG) -> set[str]:
    alive = {loc.id for loc in game.locations if loc.owner is Owner.GOAL}
    changed = True
    while changed:
        changed = False
        for t in game.transitions:
            if t.target in alive and t.source not in alive:
                alive.add(t.source)
                changed = True
    return alive


def grid_minimax(game: WTG, initial: Configuration | None = None, denominator: int = 1,
                 horizon=1, step_cap: int = GRID_STEP_CAP,
                 node_budget: int = DEFAULT_GRID_NODE_BUDGET) -> Rational | Infinity:
    """
    Exact minimax value when every delay is a multiple of 1/denominator

    Backward induction over the explicit game tree, memoised on
    (configuration, elapsed time, depth). Total waiting is capped by horizon;
    plays that cannot reach a goal within step_cap moves are worth INFINITE.

    Raises:
        ResourceExceeded: more than node_budget distinct nodes
    """
    if denominator < 1:
        raise DomainError("the grid denominator must be at least 1")
    initial = initial or game.initial_configuration()
    grid = Rational(1, denominator)
    horizon = Rational(horizon)
    alive = _can_reach_goal(game)
    memo = {}

    def value(config, elapsed, depth):
        location = game.location(config.location)
        if location.owner is Owner.GOAL:
            return (False, ZERO)
        if depth >= step_cap or config.location not in alive:
            return _INF
        key = (config, elapsed, depth)
        if key in memo:
            return memo[key]
        if len(memo) >= node_budget:
            raise ResourceExceeded(node_budget)
        memo[key] = _INF
        options = []
        for i in range((horizon - elapsed) // grid + 1):
            d = i * grid
            shifted = config.valuation.delay(d)
            for t in game.outgoing(config.location):
                if not satisfies(shifted, t.guard):
                    continue
                infinite, rest = value(Configuration(t.target, shifted.reset(t.resets)),
                                       elapsed + d, depth + 1)
                options.append(_INF if infinite else (False, rest + d * location.weight + t.weight))
        if not options:
            result = _INF
        elif location.owner is Owner.MIN:
            result = min(options)
        else:
            result = max(options)
        memo[key] = result
        return result

    infinite, result = value(initial, ZERO, 0)
    logger.debug("grid minimax explored %d nodes", len(memo))
    return INFINITE if infinite else result
