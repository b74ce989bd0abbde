import pytest

from compiler import Variant, cec_params, compile_machine
from conftest import load_machine
from counter_machine import encode, parse_machine
from engine import INFINITE, Status, play
from errors import DomainError, GuardViolation, ParseError
from gadgets import STOP_LOWER, STOP_UPPER, build_cec, build_cm, build_cz, build_cnz, inner_cm_params
from rational import ONE, ZERO, Q
from strategies import (
    BookkeepingTracker, ControlMin, FaithfulMin, PunisherMax, RandomMax, Strategy, best_stop,
    cheating_min, cz_max_strategy, cz_min_strategy, entry_mu, faithful_min, honest_max,
    max_from_text, min_from_text, parse_cheat, parse_delta, punisher_max, random_max,
)
from wtg import (
    ClockConstraint, Configuration, DelayedMove, Owner, Run, Valuation, add_deadlock_escapes,
    apply_move, satisfies,
)


def compiled(name, variant=Variant.VALUE):
    return compile_machine(load_machine(name), variant)


def control_outcome(handle, a, mu=ZERO):
    start = Configuration(handle.entry, Valuation.of(x=1 - a, y=0))
    sigma_max = cz_max_strategy(handle, mu, 30 * (1 - a))
    return play(handle.game(), start, cz_min_strategy(handle), sigma_max), sigma_max


@pytest.mark.parametrize("name, expected", [
    ("inc-halt", Q(611, 10)),
    ("inc-inc-halt", 61 + Q(1, 150)),
    ("inc-test-dec-halt", 61 + Q(1, 125)),
])
def test_faithful_simulation_cost(name, expected):
    result = compiled(name)
    outcome = play(result.game, None, faithful_min(result), honest_max())
    assert outcome.weight == expected
    assert outcome.duration <= 3


def test_bookkeeping_follows_the_encoding():
    result = compiled("inc-test-dec-halt")
    tracker = BookkeepingTracker(result)
    play(result.game, None, faithful_min(result), honest_max(), observers=(tracker,))
    assert [r.a for r in tracker.records] == [0, Q(9, 10), Q(24, 25), Q(124, 125)]
    assert [r.a for r in tracker.records] == [encode(0, 0, 0), encode(1, 0, 1),
                                              encode(0, 0, 2), encode(0, 0, 3)]
    assert all(r.E == 0 for r in tracker.records)
    assert [r.eps for r in tracker.records[:-1]] == [0, 0, 0]
    assert tracker.records[1].t == Q(3, 50)
    assert tracker.violations == []


@pytest.mark.parametrize("n, expected", [
    (1, 61 + Q(1, 100)),
    (2, 61 + Q(1, 1000)),
    (3, 61 + Q(1, 10**5)),
])
def test_faithful_min_exits_a_loop_once_x_is_close_to_one(n, expected):
    result = compiled("loop")
    outcome = play(result.game, None, faithful_min(result, n), punisher_max(result, n))
    assert outcome.reached_goal
    assert outcome.weight == expected


def test_existence_faithful_min_takes_the_soft_exit():
    result = compiled("inc-halt", Variant.EXISTENCE)
    outcome = play(result.game, None, faithful_min(result, None), honest_max())
    assert outcome.weight == 61
    assert "q1.to_soft_exit" in [s.move.transition for s in outcome.trace.steps]


def test_punisher_leaves_a_faithful_simulation_alone():
    result = compiled("inc-test-dec-halt")
    sigma_max = punisher_max(result)
    outcome = play(result.game, None, faithful_min(result), sigma_max)
    assert outcome.weight == 61 + Q(1, 125)
    assert sigma_max.punishments == []


@pytest.mark.parametrize("delta, resolution", [
    (Q(1, 30**10), STOP_LOWER),
    (-Q(1, 30**10), STOP_UPPER),
])
def test_punisher_catches_a_perturbed_wait(delta, resolution):
    result = compiled("inc-inc-halt")
    sigma_max = punisher_max(result, 2)
    cheater = cheating_min(faithful_min(result, 2), {1: delta})
    outcome = play(result.game, None, cheater, sigma_max)
    assert outcome.weight == 61 + Q(1, 30**9)
    assert sigma_max.punishments == [("q0.inc", resolution)]


def test_punisher_accepts_tiny_deviations():
    result = compiled("inc-inc-halt")
    sigma_max = punisher_max(result, 2)
    cheater = cheating_min(faithful_min(result, 2), {1: Q(1, 30**12)})
    outcome = play(result.game, None, cheater, sigma_max)
    assert sigma_max.punishments == []
    assert outcome.weight == 61 + Q(1, 150)


def test_zero_perturbation_changes_nothing():
    result = compiled("inc-inc-halt")
    base = play(result.game, None, faithful_min(result), punisher_max(result))
    same = play(result.game, None, cheating_min(faithful_min(result), {1: ZERO}), punisher_max(result))
    assert base.trace == same.trace


@pytest.mark.parametrize("step, expected", [(1, Q(62)), (2, 61 + Q(1, 10))])
def test_early_exit(step, expected):
    result = compiled("inc-inc-halt")
    cheater = cheating_min(faithful_min(result), exit_at=step)
    outcome = play(result.game, None, cheater, punisher_max(result))
    assert outcome.weight == expected


@pytest.mark.parametrize("step, control, expected", [
    (2, "q1.zero.cz", 61 + Q(1, 30)),
    (3, "q1.nonzero.cnz", 61 + Q(1, 300)),
])
def test_wrong_claims_are_diverted(step, control, expected):
    result = compiled("inc-test-dec-halt")
    sigma_max = punisher_max(result)
    cheater = cheating_min(faithful_min(result), flips={step})
    outcome = play(result.game, None, cheater, sigma_max)
    assert outcome.weight == expected
    assert sigma_max.punishments[0] == (control, "DIVERT")
    assert sigma_max.control.bookkeeping[-1].eta >= sigma_max.control.mu > 0


def test_decisions_depend_only_on_the_prefix():
    result = compiled("inc-test-dec-halt")
    game = result.game
    trace = play(game, None, faithful_min(result), honest_max()).trace
    prefixes = [Run(trace.initial)]
    for step in trace.steps:
        prefixes.append(prefixes[-1].extend(step.move, game))
    for i, step in enumerate(trace.steps):
        if game.location(step.source.location).owner is not Owner.MIN:
            continue
        fresh = FaithfulMin(result)
        for prefix in prefixes[:i + 1]:
            fresh.observe(game, prefix)
        assert fresh.decide(game, prefixes[i]) == step.move


@pytest.mark.parametrize("k, a, weight", [
    (1, Q(1, 5), 37),
    (1, Q(1, 3), 41),
    (1, Q(4, 5), 56),
    (2, Q(1, 2), 46),
])
def test_zero_control_from_a_member(k, a, weight):
    outcome, _ = control_outcome(build_cz(k), a)
    assert outcome.weight == weight
    assert outcome.weight + 30 * (1 - a) in (61, 62)


def test_zero_control_punishes_a_non_member():
    handle = build_cz(1)
    a = Q(1, 10)
    mu = entry_mu(handle, Valuation.of(x=1 - a, y=0))
    assert mu == Q(1, 90)
    outcome, sigma_max = control_outcome(handle, a, mu)
    assert outcome.weight + 27 == 61 + Q(1, 30)
    record = sigma_max.bookkeeping[0]
    assert (record.a, record.t, record.factor, record.eta) == (Q(1, 10), Q(7, 30), 3, Q(1, 30))
    assert record.E == 0


def test_non_zero_control():
    handle = build_cnz(1)
    outcome, _ = control_outcome(handle, Q(1, 2))
    assert outcome.weight + 15 == 61
    a = Q(1, 25)
    outcome, _ = control_outcome(handle, a, entry_mu(handle, Valuation.of(x=1 - a, y=0)))
    assert outcome.weight + 30 * (1 - a) == 61 + Q(1, 300)


def test_control_plan():
    zero = ControlMin(build_cz(1))
    assert zero.plan(Q(1, 10)) == ("flag3", Q(1, 3))
    assert zero.plan(Q(1, 5)) == ("flag2", 1)
    assert zero.plan(Q(1, 45)) == ("flag3", Q(1, 15))
    assert zero.plan(Q(9, 10)) == ("flag3", 1)
    non_zero = ControlMin(build_cnz(1))
    assert non_zero.plan(Q(1, 2)) == ("flag5", 1)
    with pytest.raises(DomainError):
        ControlMin(build_cec(cec_params(3)))


def test_best_stop_ties_go_upper():
    handle = build_cm(inner_cm_params(3, 0))
    # both stop paths cost the same when b = (factor - 1) a
    assert best_stop(handle, Q(1, 10), Q(1, 5)) == STOP_UPPER
    assert best_stop(handle, Q(1, 10), Q(7, 30)) == STOP_LOWER
    assert best_stop(handle, Q(1, 10), Q(1, 6)) == STOP_UPPER


def test_random_max_is_reproducible():
    result = compiled("inc-test-dec-halt")
    first = play(result.game, None, faithful_min(result), random_max(7), step_cap=400)
    second = play(result.game, None, faithful_min(result), random_max(7), step_cap=400)
    assert first.trace == second.trace
    assert isinstance(max_from_text("random:7", result), RandomMax)


def test_cheat_descriptions():
    assert parse_delta("+30^-10") == Q(1, 30**10)
    assert parse_delta("-2^-3") == Q(-1, 8)
    assert parse_delta("3/7") == Q(3, 7)
    plan = parse_cheat("1=+30^-10, flip@2,exit@3")
    assert plan == {"perturbations": {1: Q(1, 30**10)}, "flips": frozenset({2}), "exit_at": 3,
                    "idle_at": None}
    assert parse_cheat("idle@2")["idle_at"] == 2
    with pytest.raises(ParseError):
        parse_cheat("jump@2")


def test_strategies_from_text():
    result = compiled("inc-halt")
    assert isinstance(max_from_text("punisher", result, 3), PunisherMax)
    assert max_from_text("punisher", result, 3).n == 3
    assert min_from_text("faithful", result).exit_threshold == 2
    existence = compiled("inc-halt", Variant.EXISTENCE)
    assert min_from_text("faithful", existence).exit_threshold is None
    assert min_from_text("cheat:exit@1", result).exit_at == 1
    assert min_from_text("cheat:idle@2", result).idle_at == 2
    for bad in ("lazy", "cheat:flip@x"):
        with pytest.raises(ParseError):
            min_from_text(bad, result)
    for bad in ("greedy", "random:seven"):
        with pytest.raises(ParseError):
            max_from_text(bad, result)


class IdleAtFlag1(Strategy):
    """Control Min that waits at flag1 until y = 1, then leaves however it can"""

    def __init__(self, handle):
        self.flag1 = handle.anchors["flag1"]
        self.inner = cz_min_strategy(handle)

    def decide(self, game, run):
        config = run.final
        if config.location != self.flag1:
            return self.inner.decide(game, run)
        delay = ONE - config.valuation["y"]
        later = config.valuation.delay(delay)
        options = sorted(game.outgoing(config.location), key=lambda t: t.is_escape)
        return DelayedMove(delay, next(t.id for t in options if satisfies(later, t.guard)))


@pytest.mark.parametrize("name, step, expected", [
    ("inc-halt", 1, Q(64)),
    ("inc-inc-halt", 1, Q(64)),
    ("inc-inc-halt", 2, Q(306, 5)),
])
def test_idling_before_an_increment_is_punished(name, step, expected):
    result = compiled(name)
    sigma_max = punisher_max(result, 2)
    cheater = cheating_min(faithful_min(result, 2), idle_at=step)
    outcome = play(result.game, None, cheater, sigma_max)
    assert outcome.weight == expected
    assert sigma_max.punishments[-1][1] == STOP_LOWER
    assert outcome.duration <= 3


@pytest.mark.parametrize("name, step", [
    ("inc-halt", 2),
    ("inc-inc-halt", 3),
    ("inc-test-dec-halt", 2),
])
def test_idling_where_only_urgent_moves_remain_never_ends(name, step):
    result = compiled(name)
    cheater = cheating_min(faithful_min(result), idle_at=step)
    outcome = play(result.game, None, cheater, punisher_max(result), step_cap=50)
    assert outcome.status is Status.STEP_CAP
    assert outcome.weight is INFINITE
    assert outcome.trace.steps[-1].move.transition == "sink.escape"


def test_idling_in_a_loop_never_reaches_61():
    result = compiled("loop", Variant.EXISTENCE)
    for step in (1, 2, 3):
        cheater = cheating_min(faithful_min(result, None), idle_at=step)
        outcome = play(result.game, None, cheater, punisher_max(result), step_cap=200)
        assert outcome.reached_goal
        assert outcome.above(61)


def test_exits_are_only_open_on_arrival():
    result = compile_machine(parse_machine("q0: halt\n"))
    outcome = play(result.game, None, faithful_min(result), punisher_max(result))
    assert outcome.weight == 62
    start = result.game.initial_configuration()
    with pytest.raises(GuardViolation):
        apply_move(start, DelayedMove(ONE, "q0.to_exit"), result.game)
    with pytest.raises(GuardViolation):
        apply_move(start, DelayedMove(Q(1, 2), "q0.to_exit"), result.game)


def test_idling_at_flag1_is_never_cheaper():
    handle = build_cz(1)
    game = add_deadlock_escapes(handle.game())
    a = Q(1, 10)
    start = Configuration(handle.entry, Valuation.of(x=1 - a, y=0))
    honest = play(game, start, cz_min_strategy(handle), cz_max_strategy(handle, Q(1, 90), 27))
    idle = play(game, start, IdleAtFlag1(handle), cz_max_strategy(handle, Q(1, 90), 27))
    assert honest.weight + 27 == 61 + Q(1, 30)
    assert idle.status is Status.STEP_CAP
    assert idle.at_least(honest.weight)
    assert ClockConstraint("x", "=", 0) in game.transition("cz.flag1.goal").guard
