import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import wait_game
from errors import GuardViolation, InvalidDelay, ParseError, StructuralError
from rational import ONE, ZERO, Q
from wtg import (
    SINK_ID, WTG, ClockConstraint, Configuration, DelayedMove, Location, Owner, Run,
    TransitionDef, Valuation, add_deadlock_escapes, apply_move, delay_window, deserialize,
    earliest_delay, has_escape, run_duration, run_weight, satisfies, serialize, validate,
)

rationals = st.tuples(st.integers(0, 120), st.integers(1, 24)).map(lambda t: Q(*t))


def loop_game():
    """Min location with weight 3 and an unguarded self-loop of weight 1"""
    return WTG(("x", "y"), (Location("l", Owner.MIN, 3), Location("goal", Owner.GOAL)),
               (TransitionDef("l.loop", "l", "l", (), ("y",), 1),
                TransitionDef("l.out", "l", "goal", (ClockConstraint("x", ">=", 2),))),
               "l")


def test_valuation_delay_and_reset():
    v = Valuation.of(x=Q(1, 2), y=0)
    assert v.delay(Q(1, 4))["x"] == Q(3, 4)
    assert v.delay(Q(1, 4)).reset(["y"]) == Valuation.of(x=Q(3, 4), y=0)
    with pytest.raises(StructuralError):
        v["z"]
    with pytest.raises(StructuralError):
        v.reset(["z"])


@given(rationals, rationals, rationals)
def test_delays_compose(start, d1, d2):
    v = Valuation.of(x=start, y=0)
    assert v.delay(d1).delay(d2) == v.delay(d1 + d2)


@given(rationals, rationals)
def test_reset_is_idempotent(x, y):
    v = Valuation.of(x=x, y=y)
    assert v.reset(["x"]).reset(["x"]) == v.reset(["x"])


@pytest.mark.parametrize("op, bound, value, expected", [
    ("=", 1, ONE, True),
    ("=", 1, Q(1, 2), False),
    ("<", 1, ONE, False),
    ("<=", 1, ONE, True),
    (">", 0, ZERO, False),
    (">=", 0, ZERO, True),
])
def test_constraints(op, bound, value, expected):
    assert satisfies(Valuation.of(x=value, y=0), (ClockConstraint("x", op, bound),)) is expected


def test_delay_windows():
    v = Valuation.of(x=Q(1, 2), y=0)
    window = delay_window(v, (ClockConstraint("x", "=", 1),))
    assert window.earliest() == Q(1, 2) and window.latest() == Q(1, 2)
    window = delay_window(v, (ClockConstraint("x", "<", 1),))
    assert window.earliest() == 0 and window.latest() is None
    assert window.contains(Q(1, 4)) and not window.contains(Q(1, 2))
    assert earliest_delay(v, (ClockConstraint("x", ">", 1),)) is None
    assert delay_window(v, (ClockConstraint("x", "=", 0),)) is None
    assert delay_window(v, (ClockConstraint("x", ">=", 1), ClockConstraint("y", "<", 1),)) is not None


def test_trivial_game_weight_and_duration(trivial_game):
    run = Run(trivial_game.initial_configuration()).extend(DelayedMove(ONE, "wait.done"), trivial_game)
    assert run.weight == 2
    assert run.duration == 1
    assert run_weight(run, trivial_game) == 2
    assert run_duration(run) == 1
    assert run.final.location == "goal"


def test_apply_move_errors(trivial_game):
    start = trivial_game.initial_configuration()
    with pytest.raises(InvalidDelay):
        apply_move(start, DelayedMove(Q(-1, 2), "wait.done"), trivial_game)
    with pytest.raises(GuardViolation):
        apply_move(start, DelayedMove(Q(1, 2), "wait.done"), trivial_game)
    with pytest.raises(StructuralError):
        apply_move(Configuration("goal", start.valuation), DelayedMove(ONE, "wait.done"), trivial_game)
    with pytest.raises(StructuralError):
        apply_move(start, DelayedMove(ONE, "missing"), trivial_game)


@given(st.lists(st.integers(0, 6).map(lambda n: Q(n, 3)), min_size=1, max_size=6), st.data())
def test_weight_is_additive(delays, data):
    game = loop_game()
    run = Run(game.initial_configuration())
    for d in delays:
        run = run.extend(DelayedMove(d, "l.loop"), game)
    cut = data.draw(st.integers(0, len(run)))
    first = Run(run.initial, run.steps[:cut], sum((s.cost for s in run.steps[:cut]), ZERO),
                sum((s.move.delay for s in run.steps[:cut]), ZERO))
    second = Run(first.final, run.steps[cut:], sum((s.cost for s in run.steps[cut:]), ZERO),
                 sum((s.move.delay for s in run.steps[cut:]), ZERO))
    joined = first.concat(second)
    assert joined.weight == run.weight == run_weight(run, game)
    assert run.weight == 3 * sum(delays, ZERO) + len(delays)


def test_concat_rejects_gaps():
    game = loop_game()
    run = Run(game.initial_configuration()).extend(DelayedMove(ONE, "l.loop"), game)
    with pytest.raises(StructuralError):
        run.concat(Run(game.initial_configuration()))


def test_validate_reports_problems():
    game = WTG(("x", "y"),
               (Location("a", Owner.MIN, -1), Location("a", Owner.MAX), Location("goal", Owner.GOAL)),
               (TransitionDef("t", "goal", "a"), TransitionDef("u", "a", "nowhere"),
                TransitionDef("v", "a", "goal", (ClockConstraint("z", "<", 1),))),
               "missing")
    text = "\n".join(validate(game).violations)
    assert "not turn-based" in text
    assert "negative weight" in text
    assert "outgoing" in text
    assert "unknown location 'nowhere'" in text
    assert "unknown clock 'z'" in text
    assert "initial location" in text
    assert validate(wait_game(), require_escapes=False).ok


def test_validate_wants_deadlock_escapes():
    text = "\n".join(validate(wait_game()).violations)
    assert "location 'wait' has no deadlock escape" in text
    assert validate(add_deadlock_escapes(wait_game())).ok
    assert validate(loop_game()).ok


def test_deadlock_escapes():
    base = WTG(("x", "y"),
               (Location("m", Owner.MIN, 1), Location("M", Owner.MAX), Location("goal", Owner.GOAL)),
               (TransitionDef("m.go", "m", "M", (ClockConstraint("x", "<=", 1),)),
                TransitionDef("M.go", "M", "goal", (ClockConstraint("x", "=", 1),))),
               "m")
    game = add_deadlock_escapes(base)
    assert game.transition("m.escape").target == SINK_ID
    assert game.transition("M.escape").target == "goal"
    assert game.location(SINK_ID).owner is Owner.MIN
    assert has_escape(game, "m") and has_escape(game, SINK_ID)
    assert validate(game).ok
    assert not has_escape(base, "m")


def test_game_file_round_trip():
    game = add_deadlock_escapes(loop_game())
    assert deserialize(serialize(game)) == game


def test_game_file_errors():
    with pytest.raises(ParseError) as info:
        deserialize('{"clocks": ["x"],\n "locations": [}')
    assert info.value.line == 2
    with pytest.raises(ParseError, match="owner"):
        deserialize('{"clocks": ["x"], "locations": [{"id": "a", "weight": 0}],'
                    ' "transitions": [], "initial": "a"}')
    with pytest.raises(ParseError, match="comparator"):
        deserialize('{"clocks": ["x"], "locations": [{"id": "a", "owner": "MIN", "weight": 0}],'
                    ' "transitions": [{"id": "t", "source": "a", "target": "a", "resets": [],'
                    ' "weight": 0, "guard": [{"clock": "x", "op": "!=", "bound": 1}]}],'
                    ' "initial": "a"}')
