from pathlib import Path

import pytest

from counter_machine import parse_machine
from wtg import GOAL_ID, WTG, ClockConstraint, Location, Owner, TransitionDef

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"


def load_machine(name):
    return parse_machine((FIXTURES / f"{name}.tcm").read_text())


def wait_game(weight=2, op="=", bound=1):
    """One Min location that waits until the guard holds, then reaches the goal"""
    return WTG(
        ("x", "y"),
        (Location("wait", Owner.MIN, weight), Location(GOAL_ID, Owner.GOAL)),
        (TransitionDef("wait.done", "wait", GOAL_ID, (ClockConstraint("x", op, bound),)),),
        "wait",
    )


@pytest.fixture
def fixtures_path():
    return FIXTURES


@pytest.fixture
def trivial_game():
    return wait_game()
