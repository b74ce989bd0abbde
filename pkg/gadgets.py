#!/usr/bin/env python3
"""
Control gadgets of the reduction and their cost contracts

Each builder returns a GadgetHandle: a game fragment, its named anchor
locations, the parameters it was built from and, for the CEC, CM and exit
modules, the affine added-cost contract of every resolution Max (or the exit
taker) can pick. The contracts are checked against the fragment by actually
playing it on probe points and solving for the affine coefficients.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from enum import Enum

from constants import (
    CLOCK_X, CLOCK_Y, CZ_CM_BETA, CZ_CM_MARGIN, CZ_DIRECT_WEIGHT, CZ_GOAL_BONUS, CZ_RATE,
    EXIT_WEIGHT, SOFT_EXIT_WEIGHT, STATE_WEIGHT,
)
from errors import ConstructionError, DomainError, NotAffine, StructuralError
from rational import ONE, ZERO, Q, Rational, format_rational
from wtg import (
    WTG, ClockConstraint, Configuration, DelayedMove, Location, Owner, Run, TransitionDef,
    Valuation, earliest_delay, game_document, validate,
)

logger = logging.getLogger(__name__)

CONTINUE = "CONTINUE"
STOP_UPPER = "STOP-UPPER"
STOP_LOWER = "STOP-LOWER"
EXIT = "EXIT"
STOPS = (STOP_UPPER, STOP_LOWER)

GADGET_TIME_BOUND = 2

# (a, b, t) probe points; the last one is held out to certify affinity
DEFAULT_PROBES = (
    (ZERO, ZERO, ZERO),
    (Q(1, 2), ZERO, ZERO),
    (ZERO, Q(1, 2), ZERO),
    (ZERO, ZERO, Q(1, 2)),
    (Q(1, 5), Q(1, 10), Q(1, 4)),
)


class GadgetKind(Enum):
    CEC = "CEC"
    CM = "CM"
    CZ = "CZ"
    CNZ = "CNZ"
    EXIT = "EXIT"
    SOFT_EXIT = "SOFT_EXIT"


@dataclass(frozen=True)
class GadgetParams:
    """
    alpha, beta: rates of the CEC/CM paths
    k: CM weight on the final waits (factor * beta); counter index for CZ/CNZ
    m, n: final transition weights of the upper and lower stop paths (m is the
          module M for CZ/CNZ)
    """

    alpha: int = 0
    beta: int = 0
    k: int = 0
    m: int = 0
    n: int = 0


@dataclass(frozen=True)
class AffineCost:
    coeff_a: Rational
    coeff_b: Rational
    coeff_t: Rational
    constant: Rational

    def evaluate(self, a, b, t) -> Rational:
        return self.coeff_a * a + self.coeff_b * b + self.coeff_t * t + self.constant

    def as_tuple(self) -> tuple[Rational, ...]:
        return (self.coeff_a, self.coeff_b, self.coeff_t, self.constant)

    def __str__(self):
        return "(" + ", ".join(format_rational(v) for v in self.as_tuple()) + ")"


ZERO_COST = AffineCost(ZERO, ZERO, ZERO, ZERO)


@dataclass(frozen=True)
class EntryFrame:
    """Gadget entry with x = a + b, y = b and accumulated cost alpha(a + b) + E"""

    a: Rational
    b: Rational
    E: Rational = ZERO

    def __post_init__(self):
        if self.a < 0 or self.b < 0 or self.a + self.b >= 1:
            raise DomainError(f"entry needs 0 <= b <= a + b < 1, got a={self.a}, b={self.b}")

    def valuation(self, roles=(CLOCK_X, CLOCK_Y)) -> Valuation:
        big, small = roles
        return Valuation.of(**{big: self.a + self.b, small: self.b})

    def entry_cost(self, alpha) -> Rational:
        return alpha * (self.a + self.b) + self.E


@dataclass(frozen=True)
class Fragment:
    locations: tuple[Location, ...]
    transitions: tuple[TransitionDef, ...]


@dataclass(frozen=True)
class GadgetHandle:
    kind: GadgetKind
    params: GadgetParams
    fragment: Fragment
    anchors: dict
    resolutions: dict = field(default_factory=dict)   # resolution -> transition id
    contract: dict = field(default_factory=dict)      # resolution -> AffineCost
    roles: tuple[str, str] = (CLOCK_X, CLOCK_Y)
    factors: dict = field(default_factory=dict)       # flag anchor -> multiplication factor
    parts: tuple = ()

    @property
    def entry(self) -> str:
        return self.anchors["entry"]

    @property
    def prefix(self) -> str:
        return self.entry.rsplit(".", 1)[0]

    def contains(self, location_id: str) -> bool:
        return any(loc.id == location_id for loc in self.fragment.locations)

    def part_at(self, location_id: str) -> GadgetHandle | None:
        for part in self.parts:
            if part.contains(location_id):
                return part
        return None

    def game(self) -> WTG:
        """The fragment as a standalone game starting at the entry; open ports become goals"""
        known = {loc.id for loc in self.fragment.locations}
        ports = []
        for transition in self.fragment.transitions:
            if transition.target not in known:
                known.add(transition.target)
                ports.append(Location(transition.target, Owner.GOAL))
        return WTG((CLOCK_X, CLOCK_Y), self.fragment.locations + tuple(ports),
                   self.fragment.transitions, self.entry)

    def with_weight(self, location_id: str, weight: int) -> GadgetHandle:
        """Copy with one location weight replaced (mutation checks)"""
        if not self.contains(location_id):
            raise StructuralError(f"{location_id!r} is not part of this gadget")
        locations = tuple(replace(loc, weight=weight) if loc.id == location_id else loc
                          for loc in self.fragment.locations)
        parts = tuple(p.with_weight(location_id, weight) if p.contains(location_id) else p
                      for p in self.parts)
        return replace(self, fragment=replace(self.fragment, locations=locations), parts=parts)


@dataclass(frozen=True)
class ContractFinding:
    check: str
    expected: str
    observed: str
    ok: bool


@dataclass(frozen=True)
class ContractReport:
    kind: GadgetKind
    prefix: str
    findings: tuple[ContractFinding, ...]

    @property
    def passed(self) -> bool:
        return all(f.ok for f in self.findings)


def _natural(name, value):
    if isinstance(value, bool) or not isinstance(value, int) or value < 0:
        raise ConstructionError(f"{name} = {value!r} is not a non-negative integer weight")
    return value


def _eq(clock, bound):
    return (ClockConstraint(clock, "=", bound),)


def _le(clock, bound):
    return (ClockConstraint(clock, "<=", bound),)


def _ports(prefix, exit, goal):
    """Exit and goal targets, with standalone GOAL locations when not wired in"""
    extra = []
    if exit is None:
        exit = f"{prefix}.exit"
        extra.append(Location(exit, Owner.GOAL))
    if goal is None:
        goal = f"{prefix}.goal"
        extra.append(Location(goal, Owner.GOAL))
    return exit, goal, extra


# Contracts

def cec_contract(params: GadgetParams) -> dict:
    alpha, beta = params.alpha, params.beta
    return {
        CONTINUE: ZERO_COST,
        STOP_UPPER: AffineCost(Q(beta - 2 * alpha), Q(-2 * alpha), Q(-2 * alpha),
                               Q(2 * alpha + params.m)),
        STOP_LOWER: AffineCost(Q(-beta), ZERO, ZERO, Q(beta + params.n)),
    }


def cm_contract(params: GadgetParams) -> dict:
    fast, slow, k = params.alpha + params.beta, params.alpha - params.beta, params.k
    return {
        CONTINUE: ZERO_COST,
        STOP_UPPER: AffineCost(Q(k - fast), Q(-fast), Q(-fast), Q(fast + params.m)),
        STOP_LOWER: AffineCost(Q(-slow - k), Q(-slow), Q(-slow), Q(slow + k + params.n)),
    }


def exit_contract(rate: int) -> dict:
    return {EXIT: AffineCost(Q(-rate), Q(-rate), ZERO, Q(rate + EXIT_WEIGHT))}


def cec_stop_cost(params: GadgetParams, a, b, E=ZERO) -> Rational:
    """Best stop for Max at t = 0 when N = M + beta: alpha(1 + |b - (1 - beta/alpha)(1 - a)|) + E + M + beta"""
    gamma = ONE - Q(params.beta, params.alpha)
    return params.alpha * (1 + abs(b - gamma * (1 - a))) + E + params.m + params.beta


def cm_stop_cost(params: GadgetParams, a, b, E=ZERO) -> Rational:
    """Best stop for Max at t = 0 when k = factor * beta and N = M + 2 beta - k"""
    factor = Q(params.k, params.beta)
    return params.alpha + params.beta + params.m + E + params.beta * abs(b - (factor - 1) * a)


# Builders

def build_cec(params: GadgetParams, prefix="cec", exit=None, goal=None) -> GadgetHandle:
    """
    Counter evolution control

    From flag1 (Max, weight 0) Max continues, resetting y, or stops:
    upper path waits at 2 alpha until x = 1, at beta until y = 1, then pays M;
    lower path waits at 0 until y = 1 (reset y), at beta until x = 2, then pays N.
    """
    alpha, beta = _natural("alpha", params.alpha), _natural("beta", params.beta)
    _natural("M", params.m), _natural("N", params.n)
    if beta > alpha:
        raise ConstructionError(f"beta = {beta} exceeds alpha = {alpha}")
    exit, goal, extra = _ports(prefix, exit, goal)
    x, y = CLOCK_X, CLOCK_Y
    p = prefix
    locations = (
        Location(f"{p}.flag1", Owner.MAX, 0),
        Location(f"{p}.upper1", Owner.MIN, 2 * alpha),
        Location(f"{p}.upper2", Owner.MIN, beta),
        Location(f"{p}.lower1", Owner.MIN, 0),
        Location(f"{p}.lower2", Owner.MIN, beta),
        *extra,
    )
    transitions = (
        TransitionDef(f"{p}.continue", f"{p}.flag1", exit, _le(x, 1), (y,), 0),
        TransitionDef(f"{p}.stop_upper", f"{p}.flag1", f"{p}.upper1", _le(x, 1)),
        TransitionDef(f"{p}.upper1.out", f"{p}.upper1", f"{p}.upper2", _eq(x, 1)),
        TransitionDef(f"{p}.upper2.out", f"{p}.upper2", goal, _eq(y, 1), (), params.m),
        TransitionDef(f"{p}.stop_lower", f"{p}.flag1", f"{p}.lower1", _le(x, 1)),
        TransitionDef(f"{p}.lower1.out", f"{p}.lower1", f"{p}.lower2", _eq(y, 1), (y,)),
        TransitionDef(f"{p}.lower2.out", f"{p}.lower2", goal, _eq(x, 2), (), params.n),
    )
    logger.debug("built CEC %s with %s", prefix, params)
    return GadgetHandle(
        GadgetKind.CEC, params, Fragment(locations, transitions),
        {"entry": f"{p}.flag1", "flag1": f"{p}.flag1", "exit": exit, "goal": goal},
        {CONTINUE: f"{p}.continue", STOP_UPPER: f"{p}.stop_upper", STOP_LOWER: f"{p}.stop_lower"},
        cec_contract(params),
    )


def build_cm(params: GadgetParams, prefix="cm", roles=(CLOCK_X, CLOCK_Y),
             exit=None, goal=None) -> GadgetHandle:
    """
    Multiplication control over clock roles (X, Y)

    Upper path: weight alpha + beta until X = 1, then k until Y = 1, then M.
    Lower path: weight alpha - beta until X = 1 (reset X), 0 until Y = 1
    (reset Y), k until X = 1, then N.
    """
    alpha, beta = _natural("alpha", params.alpha), _natural("beta", params.beta)
    k = _natural("k", params.k)
    _natural("M", params.m), _natural("N", params.n)
    if beta > alpha:
        raise ConstructionError(f"beta = {beta} exceeds alpha = {alpha}")
    exit, goal, extra = _ports(prefix, exit, goal)
    big, small = roles
    p = prefix
    locations = (
        Location(f"{p}.flag1", Owner.MAX, 0),
        Location(f"{p}.upper1", Owner.MIN, alpha + beta),
        Location(f"{p}.upper2", Owner.MIN, k),
        Location(f"{p}.lower1", Owner.MIN, alpha - beta),
        Location(f"{p}.lower2", Owner.MIN, 0),
        Location(f"{p}.lower3", Owner.MIN, k),
        *extra,
    )
    transitions = (
        TransitionDef(f"{p}.continue", f"{p}.flag1", exit, _le(big, 1), (small,), 0),
        TransitionDef(f"{p}.stop_upper", f"{p}.flag1", f"{p}.upper1", _le(big, 1)),
        TransitionDef(f"{p}.upper1.out", f"{p}.upper1", f"{p}.upper2", _eq(big, 1)),
        TransitionDef(f"{p}.upper2.out", f"{p}.upper2", goal, _eq(small, 1), (), params.m),
        TransitionDef(f"{p}.stop_lower", f"{p}.flag1", f"{p}.lower1", _le(big, 1)),
        TransitionDef(f"{p}.lower1.out", f"{p}.lower1", f"{p}.lower2", _eq(big, 1), (big,)),
        TransitionDef(f"{p}.lower2.out", f"{p}.lower2", f"{p}.lower3", _eq(small, 1), (small,)),
        TransitionDef(f"{p}.lower3.out", f"{p}.lower3", goal, _eq(big, 1), (), params.n),
    )
    return GadgetHandle(
        GadgetKind.CM, params, Fragment(locations, transitions),
        {"entry": f"{p}.flag1", "flag1": f"{p}.flag1", "exit": exit, "goal": goal},
        {CONTINUE: f"{p}.continue", STOP_UPPER: f"{p}.stop_upper", STOP_LOWER: f"{p}.stop_lower"},
        cm_contract(params),
        roles,
    )


def inner_cm_params(factor: int, m: int) -> GadgetParams:
    """CM used inside CZ/CNZ: every stop costs 61 + M + E + |t - (factor - 1) a|"""
    weight = factor * CZ_CM_BETA
    upper = m + CZ_CM_MARGIN
    return GadgetParams(CZ_RATE, CZ_CM_BETA, weight, upper, upper + 2 * CZ_CM_BETA - weight)


def _build_control(kind, k, m, prefix, goal):
    if k not in (1, 2):
        raise ConstructionError(f"control modules take k in {{1, 2}}, got {k}")
    _natural("M", m)
    _, goal, extra = _ports(prefix, "", goal)
    x, y = CLOCK_X, CLOCK_Y
    p = prefix
    loop = {"flag2": 5, "flag3": 4 - k}
    if kind is GadgetKind.CNZ:
        loop["flag5"] = k + 1

    locations = [
        Location(f"{p}.entry", Owner.MIN, STATE_WEIGHT + CZ_RATE),
        Location(f"{p}.flag1", Owner.MIN, CZ_RATE),
        *(Location(f"{p}.{flag}", Owner.MIN, CZ_RATE) for flag in loop),
        *extra,
    ]
    transitions = [
        TransitionDef(f"{p}.flag1.goal", f"{p}.flag1", goal, _eq(y, 1) + _eq(x, 0), (), m + CZ_GOAL_BONUS),
    ]
    anchors = {"entry": f"{p}.entry", "flag1": f"{p}.flag1", "goal": goal}
    factors = dict(loop)
    parts = []
    for flag, factor in loop.items():
        cm = build_cm(inner_cm_params(factor, m), f"{p}.cm{factor}", (y, x),
                      exit=f"{p}.flag1", goal=goal)
        parts.append(cm)
        anchors[flag] = f"{p}.{flag}"
        transitions += [
            TransitionDef(f"{p}.to_{flag}", f"{p}.flag1", f"{p}.{flag}", _le(y, 1) + _eq(x, 0)),
            TransitionDef(f"{p}.{flag}.go", f"{p}.{flag}", cm.entry, _le(y, 1)),
        ]

    if kind is GadgetKind.CZ:
        locations.append(Location(f"{p}.flag4", Owner.MIN, CZ_DIRECT_WEIGHT))
        anchors["flag4"] = f"{p}.flag4"
        transitions += [
            TransitionDef(f"{p}.translate", f"{p}.entry", f"{p}.flag1", _eq(x, 1), (x,)),
            TransitionDef(f"{p}.direct", f"{p}.entry", f"{p}.flag4", _eq(x, 1), (x,)),
            TransitionDef(f"{p}.flag4.goal", f"{p}.flag4", goal, _eq(y, 1), (), m + CZ_GOAL_BONUS),
        ]
    else:
        forced = build_cm(inner_cm_params(k + 1, m), f"{p}.force_cm", (y, x),
                          exit=f"{p}.flag1", goal=goal)
        parts.append(forced)
        locations.append(Location(f"{p}.force", Owner.MIN, CZ_RATE))
        anchors["force"] = f"{p}.force"
        factors["force"] = k + 1
        transitions += [
            TransitionDef(f"{p}.translate", f"{p}.entry", f"{p}.force", _eq(x, 1), (x,)),
            TransitionDef(f"{p}.force.go", f"{p}.force", forced.entry, _le(y, 1)),
        ]

    for cm in parts:
        locations.extend(loc for loc in cm.fragment.locations if loc.owner is not Owner.GOAL)
        transitions.extend(cm.fragment.transitions)
    logger.debug("built %s_%d^%d at %s", kind.value, k, m, prefix)
    return GadgetHandle(kind, GadgetParams(k=k, m=m), Fragment(tuple(locations), tuple(transitions)),
                        anchors, factors=factors, parts=tuple(parts))


def build_cz(k: int, m: int = 0, prefix="cz", goal=None) -> GadgetHandle:
    """
    Zero control for counter k

    The entry (Min, weight 57) waits for x = 1 and resets x, turning x = 1 - a
    into y = a. Min then either runs the flag4 path (weight 32 until y = 1, then
    M + 4) or loops from flag1, multiplying y by 5 (flag2) or 4 - k (flag3)
    through CM(y, x) instances, and leaves at y = 1 for M + 4. Every move out of
    flag1 needs x = 0, so y only grows through audited multiplications.
    """
    return _build_control(GadgetKind.CZ, k, m, prefix, goal)


def control_weights(handle: GadgetHandle) -> dict[str, int]:
    """Weights the CZ/CNZ locations outside the inner CMs must carry"""
    if handle.kind not in (GadgetKind.CZ, GadgetKind.CNZ):
        raise DomainError(f"{handle.kind.value} is not a control module")
    anchors = handle.anchors
    expected = {anchors["entry"]: STATE_WEIGHT + CZ_RATE, anchors["flag1"]: CZ_RATE}
    expected.update((anchors[flag], CZ_RATE) for flag in handle.factors)
    if "flag4" in anchors:
        expected[anchors["flag4"]] = CZ_DIRECT_WEIGHT
    return expected


def build_cnz(k: int, m: int = 0, prefix="cnz", goal=None) -> GadgetHandle:
    """Non-zero control: CZ without flag4, a forced first multiplication by k + 1, and a flag5 loop branch for k + 1"""
    return _build_control(GadgetKind.CNZ, k, m, prefix, goal)


def _build_exit(kind, rate, prefix, goal):
    _, goal, extra = _ports(prefix, "", goal)
    locations = (Location(f"{prefix}.entry", Owner.MIN, rate), *extra)
    transitions = (
        TransitionDef(f"{prefix}.leave", f"{prefix}.entry", goal, _eq(CLOCK_X, 1), (), EXIT_WEIGHT),
    )
    return GadgetHandle(kind, GadgetParams(alpha=rate), Fragment(locations, transitions),
                        {"entry": f"{prefix}.entry", "goal": goal},
                        {EXIT: f"{prefix}.leave"}, exit_contract(rate))


def build_exit(prefix="exit", goal=None) -> GadgetHandle:
    """Min's way out: wait at 31 until x = 1, then pay 31"""
    return _build_exit(GadgetKind.EXIT, EXIT_WEIGHT, prefix, goal)


def build_soft_exit(prefix="soft_exit", goal=None) -> GadgetHandle:
    return _build_exit(GadgetKind.SOFT_EXIT, SOFT_EXIT_WEIGHT, prefix, goal)


# Measuring

def forced_move(game: WTG, config: Configuration) -> DelayedMove:
    """The earliest move along the only non-escape transition of a location"""
    options = [t for t in game.outgoing(config.location) if not t.is_escape]
    if len(options) != 1:
        raise StructuralError(f"{config.location!r} has {len(options)} choices, expected one")
    delay = earliest_delay(config.valuation, options[0].guard)
    if delay is None:
        raise StructuralError(f"{options[0].id!r} can never be taken from {config.location!r}")
    return DelayedMove(delay, options[0].id)


def measure_resolution(handle: GadgetHandle, resolution: str, a, b, t, step_cap=32) -> Run:
    """
    Play the standalone fragment from entry (a, b) with the resolution picked after t

    Max waits t at a Max entry; a Min entry takes its resolution as early as the
    guard allows. Every later location is forced.
    """
    game = handle.game()
    frame = EntryFrame(Rational(a), Rational(b))
    run = Run(Configuration(handle.entry, frame.valuation(handle.roles)))
    transition = game.transition(handle.resolutions[resolution])
    if game.location(handle.entry).owner is Owner.MAX:
        delay = Rational(t)
    else:
        delay = earliest_delay(run.final.valuation, transition.guard)
    run = run.extend(DelayedMove(delay, transition.id), game)
    while game.location(run.final.location).owner is not Owner.GOAL:
        if len(run) >= step_cap:
            raise StructuralError(f"{resolution} of {handle.prefix} does not reach a goal")
        run = run.extend(forced_move(game, run.final), game)
    return run


def _solve(matrix, rhs):
    """Exact Gauss-Jordan elimination on a square system"""
    size = len(matrix)
    rows = [list(row) + [value] for row, value in zip(matrix, rhs)]
    for col in range(size):
        pivot = next((r for r in range(col, size) if rows[r][col] != 0), None)
        if pivot is None:
            raise DomainError("probe points are not affinely independent")
        rows[col], rows[pivot] = rows[pivot], rows[col]
        lead = rows[col][col]
        rows[col] = [v / lead for v in rows[col]]
        for r in range(size):
            if r != col and rows[r][col] != 0:
                factor = rows[r][col]
                rows[r] = [v - factor * w for v, w in zip(rows[r], rows[col])]
    return [row[-1] for row in rows]


def extract_affine_cost(handle: GadgetHandle, resolution: str, probes=DEFAULT_PROBES) -> AffineCost:
    """
    Fit added-cost(a, b, t) on the first four probes, check it on the fifth

    Raises:
        NotAffine: the held-out probe disagrees with the fitted cost
    """
    if len(probes) != 5:
        raise DomainError("extract_affine_cost needs exactly five probes")
    costs = [measure_resolution(handle, resolution, a, b, t).weight for a, b, t in probes]
    matrix = [(Rational(a), Rational(b), Rational(t), ONE) for a, b, t in probes[:4]]
    cost = AffineCost(*_solve(matrix, costs[:4]))
    a, b, t = probes[4]
    if cost.evaluate(a, b, t) != costs[4]:
        raise NotAffine(f"{resolution} of {handle.prefix}: fitted {cost} predicts "
                        f"{format_rational(cost.evaluate(a, b, t))}, measured "
                        f"{format_rational(costs[4])}")
    return cost


def check_gadget_contract(handle: GadgetHandle, probes=DEFAULT_PROBES) -> ContractReport:
    """Compare every resolution of a gadget with its contract; findings, never exceptions"""
    findings = []
    report = validate(handle.game(), require_escapes=False)
    findings.append(ContractFinding("fragment is well formed", "no violations",
                                    "; ".join(report.violations) or "no violations", report.ok))

    for resolution, expected in handle.contract.items():
        try:
            extracted = extract_affine_cost(handle, resolution, probes)
            observed, ok = str(extracted), extracted.as_tuple() == expected.as_tuple()
        except (NotAffine, StructuralError) as exc:
            observed, ok = f"error: {exc}", False
        findings.append(ContractFinding(f"{resolution} added cost", str(expected), observed, ok))

        longest = ZERO
        for a, b, t in probes:
            try:
                run = measure_resolution(handle, resolution, a, b, t)
            except StructuralError:
                continue
            longest = max(longest, run.duration)
            if resolution == CONTINUE:
                big, small = handle.roles
                valuation = run.final.valuation
                want = Rational(a) + Rational(b) + Rational(t)
                ok = valuation[big] == want and valuation[small] == 0
                findings.append(ContractFinding(
                    f"CONTINUE leaves {big}=a+b+t, {small}=0 at ({a}, {b}, {t})",
                    f"{big}={format_rational(want)}, {small}=0/1",
                    f"{big}={format_rational(valuation[big])}, {small}={format_rational(valuation[small])}",
                    ok))
        findings.append(ContractFinding(f"{resolution} lasts at most {GADGET_TIME_BOUND}",
                                        f"<= {GADGET_TIME_BOUND}", format_rational(longest),
                                        longest <= GADGET_TIME_BOUND))

    for part in handle.parts:
        sub = check_gadget_contract(part, probes)
        findings.extend(replace(f, check=f"{part.prefix}: {f.check}") for f in sub.findings)

    result = ContractReport(handle.kind, handle.prefix, tuple(findings))
    logger.debug("contract of %s %s: %s", handle.kind.value, handle.prefix,
                 "PASS" if result.passed else "FAIL")
    return result


def to_document(handle: GadgetHandle) -> dict:
    """Game file document plus the 'anchors' map and 'params' record"""
    doc = game_document(handle.game())
    doc["kind"] = handle.kind.value
    doc["anchors"] = dict(handle.anchors)
    doc["params"] = {"alpha": handle.params.alpha, "beta": handle.params.beta,
                     "k": handle.params.k, "M": handle.params.m, "N": handle.params.n}
    return doc
