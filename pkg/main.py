#!/usr/bin/env python3
"""
Command-line front end of the two-clock weighted timed game workbench

    compile     machine file -> game file plus anchors sidecar
    simulate    play a strategy profile on a compiled game
    verify      run the verification suites
    grid-value  minimax value of the game restricted to a delay grid
"""

import argparse
import json
import logging
import sys
from dataclasses import dataclass
from pathlib import Path

from compiler import Variant, compile_machine, load_sidecar, sidecar_document, structural_audit
from constants import (
    DEFAULT_GRID_NODE_BUDGET, DEFAULT_N, DEFAULT_STEP_CAP, EXIT_FAULT, EXIT_OK, EXIT_PARSE,
    EXIT_RESOURCE, EXIT_VERIFY, GRID_STEP_CAP,
)
from counter_machine import parse_machine
from engine import grid_minimax, play, render_trace, trace_document
from errors import ParseError, ResourceExceeded, WorkbenchError
from harness import SUITES, run_all, summary_rows, write_report
from lib import Console, FractionFormat, print_table
from strategies import PunisherMax, max_from_text, min_from_text
from wtg import deserialize, serialize

logger = logging.getLogger(__name__)

SIDECAR_SUFFIX = ".anchors.json"


@dataclass(frozen=True)
class CliConfig:
    command: str
    input: Path | None = None
    variant: Variant = Variant.VALUE
    n: int = DEFAULT_N
    step_cap: int = DEFAULT_STEP_CAP
    output: Path | None = None
    min_spec: str = "faithful"
    max_spec: str = "honest"
    suite: str = "all"
    fixtures: Path | None = None
    report: Path | None = None
    mutation: str | None = None
    jobs: int = 1
    denominator: int = 1
    horizon: int = 1
    budget: int = DEFAULT_GRID_NODE_BUDGET
    decimal: bool = False
    verbose: bool = False

    @classmethod
    def from_args(cls, args):
        def path(value):
            return Path(value) if value else None

        return cls(
            command=args.command,
            input=path(getattr(args, "input", None)),
            variant=Variant(getattr(args, "variant", Variant.VALUE.value)),
            n=getattr(args, "N", DEFAULT_N),
            step_cap=getattr(args, "cap", DEFAULT_STEP_CAP),
            output=path(getattr(args, "output", None) or getattr(args, "trace", None)),
            min_spec=getattr(args, "min", "faithful"),
            max_spec=getattr(args, "max", "honest"),
            suite=getattr(args, "suite", "all"),
            fixtures=path(getattr(args, "fixtures", None)),
            report=path(getattr(args, "report", None)),
            mutation=getattr(args, "mutate", None),
            jobs=getattr(args, "jobs", 1),
            denominator=getattr(args, "D", 1),
            horizon=getattr(args, "H", 1),
            budget=getattr(args, "budget", DEFAULT_GRID_NODE_BUDGET),
            decimal=args.decimal,
            verbose=args.verbose,
        )


def sidecar_path(game_path: Path) -> Path:
    return game_path.with_name(game_path.stem + SIDECAR_SUFFIX)


def exit_status(error: Exception) -> int:
    if isinstance(error, ParseError):
        return EXIT_PARSE
    if isinstance(error, ResourceExceeded):
        return EXIT_RESOURCE
    return EXIT_FAULT


def _read_json(path: Path):
    try:
        return json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: {exc.msg}", exc.lineno, exc.colno) from exc


def cmd_compile(config: CliConfig) -> int:
    machine = parse_machine(config.input.read_text())
    result = compile_machine(machine, config.variant)
    audit = structural_audit(result)
    if not audit.ok:
        for finding in audit.findings:
            Console.print_status(False, finding)
        return EXIT_FAULT

    output = config.output or config.input.with_suffix(".json")
    output.write_text(serialize(result.game))
    sidecar_path(output).write_text(json.dumps(sidecar_document(result), indent=2) + "\n")

    print_table([
        ("machine", f"{config.input} ({len(machine.states)} states)"),
        ("variant", config.variant.value),
        ("locations", len(result.game.locations)),
        ("transitions", len(result.game.transitions)),
        ("game file", output),
        ("anchors", sidecar_path(output)),
    ], title="compiled")
    return EXIT_OK


def cmd_simulate(config: CliConfig) -> int:
    game = deserialize(config.input.read_text())
    result = load_sidecar(game, _read_json(sidecar_path(config.input)))
    sigma_min = min_from_text(config.min_spec, result, config.n)
    sigma_max = max_from_text(config.max_spec, result, config.n)
    outcome = play(game, None, sigma_min, sigma_max, config.step_cap)

    rows = [
        ("Min", config.min_spec),
        ("Max", config.max_spec),
        ("status", outcome.status.value),
        ("cost", FractionFormat.format_fraction(outcome.weight, config.decimal)),
        ("accumulated", FractionFormat.format_fraction(outcome.accumulated, config.decimal)),
        ("duration", FractionFormat.format_fraction(outcome.duration, config.decimal)),
        ("moves", len(outcome.trace)),
    ]
    if isinstance(sigma_max, PunisherMax):
        for module, resolution in sigma_max.punishments:
            rows.append(("punished in", f"{module} ({resolution})"))
    print_table(rows, title="play")

    if config.output is not None:
        if config.output.suffix == ".json":
            config.output.write_text(json.dumps(trace_document(outcome, game), indent=2) + "\n")
        else:
            config.output.write_text(render_trace(outcome.trace, game))
        Console.print_status(True, f"trace written to {config.output}")
    return EXIT_OK


def cmd_verify(config: CliConfig) -> int:
    Console.print_banner(f"verifying suite: {config.suite}")
    reports = run_all(config.suite, config.fixtures, config.mutation, config.jobs)
    for report in reports:
        for check in report.failures:
            Console.print_status(False, f"{check.identifier}: expected {check.expected}, "
                                        f"observed {check.observed}")
    print_table(summary_rows(reports), title="verification")
    if reports:
        print(f"note: {reports[0].header}")
    if config.report is not None:
        write_report(config.report, reports)
        Console.print_status(True, f"report written to {config.report}")
    passed = all(r.passed for r in reports)
    Console.print_status(passed, "all checks passed" if passed else "verification failed")
    return EXIT_OK if passed else EXIT_VERIFY


def cmd_grid_value(config: CliConfig) -> int:
    game = deserialize(config.input.read_text())
    value = grid_minimax(game, None, config.denominator, config.horizon, config.step_cap,
                         config.budget)
    print(FractionFormat.format_fraction(value, config.decimal))
    print(f"restricted game: delays are multiples of 1/{config.denominator}, total time "
          f"<= {config.horizon}; this is not the value of the game")
    return EXIT_OK


COMMANDS = {
    "compile": cmd_compile,
    "simulate": cmd_simulate,
    "verify": cmd_verify,
    "grid-value": cmd_grid_value,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description="Two-clock weighted timed game workbench")
    parser.add_argument("--decimal", action="store_true",
                        help="also print a rounded decimal next to every fraction")
    parser.add_argument("--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("compile", help="compile a two-counter machine into a game")
    p.add_argument("input", help="machine file")
    p.add_argument("--variant", choices=[v.value for v in Variant], default=Variant.VALUE.value)
    p.add_argument("-o", "--output", help="game file to write")

    p = sub.add_parser("simulate", help="play a strategy profile")
    p.add_argument("input", help="game file written by compile")
    p.add_argument("--min", default="faithful", help="faithful | cheat:<items>")
    p.add_argument("--max", default="honest", help="honest | punisher | random:<seed>")
    p.add_argument("--N", type=int, default=DEFAULT_N)
    p.add_argument("--cap", type=int, default=DEFAULT_STEP_CAP)
    p.add_argument("--trace", help="trace file (.json for the machine-readable form)")

    p = sub.add_parser("verify", help="run the verification suites")
    p.add_argument("--suite", choices=[*SUITES, "all"], default="all")
    p.add_argument("--fixtures", help="machine fixtures directory")
    p.add_argument("--report", help="JSON report to write")
    p.add_argument("--mutate", help="add 1 to a gadget location weight, e.g. CEC:upper1")
    p.add_argument("--jobs", type=int, default=1)

    p = sub.add_parser("grid-value", help="minimax value on a delay grid")
    p.add_argument("input", help="game file")
    p.add_argument("--D", type=int, default=1, help="grid denominator")
    p.add_argument("--H", type=int, default=1, help="time horizon")
    p.add_argument("--cap", type=int, default=GRID_STEP_CAP)
    p.add_argument("--budget", type=int, default=DEFAULT_GRID_NODE_BUDGET)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    config = CliConfig.from_args(args)
    logging.basicConfig(level=logging.DEBUG if config.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")

    try:
        return COMMANDS[config.command](config)
    except (WorkbenchError, OSError) as exc:
        Console.print_failure(exc)
        return exit_status(exc)


if __name__ == "__main__":
    sys.exit(main())
