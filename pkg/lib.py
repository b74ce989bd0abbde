#!/usr/bin/env python3
"""
Shared console helpers for the workbench commands
"""

from constants import BANNER_WIDTH, DECIMAL_DIGITS
from engine import INFINITE
from rational import format_rational, to_decimal


class Console:
    """Banner and status printing used by every subcommand"""

    @staticmethod
    def print_banner(title, width=BANNER_WIDTH):
        print("\n" + "=" * width)
        print(title.upper())
        print("=" * width)

    @staticmethod
    def print_status(ok, message):
        print(f"{'✓' if ok else '✗'} {message}")

    @staticmethod
    def print_failure(error, hints=()):
        """
        Report an error the way a failed subcommand should

        Args:
            error: the exception that stopped the command
            hints: extra lines telling the user what to look at
        """
        print(f"\n✗ {type(error).__name__}: {error}")
        for i, hint in enumerate(hints, start=1):
            print(f"  {i}. {hint}")


class FractionFormat:
    """Exact rendering of costs, delays and clock values"""

    @staticmethod
    def format_fraction(value, decimal=False):
        """
        'p/q' for a Rational, 'INFINITE' for the infinite marker

        Args:
            value: Rational or INFINITE
            decimal: also show a rounded decimal, marked approximate
        """
        if value is INFINITE:
            return "INFINITE"
        text = format_rational(value)
        if decimal:
            text += f" (~{to_decimal(value, DECIMAL_DIGITS)})"
        return text


def print_table(rows, title=None, width=BANNER_WIDTH):
    """
    Print aligned (label, value) rows between banner lines

    Args:
        rows: iterable of (label, value) pairs
        title: optional heading printed in capitals
    """
    rows = [(str(label), str(value)) for label, value in rows]
    print("\n" + "=" * width)
    if title:
        print(f"{title.upper()}:")
        print("=" * width)

    max_label_len = max((len(label) for label, _ in rows), default=0)

    for label, value in rows:
        print(f"  {label:<{max_label_len}} - {value}")

    print("=" * width + "\n")
