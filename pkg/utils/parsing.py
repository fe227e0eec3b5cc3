"""
Разбор числовых аргументов командной строки.
"""

import argparse
from fractions import Fraction
from typing import List


def parse_real(text: str) -> float:
    """
    Parses a real number, accepting exact fractions such as ``8/3``.

    The value is parsed as a Fraction first and rounded to binary floating
    point once.

    Args:
        text: Command-line value ("8/3", "2.5", "1e-3")

    Returns:
        float
    """
    try:
        return float(Fraction(text.strip()))
    except (ValueError, ZeroDivisionError) as e:
        raise argparse.ArgumentTypeError(f"not a real number: {text!r}") from e


def parse_real_list(text: str) -> List[float]:
    """Comma-separated list of reals: ``1,2,3`` or ``5,10,20``."""
    return [parse_real(part) for part in text.split(",") if part.strip()]
