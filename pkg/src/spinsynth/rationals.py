"""Exact rational scalars and vectors.

Probabilities, impacts and bounds are Fractions end to end; floats only
ever appear when formatting for humans. Vectors are plain tuples of
Fraction so they hash and compare structurally.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Iterable, Sequence

Vec = tuple[Fraction, ...]


def rat(value) -> Fraction:
    """Coerce ints, Fractions and strings like '0.2' or '1/5' to an exact Fraction."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        return Fraction(value.strip())
    raise TypeError(f"cannot interpret {value!r} as an exact rational")


def vec(components: Iterable) -> Vec:
    return tuple(rat(c) for c in components)


def vec_zero(dim: int) -> Vec:
    return (Fraction(0),) * dim


def vec_add(a: Sequence[Fraction], b: Sequence[Fraction]) -> Vec:
    if len(a) != len(b):
        raise ValueError(f"dimension mismatch: {len(a)} vs {len(b)}")
    return tuple(x + y for x, y in zip(a, b))


def vec_sub(a: Sequence[Fraction], b: Sequence[Fraction]) -> Vec:
    if len(a) != len(b):
        raise ValueError(f"dimension mismatch: {len(a)} vs {len(b)}")
    return tuple(x - y for x, y in zip(a, b))


def vec_scale(k: Fraction, a: Sequence[Fraction]) -> Vec:
    return tuple(k * x for x in a)


def vec_sum(vectors: Iterable[Sequence[Fraction]], dim: int) -> Vec:
    total = vec_zero(dim)
    for v in vectors:
        total = vec_add(total, v)
    return total


def vec_leq(a: Sequence[Fraction], b: Sequence[Fraction]) -> bool:
    """Componentwise a <= b. The winning condition; must never see a float."""
    if len(a) != len(b):
        raise ValueError(f"dimension mismatch: {len(a)} vs {len(b)}")
    return all(x <= y for x, y in zip(a, b))


def vec_geq_zero(a: Sequence[Fraction]) -> bool:
    return all(x >= 0 for x in a)


def format_rat(x: Fraction) -> str:
    """Render exactly: integers bare, dyadic/terminating decimals as decimals,
    everything else as 'num/den'."""
    if x.denominator == 1:
        return str(x.numerator)
    den = x.denominator
    twos = 0
    while den % 2 == 0:
        den //= 2
        twos += 1
    fives = 0
    while den % 5 == 0:
        den //= 5
        fives += 1
    if den == 1:
        digits = max(twos, fives)
        scaled = x * 10**digits
        sign = "-" if scaled < 0 else ""
        whole, frac = divmod(abs(scaled.numerator), 10**digits)
        return f"{sign}{whole}.{str(frac).zfill(digits)}"
    return f"{x.numerator}/{x.denominator}"


def format_vec(a: Sequence[Fraction]) -> str:
    return "[" + ", ".join(format_rat(x) for x in a) + "]"
