"""Exact rational helpers shared by scheme setup and the parameter planner.

All correctness inequalities are evaluated on Fractions; bit counts come
from integer bit lengths. Floats appear only in the logarithm helper used
for reporting, never in accept/reject decisions.
"""

from __future__ import annotations

import math
from fractions import Fraction


def frac(x) -> Fraction:
    """Exact Fraction from int, str ("19.2" stays 96/5), Fraction, or float."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, float):
        return Fraction(x)  # exact value of the float
    return Fraction(str(x)) if isinstance(x, str) else Fraction(x)


def floor_frac(x: Fraction) -> int:
    return x.numerator // x.denominator


def round_half_up(x: Fraction) -> int:
    """floor(x + 1/2), exact; ties go toward +infinity."""
    return (2 * x.numerator + x.denominator) // (2 * x.denominator)


def pow2_ge(k: int, x: Fraction) -> bool:
    """2^k >= x, exact for any integer k."""
    num, den = x.numerator, x.denominator
    if k >= 0:
        return (den << k) >= num
    return den >= (num << -k)


def ceil_log2(x: Fraction | int) -> int:
    """Smallest k with 2^k >= x; x must be positive."""
    x = Fraction(x)
    if x <= 0:
        raise ValueError("ceil_log2 needs x > 0")
    k = x.numerator.bit_length() - x.denominator.bit_length()
    while not pow2_ge(k, x):
        k += 1
    while k > -(10**9) and pow2_ge(k - 1, x):
        k -= 1
    return k


def min_q_bits(bound: Fraction | int) -> int:
    """Bit length of the smallest integer q with q > bound."""
    return (floor_frac(Fraction(bound)) + 1).bit_length()


def frac_log2(x: Fraction | int) -> float:
    """log2 of a positive rational, accurate to ~1 ulp of float."""
    x = Fraction(x)
    if x <= 0:
        raise ValueError("frac_log2 needs x > 0")
    num, den = x.numerator, x.denominator
    a = max(0, num.bit_length() - 53)
    b = max(0, den.bit_length() - 53)
    return (math.log2(num >> a) + a) - (math.log2(den >> b) + b)


def scaled_round(x: float, d: int) -> int:
    """floor(x * 2^d + 1/2) exactly, treating x as its exact binary value."""
    if x == 0.0:
        return 0
    m, e = math.frexp(x)
    big = int(m * (1 << 53))  # exact: x = big * 2^(e-53)
    s = e - 53 + d
    if s >= 0:
        return big << s
    k = -s
    return (2 * big + (1 << k)) >> (k + 1)
