"""Independent oracles used by the test suite.

These deliberately avoid the package's own closed forms: budgets are
checked with exact rational arithmetic and delivery probabilities with
brute-force enumeration over every generation pattern.
"""

from fractions import Fraction
from itertools import product
from math import comb


def exact_binomial_cdf(m: int, n: int, p: Fraction) -> Fraction:
    """P[X <= m] for X ~ Binomial(n, p), exact."""
    if m < 0:
        return Fraction(0)
    m = min(m, n)
    return sum(
        comb(n, k) * p**k * (1 - p) ** (n - k) for k in range(m + 1)
    )


def oracle_required_switches(q: Fraction, n: int, p: Fraction) -> int:
    """Smallest m with P[X <= m] >= q by direct exact summation."""
    for m in range(n + 1):
        if exact_binomial_cdf(m, n, p) >= q:
            return m
    return n


def enumerate_delivery(
    n_cycles: int,
    p: float,
    survival: float,
    scale: float,
    policy: str,
) -> float:
    """Delivery probability by summing over all 2^N herald patterns.

    A pattern marks which cycles heralded (single source). Under
    ``replace-with-latest`` the photon delivered is the one inserted at the
    last heralding cycle; under ``keep-first`` the one from the first.
    A photon inserted at cycle ``c`` (0-indexed) survives
    ``n_cycles - 1 - c`` loop traversals and is then delivered with
    probability ``scale``.
    """
    total = 0.0
    for pattern in product((0, 1), repeat=n_cycles):
        k = sum(pattern)
        if k == 0:
            continue
        weight = p**k * (1.0 - p) ** (n_cycles - k)
        marked = [c for c, bit in enumerate(pattern) if bit]
        c = marked[-1] if policy == "replace-with-latest" else marked[0]
        total += weight * survival ** (n_cycles - 1 - c) * scale
    return total
