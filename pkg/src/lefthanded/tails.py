"""Threshold searches and closed-form tail certificates shared by the applications.

Each application proves its local lemma condition for every event of size
n0 > N through a chain of inequalities.  The searches here find N with
floating point, then the certificates re-check the chain at the boundary
n0 = N + 1 with exact rationals, together with a ratio test showing the
slack only grows with n0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import mpmath

from .core import InstanceError, WitnessResult

SAFETY_MARGIN = 2


def ceil_sqrt(q: Fraction) -> int:
    """Exact ceiling of sqrt(q) for a non-negative rational."""
    root = math.isqrt(math.floor(q))
    return root if root * root == q else root + 1


def floor_sqrt(q: Fraction) -> int:
    return math.isqrt(math.floor(q))


def upper_rational(value, denominator: int = 10 ** 9) -> Fraction:
    """A rational at least `value` (an mpf computed with ample precision)."""
    candidate = Fraction(int(mpmath.ceil(value * denominator)), denominator)
    if mpmath.mpf(candidate.numerator) / candidate.denominator < value:
        raise InstanceError("rational upper bound failed")
    return candidate


def to_mpf(q) -> mpmath.mpf:
    q = Fraction(q)
    return mpmath.mpf(q.numerator) / q.denominator


def binary_entropy(q) -> mpmath.mpf:
    q = to_mpf(q)
    return -q * mpmath.log(q, 2) - (1 - q) * mpmath.log(1 - q, 2)


# ---------------------------------------------------------------- distance families

def distance_chain_holds(ratio: Fraction, N: int) -> bool:
    """ratio^n0 (1 - 1/(N-1))^(n0+1) >= 2 n0^3 at n0 = N+1, plus the growth test."""
    if N < 3:
        return False
    n0 = N + 1
    shrink = 1 - Fraction(1, N - 1)
    boundary = ratio ** n0 * shrink ** (n0 + 1) >= 2 * n0 ** 3
    growth = ratio * shrink >= Fraction(n0 + 1, n0) ** 3
    return boundary and growth


def distance_threshold(ratio: Fraction) -> int:
    """Least N passing distance_chain_holds, plus the safety margin."""
    if ratio <= 1:
        raise InstanceError("the distance chain needs ratio > 1")
    lr = math.log(ratio)
    N = 3
    while True:
        n0 = N + 1
        shrink = math.log1p(-1 / (N - 1))
        if (n0 * lr + (n0 + 1) * shrink >= math.log(2 * n0 ** 3) - 1e-9
                and lr + shrink >= 3 * math.log1p(1 / n0) - 1e-9):
            break
        N += 1
    while not distance_chain_holds(ratio, N):
        N += 1
    while N > 3 and distance_chain_holds(ratio, N - 1):
        N -= 1
    return N + SAFETY_MARGIN


def squared_distance_chain_holds(half_ratio: Fraction, N: int) -> bool:
    """(1 - 1/(N-1))^(2(n0+1)) >= 32 n0^6 half_ratio^n0 at n0 = N+1, plus growth."""
    if N < 3:
        return False
    n0 = N + 1
    shrink = (1 - Fraction(1, N - 1)) ** 2
    boundary = shrink ** (n0 + 1) >= 32 * n0 ** 6 * half_ratio ** n0
    growth = shrink >= Fraction(n0 + 1, n0) ** 6 * half_ratio
    return boundary and growth


def squared_distance_threshold(half_ratio: Fraction) -> int:
    if not 0 < half_ratio < 1:
        raise InstanceError("the squared chain needs 0 < half_ratio < 1")
    lh = math.log(half_ratio)
    N = 3
    while True:
        n0 = N + 1
        shrink = 2 * math.log1p(-1 / (N - 1))
        if ((n0 + 1) * shrink >= math.log(32) + 6 * math.log(n0) + n0 * lh - 1e-9
                and shrink >= 6 * math.log1p(1 / n0) + lh - 1e-9):
            break
        N += 1
    while not squared_distance_chain_holds(half_ratio, N):
        N += 1
    while N > 3 and squared_distance_chain_holds(half_ratio, N - 1):
        N -= 1
    return N + SAFETY_MARGIN


# ---------------------------------------------------------------- adjacent-block families

@dataclass(frozen=True)
class GeometricChain:
    """P*(n) <= scale * n * base^n for n > N, with z(n) = b^n / n and slack 1/2."""

    b: Fraction
    base: Fraction
    scale: Fraction
    N: int

    def holds(self) -> dict[str, bool]:
        b, base, scale, N = self.b, self.base, self.scale, self.N
        n0 = N + 1
        return {
            "geometric-tail": b ** (N + 1) <= (1 - b) ** 2,
            "boundary": b ** (2 * n0 + 1) >= 2 * scale * n0 ** 2 * base ** n0,
            "growth": b * b * Fraction(n0, n0 + 1) ** 2 >= base,
        }


def _geometric_threshold(b: float, base: float, scale: float) -> int | None:
    if not (math.sqrt(base) < b < 1):
        return None
    lb, lbase = math.log(b), math.log(base)
    N_tail = math.ceil(2 * math.log(1 - b) / lb) - 1
    # growth: (n0/(n0+1))^2 >= base/b^2
    root = math.sqrt(base) / b
    N_growth = math.ceil(1 / (1 - root)) if root < 1 else None
    if N_growth is None:
        return None
    N = max(N_tail, N_growth, 3)

    def boundary(N):
        n0 = N + 1
        return (2 * n0 + 1) * lb >= math.log(2 * scale) + 2 * math.log(n0) + n0 * lbase

    if not boundary(N):
        lo, hi = N, max(N * 2, 16)
        while not boundary(hi):
            hi *= 2
        while lo + 1 < hi:
            mid = (lo + hi) // 2
            if boundary(mid):
                hi = mid
            else:
                lo = mid
        N = hi
    return N


def geometric_chain(base: Fraction, scale: Fraction, floor_N: int = 3,
                    denominator: int = 10 ** 4) -> GeometricChain:
    """Pick b on a rational grid minimising N, then confirm the chain exactly."""
    best = None
    start = math.floor(math.sqrt(float(base)) * denominator) + 1
    for j in range(start, denominator):
        N = _geometric_threshold(j / denominator, float(base), float(scale))
        if N is not None and (best is None or N < best[1]):
            best = (j, N)
    if best is None:
        raise InstanceError("no admissible b")
    b = Fraction(best[0], denominator)
    N = max(best[1], floor_N)
    chain = GeometricChain(b, base, scale, N)
    while not all(chain.holds().values()):
        N += 1
        chain = GeometricChain(b, base, scale, N)
    return GeometricChain(b, base, scale, N + SAFETY_MARGIN)


def entropy_base(q: Fraction, exponent_scale: Fraction = Fraction(1)) -> Fraction:
    """Rational upper bound on 2^((H(q) - 1) * exponent_scale), q >= 1/2."""
    with mpmath.workprec(256):
        value = mpmath.power(2, (binary_entropy(q) - 1) * to_mpf(exponent_scale))
        return upper_rational(value)


def chain_witness_result(name: str, checks: dict[str, bool], details: dict) -> WitnessResult:
    return WitnessResult(name, all(checks.values()), {**details, "checks": checks})
