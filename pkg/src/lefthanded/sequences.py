"""Binary sequences with far-apart repetitions and with very different adjacent blocks."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np

from .core import (
    EventFamily,
    EventSpec,
    InstanceError,
    TailWitness,
    WitnessResult,
    uniform_variable,
)
from .tails import (
    GeometricChain,
    binary_entropy,
    chain_witness_result,
    distance_chain_holds,
    distance_threshold,
    entropy_base,
    geometric_chain,
)

import mpmath


def _fraction(value) -> Fraction:
    return value if isinstance(value, Fraction) else Fraction(value)


def _as_array(values) -> np.ndarray:
    return np.asarray(values, dtype=np.int64)


# ---------------------------------------------------------------- far-apart repetitions

@dataclass(frozen=True)
class BeckParams:
    epsilon: Fraction
    N: int
    slack_alpha: Fraction = Fraction(1, 2)
    verified: bool = True

    def f(self, n: int) -> Fraction:
        return (2 - self.epsilon) ** n


def _repetition_predicate(k: int, l: int, n: int):
    def predicate(values):
        return values[k:k + n] == values[l:l + n]
    return predicate


class BeckFamily(EventFamily):
    """A_{k,l,n}: x[k,k+n) = x[l,l+n) where n > N is the least size with f(n) >= l - k.

    A repetition of length n at distance d <= f(n) contains one of length
    n(d) = min{m > N : f(m) >= d} at the same distance, so forbidding that
    one event per distance is enough.  Size n owns the distances
    (floor f(n-1), floor f(n)], and N + 1 also owns every shorter one.
    """

    name = "beck"

    def __init__(self, params: BeckParams, num_variables: int | None = None):
        self.params = params
        self.alpha = params.slack_alpha
        self.num_variables = num_variables
        self._floor: list[int] = []
        self._cache: dict[tuple, EventSpec] = {}
        self._z: dict[int, Fraction] = {}

    def _floor_f(self, n: int) -> int:
        while len(self._floor) <= n:
            self._floor.append(math.floor(self.params.f(len(self._floor))))
        return self._floor[n]

    def distances(self, n: int) -> range:
        """The distances l - k owned by size n (empty for n <= N)."""
        if n <= self.params.N:
            return range(0)
        lo = 1 if n == self.params.N + 1 else self._floor_f(n - 1) + 1
        return range(lo, self._floor_f(n) + 1)

    def _sizes(self, max_start):
        """(n, distances(n)) for sizes whose least distance is <= max_start, skipping empty ones."""
        n = self.params.N + 1
        while True:
            ds = self.distances(n)
            if ds.start > max_start:
                return
            if ds:
                yield n, ds
            n += 1

    def _make(self, k, l, n) -> EventSpec:
        key = (k, l, n)
        e = self._cache.get(key)
        if e is None:
            if n not in self._z:
                self._z[n] = 1 / (self.params.f(n) * n ** 3)
            e = EventSpec(key, k, l, l + n - 1, _repetition_predicate(k, l, n),
                          Fraction(1, 2 ** n), self._z[n])
            self._cache[key] = e
        return e

    def _in_range(self, hi: int) -> bool:
        return self.num_variables is None or hi < self.num_variables

    def variable(self, i):
        if i < 0 or not self._in_range(i):
            raise InstanceError(f"beck: no variable x_{i}")
        return uniform_variable(i, 2)

    def events_ending_at(self, hi):
        if not self._in_range(hi):
            return []
        out = []
        for n, ds in self._sizes(hi):
            l = hi - n + 1
            if ds.start > l:
                break
            out.extend(self._make(l - d, l, n) for d in range(ds.start, min(ds.stop, l + 1)))
        return sorted(out, key=lambda e: e.id)

    def events_with_rsp_containing(self, i):
        out = []
        for n, ds in self._sizes(i):
            for l in range(max(ds.start, i - n + 1), i + 1):
                if self._in_range(l + n - 1):
                    out.extend(self._make(l - d, l, n) for d in range(ds.start, min(ds.stop, l + 1)))
        return out

    def min_hi(self):
        for n, ds in self._sizes(float("inf")):
            first = ds.start + n - 1
            return first if self._in_range(first) else None

    def max_hi(self):
        return None if self.num_variables is None else self.num_variables - 1

    def rsp_reach(self, length):
        top = None
        for n, _ in self._sizes(length - 1):
            top = n
        if top is None:
            return None
        reach = length - 1 + top - 1
        return reach if self.num_variables is None else min(reach, self.num_variables - 1)

    def event(self, event_id):
        k, l, n = (int(v) for v in event_id)
        if k < 0 or (l - k) not in self.distances(n) or not self._in_range(l + n - 1):
            raise InstanceError(f"beck: unknown event {event_id!r}")
        return self._make(k, l, n)

    def count_events_within(self, lo, hi):
        # events of size n and distance d: hi - lo + 2 - n - d start positions
        total = 0
        for n, ds in self._sizes(hi - lo):
            c = hi - lo + 2 - n
            top = min(ds.stop - 1, c - 1)
            if top >= ds.start:
                terms = top - ds.start + 1
                total += terms * c - (ds.start + top) * terms // 2
        return total

    # -- vectorised scans, one pass per distance
    def _holding(self, x: np.ndarray, lo_hi: int, hi_hi: int, vbl_lo_min: int, first_only: bool):
        best = None
        found = []
        for n, ds in self._sizes(hi_hi):
            if ds.start + n - 1 > hi_hi:
                break
            for d in range(ds.start, min(ds.stop, hi_hi - n + 2)):
                k_lo = max(vbl_lo_min, lo_hi - d - n + 1, 0)
                k_hi = hi_hi - d - n + 1
                if k_lo > k_hi:
                    continue
                if first_only and best is not None and k_lo + d + n - 1 > best[0]:
                    continue
                count = k_hi - k_lo + 1
                eq = x[k_lo:k_hi + n] == x[k_lo + d:k_hi + d + n]
                c = np.concatenate(([0], np.cumsum(eq)))
                hits = np.nonzero(c[n:n + count] - c[:count] == n)[0]
                if not len(hits):
                    continue
                if first_only:
                    k = k_lo + int(hits[0])
                    key = (k + d + n - 1, (k, k + d, n))
                    if best is None or key < best:
                        best = key
                else:
                    found.extend((k_lo + int(h), d, n) for h in hits)
        if first_only:
            return None if best is None else self._make(*best[1])
        return sorted((self._make(k, k + d, n) for k, d, n in found), key=self.priority_key)

    def least_bad(self, view, lo_hi, hi_hi, vbl_lo_min=0):
        if self.num_variables is not None:
            hi_hi = min(hi_hi, self.num_variables - 1)
        return self._holding(_as_array(view[:hi_hi + 1]), lo_hi, hi_hi, vbl_lo_min, True)

    def all_bad(self, view, lo, hi):
        return self._holding(_as_array(view[:hi + 1]), 0, hi, lo, False)


def beck_witness(params: BeckParams) -> TailWitness:
    ratio = 2 / (2 - params.epsilon)

    def check() -> WitnessResult:
        n0 = params.N + 1
        shrink = 1 - Fraction(1, params.N - 1)
        checks = {
            "boundary": ratio ** n0 * shrink ** (n0 + 1) >= 2 * n0 ** 3,
            "growth": ratio * shrink >= Fraction(n0 + 1, n0) ** 3,
        }
        return chain_witness_result("beck-distance-chain", checks,
                                    {"N": params.N, "epsilon": str(params.epsilon)})

    def neighbor_count(n: int, n0: int) -> int:
        return (n + n0) * math.ceil(params.f(n))

    return TailWitness("beck-distance-chain", neighbor_count, check)


@lru_cache(maxsize=None)
def beck_threshold(epsilon: Fraction) -> int:
    return distance_threshold(2 / (2 - epsilon))


def beck_family(epsilon, threshold: int | None = None,
                num_variables: int | None = None) -> tuple[BeckFamily, BeckParams]:
    """The far-apart repetition family.  `threshold` overrides N (tests only)."""
    eps = _fraction(epsilon)
    if not 0 < eps < 1:
        raise InstanceError("beck: epsilon must lie in (0, 1)")
    if threshold is None:
        params = BeckParams(eps, beck_threshold(eps))
    else:
        params = BeckParams(eps, int(threshold), verified=distance_chain_holds(2 / (2 - eps), int(threshold)))
    family = BeckFamily(params, num_variables)
    if params.verified:
        family.lll_witness = beck_witness(params)
    return family, params


def beck_event(k: int, l: int, n: int, epsilon=Fraction(1, 2)) -> EventSpec:
    """A single repetition event, whatever its distance (used for brute-force checks)."""
    eps = _fraction(epsilon)
    f = (2 - eps) ** n
    return EventSpec((k, l, n), k, l, l + n - 1, _repetition_predicate(k, l, n),
                     Fraction(1, 2 ** n), 1 / (f * n ** 3))


def distance_limit(f: Callable[[int], object]) -> Callable[[int], int]:
    """floor(f(n)), cached; f may return a Fraction, float or int."""
    cache: dict[int, int] = {}

    def limit(n: int) -> int:
        if n not in cache:
            cache[n] = math.floor(f(n))
        return cache[n]
    return limit


def block_repetition_checker(bits: Sequence[int], f: Callable[[int], object], N: int) -> list[tuple]:
    """All (k, l, n) with n > N, 1 <= l - k <= f(n) and x[k,k+n) = x[l,l+n)."""
    x = _as_array(bits)
    L = len(x)
    limit = distance_limit(f)
    out = []
    for d in range(1, L):
        # least admissible size at this distance
        n_lo = N + 1
        while n_lo + d <= L and limit(n_lo) < d:
            n_lo += 1
        if n_lo + d > L:
            continue
        eq = x[:L - d] == x[d:]
        m = len(eq)
        positions = np.where(eq, m, np.arange(m))
        next_false = np.minimum.accumulate(positions[::-1])[::-1]
        run = next_false - np.arange(m)
        for k in np.nonzero(run >= n_lo)[0]:
            k = int(k)
            for n in range(n_lo, int(run[k]) + 1):
                out.append((k, k + d, n))
    out.sort()
    return out


def block_repetition_checker_naive(bits: Sequence[int], f: Callable[[int], object], N: int) -> list[tuple]:
    """Reference scan over every pair of start positions."""
    bits = list(bits)
    L = len(bits)
    limit = distance_limit(f)
    out = []
    for k in range(L):
        for l in range(k + 1, L):
            d = l - k
            n = 0
            while l + n < L and bits[k + n] == bits[l + n]:
                n += 1
                if n > N and d <= limit(n):
                    out.append((k, l, n))
    out.sort()
    return out


# ---------------------------------------------------------------- very different adjacent blocks

@dataclass(frozen=True)
class AlonParams:
    epsilon: Fraction
    N: int
    b: Fraction
    bin_alpha: Fraction
    slack_alpha: Fraction = Fraction(1, 2)
    verified: bool = True

    def share_threshold(self, n: int) -> int:
        return math.ceil((Fraction(1, 2) + self.epsilon) * n)


@lru_cache(maxsize=None)
def binomial_tail(n: int, t: int) -> Fraction:
    """Pr(Bin(n, 1/2) >= t)."""
    return Fraction(sum(math.comb(n, r) for r in range(max(t, 0), n + 1)), 2 ** n)


def _share_predicate(k: int, n: int, t: int):
    def predicate(values):
        return sum(values[k + i] == values[k + n + i] for i in range(n)) >= t
    return predicate


class AlonFamily(EventFamily):
    """A_{k,n}: x[k,k+n) and x[k+n,k+2n) agree in at least ceil((1/2+eps) n) places."""

    name = "alon"
    settlement_available = False

    def __init__(self, params: AlonParams, num_variables: int | None = None):
        self.params = params
        self.alpha = params.slack_alpha
        self.num_variables = num_variables
        self._cache: dict[tuple, EventSpec] = {}
        self._z: dict[int, Fraction] = {}

    def pstar(self, n: int) -> Fraction:
        return binomial_tail(n, self.params.share_threshold(n))

    def z(self, n: int) -> Fraction:
        if n not in self._z:
            self._z[n] = self.params.b ** n / n
        return self._z[n]

    def _make(self, k, n):
        e = self._cache.get((k, n))
        if e is None:
            e = EventSpec((k, n), k, k + n, k + 2 * n - 1,
                          _share_predicate(k, n, self.params.share_threshold(n)),
                          self.pstar(n), self.z(n))
            self._cache[(k, n)] = e
        return e

    def _in_range(self, hi):
        return self.num_variables is None or hi < self.num_variables

    def variable(self, i):
        if i < 0 or not self._in_range(i):
            raise InstanceError(f"alon: no variable x_{i}")
        return uniform_variable(i, 2)

    def events_ending_at(self, hi):
        if not self._in_range(hi):
            return []
        out = [self._make(hi - 2 * n + 1, n)
               for n in range(self.params.N + 1, (hi + 1) // 2 + 1)]
        return sorted(out, key=lambda e: e.id)

    def events_with_rsp_containing(self, i):
        out = []
        for n in range(self.params.N + 1, i + 1):
            for k in range(max(0, i - 2 * n + 1), i - n + 1):
                if self._in_range(k + 2 * n - 1):
                    out.append(self._make(k, n))
        return out

    def min_hi(self):
        first = 2 * (self.params.N + 1) - 1
        return first if self._in_range(first) else None

    def max_hi(self):
        return None if self.num_variables is None else self.num_variables - 1

    def rsp_reach(self, length):
        # largest hi is k + 2n - 1 with k + n = length - 1 and k = 0
        if length - 1 < self.params.N + 1:
            return None
        reach = 2 * (length - 1) - 1
        return reach if self.num_variables is None else min(reach, self.num_variables - 1)

    def event(self, event_id):
        k, n = (int(v) for v in event_id)
        if n <= self.params.N or k < 0 or not self._in_range(k + 2 * n - 1):
            raise InstanceError(f"alon: unknown event {event_id!r}")
        return self._make(k, n)

    def count_events_within(self, lo, hi):
        return sum(max(0, hi - lo + 1 - 2 * n + 1)
                   for n in range(self.params.N + 1, (hi - lo + 1) // 2 + 1))

    # -- vectorised scans
    def _holding(self, x: np.ndarray, lo_hi: int, hi_hi: int, vbl_lo_min: int, first_only: bool):
        found = []
        best = None
        for n in range(self.params.N + 1, (hi_hi - vbl_lo_min + 1) // 2 + 1):
            k_lo = max(vbl_lo_min, lo_hi - 2 * n + 1)
            k_hi = hi_hi - 2 * n + 1
            if k_lo > k_hi:
                continue
            if first_only and best is not None and k_lo + 2 * n - 1 > best[0]:
                continue
            count = k_hi - k_lo + 1
            eq = x[k_lo:k_hi + n] == x[k_lo + n:k_hi + 2 * n]
            c = np.concatenate(([0], np.cumsum(eq)))
            share = c[n:n + count] - c[:count]
            hits = np.nonzero(share >= self.params.share_threshold(n))[0]
            if not len(hits):
                continue
            if first_only:
                k = k_lo + int(hits[0])
                key = (k + 2 * n - 1, (k, n))
                if best is None or key < best:
                    best = key
            else:
                found.extend((k_lo + int(h), n) for h in hits)
        if first_only:
            return None if best is None else self._make(*best[1])
        events = [self._make(k, n) for k, n in found]
        return sorted(events, key=self.priority_key)

    def least_bad(self, view, lo_hi, hi_hi, vbl_lo_min=0):
        if self.num_variables is not None:
            hi_hi = min(hi_hi, self.num_variables - 1)
        return self._holding(_as_array(view[:hi_hi + 1]), lo_hi, hi_hi, vbl_lo_min, True)

    def all_bad(self, view, lo, hi):
        return self._holding(_as_array(view[:hi + 1]), lo, hi, lo, False)


def alon_witness(params: AlonParams, chain: GeometricChain) -> TailWitness:
    q = Fraction(1, 2) + params.epsilon

    def check() -> WitnessResult:
        checks = dict(chain.holds())
        with mpmath.workprec(256):
            exact = mpmath.power(2, binary_entropy(q) - 1)
            checks["entropy-base"] = mpmath.mpf(params.bin_alpha.numerator) / params.bin_alpha.denominator >= exact
        family = AlonFamily(params)
        checks["pstar-spot"] = all(
            family.pstar(n) <= n * params.bin_alpha ** n
            for n in range(params.N + 1, params.N + 4))
        return chain_witness_result("alon-geometric-chain", checks,
                                    {"N": params.N, "b": str(params.b),
                                     "bin_alpha": str(params.bin_alpha)})

    return TailWitness("alon-geometric-chain", lambda n, n0: n + n0, check)


@lru_cache(maxsize=None)
def _alon_chain(epsilon: Fraction) -> tuple[Fraction, GeometricChain]:
    base = entropy_base(Fraction(1, 2) + epsilon)
    return base, geometric_chain(base, Fraction(1))


def alon_family(epsilon, threshold: int | None = None,
                num_variables: int | None = None) -> tuple[AlonFamily, AlonParams]:
    eps = _fraction(epsilon)
    if not 0 < eps < Fraction(1, 2):
        raise InstanceError("alon: epsilon must lie in (0, 1/2)")
    base, chain = _alon_chain(eps)
    if threshold is None:
        params = AlonParams(eps, chain.N, chain.b, base)
    else:
        params = AlonParams(eps, int(threshold), chain.b, base, verified=False)
    family = AlonFamily(params, num_variables)
    if params.verified:
        family.lll_witness = alon_witness(params, chain)
    return family, params


def adjacency_difference_checker(bits: Sequence[int], frac, N: int) -> list[tuple]:
    """All (k, n) with n > N whose adjacent blocks differ in fewer than frac * n places."""
    frac = _fraction(frac)
    x = _as_array(bits)
    L = len(x)
    out = []
    for n in range(N + 1, L // 2 + 1):
        ne = x[:L - n] != x[n:]
        c = np.concatenate(([0], np.cumsum(ne)))
        count = L - 2 * n + 1
        diff = c[n:n + count] - c[:count]
        # diff < frac * n  <=>  diff < ceil(frac * n), clamped so it fits int64
        bound = min(math.ceil(frac * n), n + 1)
        bad = np.nonzero(diff < bound)[0]
        out.extend((int(k), n) for k in bad)
    out.sort()
    return out


def adjacency_difference_checker_naive(bits: Sequence[int], frac, N: int) -> list[tuple]:
    """Reference scan: XOR the two blocks as integers and count set bits."""
    frac = _fraction(frac)
    bits = list(bits)
    L = len(bits)
    word = sum(b << i for i, b in enumerate(bits))
    out = []
    for n in range(N + 1, L // 2 + 1):
        mask = (1 << n) - 1
        for k in range(L - 2 * n + 1):
            left = (word >> k) & mask
            right = (word >> (k + n)) & mask
            if bin(left ^ right).count("1") < frac * n:
                out.append((k, n))
    out.sort()
    return out
