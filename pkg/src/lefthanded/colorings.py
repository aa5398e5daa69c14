"""Colourings: a far-from-integers angle for lacunary sequences, and square-free list colourings of the path."""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Iterator, Sequence

import mpmath
import numpy as np

from .core import (
    EventFamily,
    EventSpec,
    InstanceError,
    PrecisionError,
    TailWitness,
    WitnessResult,
    uniform_variable,
)
from .tails import chain_witness_result, to_mpf


# ---------------------------------------------------------------- lacunary sequences

LACUNARY_C = Fraction(1, 360)
LACUNARY_C1 = 6


def _powers(base: int) -> Callable[[int], int]:
    return lambda j: base ** j


def parse_sequence(spec) -> tuple[Callable[[int], int], int | None]:
    """`powers:b` or an explicit list -> (term function, length or None)."""
    if isinstance(spec, str):
        kind, _, arg = spec.partition(":")
        if kind != "powers" or not arg.isdigit() or int(arg) < 2:
            raise InstanceError(f"unknown sequence generator {spec!r}")
        return _powers(int(arg)), None
    terms = [int(v) for v in spec]
    if not terms:
        raise InstanceError("empty lacunary sequence")
    return terms.__getitem__, len(terms)


def doubling_time(epsilon: Fraction) -> int:
    """Least M >= 6 with (1 + eps)^M > 2."""
    M = 6
    while (1 + epsilon) ** M <= 2:
        M += 1
    return M


@dataclass
class LacunaryInstance:
    term: Callable[[int], int] = field(repr=False)
    length: int | None
    epsilon: Fraction
    M: int
    p: int
    h: int
    delta: Fraction
    alpha: Fraction
    c: Fraction = LACUNARY_C
    C1: int = LACUNARY_C1
    _ell: list[int] = field(default_factory=list, repr=False)

    @property
    def k(self) -> int:
        """Number of colours, ceil(1/delta)."""
        return math.ceil(1 / self.delta)

    @property
    def z(self) -> Fraction:
        return Fraction(1, self.h)

    @property
    def pstar(self) -> Fraction:
        return 10 * self.delta

    def n(self, j: int) -> int:
        return self.term(j)

    def ell(self, j: int) -> int:
        """Largest l with 2^l <= n_j / (2 delta)."""
        while len(self._ell) <= j:
            i = len(self._ell)
            self._ell.append(math.floor(Fraction(self.term(i)) / (2 * self.delta)).bit_length() - 1)
        return self._ell[j]

    def indices(self) -> Iterator[int]:
        j = 0
        while self.length is None or j < self.length:
            yield j
            j += 1


def lacunary_delta(M: int) -> Fraction:
    """c / (M log2 M) rounded down to 1 / ceil(M log2 M / c)."""
    with mpmath.workprec(256):
        value = M * mpmath.log(M, 2) / to_mpf(LACUNARY_C)
        return Fraction(1, int(mpmath.ceil(value)))


def lacunary_instance(sequence, epsilon, verify_terms: int = 64) -> LacunaryInstance:
    eps = Fraction(epsilon)
    if eps <= 0:
        raise InstanceError("lacunary: epsilon must be positive")
    term, length = parse_sequence(sequence)
    M = doubling_time(eps)
    checked = verify_terms if length is None else length
    prev = None
    for j in range(checked):
        v = term(j)
        # ratio >= 1 + eps; the proof only uses the strict doubling test below
        if v <= 0 or (prev is not None and Fraction(v, prev) < 1 + eps):
            raise InstanceError(f"lacunary: term {j} ({v}) breaks the ratio 1 + {eps}")
        if j >= M and v <= 2 * term(j - M):
            raise InstanceError(f"lacunary: doubling time {M} fails at term {j}")
        prev = v
    with mpmath.workprec(128):
        p = int(mpmath.ceil(LACUNARY_C1 * mpmath.log(M, 2)))
    h = 2 * p * M
    delta = lacunary_delta(M)
    ratio = 10 * delta / (Fraction(1, h) * (1 - Fraction(1, h)) ** h)
    alpha = Fraction(math.ceil(ratio * 1000), 1000)
    return LacunaryInstance(term, length, eps, M, p, h, delta, alpha)


def _cone_meets_near_integers(a: int, bits: int, n: int, delta: Fraction) -> bool:
    """Does some theta in [a/2^bits, (a+1)/2^bits) have ||theta n|| < delta?"""
    lo = Fraction(a * n, 2 ** bits) - delta
    hi = Fraction((a + 1) * n, 2 ** bits) + delta
    q = math.floor(lo) + 1                 # least integer > lo
    return q < hi


def _prefix_integer(values, length: int) -> int:
    a = 0
    for i in range(length):
        a = 2 * a + int(values[i])
    return a


def _lacunary_predicate(n: int, ell: int, delta: Fraction):
    def predicate(values):
        return _cone_meets_near_integers(_prefix_integer(values, ell), ell, n, delta)
    return predicate


class LacunaryFamily(EventFamily):
    """A_j: the dyadic interval of the first l_j bits of theta meets {||theta n_j|| < delta}."""

    name = "lacunary"

    def __init__(self, instance: LacunaryInstance):
        self.instance = instance
        self.alpha = instance.alpha
        self._cache: dict[int, EventSpec] = {}
        if instance.length is not None:
            self.num_variables = instance.ell(instance.length - 1)

    def _make(self, j):
        e = self._cache.get(j)
        if e is None:
            inst = self.instance
            ell = inst.ell(j)
            e = EventSpec((j,), 0, max(0, ell - inst.p), ell - 1,
                          _lacunary_predicate(inst.n(j), ell, inst.delta), inst.pstar, inst.z)
            self._cache[j] = e
        return e

    def variable(self, i):
        if i < 0 or (self.num_variables is not None and i >= self.num_variables):
            raise InstanceError(f"lacunary: no bit x_{i}")
        return uniform_variable(i, 2)

    def _events_with_ell_in(self, lo: int, hi: int) -> list[EventSpec]:
        out = []
        for j in self.instance.indices():
            ell = self.instance.ell(j)
            if ell > hi:
                break
            if ell >= lo:
                out.append(self._make(j))
        return out

    def events_ending_at(self, hi):
        return self._events_with_ell_in(hi + 1, hi + 1)

    def events_with_rsp_containing(self, i):
        return [e for e in self._events_with_ell_in(i + 1, i + self.instance.p) if e.rsp_lo <= i]

    def min_hi(self):
        return self.instance.ell(0) - 1

    def max_hi(self):
        return None if self.num_variables is None else self.num_variables - 1

    def rsp_reach(self, length):
        events = self._events_with_ell_in(0, length - 1 + self.instance.p)
        hits = [e.hi for e in events if e.rsp_lo <= length - 1]
        return max(hits) if hits else None

    def event(self, event_id):
        (j,) = (int(v) for v in event_id)
        if j < 0 or (self.instance.length is not None and j >= self.instance.length):
            raise InstanceError(f"lacunary: unknown event {event_id!r}")
        return self._make(j)


def lacunary_witness(instance: LacunaryInstance) -> TailWitness:
    def check() -> WitnessResult:
        h, M, delta = instance.h, instance.M, instance.delta
        with mpmath.workprec(256):
            exact = to_mpf(LACUNARY_C) / (M * mpmath.log(M, 2))
            rounded_down = to_mpf(delta) <= exact
        checks = {
            "delta-rounded-down": rounded_down,
            "delta-above-power": Fraction(1, M ** LACUNARY_C1) <= delta,
            "neighbor-condition": instance.alpha * Fraction(1, h) * (1 - Fraction(1, h)) ** h >= 10 * delta,
            "alpha-below-one": instance.alpha < 1,
        }
        return chain_witness_result("lacunary-uniform", checks,
                                    {"M": M, "p": instance.p, "h": h, "delta": str(delta),
                                     "alpha": str(instance.alpha)})

    # at most M events share an l value, and rsp windows have length p
    return TailWitness("lacunary-uniform", lambda n, n0: 2 * instance.p * instance.M, check)


def lacunary_family(sequence, epsilon, verify_terms: int = 64) -> tuple[LacunaryFamily, LacunaryInstance]:
    instance = lacunary_instance(sequence, epsilon, verify_terms)
    family = LacunaryFamily(instance)
    family.lll_witness = lacunary_witness(instance)
    return family, instance


@dataclass
class NormReport:
    checked: int
    bits: int
    failures: list[int]

    @property
    def ok(self) -> bool:
        return not self.failures


def verify_norm(theta_bits: Sequence[int], sequence, J: int, delta) -> NormReport:
    """Check ||theta n_j|| >= delta for j < J and every theta extending the given bits."""
    delta = Fraction(delta)
    if isinstance(sequence, LacunaryInstance):
        term, ell = sequence.n, sequence.ell
    else:
        term, _ = parse_sequence(sequence)
        ell = lambda j: math.floor(Fraction(term(j)) / (2 * delta)).bit_length() - 1
    B = len(theta_bits)
    if J > 0 and ell(J - 1) > B:
        raise PrecisionError(f"need {ell(J - 1)} bits of theta, have {B}", required=ell(J - 1))
    a = _prefix_integer(theta_bits, B)
    failures = [j for j in range(J) if _cone_meets_near_integers(a, B, term(j), delta)]
    return NormReport(J, B, failures)


def usable_terms(instance: LacunaryInstance, bits: int) -> int:
    """How many terms verify_norm can certify from `bits` bits."""
    J = 0
    for j in instance.indices():
        if instance.ell(j) > bits:
            break
        J = j + 1
    return J


def color_vertex(theta_bits: Sequence[int], delta, x: int) -> int:
    """floor(k frac(theta x)) with k = ceil(1/delta), exact over the dyadic cone of theta."""
    k = math.ceil(1 / Fraction(delta))
    if x == 0:
        return 0
    B = len(theta_bits)
    a = _prefix_integer(theta_bits, B)
    lo = Fraction(a * x * k, 2 ** B)
    hi = Fraction((a + 1) * x * k, 2 ** B)
    if x > 0:
        # k theta x ranges over [lo, hi)
        cell = math.floor(lo)
        if hi > cell + 1:
            raise PrecisionError(f"theta has too few bits to colour {x}", required=B + 32)
    else:
        # k theta x ranges over (hi, lo]
        cell = math.floor(lo)
        if math.floor(hi) != cell:
            raise PrecisionError(f"theta has too few bits to colour {x}", required=B + 32)
    return cell % k


def coloring_conflicts(theta_bits: Sequence[int], delta, sequence_terms: Sequence[int],
                       lo: int, hi: int) -> list[tuple[int, int]]:
    """Monochromatic edges {u, u + s} with s a sequence term and both ends in [lo, hi]."""
    colors = {x: color_vertex(theta_bits, delta, x) for x in range(lo, hi + 1)}
    out = []
    for s in sequence_terms:
        for u in range(lo, hi - s + 1):
            if colors[u] == colors[u + s]:
                out.append((u, u + s))
    return out


def bits_to_string(bits: Sequence[int]) -> str:
    return "".join("1" if b else "0" for b in bits)


# ---------------------------------------------------------------- square-free list colourings

TRIPLE_RANGES = (6, 5, 4)
TRIPLE_SIZE = 6 * 5 * 4


def thue_decode_triple(v: int) -> tuple[int, int, int]:
    return (v // 20, (v // 4) % 5, v % 4)


class ListAssignment:
    """Colour lists L(i), each with at least six colours, kept in ascending order."""

    def __init__(self, lists: Callable[[int], Sequence[int]] | Sequence[Sequence[int]],
                 length: int | None = None):
        if callable(lists):
            self._fn = lists
            self.length = length
            self._cache: dict[int, tuple[int, ...]] = {}
        else:
            rows = [tuple(sorted(set(int(c) for c in row))) for row in lists]
            self._fn = rows.__getitem__
            self.length = len(rows)
            self._cache = dict(enumerate(rows))
            for i, row in enumerate(rows):
                self._check(i, row)

    @staticmethod
    def _check(i, row):
        if len(row) < 6:
            raise InstanceError(f"list L({i}) has {len(row)} colours, needs at least 6")

    def __call__(self, i: int) -> tuple[int, ...]:
        row = self._cache.get(i)
        if row is None:
            if self.length is not None and i >= self.length:
                raise InstanceError(f"no list for position {i}")
            row = tuple(sorted(set(int(c) for c in self._fn(i))))
            self._check(i, row)
            self._cache[i] = row
        return row

    def rows(self, length: int) -> list[list[int]]:
        return [list(self(i)) for i in range(length)]


def uniform_lists(colors: Sequence[int] = range(6)) -> ListAssignment:
    row = tuple(colors)
    return ListAssignment(lambda i: row)


def random_lists(seed: int, universe: int = 10, size: int = 6,
                 length: int | None = None) -> ListAssignment:
    """L(i) is a seeded random `size`-subset of range(universe)."""
    if size < 6 or universe < size:
        raise InstanceError("random_lists: need 6 <= size <= universe")

    def row(i):
        return random.Random(f"{seed}:{i}").sample(range(universe), size)
    return ListAssignment(row, length)


def candidates(lists: ListAssignment, i: int, prev: Sequence[int]) -> tuple[int, tuple[int, ...]]:
    """(coordinate, candidate colours) for stage i given the colours a[0, i)."""
    row = lists(i)
    if i == 0:
        return 0, row[:6]
    if i < 3 or prev[i - 3] != prev[i - 1]:
        avoid = (prev[i - 1],)
        coord = 1
    else:
        avoid = (prev[i - 2], prev[i - 1])
        coord = 2
    r = TRIPLE_RANGES[coord]
    return coord, tuple(c for c in row if c not in avoid)[:r]


def thue_decode(x_values: Sequence[int], lists: ListAssignment, start: int = 0,
                prefix: list[int] | None = None) -> list[int]:
    """Replay the staged process: x_i picks one colour from the stage-i candidates."""
    out = list(prefix[:start]) if prefix is not None else []
    for i in range(len(out), len(x_values)):
        coord, cand = candidates(lists, i, out)
        out.append(cand[thue_decode_triple(int(x_values[i]))[coord]])
    return out


def square_free_checker(seq: Sequence) -> list[tuple[int, int]]:
    """Every (k, n) with seq[k, k+n) = seq[k+n, k+2n); the plain reference scan."""
    seq = list(seq)
    L = len(seq)
    out = []
    for n in range(1, L // 2 + 1):
        for k in range(L - 2 * n + 1):
            if seq[k] == seq[k + n] and seq[k:k + n] == seq[k + n:k + 2 * n]:
                out.append((k, n))
    out.sort()
    return out


def square_free_checker_fast(seq: Sequence) -> list[tuple[int, int]]:
    """Same output as square_free_checker, using run lengths of seq[i] == seq[i+n]."""
    a = np.asarray(list(seq))
    L = len(a)
    out = []
    for n in range(1, L // 2 + 1):
        eq = a[:L - n] == a[n:]
        m = len(eq)
        positions = np.where(eq, m, np.arange(m))
        next_false = np.minimum.accumulate(positions[::-1])[::-1]
        run = next_false - np.arange(m)
        ks = np.nonzero(run[:L - 2 * n + 1] >= n)[0]
        out.extend((int(k), n) for k in ks)
    out.sort()
    return out


_HASH_MULT = np.uint64(0x9E3779B97F4A7C15)


class ThueView:
    """Lazy colour sequence over a mutable list of triples, with prefix hashes."""

    def __init__(self, values: list, lists: ListAssignment):
        self.values = values
        self.lists = lists
        self._colors: list[int] = []

    def invalidate(self, lo: int) -> None:
        if len(self._colors) > lo:
            del self._colors[lo:]

    def colors(self, length: int) -> list[int]:
        if len(self._colors) < length:
            self._colors = thue_decode(self.values[:length], self.lists, len(self._colors), self._colors)
        return self._colors[:length]

    def __getitem__(self, item):
        return self.values[item]

    def __len__(self):
        return len(self.values)


def _square_predicate(k, n):
    def predicate(view):
        c = view.colors(k + 2 * n)
        return c[k:k + n] == c[k + n:k + 2 * n]
    return predicate


@lru_cache(maxsize=None)
def _hash_powers(length: int) -> np.ndarray:
    base = np.full(length, _HASH_MULT, dtype=np.uint64)
    base[0] = 1
    with np.errstate(over="ignore"):
        return np.cumprod(base, dtype=np.uint64)


def _prefix_hashes(colors: list[int]) -> tuple[np.ndarray, np.ndarray]:
    """S[i] = sum_{j<i} (c_j + 1) B^j mod 2^64, and the powers B^j."""
    L = len(colors)
    powers = _hash_powers(L + 1)
    with np.errstate(over="ignore"):
        terms = (np.asarray(colors, dtype=np.uint64) + np.uint64(1)) * powers[:L]
        S = np.concatenate((np.zeros(1, dtype=np.uint64), np.cumsum(terms, dtype=np.uint64)))
    return S, powers


class ThueFamily(EventFamily):
    """A_{k,n}, n >= 3: the decoded colours satisfy a[k,k+n) = a[k+n,k+2n)."""

    name = "thue"
    settlement_available = False
    min_square = 3

    def __init__(self, lists: ListAssignment, num_variables: int | None = None,
                 alpha: Fraction = Fraction(9, 10)):
        self.lists = lists
        self.alpha = Fraction(alpha)
        if num_variables is None and lists.length is not None:
            num_variables = lists.length
        self.num_variables = num_variables
        self._cache: dict[tuple, EventSpec] = {}

    def _make(self, k, n):
        e = self._cache.get((k, n))
        if e is None:
            e = EventSpec((k, n), 0, k + n, k + 2 * n - 1, _square_predicate(k, n),
                          Fraction(1, 4 ** n), Fraction(1, n ** 3))
            self._cache[(k, n)] = e
        return e

    def _in_range(self, hi):
        return self.num_variables is None or hi < self.num_variables

    def variable(self, i):
        if i < 0 or not self._in_range(i):
            raise InstanceError(f"thue: no variable x_{i}")
        return uniform_variable(i, TRIPLE_SIZE)

    def make_view(self, values):
        return ThueView(values, self.lists)

    def invalidate(self, view, lo):
        view.invalidate(lo)

    def events_ending_at(self, hi):
        if not self._in_range(hi):
            return []
        return sorted((self._make(hi - 2 * n + 1, n) for n in range(self.min_square, (hi + 1) // 2 + 1)),
                      key=lambda e: e.id)

    def events_with_rsp_containing(self, i):
        out = []
        for n in range(self.min_square, i + 1):
            for k in range(max(0, i - 2 * n + 1), i - n + 1):
                if self._in_range(k + 2 * n - 1):
                    out.append(self._make(k, n))
        return out

    def min_hi(self):
        first = 2 * self.min_square - 1
        return first if self._in_range(first) else None

    def max_hi(self):
        return None if self.num_variables is None else self.num_variables - 1

    def rsp_reach(self, length):
        if length - 1 < self.min_square:
            return None
        reach = 2 * length - 3
        return reach if self.num_variables is None else min(reach, self.num_variables - 1)

    def event(self, event_id):
        k, n = (int(v) for v in event_id)
        if n < self.min_square or k < 0 or not self._in_range(k + 2 * n - 1):
            raise InstanceError(f"thue: unknown event {event_id!r}")
        return self._make(k, n)

    def count_events_within(self, lo, hi):
        if lo > 0:
            return 0
        return sum(max(0, hi + 2 - 2 * n) for n in range(self.min_square, (hi + 1) // 2 + 1))

    # -- hashed scans, every hit confirmed by a direct comparison
    def least_bad(self, view, lo_hi, hi_hi, vbl_lo_min=0):
        if vbl_lo_min > 0:
            return None
        if self.num_variables is not None:
            hi_hi = min(hi_hi, self.num_variables - 1)
        start = max(lo_hi, 2 * self.min_square - 1)
        if start > hi_hi:
            return None
        colors = view.colors(hi_hi + 1)
        S, powers = _prefix_hashes(colors)
        best = None
        for n in range(self.min_square, (hi_hi + 1) // 2 + 1):
            k_lo = max(0, start - 2 * n + 1)
            k_hi = hi_hi - 2 * n + 1
            if best is not None:
                k_hi = min(k_hi, best[0] - 2 * n + 1)
            if k_lo > k_hi:
                continue
            with np.errstate(over="ignore"):
                left = (S[k_lo + n:k_hi + n + 1] - S[k_lo:k_hi + 1]) * powers[n]
                right = S[k_lo + 2 * n:k_hi + 2 * n + 1] - S[k_lo + n:k_hi + n + 1]
            for off in np.nonzero(left == right)[0]:
                k = k_lo + int(off)
                if colors[k:k + n] == colors[k + n:k + 2 * n]:
                    key = (k + 2 * n - 1, k, n)
                    if best is None or key < best:
                        best = key
                    break
        return None if best is None else self._make(best[1], best[2])

    def all_bad(self, view, lo, hi):
        if lo > 0:
            return []
        colors = view.colors(hi + 1)
        found = [self._make(k, n) for k, n in square_free_checker_fast(colors) if n >= self.min_square]
        return sorted(found, key=self.priority_key)

    # -- exact conditional probabilities without enumerating triples
    def conditional_probabilities(self, a: EventSpec) -> Iterator[Fraction]:
        """Pr(a | stc) for every reachable colour history, by forward search.

        Conditioned on x[0, k+n) the colours a[0, k+n) are fixed, and the
        square needs each later stage to pick one prescribed colour, so the
        probability only depends on the last n colours.  We enumerate the
        reachable windows instead of the (much larger) triple valuations.
        """
        k, n = a.id
        m = max(n, 3)
        states = {()}
        for i in range(k + n):
            nxt = set()
            for w in states:
                hist = _window_history(w, i)
                _, cand = candidates(self.lists, i, hist)
                for c in cand:
                    nxt.add((w + (c,))[-m:])
            states = nxt
        for w in states:
            hist = list(w)
            offset = k + n - len(hist)
            p = Fraction(1)
            for j in range(n):
                target = hist[k + j - offset]
                _, cand = candidates(self.lists, k + n + j, _PaddedHistory(hist, offset))
                if target not in cand:
                    p = Fraction(0)
                    break
                p /= len(cand)
                hist.append(target)
            yield p


class _PaddedHistory:
    """Index a window as if it were the full colour prefix starting at `offset`."""

    def __init__(self, window: list[int], offset: int):
        self.window = window
        self.offset = offset

    def __getitem__(self, i):
        return self.window[i - self.offset]


def _window_history(window: tuple, i: int) -> _PaddedHistory:
    return _PaddedHistory(list(window), i - len(window))


def thue_witness(alpha: Fraction = Fraction(9, 10)) -> TailWitness:
    def check() -> WitnessResult:
        with mpmath.workprec(128):
            cube_sum = mpmath.zeta(3) - 1 - mpmath.mpf(1) / 8
            square_sum = mpmath.zeta(2) - 1 - mpmath.mpf(1) / 4
            cube_ok = 1 - cube_sum >= mpmath.mpf("0.9229")
            square_ok = 1 - square_sum >= mpmath.mpf("0.605")
        base, tail = Fraction(9229, 10000), Fraction(605, 1000)
        n0 = 3
        checks = {
            "cube-sum": bool(cube_ok),
            "square-sum": bool(square_ok),
            "boundary": alpha * Fraction(1, n0 ** 3) * base ** n0 * tail >= Fraction(1, 4 ** n0),
            # the ratio bound/P* = 4^n base^n / n^3 grows once 4 base (n/(n+1))^3 >= 1
            "growth": 4 * base * Fraction(n0, n0 + 1) ** 3 >= 1,
        }
        return chain_witness_result("thue-cubic", checks, {"alpha": str(alpha)})

    return TailWitness("thue-cubic", lambda n, n0: n + n0, check)


def thue_family(lists: ListAssignment | Sequence[Sequence[int]] | None = None,
                num_variables: int | None = None) -> ThueFamily:
    if lists is None:
        lists = uniform_lists()
    elif not isinstance(lists, ListAssignment):
        lists = ListAssignment(lists)
    family = ThueFamily(lists, num_variables)
    family.lll_witness = thue_witness(family.alpha)
    return family
