"""Small named families used for testing the engine and the tree machinery."""

from __future__ import annotations

from fractions import Fraction

from .core import EventFamily, EventSpec, ExplicitFamily, InstanceError, uniform_variable


def _all_ones(lo: int, hi: int):
    def predicate(values):
        return all(values[i] == 1 for i in range(lo, hi + 1))
    return predicate


class Toy3Family(EventFamily):
    """Fair bits; A_i holds when x_{2i} = x_{2i+1} = x_{2i+2} = 1."""

    name = "toy3"

    def __init__(self, alpha: Fraction = Fraction(9, 10), count: int | None = None):
        self.alpha = Fraction(alpha)
        self.count = count          # None: infinitely many events
        if count is not None:
            self.num_variables = 2 * count + 1
        self.pstar = Fraction(1, 8)
        self.z = Fraction(1, 3)
        self._cache: dict[int, EventSpec] = {}

    def _make(self, i: int) -> EventSpec:
        if i not in self._cache:
            self._cache[i] = EventSpec((i,), 2 * i, 2 * i, 2 * i + 2,
                                       _all_ones(2 * i, 2 * i + 2), self.pstar, self.z)
        return self._cache[i]

    def _valid(self, i: int) -> bool:
        return i >= 0 and (self.count is None or i < self.count)

    def variable(self, i):
        if i < 0 or (self.num_variables is not None and i >= self.num_variables):
            raise InstanceError(f"toy3: no variable x_{i}")
        return uniform_variable(i, 2)

    def events_ending_at(self, hi):
        if hi >= 2 and hi % 2 == 0 and self._valid((hi - 2) // 2):
            return [self._make((hi - 2) // 2)]
        return []

    def events_with_rsp_containing(self, i):
        lo = max(0, (i - 1) // 2)
        return [self._make(j) for j in range(lo, i // 2 + 1)
                if self._valid(j) and 2 * j <= i <= 2 * j + 2]

    def min_hi(self):
        return 2 if self.count != 0 else None

    def max_hi(self):
        return None if self.count is None else 2 * self.count

    def rsp_reach(self, length):
        if length <= 0:
            return None
        j = (length - 1) // 2
        if self.count is not None:
            j = min(j, self.count - 1)
        return 2 * j + 2 if j >= 0 else None

    def event(self, event_id):
        (i,) = tuple(event_id)
        if not self._valid(i):
            raise InstanceError(f"toy3: unknown event {event_id!r}")
        return self._make(i)


class DisjointBlocksFamily(EventFamily):
    """A_i holds when the block x[3i, 3i+2] is all ones; blocks never overlap."""

    name = "disjoint-blocks"

    def __init__(self, alpha: Fraction = Fraction(1, 2), count: int | None = None):
        self.alpha = Fraction(alpha)
        self.count = count
        if count is not None:
            self.num_variables = 3 * count
        self._cache: dict[int, EventSpec] = {}

    def _make(self, i):
        if i not in self._cache:
            self._cache[i] = EventSpec((i,), 3 * i, 3 * i, 3 * i + 2,
                                       _all_ones(3 * i, 3 * i + 2),
                                       Fraction(1, 8), Fraction(1, 4))
        return self._cache[i]

    def _valid(self, i):
        return i >= 0 and (self.count is None or i < self.count)

    def variable(self, i):
        if i < 0 or (self.num_variables is not None and i >= self.num_variables):
            raise InstanceError(f"disjoint-blocks: no variable x_{i}")
        return uniform_variable(i, 2)

    def events_ending_at(self, hi):
        if hi % 3 == 2 and self._valid(hi // 3):
            return [self._make(hi // 3)]
        return []

    def events_with_rsp_containing(self, i):
        return [self._make(i // 3)] if self._valid(i // 3) else []

    def min_hi(self):
        return 2 if self.count != 0 else None

    def max_hi(self):
        return None if self.count is None else 3 * self.count - 1

    def rsp_reach(self, length):
        if length <= 0:
            return None
        j = (length - 1) // 3
        if self.count is not None:
            j = min(j, self.count - 1)
        return 3 * j + 2 if j >= 0 else None

    def event(self, event_id):
        (i,) = tuple(event_id)
        if not self._valid(i):
            raise InstanceError(f"disjoint-blocks: unknown event {event_id!r}")
        return self._make(i)


def toy3(alpha=Fraction(9, 10), count: int | None = None) -> Toy3Family:
    return Toy3Family(Fraction(alpha), count)


def single_bit(alpha=Fraction(3, 5)) -> ExplicitFamily:
    """One fair bit and the single event {x_0 = 1}."""
    event = EventSpec((0,), 0, 0, 0, lambda v: v[0] == 1, Fraction(1, 2), Fraction(9, 10))
    return ExplicitFamily([uniform_variable(0, 2)], [event], Fraction(alpha), name="single-bit")


def disjoint_blocks(alpha=Fraction(1, 2), count: int | None = None) -> DisjointBlocksFamily:
    return DisjointBlocksFamily(Fraction(alpha), count)


NAMED = {
    "toy3": toy3,
    "single-bit": single_bit,
    "disjoint-blocks": disjoint_blocks,
}
