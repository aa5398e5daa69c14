"""Variable contexts, interval event families and the lefthanded priority order.

Every family here has events whose variable set is an interval [vbl_lo, hi]
and whose resample set is a right-aligned sub-interval [rsp_lo, hi].  The
priority order sorts by right endpoint, then by event id.
"""

from __future__ import annotations

import enum
import itertools
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Callable, Iterable, Iterator, Sequence


# ---------------------------------------------------------------- errors

class InstanceError(ValueError):
    """Unknown event, malformed parameters or a non-conforming input."""


class ContractError(RuntimeError):
    """A family broke a finiteness or shape promise."""


class SizeError(RuntimeError):
    """An exhaustive enumeration would exceed its guard."""


class PrecisionError(RuntimeError):
    """More bits or more stages are needed to decide the answer."""

    def __init__(self, message: str, required: int | None = None):
        super().__init__(message)
        self.required = required


ENUMERATION_GUARD = 2 ** 24
NEIGHBOR_GUARD = 10 ** 6


# ---------------------------------------------------------------- types

@dataclass(frozen=True)
class VariableSpec:
    index: int
    range_size: int
    distribution: tuple[Fraction, ...]

    def __post_init__(self):
        if self.range_size < 1:
            raise InstanceError(f"x_{self.index}: empty range")
        if len(self.distribution) != self.range_size:
            raise InstanceError(f"x_{self.index}: distribution length != range size")
        if self.distribution is _UNIFORM_CACHE.get(self.range_size):
            return      # shared uniform tuple, already known to be valid
        if any(p <= 0 for p in self.distribution):
            raise InstanceError(f"x_{self.index}: non-positive probability")
        if sum(self.distribution) != 1:
            raise InstanceError(f"x_{self.index}: distribution does not sum to 1")


def uniform_variable(index: int, range_size: int) -> VariableSpec:
    return VariableSpec(index, range_size, _uniform(range_size))


_UNIFORM_CACHE: dict[int, tuple[Fraction, ...]] = {}


def _uniform(size: int) -> tuple[Fraction, ...]:
    if size not in _UNIFORM_CACHE:
        _UNIFORM_CACHE[size] = (Fraction(1, size),) * size
    return _UNIFORM_CACHE[size]


@dataclass(frozen=True)
class EventSpec:
    """A bad event.  The predicate receives the family's view of a valuation."""

    id: tuple
    vbl_lo: int
    rsp_lo: int
    hi: int
    predicate: Callable[[Any], bool] = field(compare=False, repr=False)
    pstar: Fraction = field(compare=False)
    z: Fraction = field(compare=False)

    def __post_init__(self):
        if not (0 <= self.vbl_lo <= self.rsp_lo <= self.hi):
            raise InstanceError(f"event {self.id}: need vbl_lo <= rsp_lo <= hi")

    def __hash__(self):
        return hash(self.id)

    @property
    def vbl(self) -> range:
        return range(self.vbl_lo, self.hi + 1)

    @property
    def rsp(self) -> range:
        return range(self.rsp_lo, self.hi + 1)

    @property
    def stc(self) -> range:
        return range(self.vbl_lo, self.rsp_lo)

    def holds(self, view) -> bool:
        return bool(self.predicate(view))


class PairClass(enum.Enum):
    LEFT_OF = "LeftOf"      # a << b
    NEIGHBOR = "Neighbor"   # a in Gamma+(b)
    RIGHT_OF = "RightOf"    # a >> b


def rsp_overlap(a: EventSpec, b: EventSpec) -> bool:
    return a.rsp_lo <= b.hi and b.rsp_lo <= a.hi


# ---------------------------------------------------------------- families

class EventFamily:
    """Indexed, possibly infinite, family of interval events.

    Subclasses provide `variable`, `events_ending_at` and
    `events_with_rsp_containing`.  Everything else has a generic default.
    """

    name = "family"
    alpha: Fraction = Fraction(1, 2)
    num_variables: int | None = None   # None means infinitely many
    lll_witness: "TailWitness | None" = None

    # -- required
    def variable(self, i: int) -> VariableSpec:
        raise NotImplementedError

    def events_ending_at(self, hi: int) -> list[EventSpec]:
        """Events with right endpoint `hi`, sorted by id."""
        raise NotImplementedError

    def events_with_rsp_containing(self, i: int) -> list[EventSpec]:
        raise NotImplementedError

    # -- optional hooks
    def min_hi(self) -> int | None:
        """Least right endpoint carrying an event (None when there are none)."""
        return 0

    def max_hi(self) -> int | None:
        """Greatest right endpoint carrying an event (None when unbounded)."""
        return None

    def rsp_reach(self, length: int) -> int | None:
        """Largest right endpoint of an event whose rsp meets [0, length)."""
        best = None
        for i in range(length):
            for e in self.events_with_rsp_containing(i):
                if best is None or e.hi > best:
                    best = e.hi
        return best

    def event(self, event_id: tuple) -> EventSpec:
        raise InstanceError(f"{self.name}: cannot look up event {event_id!r}")

    def priority_key(self, e: EventSpec):
        return (e.hi, e.id)

    @property
    def right_endpoint_order(self) -> bool:
        return type(self).priority_key is EventFamily.priority_key

    def make_view(self, values: list):
        """Object handed to predicates.  Plain families use the value list."""
        return values

    def invalidate(self, view, lo: int) -> None:
        """Tell a derived view that variables from `lo` on have changed."""

    def least_bad(self, view, lo_hi: int, hi_hi: int, vbl_lo_min: int = 0) -> EventSpec | None:
        """The priority-least holding event with right endpoint in [lo_hi, hi_hi]."""
        start = lo_hi
        first = self.min_hi()
        if first is None:
            return None
        start = max(start, first)
        last = self.max_hi()
        if last is not None:
            hi_hi = min(hi_hi, last)
        for h in range(start, hi_hi + 1):
            for e in self.events_ending_at(h):
                if e.vbl_lo >= vbl_lo_min and e.holds(view):
                    return e
        return None

    # -- derived enumerations
    def enumerate_by_priority(self, n: int) -> list[EventSpec]:
        out: list[EventSpec] = []
        h = self.min_hi()
        if h is None:
            return out
        last = self.max_hi()
        while len(out) < n and (last is None or h <= last):
            out.extend(self.events_ending_at(h))
            h += 1
        return out[:n]

    def events_with_vbl_within(self, lo: int, hi: int) -> list[EventSpec]:
        out = []
        first = self.min_hi()
        if first is None:
            return out
        last = self.max_hi()
        top = hi if last is None else min(hi, last)
        for h in range(max(lo, first), top + 1):
            out.extend(e for e in self.events_ending_at(h) if e.vbl_lo >= lo)
        return out


class ExplicitFamily(EventFamily):
    """A finite family given by explicit variable and event lists."""

    def __init__(self, variables: Sequence[VariableSpec], events: Iterable[EventSpec],
                 alpha: Fraction, name: str = "explicit",
                 view_factory: Callable[[list], Any] | None = None,
                 invalidate: Callable[[Any, int], None] | None = None,
                 order_key: Callable[[EventSpec], Any] | None = None,
                 check_degenerate: bool = True):
        self.name = name
        self.alpha = Fraction(alpha)
        self._variables = list(variables)
        self.num_variables = len(self._variables)
        self._events = sorted(events, key=lambda e: (e.hi, e.id))
        self._by_id = {e.id: e for e in self._events}
        if len(self._by_id) != len(self._events):
            raise InstanceError(f"{name}: duplicate event ids")
        self._view_factory = view_factory
        self._invalidate = invalidate
        self._order_key = order_key
        for e in self._events:
            _check_ranges(e)
            if e.hi >= self.num_variables:
                raise InstanceError(f"{name}: event {e.id} uses missing variables")
        if check_degenerate:
            for e in self._events:
                if _constant_false(self, e):
                    raise InstanceError(f"{name}: event {e.id} can never hold")

    def variable(self, i):
        if not 0 <= i < self.num_variables:
            raise InstanceError(f"{self.name}: no variable x_{i}")
        return self._variables[i]

    @property
    def events(self) -> list[EventSpec]:
        return list(self._events)

    def events_ending_at(self, hi):
        return [e for e in self._events if e.hi == hi]

    def events_with_rsp_containing(self, i):
        return [e for e in self._events if e.rsp_lo <= i <= e.hi]

    def min_hi(self):
        return self._events[0].hi if self._events else None

    def max_hi(self):
        return self._events[-1].hi if self._events else None

    def rsp_reach(self, length):
        his = [e.hi for e in self._events if e.rsp_lo < length]
        return max(his) if his else None

    def event(self, event_id):
        try:
            return self._by_id[tuple(event_id)]
        except KeyError:
            raise InstanceError(f"{self.name}: unknown event {event_id!r}") from None

    def priority_key(self, e):
        if self._order_key is not None:
            return self._order_key(e)
        return (e.hi, e.id)

    @property
    def right_endpoint_order(self):
        return self._order_key is None

    def make_view(self, values):
        return self._view_factory(values) if self._view_factory else values

    def invalidate(self, view, lo):
        if self._invalidate:
            self._invalidate(view, lo)

    def least_bad(self, view, lo_hi, hi_hi, vbl_lo_min=0):
        for e in self._events:
            if lo_hi <= e.hi <= hi_hi and e.vbl_lo >= vbl_lo_min and e.holds(view):
                return e
        return None


def restrict(family: EventFamily, lo: int, hi: int, name: str | None = None) -> ExplicitFamily:
    """The finite subfamily of events whose vbl lies inside [lo, hi]."""
    events = family.events_with_vbl_within(lo, hi)
    variables = [family.variable(i) for i in range(hi + 1)]
    return ExplicitFamily(
        variables, events, family.alpha, name=name or f"{family.name}[{lo},{hi}]",
        view_factory=family.make_view,
        invalidate=family.invalidate,
        check_degenerate=False,
    )


def _check_ranges(e: EventSpec) -> None:
    if not (0 < e.pstar < 1):
        raise InstanceError(f"event {e.id}: P* must lie in (0,1), got {e.pstar}")
    if not (0 < e.z < 1):
        raise InstanceError(f"event {e.id}: z must lie in (0,1), got {e.z}")


def _constant_false(family: EventFamily, e: EventSpec, guard: int = 2 ** 16) -> bool:
    sizes = [family.variable(i).range_size for i in e.vbl]
    total = 1
    for s in sizes:
        total *= s
        if total > guard:
            return False   # too big to decide cheaply; assume it can hold
    base = [0] * (e.hi + 1)
    for combo in itertools.product(*(range(s) for s in sizes)):
        base[e.vbl_lo:e.hi + 1] = combo
        if e.holds(family.make_view(list(base))):
            return False
    return True


# ---------------------------------------------------------------- relations

def gamma(family: EventFamily, a: EventSpec) -> set[EventSpec]:
    """Events whose rsp meets rsp(a), excluding a."""
    out: set[EventSpec] = set()
    for i in a.rsp:
        for b in family.events_with_rsp_containing(i):
            if b.id != a.id:
                out.add(b)
        if len(out) > NEIGHBOR_GUARD:
            raise ContractError(f"{family.name}: neighbor list of {a.id} exceeds guard")
    return out


def precedes(family: EventFamily, a: EventSpec, b: EventSpec) -> bool:
    return family.priority_key(a) < family.priority_key(b)


def classify_pair(family: EventFamily, a: EventSpec, b: EventSpec) -> PairClass:
    if a.id == b.id or rsp_overlap(a, b):
        return PairClass.NEIGHBOR
    if precedes(family, a, b):
        return PairClass.LEFT_OF
    return PairClass.RIGHT_OF


# ---------------------------------------------------------------- validators

@dataclass
class OrderReport:
    window: tuple[int, int]
    events_checked: int
    violations: list[tuple] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations


def validate_order(family: EventFamily, window: tuple[int, int]) -> OrderReport:
    """Check the lefthanded rule, the rsp/vbl separation and right-endpoint agreement."""
    lo, hi = window
    events = sorted(family.events_with_vbl_within(lo, hi), key=family.priority_key)
    report = OrderReport((lo, hi), len(events))
    rank = {e.id: r for r, e in enumerate(events)}
    nplus = {e.id: {f.id for f in events if f.id == e.id or rsp_overlap(e, f)} for e in events}

    for a, b in itertools.permutations(events, 2):
        if rank[a.id] < rank[b.id] and a.hi > b.hi:
            report.violations.append(("right-endpoint", a.id, b.id))
        if rank[a.id] > rank[b.id] and b.id not in nplus[a.id]:
            # a >> b: resampling a must not touch vbl(b)
            if a.rsp_lo <= b.hi and b.vbl_lo <= a.hi:
                report.violations.append(("rsp-meets-vbl", a.id, b.id))

    # if A in Gamma+(B) and A not in Gamma+(C) then C > B implies C > A
    for b in events:
        for a_id in nplus[b.id]:
            for c in events:
                if c.id == b.id or a_id in nplus[c.id]:
                    continue
                if rank[c.id] > rank[b.id] and not rank[c.id] > rank[a_id]:
                    report.violations.append(("lefthanded-rule", a_id, b.id, c.id))
    return report


@dataclass
class LLLRow:
    event_id: tuple
    pstar: Fraction
    bound: Fraction          # alpha * z * prod(1 - z(B))
    neighbors: int

    @property
    def ok(self) -> bool:
        return self.pstar <= self.bound


@dataclass
class LLLReport:
    window: tuple[int, int]
    alpha: Fraction
    rows: list[LLLRow] = field(default_factory=list)
    witness: "WitnessResult | None" = None

    @property
    def failures(self) -> list[LLLRow]:
        return [r for r in self.rows if not r.ok]

    @property
    def ok(self) -> bool:
        return not self.failures and (self.witness is None or self.witness.ok)


def lll_bound(family: EventFamily, a: EventSpec) -> tuple[Fraction, int]:
    neighbors = gamma(family, a)
    # many neighbours share z, so multiply one power per distinct value
    counts = Counter(b.z for b in neighbors)
    prod = Fraction(a.z)
    for z, count in counts.items():
        prod *= (1 - Fraction(z)) ** count
    return family.alpha * prod, len(neighbors)


def validate_lll(family: EventFamily, window: tuple[int, int]) -> LLLReport:
    lo, hi = window
    report = LLLReport((lo, hi), family.alpha)
    for a in family.events_with_vbl_within(lo, hi):
        bound, count = lll_bound(family, a)
        report.rows.append(LLLRow(a.id, a.pstar, bound, count))
    if family.lll_witness is not None:
        report.witness = family.lll_witness.check()
    return report


def conditional_probabilities(family: EventFamily, a: EventSpec) -> Iterator[Fraction]:
    """Pr(a | stc = mu) for every valuation mu of stc(a), by weighted counting."""
    hook = getattr(family, "conditional_probabilities", None)
    if hook is not None:
        yield from hook(a)
        return
    specs = [family.variable(i) for i in a.vbl]
    total = 1
    for s in specs:
        total *= s.range_size
    if total > ENUMERATION_GUARD:
        raise SizeError(f"event {a.id}: {total} assignments exceed the guard")
    n_stc = a.rsp_lo - a.vbl_lo
    stc_specs, rsp_specs = specs[:n_stc], specs[n_stc:]
    rsp_assignments = list(itertools.product(*(range(s.range_size) for s in rsp_specs)))
    uniform = all(len(set(s.distribution)) == 1 for s in rsp_specs)
    rsp_weights = []
    if not uniform:
        for combo in rsp_assignments:
            w = Fraction(1)
            for s, v in zip(rsp_specs, combo):
                w *= s.distribution[v]
            rsp_weights.append(w)
    values = [0] * (a.hi + 1)
    for mu in itertools.product(*(range(s.range_size) for s in stc_specs)):
        values[a.vbl_lo:a.rsp_lo] = mu
        if uniform:
            # equal weights: count the holding assignments
            hits = 0
            for combo in rsp_assignments:
                values[a.rsp_lo:a.hi + 1] = combo
                hits += a.holds(family.make_view(list(values)))
            yield Fraction(hits, len(rsp_assignments))
            continue
        p = Fraction(0)
        for combo, w in zip(rsp_assignments, rsp_weights):
            values[a.rsp_lo:a.hi + 1] = combo
            if a.holds(family.make_view(list(values))):
                p += w
        yield p


def pstar_sup(family: EventFamily, a: EventSpec) -> Fraction:
    return max(conditional_probabilities(family, a), default=Fraction(0))


def validate_pstar_exhaustive(family: EventFamily, a: EventSpec) -> bool:
    return pstar_sup(family, a) <= a.pstar


# ---------------------------------------------------------------- tail witnesses

@dataclass
class WitnessResult:
    name: str
    ok: bool
    details: dict = field(default_factory=dict)


@dataclass
class TailWitness:
    """Closed-form certificate that the local lemma condition holds for every event.

    `neighbor_count_of_size(n, n0)` bounds how many neighbors of size n an
    event of size n0 has; `check` re-runs the boundary and monotonicity tests.
    """

    name: str
    neighbor_count_of_size: Callable[[int, int], int]
    check_fn: Callable[[], WitnessResult]

    def check(self) -> WitnessResult:
        return self.check_fn()


def family_summary(family: EventFamily) -> dict:
    return {"name": family.name, "alpha": str(family.alpha)}
