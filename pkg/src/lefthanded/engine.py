"""The priority resample algorithm, prefix certificates and settlement bounds.

Randomness comes from a SampleGrid: cell (i, j) is the j-th draw of x_i and
is a pure function of (seed, i, j).  A run keeps a counter per variable and
reads the current value of x_i from cell (i, counter[i]).
"""

from __future__ import annotations

import bisect
import hashlib
import itertools
import math
import os
import struct
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterator, Sequence

from .core import (
    ContractError,
    EventFamily,
    EventSpec,
    InstanceError,
    PrecisionError,
    SizeError,
    VariableSpec,
    gamma,
    uniform_variable,
)

DEFAULT_MAX_STAGES = 10 ** 6
EXACT_GUARD = 2 ** 20
SETTLEMENT_GUARD = 200_000
_MASK64 = (1 << 64) - 1


class EngineTimeout(RuntimeError):
    """The stage budget ran out; the partial log is attached."""

    def __init__(self, message: str, log: "ResampleLog", values: list):
        super().__init__(message)
        self.log = log
        self.values = values


def max_stages_default() -> int:
    raw = os.environ.get("LLLL_MAX_STAGES")
    if raw:
        try:
            return int(raw)
        except ValueError:
            raise InstanceError(f"LLLL_MAX_STAGES must be an integer, got {raw!r}") from None
    return DEFAULT_MAX_STAGES


# ---------------------------------------------------------------- sampling

_THRESHOLDS: dict[tuple, list[int]] = {}


_UNIFORM_THRESHOLDS: dict[int, list[int]] = {}


def _thresholds(distribution: Sequence[Fraction]) -> list[int]:
    size = len(distribution)
    if size in _UNIFORM_THRESHOLDS and distribution is uniform_variable(0, size).distribution:
        return _UNIFORM_THRESHOLDS[size]
    key = tuple(distribution)
    table = _THRESHOLDS.get(key)
    if table is None:
        table, acc = [], Fraction(0)
        for p in key[:-1]:
            acc += p
            table.append(math.floor(acc * (1 << 64)))
        _THRESHOLDS[key] = table
        if distribution is uniform_variable(0, size).distribution:
            _UNIFORM_THRESHOLDS[size] = table
    return table


def _cell_word(seed: int, i: int, j: int) -> int:
    data = struct.pack("<QQQ", seed & _MASK64, i & _MASK64, j & _MASK64)
    return int.from_bytes(hashlib.blake2b(data, digest_size=8).digest(), "little")


def grid_sample(seed: int, i: int, j: int, spec: VariableSpec) -> int:
    """The value of cell (i, j): deterministic in (seed, i, j)."""
    return bisect.bisect_right(_thresholds(spec.distribution), _cell_word(seed, i, j))


class SampleGrid:
    def __init__(self, seed: int, variable: Callable[[int], VariableSpec]):
        self.seed = seed
        self.counters: dict[int, int] = {}
        self._variable = variable
        self._tables: dict[int, list[int]] = {}

    def cell(self, i: int, j: int) -> int:
        table = self._tables.get(i)
        if table is None:
            table = self._tables[i] = _thresholds(self._variable(i).distribution)
        return bisect.bisect_right(table, _cell_word(self.seed, i, j))

    def counter(self, i: int) -> int:
        return self.counters.get(i, 0)

    def current(self, i: int) -> int:
        return self.cell(i, self.counter(i))

    def advance(self, i: int) -> int:
        self.counters[i] = self.counter(i) + 1
        return self.current(i)


class MissingCell(LookupError):
    def __init__(self, i: int, j: int):
        super().__init__(f"cell ({i}, {j}) not scripted")
        self.cell = (i, j)


class ScriptedGrid(SampleGrid):
    """A grid whose cells come from a dict; unknown cells raise MissingCell."""

    def __init__(self, cells: dict[tuple[int, int], int], variable=None):
        super().__init__(0, variable or (lambda i: None))
        self.cells = cells

    def cell(self, i, j):
        try:
            return self.cells[(i, j)]
        except KeyError:
            raise MissingCell(i, j) from None


# ---------------------------------------------------------------- logs

@dataclass(frozen=True)
class LogEntry:
    stage: int
    event: EventSpec
    old_values: tuple
    new_values: tuple

    @property
    def event_id(self) -> tuple:
        return self.event.id

    def as_record(self) -> dict:
        return {"stage": self.stage, "event_id": list(self.event.id),
                "old_values": list(self.old_values), "new_values": list(self.new_values)}


@dataclass
class ResampleLog:
    entries: list[LogEntry] = field(default_factory=list)

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    @property
    def events(self) -> list[EventSpec]:
        return [e.event for e in self.entries]

    @classmethod
    def from_events(cls, events: Sequence[EventSpec]) -> "ResampleLog":
        return cls([LogEntry(s + 1, e, (), ()) for s, e in enumerate(events)])


# ---------------------------------------------------------------- the algorithm

def least_bad_event(family: EventFamily, valuation: list, window: tuple[int, int]) -> EventSpec | None:
    """The priority-least event with vbl inside the window that holds."""
    lo, hi = window
    view = family.make_view(list(valuation))
    if family.right_endpoint_order:
        return family.least_bad(view, lo, hi, lo)
    events = sorted(family.events_with_vbl_within(lo, hi), key=family.priority_key)
    return next((e for e in events if e.holds(view)), None)


@dataclass
class RunResult:
    values: list
    log: ResampleLog
    window: tuple[int, int]
    halted: bool = True

    def __iter__(self):
        return iter((self.values, self.log))


def run_windowed(family: EventFamily, window: tuple[int, int], seed: int = 0,
                 max_stages: int | None = None, grid: SampleGrid | None = None,
                 stop_after: int | None = None) -> RunResult:
    """Resample the least bad window event until none holds.

    `stop_after` ends the run quietly after that many stages (used by the
    distribution oracles); `max_stages` raises EngineTimeout instead.
    """
    lo, hi = window
    if max_stages is None:
        max_stages = max_stages_default()
    grid = grid if grid is not None else SampleGrid(seed, family.variable)
    values = [0] * (hi + 1)
    for i in range(lo, hi + 1):
        values[i] = grid.current(i)
    view = family.make_view(values)
    log = ResampleLog()
    ordered = None
    if not family.right_endpoint_order:
        ordered = sorted(family.events_with_vbl_within(lo, hi), key=family.priority_key)
    pos = lo
    stage = 0
    while True:
        if ordered is None:
            e = family.least_bad(view, pos, hi, lo)
        else:
            e = next((a for a in ordered if a.holds(view)), None)
        if e is None:
            return RunResult(values, log, window, True)
        if stop_after is not None and stage >= stop_after:
            return RunResult(values, log, window, False)
        if stage >= max_stages:
            raise EngineTimeout(f"no good valuation after {stage} stages", log, values)
        stage += 1
        old = tuple(values[e.rsp_lo:e.hi + 1])
        for i in e.rsp:
            values[i] = grid.advance(i)
        family.invalidate(view, e.rsp_lo)
        log.entries.append(LogEntry(stage, e, old, tuple(values[e.rsp_lo:e.hi + 1])))
        pos = e.rsp_lo


# ---------------------------------------------------------------- certificates

@dataclass
class PrefixCertificate:
    window: tuple[int, int]
    prefix_length: int
    valuation: list
    violations: list[tuple]
    events_checked: int | None = None

    @property
    def ok(self) -> bool:
        return not self.violations

    def as_dict(self) -> dict:
        return {"window": list(self.window), "prefix_length": self.prefix_length,
                "prefix": list(self.valuation[:self.prefix_length]),
                "events_checked": self.events_checked,
                "violations": [list(v) for v in self.violations]}


def bad_events(family: EventFamily, view, lo: int, hi: int) -> list[EventSpec]:
    """Every holding event with vbl inside [lo, hi], in priority order."""
    hook = getattr(family, "all_bad", None)
    if hook is not None:
        return hook(view, lo, hi)
    return [e for e in family.events_with_vbl_within(lo, hi) if e.holds(view)]


def certify_prefix(family: EventFamily, valuation: list, window: tuple[int, int],
                   length: int) -> PrefixCertificate:
    lo, hi = window
    if hi < lo:
        return PrefixCertificate((lo, hi), 0, [], [], 0)
    if len(valuation) <= hi:
        raise InstanceError(f"valuation covers {len(valuation)} variables, window needs {hi + 1}")
    view = family.make_view(list(valuation[:hi + 1]))
    bad = bad_events(family, view, lo, hi)
    count_hook = getattr(family, "count_events_within", None)
    checked = count_hook(lo, hi) if count_hook else None
    return PrefixCertificate((lo, hi), min(length, hi + 1), list(valuation[:hi + 1]),
                             [e.id for e in bad], checked)


# ---------------------------------------------------------------- settlement

@dataclass
class EventSettlement:
    event_id: tuple
    delta_share: Fraction
    m: int
    ball_size: int
    closure_size: int
    expectation_bound: Fraction
    markov_stage: int


@dataclass
class SettlementBound:
    index: int
    delta: Fraction
    stage_bound: int
    breakdown: list[EventSettlement]

    @property
    def N(self) -> int:
        return self.stage_bound


def _least_m(alpha: Fraction, ratio: Fraction, target: Fraction) -> int:
    m, value = 0, ratio
    while value > target:
        value *= alpha
        m += 1
    return m


def _closure_sum(family: EventFamily, a: EventSpec, m: int) -> tuple[int, int, Fraction]:
    cache = family.__dict__.setdefault("_settlement_cache", {})
    key = (a.id, m)
    if key in cache:
        return cache[key]
    ball = {a.id: a}
    frontier = [a]
    for _ in range(m):
        nxt = []
        for e in frontier:
            for b in gamma(family, e):
                if b.id not in ball:
                    ball[b.id] = b
                    nxt.append(b)
                    if len(ball) > SETTLEMENT_GUARD:
                        raise ContractError(f"{family.name}: settlement ball around {a.id} too large")
        if not nxt:
            break
        frontier = nxt
    top = max(family.priority_key(e) for e in ball.values())
    lo_hi = family.min_hi() or 0
    total, count = Fraction(0), 0
    for h in range(lo_hi, top[0] + 1):
        for e in family.events_ending_at(h):
            if family.priority_key(e) <= top:
                total += e.z / (1 - e.z)
                count += 1
                if count > SETTLEMENT_GUARD:
                    raise ContractError(f"{family.name}: downward closure around {a.id} too large")
    cache[key] = (len(ball), count, total)
    return cache[key]


def compute_settlement_bound(family: EventFamily, i: int, delta) -> SettlementBound:
    """A stage after which x_i changes with probability below delta."""
    delta = Fraction(delta)
    if not 0 < delta:
        raise InstanceError("delta must be positive")
    if not family.right_endpoint_order:
        raise ContractError("settlement bounds need the right-endpoint order")
    events = family.events_with_rsp_containing(i)
    if not events:
        return SettlementBound(i, delta, 0, [])
    share = delta / len(events)
    rows = []
    for a in events:
        m = _least_m(family.alpha, a.z / (1 - a.z), share / 2)
        ball, closure, expectation = _closure_sum(family, a, m)
        stage = math.ceil(2 * expectation / share)
        rows.append(EventSettlement(a.id, share, m, ball, closure, expectation, stage))
    return SettlementBound(i, delta, max(r.markov_stage for r in rows), rows)


def change_probability_after(family: EventFamily, i: int, k: int, iterations: int = 40) -> Fraction:
    """Smallest delta found by bisection with N(i, delta) <= k (1 if none)."""
    if compute_settlement_bound(family, i, 1).N > k:
        return Fraction(1)
    lo, hi = Fraction(0), Fraction(1)
    for _ in range(iterations):
        mid = (lo + hi) / 2
        if compute_settlement_bound(family, i, mid).N <= k:
            hi = mid
        else:
            lo = mid
    return hi


# ---------------------------------------------------------------- streaming

@dataclass
class StreamResult:
    prefix: list
    window: tuple[int, int]
    log: ResampleLog
    records: list[dict]
    certificate: PrefixCertificate
    settlement: dict[int, int | None]


def stream_generate(family: EventFamily, length: int, delta=None, seed: int = 0,
                    max_stages: int | None = None) -> StreamResult:
    """Run on a window that holds every event able to rewrite x[0, length)."""
    width = max(length, 1)
    reach = family.rsp_reach(length)
    while reach is not None and reach > width - 1:
        width *= 2
    if family.num_variables is not None:
        width = min(width, family.num_variables)
    window = (0, width - 1)
    result = run_windowed(family, window, seed, max_stages)
    values, log = result.values, result.log
    records: list[dict] = []
    for entry in log:
        for offset, idx in enumerate(entry.event.rsp):
            if idx >= length:
                break
            old, new = entry.old_values[offset], entry.new_values[offset]
            if old != new:
                records.append({"kind": "revision", "stage": entry.stage,
                                "index": idx, "old": old, "new": new})
    settlement: dict[int, int | None] = {}
    if delta is not None:
        available = getattr(family, "settlement_available", True)
        for i in range(min(length, width)):
            if not available:
                settlement[i] = None
                continue
            try:
                settlement[i] = compute_settlement_bound(family, i, delta).N
            except ContractError:
                settlement[i] = None
        for i, n in settlement.items():
            if n is not None:
                records.append({"kind": "settled", "stage": n, "index": i})
        records.sort(key=lambda r: (r["stage"], r["kind"] != "revision", r["index"]))
    certificate = certify_prefix(family, values, window, length)
    return StreamResult(list(values[:length]), window, log, records, certificate, settlement)


def iter_records(result: StreamResult) -> Iterator[dict]:
    yield from result.records
    yield {"kind": "certificate", **result.certificate.as_dict()}


# ---------------------------------------------------------------- distributions

@dataclass
class DistributionEstimate:
    value: Fraction | float
    error: Fraction | float
    mode: str
    stage: int

    @property
    def lower(self):
        return self.value - self.error

    @property
    def upper(self):
        return self.value + self.error


def _finite_size(family: EventFamily) -> int:
    if family.num_variables is None:
        raise ContractError(f"{family.name}: exact mode needs a finite family")
    return family.num_variables


def _initial_states(family: EventFamily) -> dict[tuple, Fraction]:
    n = _finite_size(family)
    specs = [family.variable(i) for i in range(n)]
    total = 1
    for s in specs:
        total *= s.range_size
    if total > EXACT_GUARD:
        raise SizeError(f"{family.name}: {total} initial valuations exceed the exact guard")
    dist: dict[tuple, Fraction] = {}
    for combo in itertools.product(*(range(s.range_size) for s in specs)):
        w = Fraction(1)
        for s, v in zip(specs, combo):
            w *= s.distribution[v]
        dist[combo] = w
    return dist


def _step(family: EventFamily, dist: dict[tuple, Fraction]) -> dict[tuple, Fraction]:
    n = _finite_size(family)
    out: dict[tuple, Fraction] = {}
    work = 0
    for state, w in dist.items():
        e = family.least_bad(family.make_view(list(state)), 0, n - 1, 0)
        if e is None:
            out[state] = out.get(state, 0) + w
            continue
        specs = [family.variable(i) for i in e.rsp]
        for combo in itertools.product(*(range(s.range_size) for s in specs)):
            p = w
            for s, v in zip(specs, combo):
                p *= s.distribution[v]
            new = state[:e.rsp_lo] + combo + state[e.hi + 1:]
            out[new] = out.get(new, 0) + p
            work += 1
        if work > EXACT_GUARD:
            raise SizeError(f"{family.name}: exact step exceeds the guard")
    return out


def stage_distributions(family: EventFamily) -> Iterator[dict[tuple, Fraction]]:
    """Exact law of the valuation after 0, 1, 2, ... stages.

    Equivalent to walking the tree of consumed grid cells while merging
    subtrees that reach the same valuation: fresh cells are independent of
    the past, so the future of a run depends only on its current valuation.
    """
    dist = _initial_states(family)
    yield dist
    while True:
        dist = _step(family, dist)
        yield dist


def _extends(state: tuple, pattern: Sequence[int]) -> bool:
    return all(state[i] == v for i, v in enumerate(pattern))


def _pattern(pattern) -> list[int]:
    if isinstance(pattern, str):
        return [int(c) for c in pattern]
    return list(pattern)


def prefix_error(family: EventFamily, length: int, k: int) -> Fraction:
    return sum((change_probability_after(family, i, k) for i in range(length)), Fraction(0))


def output_distribution(family: EventFamily, pattern, k: int, mode: str = "exact",
                        samples: int = 10_000, seed: int = 0) -> DistributionEstimate:
    """Probability that the stage-k valuation extends `pattern`."""
    pattern = _pattern(pattern)
    if mode == "exact":
        dist = None
        for step, dist in enumerate(stage_distributions(family)):
            if step == k:
                break
        value = sum((w for s, w in dist.items() if _extends(s, pattern)), Fraction(0))
        return DistributionEstimate(value, prefix_error(family, len(pattern), k), "exact", k)
    if mode == "montecarlo":
        n = _finite_size(family)
        hits = 0
        for t in range(samples):
            run = run_windowed(family, (0, n - 1), seed + t, stop_after=k)
            hits += _extends(tuple(run.values), pattern)
        p = hits / samples
        sigma = math.sqrt(max(p * (1 - p), 1.0 / samples) / samples)
        return DistributionEstimate(p, 4 * sigma, "montecarlo", k)
    raise InstanceError(f"unknown mode {mode!r}")


def computable_element_micro(family: EventFamily, length: int, max_stage: int = 1 << 14) -> list[int]:
    """Extend a prefix one value at a time, always into a cone of positive mass."""
    n = _finite_size(family)
    if length > n:
        raise InstanceError(f"family has only {n} variables")
    gen = stage_distributions(family)
    k, dist = 0, next(gen)
    checkpoint = 1
    prefix: list[int] = []
    for pos in range(length):
        choice = None
        while choice is None:
            if checkpoint > max_stage:
                raise PrecisionError(f"no positive child at position {pos} by stage {max_stage}",
                                     required=checkpoint)
            while k < checkpoint:
                dist, k = next(gen), k + 1
            err = prefix_error(family, pos + 1, k)
            for v in range(family.variable(pos).range_size):
                mass = sum((w for s, w in dist.items() if _extends(s, prefix + [v])), Fraction(0))
                if mass - err > 0:
                    choice = v
                    break
            else:
                checkpoint *= 2
        prefix.append(choice)
    return prefix
