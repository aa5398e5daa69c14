"""Legal logs, Moser trees, the greedy vertex order and the T-check simulator."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator, Sequence

from .core import (
    EventFamily,
    EventSpec,
    InstanceError,
    PairClass,
    SizeError,
    classify_pair,
    gamma,
    precedes,
    rsp_overlap,
)
from .engine import LogEntry, ResampleLog, SampleGrid, max_stages_default, run_windowed

TREE_GUARD = 10 ** 6


def _events(log) -> list[EventSpec]:
    if isinstance(log, ResampleLog):
        return log.events
    return [e.event if isinstance(e, LogEntry) else e for e in log]


def in_gamma_plus(a: EventSpec, b: EventSpec) -> bool:
    return a.id == b.id or rsp_overlap(a, b)


# ---------------------------------------------------------------- logs

def is_legal_log(family: EventFamily, log) -> bool:
    events = _events(log)
    return all(classify_pair(family, events[i], events[i + 1]) is not PairClass.RIGHT_OF
               for i in range(len(events) - 1))


def order_breaks(family: EventFamily, log) -> list[tuple[int, int]]:
    """Pairs i < j (1-based) with E_i after E_j in priority but no neighbor of E_j in between."""
    events = _events(log)
    bad = []
    for j in range(len(events)):
        seen = False
        for i in range(j - 1, -1, -1):
            seen = seen or in_gamma_plus(events[i], events[j])
            if not seen and precedes(family, events[j], events[i]):
                bad.append((i + 1, j + 1))
    return bad


# ---------------------------------------------------------------- trees

@dataclass
class TreeNode:
    label: EventSpec
    parent: int | None
    depth: int
    stamp: int


@dataclass
class MoserTree:
    nodes: list[TreeNode]
    root: int = 0
    generating_log: list[EventSpec] | None = field(default=None, repr=False)

    def __len__(self):
        return len(self.nodes)

    def children(self, idx: int) -> list[int]:
        return [k for k, n in enumerate(self.nodes) if n.parent == idx]

    def canonical(self, idx: int | None = None) -> tuple:
        """Unordered labeled-tree form; equal exactly when the labeled trees agree."""
        idx = self.root if idx is None else idx
        kids = sorted(self.canonical(k) for k in self.children(idx))
        return (self.nodes[idx].label.id, tuple(kids))

    def weight(self) -> Fraction:
        w = Fraction(1)
        for n in self.nodes:
            w *= n.label.pstar
        return w

    def as_dict(self) -> dict:
        return {"labels": [list(n.label.id) for n in self.nodes],
                "parents": [n.parent for n in self.nodes],
                "depths": [n.depth for n in self.nodes],
                "stamps": [n.stamp for n in self.nodes]}


def _attach_point(family: EventFamily, nodes: list[TreeNode], e: EventSpec) -> int | None:
    best, best_key = None, None
    for k, x in enumerate(nodes):
        if in_gamma_plus(e, x.label):
            key = (-x.depth, family.priority_key(x.label))
            if best_key is None or key < best_key:
                best, best_key = k, key
    return best


def build_moser_tree(family: EventFamily, log) -> MoserTree:
    """Backward construction from the last stage; nodes attach through Gamma+."""
    events = _events(log)
    if not events:
        raise InstanceError("an empty log has no Moser tree")
    if not is_legal_log(family, events):
        raise InstanceError("log is not legal")
    n = len(events)
    nodes = [TreeNode(events[-1], None, 0, n)]
    for k in range(n - 1, 0, -1):
        e = events[k - 1]
        y = _attach_point(family, nodes, e)
        if y is not None:
            nodes.append(TreeNode(e, y, nodes[y].depth + 1, k))
    return MoserTree(nodes, 0, list(events))


def prefix_tree_canonicals(family: EventFamily, log) -> list[tuple]:
    """Canonical tree of E_1..E_m for every m >= 1."""
    events = _events(log)
    return [build_moser_tree(family, events[:m]).canonical() for m in range(1, len(events) + 1)]


def greedy_vertex_order(family: EventFamily, tree: MoserTree) -> list[int]:
    remaining = set(range(len(tree.nodes)))
    order = []
    while remaining:
        top = []
        for v in remaining:
            lv = tree.nodes[v].label
            deepest = max(tree.nodes[w].depth for w in remaining
                          if in_gamma_plus(tree.nodes[w].label, lv))
            if tree.nodes[v].depth == deepest:
                top.append(v)
        g = min(top, key=lambda v: (family.priority_key(tree.nodes[v].label), v))
        order.append(g)
        remaining.remove(g)
    return order


@dataclass
class InvariantReport:
    failures: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failures


def _depth_rule_failures(tree: MoserTree) -> list[str]:
    out = []
    nodes = tree.nodes
    for a in range(len(nodes)):
        for b in range(a + 1, len(nodes)):
            x, y = nodes[a], nodes[b]
            if not in_gamma_plus(x.label, y.label):
                continue
            if x.depth == y.depth or (x.depth > y.depth) != (x.stamp < y.stamp):
                out.append(f"depth-rule: nodes {a} and {b} break the depth/stamp rule")
    return out


def verify_tree_invariants(family: EventFamily, tree: MoserTree, log=None) -> InvariantReport:
    report = InvariantReport()
    report.failures += _depth_rule_failures(tree)
    for k, node in enumerate(tree.nodes):
        if node.parent is not None and node.depth != tree.nodes[node.parent].depth + 1:
            report.failures.append(f"depth-rule: node {k} depth is not parent depth + 1")

    order = greedy_vertex_order(family, tree)
    stamps = [tree.nodes[v].stamp for v in order]
    if any(a >= b for a, b in zip(stamps, stamps[1:])):
        report.failures.append(f"greedy-stamps: stamps along the greedy order are {stamps}")
    if order and order[-1] != tree.root:
        report.failures.append("greedy-stamps: the greedy order does not end at the root")

    if log is None:
        return report
    events = _events(log)
    n = len(events)
    canon = tree.canonical()
    for m in range(1, n):
        if build_moser_tree(family, events[:m]).canonical() == canon:
            report.failures.append(f"prefix-distinct: stages {m} and {n} give the same tree")

    full = {(node.stamp, tree.nodes[node.parent].stamp if node.parent is not None else None,
             node.label.id) for node in tree.nodes}
    for r in range(2, n + 1):
        sub = build_moser_tree(family, events[r - 1:])
        shifted = {(node.stamp + r - 1,
                    sub.nodes[node.parent].stamp + r - 1 if node.parent is not None else None,
                    node.label.id) for node in sub.nodes}
        if not shifted <= full:
            report.failures.append(f"suffix-subtree: suffix from stage {r} is not a labeled subtree")

    bounds = [0] + stamps
    for i in range(len(order)):
        for k in range(bounds[i] + 1, bounds[i + 1]):
            ek = events[k - 1]
            for j in range(i, len(order)):
                label = tree.nodes[order[j]].label
                if classify_pair(family, ek, label) is not PairClass.LEFT_OF:
                    report.failures.append(f"left-of-labels: E_{k} is not left of the label of v_{j + 1}")
    return report


# ---------------------------------------------------------------- enumeration

def _label_pool(family: EventFamily, root: EventSpec, radius: int) -> list[EventSpec]:
    pool = {root.id: root}
    frontier = [root]
    for _ in range(radius):
        nxt = []
        for e in frontier:
            for b in gamma(family, e):
                if b.id not in pool:
                    pool[b.id] = b
                    nxt.append(b)
        frontier = nxt
    return sorted(pool.values(), key=family.priority_key)


def _canon_nodes(nodes: list[TreeNode], idx: int = 0) -> tuple:
    kids = sorted(_canon_nodes(nodes, k) for k, n in enumerate(nodes) if n.parent == idx)
    return (nodes[idx].label.id, tuple(kids))


def enumerate_trees(family: EventFamily, root_label, max_nodes: int,
                    slack: int | None = None) -> Iterator[MoserTree]:
    """Every Moser tree with at most max_nodes nodes and the given root label.

    Searches legal logs backward from the root, allowing up to `slack`
    events that do not attach (default 2 * max_nodes).
    """
    root = root_label if isinstance(root_label, EventSpec) else family.event(tuple(root_label))
    slack = 2 * max_nodes if slack is None else slack
    pool = _label_pool(family, root, max_nodes + 1)
    start = [TreeNode(root, None, 0, 0)]
    seen_trees: set = set()
    seen_states: set = set()
    stack = [(start, [root], 0)]
    while stack:
        nodes, suffix, skips = stack.pop()
        canon = _canon_nodes(nodes)
        if canon not in seen_trees:
            seen_trees.add(canon)
            n = len(suffix)
            stamped = [TreeNode(x.label, x.parent, x.depth, n - x.stamp) for x in nodes]
            yield MoserTree(stamped, 0, list(reversed(suffix)))
        first = suffix[-1]
        for e in pool:
            if classify_pair(family, e, first) is PairClass.RIGHT_OF:
                continue
            y = _attach_point(family, nodes, e)
            if y is None:
                if skips >= slack:
                    continue
                new_nodes, new_skips = nodes, skips + 1
            else:
                if len(nodes) >= max_nodes:
                    continue
                new_nodes = nodes + [TreeNode(e, y, nodes[y].depth + 1, len(suffix))]
                new_skips = skips
            key = (_canon_nodes(new_nodes), e.id, new_skips)
            if key in seen_states:
                continue
            seen_states.add(key)
            if len(seen_states) > TREE_GUARD:
                raise SizeError("tree enumeration exceeded its guard")
            stack.append((new_nodes, suffix + [e], new_skips))


@dataclass
class WeightSumReport:
    root: tuple
    max_nodes: int
    trees: int
    truncated_sum: Fraction
    bound: Fraction
    slices: dict[int, tuple[Fraction, Fraction]]   # m -> (sum over |T| >= m, alpha^m bound)

    @property
    def ok(self) -> bool:
        return self.truncated_sum <= self.bound and all(s <= b for s, b in self.slices.values())


def weight_sum_check(family: EventFamily, root_label, max_nodes: int,
                     slice_sizes: Sequence[int] | None = None) -> WeightSumReport:
    trees = list(enumerate_trees(family, root_label, max_nodes))
    root = trees[0].nodes[0].label
    weights = [(len(t), t.weight()) for t in trees]
    total = sum((w for _, w in weights), Fraction(0))
    bound = root.z / (1 - root.z)
    sizes = range(1, max_nodes + 1) if slice_sizes is None else slice_sizes
    slices = {m: (sum((w for size, w in weights if size >= m), Fraction(0)),
                  family.alpha ** m * bound) for m in sizes}
    return WeightSumReport(root.id, max_nodes, len(trees), total, bound, slices)


# ---------------------------------------------------------------- the T-check

@dataclass
class TCheckOutcome:
    passed: bool
    log: list[EventSpec]
    stages: dict[int, int | None]        # node index -> stage of its forced resample
    held: dict[int, bool]


def _finite_events(family: EventFamily) -> list[EventSpec]:
    if family.num_variables is None:
        raise InstanceError("the T-check needs a finite (windowed) family")
    return sorted(family.events_with_vbl_within(0, family.num_variables - 1), key=family.priority_key)


def _tcheck_plan(family: EventFamily, tree: MoserTree):
    """Greedy order plus, per step, the events left of every label still to come.

    Depends only on the tree, so it is cached on the family across trials.
    """
    cache = family.__dict__.setdefault("_tcheck_plans", {})
    key = tuple((node.label.id, node.parent, node.depth, node.stamp) for node in tree.nodes)
    if key not in cache:
        events = _finite_events(family)
        order = greedy_vertex_order(family, tree)
        allowed_at = []
        for step in range(len(order)):
            labels = [tree.nodes[w].label for w in order[step:]]
            allowed_at.append([a for a in events if all(
                classify_pair(family, a, lab) is PairClass.LEFT_OF for lab in labels)])
        cache[key] = (order, allowed_at)
    return cache[key]


def run_t_check(family: EventFamily, tree: MoserTree, seed: int = 0,
                grid: SampleGrid | None = None, max_stages: int | None = None) -> TCheckOutcome:
    n = family.num_variables
    max_stages = max_stages_default() if max_stages is None else max_stages
    grid = grid if grid is not None else SampleGrid(seed, family.variable)
    values = [grid.current(i) for i in range(n)]
    view = family.make_view(values)
    order, allowed_at = _tcheck_plan(family, tree)
    log: list[EventSpec] = []
    stages: dict[int, int | None] = {v: None for v in order}
    held: dict[int, bool] = {v: False for v in order}
    stage = 0

    def resample(e):
        for i in e.rsp:
            values[i] = grid.advance(i)
        family.invalidate(view, e.rsp_lo)
        log.append(e)

    for v, allowed in zip(order, allowed_at):
        while True:
            bad = next((a for a in allowed if a.holds(view)), None)
            if bad is None:
                break
            if stage >= max_stages:
                return TCheckOutcome(False, log, stages, held)
            stage += 1
            resample(bad)
        label = tree.nodes[v].label
        held[v] = label.holds(view)
        stage += 1
        stages[v] = stage
        resample(label)
    return TCheckOutcome(all(held.values()), log, stages, held)


def coupling_test(family: EventFamily, tree: MoserTree, seed: int,
                  tcheck_seed: int | None = None) -> bool:
    """False only if the resampler generated the tree but the T-check failed."""
    n = family.num_variables
    run = run_windowed(family, (0, n - 1), seed)
    target = tree.canonical()
    if target not in prefix_tree_canonicals(family, run.log):
        return True
    return run_t_check(family, tree, seed if tcheck_seed is None else tcheck_seed).passed
