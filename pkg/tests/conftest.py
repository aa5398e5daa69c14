"""Shared helpers: independent brute-force oracles used across the test files."""

from __future__ import annotations

import itertools
import math
from collections import Counter
from fractions import Fraction

import pytest

from lefthanded.colorings import candidates
from lefthanded.engine import MissingCell, ScriptedGrid, run_windowed


def brute_conditional_probabilities(family, event):
    """Pr(event | stc = mu) for every mu, by plain enumeration of all vbl assignments."""
    sizes = [family.variable(i).range_size for i in event.vbl]
    n_stc = event.rsp_lo - event.vbl_lo
    hits: dict[tuple, int] = {}
    totals: dict[tuple, int] = {}
    for combo in itertools.product(*(range(s) for s in sizes)):
        values = [0] * event.vbl_lo + list(combo)
        mu = combo[:n_stc]
        totals[mu] = totals.get(mu, 0) + 1
        hits[mu] = hits.get(mu, 0) + bool(event.holds(family.make_view(values)))
    return {mu: Fraction(hits[mu], totals[mu]) for mu in totals}


def thue_choice_oracle(lists, k, n, expand=False):
    """Pr(square at (k, n) | colours a[0, k+n)) over every reachable colour prefix.

    Returns a Counter mapping each probability to the number of prefixes that
    give it.  Walks the staged process one candidate index at a time; a uniform
    triple makes the used coordinate uniform over the stage's candidates, so
    each branch has weight 1 / len(candidates).  With expand=True the tail is
    expanded over every branch; otherwise it follows the one colour the square
    forces at each stage.
    """
    out: Counter = Counter()

    def expanded(colors):
        i = len(colors)
        if i == k + 2 * n:
            return Fraction(int(colors[k:k + n] == colors[k + n:k + 2 * n]))
        _, cand = candidates(lists, i, colors)
        return sum((expanded(colors + [c]) for c in cand), Fraction(0)) / len(cand)

    def forced(colors):
        colors = list(colors)
        p = Fraction(1)
        for j in range(n):
            _, cand = candidates(lists, k + n + j, colors)
            target = colors[k + j]
            if target not in cand:
                return Fraction(0)
            p /= len(cand)
            colors.append(target)
        return p

    tail = expanded if expand else forced
    stack = [[]]
    while stack:
        colors = stack.pop()
        if len(colors) == k + n:
            out[tail(colors)] += 1
            continue
        _, cand = candidates(lists, len(colors), colors)
        stack.extend(colors + [c] for c in cand)
    return out


def lazy_seed_tree(family, k):
    """Law of the stage-k valuation by walking every lazily consumed grid cell."""
    n = family.num_variables
    law: dict[tuple, Fraction] = {}
    stack = [({}, Fraction(1))]
    while stack:
        cells, weight = stack.pop()
        try:
            run = run_windowed(family, (0, n - 1), grid=ScriptedGrid(cells, family.variable),
                               stop_after=k)
        except MissingCell as missing:
            i, j = missing.cell
            spec = family.variable(i)
            for v, p in enumerate(spec.distribution):
                stack.append(({**cells, (i, j): v}, weight * p))
            continue
        key = tuple(run.values)
        law[key] = law.get(key, 0) + weight
    return law


def sigma4(p: float, trials: int) -> float:
    return 4 * math.sqrt(max(p * (1 - p), 1.0 / trials) / trials)


@pytest.fixture
def report(capsys):
    """Print one acceptance line outside pytest's capture."""

    def emit(tag: str, title: str, ok: bool, detail: str = ""):
        with capsys.disabled():
            suffix = f" ({detail})" if detail else ""
            print(f"\n[{tag}] {title}: {'PASS' if ok else 'FAIL'}{suffix}")
        return ok

    return emit

