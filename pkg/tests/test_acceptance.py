"""End-to-end acceptance checks, one test per criterion.

Each test prints a single "[ACxx] title: PASS/FAIL (detail)" line and then
asserts the same condition, so `pytest tests/test_acceptance.py -v -s` gives a
readable summary.
"""

import itertools
import json
import math
import random
import time
from fractions import Fraction

import pytest

from lefthanded.cli import generate_artifact, main
from lefthanded.colorings import (
    coloring_conflicts,
    lacunary_instance,
    random_lists,
    square_free_checker,
    square_free_checker_fast,
    thue_decode,
    thue_family,
    uniform_lists,
    usable_terms,
    verify_norm,
)
from lefthanded.core import ExplicitFamily, pstar_sup, uniform_variable, validate_pstar_exhaustive
from lefthanded.engine import (
    certify_prefix,
    computable_element_micro,
    compute_settlement_bound,
    output_distribution,
    run_windowed,
)
from lefthanded.games import (
    defeat_all_rows,
    game_alon_family,
    game_beck_family,
    make_oracle,
    merge_moves,
    row_defeat_hits,
)
from lefthanded.sequences import (
    adjacency_difference_checker,
    adjacency_difference_checker_naive,
    alon_family,
    beck_event,
    beck_family,
    block_repetition_checker,
    block_repetition_checker_naive,
)
from lefthanded.toys import single_bit, toy3
from lefthanded.witness import (
    build_moser_tree,
    coupling_test,
    enumerate_trees,
    is_legal_log,
    order_breaks,
    run_t_check,
    verify_tree_invariants,
    weight_sum_check,
)

from conftest import lazy_seed_tree, sigma4, thue_choice_oracle
from test_games import _exhaustive_pstar, copycat_answer

GAME_ORACLES = ["copycat", "constant", "seeded-random", "block-mirror"]


def _generate_and_verify(tmp_path, app, argv):
    """Run the CLI generate then verify; returns (exit codes, artifact, seconds)."""
    art = tmp_path / f"{app}.json"
    ver = tmp_path / f"{app}-verify.json"
    start = time.perf_counter()
    gen_code = main(["generate", "--app", app, *argv, "--out", str(art)])
    ver_code = main(["verify", str(art), "--app", app, "--out", str(ver)])
    elapsed = time.perf_counter() - start
    return (gen_code, ver_code), json.loads(art.read_text()), elapsed


# ---------------------------------------------------------------- AC1, AC2: binary sequences

@pytest.mark.slow
def test_ac01_beck_end_to_end(tmp_path, report):
    failures, slowest = [], 0.0
    for seed in range(1, 21):
        codes, artifact, elapsed = _generate_and_verify(
            tmp_path, "beck", ["--epsilon", "1/2", "--length", "4096", "--seed", str(seed)])
        slowest = max(slowest, elapsed)
        bits = [int(c) for c in artifact["sequence"]]
        N = beck_family(Fraction(1, 2))[1].N
        hits = block_repetition_checker(bits, lambda n: Fraction(3, 2) ** n, N)
        if codes != (0, 0) or hits or elapsed >= 60:
            failures.append(seed)
    ok = report("AC01", "Beck generate/verify at length 4096, 20 seeds", not failures,
                f"failing seeds {failures}, slowest run {slowest:.2f}s < 60s")
    assert ok


@pytest.mark.slow
def test_ac02_alon_end_to_end(tmp_path, report):
    failures = []
    N = alon_family(Fraction(1, 8))[1].N
    for seed in range(1, 21):
        codes, artifact, _ = _generate_and_verify(
            tmp_path, "alon", ["--epsilon", "1/8", "--length", "4096", "--seed", str(seed)])
        bits = [int(c) for c in artifact["sequence"]]
        if codes != (0, 0) or adjacency_difference_checker(bits, Fraction(3, 8), N):
            failures.append(seed)
    ok = report("AC02", "Alon generate/verify at length 4096, 20 seeds", not failures,
                f"N = {N}, failing seeds {failures}")
    assert ok


# ---------------------------------------------------------------- AC3, AC4: games

@pytest.mark.slow
def test_ac03_game_defeats(tmp_path, report):
    failures = []
    for app, eps in (("beck-game", "1/2"), ("alon-game", "1/8")):
        for oracle in GAME_ORACLES:
            for seed in range(10):
                codes, _, _ = _generate_and_verify(
                    tmp_path, app, ["--epsilon", eps, "--length", "2048", "--seed", str(seed),
                                    "--oracle", oracle, "--oracle-seed", str(seed)])
                if codes != (0, 0):
                    failures.append((app, oracle, seed))
    ok = report("AC03", "game generations verify clean for every oracle", not failures,
                f"80 runs, failures {failures}")
    assert ok


def test_ac04_defeat_every_row(report):
    rng = random.Random(2024)
    failures = []
    for N in (3, 5, 7):
        for trial in range(50):
            matrix = [[rng.randint(0, 1) for _ in range(8 * N)] for _ in range(8)]
            d = defeat_all_rows(matrix, N)
            if not all(row_defeat_hits(matrix, d, N)):
                failures.append((N, trial, "hits"))
                continue
            for k, row in enumerate(matrix):
                a = merge_moves(row, d)
                o = 2 * N * k
                # distance exactly N, so any limit with f(N) >= N flags it
                if (o, o + N, N) not in block_repetition_checker(a, lambda n: n, N - 1):
                    failures.append((N, trial, k))
    ok = report("AC04", "every row of 150 random matrices is defeated", not failures,
                f"failures {failures[:5]}")
    assert ok


# ---------------------------------------------------------------- AC5: exact P*

def _beck_pstar_cases():
    """Standalone events at short distances (blocks overlap when d < n) plus family events."""
    cases = []
    for n in range(1, 11):
        for d in range(1, n + 2):
            if d + n <= 16:
                e = beck_event(1, 1 + d, n)
                width = e.hi + 1
                fam = ExplicitFamily([uniform_variable(i, 2) for i in range(width)], [e],
                                     Fraction(1, 2), check_degenerate=False)
                cases.append((fam, e))
    family, _ = beck_family(Fraction(9, 10), threshold=0)
    for n in range(1, 11):
        for d in family.distances(n):
            if d + n <= 16:
                cases.append((family, family.event((1, 1 + d, n))))
    return cases


def test_ac05_exact_pstar_oracles(report):
    problems = []
    beck_cases = _beck_pstar_cases()
    overlapping = sum(1 for _, e in beck_cases if e.id[1] - e.id[0] < e.id[2])
    for fam, e in beck_cases:
        if not (validate_pstar_exhaustive(fam, e) and pstar_sup(fam, e) == Fraction(1, 2 ** e.id[2])):
            problems.append(("beck", e.id))

    alon, _ = alon_family(Fraction(1, 8), threshold=0)
    for n in range(1, 11):
        a = alon.event((1, n))
        if not (validate_pstar_exhaustive(alon, a) and pstar_sup(alon, a) == a.pstar):
            problems.append(("alon", a.id))

    games = 0
    beck_game, _ = game_beck_family(Fraction(1, 100), make_oracle("copycat"), threshold=1)
    alon_game, _ = game_alon_family(Fraction(1, 8), make_oracle("copycat"), threshold=1)
    events = [(beck_game, beck_game.event((k, k + d, n)))
              for n in range(2, 9) for d in beck_game.distances(n) for k in (0, 1)]
    events += [(alon_game, alon_game.event((k, n))) for n in range(2, 9) for k in (0, 1)]
    for fam, e in events:
        if e.hi + 1 > 14:
            continue
        games += 1
        exact = _exhaustive_pstar(fam, e, copycat_answer)
        if not (pstar_sup(fam, e) == exact and validate_pstar_exhaustive(fam, e)):
            problems.append((fam.name, e.id))

    thue = thue_family()
    for k in range(0, 7):
        a = thue.event((k, 3))
        oracle = thue_choice_oracle(uniform_lists(), k, 3)
        if set(thue.conditional_probabilities(a)) != set(oracle) or not validate_pstar_exhaustive(thue, a):
            problems.append(("thue", a.id))

    ok = report("AC05", "exact P* against exhaustive oracles", not problems,
                f"{len(beck_cases)} Beck events ({overlapping} overlapping), 10 Alon, "
                f"{games} game, 7 Thue; mismatches {problems}")
    assert ok


# ---------------------------------------------------------------- AC6 to AC9: witness trees

def test_ac06_witness_tree_suite(report):
    family = toy3(count=32)
    window = (0, family.num_variables - 1)
    bad, stages = [], 0
    for seed in range(10_000):
        events = run_windowed(family, window, seed).log.events
        stages += len(events)
        if not is_legal_log(family, events) or order_breaks(family, events):
            bad.append((seed, "log"))
            continue
        canon = []
        for m in range(1, len(events) + 1):
            tree = build_moser_tree(family, events[:m])
            if not verify_tree_invariants(family, tree, events[:m]).ok:
                bad.append((seed, m))
            canon.append(tree.canonical())
        if len(set(canon)) != len(canon):
            bad.append((seed, "repeat"))
    ok = report("AC06", "10^4 toy runs: legal logs, tree invariants, distinct trees", not bad,
                f"{stages} stages checked, failures {bad[:5]}")
    assert ok


@pytest.mark.slow
def test_ac07_coupling(report):
    family = toy3(count=3)
    trees = [t for root in range(3) for t in enumerate_trees(family, (root,), 3)]
    counter = [(seed, i) for seed in range(10_000)
               for i, tree in enumerate(trees) if not coupling_test(family, tree, seed)]
    ok = report("AC07", "coupling on every toy tree with at most 3 nodes", not counter,
                f"{len(trees)} trees x 10^4 seeds, counterexamples {counter[:5]}")
    assert ok


def _micro_trees():
    small = toy3(count=3)
    trees = [(small, t) for root in range(3) for t in enumerate_trees(small, (root,), 2)]
    bit = single_bit()
    trees += [(bit, t) for t in enumerate_trees(bit, (0,), 3)]
    return trees


@pytest.mark.slow
def test_ac08_tcheck_bound(report):
    trials = 100_000
    worst, failures = None, []
    trees = _micro_trees()
    for k, (family, tree) in enumerate(trees):
        passes = sum(run_t_check(family, tree, seed=s).passed for s in range(trials))
        rate = passes / trials
        bound = float(tree.weight())
        slack = rate - (bound + sigma4(bound, trials))
        worst = slack if worst is None else max(worst, slack)
        if slack > 0:
            failures.append((k, rate, bound))
    ok = report("AC08", "T-check pass rate within the weight bound", not failures,
                f"{len(trees)} trees x 10^5 trials, largest excess over bound+4sigma {worst:.2e}")
    assert ok


def test_ac09_weight_sums(report):
    problems = []
    family = toy3()
    for root in range(3):
        rep = weight_sum_check(family, (root,), 4, slice_sizes=range(1, 5))
        if not rep.ok or rep.bound != family.z / (1 - family.z):
            problems.append(("toy3", root))
    bit = single_bit()
    for max_nodes in range(1, 9):
        rep = weight_sum_check(bit, (0,), max_nodes, slice_sizes=range(1, 5))
        if not rep.ok or rep.truncated_sum != 1 - Fraction(1, 2 ** max_nodes):
            problems.append(("single-bit", max_nodes))
    # the full series sums to 1, below the bound z / (1 - z) = 9
    series_limit = Fraction(1)
    if not series_limit <= weight_sum_check(bit, (0,), 1).bound == 9:
        problems.append(("single-bit", "limit"))
    ok = report("AC09", "truncated weight sums and slices within their bounds", not problems,
                f"problems {problems}")
    assert ok


# ---------------------------------------------------------------- AC10: layerwise extraction

def test_ac10_layerwise_extraction(report):
    problems = []
    for name, family in (("single-bit", single_bit()), ("toy3", toy3(count=2))):
        n = family.num_variables
        patterns = [p for length in range(1, n + 1) for p in itertools.product((0, 1), repeat=length)]
        for k in range(4):
            law = lazy_seed_tree(family, k)
            for p in patterns:
                est = output_distribution(family, list(p), k)
                tree_mass = sum((w for s, w in law.items() if s[:len(p)] == p), Fraction(0))
                deep = output_distribution(family, list(p), 30).value
                if est.value != tree_mass or abs(est.value - deep) > est.error:
                    problems.append((name, k, p))
        prefix = computable_element_micro(family, n)
        if not certify_prefix(family, prefix, (0, n - 1), n).ok:
            problems.append((name, "element"))

    runs, worst = 1000, 0.0
    for name, family in (("single-bit", single_bit()), ("toy3", toy3(count=2))):
        n = family.num_variables
        for i in range(n):
            N = compute_settlement_bound(family, i, Fraction(1, 10)).N
            changed = 0
            for seed in range(runs):
                at_N = run_windowed(family, (0, n - 1), seed, stop_after=N).values[i]
                final = run_windowed(family, (0, n - 1), seed).values[i]
                changed += at_N != final
            rate = changed / runs
            worst = max(worst, rate)
            if rate >= 0.1 + sigma4(0.1, runs):
                problems.append((name, "settlement", i, rate))
    ok = report("AC10", "exact laws, computable elements and settlement", not problems,
                f"largest post-settlement change rate {worst:.3f}; problems {problems[:5]}")
    assert ok


# ---------------------------------------------------------------- AC11, AC12: colourings

def test_ac11_lacunary(tmp_path, report):
    start = time.perf_counter()
    inst = lacunary_instance("powers:2", 1)
    params_ok = (inst.M, inst.p, inst.h, inst.delta, inst.k) == (6, 16, 192, Fraction(1, 5584), 5584)
    codes, artifact, _ = _generate_and_verify(
        tmp_path, "lacunary", ["--epsilon", "1", "--length", "96", "--seed", "1",
                               "--color-range", "2048"])
    bits = [int(c) for c in artifact["theta_bits"]]
    J = usable_terms(inst, len(bits))
    norm_ok = verify_norm(bits, inst, J, inst.delta).ok
    terms = [inst.n(j) for j in range(12)]
    conflicts = coloring_conflicts(bits, inst.delta, terms, 0, 2048)
    elapsed = time.perf_counter() - start
    ok = params_ok and codes == (0, 0) and norm_ok and J >= 10 and not conflicts and elapsed < 300
    report("AC11", "lacunary theta and proper colouring", ok,
           f"{J} terms verified, {len(conflicts)} monochromatic edges on [0, 2048], {elapsed:.1f}s")
    assert ok


def _short_squares(colors):
    return [(k, n) for n in (1, 2) for k in range(len(colors) - 2 * n + 1)
            if colors[k:k + n] == colors[k + n:k + 2 * n]]


@pytest.mark.slow
def test_ac12_thue_choice(tmp_path, report):
    failures = []
    for list_seed in range(1, 21):
        codes, artifact, _ = _generate_and_verify(
            tmp_path, "thue", ["--length", "4096", "--seed", str(list_seed),
                               "--list-seed", str(list_seed)])
        colors = artifact["colors"]
        lists = random_lists(list_seed)
        if (codes != (0, 0) or square_free_checker(colors)
                or any(c not in lists(i) for i, c in enumerate(colors))):
            failures.append(list_seed)
    rng = random.Random(12)
    short = 0
    for t in range(10_000):
        values = [rng.randrange(120) for _ in range(rng.randint(1, 60))]
        short += bool(_short_squares(thue_decode(values, random_lists(t % 50))))
    ok = report("AC12", "list colourings square-free", not failures and short == 0,
                f"failing list seeds {failures}, prefixes with short squares {short}/10^4")
    assert ok


# ---------------------------------------------------------------- AC13: checker equivalence

@pytest.mark.slow
def test_ac13_checker_equivalence(report):
    rng = random.Random(13)
    f = lambda n: Fraction(3, 2) ** n
    mismatches = []
    for t in range(1000):
        length = rng.randint(0, 512)
        # alternate uniform and low-entropy strings so violations actually occur
        weight = 0.5 if t % 2 == 0 else 0.9
        bits = [int(rng.random() < weight) for _ in range(length)]
        N = rng.randint(0, 6)
        if block_repetition_checker(bits, f, N) != block_repetition_checker_naive(bits, f, N):
            mismatches.append((t, "repetition"))
        frac = Fraction(rng.randint(1, 7), 8)
        if adjacency_difference_checker(bits, frac, N) != adjacency_difference_checker_naive(bits, frac, N):
            mismatches.append((t, "adjacency"))
        word = [rng.randrange(3 if t % 2 else 6) for _ in range(length)]
        if square_free_checker_fast(word) != square_free_checker(word):
            mismatches.append((t, "square"))
    ok = report("AC13", "optimised checkers equal naive scans on 10^3 strings", not mismatches,
                f"mismatches {mismatches[:5]}")
    assert ok
