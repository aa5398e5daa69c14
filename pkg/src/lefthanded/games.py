"""Binary sequence games: Player 1 plays against a Player 2 strategy oracle.

Positions are 0-based.  Player 1 moves sit at the even list indices of the
transcript (the odd positions a_1, a_3, ... in 1-based numbering) and are the
variables of the process: variable i is the move at transcript index 2i.
The oracle answers at index 2i + 1 after seeing the transcript a[0..2i].
"""

from __future__ import annotations

import hashlib
import math
import shlex
import subprocess
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Sequence

import numpy as np

from .core import EventFamily, EventSpec, InstanceError, TailWitness, WitnessResult, uniform_variable
from .sequences import binomial_tail, block_repetition_checker
from .tails import (
    GeometricChain,
    binary_entropy,
    ceil_sqrt,
    chain_witness_result,
    entropy_base,
    floor_sqrt,
    geometric_chain,
    squared_distance_chain_holds,
    squared_distance_threshold,
    to_mpf,
)

import mpmath


class TranscriptError(RuntimeError):
    """The oracle failed to answer a query."""


# ---------------------------------------------------------------- oracles

class StrategyOracle:
    """A Player 2 strategy: prefix string a[0..2i] -> next bit, memoized per prefix."""

    name = "oracle"

    def __init__(self):
        self._memo: dict[str, int] = {}

    def decide(self, prefix: str) -> int:
        raise NotImplementedError

    def next_move(self, prefix: str) -> int:
        bit = self._memo.get(prefix)
        if bit is None:
            bit = self.decide(prefix)
            if bit not in (0, 1):
                raise TranscriptError(f"{self.name}: answer {bit!r} is not a bit")
            self._memo[prefix] = bit
        return bit

    def fresh(self) -> "StrategyOracle":
        """A new instance of the same strategy with an empty memo."""
        raise NotImplementedError

    @property
    def queries(self) -> int:
        return len(self._memo)

    def describe(self) -> dict:
        return {"name": self.name}


class CopycatOracle(StrategyOracle):
    """Repeat Player 1's last move."""

    name = "copycat"

    def decide(self, prefix):
        return int(prefix[-1])

    def fresh(self):
        return CopycatOracle()


class ConstantOracle(StrategyOracle):
    name = "constant"

    def __init__(self, bit: int = 0):
        super().__init__()
        if bit not in (0, 1):
            raise InstanceError("constant oracle: bit must be 0 or 1")
        self.bit = bit

    def decide(self, prefix):
        return self.bit

    def fresh(self):
        return ConstantOracle(self.bit)

    def describe(self):
        return {"name": self.name, "bit": self.bit}


class SeededRandomOracle(StrategyOracle):
    """A fixed pseudo-random function of (seed, prefix)."""

    name = "seeded-random"

    def __init__(self, seed: int = 0):
        super().__init__()
        self.seed = int(seed)

    def decide(self, prefix):
        digest = hashlib.blake2b(prefix.encode(), digest_size=1,
                                 key=self.seed.to_bytes(8, "little", signed=True)).digest()
        return digest[0] & 1

    def fresh(self):
        return SeededRandomOracle(self.seed)

    def describe(self):
        return {"name": self.name, "seed": self.seed}


class BlockMirrorOracle(StrategyOracle):
    """Copy the transcript entry `lag` positions back, trying to build repeated blocks."""

    name = "block-mirror"

    def __init__(self, lag: int = 16):
        super().__init__()
        if lag < 1:
            raise InstanceError("block-mirror oracle: lag must be positive")
        self.lag = lag

    def decide(self, prefix):
        pos = len(prefix)
        return int(prefix[pos - self.lag]) if pos >= self.lag else 0

    def fresh(self):
        return BlockMirrorOracle(self.lag)

    def describe(self):
        return {"name": self.name, "lag": self.lag}


class SubprocessOracle(StrategyOracle):
    """An external program: one prefix per input line, one bit per output line."""

    name = "subprocess"

    def __init__(self, command: str | Sequence[str]):
        super().__init__()
        self.command = shlex.split(command) if isinstance(command, str) else list(command)
        self._proc: subprocess.Popen | None = None

    def _start(self):
        if self._proc is None:
            try:
                self._proc = subprocess.Popen(self.command, stdin=subprocess.PIPE,
                                              stdout=subprocess.PIPE, text=True, bufsize=1)
            except OSError as exc:
                raise TranscriptError(f"cannot start oracle {self.command!r}: {exc}") from exc
        return self._proc

    def decide(self, prefix):
        proc = self._start()
        try:
            proc.stdin.write(prefix + "\n")
            proc.stdin.flush()
            line = proc.stdout.readline()
        except (BrokenPipeError, OSError) as exc:
            raise TranscriptError(f"oracle {self.command!r} died: {exc}") from exc
        line = line.strip()
        if line not in ("0", "1"):
            raise TranscriptError(f"oracle {self.command!r} answered {line!r}")
        return int(line)

    def close(self):
        if self._proc is not None:
            self._proc.stdin.close()
            self._proc.wait(timeout=5)
            self._proc = None

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

    def __del__(self):
        proc = getattr(self, "_proc", None)
        if proc is not None and proc.poll() is None:
            proc.kill()

    def fresh(self):
        return SubprocessOracle(self.command)

    def describe(self):
        return {"name": self.name, "command": self.command}


SHIPPED_ORACLES = ("copycat", "constant", "seeded-random", "block-mirror")


def make_oracle(spec: str, seed: int = 0) -> StrategyOracle:
    """Build an oracle from a name such as `copycat`, `constant:1`, `block-mirror:8`,
    `seeded-random` (uses `seed`) or `subprocess:<command line>`."""
    name, _, arg = spec.partition(":")
    if name == "copycat":
        return CopycatOracle()
    if name == "constant":
        return ConstantOracle(int(arg) if arg else 0)
    if name == "seeded-random":
        return SeededRandomOracle(int(arg) if arg else seed)
    if name == "block-mirror":
        return BlockMirrorOracle(int(arg) if arg else 16)
    if name == "subprocess":
        if not arg:
            raise InstanceError("subprocess oracle needs a command")
        return SubprocessOracle(arg)
    raise InstanceError(f"unknown oracle {spec!r}")


# ---------------------------------------------------------------- transcripts

@dataclass
class GameTranscript:
    player_bits: list[int]
    oracle_bits: list[int]
    sequence: list[int]


def merge_moves(player_bits: Sequence[int], oracle_bits: Sequence[int]) -> list[int]:
    out = []
    for i, b in enumerate(player_bits):
        out.append(int(b))
        if i < len(oracle_bits):
            out.append(int(oracle_bits[i]))
    return out


def play_transcript(odd_bits: Sequence[int], oracle: StrategyOracle) -> list[int]:
    """Interleave Player 1's moves with the oracle's answers."""
    return TranscriptView(list(odd_bits), oracle).sequence(2 * len(odd_bits))


def play_game(odd_bits: Sequence[int], oracle: StrategyOracle) -> GameTranscript:
    seq = play_transcript(odd_bits, oracle)
    return GameTranscript(list(seq[0::2]), list(seq[1::2]), seq)


class TranscriptView:
    """Lazy transcript over a mutable list of Player 1 moves."""

    def __init__(self, values: list, oracle: StrategyOracle):
        self.values = values
        self.oracle = oracle
        self._seq: list[int] = []
        self._chars: list[str] = []

    def invalidate(self, lo: int) -> None:
        cut = 2 * lo
        if len(self._seq) > cut:
            del self._seq[cut:]
            del self._chars[cut:]

    def sequence(self, length: int) -> list[int]:
        """The transcript a[0, length); needs Player 1 moves up to index (length-1)//2."""
        seq, chars = self._seq, self._chars
        while len(seq) < length:
            p = len(seq)
            bit = int(self.values[p // 2]) if p % 2 == 0 else self.oracle.next_move("".join(chars))
            seq.append(bit)
            chars.append("1" if bit else "0")
        return seq[:length]

    def array(self, length: int) -> np.ndarray:
        return np.asarray(self.sequence(length), dtype=np.int8)

    def __getitem__(self, item):
        # lets generic code index the Player 1 moves directly
        return self.values[item]

    def __len__(self):
        return len(self.values)


class _GameFamily(EventFamily):
    settlement_available = False

    def __init__(self, oracle: StrategyOracle, num_variables: int | None):
        self.oracle = oracle
        self.num_variables = num_variables
        self._cache: dict[tuple, EventSpec] = {}

    def _in_range(self, hi):
        return self.num_variables is None or hi < self.num_variables

    def variable(self, i):
        if i < 0 or not self._in_range(i):
            raise InstanceError(f"{self.name}: no Player 1 move {i}")
        return uniform_variable(i, 2)

    def make_view(self, values):
        return TranscriptView(values, self.oracle)

    def invalidate(self, view, lo):
        view.invalidate(lo)

    def max_hi(self):
        return None if self.num_variables is None else self.num_variables - 1

    def transcript(self, values: Sequence[int]) -> list[int]:
        return play_transcript(values, self.oracle)


# ---------------------------------------------------------------- far-apart repetitions

@dataclass(frozen=True)
class GameBeckParams:
    epsilon: Fraction
    N: int
    slack_alpha: Fraction = Fraction(1, 2)
    verified: bool = True

    def min_size(self) -> int:
        return max(self.N + 1, 2)


def _game_repetition_predicate(k, l, n):
    def predicate(view):
        seq = view.sequence(l + n)
        return seq[k:k + n] == seq[l:l + n]
    return predicate


class GameBeckFamily(_GameFamily):
    """A_{k,l,n}: a[k,k+n) = a[l,l+n) on the transcript, n the least size past N with f(n) >= l - k.

    f(n) = (2-eps)^(n/2).  Size n owns the distances (floor f(n-1), floor f(n)],
    the least size owns [1, floor f(N+1)].  A repetition of any size n > N at
    distance d <= f(n) contains one of the owning size, so avoiding these
    events avoids every close repetition.
    """

    name = "beck-game"

    def __init__(self, params: GameBeckParams, oracle: StrategyOracle, num_variables=None):
        super().__init__(oracle, num_variables)
        self.params = params
        self.alpha = params.slack_alpha
        self._floor: dict[int, int] = {}
        self._ceil: dict[int, int] = {}

    def _floor_f(self, n: int) -> int:
        if n not in self._floor:
            self._floor[n] = floor_sqrt((2 - self.params.epsilon) ** n)
        return self._floor[n]

    def _ceil_f(self, n: int) -> int:
        if n not in self._ceil:
            self._ceil[n] = ceil_sqrt((2 - self.params.epsilon) ** n)
        return self._ceil[n]

    def distances(self, n: int) -> range:
        first = self.params.min_size()
        if n < first:
            return range(0)
        lo = 1 if n == first else self._floor_f(n - 1) + 1
        return range(lo, self._floor_f(n) + 1)

    def _sizes(self, max_start):
        """(n, distances(n)) for every size whose least distance is at most max_start."""
        n = self.params.min_size()
        while True:
            ds = self.distances(n)
            if ds.start > max_start:
                return
            if len(ds):
                yield n, ds
            n += 1

    def _make(self, k, l, n):
        key = (k, l, n)
        e = self._cache.get(key)
        if e is None:
            e = EventSpec(key, 0, (l + 1) // 2, (l + n - 1) // 2,
                          _game_repetition_predicate(k, l, n),
                          Fraction(1, 2 ** (n // 2)), Fraction(1, self._ceil_f(n) * n ** 3))
            self._cache[key] = e
        return e

    def events_ending_at(self, hi):
        if not self._in_range(hi):
            return []
        out = []
        for n, ds in self._sizes(2 * hi + 1):
            for end in (2 * hi, 2 * hi + 1):
                l = end - n + 1
                for d in range(ds.start, min(ds.stop, l + 1)):
                    out.append(self._make(l - d, l, n))
        return sorted(out, key=lambda e: e.id)

    def events_with_rsp_containing(self, i):
        out = []
        for n, ds in self._sizes(2 * i):
            for l in range(max(ds.start, 2 * i - n + 1), 2 * i + 1):
                if not self._in_range((l + n - 1) // 2):
                    continue
                for d in range(ds.start, min(ds.stop, l + 1)):
                    out.append(self._make(l - d, l, n))
        return out

    def min_hi(self):
        for n, ds in self._sizes(float("inf")):
            first = (ds.start + n - 1) // 2
            return first if self._in_range(first) else None

    def rsp_reach(self, length):
        top = 2 * (length - 1)
        best = None
        for n, _ in self._sizes(top):
            best = (top + n - 1) // 2
        if best is None:
            return None
        return best if self.num_variables is None else min(best, self.num_variables - 1)

    def event(self, event_id):
        k, l, n = (int(v) for v in event_id)
        if k < 0 or (l - k) not in self.distances(n) or not self._in_range((l + n - 1) // 2):
            raise InstanceError(f"beck-game: unknown event {event_id!r}")
        return self._make(k, l, n)

    def count_events_within(self, lo, hi):
        if lo > 0:
            return 0
        # events of size n and distance d: 2 hi + 3 - n - d start positions
        total = 0
        for n, ds in self._sizes(2 * hi + 1):
            c = 2 * hi + 3 - n
            top = min(ds.stop - 1, c - 1)
            if top >= ds.start:
                terms = top - ds.start + 1
                total += terms * c - (ds.start + top) * terms // 2
        return total

    def checker_limit(self, n: int) -> int:
        """floor((2-eps)^(n/2)), the largest distance the checker flags."""
        return self._floor_f(n)

    # -- vectorised scans over the transcript, one pass per distance
    def _holding(self, a: np.ndarray, lo_hi, hi_hi, first_only):
        best = None
        found = []
        top_end = 2 * hi_hi + 1
        for n, ds in self._sizes(top_end):
            for d in range(ds.start, min(ds.stop, top_end - n + 2)):
                k_lo = max(0, 2 * lo_hi - d - n + 1)
                k_hi = top_end - d - n + 1
                if k_lo > k_hi:
                    continue
                if first_only and best is not None and (k_lo + d + n - 1) // 2 > best[0]:
                    continue
                count = k_hi - k_lo + 1
                eq = a[k_lo:k_hi + n] == a[k_lo + d:k_hi + d + n]
                c = np.concatenate(([0], np.cumsum(eq)))
                hits = np.nonzero(c[n:n + count] - c[:count] == n)[0]
                if not len(hits):
                    continue
                if first_only:
                    k = k_lo + int(hits[0])
                    key = ((k + d + n - 1) // 2, (k, k + d, n))
                    if best is None or key < best:
                        best = key
                else:
                    found.extend((k_lo + int(h), d, n) for h in hits)
        if first_only:
            return None if best is None else self._make(*best[1])
        return sorted((self._make(k, k + d, n) for k, d, n in found), key=self.priority_key)

    def least_bad(self, view, lo_hi, hi_hi, vbl_lo_min=0):
        if vbl_lo_min > 0:
            return None
        if self.num_variables is not None:
            hi_hi = min(hi_hi, self.num_variables - 1)
        return self._holding(view.array(2 * hi_hi + 2), lo_hi, hi_hi, True)

    def all_bad(self, view, lo, hi):
        if lo > 0:
            return []
        return self._holding(view.array(2 * hi + 2), 0, hi, False)


def game_beck_witness(params: GameBeckParams) -> TailWitness:
    ratio = 2 - params.epsilon

    def check() -> WitnessResult:
        n0 = params.N + 1
        checks = {
            "squared-chain": squared_distance_chain_holds(ratio / 2, params.N),
            "distance-exceeds-size": ratio ** n0 > n0 * n0,
            "distance-growth": ratio >= Fraction(n0 + 1, n0) ** 2,
        }
        return chain_witness_result("beck-game-distance-chain", checks,
                                    {"N": params.N, "epsilon": str(params.epsilon)})

    def neighbor_count(n, n0):
        return (n + n0) * ceil_sqrt(ratio ** n)

    return TailWitness("beck-game-distance-chain", neighbor_count, check)


@lru_cache(maxsize=None)
def game_beck_threshold(epsilon: Fraction) -> int:
    ratio = 2 - epsilon
    N = squared_distance_threshold(ratio / 2)
    # also keep f(n) > n and its ratio test from N + 1 on
    while not (ratio ** (N + 1) > (N + 1) ** 2 and ratio >= Fraction(N + 2, N + 1) ** 2):
        N += 1
    return N


def game_beck_family(epsilon, oracle: StrategyOracle, threshold: int | None = None,
                     num_variables: int | None = None) -> tuple[GameBeckFamily, GameBeckParams]:
    eps = Fraction(epsilon)
    if not 0 < eps < 1:
        raise InstanceError("beck-game: epsilon must lie in (0, 1)")
    if threshold is None:
        params = GameBeckParams(eps, game_beck_threshold(eps))
    else:
        params = GameBeckParams(eps, int(threshold), verified=False)
    family = GameBeckFamily(params, oracle, num_variables)
    if params.verified:
        family.lll_witness = game_beck_witness(params)
    return family, params


# ---------------------------------------------------------------- very different adjacent blocks

@dataclass(frozen=True)
class GameAlonParams:
    epsilon: Fraction
    N: int
    b: Fraction
    gamma: Fraction
    ratio_floor: Fraction
    slack_alpha: Fraction = Fraction(1, 2)
    verified: bool = True

    def share_threshold(self, n: int) -> int:
        return math.ceil((Fraction(3, 4) + self.epsilon) * n)

    def min_size(self) -> int:
        return max(self.N + 1, 2)


def game_alon_pstar(epsilon: Fraction, n: int) -> Fraction:
    """Pr(Bin(floor(n/2), 1/2) >= T - ceil(n/2)), T = ceil((3/4+eps) n).

    Player 2 may match every one of its ceil(n/2) entries in the second block
    and Player 1 owns at least floor(n/2) of them.
    """
    t = math.ceil((Fraction(3, 4) + epsilon) * n) - (n + 1) // 2
    return binomial_tail(n // 2, t)


def _game_share_predicate(k, n, t):
    def predicate(view):
        seq = view.sequence(k + 2 * n)
        return sum(seq[k + i] == seq[k + n + i] for i in range(n)) >= t
    return predicate


class GameAlonFamily(_GameFamily):
    """A_{k,n}: transcript blocks a[k,k+n), a[k+n,k+2n) share >= ceil((3/4+eps) n) entries."""

    name = "alon-game"

    def __init__(self, params: GameAlonParams, oracle: StrategyOracle, num_variables=None):
        super().__init__(oracle, num_variables)
        self.params = params
        self.alpha = params.slack_alpha
        self._pstar: dict[int, Fraction] = {}

    def pstar(self, n):
        if n not in self._pstar:
            self._pstar[n] = game_alon_pstar(self.params.epsilon, n)
        return self._pstar[n]

    def _make(self, k, n):
        e = self._cache.get((k, n))
        if e is None:
            e = EventSpec((k, n), 0, (k + n + 1) // 2, (k + 2 * n - 1) // 2,
                          _game_share_predicate(k, n, self.params.share_threshold(n)),
                          self.pstar(n), self.params.b ** n / n)
            self._cache[(k, n)] = e
        return e

    def events_ending_at(self, hi):
        if not self._in_range(hi):
            return []
        out = []
        for n in range(self.params.min_size(), hi + 2):
            for end in (2 * hi, 2 * hi + 1):
                k = end - 2 * n + 1
                if k >= 0:
                    out.append(self._make(k, n))
        return sorted(out, key=lambda e: e.id)

    def events_with_rsp_containing(self, i):
        out = []
        for n in range(self.params.min_size(), 2 * i + 1):
            for k in range(max(0, 2 * i - 2 * n + 1), 2 * i - n + 1):
                if self._in_range((k + 2 * n - 1) // 2):
                    out.append(self._make(k, n))
        return out

    def min_hi(self):
        first = (2 * self.params.min_size() - 1) // 2
        return first if self._in_range(first) else None

    def rsp_reach(self, length):
        i = length - 1
        if 2 * i < self.params.min_size():
            return None
        reach = (4 * i - 1) // 2
        return reach if self.num_variables is None else min(reach, self.num_variables - 1)

    def event(self, event_id):
        k, n = (int(v) for v in event_id)
        if n < self.params.min_size() or k < 0 or not self._in_range((k + 2 * n - 1) // 2):
            raise InstanceError(f"alon-game: unknown event {event_id!r}")
        return self._make(k, n)

    def count_events_within(self, lo, hi):
        if lo > 0:
            return 0
        return sum(max(0, 2 * hi + 3 - 2 * n) for n in range(self.params.min_size(), hi + 2))

    # -- vectorised scans over the transcript
    def _holding(self, a: np.ndarray, lo_hi, hi_hi, first_only):
        best = None
        found = []
        top_end = 2 * hi_hi + 1
        for n in range(self.params.min_size(), (top_end + 1) // 2 + 1):
            k_lo = max(0, 2 * lo_hi - 2 * n + 1)
            k_hi = top_end - 2 * n + 1
            if k_lo > k_hi:
                continue
            if first_only and best is not None and (k_lo + 2 * n - 1) // 2 > best[0]:
                continue
            count = k_hi - k_lo + 1
            eq = a[k_lo:k_hi + n] == a[k_lo + n:k_hi + 2 * n]
            c = np.concatenate(([0], np.cumsum(eq)))
            share = c[n:n + count] - c[:count]
            hits = np.nonzero(share >= self.params.share_threshold(n))[0]
            if not len(hits):
                continue
            if first_only:
                k = k_lo + int(hits[0])
                key = ((k + 2 * n - 1) // 2, (k, n))
                if best is None or key < best:
                    best = key
            else:
                found.extend((k_lo + int(h), n) for h in hits)
        if first_only:
            return None if best is None else self._make(*best[1])
        return sorted((self._make(k, n) for k, n in found), key=self.priority_key)

    def least_bad(self, view, lo_hi, hi_hi, vbl_lo_min=0):
        if vbl_lo_min > 0:
            return None
        if self.num_variables is not None:
            hi_hi = min(hi_hi, self.num_variables - 1)
        return self._holding(view.array(2 * hi_hi + 2), lo_hi, hi_hi, True)

    def all_bad(self, view, lo, hi):
        if lo > 0:
            return []
        return self._holding(view.array(2 * hi + 2), 0, hi, False)


def game_alon_witness(params: GameAlonParams, chain: GeometricChain) -> TailWitness:
    def check() -> WitnessResult:
        checks = dict(chain.holds())
        q = params.ratio_floor
        with mpmath.workprec(256):
            exact = mpmath.power(2, (binary_entropy(q) - 1) / 2)
            checks["entropy-base"] = to_mpf(params.gamma) >= exact
        # for n > N the needed Player 1 match ratio is at least q
        n = params.N + 1
        checks["match-ratio"] = Fraction(1, 2) + 2 * params.epsilon - Fraction(1, n) >= q
        checks["pstar-spot"] = all(
            game_alon_pstar(params.epsilon, m) <= m * params.gamma ** m / params.gamma
            for m in range(params.N + 1, params.N + 4))
        return chain_witness_result("alon-game-geometric-chain", checks,
                                    {"N": params.N, "b": str(params.b), "gamma": str(params.gamma)})

    return TailWitness("alon-game-geometric-chain", lambda n, n0: n + n0, check)


GAME_ALON_SIZE_GUESS = 100


@lru_cache(maxsize=None)
def _game_alon_chain(epsilon: Fraction):
    q = Fraction(1, 2) + 2 * epsilon - Fraction(1, GAME_ALON_SIZE_GUESS + 1)
    gamma = entropy_base(q, Fraction(1, 2))
    return q, gamma, geometric_chain(gamma, 1 / gamma, floor_N=GAME_ALON_SIZE_GUESS)


def game_alon_family(epsilon, oracle: StrategyOracle, threshold: int | None = None,
                     num_variables: int | None = None) -> tuple[GameAlonFamily, GameAlonParams]:
    eps = Fraction(epsilon)
    if not 0 < eps < Fraction(1, 4):
        raise InstanceError("alon-game: epsilon must lie in (0, 1/4)")
    q, gamma, chain = _game_alon_chain(eps)
    if threshold is None:
        params = GameAlonParams(eps, chain.N, chain.b, gamma, q)
    else:
        params = GameAlonParams(eps, int(threshold), chain.b, gamma, q, verified=False)
    family = GameAlonFamily(params, oracle, num_variables)
    if params.verified:
        family.lll_witness = game_alon_witness(params, chain)
    return family, params


# ---------------------------------------------------------------- defeating every row at once

def defeat_all_rows(matrix: Sequence[Sequence[int]], N: int) -> list[int]:
    """Player 2 moves d such that every row, played against d, repeats a block of length N.

    Row k is handled in the window [o, o + 2N) with o = 2Nk.  Row entries are
    Player 1 moves: row[j] sits at transcript index 2j.
    """
    if N < 1 or N % 2 == 0:
        raise InstanceError("defeat_all_rows: N must be odd")
    rows = [list(r) for r in matrix]
    total = 2 * N * len(rows)
    d: list[int | None] = [None] * (total // 2)
    for k, row in enumerate(rows):
        o = 2 * N * k
        if len(row) < (o + 2 * N) // 2:
            raise InstanceError(f"defeat_all_rows: row {k} has {len(row)} moves, needs {(o + 2 * N) // 2}")
        for i in range(N):
            p = o + i
            if p % 2:
                d[p // 2] = row[(p + N) // 2]
            else:
                d[(p + N) // 2] = row[p // 2]
    return [0 if v is None else v for v in d]


def row_defeat_hits(matrix: Sequence[Sequence[int]], d: Sequence[int], N: int) -> list[bool]:
    """For each row, does the checker find the planted adjacent repetition?"""
    out = []
    for k, row in enumerate(matrix):
        o = 2 * N * k
        a = merge_moves(list(row[:len(d)]), d)
        hits = block_repetition_checker(a[:o + 2 * N], lambda n: N, N - 1)
        out.append((o, o + N, N) in hits)
    return out
