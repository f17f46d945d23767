"""Elections with k >= 3 candidates: plurality, k-candidate noise stability,
and pairwise (Condorcet) analysis of ranked ballots.

A k-candidate method on n voters is a table of length k**n indexed by
``sum_i v_i * k**(i-1)`` (voter 1 is the least significant digit).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from .errors import ParseError, TooLargeError, ValidationError
from .hypercube import BooleanFunction
from .noise import StabilityEstimate, _as_rho
from .rng import run_blocks

N_MULTI = 16_000_000
_MC_CELLS = 1 << 22


class PluralityResult(NamedTuple):
    winner: int
    tie: bool


def _check_multi_votes(votes, k, n=None):
    votes = np.asarray(votes, dtype=np.int64)
    if votes.ndim != 1 or votes.size == 0:
        raise ValidationError("votes must be a nonempty 1-d sequence")
    if n is not None and votes.size != n:
        raise ValidationError(f"expected {n} votes, got {votes.size}")
    if votes.min() < 0 or votes.max() >= k:
        raise ValidationError(f"every vote must be a candidate id in 0..{k - 1}")
    return votes


def plurality(votes, k: int, tie_rule: str = "lowest", rng=None) -> PluralityResult:
    """Candidate with the most votes.

    Ties go to the lowest candidate id, or to a uniformly random tied
    candidate when ``tie_rule == "random"`` (``rng`` required).
    """
    votes = _check_multi_votes(votes, k)
    counts = np.bincount(votes, minlength=k)
    leaders = np.flatnonzero(counts == counts.max())
    tie = leaders.size > 1
    if tie and tie_rule == "random":
        if rng is None:
            raise ValidationError("random tie rule needs an rng")
        return PluralityResult(int(rng.choice(leaders)), True)
    if tie_rule not in ("lowest", "random"):
        raise ValidationError(f"unknown tie rule {tie_rule!r}")
    return PluralityResult(int(leaders[0]), tie)


def _decode_multi(start, stop, n, k):
    idx = np.arange(start, stop, dtype=np.int64)
    powers = k ** np.arange(n, dtype=np.int64)
    return (idx[:, None] // powers) % k


def _plurality_batch(V, k):
    counts = np.zeros((V.shape[0], k), dtype=np.int64)
    for c in range(k):
        counts[:, c] = (V == c).sum(axis=1)
    return counts.argmax(axis=1)


class MultiFunction:
    """A k-candidate voting method: a dense table, or lazy plurality."""

    def __init__(self, n: int, k: int, table=None, name=None):
        if n <= 0 or k < 2:
            raise ValidationError(f"need n >= 1 and k >= 2, got n={n} k={k}")
        self.n, self.k, self.name = n, k, name
        if table is not None:
            table = np.asarray(table, dtype=np.int64)
            if table.shape != (k**n,):
                raise ValidationError(f"table must have length k**n = {k**n}")
            if table.min() < 0 or table.max() >= k:
                raise ValidationError(f"table entries must lie in 0..{k - 1}")
            table.setflags(write=False)
        self.table = table

    @property
    def size(self) -> int:
        return self.k**self.n

    @classmethod
    def plurality(cls, n, k, dense=None):
        """Plurality with lowest-id tie breaking."""
        if dense is None:
            dense = k**n <= N_MULTI
        f = cls(n, k, name=f"plurality:{k}")
        if dense:
            f._check_dense()
            table = np.empty(f.size, dtype=np.int64)
            step = max(1, _MC_CELLS // n)
            for start in range(0, f.size, step):
                stop = min(f.size, start + step)
                table[start:stop] = _plurality_batch(_decode_multi(start, stop, n, k), k)
            f = cls(n, k, table, name=f.name)
        return f

    @classmethod
    def random(cls, n, k, rng):
        return cls(n, k, rng.integers(0, k, size=k**n))

    def _check_dense(self):
        if self.size > N_MULTI:
            raise TooLargeError(f"k**n = {self.size} exceeds the dense cap {N_MULTI}")

    def dense(self) -> "MultiFunction":
        if self.table is not None:
            return self
        return MultiFunction.plurality(self.n, self.k, dense=True)

    def __call__(self, votes) -> int:
        votes = _check_multi_votes(votes, self.k, self.n)
        if self.table is None:
            return plurality(votes, self.k).winner
        return int(self.table[int(np.dot(votes, self.k ** np.arange(self.n, dtype=np.int64)))])

    def evaluate_batch(self, V) -> np.ndarray:
        V = np.asarray(V, dtype=np.int64)
        if self.table is None:
            return _plurality_batch(V, self.k)
        return self.table[V @ (self.k ** np.arange(self.n, dtype=np.int64))]

    def win_counts(self) -> np.ndarray:
        return np.bincount(self.dense().table, minlength=self.k)

    def is_balanced(self) -> bool:
        counts = self.win_counts()
        return bool((counts == counts[0]).all())

    def to_boolean(self) -> BooleanFunction:
        """k = 2 only: candidate 1 becomes +1, candidate 0 becomes -1."""
        if self.k != 2:
            raise ValidationError("only two-candidate methods relabel to +/-1")
        return BooleanFunction.from_bits(self.dense().table == 1, name=self.name)

    @classmethod
    def from_boolean(cls, f: BooleanFunction):
        return cls(f.n, 2, f.bits.astype(np.int64), name=f.name)


def stability_k(f: MultiFunction, rho, exact: bool = True, samples: int = 0, seed: int = 0, threads=None) -> StabilityEstimate:
    """P[f(X) = f(Y)] for uniform votes X and corrupted copy Y.

    Each corrupted vote keeps the original with probability rho and is
    otherwise redrawn uniformly from the k candidates.
    """
    rho = float(_as_rho(rho))
    if exact:
        return _stability_k_exact(f.dense(), rho)
    samples = int(samples)
    if samples < 1:
        raise ValidationError("samples must be at least 1")
    if rho == 1:
        return StabilityEstimate(value=1.0, samples=samples, seed=seed, exact=False)
    results = run_blocks(_mc_worker(f, rho), samples, seed, threads)
    agree = sum(results)
    mean = agree / samples
    var = mean * (1 - mean) * samples / (samples - 1) if samples > 1 else 0.0
    return StabilityEstimate(value=mean, stderr=math.sqrt(var / samples), samples=samples, seed=seed, exact=False)


def _stability_k_exact(f: MultiFunction, rho: float) -> StabilityEstimate:
    n, k = f.n, f.k
    total = 0.0
    for c in range(k):
        onehot = f.table == c
        h = onehot.astype(float)
        for i in range(n):
            view = h.reshape(-1, k, k**i)
            avg = view.mean(axis=1)
            view *= rho
            view += (1 - rho) * avg[:, None, :]
        total += float(h[onehot].sum())
    return StabilityEstimate(value=min(1.0, total / f.size), exact=True)


def _mc_worker(f, rho):
    rows = max(1, _MC_CELLS // f.n)

    def work(rng, size):
        agree = 0
        for start in range(0, size, rows):
            m = min(rows, size - start)
            X = rng.integers(0, f.k, size=(m, f.n))
            keep = rng.random((m, f.n)) < rho
            Y = np.where(keep, X, rng.integers(0, f.k, size=(m, f.n)))
            agree += int(np.count_nonzero(f.evaluate_batch(X) == f.evaluate_batch(Y)))
        return agree

    return work


@dataclass(frozen=True)
class RankedProfile:
    """Ranked ballots over candidates 0..m-1, most preferred first."""

    m: int
    ballots: tuple
    labels: Optional[tuple] = None

    def __post_init__(self):
        ballots = tuple(tuple(int(c) for c in b) for b in self.ballots)
        if not ballots:
            raise ValidationError("profile needs at least one ballot")
        for row, b in enumerate(ballots, 1):
            if sorted(b) != list(range(self.m)):
                raise ValidationError(f"ballot {row} is not a permutation of 0..{self.m - 1}: {b}")
        object.__setattr__(self, "ballots", ballots)
        if self.labels is None:
            object.__setattr__(self, "labels", tuple(str(c) for c in range(self.m)))
        elif len(self.labels) != self.m:
            raise ValidationError("need one label per candidate")

    @classmethod
    def from_labels(cls, rows):
        """Build from ballots of candidate names; ids follow sorted name order."""
        rows = [[str(c).strip() for c in r] for r in rows]
        names = sorted({c for r in rows for c in r}, key=lambda s: (not s.isdigit(), int(s) if s.isdigit() else 0, s))
        ids = {c: i for i, c in enumerate(names)}
        return cls(len(names), tuple(tuple(ids[c] for c in r) for r in rows), tuple(names))

    @classmethod
    def from_csv(cls, path):
        rows = []
        with open(path, newline="") as fh:
            for line_no, row in enumerate(csv.reader(fh), 1):
                row = [c.strip() for c in row if c.strip()]
                if not row or row[0].startswith("#"):
                    continue
                if len(set(row)) != len(row):
                    raise ParseError(f"line {line_no}: repeated candidate in ballot {row}", line_no)
                rows.append(row)
        if not rows:
            raise ParseError(f"{path}: no ballots found")
        width = len(rows[0])
        for line_no, row in enumerate(rows, 1):
            if len(row) != width:
                raise ParseError(f"ballot {line_no} ranks {len(row)} candidates, expected {width}", line_no)
        try:
            return cls.from_labels(rows)
        except ValidationError as exc:
            raise ParseError(str(exc)) from exc


@dataclass(frozen=True)
class Tournament:
    """counts[a][b] = ballots ranking a above b; relation[a][b] = +1 if a beats b."""

    counts: tuple
    relation: tuple
    ties: tuple

    def beats(self, a, b) -> bool:
        return self.relation[a][b] == 1


def pairwise_tournament(profile: RankedProfile) -> Tournament:
    m = profile.m
    counts = np.zeros((m, m), dtype=np.int64)
    for ballot in profile.ballots:
        rank = np.empty(m, dtype=np.int64)
        rank[list(ballot)] = np.arange(m)
        counts += rank[:, None] < rank[None, :]
    relation = np.sign(counts - counts.T)
    ties = tuple((a, b) for a in range(m) for b in range(a + 1, m) if relation[a, b] == 0)
    return Tournament(
        counts=tuple(tuple(int(v) for v in r) for r in counts),
        relation=tuple(tuple(int(v) for v in r) for r in relation),
        ties=ties,
    )


@dataclass(frozen=True)
class CondorcetResult:
    winner: Optional[int]
    cycle: Optional[tuple]
    tournament: Tournament


def condorcet_analysis(profile: RankedProfile) -> CondorcetResult:
    """Condorcet winner if any; otherwise the first strict 3-cycle, if any.

    The cycle (a, b, c) means a beats b, b beats c and c beats a, with a the
    smallest id on the cycle.
    """
    t = pairwise_tournament(profile)
    m = profile.m
    for a in range(m):
        if all(t.beats(a, b) for b in range(m) if b != a):
            return CondorcetResult(a, None, t)
    for a in range(m):
        for b in range(a + 1, m):
            for c in range(a + 1, m):
                if c != b and t.beats(a, b) and t.beats(b, c) and t.beats(c, a):
                    return CondorcetResult(None, (a, b, c), t)
    return CondorcetResult(None, None, t)
