"""Hamming-neighborhood geometry of {-1,1}^n and adversarial vote changes.

Subsets of the cube are packed Python ints (bit ``idx(x)`` set iff x is in
the set). Moving to all points one vote away is a union of 2n shifted and
masked copies, so every dilation round is a handful of big-int operations.
"""

from __future__ import annotations

import itertools
import logging
import math
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from .errors import PreconditionError, ValidationError
from .hypercube import BooleanFunction, check_dense, check_votes, coordinate_mask, full_mask, index_of, pack, popcounts, unpack
from .methods import Majority, ThresholdMajority, as_table, make_method

log = logging.getLogger(__name__)

N_GEOM = 20
EXHAUSTIVE_LIMIT = 200_000


@dataclass(frozen=True)
class SubsetMask:
    n: int
    mask: int

    def __post_init__(self):
        check_dense(self.n, N_GEOM)
        if self.mask < 0 or self.mask >> (1 << self.n):
            raise ValidationError(f"mask does not fit in 2**{self.n} bits")

    @classmethod
    def from_indices(cls, n, indices):
        mask = 0
        for i in indices:
            mask |= 1 << int(i)
        return cls(n, mask)

    @classmethod
    def from_bits(cls, bits):
        bits = np.asarray(bits, dtype=bool)
        return cls(int(bits.size).bit_length() - 1, pack(bits))

    @classmethod
    def where(cls, f: BooleanFunction, value: int = 1):
        """{x : f(x) = value}."""
        return cls(f.n, f.table if value == 1 else full_mask(f.n) ^ f.table)

    @classmethod
    def full(cls, n):
        return cls(n, full_mask(n))

    def __len__(self):
        return self.mask.bit_count()

    def __contains__(self, x):
        return bool((self.mask >> index_of(check_votes(x, self.n))) & 1)

    @property
    def bits(self) -> np.ndarray:
        return unpack(self.mask, self.n)

    def issubset(self, other: "SubsetMask") -> bool:
        return self.n == other.n and self.mask & ~other.mask == 0


def l0_distance(x, y) -> int:
    x, y = check_votes(x), check_votes(y)
    if len(x) != len(y):
        raise ValidationError(f"length mismatch: {len(x)} vs {len(y)}")
    return sum(a != b for a, b in zip(x, y))


def _dilate(mask: int, n: int) -> int:
    out = mask
    full = full_mask(n)
    for i in range(n):
        h = 1 << i
        hi = coordinate_mask(n, i)
        out |= ((mask & (full ^ hi)) << h) | ((mask & hi) >> h)
    return out


def _neighborhood(mask: int, n: int, k: int) -> int:
    full = full_mask(n)
    for _ in range(k):
        if mask == 0 or mask == full:
            break
        grown = _dilate(mask, n)
        if grown == mask:
            break
        mask = grown
    return mask


def neighborhood(S: SubsetMask, k: int) -> SubsetMask:
    """All points within Hamming distance k of S."""
    if not 0 <= k <= S.n:
        raise ValidationError(f"k must lie in 0..{S.n}, got {k}")
    return SubsetMask(S.n, _neighborhood(S.mask, S.n, k))


def half_ball(n: int, k: int) -> SubsetMask:
    """B_k: points within distance k of {sum y_i >= 0}, i.e. {sum x_i >= -2k}."""
    if not 0 <= k <= n:
        raise ValidationError(f"k must lie in 0..{n}, got {k}")
    check_dense(n, N_GEOM)
    # sum x_i = 2 * popcount - n
    return SubsetMask(n, pack(2 * popcounts(n) - n >= -2 * k))


@dataclass(frozen=True)
class VulnerabilityReport:
    """Configurations an adversary with ``k`` vote changes can flip.

    ``per_side`` is keyed by the winner before the adversary acts.
    """

    k: int
    vulnerable_count: int
    per_side: dict = field(default_factory=dict)


def _vulnerable(table: int, n: int, k: int):
    full = full_mask(n)
    plus, minus = table, full ^ table
    from_minus = _neighborhood(plus, n, k).bit_count() - plus.bit_count()
    from_plus = _neighborhood(minus, n, k).bit_count() - minus.bit_count()
    return from_plus, from_minus


def vulnerable_count(f, k: int) -> VulnerabilityReport:
    f = as_table(f)
    check_dense(f.n, N_GEOM)
    if not 1 <= k <= f.n:
        raise ValidationError(f"k must lie in 1..{f.n}, got {k}")
    from_plus, from_minus = _vulnerable(f.table, f.n, k)
    return VulnerabilityReport(k=k, vulnerable_count=from_plus + from_minus, per_side={1: from_plus, -1: from_minus})


def check_harper(S: SubsetMask, k: int) -> bool:
    """Check |Gamma_1(S)| >= |Gamma_1(B_k)| given |S| >= |B_k|.

    The inequality is a theorem, so False means a bug somewhere upstream.
    """
    ball = half_ball(S.n, k)
    if len(S) < len(ball):
        raise PreconditionError(f"|S| = {len(S)} is smaller than |B_{k}| = {len(ball)}")
    ok = len(neighborhood(S, 1)) >= len(neighborhood(ball, 1))
    if not ok:
        log.error("Harper inequality failed for n=%d k=%d |S|=%d: implementation bug", S.n, k, len(S))
    return ok


@dataclass
class OptimalityReport:
    n: int
    k: int
    method: str
    method_count: int
    minimum: int
    competitors: int
    exhaustive: bool
    distribution: dict
    co_minimizers: list
    violations: int
    asserted: bool = True

    @property
    def optimal(self) -> bool:
        return self.violations == 0


def _competitor_tables(n, ones, trials, seed):
    size = 1 << n
    if trials is None:
        if math.comb(size, ones) > EXHAUSTIVE_LIMIT:
            raise ValidationError(f"C({size},{ones}) competitors is too many to enumerate; pass trials")
        for combo in itertools.combinations(range(size), ones):
            yield sum(1 << i for i in combo)
        return
    rng = np.random.default_rng(seed)
    for _ in range(trials):
        bits = np.zeros(size, dtype=bool)
        bits[rng.choice(size, size=ones, replace=False)] = True
        yield pack(bits)


def _audit(f: BooleanFunction, k, trials, seed, label, asserted=True) -> OptimalityReport:
    n = f.n
    base = sum(_vulnerable(f.table, n, k))
    dist = Counter()
    minimizers = []
    minimum = None
    violations = 0
    count = 0
    for table in _competitor_tables(n, f.count_ones(), trials, seed):
        v = sum(_vulnerable(table, n, k))
        dist[v] += 1
        count += 1
        if minimum is None or v < minimum:
            minimum, minimizers = v, []
        if v == minimum and len(minimizers) < 1000:
            minimizers.append(table)
        if v < base:
            violations += 1
    if asserted and violations:
        log.error("%s beaten by %d competitors at n=%d k=%d", label, violations, n, k)
    return OptimalityReport(
        n=n,
        k=k,
        method=label,
        method_count=base,
        minimum=min(base, minimum) if minimum is not None else base,
        competitors=count,
        exhaustive=trials is None,
        distribution=dict(sorted(dist.items())),
        co_minimizers=minimizers,
        violations=violations,
        asserted=asserted,
    )


def verify_majority_optimal(n: int = 3, k: int = 1, trials=None, seed: int = 0) -> OptimalityReport:
    """Compare Maj_n with every balanced function (or ``trials`` random ones)."""
    if n % 2 == 0 or n <= 0:
        raise ValidationError(f"n must be odd and positive, got {n}")
    if not 1 <= k <= n:
        raise ValidationError(f"k must lie in 1..{n}, got {k}")
    f = make_method(Majority(), n, dense=True)
    if trials is None and math.comb(1 << n, 1 << (n - 1)) > EXHAUSTIVE_LIMIT:
        trials = 100_000
    return _audit(f, k, trials, seed, f"maj{n}")


def verify_threshold_optimal(n: int, t: int, k: int, trials=None, seed: int = 0, allow_odd_t=False) -> OptimalityReport:
    """Compare Maj_{n,t} with functions of the same balance.

    The optimality claim needs odd n and even t. Odd t is only accepted with
    ``allow_odd_t`` and then the report is informational (``asserted`` False).
    """
    if n % 2 == 0 or n <= 0:
        raise ValidationError(f"n must be odd and positive, got {n}")
    if not 1 <= k <= n:
        raise ValidationError(f"k must lie in 1..{n}, got {k}")
    asserted = t % 2 == 0
    if not asserted and not allow_odd_t:
        raise ValidationError(f"threshold t must be even, got {t}")
    f = make_method(ThresholdMajority(t), n, dense=True)
    if trials is None and math.comb(1 << n, f.count_ones()) > EXHAUSTIVE_LIMIT:
        trials = 10_000
    return _audit(f, k, trials, seed, f"maj{n},t={t}", asserted)
