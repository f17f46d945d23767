"""Pivotal counts, influences and Banzhaf power indices.

``pivotal_count(f, i)`` is the number of settings of the other n-1 voters for
which voter i decides the outcome. The influence of voter i is the
probability that a random full vote configuration is one where flipping
voter i changes the outcome; under the uniform measure that is
``b_i / 2**(n-1)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import mpmath
import numpy as np

from .errors import ConstantFunctionError, TooLargeError, ValidationError
from .hypercube import N_DENSE, UNIFORM, BiasedMeasure, BooleanFunction, coordinate_mask, full_mask, popcounts, unpack
from .methods import Dictator, Majority, ThresholdMajority, VotingMethod, as_evaluable

EXACT_MAJORITY_LIMIT = 64


@dataclass(frozen=True)
class PivotalReport:
    n: int
    b: tuple
    influences: tuple
    banzhaf: tuple
    p: object = Fraction(1, 2)


def _check_voter(f, i):
    if not 1 <= i <= f.n:
        raise ValidationError(f"voter index {i} outside 1..{f.n}")


def _pivot_mask(f: BooleanFunction, i: int) -> int:
    """Packed set of indices with x_i = -1 where flipping x_i changes f."""
    h = 1 << (i - 1)
    low = full_mask(f.n) ^ coordinate_mask(f.n, i - 1)
    return (f.table ^ (f.table >> h)) & low


def _threshold_pivot_range(n, t):
    """Plus-vote counts a among the other n-1 voters that make voter i pivotal."""
    # pivotal iff t - 1 <= s < t + 1 with s = 2a - (n - 1)
    lo = max(0, math.ceil((t - 1 + n - 1) / 2))
    hi = min(n - 1, math.ceil((t + 1 + n - 1) / 2) - 1)
    return range(lo, hi + 1)


def _threshold_of(method):
    spec = method.spec
    if isinstance(spec, Majority):
        return 0
    if isinstance(spec, ThresholdMajority):
        return spec.t
    return None


def pivotal_count(f, i: int, n=None) -> int:
    f = as_evaluable(f, n)
    _check_voter(f, i)
    if isinstance(f, BooleanFunction):
        return _pivot_mask(f, i).bit_count()
    if isinstance(f.spec, Dictator):
        return 1 << (f.n - 1) if f.spec.i == i else 0
    t = _threshold_of(f)
    if t is not None:
        return sum(math.comb(f.n - 1, a) for a in _threshold_pivot_range(f.n, t))
    if f.n <= N_DENSE:
        return pivotal_count(f.table(), i)
    raise TooLargeError(f"cannot enumerate pivotal configurations of {f!r}")


def flip_disagreements(f: BooleanFunction, i: int) -> int:
    """#{x : f(x) != f(x with x_i negated)}, counted over all 2**n points."""
    _check_voter(f, i)
    idx = np.arange(1 << f.n, dtype=np.int64)
    bits = f.bits
    return int(np.count_nonzero(bits != bits[idx ^ (1 << (i - 1))]))


def influence(f, i: int, measure: BiasedMeasure = UNIFORM, n=None):
    """Probability that voter i is pivotal when the others vote from ``measure``."""
    f = as_evaluable(f, n)
    _check_voter(f, i)
    if measure.uniform:
        return Fraction(pivotal_count(f, i), 1 << (f.n - 1))
    p, q = measure.p, 1 - measure.p
    if isinstance(f, VotingMethod):
        if isinstance(f.spec, Dictator):
            return Fraction(int(f.spec.i == i)) if measure.exact else float(f.spec.i == i)
        t = _threshold_of(f)
        if t is None:
            if f.n > N_DENSE:
                raise TooLargeError(f"cannot enumerate pivotal configurations of {f!r}")
            return influence(f.table(), i, measure)
        total = sum(math.comb(f.n - 1, a) * p**a * q ** (f.n - 1 - a) for a in _threshold_pivot_range(f.n, t))
        return Fraction(total) if measure.exact else float(total)
    # per-layer counts of pivotal configurations; bit i is clear so the
    # popcount is the number of +1 votes among the other voters
    pivots = unpack(_pivot_mask(f, i), f.n)
    layers = np.bincount(popcounts(f.n)[pivots], minlength=f.n)
    total = sum(int(layers[a]) * p**a * q ** (f.n - 1 - a) for a in range(f.n))
    return Fraction(total) if measure.exact else float(total)


def banzhaf_indices(f, n=None) -> tuple:
    f = as_evaluable(f, n)
    b = [pivotal_count(f, i) for i in range(1, f.n + 1)]
    return _normalize(b)


def _normalize(b):
    total = sum(b)
    if total == 0:
        raise ConstantFunctionError("no voter is ever pivotal; Banzhaf indices undefined")
    return tuple(Fraction(x, total) for x in b)


def pivotal_report(f, measure: BiasedMeasure = UNIFORM, n=None) -> PivotalReport:
    f = as_evaluable(f, n)
    b = tuple(pivotal_count(f, i) for i in range(1, f.n + 1))
    infl = tuple(influence(f, i, measure) for i in range(1, f.n + 1))
    return PivotalReport(n=f.n, b=b, influences=infl, banzhaf=_normalize(b), p=measure.p)


def majority_influence_exact(n: int):
    """C(n-1, (n-1)/2) / 2**(n-1) for odd n.

    A Fraction for n <= 64; beyond that a float computed from log-gamma at
    40 significant digits.
    """
    if n <= 0 or n % 2 == 0:
        raise ValidationError(f"majority influence needs odd positive n, got {n}")
    m = (n - 1) // 2
    if n <= EXACT_MAJORITY_LIMIT:
        return Fraction(math.comb(n - 1, m), 1 << (n - 1))
    with mpmath.workdps(40):
        log_value = mpmath.loggamma(n) - 2 * mpmath.loggamma(m + 1) - (n - 1) * mpmath.log(2)
        return float(mpmath.exp(log_value))
