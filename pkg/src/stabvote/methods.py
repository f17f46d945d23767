"""Named voting methods on {-1,1}^n and structure-aware evaluation.

A ``MethodSpec`` describes a method without fixing the electorate size (or
fixes it, for the UN Security Council and two-tier rules). ``make_method``
binds a spec to ``n`` and returns either a dense ``BooleanFunction`` or a
lazy ``VotingMethod`` that evaluates points on demand.

sign(0) is +1 everywhere. Methods whose sign argument can vanish emit a
``TieWarning`` on construction and carry ``ties_reachable = True``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Union

import numpy as np
from scipy import stats

from .errors import TieWarning, TooLargeError, ValidationError
from .hypercube import (
    N_DENSE,
    UNIFORM,
    BiasedMeasure,
    BooleanFunction,
    check_dense,
    check_votes,
    decode_points,
    pack,
)

_CHUNK_ROWS = 1 << 16


@dataclass(frozen=True)
class Dictator:
    i: int
    kind = "dictator"


@dataclass(frozen=True)
class Majority:
    kind = "majority"


@dataclass(frozen=True)
class ThresholdMajority:
    """sign(x_1 + ... + x_n - t)."""

    t: float
    kind = "threshold_majority"


@dataclass(frozen=True)
class WeightedMajority:
    weights: tuple
    t: float = 0
    kind = "weighted_majority"

    def __post_init__(self):
        object.__setattr__(self, "weights", tuple(self.weights))


@dataclass(frozen=True)
class TwoTier:
    """Outer method applied to the outcomes of per-state inner methods.

    ``states`` lists 1-based voter indices for each state and must partition
    {1..n}. ``inner`` is one spec shared by every state or a tuple with one
    spec per state.
    """

    states: tuple
    inner: object = field(default_factory=Majority)
    outer: object = field(default_factory=Majority)
    kind = "two_tier"

    def __post_init__(self):
        object.__setattr__(self, "states", tuple(tuple(s) for s in self.states))
        if isinstance(self.inner, (list, tuple)):
            object.__setattr__(self, "inner", tuple(self.inner))

    @classmethod
    def equal_states(cls, m, size, inner=None, outer=None):
        states = [tuple(range(s * size + 1, (s + 1) * size + 1)) for s in range(m)]
        return cls(states, inner or Majority(), outer or Majority())

    @classmethod
    def from_sizes(cls, sizes, weights=None):
        states, start = [], 1
        for size in sizes:
            states.append(tuple(range(start, start + size)))
            start += size
        outer = Majority() if weights is None else WeightedMajority(tuple(weights), 0)
        return cls(states, Majority(), outer)

    def inner_for(self, s):
        return self.inner[s] if isinstance(self.inner, tuple) else self.inner


@dataclass(frozen=True)
class UNCouncil:
    """UN Security Council: 5 permanent members (voters 1-5) with veto."""

    era: str = "post1965"
    kind = "un_council"

    RULES = {"pre1965": (6, 2), "post1965": (10, 4)}

    def __post_init__(self):
        if self.era not in self.RULES:
            raise ValidationError(f"unknown UN council era {self.era!r}")

    @property
    def nonpermanent(self):
        return self.RULES[self.era][0]

    @property
    def quota(self):
        return self.RULES[self.era][1]


MethodSpec = Union[Dictator, Majority, ThresholdMajority, WeightedMajority, TwoTier, UNCouncil]
SPEC_TYPES = (Dictator, Majority, ThresholdMajority, WeightedMajority, TwoTier, UNCouncil)


def fixed_n(spec):
    """Electorate size implied by the spec itself, or None."""
    if isinstance(spec, UNCouncil):
        return 5 + spec.nonpermanent
    if isinstance(spec, TwoTier):
        return sum(len(s) for s in spec.states)
    return None


def _sign(value) -> int:
    return 1 if value >= 0 else -1


def _as_exact(values):
    """Ints when every value is integral, else floats."""
    if all(float(v).is_integer() for v in values):
        return [int(v) for v in values], True
    return [float(v) for v in values], False


class VotingMethod:
    """A MethodSpec bound to an electorate size; evaluates without a table."""

    def __init__(self, spec, n=None):
        if not isinstance(spec, SPEC_TYPES):
            raise ValidationError(f"not a method spec: {spec!r}")
        implied = fixed_n(spec)
        if n is None:
            n = implied
        if n is None:
            raise ValidationError(f"{type(spec).__name__} needs an explicit n")
        n = int(n)
        if n <= 0:
            raise ValidationError(f"n must be positive, got {n}")
        if implied is not None and implied != n:
            raise ValidationError(f"{type(spec).__name__} fixes n={implied}, got n={n}")
        self.spec = spec
        self.n = n
        self._setup()
        self.ties_reachable = self._ties_reachable()
        if self.ties_reachable:
            warnings.warn(f"{self!r}: sign(0) is reachable and resolves to +1", TieWarning, stacklevel=2)

    def _setup(self):
        spec, n = self.spec, self.n
        if isinstance(spec, Dictator):
            if not 1 <= spec.i <= n:
                raise ValidationError(f"dictator index {spec.i} outside 1..{n}")
        elif isinstance(spec, ThresholdMajority):
            (self._t,), self._integral = _as_exact([spec.t])
        elif isinstance(spec, WeightedMajority):
            if len(spec.weights) != n:
                raise ValidationError(f"{len(spec.weights)} weights for n={n}")
            vals, self._integral = _as_exact(list(spec.weights) + [spec.t])
            self._w, self._t = vals[:-1], vals[-1]
        elif isinstance(spec, TwoTier):
            flat = sorted(v for s in spec.states for v in s)
            if flat != list(range(1, n + 1)):
                raise ValidationError("two-tier states must partition voters 1..n")
            if any(not s for s in spec.states):
                raise ValidationError("two-tier states must be nonempty")
            if isinstance(spec.inner, tuple) and len(spec.inner) != len(spec.states):
                raise ValidationError("need one inner spec per state")
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", TieWarning)
                self._inner = [VotingMethod(spec.inner_for(s), len(st)) for s, st in enumerate(spec.states)]
                self._outer = VotingMethod(spec.outer, len(spec.states))
            self._cols = [np.asarray(st, dtype=np.int64) - 1 for st in spec.states]

    def _ties_reachable(self):
        spec, n = self.spec, self.n
        if isinstance(spec, (Dictator, UNCouncil)):
            return False
        if isinstance(spec, Majority):
            return n % 2 == 0
        if isinstance(spec, ThresholdMajority):
            return self._integral and abs(self._t) <= n and (n - self._t) % 2 == 0
        if isinstance(spec, WeightedMajority):
            if self._integral:
                sums = {0}
                for w in self._w:
                    sums = {s + w for s in sums} | {s - w for s in sums}
                return self._t in sums
            if n <= 16:
                scores = decode_points(0, 1 << n, n).astype(float) @ np.asarray(self._w)
                return bool(np.any(scores == self._t))
            return None
        if isinstance(spec, TwoTier):
            flags = [m.ties_reachable for m in self._inner] + [self._outer.ties_reachable]
            if any(flags):
                return True
            return None if None in flags else False
        return None

    def __call__(self, x) -> int:
        x = check_votes(x, self.n)
        spec = self.spec
        if isinstance(spec, Dictator):
            return x[spec.i - 1]
        if isinstance(spec, Majority):
            return _sign(sum(x))
        if isinstance(spec, ThresholdMajority):
            return _sign(sum(x) - self._t)
        if isinstance(spec, WeightedMajority):
            return _sign(sum(w * v for w, v in zip(self._w, x)) - self._t)
        if isinstance(spec, TwoTier):
            outcomes = [m(tuple(x[v - 1] for v in st)) for m, st in zip(self._inner, spec.states)]
            return self._outer(outcomes)
        if isinstance(spec, UNCouncil):
            permanent_ok = all(v == 1 for v in x[:5])
            return 1 if permanent_ok and sum(v == 1 for v in x[5:]) >= spec.quota else -1
        raise AssertionError(spec)

    def evaluate_batch(self, X) -> np.ndarray:
        """Evaluate every row of a (rows, n) array of +/-1 votes."""
        X = np.asarray(X)
        if X.ndim != 2 or X.shape[1] != self.n:
            raise ValidationError(f"expected a (rows, {self.n}) array, got shape {X.shape}")
        spec = self.spec
        if isinstance(spec, Dictator):
            return X[:, spec.i - 1].astype(np.int8)
        if isinstance(spec, Majority):
            score = X.sum(axis=1, dtype=np.int64)
        elif isinstance(spec, ThresholdMajority):
            score = X.sum(axis=1, dtype=np.int64) - self._t
        elif isinstance(spec, WeightedMajority):
            dtype = np.int64 if self._integral else float
            score = X.astype(dtype) @ np.asarray(self._w, dtype=dtype) - self._t
        elif isinstance(spec, TwoTier):
            inner = np.column_stack([m.evaluate_batch(X[:, c]) for m, c in zip(self._inner, self._cols)])
            return self._outer.evaluate_batch(inner)
        elif isinstance(spec, UNCouncil):
            ok = (X[:, :5] == 1).all(axis=1) & ((X[:, 5:] == 1).sum(axis=1) >= spec.quota)
            return np.where(ok, 1, -1).astype(np.int8)
        return np.where(score >= 0, 1, -1).astype(np.int8)

    def table(self) -> BooleanFunction:
        """Materialize the dense truth table (n <= N_DENSE)."""
        check_dense(self.n)
        size = 1 << self.n
        bits = np.empty(size, dtype=bool)
        for start in range(0, size, _CHUNK_ROWS):
            stop = min(size, start + _CHUNK_ROWS)
            bits[start:stop] = self.evaluate_batch(decode_points(start, stop, self.n)) > 0
        return BooleanFunction(self.n, pack(bits), name=describe(self.spec), spec=self.spec)

    def expectation(self, measure: BiasedMeasure = UNIFORM):
        spec, n = self.spec, self.n
        if isinstance(spec, Dictator):
            return 2 * measure.p - 1
        if isinstance(spec, (Majority, ThresholdMajority)):
            t = 0 if isinstance(spec, Majority) else self._t
            return threshold_expectation(n, t, measure)
        if n <= N_DENSE:
            return self.table().expectation(measure)
        raise TooLargeError(f"no closed-form expectation for {describe(spec)} at n={n}")

    def __repr__(self):
        return f"<VotingMethod {describe(self.spec)} n={self.n}>"


def threshold_expectation(n: int, t, measure: BiasedMeasure = UNIFORM):
    """E Maj_{n,t}(X) = 2 P(X_1+...+X_n >= t) - 1 under the p-biased measure."""
    # sum = 2a - n where a is the number of +1 votes
    a_min = max(0, math.ceil((n + t) / 2))
    if a_min > n:
        return Fraction(-1) if measure.exact else -1.0
    if measure.uniform:
        tail = sum(math.comb(n, a) for a in range(a_min, n + 1))
        return Fraction(2 * tail - (1 << n), 1 << n)
    if measure.exact:
        p, q = measure.p, 1 - measure.p
        tail = sum(math.comb(n, a) * p**a * q ** (n - a) for a in range(a_min, n + 1))
        return 2 * tail - 1
    return 2 * float(stats.binom.sf(a_min - 1, n, measure.p)) - 1


def make_method(spec, n=None, dense=None):
    """Bind ``spec`` to ``n`` voters.

    Returns a ``BooleanFunction`` when ``dense`` is true, or when ``dense`` is
    None and n <= N_DENSE; otherwise a lazy ``VotingMethod``.
    """
    method = VotingMethod(spec, n)
    if dense is None:
        dense = method.n <= N_DENSE
    if dense:
        return method.table()
    return method


def as_evaluable(f, n=None):
    """Accept a BooleanFunction, VotingMethod, or MethodSpec (+ n)."""
    if isinstance(f, (BooleanFunction, VotingMethod)):
        return f
    return VotingMethod(f, n)


def as_table(f, n=None) -> BooleanFunction:
    f = as_evaluable(f, n)
    return f if isinstance(f, BooleanFunction) else f.table()


def evaluate(f, x) -> int:
    """f(x) for a table, lazy method, or bare spec (n taken from len(x))."""
    x = check_votes(x)
    if isinstance(f, SPEC_TYPES):
        f = VotingMethod(f, len(x))
    if len(x) != f.n:
        raise ValidationError(f"vote vector has length {len(x)}, method expects {f.n}")
    return f(x)


def expectation(f, measure: BiasedMeasure = UNIFORM, n=None):
    return as_evaluable(f, n).expectation(measure)


def same_balance(f, g) -> bool:
    """True iff f and g have the same number of +1 outcomes."""
    f, g = as_table(f), as_table(g)
    if f.n != g.n:
        raise ValidationError(f"dimension mismatch: {f.n} vs {g.n}")
    return f.count_ones() == g.count_ones()


def describe(spec) -> str:
    if isinstance(spec, Dictator):
        return f"dict:{spec.i}"
    if isinstance(spec, Majority):
        return "maj"
    if isinstance(spec, ThresholdMajority):
        return f"tmaj:{spec.t:g}"
    if isinstance(spec, WeightedMajority):
        return "wmaj:" + ",".join(f"{w:g}" for w in spec.weights) + f";{spec.t:g}"
    if isinstance(spec, TwoTier):
        return "two-tier:" + ",".join(str(len(s)) for s in spec.states)
    if isinstance(spec, UNCouncil):
        return f"un-{spec.era}"
    return repr(spec)
