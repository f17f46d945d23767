"""Points of {-1,1}^n, bit-packed truth tables, and biased product measures.

Index convention: a vote vector x maps to the integer
``idx(x) = sum_i 2**(i-1) * (1 + x_i) / 2`` so voter 1 is the least
significant bit and a +1 vote sets the bit. A truth table is a Python int
whose bit ``idx(x)`` is 1 exactly when f(x) = +1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from numbers import Rational

import numpy as np

from .errors import TooLargeError, ValidationError

N_DENSE = 24


def check_votes(x, n=None):
    """Return ``x`` as a tuple of ints, validating entries and length."""
    votes = tuple(int(v) for v in x)
    if any(v not in (-1, 1) for v in votes):
        raise ValidationError(f"vote entries must be -1 or +1, got {x!r}")
    if n is not None and len(votes) != n:
        raise ValidationError(f"expected {n} votes, got {len(votes)}")
    if not votes:
        raise ValidationError("vote vector must be nonempty")
    return votes


def index_of(x) -> int:
    idx = 0
    for i, v in enumerate(check_votes(x)):
        if v == 1:
            idx |= 1 << i
    return idx


def vector_of(idx: int, n: int) -> tuple:
    if not 0 <= idx < (1 << n):
        raise ValidationError(f"index {idx} out of range for n={n}")
    return tuple(1 if (idx >> i) & 1 else -1 for i in range(n))


def decode_points(start: int, stop: int, n: int) -> np.ndarray:
    """Vote vectors for indices ``start..stop-1`` as an int8 (rows, n) array."""
    idx = np.arange(start, stop, dtype=np.int64)
    bits = (idx[:, None] >> np.arange(n, dtype=np.int64)) & 1
    return (2 * bits - 1).astype(np.int8)


def check_dense(n: int, cap: int = N_DENSE) -> None:
    if n <= 0:
        raise ValidationError(f"n must be positive, got {n}")
    if n > cap:
        raise TooLargeError(f"n={n} exceeds the dense-table cap of {cap}")


@lru_cache(maxsize=None)
def popcounts(n: int) -> np.ndarray:
    """Hamming weight of every index in [0, 2**n). Read-only, cached."""
    pc = np.bitwise_count(np.arange(1 << n, dtype=np.uint32)).astype(np.int64)
    pc.setflags(write=False)
    return pc


@lru_cache(maxsize=None)
def coordinate_mask(n: int, i: int) -> int:
    """Packed mask of indices whose bit ``i`` (0-based) is set."""
    half = 1 << i
    period = half << 1
    block = ((1 << half) - 1) << half
    rep = ((1 << (1 << n)) - 1) // ((1 << period) - 1)
    return block * rep


def full_mask(n: int) -> int:
    return (1 << (1 << n)) - 1


def unpack(table: int, n: int) -> np.ndarray:
    size = 1 << n
    nbytes = max(1, size // 8)
    raw = np.frombuffer(table.to_bytes(nbytes, "little"), dtype=np.uint8)
    return np.unpackbits(raw, bitorder="little")[:size].astype(bool)


def pack(bits) -> int:
    bits = np.asarray(bits, dtype=bool)
    return int.from_bytes(np.packbits(bits, bitorder="little").tobytes(), "little")


@dataclass(frozen=True)
class BiasedMeasure:
    """Independent votes, each +1 with probability ``p``.

    ``p`` may be a Fraction (exact arithmetic downstream) or a float. A
    float equal to 1/2 is promoted to the exact value.
    """

    p: object = Fraction(1, 2)

    def __post_init__(self):
        p = self.p
        if isinstance(p, str):
            p = Fraction(p)
        if isinstance(p, Rational):
            p = Fraction(p)
        elif float(p) == 0.5:
            p = Fraction(1, 2)
        else:
            p = float(p)
        if not 0 < p < 1:
            raise ValidationError(f"p must lie strictly between 0 and 1, got {self.p}")
        object.__setattr__(self, "p", p)

    @property
    def exact(self) -> bool:
        return isinstance(self.p, Fraction)

    @property
    def uniform(self) -> bool:
        return self.p == Fraction(1, 2)

    def layer_weights(self, n: int) -> list:
        """Probability of one particular point with k plus-votes, k = 0..n."""
        p, q = self.p, 1 - self.p
        return [p**k * q ** (n - k) for k in range(n + 1)]

    def point_weights(self, n: int) -> np.ndarray:
        """Probability of every point of the cube, indexed by idx(x)."""
        layer = self.layer_weights(n)
        if self.exact:
            arr = np.empty(len(layer), dtype=object)
            arr[:] = layer
        else:
            arr = np.asarray(layer, dtype=float)
        return arr[popcounts(n)]


UNIFORM = BiasedMeasure()


def _ones_by_layer(bits: np.ndarray, n: int) -> np.ndarray:
    return np.bincount(popcounts(n)[bits], minlength=n + 1)


class BooleanFunction:
    """A voting method f: {-1,1}^n -> {-1,1} stored as a packed truth table.

    ``table`` is a nonnegative int below 2**(2**n). ``name`` and ``spec`` are
    optional metadata and do not take part in equality.
    """

    __slots__ = ("n", "table", "name", "spec", "_bits")

    def __init__(self, n: int, table: int, name=None, spec=None):
        check_dense(n)
        if table < 0 or table >> (1 << n):
            raise ValidationError(f"table does not fit in 2**{n} bits")
        self.n = n
        self.table = table
        self.name = name
        self.spec = spec
        self._bits = None

    @classmethod
    def from_bits(cls, bits, name=None, spec=None):
        bits = np.asarray(bits, dtype=bool)
        n = int(bits.size).bit_length() - 1
        if bits.ndim != 1 or bits.size != 1 << n:
            raise ValidationError(f"truth table length {bits.size} is not a power of two")
        if n == 0:
            raise ValidationError("need at least one voter")
        return cls(n, pack(bits), name=name, spec=spec)

    @classmethod
    def from_values(cls, values, name=None, spec=None):
        """Build from a +/-1 array indexed by idx(x)."""
        values = np.asarray(values)
        if not np.isin(values, (-1, 1)).all():
            raise ValidationError("function values must be -1 or +1")
        return cls.from_bits(values > 0, name=name, spec=spec)

    @classmethod
    def from_callable(cls, func, n, name=None):
        bits = [func(vector_of(i, n)) == 1 for i in range(1 << n)]
        return cls.from_bits(bits, name=name)

    @classmethod
    def constant(cls, n, value=1):
        return cls(n, full_mask(n) if value == 1 else 0, name=f"const{value:+d}")

    @classmethod
    def random(cls, n, rng, ones=None):
        """Uniform random function, or uniform among those with ``ones`` +1 entries."""
        size = 1 << n
        if ones is None:
            bits = rng.integers(0, 2, size=size).astype(bool)
        else:
            bits = np.zeros(size, dtype=bool)
            bits[rng.choice(size, size=ones, replace=False)] = True
        return cls.from_bits(bits)

    @property
    def bits(self) -> np.ndarray:
        if self._bits is None:
            b = unpack(self.table, self.n)
            b.setflags(write=False)
            self._bits = b
        return self._bits

    def values(self) -> np.ndarray:
        return np.where(self.bits, 1, -1).astype(np.int8)

    def count_ones(self) -> int:
        return self.table.bit_count()

    def __call__(self, x) -> int:
        return 1 if (self.table >> index_of(check_votes(x, self.n))) & 1 else -1

    def evaluate_batch(self, X) -> np.ndarray:
        X = np.asarray(X)
        if X.ndim != 2 or X.shape[1] != self.n:
            raise ValidationError(f"expected a (rows, {self.n}) array")
        idx = ((X > 0).astype(np.int64) << np.arange(self.n, dtype=np.int64)).sum(axis=1)
        return np.where(self.bits[idx], 1, -1).astype(np.int8)

    def negate(self) -> "BooleanFunction":
        return BooleanFunction(self.n, full_mask(self.n) ^ self.table)

    def expectation(self, measure: BiasedMeasure = UNIFORM):
        """E f(X) under the product measure; a Fraction when p is rational."""
        n = self.n
        if measure.uniform:
            return Fraction(2 * self.count_ones() - (1 << n), 1 << n)
        ones = _ones_by_layer(self.bits, n)
        weights = measure.layer_weights(n)
        total = sum((2 * int(ones[k]) - math.comb(n, k)) * weights[k] for k in range(n + 1))
        return Fraction(total) if measure.exact else float(total)

    def __eq__(self, other):
        if not isinstance(other, BooleanFunction):
            return NotImplemented
        return self.n == other.n and self.table == other.table

    def __hash__(self):
        return hash((self.n, self.table))

    def __repr__(self):
        label = f" {self.name}" if self.name else ""
        return f"<BooleanFunction{label} n={self.n} ones={self.count_ones()}>"
