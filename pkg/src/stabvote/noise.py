"""Noise stability under independent random vote corruption.

Corruption model: each corrupted vote keeps the original with probability
rho and is otherwise redrawn from the voter measure (uniform at p = 1/2,
p-biased otherwise, so the corrupted votes have the same law as the
originals). Noise stability is S_rho(f) = E f(X) f(Y).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational

import numpy as np

from .errors import ValidationError
from .hypercube import UNIFORM, BiasedMeasure, check_dense, check_votes, popcounts
from .methods import Majority, ThresholdMajority, TwoTier, VotingMethod, as_evaluable, as_table, threshold_expectation
from .rng import block_rng, run_blocks

RATIONAL_LIMIT = 12
_MC_CELLS = 1 << 22


def _as_rho(rho):
    if isinstance(rho, str):
        rho = Fraction(rho)
    rho = Fraction(rho) if isinstance(rho, Rational) else float(rho)
    if not 0 <= rho <= 1:
        raise ValidationError(f"rho must lie in [0, 1], got {rho}")
    return rho


@dataclass(frozen=True)
class CorruptionModel:
    rho: object
    measure: BiasedMeasure = UNIFORM

    def __post_init__(self):
        object.__setattr__(self, "rho", _as_rho(self.rho))

    @property
    def exact(self) -> bool:
        return isinstance(self.rho, Fraction) and self.measure.exact

    @property
    def flip_probability(self):
        """P(Y_i != X_i) at p = 1/2, i.e. epsilon with rho = 1 - 2 epsilon."""
        return (1 - self.rho) / 2

    @classmethod
    def from_epsilon(cls, eps, measure=UNIFORM):
        return cls(1 - 2 * eps, measure)


@dataclass(frozen=True)
class StabilityEstimate:
    value: object
    stderr: float = 0.0
    samples: int = 0
    seed: object = None
    exact: bool = True

    def __post_init__(self):
        if self.exact and self.stderr != 0:
            raise ValidationError("an exact estimate has zero standard error")
        if abs(self.value) > 1:
            raise ValidationError(f"stability {self.value} outside [-1, 1]")


def sample_corrupted(x, model: CorruptionModel, rng) -> tuple:
    """One corrupted copy of ``x``. ``rng`` is a Generator or an int seed."""
    x = check_votes(x)
    if not isinstance(rng, np.random.Generator):
        rng = block_rng(rng, 0)
    return tuple(int(v) for v in corrupt_batch(np.asarray([x], dtype=np.int8), model, rng)[0])


def corrupt_batch(X, model: CorruptionModel, rng) -> np.ndarray:
    X = np.asarray(X, dtype=np.int8)
    keep = rng.random(X.shape) < float(model.rho)
    fresh = np.where(rng.random(X.shape) < float(model.measure.p), 1, -1).astype(np.int8)
    return np.where(keep, X, fresh)


def _scalar_array(values, rational):
    if rational:
        out = np.empty(len(values), dtype=object)
        out[:] = [Fraction(int(v)) for v in values]
        return out
    return np.asarray(values, dtype=float)


def _use_rational(n, model, rational):
    if rational is None:
        return model.exact and n <= RATIONAL_LIMIT
    return rational


def apply_noise(values, n: int, model: CorruptionModel):
    """E[g(Y) | X = x] for every x, given g as an array indexed by idx.

    One averaging pass per coordinate, O(n 2^n) total.
    """
    g = values.copy()
    rho, p = model.rho, model.measure.p
    if g.dtype != object:
        rho, p = float(rho), float(p)
    q = 1 - p
    for i in range(n):
        view = g.reshape(-1, 2, 1 << i)
        avg = p * view[:, 1, :] + q * view[:, 0, :]
        view *= rho
        view += (1 - rho) * avg[:, None, :]
    return g


def noise_operator(f, model: CorruptionModel, rational=None) -> np.ndarray:
    f = as_table(f)
    check_dense(f.n)
    rational = _use_rational(f.n, model, rational)
    return apply_noise(_scalar_array(f.values(), rational), f.n, model)


def stability_exact(f, model: CorruptionModel, rational=None) -> StabilityEstimate:
    """S_rho(f) from the noise operator. Fractions when ``rational``."""
    f = as_table(f)
    rational = _use_rational(f.n, model, rational)
    g = noise_operator(f, model, rational)
    fv = _scalar_array(f.values(), rational)
    weights = model.measure.point_weights(f.n)
    if not rational:
        weights = weights.astype(float)
        value = float(np.dot(fv * g, weights))
    else:
        value = sum(fv * g * weights)
    return StabilityEstimate(value=value, exact=True)


def fourier_coefficients(f) -> np.ndarray:
    """Coefficients of f in the parity basis, indexed by subset mask (p = 1/2)."""
    f = as_table(f)
    a = f.values().astype(float)
    n = f.n
    for i in range(n):
        view = a.reshape(-1, 2, 1 << i)
        lo, hi = view[:, 0, :].copy(), view[:, 1, :].copy()
        view[:, 0, :] = lo + hi
        view[:, 1, :] = hi - lo
    return a / (1 << n)


def stability_fourier(f, rho) -> float:
    """sum_S rho^|S| c(S)^2, valid for the uniform measure only."""
    f = as_table(f)
    c = fourier_coefficients(f)
    rho = float(_as_rho(rho))
    return float(np.dot(rho ** popcounts(f.n), c * c))


def _mc_summary(results, samples, seed):
    total = sum(r for r in results)
    mean = total / samples
    if samples > 1:
        var = max(0.0, (1.0 - mean * mean) * samples / (samples - 1))
    else:
        var = 0.0
    return StabilityEstimate(value=mean, stderr=math.sqrt(var / samples), samples=samples, seed=seed, exact=False)


def _threshold_worker(n, t, model):
    p, rho = float(model.measure.p), float(model.rho)
    down, up = (1 - rho) * (1 - p), (1 - rho) * p

    def work(rng, size):
        a = rng.binomial(n, p, size=size)
        a_y = a - rng.binomial(a, down) + rng.binomial(n - a, up)
        fx = np.where(2 * a - n >= t, 1, -1)
        fy = np.where(2 * a_y - n >= t, 1, -1)
        return int(np.dot(fx, fy))

    return work


def _two_tier_worker(method: VotingMethod, model):
    p, rho = float(model.measure.p), float(model.rho)
    down, up = (1 - rho) * (1 - p), (1 - rho) * p
    sizes = np.array([len(s) for s in method.spec.states], dtype=np.int64)
    thresholds = np.array([_threshold(m) for m in method._inner], dtype=float)
    outer = method._outer

    def work(rng, size):
        a = rng.binomial(sizes, p, size=(size, len(sizes)))
        a_y = a - rng.binomial(a, down) + rng.binomial(sizes - a, up)
        sx = np.where(2 * a - sizes >= thresholds, 1, -1).astype(np.int8)
        sy = np.where(2 * a_y - sizes >= thresholds, 1, -1).astype(np.int8)
        return int(np.dot(outer.evaluate_batch(sx).astype(np.int64), outer.evaluate_batch(sy)))

    return work


def _threshold(method):
    if isinstance(method.spec, Majority):
        return 0
    if isinstance(method.spec, ThresholdMajority):
        return method._t
    return None


def _generic_worker(f, model):
    rows = max(1, _MC_CELLS // f.n)
    p = float(model.measure.p)

    def work(rng, size):
        total = 0
        for start in range(0, size, rows):
            m = min(rows, size - start)
            X = np.where(rng.random((m, f.n)) < p, 1, -1).astype(np.int8)
            Y = corrupt_batch(X, model, rng)
            total += int(np.dot(f.evaluate_batch(X).astype(np.int64), f.evaluate_batch(Y)))
        return total

    return work


def mc_worker(f, model):
    """Pick the sampler for ``f``.

    Threshold majorities and two-tier methods with threshold-majority states
    depend on each state only through its vote count, so the sampler draws
    the counts (binomial) instead of every vote; the joint law is identical.
    """
    if isinstance(f, VotingMethod):
        t = _threshold(f)
        if t is not None:
            return _threshold_worker(f.n, t, model)
        if isinstance(f.spec, TwoTier) and all(_threshold(m) is not None for m in f._inner):
            return _two_tier_worker(f, model)
    return _generic_worker(f, model)


def stability_mc(f, model: CorruptionModel, samples: int, seed: int = 0, threads=None, n=None) -> StabilityEstimate:
    """Monte Carlo S_rho(f): mean of f(X) f(Y) over ``samples`` pairs."""
    samples = int(samples)
    if samples < 1:
        raise ValidationError("samples must be at least 1")
    f = as_evaluable(f, n)
    if model.rho == 1:
        return StabilityEstimate(value=1.0, stderr=0.0, samples=samples, seed=seed, exact=False)
    results = run_blocks(mc_worker(f, model), samples, seed, threads)
    return _mc_summary(results, samples, seed)


def outcome_change_prob(s):
    """Probability the winner changes given stability s, i.e. (1 - s) / 2."""
    if isinstance(s, StabilityEstimate):
        s = s.value
    if abs(s) > 1:
        raise ValidationError(f"stability {s} outside [-1, 1]")
    return (1 - s) / 2


def majority_limit_stability(rho) -> float:
    """lim_n S_rho(Maj_n) = (2 / pi) arcsin(rho)."""
    rho = _as_rho(rho)
    return 2 / math.pi * math.asin(float(rho))


@dataclass(frozen=True)
class ThresholdMatch:
    """Best threshold ``t``; every t in (lo, hi] gives the same expectation."""

    t: float
    lo: float
    hi: float
    expectation: object
    gap: object


def find_matching_threshold(n: int, mu, measure: BiasedMeasure = UNIFORM) -> ThresholdMatch:
    """Threshold t minimizing |E Maj_{n,t}(X) - mu|.

    E Maj_{n,t} only changes when t crosses an achievable vote sum, so the
    candidates are the n + 2 intervals between consecutive sums. The
    returned t is the interval midpoint (n + 1 beyond the extreme sums);
    ties go to the smaller |t|.
    """
    if n <= 0:
        raise ValidationError(f"n must be positive, got {n}")
    if isinstance(mu, float):
        mu = Fraction(mu)
    if not -1 <= mu <= 1:
        raise ValidationError(f"mu must lie in [-1, 1], got {mu}")
    sums = list(range(-n, n + 1, 2))
    candidates = [(-math.inf, -n, -n - 1)]
    candidates += [(lo, hi, (lo + hi) / 2) for lo, hi in zip(sums, sums[1:])]
    candidates.append((n, math.inf, n + 1))
    best = None
    for lo, hi, t in candidates:
        e = threshold_expectation(n, hi if hi != math.inf else n + 1, measure)
        gap = abs(e - mu)
        key = (gap, abs(t), t)
        if best is None or key < best[0]:
            best = (key, ThresholdMatch(t=t, lo=lo, hi=hi, expectation=e, gap=gap))
    return best[1]


def asymptotic_small_eps(method: str, eps, m: int = 51) -> float:
    """First-order small-corruption stability for majority or equal two-tier.

    ``method`` is "majority" (1 - (4/pi) sqrt(eps)) or "two_tier"
    (1 - 2 (2/pi)^{3/2} sqrt(m) sqrt(eps)).
    """
    if not 0 < eps < 0.5:
        raise ValidationError(f"epsilon must lie in (0, 1/2), got {eps}")
    if method == "majority":
        return 1 - 4 / math.pi * math.sqrt(eps)
    if method == "two_tier":
        if m < 1:
            raise ValidationError(f"need at least one state, got m={m}")
        return 1 - 2 * (2 / math.pi) ** 1.5 * math.sqrt(m) * math.sqrt(eps)
    raise ValidationError(f"unknown method {method!r}")


def asymptotic_change_ratio(m: int) -> float:
    """Ratio of small-eps outcome-change probabilities, two-tier over majority."""
    if m < 1:
        raise ValidationError(f"need at least one state, got m={m}")
    return 2 * (2 / math.pi) ** 1.5 * math.sqrt(m) / (4 / math.pi)
