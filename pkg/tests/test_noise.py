import math
import warnings
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import stability_matrix, stability_pairs
from stabvote import (
    BiasedMeasure,
    BooleanFunction,
    CorruptionModel,
    Dictator,
    Majority,
    StabilityEstimate,
    ThresholdMajority,
    TieWarning,
    TwoTier,
    UNCouncil,
    ValidationError,
    WeightedMajority,
    asymptotic_small_eps,
    find_matching_threshold,
    majority_limit_stability,
    make_method,
    noise_operator,
    outcome_change_prob,
    sample_corrupted,
    stability_exact,
    stability_mc,
)
from stabvote.noise import asymptotic_change_ratio, corrupt_batch, stability_fourier
from stabvote.power import influence
from stabvote.rng import block_rng

RHOS = [0, 0.25, 0.5, 0.75, 1]


def quiet(spec, n, dense=None):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", TieWarning)
        return make_method(spec, n, dense)


STRUCTURED = [
    (Dictator(1), 4),
    (Majority(), 3),
    (Majority(), 6),
    (Majority(), 7),
    (ThresholdMajority(2), 5),
    (ThresholdMajority(-1), 8),
    (WeightedMajority((3, 2, 1, 1, 1)), 5),
    (TwoTier.equal_states(2, 3), 6),
    (TwoTier.from_sizes([3, 3, 1], [1, 1, 2]), 7),
]


def test_maj3_pair_enumeration():
    f = make_method(Majority(), 3)
    for rho in (Fraction(0), Fraction(1, 4), Fraction(1, 2), Fraction(3, 4), Fraction(1)):
        want = stability_pairs(f, 3, rho)
        got = stability_exact(f, CorruptionModel(rho)).value
        assert got == want == (3 * rho + rho**3) / 4


@pytest.mark.parametrize("spec,n", STRUCTURED)
def test_structured_against_pair_oracle(spec, n):
    f = quiet(spec, n)
    for rho in RHOS:
        want = stability_matrix(f.values(), rho)
        assert float(stability_exact(f, CorruptionModel(rho), rational=False).value) == pytest.approx(want, abs=1e-12)
        assert stability_fourier(f, rho) == pytest.approx(want, abs=1e-12)


def test_pair_oracles_agree():
    # the loop oracle and the kernel-matrix oracle, on a small odd case
    f = make_method(WeightedMajority((2, 1, 1)), 3)
    for rho in (0.3, 0.9):
        assert stability_pairs(f, 3, rho) == pytest.approx(stability_matrix(f.values(), rho), abs=1e-14)
    assert stability_pairs(f, 3, 0.3, p=0.7) == pytest.approx(stability_matrix(f.values(), 0.3, p=0.7), abs=1e-14)


@pytest.mark.parametrize("seed", range(50))
def test_random_against_pair_oracle(seed):
    rng = np.random.default_rng(seed)
    n = 1 + seed % 8
    f = BooleanFunction.random(n, rng)
    for rho in RHOS:
        want = stability_matrix(f.values(), rho)
        assert float(stability_exact(f, CorruptionModel(rho), rational=False).value) == pytest.approx(want, abs=1e-12)
        assert float(stability_exact(f, CorruptionModel(Fraction(rho))).value) == pytest.approx(want, abs=1e-12)


@pytest.mark.parametrize("p", [Fraction(1, 3), 0.8])
def test_biased_against_pair_oracle(p):
    f = make_method(Majority(), 5)
    for rho in RHOS:
        model = CorruptionModel(rho, BiasedMeasure(p))
        assert float(stability_exact(f, model).value) == pytest.approx(stability_matrix(f.values(), rho, float(p)), abs=1e-12)
    exact = stability_exact(f, CorruptionModel(Fraction(1, 2), BiasedMeasure(Fraction(1, 3)))).value
    assert exact == stability_pairs(f, 5, Fraction(1, 2), Fraction(1, 3))


@pytest.mark.parametrize("n", [1, 4, 9])
def test_dictator_is_rho(n):
    f = make_method(Dictator(1), n)
    for rho in (Fraction(0), Fraction(1, 3), Fraction(5, 7), Fraction(1)):
        assert stability_exact(f, CorruptionModel(rho)).value == rho


def test_noise_operator_endpoints():
    f = make_method(ThresholdMajority(1), 6)
    assert list(noise_operator(f, CorruptionModel(1))) == list(f.values())
    g0 = noise_operator(f, CorruptionModel(0))
    assert all(v == f.expectation() for v in g0)


def test_endpoints_random(rng):
    for n in range(1, 13):
        f = BooleanFunction.random(n, rng)
        assert stability_exact(f, CorruptionModel(1), rational=False).value == pytest.approx(1, abs=1e-12)
        assert stability_exact(f, CorruptionModel(0), rational=False).value == pytest.approx(float(f.expectation()) ** 2, abs=1e-12)
    for n in (3, 8, 11):
        f = BooleanFunction.random(n, rng)
        assert stability_exact(f, CorruptionModel(Fraction(1))).value == 1
        assert stability_exact(f, CorruptionModel(Fraction(0))).value == f.expectation() ** 2


def test_balanced_rho_zero():
    for spec, n in [(Majority(), 7), (TwoTier.equal_states(3, 3), 9), (UNCouncil("pre1965"), 11)]:
        f = make_method(spec, n)
        assert stability_exact(f, CorruptionModel(Fraction(0))).value == f.expectation() ** 2


GRID = np.linspace(0, 1, 101)


def _monotone(f):
    vals = [float(stability_exact(f, CorruptionModel(r), rational=False).value) for r in GRID]
    return all(b >= a - 1e-12 for a, b in zip(vals, vals[1:]))


@pytest.mark.parametrize(
    "spec,n",
    STRUCTURED + [(UNCouncil("pre1965"), 11), (Majority(), 12), (TwoTier.equal_states(3, 3), 9), (WeightedMajority((5, 3, 2, 2, 1, 1, 1)), 7)],
)
def test_monotone_structured(spec, n):
    assert _monotone(quiet(spec, n))


def test_monotone_random(rng):
    for j in range(100):
        assert _monotone(BooleanFunction.random(1 + j % 10, rng))


def test_exact_is_rational_and_flagged():
    est = stability_exact(make_method(Majority(), 5), CorruptionModel("1/3"))
    assert isinstance(est.value, Fraction) and est.exact and est.stderr == 0
    with pytest.raises(ValidationError):
        StabilityEstimate(value=0.5, stderr=0.1, exact=True)
    with pytest.raises(ValidationError):
        StabilityEstimate(value=1.5)


def test_model_validation():
    for bad in (-0.1, 1.1):
        with pytest.raises(ValidationError):
            CorruptionModel(bad)
    m = CorruptionModel.from_epsilon(Fraction(1, 10))
    assert m.rho == Fraction(4, 5) and m.flip_probability == Fraction(1, 10)


def test_sample_corrupted_rho_one():
    x = (1, -1, -1, 1, 1)
    for seed in range(20):
        assert sample_corrupted(x, CorruptionModel(1), seed) == x


def test_corruption_statistics():
    rng = block_rng(7, 0)
    X = np.where(rng.random((100_000, 1)) < 0.5, 1, -1).astype(np.int8)
    # rho = 0: agreement 1/2
    Y = corrupt_batch(X, CorruptionModel(0), rng)
    agree = (X == Y).mean()
    assert abs(agree - 0.5) <= 3 * math.sqrt(0.25 / X.size)
    # rho = 0.8: E[X Y] = 0.8, per-vote variance 1 - 0.64
    Y = corrupt_batch(X, CorruptionModel(0.8), rng)
    xy = (X.astype(int) * Y).mean()
    assert abs(xy - 0.8) <= 3 * math.sqrt((1 - 0.64) / X.size)


def test_biased_corruption_preserves_marginal():
    rng = block_rng(3, 0)
    m = CorruptionModel(0.4, BiasedMeasure(0.7))
    X = np.where(rng.random((200_000, 1)) < 0.7, 1, -1).astype(np.int8)
    Y = corrupt_batch(X, m, rng)
    assert abs((Y == 1).mean() - 0.7) <= 4 * math.sqrt(0.21 / X.size)


def test_mc_small_majority():
    f = make_method(Majority(), 3)
    est = stability_mc(f, CorruptionModel(0.5), 1_000_000, seed=1)
    assert est.samples == 1_000_000 and not est.exact
    assert abs(est.value - 0.40625) <= 4 * est.stderr


def test_mc_agrees_with_exact_for_generic_path():
    f = make_method(TwoTier.from_sizes([3, 1, 3], [1, 2, 1]), 7)
    exact = float(stability_exact(f, CorruptionModel(0.6)).value)
    for g in (f, make_method(TwoTier.from_sizes([3, 1, 3], [1, 2, 1]), 7, dense=False)):
        est = stability_mc(g, CorruptionModel(0.6), 200_000, seed=5)
        assert abs(est.value - exact) <= 4 * est.stderr


@pytest.mark.parametrize("spec,n", [(Majority(), 9), (ThresholdMajority(3), 9), (TwoTier.equal_states(3, 3), 9)])
def test_count_sampler_matches_exact(spec, n):
    lazy = quiet(spec, n, dense=False)
    for model in (CorruptionModel(0.7), CorruptionModel(0.3, BiasedMeasure(0.6))):
        exact = float(stability_exact(quiet(spec, n), model).value)
        est = stability_mc(lazy, model, 300_000, seed=9)
        assert abs(est.value - exact) <= 4 * est.stderr


def test_mc_rho_one_is_one():
    assert stability_mc(make_method(Majority(), 101, dense=False), CorruptionModel(1), 10).value == 1
    assert stability_mc(BooleanFunction.random(4, np.random.default_rng(0)), CorruptionModel(1), 1).value == 1


def test_mc_thread_independent():
    for f in (make_method(Majority(), 1001, dense=False), make_method(WeightedMajority((3, 1, 1, 2, 1)), 5)):
        model = CorruptionModel(0.4)
        runs = [stability_mc(f, model, 300_000, seed=42, threads=t) for t in (1, 2, 5)]
        assert runs[0] == runs[1] == runs[2]
    other = stability_mc(make_method(Majority(), 1001, dense=False), CorruptionModel(0.4), 300_000, seed=43)
    assert other.value != runs[0].value


def test_majority_large_n_limit():
    f = make_method(Majority(), 10001)
    for rho, tol in ((0.5, 0.01), (0.99, 0.015)):
        est = stability_mc(f, CorruptionModel(rho), 1_000_000, seed=2)
        assert abs(est.value - majority_limit_stability(rho)) <= tol


def test_outcome_change_prob():
    assert outcome_change_prob(1) == 0
    assert outcome_change_prob(0) == Fraction(1, 2)
    assert outcome_change_prob(Fraction(1, 3)) == Fraction(1, 3)
    with pytest.raises(ValidationError):
        outcome_change_prob(1.5)


def test_majority_limit_values():
    assert majority_limit_stability(0) == 0
    assert majority_limit_stability(1) == pytest.approx(1)
    assert majority_limit_stability(0.5) == pytest.approx(1 / 3)
    with pytest.raises(ValidationError):
        majority_limit_stability(1.2)


def _jump_table(n):
    # E Maj_{n,t} at a probe t inside every interval between achievable sums
    sums = list(range(-n, n + 1, 2))
    probes = [-n - 1] + [s + 1 for s in sums]
    return [(t, float(quiet(ThresholdMajority(t), n, dense=False).expectation())) for t in probes]


def test_find_matching_threshold_examples():
    assert find_matching_threshold(5, 0).t == 0
    m = find_matching_threshold(3, 1)
    assert m.t < -3 and m.expectation == 1
    m = find_matching_threshold(3, Fraction(-1, 2))
    assert m.t == 2 and (m.lo, m.hi) == (1, 3) and m.expectation == Fraction(-3, 4)
    assert m.gap == Fraction(1, 4)


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 9), st.fractions(-1, 1, max_denominator=50))
def test_find_matching_threshold_is_argmin(n, mu):
    m = find_matching_threshold(n, mu)
    best = min(abs(e - float(mu)) for _, e in _jump_table(n))
    assert float(m.gap) == pytest.approx(best, abs=1e-12)
    # every t in (lo, hi] gives the same expectation
    assert float(quiet(ThresholdMajority(m.t), n, dense=False).expectation()) == pytest.approx(float(m.expectation))


def test_find_matching_threshold_biased():
    meas = BiasedMeasure(Fraction(2, 3))
    m = find_matching_threshold(7, 0, meas)
    vals = [abs(quiet(ThresholdMajority(t), 7, dense=False).expectation(meas)) for t in range(-8, 9)]
    assert m.gap == min(vals)


def test_asymptotics():
    assert asymptotic_change_ratio(51) == pytest.approx(5.698035, abs=5e-7)
    assert asymptotic_change_ratio(1) == pytest.approx(math.sqrt(2 / math.pi))
    eps = 1e-6
    ratio = (1 - asymptotic_small_eps("two_tier", eps, 51)) / (1 - asymptotic_small_eps("majority", eps))
    assert ratio == pytest.approx(5.698035, abs=5e-7)
    assert asymptotic_small_eps("majority", 1e-12) == pytest.approx(1, abs=1e-5)
    for bad in (0, 0.5):
        with pytest.raises(ValidationError):
            asymptotic_small_eps("majority", bad)


def test_small_eps_against_exact_majority():
    # first-order form tracks the exact limit 2/pi asin(1 - 2 eps)
    for eps in (1e-4, 1e-6):
        exact = majority_limit_stability(1 - 2 * eps)
        approx = asymptotic_small_eps("majority", eps)
        assert (1 - approx) == pytest.approx(1 - exact, rel=1e-3)


def test_low_influence_corridor():
    # loose desk-scale corridor, not the asymptotic theorem: balanced
    # weighted majorities on 10 voters with all influences <= 0.35
    rng = np.random.default_rng(2024)
    bound = majority_limit_stability(0.5) + 0.15
    checked = 0
    while checked < 200:
        w = rng.uniform(0.5, 1.5, 10)
        f = make_method(WeightedMajority(tuple(w)), 10)
        if f.expectation() != 0 or max(influence(f, i) for i in range(1, 11)) > 0.35:
            continue
        checked += 1
        assert float(stability_exact(f, CorruptionModel(0.5), rational=False).value) <= bound
