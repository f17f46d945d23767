"""Electoral-college style two-tier elections versus a national majority.

Each state runs a majority vote; the national winner is the sign of the
elector-weighted sum of state outcomes. Both systems are simulated on the
same sampled electorate so the comparison isolates the effect of the
state structure.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass
from importlib import resources
from typing import NamedTuple, Optional

import numpy as np

from .errors import ParseError, ValidationError
from .noise import asymptotic_change_ratio
from .rng import run_blocks


class RoundingWarning(UserWarning):
    """An even state electorate was rounded up to the next odd number."""


@dataclass(frozen=True)
class StateSpec:
    name: str
    voters: int
    electors: int = 1

    def __post_init__(self):
        if self.voters <= 0 or self.electors <= 0:
            raise ValidationError(f"state {self.name!r}: voters and electors must be positive")
        if self.voters % 2 == 0:
            raise ValidationError(f"state {self.name!r}: voter count must be odd")


@dataclass(frozen=True)
class EcScenario:
    states: tuple
    epsilon: float
    samples: int = 1_000_000
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "states", tuple(self.states))
        if not self.states:
            raise ValidationError("scenario needs at least one state")
        if not 0 < self.epsilon < 0.5:
            raise ValidationError(f"epsilon must lie in (0, 1/2), got {self.epsilon}")
        if int(self.samples) < 1:
            raise ValidationError("samples must be at least 1")
        object.__setattr__(self, "samples", int(self.samples))

    @property
    def total_voters(self) -> int:
        return sum(s.voters for s in self.states)

    @property
    def rho(self) -> float:
        return 1 - 2 * self.epsilon


def equal_states(m: int, voters: int, electors: int = 1) -> list:
    return [StateSpec(f"S{i + 1}", voters, electors) for i in range(m)]


def scale_states(states, factor) -> list:
    """Multiply every electorate by ``factor``, rounding to the nearest odd count.

    Keeps voters proportional to the original sizes; useful for pushing the
    smallest states into the regime n * epsilon >> 1.
    """
    if factor <= 0:
        raise ValidationError(f"scale factor must be positive, got {factor}")
    out = []
    for s in states:
        v = max(1, round(s.voters * factor))
        out.append(StateSpec(s.name, v if v % 2 else v + 1, s.electors))
    return out


def _odd(voters, where):
    if voters % 2 == 0:
        warnings.warn(f"{where}: {voters} voters is even, using {voters + 1}", RoundingWarning, stacklevel=3)
        return voters + 1
    return voters


def parse_states(lines, source="<states>") -> list:
    """Parse ``name,voters,electors`` CSV rows (header required)."""
    reader = csv.reader(lines)
    try:
        header = [h.strip().lower() for h in next(reader)]
    except StopIteration:
        raise ParseError(f"{source}: empty file", 1) from None
    if header != ["name", "voters", "electors"]:
        raise ParseError(f"{source}: header must be name,voters,electors, got {','.join(header)}", 1)
    states = []
    for line_no, row in enumerate(reader, 2):
        if not row or not "".join(row).strip():
            continue
        if len(row) != 3:
            raise ParseError(f"{source} line {line_no}: expected 3 fields, got {len(row)}", line_no)
        name = row[0].strip()
        try:
            voters, electors = int(row[1]), int(row[2])
        except ValueError:
            raise ParseError(f"{source} line {line_no}: voters and electors must be integers", line_no) from None
        if voters <= 0 or electors <= 0:
            raise ParseError(f"{source} line {line_no}: voters and electors must be positive", line_no)
        states.append(StateSpec(name, _odd(voters, f"{source} line {line_no}"), electors))
    if not states:
        raise ParseError(f"{source}: no states", 2)
    return states


def load_states(path) -> list:
    with open(path, newline="") as fh:
        return parse_states(fh, str(path))


def census_2010_states() -> list:
    """Bundled synthetic 2010-shaped scenario (approximate state populations)."""
    text = resources.files("stabvote").joinpath("data/states_2010_synthetic.csv").read_text()
    return parse_states(text.splitlines(), "states_2010_synthetic.csv")


class EcOutcome(NamedTuple):
    winner: int
    tie: bool


def ec_outcome(votes_per_state, states) -> EcOutcome:
    """sign(sum_s electors_s * Maj(votes_s)), a zero sum going to +1."""
    states = list(states)
    if len(votes_per_state) != len(states):
        raise ValidationError(f"{len(votes_per_state)} vote vectors for {len(states)} states")
    total = 0
    for votes, state in zip(votes_per_state, states):
        votes = list(votes)
        if len(votes) != state.voters:
            raise ValidationError(f"state {state.name!r} expects {state.voters} votes, got {len(votes)}")
        if any(v not in (-1, 1) for v in votes):
            raise ValidationError("votes must be -1 or +1")
        total += state.electors * (1 if sum(votes) >= 0 else -1)
    return EcOutcome(1 if total >= 0 else -1, total == 0)


class FlipEstimate(NamedTuple):
    prob: float
    stderr: float
    flips: int
    samples: int


@dataclass(frozen=True)
class ComparisonReport:
    electoral_college: FlipEstimate
    majority: FlipEstimate
    ratio: Optional[float]
    ratio_stderr: Optional[float]
    asymptotic_ratio: Optional[float]
    epsilon: float
    samples: int
    seed: int
    states: int
    total_voters: int
    electoral_ties: int


def _worker(scenario: EcScenario):
    sizes = np.array([s.voters for s in scenario.states], dtype=np.int64)
    electors = np.array([s.electors for s in scenario.states], dtype=np.int64)
    eps = scenario.epsilon

    def work(rng, size):
        # one scalar-n call per state lets the binomial sampler reuse its setup
        a = np.column_stack([rng.binomial(n, 0.5, size=size) for n in sizes])
        a_y = a - rng.binomial(a, eps) + rng.binomial(sizes - a, eps)
        margin_x, margin_y = 2 * a - sizes, 2 * a_y - sizes
        ec_x = np.where(margin_x >= 0, electors, -electors).sum(axis=1)
        ec_y = np.where(margin_y >= 0, electors, -electors).sum(axis=1)
        ec_flip = (ec_x >= 0) != (ec_y >= 0)
        maj_flip = (margin_x.sum(axis=1) >= 0) != (margin_y.sum(axis=1) >= 0)
        ties = int(np.count_nonzero(ec_x == 0) + np.count_nonzero(ec_y == 0))
        return (
            int(np.count_nonzero(ec_flip)),
            int(np.count_nonzero(maj_flip)),
            int(np.count_nonzero(ec_flip & maj_flip)),
            ties,
        )

    return work


def _simulate(scenario: EcScenario, threads=None):
    results = run_blocks(_worker(scenario), scenario.samples, scenario.seed, threads)
    return tuple(sum(r[j] for r in results) for j in range(4))


def _estimate(flips, samples) -> FlipEstimate:
    p = flips / samples
    var = p * (1 - p) * samples / (samples - 1) if samples > 1 else 0.0
    return FlipEstimate(p, math.sqrt(var / samples), flips, samples)


def flip_prob_mc(method: str, scenario: EcScenario, threads=None) -> FlipEstimate:
    """P[outcome(X) != outcome(Y)] for "electoral_college" or "majority"."""
    if method not in ("electoral_college", "majority"):
        raise ValidationError(f"unknown method {method!r}")
    ec, maj, _, _ = _simulate(scenario, threads)
    return _estimate(ec if method == "electoral_college" else maj, scenario.samples)


def _equal_state_count(states) -> Optional[int]:
    first = states[0]
    if all(s.voters == first.voters and s.electors == first.electors for s in states):
        return len(states)
    return None


def compare_ec_vs_majority(scenario: EcScenario, threads=None) -> ComparisonReport:
    ec_flips, maj_flips, both, ties = _simulate(scenario, threads)
    n = scenario.samples
    ec, maj = _estimate(ec_flips, n), _estimate(maj_flips, n)
    ratio = ratio_se = None
    if maj_flips and ec_flips:
        ratio = ec.prob / maj.prob
        # delta method: Var(ratio) = Var(E - ratio * M) / (n P(M)^2) for flip indicators E, M
        resid = ec.prob + ratio * ratio * maj.prob - 2 * ratio * both / n
        ratio_se = math.sqrt(max(0.0, resid) / n) / maj.prob
    m = _equal_state_count(scenario.states)
    return ComparisonReport(
        electoral_college=ec,
        majority=maj,
        ratio=ratio,
        ratio_stderr=ratio_se,
        asymptotic_ratio=asymptotic_change_ratio(m) if m else None,
        epsilon=scenario.epsilon,
        samples=n,
        seed=scenario.seed,
        states=len(scenario.states),
        total_voters=scenario.total_voters,
        electoral_ties=ties,
    )
