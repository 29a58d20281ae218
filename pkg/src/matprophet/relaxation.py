"""
The ex-ante point p (how often each item is in the prophet's optimal set),
its tail thresholds, and the Bernoulli reduction with a tie-breaking coupling.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import product
from typing import Sequence

import numpy as np

from .distributions import ValueDistribution, tail_expectation, tail_params
from .matroid import InputError, Matroid, greedy_max_weight, subsets
from .rng import substream

EXACT_OUTCOME_LIMIT = 10**6


@dataclass
class ExAnteRelaxation:
    p: np.ndarray
    tau: np.ndarray
    t: np.ndarray
    theta: np.ndarray
    sample_count: int
    stderr: np.ndarray = field(default=None)
    exact: bool = False

    def __post_init__(self):
        self.p = np.asarray(self.p, dtype=float)
        if self.stderr is None:
            self.stderr = np.zeros_like(self.p)

    @property
    def n(self) -> int:
        return len(self.p)

    def bound(self) -> float:
        """Sum of p_i t_i, an upper bound on the prophet's expectation."""
        mask = self.p > 0
        return float(np.dot(self.p[mask], self.t[mask]))

    def to_dict(self) -> dict:
        return {
            "p": [float(x) for x in self.p],
            "tau": [None if math.isinf(x) else float(x) for x in self.tau],
            "t": [float(x) for x in self.t],
            "theta": [float(x) for x in self.theta],
            "sample_count": int(self.sample_count),
            "exact": self.exact,
        }


def relaxation_from_p(dists: Sequence[ValueDistribution], p: Sequence[float], sample_count: int = 0,
                      stderr=None, exact: bool = False) -> ExAnteRelaxation:
    p = np.clip(np.asarray(p, dtype=float), 0.0, 1.0)
    tau = np.empty(len(p))
    theta = np.empty(len(p))
    t = np.zeros(len(p))
    for i, (d, pi) in enumerate(zip(dists, p)):
        tau[i], theta[i] = tail_params(d, pi)
        if pi > 0:
            t[i] = tail_expectation(d, pi)
    return ExAnteRelaxation(p, tau, t, theta, sample_count, stderr, exact)


def _check(m: Matroid, dists) -> None:
    if len(dists) != m.n:
        raise InputError(f"matroid has {m.n} elements but {len(dists)} distributions were given")


def estimate_ex_ante(m: Matroid, dists: Sequence[ValueDistribution], trials: int, seed: int) -> ExAnteRelaxation:
    """Monte Carlo frequency of each item in a max-weight independent set.

    Greedy ties are broken by fresh uniform keys every trial, and items of
    value zero are never counted as selected.
    """
    _check(m, dists)
    if trials < 1:
        raise InputError("trials must be at least 1")
    n = m.n
    values = np.empty((trials, n))
    for i, d in enumerate(dists):
        values[:, i] = d.sample(substream(seed, "exante-values", i), trials)
    keys = substream(seed, "exante-ties").random((trials, n))
    counts = np.zeros(n)
    # lexsort sorts by the last key first: value descending, then random key
    orders = np.lexsort((keys, -values), axis=1)
    for row, order in zip(values, orders):
        builder = m.new_builder()
        for i in order:
            if row[i] <= 0:
                break
            if builder.add(int(i)):
                counts[i] += 1
    p = counts / trials
    stderr = np.sqrt(p * (1 - p) / trials)
    return relaxation_from_p(dists, p, trials, stderr)


def outcome_count(dists: Sequence[ValueDistribution]) -> int | None:
    total = 1
    for d in dists:
        sup = d.support()
        if sup is None:
            return None
        total *= len(sup)
    return total


def joint_outcomes(dists: Sequence[ValueDistribution]):
    """Yield (values, probability) over the product of finite supports."""
    supports = [d.support() for d in dists]
    for combo in product(*supports):
        prob = 1.0
        for _, q in combo:
            prob *= q
        yield tuple(v for v, _ in combo), prob


def exact_ex_ante(m: Matroid, dists: Sequence[ValueDistribution]) -> ExAnteRelaxation:
    """Exact p for finite-support laws; greedy ties go to the lower item id."""
    _check(m, dists)
    count = outcome_count(dists)
    if count is None:
        raise InputError("exact ex-ante needs finite-support distributions")
    if count > EXACT_OUTCOME_LIMIT:
        raise InputError(f"joint outcome space has {count} points (limit {EXACT_OUTCOME_LIMIT})")
    p = np.zeros(m.n)
    for vals, prob in joint_outcomes(dists):
        for i in greedy_max_weight(m, vals, skip_zero=True):
            p[i] += prob
    return relaxation_from_p(dists, p, 0, exact=True)


def ex_ante(m: Matroid, dists: Sequence[ValueDistribution], trials: int, seed: int) -> ExAnteRelaxation:
    """Exact relaxation when the joint space is small enough, otherwise Monte Carlo."""
    count = outcome_count(dists)
    if count is not None and count <= EXACT_OUTCOME_LIMIT:
        return exact_ex_ante(m, dists)
    return estimate_ex_ante(m, dists, trials, seed)


def polytope_excess(m: Matroid, p: Sequence[float], stderr: Sequence[float] | None = None,
                    limit: int = 10) -> tuple[float, tuple[int, ...]]:
    """Largest sum_{i in S} p_i - r(S) - 3 sigma_S over subsets S (all subsets for n <= limit,
    otherwise singletons, circuits of size two and the whole set)."""
    se = np.zeros(m.n) if stderr is None else np.asarray(stderr)
    if m.n <= limit:
        cands = subsets(m.n)
    else:
        cands = [frozenset([i]) for i in range(m.n)] + [frozenset(c) for c in m.parallel_classes] + [frozenset(range(m.n))]
    worst, where = -math.inf, ()
    for s in cands:
        if not s:
            continue
        idx = sorted(s)
        slack = sum(p[i] for i in idx) - m.rank(idx) - 3 * math.sqrt(sum(se[i] ** 2 for i in idx))
        if slack > worst:
            worst, where = slack, tuple(idx)
    return worst, where


@dataclass
class BernoulliInstance:
    """Item i is worth t_i and is active with probability exactly p_i.

    The coupling with the original values: active iff x > tau, or x == tau and
    an independent uniform u falls below theta.
    """

    values: np.ndarray
    probs: np.ndarray
    tau: np.ndarray
    theta: np.ndarray

    def active(self, x, u) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        u = np.asarray(u, dtype=float)
        return (x > self.tau) | ((x == self.tau) & (u < self.theta))


def reduce_to_bernoulli(relax: ExAnteRelaxation) -> BernoulliInstance:
    return BernoulliInstance(np.asarray(relax.t, float), relax.p.copy(), np.asarray(relax.tau, float),
                             np.asarray(relax.theta, float))
