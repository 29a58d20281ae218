"""
Running gamblers against threshold vectors, prophet baselines, exact
evaluation over finite outcome spaces, and Monte Carlo simulation.

Exact gambler values use the fact that, once thresholds are fixed, which
items pass their threshold is a product of independent coins with
probabilities a_i, and the value of a passing item is independent of
everything else with mean v_i.  So the expectation for an order is
sum_A P(A) sum_{i accepted from A} v_i over the 2^|finite| activity patterns.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from itertools import permutations
from typing import Sequence

import numpy as np

from .distributions import ValueDistribution
from .matroid import InputError, Matroid, TABLE_LIMIT, greedy_max_weight
from .mechanisms import FixedMechanism, Mechanism, ThresholdVector
from .relaxation import ExAnteRelaxation, joint_outcomes, outcome_count
from .rng import check_seed, label_key, substream

STATE_LIMIT = 10**7
EXACT_OUTCOME_LIMIT = 10**6
CHUNK = 4096
POOL_RANDOM = 32
ADVERSARY_MASK_LIMIT = 1 << 14
EXHAUSTIVE_LIMIT = 7

CSV_COLUMNS = ("instance", "mechanism", "order", "trials", "seed", "gambler_mean", "gambler_stderr",
               "prophet_mean", "prophet_stderr", "ratio", "claimed_alpha", "verdict")


class StateSpaceError(InputError):
    def __init__(self, count: int, limit: int):
        self.count = count
        super().__init__(f"exact evaluation needs {count} states, above the limit of {limit}")


# ---------------------------------------------------------------------------
# single runs


def run_gambler(m: Matroid, tv: ThresholdVector, order: Sequence[int], realization: Sequence[float],
                ties: Sequence[float] | None = None) -> tuple[tuple[int, ...], float]:
    """Scan in ``order``; accept items that pass their threshold and keep independence."""
    if sorted(order) != list(range(m.n)):
        raise InputError("order must be a permutation of the ground set")
    builder = m.new_builder()
    accepted = []
    total = 0.0
    for i in order:
        u = 0.0 if ties is None else ties[i]
        if tv.accepts(i, realization[i], u) and builder.add(i):
            accepted.append(i)
            total += realization[i]
    return tuple(accepted), total


def prophet_value(m: Matroid, realization: Sequence[float]) -> float:
    return float(sum(realization[i] for i in greedy_max_weight(m, realization)))


# ---------------------------------------------------------------------------
# vectorized helpers (n <= TABLE_LIMIT)


def _table(m: Matroid) -> np.ndarray | None:
    if m.n > TABLE_LIMIT:
        return None
    return np.frombuffer(m.independence_table, dtype=np.uint8).astype(bool)


def _scan(table: np.ndarray, active: np.ndarray, values: np.ndarray, orders: np.ndarray):
    """Vectorized gambler: rows are independent runs.  Returns (value, accepted mask)."""
    rows = np.arange(active.shape[0])
    acc = np.zeros(active.shape[0], dtype=np.int64)
    total = np.zeros(active.shape[0])
    for j in range(orders.shape[1]):
        item = orders[:, j]
        cand = acc | (np.int64(1) << item)
        take = active[rows, item] & table[cand]
        acc = np.where(take, cand, acc)
        total += np.where(take, values[rows, item], 0.0)
    return total, acc


def _greedy_rows(table: np.ndarray, values: np.ndarray) -> np.ndarray:
    """Max-weight independent set value for every row (ties by item id)."""
    n = values.shape[1]
    order = np.lexsort((np.broadcast_to(np.arange(n), values.shape), -values), axis=1)
    positive = values > 0
    return _scan(table, positive, values, order)[0]


def prophet_values(m: Matroid, values: np.ndarray) -> np.ndarray:
    table = _table(m)
    if table is not None:
        return _greedy_rows(table, values)
    return np.array([prophet_value(m, row) for row in values])


def prophet_exact(m: Matroid, dists: Sequence[ValueDistribution]) -> float:
    """E[prophet] by enumerating the product of finite supports."""
    count = outcome_count(dists)
    if count is None:
        raise InputError("exact prophet value needs finite-support distributions")
    if count > EXACT_OUTCOME_LIMIT:
        raise StateSpaceError(count, EXACT_OUTCOME_LIMIT)
    table = _table(m)
    total = 0.0
    batch_v, batch_p = [], []
    for vals, prob in joint_outcomes(dists):
        if table is None:
            total += prob * prophet_value(m, vals)
        else:
            batch_v.append(vals)
            batch_p.append(prob)
    if batch_v:
        total = float(np.dot(_greedy_rows(table, np.array(batch_v, dtype=float)), np.array(batch_p)))
    return total


def rank_table(m: Matroid) -> np.ndarray:
    """Rank of every subset, indexed by bitmask."""
    if m.n > TABLE_LIMIT:
        raise InputError(f"rank tables need n <= {TABLE_LIMIT}")
    size = 1 << m.n
    out = np.zeros(size, dtype=np.int64)
    for mask in range(1, size):
        high = mask.bit_length() - 1
        rest = mask & ~(1 << high)
        items = [i for i in range(m.n) if mask >> i & 1]
        out[mask] = out[rest] + (1 if m.rank(items) > out[rest] else 0)
    return out


def _mask_probs(q: Sequence[float]) -> np.ndarray:
    """P(active set = mask) for independent inclusion probabilities q; bit j is item j."""
    probs = np.ones(1)
    for qj in q:
        probs = np.concatenate([probs * (1 - qj), probs * qj])
    return probs


def prophet_layer_cake(m: Matroid, dists: Sequence[ValueDistribution], ranks: np.ndarray | None = None) -> float:
    """E[prophet] = integral over x of E[r({i : X_i > x})], exact for finite supports.

    An independent route to the prophet value: the greedy weight of a
    matroid equals the integral of the rank of the super-level sets.
    """
    if any(d.support() is None for d in dists):
        raise InputError("layer-cake evaluation needs finite-support distributions")
    if ranks is None:
        ranks = rank_table(m)
    points = sorted({0.0} | {v for d in dists for v, _ in d.support()})
    total = 0.0
    for lo, hi in zip(points, points[1:]):
        q = [d.survival(lo) for d in dists]
        total += (hi - lo) * float(np.dot(_mask_probs(q), ranks))
    return total


# ---------------------------------------------------------------------------
# exact gambler values


class DrawModel:
    """Activity statistics of one threshold vector."""

    def __init__(self, m: Matroid, tv: ThresholdVector, dists: Sequence[ValueDistribution]):
        items, act, val = [], [], []
        for i in tv.finite():
            d = dists[i]
            t = tv.values[i]
            at = d.atom(t) * tv.tie[i]
            a = d.survival(t) + at
            if a <= 0:
                continue
            items.append(i)
            act.append(a)
            val.append((d.mass_above(t) + t * at) / a)
        self.items = items
        self.a = np.array(act)
        self.v = np.array(val)
        self.m = m
        k = len(items)
        self.k = k
        # bit j of the mask <-> items[j]
        self.probs = _mask_probs(self.a)
        self._bits = ((np.arange(1 << k)[:, None] >> np.arange(k)) & 1).astype(bool) if k else None
        self._pos = {i: j for j, i in enumerate(items)}

    def expected(self, order: Sequence[int], table: np.ndarray | None) -> float:
        if self.k == 0:
            return 0.0
        seq = [i for i in order if i in self._pos]
        if table is not None:
            acc = np.zeros(1 << self.k, dtype=np.int64)
            total = np.zeros(1 << self.k)
            for i in seq:
                j = self._pos[i]
                cand = acc | (1 << i)
                take = self._bits[:, j] & table[cand]
                acc = np.where(take, cand, acc)
                total += np.where(take, self.v[j], 0.0)
            return float(np.dot(self.probs, total))
        out = 0.0
        for mask in range(1 << self.k):
            pr = self.probs[mask]
            if pr == 0:
                continue
            builder = self.m.new_builder()
            for i in seq:
                j = self._pos[i]
                if mask >> j & 1 and builder.add(i):
                    out += pr * self.v[j]
        return out


def _support_of(mech_or_tv) -> list[tuple[float, ThresholdVector]]:
    if isinstance(mech_or_tv, ThresholdVector):
        return [(1.0, mech_or_tv)]
    return mech_or_tv.support()


@dataclass
class OrderStrategy:
    """fixed (with a permutation), uniform, adversarial (candidate pool) or exhaustive (all orders)."""

    kind: str
    permutation: tuple[int, ...] | None = None

    def __post_init__(self):
        if self.kind not in ("fixed", "uniform", "adversarial", "exhaustive"):
            raise InputError(f"unknown order strategy {self.kind!r}")
        if self.kind == "fixed" and self.permutation is None:
            raise InputError("fixed order strategy needs a permutation")

    def check(self, n: int) -> None:
        if self.kind == "fixed" and sorted(self.permutation) != list(range(n)):
            raise InputError("fixed order must be a permutation of the ground set")
        if self.kind == "exhaustive" and n > EXHAUSTIVE_LIMIT:
            raise InputError(f"exhaustive orders need n <= {EXHAUSTIVE_LIMIT}")

    @property
    def label(self) -> str:
        if self.kind == "adversarial":
            return "adversarial-heuristic"
        if self.kind == "fixed":
            return "fixed"
        return self.kind

    @classmethod
    def parse(cls, text: str) -> "OrderStrategy":
        if text.startswith("fixed:"):
            return cls("fixed", tuple(int(x) for x in text[6:].split(",") if x != ""))
        return cls(text)


def candidate_orders(tv: ThresholdVector, p: Sequence[float] | None, seed: int) -> list[tuple[int, ...]]:
    """Ascending/descending threshold, descending p, and seeded random orders.

    The random orders are seeded by the threshold vector itself, so the pool
    depends on nothing the adversary is not allowed to see.
    """
    n = tv.n
    ids = list(range(n))
    pool = [tuple(sorted(ids, key=lambda i: (tv.values[i], i))),
            tuple(sorted(ids, key=lambda i: (-tv.values[i], i)))]
    if p is not None:
        pool.append(tuple(sorted(ids, key=lambda i: (-p[i], i))))
    rng = substream(seed, "adversary-pool", label_key(repr(tv.key())))
    for _ in range(POOL_RANDOM):
        pool.append(tuple(int(x) for x in rng.permutation(n)))
    seen, out = set(), []
    for o in pool:
        if o not in seen:
            seen.add(o)
            out.append(o)
    return out


@dataclass
class ExactResult:
    gambler: float
    prophet: float
    order_policy: str
    worst_order: tuple[int, ...] | None
    states: int

    @property
    def ratio(self) -> float:
        return self.gambler / self.prophet if self.prophet > 0 else 1.0


def exact_gambler(m: Matroid, dists: Sequence[ValueDistribution], mech_or_tv, order: OrderStrategy,
                  p: Sequence[float] | None = None, seed: int = 0) -> tuple[float, tuple[int, ...] | None, int]:
    """Exact expected gambler value; adversarial policies minimize over orders
    of the expectation over draws and values (the order is fixed in advance)."""
    order.check(m.n)
    support = _support_of(mech_or_tv)
    models = [(w, DrawModel(m, tv, dists)) for w, tv in support]
    table = _table(m)
    if order.kind == "fixed":
        orders = [order.permutation]
    elif order.kind in ("uniform", "exhaustive"):
        if m.n > EXHAUSTIVE_LIMIT:
            raise StateSpaceError(math.factorial(m.n), math.factorial(EXHAUSTIVE_LIMIT))
        orders = list(permutations(range(m.n)))
    else:
        orders = []
        for _, tv in support:
            orders.extend(candidate_orders(tv, p, seed))
        orders = list(dict.fromkeys(orders))
    states = len(orders) * sum(1 << md.k for _, md in models)
    if states > STATE_LIMIT:
        raise StateSpaceError(states, STATE_LIMIT)
    values = [sum(w * md.expected(o, table) for w, md in models) for o in orders]
    if order.kind == "uniform":
        return float(np.mean(values)), None, states
    j = int(np.argmin(values))
    return float(values[j]), tuple(orders[j]), states


def exact_evaluate(m: Matroid, dists: Sequence[ValueDistribution], mech_or_tv, order: OrderStrategy,
                   p: Sequence[float] | None = None, seed: int = 0) -> ExactResult:
    prophet = prophet_exact(m, dists)
    g, worst, states = exact_gambler(m, dists, mech_or_tv, order, p, seed)
    return ExactResult(g, prophet, order.label, worst, states)


# ---------------------------------------------------------------------------
# simulation


@dataclass
class SimulationReport:
    instance: str
    mechanism: str
    order_strategy: str
    trials: int
    seed: int
    claimed_alpha: float | None
    gambler_mean: float
    gambler_stderr: float
    prophet_mean: float
    prophet_stderr: float
    diff_stderr: float
    acceptance_frequency: list[float]
    survival_frequency: list[float] | None = None
    survival_expected: list[float] | None = None
    acceptance_floor: list[float] | None = None
    relaxation_bound: float | None = None
    relaxation: dict | None = None
    worst_order: list[int] | None = None
    checks: dict = field(default_factory=dict)

    @property
    def ratio(self) -> float:
        return self.gambler_mean / self.prophet_mean if self.prophet_mean > 0 else 1.0

    @property
    def verdict(self) -> str:
        if self.claimed_alpha is None:
            return "no-claim"
        ok = self.gambler_mean - self.prophet_mean / self.claimed_alpha >= -3 * self.diff_stderr
        return "pass" if ok and all(self.checks.values()) else "fail"

    @property
    def passed(self) -> bool:
        return self.verdict in ("pass", "no-claim")

    def to_dict(self) -> dict:
        return {
            "instance": self.instance,
            "mechanism": self.mechanism,
            "order_strategy": self.order_strategy,
            "trials": self.trials,
            "seed": self.seed,
            "claimed_alpha": self.claimed_alpha,
            "gambler": {"mean": self.gambler_mean, "stderr": self.gambler_stderr},
            "prophet": {"mean": self.prophet_mean, "stderr": self.prophet_stderr},
            "paired_diff_stderr": self.diff_stderr,
            "ratio": self.ratio,
            "verdict": self.verdict,
            "checks": dict(self.checks),
            "acceptance_frequency": self.acceptance_frequency,
            "survival_frequency": self.survival_frequency,
            "survival_expected": self.survival_expected,
            "acceptance_floor": self.acceptance_floor,
            "relaxation_bound": self.relaxation_bound,
            "relaxation": self.relaxation,
            "worst_order": self.worst_order,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def csv_row(self) -> list:
        return [self.instance, self.mechanism, self.order_strategy, self.trials, self.seed,
                repr(self.gambler_mean), repr(self.gambler_stderr), repr(self.prophet_mean),
                repr(self.prophet_stderr), repr(self.ratio),
                "" if self.claimed_alpha is None else repr(self.claimed_alpha), self.verdict]


def reports_to_csv(reports: Sequence[SimulationReport]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in reports:
        w.writerow(r.csv_row())
    return buf.getvalue()


@dataclass
class _Chunk:
    count: int = 0
    g: float = 0.0
    g2: float = 0.0
    pr: float = 0.0
    pr2: float = 0.0
    d: float = 0.0
    d2: float = 0.0
    accepted: np.ndarray = None
    survived: np.ndarray = None
    orders: dict = None


def _run_chunk(args) -> _Chunk:
    (m, dists, mech, strategy, seed, chunk, size, alpha, p) = args
    n = m.n
    table = _table(m)
    mrng = substream(seed, "mechanism", chunk)
    values = np.empty((size, n))
    for i, d in enumerate(dists):
        values[:, i] = d.sample(substream(seed, "values", chunk, i), size)
    ties = substream(seed, "ties", chunk).random((size, n))
    thr = np.empty((size, n))
    tie = np.empty((size, n))
    survived = np.zeros(n)
    draws = []
    for r in range(size):
        choices: dict = {}
        tv = mech.draw_with(mrng, choices)
        thr[r] = tv.values
        tie[r] = tv.tie
        if "survivors" in choices:
            survived[choices["survivors"]] += 1
        draws.append(tv)
    if strategy.kind == "fixed":
        orders = np.tile(np.array(strategy.permutation), (size, 1))
    elif strategy.kind == "uniform":
        orders = np.argsort(substream(seed, "orders", chunk).random((size, n)), axis=1)
    else:
        cache: dict = {}
        orders = np.empty((size, n), dtype=np.int64)
        for r, tv in enumerate(draws):
            key = tv.key()
            if key not in cache:
                cache[key] = _adversary_order(m, dists, tv, strategy, p, seed, table)
            orders[r] = cache[key]
    active = (values > thr) | ((values == thr) & (ties < tie))
    if table is not None:
        g, acc = _scan(table, active, values, orders)
        accepted = np.zeros(n)
        for i in range(n):
            accepted[i] = np.count_nonzero(acc >> i & 1)
    else:
        g = np.empty(size)
        accepted = np.zeros(n)
        for r in range(size):
            chosen, g[r] = run_gambler(m, draws[r], orders[r].tolist(), values[r], ties[r])
            accepted[list(chosen)] += 1
    pv = prophet_values(m, values)
    d = g - (pv / alpha if alpha else 0.0)
    order_counts: dict = {}
    if strategy.kind in ("adversarial", "exhaustive"):
        for row in orders:
            k = tuple(int(x) for x in row)
            order_counts[k] = order_counts.get(k, 0) + 1
    return _Chunk(size, float(g.sum()), float((g * g).sum()), float(pv.sum()), float((pv * pv).sum()),
                  float(d.sum()), float((d * d).sum()), accepted, survived, order_counts)


def _adversary_order(m, dists, tv, strategy, p, seed, table):
    model = DrawModel(m, tv, dists)
    if strategy.kind == "exhaustive":
        pool = list(permutations(range(m.n)))
    else:
        pool = candidate_orders(tv, p, seed)
    if model.k == 0:
        return pool[0]
    if (1 << model.k) > ADVERSARY_MASK_LIMIT:
        # too many activity patterns to score exactly: fall back to the first pool entry
        return pool[0]
    scores = [model.expected(o, table) for o in pool]
    return pool[int(np.argmin(scores))]


def _stderr(s: float, s2: float, n: int) -> float:
    if n < 2:
        return 0.0
    var = max(s2 / n - (s / n) ** 2, 0.0) * n / (n - 1)
    return math.sqrt(var / n)


def worker_count() -> int:
    raw = os.environ.get("MP_THREADS", "")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def simulate(m: Matroid, dists: Sequence[ValueDistribution], mechanism: Mechanism | ThresholdVector,
             order: OrderStrategy, trials: int, seed: int, relax: ExAnteRelaxation | None = None,
             alpha: float | None = None, instance: str = "instance", workers: int | None = None) -> SimulationReport:
    """Monte Carlo run: fresh mechanism draw, realization and order every trial.

    Trials are cut into fixed-size chunks, each with its own labelled random
    substreams, so the report does not depend on how many workers run.
    """
    if trials < 1:
        raise InputError("trials must be at least 1")
    if len(dists) != m.n:
        raise InputError(f"matroid has {m.n} elements but {len(dists)} distributions were given")
    seed = check_seed(seed)
    order.check(m.n)
    mech = FixedMechanism(mechanism) if isinstance(mechanism, ThresholdVector) else mechanism
    if alpha is None:
        alpha = mech.ratio
    p = None if relax is None else [float(x) for x in relax.p]
    jobs = []
    for c, start in enumerate(range(0, trials, CHUNK)):
        jobs.append((m, dists, mech, order, seed, c, min(CHUNK, trials - start), alpha, p))
    workers = worker_count() if workers is None else workers
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=min(workers, len(jobs))) as ex:
            chunks = list(ex.map(_run_chunk, jobs))
    else:
        chunks = [_run_chunk(j) for j in jobs]
    tot = _Chunk(0, 0, 0, 0, 0, 0, 0, np.zeros(m.n), np.zeros(m.n), {})
    for ch in chunks:
        tot.count += ch.count
        tot.g += ch.g
        tot.g2 += ch.g2
        tot.pr += ch.pr
        tot.pr2 += ch.pr2
        tot.d += ch.d
        tot.d2 += ch.d2
        tot.accepted += ch.accepted
        tot.survived += ch.survived
        for k, v in ch.orders.items():
            tot.orders[k] = tot.orders.get(k, 0) + v
    n = tot.count
    acc_freq = tot.accepted / n
    report = SimulationReport(
        instance=instance, mechanism=mech.name, order_strategy=order.label, trials=n, seed=seed,
        claimed_alpha=alpha, gambler_mean=tot.g / n, gambler_stderr=_stderr(tot.g, tot.g2, n),
        prophet_mean=tot.pr / n, prophet_stderr=_stderr(tot.pr, tot.pr2, n),
        diff_stderr=_stderr(tot.d, tot.d2, n), acceptance_frequency=[float(x) for x in acc_freq])
    if tot.orders:
        report.worst_order = list(min(tot.orders, key=lambda k: (-tot.orders[k], k)))
    surv = mech.survival_probability()
    if surv is not None:
        freq = tot.survived / n
        report.survival_frequency = [float(x) for x in freq]
        report.survival_expected = [float(x) for x in surv]
        sigma = np.sqrt(surv * (1 - surv) / n)
        report.checks["survival"] = bool(np.all(np.abs(freq - surv) <= 3 * sigma + 1e-12))
    floor = mech.acceptance_floor()
    if floor is not None:
        report.acceptance_floor = [float(x) for x in floor]
        sigma = np.sqrt(np.maximum(acc_freq * (1 - acc_freq), 1.0 / n) / n)
        report.checks["acceptance_floor"] = bool(np.all(acc_freq >= floor - 3 * sigma))
    if relax is not None:
        report.relaxation_bound = relax.bound()
        report.relaxation = relax.to_dict()
    return report
