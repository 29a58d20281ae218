"""
Nonnegative value distributions.

Every law provides the CDF in both one-sided forms, the generalized inverse
``quantile(q) = inf{x : F(x) >= q}``, inverse-transform sampling and the
stop-loss transform ``upper_partial(T) = E[(X - T)^+]`` from which all tail
quantities are derived.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

PROB_TOL = 1e-12


class DistributionError(ValueError):
    pass


class ValueDistribution:
    kind = "abstract"

    def cdf(self, x: float) -> float:
        raise NotImplementedError

    def cdf_left(self, x: float) -> float:
        """P[X < x]."""
        return self.cdf(x) - self.atom(x)

    def atom(self, x: float) -> float:
        return 0.0

    def survival(self, x: float) -> float:
        """P[X > x]."""
        return 1.0 - self.cdf(x)

    def quantile(self, q: float) -> float:
        raise NotImplementedError

    def quantiles(self, q: np.ndarray) -> np.ndarray:
        return np.array([self.quantile(float(x)) for x in np.ravel(q)]).reshape(np.shape(q))

    def sample(self, rng: np.random.Generator, size) -> np.ndarray:
        return self.quantiles(rng.random(size))

    @property
    def mean(self) -> float:
        raise NotImplementedError

    @property
    def ess_inf(self) -> float:
        raise NotImplementedError

    @property
    def ess_sup(self) -> float:
        raise NotImplementedError

    def upper_partial(self, t: float) -> float:
        """E[(X - t)^+], by adaptive quadrature of the survival function."""
        if t < self.ess_inf:
            return self.mean - t
        if t >= self.ess_sup:
            return 0.0
        val, _ = integrate.quad(self.survival, t, self.ess_sup, epsabs=0.0, epsrel=1e-11, limit=200)
        return val

    def mass_above(self, t: float) -> float:
        """E[X 1{X > t}]."""
        return self.upper_partial(t) + t * self.survival(t)

    def support(self) -> list[tuple[float, float]] | None:
        """Finite support as (value, probability) pairs, or None for continuous laws."""
        return None

    def to_dict(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class PointMass(ValueDistribution):
    value: float
    kind = "point"

    def __post_init__(self):
        if not (self.value >= 0) or math.isinf(self.value):
            raise DistributionError(f"point mass must be finite and nonnegative, got {self.value}")

    def cdf(self, x):
        return 1.0 if x >= self.value else 0.0

    def atom(self, x):
        return 1.0 if x == self.value else 0.0

    def quantile(self, q):
        return float(self.value)

    def quantiles(self, q):
        return np.full(np.shape(q), float(self.value))

    @property
    def mean(self):
        return float(self.value)

    @property
    def ess_inf(self):
        return float(self.value)

    @property
    def ess_sup(self):
        return float(self.value)

    def upper_partial(self, t):
        return max(self.value - t, 0.0)

    def support(self):
        return [(float(self.value), 1.0)]

    def to_dict(self):
        return {"type": "point", "value": self.value}


class Discrete(ValueDistribution):
    """Finite support; duplicate values are merged and zero-probability values dropped."""

    kind = "discrete"

    def __init__(self, values, probs):
        values = [float(v) for v in values]
        probs = [float(p) for p in probs]
        if len(values) != len(probs) or not values:
            raise DistributionError("values and probs must be nonempty and of equal length")
        if any(v < 0 or math.isinf(v) or math.isnan(v) for v in values):
            raise DistributionError("discrete values must be finite and nonnegative")
        if any(not (p >= 0) for p in probs):
            raise DistributionError("probabilities must be nonnegative")
        total = sum(probs)
        if abs(total - 1.0) > PROB_TOL:
            raise DistributionError(f"probabilities sum to {total!r}, not 1")
        merged: dict[float, float] = {}
        for v, p in zip(values, probs):
            if p > 0:
                merged[v] = merged.get(v, 0.0) + p / total
        self.values = np.array(sorted(merged))
        self.probs = np.array([merged[v] for v in self.values])
        self._cum = np.cumsum(self.probs)
        self._cum[-1] = 1.0

    def cdf(self, x):
        i = np.searchsorted(self.values, x, side="right")
        return float(self._cum[i - 1]) if i > 0 else 0.0

    def atom(self, x):
        i = np.searchsorted(self.values, x)
        if i < len(self.values) and self.values[i] == x:
            return float(self.probs[i])
        return 0.0

    def survival(self, x):
        i = np.searchsorted(self.values, x, side="right")
        return float(self.probs[i:].sum())

    def quantile(self, q):
        if q <= 0:
            return float(self.values[0])
        i = int(np.searchsorted(self._cum, q - 1e-15, side="left"))
        return float(self.values[min(i, len(self.values) - 1)])

    def quantiles(self, q):
        q = np.asarray(q, dtype=float)
        i = np.searchsorted(self._cum, q - 1e-15, side="left")
        return self.values[np.minimum(i, len(self.values) - 1)]

    @property
    def mean(self):
        return float(np.dot(self.values, self.probs))

    @property
    def ess_inf(self):
        return float(self.values[0])

    @property
    def ess_sup(self):
        return float(self.values[-1])

    def upper_partial(self, t):
        return float(np.dot(np.maximum(self.values - t, 0.0), self.probs))

    def support(self):
        return [(float(v), float(p)) for v, p in zip(self.values, self.probs)]

    def to_dict(self):
        return {"type": "discrete", "values": self.values.tolist(), "probs": self.probs.tolist()}

    def __repr__(self):
        return f"Discrete({self.values.tolist()}, {self.probs.tolist()})"


@dataclass(frozen=True)
class Uniform(ValueDistribution):
    lo: float
    hi: float
    kind = "uniform"

    def __post_init__(self):
        if not (0 <= self.lo < self.hi) or math.isinf(self.hi):
            raise DistributionError(f"uniform needs 0 <= lo < hi < inf, got [{self.lo}, {self.hi}]")

    def cdf(self, x):
        return min(max((x - self.lo) / (self.hi - self.lo), 0.0), 1.0)

    def quantile(self, q):
        return self.lo + min(max(q, 0.0), 1.0) * (self.hi - self.lo)

    def quantiles(self, q):
        return self.lo + np.clip(q, 0.0, 1.0) * (self.hi - self.lo)

    @property
    def mean(self):
        return 0.5 * (self.lo + self.hi)

    @property
    def ess_inf(self):
        return float(self.lo)

    @property
    def ess_sup(self):
        return float(self.hi)

    def upper_partial(self, t):
        if t <= self.lo:
            return self.mean - t
        if t >= self.hi:
            return 0.0
        return (self.hi - t) ** 2 / (2.0 * (self.hi - self.lo))

    def to_dict(self):
        return {"type": "uniform", "lo": self.lo, "hi": self.hi}


@dataclass(frozen=True)
class Exponential(ValueDistribution):
    rate: float
    kind = "exponential"

    def __post_init__(self):
        if not (self.rate > 0) or math.isinf(self.rate):
            raise DistributionError(f"exponential rate must be positive and finite, got {self.rate}")

    def cdf(self, x):
        return 0.0 if x <= 0 else -math.expm1(-self.rate * x)

    def survival(self, x):
        return 1.0 if x <= 0 else math.exp(-self.rate * x)

    def quantile(self, q):
        if q >= 1:
            return math.inf
        return -math.log1p(-max(q, 0.0)) / self.rate

    def quantiles(self, q):
        q = np.clip(np.asarray(q, dtype=float), 0.0, 1.0)
        with np.errstate(divide="ignore"):
            return -np.log1p(-q) / self.rate

    @property
    def mean(self):
        return 1.0 / self.rate

    @property
    def ess_inf(self):
        return 0.0

    @property
    def ess_sup(self):
        return math.inf

    def upper_partial(self, t):
        if t <= 0:
            return self.mean - t
        return math.exp(-self.rate * t) / self.rate

    def to_dict(self):
        return {"type": "exponential", "rate": self.rate}


@dataclass(frozen=True)
class TruncatedPareto(ValueDistribution):
    """Pareto(shape) on [scale, inf) conditioned on X <= cap."""

    shape: float
    cap: float
    scale: float = 1.0
    kind = "pareto"

    def __post_init__(self):
        if not (self.shape > 0) or not (0 < self.scale < self.cap) or math.isinf(self.cap):
            raise DistributionError("pareto needs shape > 0 and 0 < scale < cap < inf")

    @property
    def _norm(self):
        return 1.0 - (self.scale / self.cap) ** self.shape

    def cdf(self, x):
        if x <= self.scale:
            return 0.0
        if x >= self.cap:
            return 1.0
        return (1.0 - (self.scale / x) ** self.shape) / self._norm

    def quantile(self, q):
        q = min(max(q, 0.0), 1.0)
        return self.scale * (1.0 - q * self._norm) ** (-1.0 / self.shape)

    def quantiles(self, q):
        q = np.clip(np.asarray(q, dtype=float), 0.0, 1.0)
        return self.scale * (1.0 - q * self._norm) ** (-1.0 / self.shape)

    @property
    def mean(self):
        a, s, c = self.shape, self.scale, self.cap
        if a == 1:
            body = s * math.log(c / s)
        else:
            body = a * s ** a * (s ** (1 - a) - c ** (1 - a)) / (a - 1)
        return body / self._norm

    @property
    def ess_inf(self):
        return float(self.scale)

    @property
    def ess_sup(self):
        return float(self.cap)

    def to_dict(self):
        out = {"type": "pareto", "shape": self.shape, "cap": self.cap}
        if self.scale != 1.0:
            out["scale"] = self.scale
        return out


def _num(d: dict, key: str, where: str) -> float:
    if key not in d:
        raise DistributionError(f"{where}: missing field {key!r}")
    v = d[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise DistributionError(f"{where}.{key}: expected a number, got {v!r}")
    return float(v)


def from_dict(d: dict, where: str = "distribution") -> ValueDistribution:
    if not isinstance(d, dict) or "type" not in d:
        raise DistributionError(f"{where}: expected an object with a 'type' field")
    kind = d["type"]
    try:
        if kind == "point":
            return PointMass(_num(d, "value", where))
        if kind == "discrete":
            vals, probs = d.get("values"), d.get("probs")
            if not isinstance(vals, list) or not isinstance(probs, list):
                raise DistributionError(f"{where}: discrete law needs 'values' and 'probs' lists")
            return Discrete(vals, probs)
        if kind == "uniform":
            return Uniform(_num(d, "lo", where), _num(d, "hi", where))
        if kind == "exponential":
            return Exponential(_num(d, "rate", where))
        if kind == "pareto":
            scale = _num(d, "scale", where) if "scale" in d else 1.0
            return TruncatedPareto(_num(d, "shape", where), _num(d, "cap", where), scale)
    except DistributionError as exc:
        if str(exc).startswith(where):
            raise
        raise DistributionError(f"{where}: {exc}") from None
    raise DistributionError(f"{where}.type: unknown distribution type {kind!r}")


def quantile(d: ValueDistribution, q: float) -> float:
    if not 0 <= q <= 1:
        raise DistributionError(f"quantile level must lie in [0, 1], got {q}")
    return d.quantile(q)


def tail_params(d: ValueDistribution, p: float) -> tuple[float, float]:
    """Threshold tau and tie probability theta with P[X > tau] + theta P[X = tau] = p."""
    if p <= 0:
        return math.inf, 0.0
    p = min(p, 1.0)
    tau = d.quantile(1.0 - p)
    above = d.survival(tau)
    at = d.atom(tau)
    theta = 0.0 if at <= 0 else min(max((p - above) / at, 0.0), 1.0)
    return tau, theta


def tail_expectation(d: ValueDistribution, p: float) -> float:
    """Mean of the top-p probability mass, E[X | X >= F^-1(1-p)] with ties split."""
    if not 0 <= p <= 1:
        raise DistributionError(f"tail probability must lie in [0, 1], got {p}")
    if p == 0:
        if math.isinf(d.ess_sup):
            raise DistributionError("unbounded tail")
        return d.ess_sup
    if p == 1:
        return d.mean
    tau, _ = tail_params(d, p)
    return tau + d.upper_partial(tau) / p
