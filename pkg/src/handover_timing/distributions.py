"""Human delay laws and the arrival law ``T = t + Y``.

Every distribution exposes a scalar interface (``cdf``, ``survival``,
``quantile``, ``sample``, ``mean``) and vectorised counterparts used by the
grid optimiser and the simulator. Sampling is always inverse transform from a
single uniform stream.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np


class DelayDistribution:
    """Base class for a delay law ``F_Y``.

    Subclasses are frozen dataclasses, so instances are hashable and safe to
    share between threads.
    """

    #: True when the CDF is a pure step function.
    discrete = False

    def cdf(self, y: float) -> float:
        raise NotImplementedError

    def cdf_left(self, y: float) -> float:
        """``P(Y < y)``; equals ``cdf`` for continuous laws."""
        return self.cdf(y)

    def survival(self, y: float) -> float:
        raise NotImplementedError

    def survival_left(self, y: float) -> float:
        """``P(Y >= y)``."""
        return self.survival(y)

    def quantile(self, p: float) -> float:
        raise NotImplementedError

    def mean(self) -> float:
        raise NotImplementedError

    def support_lower(self) -> float:
        raise NotImplementedError

    def breakpoints(self) -> Sequence[float]:
        """Sorted points where the CDF is not smooth."""
        return ()

    def survival_array(self, y: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def quantile_array(self, u: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def sample(self, rng: np.random.Generator) -> float:
        return self.quantile(float(rng.random()))

    def _check_p(self, p: float) -> None:
        if not 0.0 <= p < 1.0:
            raise ValueError(f"quantile level must lie in [0, 1), got {p!r}")

    def _snap(self, q: float, p: float) -> float:
        """Move an analytic inverse to the smallest float ``y`` with ``cdf(y) >= p``."""
        step = 1e-12 * max(1.0, abs(q))
        hi = q
        while self.cdf(hi) < p:
            hi += step
            step *= 2.0
        lo = math.nextafter(hi, -math.inf)
        step = 1e-12 * max(1.0, abs(q))
        while self.cdf(lo) >= p:
            lo -= step
            step *= 2.0
        # invariant: cdf(lo) < p <= cdf(hi)
        while math.nextafter(lo, math.inf) < hi:
            mid = 0.5 * (lo + hi)
            if mid <= lo or mid >= hi:
                mid = math.nextafter(lo, math.inf)
            if self.cdf(mid) >= p:
                hi = mid
            else:
                lo = mid
        return hi


@dataclass(frozen=True)
class UniformDelay(DelayDistribution):
    low: float = 0.0
    high: float = 1.0

    def __post_init__(self):
        if not (math.isfinite(self.low) and math.isfinite(self.high)) or self.high <= self.low:
            raise ValueError(f"uniform delay needs low < high, got ({self.low}, {self.high})")

    @property
    def width(self) -> float:
        return self.high - self.low

    def cdf(self, y):
        if y <= self.low:
            return 0.0
        if y >= self.high:
            return 1.0
        return (y - self.low) / self.width

    def survival(self, y):
        if y <= self.low:
            return 1.0
        if y >= self.high:
            return 0.0
        return (self.high - y) / self.width

    def quantile(self, p):
        self._check_p(p)
        if p == 0.0:
            return self.low
        return self._snap(self.low + p * self.width, p)

    def mean(self):
        return 0.5 * (self.low + self.high)

    def support_lower(self):
        return self.low

    def breakpoints(self):
        return (self.low, self.high)

    def survival_array(self, y):
        return np.clip((self.high - y) / self.width, 0.0, 1.0)

    def quantile_array(self, u):
        return self.low + u * self.width

    def __str__(self):
        if (self.low, self.high) == (0.0, 1.0):
            return "uniform"
        return f"uniform:{self.low!r},{self.high!r}"


@dataclass(frozen=True)
class ExponentialDelay(DelayDistribution):
    rate: float = 1.0

    def __post_init__(self):
        if not (math.isfinite(self.rate) and self.rate > 0):
            raise ValueError(f"exponential rate must be positive, got {self.rate!r}")

    def cdf(self, y):
        if y <= 0.0:
            return 0.0
        return -math.expm1(-self.rate * y)

    def survival(self, y):
        if y <= 0.0:
            return 1.0
        return math.exp(-self.rate * y)

    def quantile(self, p):
        self._check_p(p)
        if p == 0.0:
            return 0.0
        return self._snap(-math.log1p(-p) / self.rate, p)

    def mean(self):
        return 1.0 / self.rate

    def support_lower(self):
        return 0.0

    def breakpoints(self):
        return (0.0,)

    def survival_array(self, y):
        return np.exp(-self.rate * np.maximum(y, 0.0))

    def quantile_array(self, u):
        return -np.log1p(-u) / self.rate

    def __str__(self):
        return "exp" if self.rate == 1.0 else f"exp:{self.rate!r}"


@dataclass(frozen=True)
class PointDelay(DelayDistribution):
    """Deterministic delay ``Y = value``."""

    value: float = 0.0
    discrete = True

    def __post_init__(self):
        if not math.isfinite(self.value):
            raise ValueError("deterministic delay must be finite")

    def cdf(self, y):
        return 1.0 if y >= self.value else 0.0

    def cdf_left(self, y):
        return 1.0 if y > self.value else 0.0

    def survival(self, y):
        return 0.0 if y >= self.value else 1.0

    def survival_left(self, y):
        return 0.0 if y > self.value else 1.0

    def quantile(self, p):
        self._check_p(p)
        return self.value

    def mean(self):
        return self.value

    def support_lower(self):
        return self.value

    def breakpoints(self):
        return (self.value,)

    def survival_array(self, y):
        return (np.asarray(y) < self.value).astype(float)

    def quantile_array(self, u):
        return np.full(np.shape(u), self.value)

    def __str__(self):
        return f"det:{self.value!r}"


@dataclass(frozen=True)
class EmpiricalDelay(DelayDistribution):
    """Right-continuous step CDF over observed delays (no smoothing)."""

    samples: tuple[float, ...]
    discrete = True

    def __post_init__(self):
        if len(self.samples) == 0:
            raise ValueError("empirical delay needs at least one sample")
        values = tuple(sorted(float(s) for s in self.samples))
        if not all(math.isfinite(v) for v in values):
            raise ValueError("empirical samples must be finite")
        object.__setattr__(self, "samples", values)
        object.__setattr__(self, "_array", np.array(values))

    @property
    def n(self) -> int:
        return len(self.samples)

    def cdf(self, y):
        return bisect.bisect_right(self.samples, y) / self.n

    def cdf_left(self, y):
        return bisect.bisect_left(self.samples, y) / self.n

    def survival(self, y):
        return (self.n - bisect.bisect_right(self.samples, y)) / self.n

    def survival_left(self, y):
        return (self.n - bisect.bisect_left(self.samples, y)) / self.n

    def quantile(self, p):
        if not 0.0 <= p <= 1.0:
            raise ValueError(f"quantile level must lie in [0, 1], got {p!r}")
        # smallest sample with i/n >= p
        i = max(math.ceil(p * self.n) - 1, 0)
        return self.samples[i]

    def mean(self):
        return math.fsum(self.samples) / self.n

    def support_lower(self):
        return self.samples[0]

    def breakpoints(self):
        return self.samples

    def survival_array(self, y):
        return (self.n - np.searchsorted(self._array, y, side="right")) / self.n

    def quantile_array(self, u):
        idx = np.maximum(np.ceil(u * self.n).astype(np.int64) - 1, 0)
        return self._array[idx]

    def __str__(self):
        return f"empirical[{self.n}]"


def uniform_unit() -> UniformDelay:
    return UniformDelay(0.0, 1.0)


def exponential_unit() -> ExponentialDelay:
    return ExponentialDelay(1.0)


@dataclass(frozen=True)
class ArrivalLaw:
    """Actual human arrival ``T = t + Y`` for an aimed arrival ``t``."""

    delay: DelayDistribution
    t: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.t) and self.t >= 0):
            raise ValueError(f"aimed arrival t must be finite and >= 0, got {self.t!r}")

    def cdf(self, x: float) -> float:
        return self.delay.cdf(x - self.t)

    def cdf_left(self, x: float) -> float:
        return self.delay.cdf_left(x - self.t)

    def survival(self, x: float) -> float:
        return self.delay.survival(x - self.t)

    def survival_left(self, x: float) -> float:
        return self.delay.survival_left(x - self.t)

    def mean(self) -> float:
        return self.t + self.delay.mean()

    def support_lower(self) -> float:
        return self.t + self.delay.support_lower()

    def breakpoints(self) -> list[float]:
        return [self.t + b for b in self.delay.breakpoints()]


def load_samples(path: str | Path) -> tuple[float, ...]:
    """Read one decimal delay per line; blank lines and ``#`` comments are skipped."""
    values = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            try:
                values.append(float(line))
            except ValueError:
                raise ValueError(f"{path}:{lineno}: not a number: {line!r}") from None
    return tuple(values)


def parse_distribution(text: str) -> DelayDistribution:
    """Parse ``uniform``, ``exp``, ``uniform:a,b``, ``exp:rate``, ``det:c`` or ``empirical:<path>``."""
    name, _, arg = text.strip().partition(":")
    name = name.lower()

    def numbers(expected):
        try:
            vals = [float(v) for v in arg.split(",")]
        except ValueError:
            raise ValueError(f"bad numeric argument in distribution {text!r}") from None
        if len(vals) != expected:
            raise ValueError(f"distribution {name!r} takes {expected} number(s), got {text!r}")
        return vals

    if name == "uniform":
        return uniform_unit() if not arg else UniformDelay(*numbers(2))
    if name in ("exp", "exponential"):
        return exponential_unit() if not arg else ExponentialDelay(*numbers(1))
    if name == "det":
        return PointDelay(*numbers(1))
    if name == "empirical":
        if not arg:
            raise ValueError("empirical distribution needs a file path")
        return EmpiricalDelay(load_samples(arg))
    raise ValueError(f"unknown distribution {text!r}")
