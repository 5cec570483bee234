"""Monte Carlo replay of repeated handover cycles.

Each cycle draws one delay by inverse transform from the counter-based stream
``(seed, cycle index)``. Cycles are processed in fixed-size blocks whose
partial aggregates are merged in block order, so a report does not depend on
how many worker threads computed the blocks.
"""

from __future__ import annotations

import enum
import math
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .cost import CostRates, visit_count_array
from .distributions import ArrivalLaw
from .rng import uniforms

BLOCK_SIZE = 1 << 16


class Protocol(str, enum.Enum):
    ROBOT_NEVER_WAITS = "never-waits"
    FIRST_ARRIVAL_WAITS = "first-waits"


@dataclass(frozen=True)
class SimConfig:
    law: ArrivalLaw
    A: float
    rates: CostRates
    protocol: Protocol = Protocol.ROBOT_NEVER_WAITS
    cycles: int = 100_000
    seed: int = 0
    # robot idle cost per time unit under first-waits; None means C_R / A
    robot_wait_rate: float | None = None
    recalibration_threshold: float | None = None

    def __post_init__(self):
        if not (math.isfinite(self.A) and self.A > 0):
            raise ValueError(f"A must be positive, got {self.A!r}")
        if int(self.cycles) != self.cycles or self.cycles < 1:
            raise ValueError(f"cycles must be a positive integer, got {self.cycles!r}")
        if self.robot_wait_rate is not None and not self.robot_wait_rate >= 0:
            raise ValueError("robot_wait_rate must be >= 0")
        object.__setattr__(self, "protocol", Protocol(self.protocol))

    @property
    def effective_robot_wait_rate(self) -> float:
        if self.robot_wait_rate is None:
            return self.rates.cr / self.A
        return self.robot_wait_rate


@dataclass(frozen=True)
class SimReport:
    mean_cost: float
    se_cost: float
    mean_waiting: float
    mean_visits: float
    hist_visits: dict[int, int] = field(default_factory=dict)
    recalibrations: int = 0
    cycles_run: int = 0

    def to_dict(self) -> dict:
        return {
            "mean_cost": self.mean_cost,
            "se_cost": self.se_cost,
            "mean_waiting": self.mean_waiting,
            "mean_visits": self.mean_visits,
            "hist_visits": {str(k): v for k, v in sorted(self.hist_visits.items())},
            "recalibrations": self.recalibrations,
            "cycles_run": self.cycles_run,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SimReport":
        d = dict(d)
        d["hist_visits"] = {int(k): int(v) for k, v in d["hist_visits"].items()}
        return cls(**d)


@dataclass
class _Moments:
    """Count, mean and centred sum of squares, merged with the pairwise update."""

    n: int = 0
    mean: float = 0.0
    m2: float = 0.0

    @classmethod
    def of(cls, x: np.ndarray) -> "_Moments":
        # shifting by the first value keeps constant samples exact
        shift = float(x[0])
        d = x - shift
        mean_d = float(d.mean())
        return cls(x.size, shift + mean_d, float(((d - mean_d) ** 2).sum()))

    def merge(self, other: "_Moments") -> None:
        if other.n == 0:
            return
        if self.n == 0:
            self.n, self.mean, self.m2 = other.n, other.mean, other.m2
            return
        n = self.n + other.n
        delta = other.mean - self.mean
        self.mean += delta * other.n / n
        self.m2 += other.m2 + delta * delta * self.n * other.n / n
        self.n = n


@dataclass
class _Partial:
    cost: _Moments
    waiting: _Moments
    visits_total: int
    hist: Counter
    recalibrations: int


def _run_block(config: SimConfig, start: int, count: int) -> _Partial:
    law, A, rates = config.law, config.A, config.rates
    T = law.t + law.delay.quantile_array(uniforms(config.seed, start, count))
    if config.protocol is Protocol.ROBOT_NEVER_WAITS:
        visits = visit_count_array(T, A)
        waiting = A * visits - T
        cost = rates.ch * waiting + (rates.cr / A) * visits
    else:
        visits = np.ones(count, dtype=np.int64)
        waiting = np.maximum(A - T, 0.0)
        cost = rates.ch * waiting + config.effective_robot_wait_rate * np.maximum(T - A, 0.0)
    values, counts = np.unique(visits, return_counts=True)
    recal = 0
    if config.recalibration_threshold is not None:
        recal = int(np.count_nonzero(waiting > config.recalibration_threshold))
    return _Partial(
        cost=_Moments.of(cost),
        waiting=_Moments.of(waiting),
        visits_total=int(visits.sum()),
        hist=Counter(dict(zip(values.tolist(), counts.tolist()))),
        recalibrations=recal,
    )


def simulate(config: SimConfig, workers: int = 1) -> SimReport:
    blocks = [(s, min(BLOCK_SIZE, config.cycles - s)) for s in range(0, config.cycles, BLOCK_SIZE)]
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda b: _run_block(config, *b), blocks))
    else:
        parts = [_run_block(config, *b) for b in blocks]

    cost, waiting = _Moments(), _Moments()
    hist: Counter = Counter()
    visits_total = recal = 0
    for p in parts:
        cost.merge(p.cost)
        waiting.merge(p.waiting)
        hist.update(p.hist)
        visits_total += p.visits_total
        recal += p.recalibrations
    n = cost.n
    se = math.sqrt(cost.m2 / (n - 1) / n) if n > 1 else 0.0
    return SimReport(
        mean_cost=cost.mean,
        se_cost=se,
        mean_waiting=waiting.mean,
        mean_visits=visits_total / n,
        hist_visits=dict(sorted(hist.items())),
        recalibrations=recal,
        cycles_run=n,
    )


def compare_protocols(law: ArrivalLaw, A: float, rates: CostRates, cycles: int, seed: int,
                      robot_wait_rate: float | None = None, workers: int = 1) -> tuple[SimReport, SimReport]:
    """Run both protocols on the same delay draws; returns ``(never_waits, first_waits)``."""
    base = dict(law=law, A=A, rates=rates, cycles=cycles, seed=seed, robot_wait_rate=robot_wait_rate)
    never = simulate(SimConfig(protocol=Protocol.ROBOT_NEVER_WAITS, **base), workers)
    first = simulate(SimConfig(protocol=Protocol.FIRST_ARRIVAL_WAITS, **base), workers)
    return never, first
