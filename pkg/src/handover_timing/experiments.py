"""Parameter sweeps over the human waiting cost, plus the uniform-case check."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass

import numpy as np

from .cost import DEFAULT_TOL, CostRates, ScheduleParams, closed_form_uniform, evaluate
from .distributions import DelayDistribution, uniform_unit
from .optimize import SearchDomain, optimize

SWEEP_COLUMNS = ("ch", "cr", "t_star", "a_star", "cost_star", "expected_waiting", "expected_visits")


def default_ch_values(n: int = 40, lo: float = 0.1, hi: float = 20.0) -> tuple[float, ...]:
    return tuple(float(v) for v in np.geomspace(lo, hi, n))


@dataclass(frozen=True)
class SweepSpec:
    delay: DelayDistribution
    domain: SearchDomain
    ch_values: tuple[float, ...] = default_ch_values()
    cr: float = 1.0

    def __post_init__(self):
        ch = tuple(float(v) for v in self.ch_values)
        if not ch:
            raise ValueError("ch_values must be nonempty")
        if any(not (math.isfinite(v) and v > 0) for v in ch):
            raise ValueError("ch_values must be finite and > 0")
        if any(b <= a for a, b in zip(ch, ch[1:])):
            raise ValueError("ch_values must be strictly increasing")
        object.__setattr__(self, "ch_values", ch)


@dataclass(frozen=True)
class SweepRow:
    ch: float
    cr: float
    t_star: float
    a_star: float
    cost_star: float
    expected_waiting: float
    expected_visits: float


def run_sweep(spec: SweepSpec, tol: float = DEFAULT_TOL) -> list[SweepRow]:
    rows = []
    for ch in spec.ch_values:
        res = optimize(spec.delay, CostRates(ch, spec.cr), spec.domain, tol)
        rows.append(SweepRow(ch, spec.cr, res.t_star, res.A_star, res.cost_star,
                             res.breakdown.expected_waiting, res.breakdown.expected_visits))
    return rows


def fmt(x: float) -> str:
    """Twelve significant digits, the serialisation used for every output file."""
    return f"{x:.12g}"


def round12(obj):
    if isinstance(obj, float):
        return float(fmt(obj))
    if isinstance(obj, dict):
        return {k: round12(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [round12(v) for v in obj]
    return obj


def rows_to_csv(rows: list[SweepRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SWEEP_COLUMNS)
    for r in rows:
        w.writerow([fmt(getattr(r, c)) for c in SWEEP_COLUMNS])
    return buf.getvalue()


def rows_to_json(rows: list[SweepRow]) -> str:
    return json.dumps([round12(asdict(r)) for r in rows], indent=2) + "\n"


def rows_from_csv(text: str) -> list[SweepRow]:
    return [SweepRow(**{k: float(v) for k, v in rec.items()}) for rec in csv.DictReader(io.StringIO(text))]


def rows_from_json(text: str) -> list[SweepRow]:
    return [SweepRow(**rec) for rec in json.loads(text)]


@dataclass(frozen=True)
class UniformCheck:
    A: float
    t: float
    published_waiting: float
    series_waiting: float
    published_visits: float
    series_visits: float

    @property
    def waiting_agrees(self) -> bool:
        return math.isclose(self.published_waiting, self.series_waiting, rel_tol=1e-9, abs_tol=1e-12)


def uniform_discrepancy(A_values, t: float = 0.0, tol: float = DEFAULT_TOL) -> list[UniformCheck]:
    """Published unit-uniform formulas next to the generic series values."""
    out = []
    rates = CostRates(1.0, 1.0)
    for A in A_values:
        p = ScheduleParams(t, float(A))
        pub = closed_form_uniform(p, rates)
        gen = evaluate(uniform_unit(), p, rates, tol)
        out.append(UniformCheck(float(A), t, pub.expected_waiting, gen.expected_waiting,
                                pub.expected_visits, gen.expected_visits))
    return out
