"""Minimise the expected cost over the aimed arrival ``t`` and period ``A``.

The search is a dense grid scan followed by golden-section line searches
confined to the grid cell around the incumbent. The objective is piecewise
smooth: every kink or jump sits on a line ``k A - t = b`` for some breakpoint
``b`` of the delay law, so besides the two coordinate axes the refinement also
searches along the active ``(k, 1)`` ridge directions.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from functools import lru_cache

import numpy as np

from .cost import (
    DEFAULT_TOL,
    CostBreakdown,
    CostRates,
    ScheduleParams,
    combine_grid,
    cost_components_grid,
    evaluate,
)
from .distributions import DelayDistribution

_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0
_JUMP_FACTOR = 10.0
_MAX_SWEEPS = 50
# golden-section brackets are closed far below refine_tol so that minima
# sitting on a kink are located to near machine precision
_LINE_TOL_FACTOR = 1e-4


@dataclass(frozen=True)
class SearchDomain:
    t_range: tuple[float, float]
    A_range: tuple[float, float]
    grid: tuple[int, int] = (400, 400)
    refine_tol: float = 1e-6

    def __post_init__(self):
        t_lo, t_hi = self.t_range
        A_lo, A_hi = self.A_range
        n_t, n_A = self.grid
        if not all(math.isfinite(v) for v in (t_lo, t_hi, A_lo, A_hi)):
            raise ValueError("domain bounds must be finite")
        if not 0 <= t_lo <= t_hi:
            raise ValueError(f"need 0 <= t_lo <= t_hi, got {self.t_range}")
        if not 0 < A_lo <= A_hi:
            raise ValueError(f"need 0 < A_lo <= A_hi, got {self.A_range}")
        for n, lo, hi, name in ((n_t, t_lo, t_hi, "t"), (n_A, A_lo, A_hi, "A")):
            if int(n) != n or n < 1 or (n == 1 and lo != hi):
                raise ValueError(f"{name} grid needs >= 2 nodes (1 only for a degenerate range), got {n}")
        if not self.refine_tol > 0:
            raise ValueError("refine_tol must be positive")
        object.__setattr__(self, "t_range", (float(t_lo), float(t_hi)))
        object.__setattr__(self, "A_range", (float(A_lo), float(A_hi)))
        object.__setattr__(self, "grid", (int(n_t), int(n_A)))

    @classmethod
    def default(cls, delay: DelayDistribution, **overrides) -> "SearchDomain":
        q = delay.quantile(0.999)
        t_hi = max(q, 0.0)
        kw = dict(t_range=(0.0, t_hi), A_range=(1e-3, t_hi + q + 1.0))
        kw.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**kw)

    def t_nodes(self) -> np.ndarray:
        return np.linspace(*self.t_range, self.grid[0])

    def A_nodes(self) -> np.ndarray:
        return np.linspace(*self.A_range, self.grid[1])


@dataclass(frozen=True)
class GridPoint:
    t: float
    A: float
    cost: float
    t_index: int
    A_index: int


@dataclass(frozen=True)
class OptimizationResult:
    t_star: float
    A_star: float
    cost_star: float
    breakdown: CostBreakdown
    evaluations: int
    grid_best: GridPoint
    active_bounds: tuple[str, ...] = field(default=())

    def to_dict(self) -> dict:
        d = asdict(self)
        d["breakdown"] = self.breakdown.to_dict()
        d["active_bounds"] = list(self.active_bounds)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "OptimizationResult":
        d = dict(d)
        d["breakdown"] = CostBreakdown.from_dict(d["breakdown"])
        d["grid_best"] = GridPoint(**d["grid_best"])
        d["active_bounds"] = tuple(d["active_bounds"])
        return cls(**d)


@lru_cache(maxsize=16)
def _components(delay: DelayDistribution, domain: SearchDomain, tol: float):
    waiting, visits = cost_components_grid(delay, domain.t_nodes(), domain.A_nodes(), tol)
    waiting.setflags(write=False)
    visits.setflags(write=False)
    return waiting, visits


def cost_surface(delay: DelayDistribution, rates: CostRates, domain: SearchDomain,
                 tol: float = DEFAULT_TOL) -> np.ndarray:
    """Objective on every grid node, shape ``(n_A, n_t)``.

    The waiting/visit grids are cached per (law, domain, tol), so sweeping the
    rates only recombines them.
    """
    waiting, visits = _components(delay, domain, tol)
    return combine_grid(waiting, visits, domain.A_nodes(), rates)


def brute_force_grid(delay: DelayDistribution, rates: CostRates, domain: SearchDomain,
                     tol: float = DEFAULT_TOL) -> GridPoint:
    """Exhaustive scan of the grid; first strict minimum in (A, then t) order wins."""
    surface = cost_surface(delay, rates, domain, tol)
    t_nodes, A_nodes = domain.t_nodes(), domain.A_nodes()
    best = None
    for j in range(surface.shape[0]):
        row = surface[j].tolist()
        for i, c in enumerate(row):
            if best is None or c < best[0]:
                best = (c, i, j)
    c, i, j = best
    return GridPoint(float(t_nodes[i]), float(A_nodes[j]), c, i, j)


class _Objective:
    def __init__(self, delay, rates, tol):
        self.delay, self.rates, self.tol = delay, rates, tol
        self.calls = 0

    def __call__(self, t: float, A: float) -> float:
        self.calls += 1
        w, v = cost_components_grid(self.delay, [t], [A], self.tol)
        return float(combine_grid(w, v, [A], self.rates)[0, 0])


def _segment(x, d, box):
    """Parameter range ``[s_lo, s_hi]`` keeping ``x + s d`` inside ``box``."""
    s_lo, s_hi = -math.inf, math.inf
    for xi, di, (lo, hi) in zip(x, d, box):
        if di == 0:
            continue
        a, b = (lo - xi) / di, (hi - xi) / di
        if a > b:
            a, b = b, a
        s_lo, s_hi = max(s_lo, a), min(s_hi, b)
    return min(s_lo, 0.0), max(s_hi, 0.0)


def _line_search(f, x, fx, d, box, slope, tol):
    """Guarded golden-section search along ``x + s d``.

    Keeps the best point seen. A cost difference between neighbouring probes
    larger than ``_JUMP_FACTOR`` times what ``slope`` predicts marks a
    discontinuity inside the bracket; the bracket is then abandoned.
    """
    s_lo, s_hi = _segment(x, d, box)
    if s_hi - s_lo <= tol:
        return x, fx

    def at(s):
        return (x[0] + s * d[0], x[1] + s * d[1])

    def jump(fp, fq, p, q):
        allowance = _JUMP_FACTOR * slope * abs(q - p) + 1e-12 * max(1.0, abs(fp), abs(fq))
        return abs(fq - fp) > allowance

    best_s, best_f = 0.0, fx
    a, b = s_lo, s_hi
    c = b - _INV_PHI * (b - a)
    e = a + _INV_PHI * (b - a)
    fc, fe = f(*at(c)), f(*at(e))
    for s, v in ((c, fc), (e, fe)):
        if v < best_f:
            best_s, best_f = s, v
    while b - a > tol:
        if jump(fc, fe, c, e):
            # pin the jump down so the kept endpoint sits right against it
            p, fp, q, fq = c, fc, e, fe
            while q - p > tol:
                m = 0.5 * (p + q)
                fm = f(*at(m))
                if fm < best_f:
                    best_s, best_f = m, fm
                if jump(fp, fm, p, m):
                    q, fq = m, fm
                else:
                    p, fp = m, fm
            break
        if fc <= fe:
            b, e, fe = e, c, fc
            c = b - _INV_PHI * (b - a)
            fc = f(*at(c))
            s_new, f_new = c, fc
        else:
            a, c, fc = c, e, fe
            e = a + _INV_PHI * (b - a)
            fe = f(*at(e))
            s_new, f_new = e, fe
        if f_new < best_f:
            best_s, best_f = s_new, f_new
    return at(best_s), best_f


def _ridge_directions(delay, t, A, max_k=64):
    """Unit directions ``(k, 1)`` of kink lines ``k A - t = b`` passing near ``(t, A)``."""
    b = np.asarray(delay.breakpoints(), dtype=float)
    if b.size == 0:
        return []
    k = np.rint((t + b) / A)
    near = (k >= 1) & (k <= max_k) & (np.abs(k * A - t - b) <= 1e-6 * np.maximum(1.0, k * A))
    dirs = []
    for kk in sorted(set(k[near].astype(int).tolist())):
        norm = math.hypot(kk, 1.0)
        dirs.append((kk / norm, 1.0 / norm))
    return dirs


def _local_slopes(surface, t_nodes, A_nodes, i, j):
    def secant(values, nodes, idx):
        out = 0.0
        for lo, hi in ((idx - 1, idx), (idx, idx + 1)):
            if 0 <= lo and hi < len(nodes) and nodes[hi] > nodes[lo]:
                out = max(out, abs(values[hi] - values[lo]) / (nodes[hi] - nodes[lo]))
        return out
    return secant(surface[j, :], t_nodes, i), secant(surface[:, i], A_nodes, j)


def optimize(delay: DelayDistribution, rates: CostRates, domain: SearchDomain | None = None,
             tol: float = DEFAULT_TOL) -> OptimizationResult:
    domain = domain or SearchDomain.default(delay)
    t_nodes, A_nodes = domain.t_nodes(), domain.A_nodes()
    surface = cost_surface(delay, rates, domain, tol)
    flat = int(np.argmin(surface))  # C order: smallest A first, then smallest t
    j, i = divmod(flat, surface.shape[1])
    grid_best = GridPoint(float(t_nodes[i]), float(A_nodes[j]), float(surface[j, i]), i, j)

    h_t = (domain.t_range[1] - domain.t_range[0]) / max(len(t_nodes) - 1, 1)
    h_A = (domain.A_range[1] - domain.A_range[0]) / max(len(A_nodes) - 1, 1)

    def cell(x):
        # one grid spacing either side of the incumbent, clipped to the domain
        return (
            (max(x[0] - h_t, domain.t_range[0]), min(x[0] + h_t, domain.t_range[1])),
            (max(x[1] - h_A, domain.A_range[0]), min(x[1] + h_A, domain.A_range[1])),
        )

    slope_t, slope_A = _local_slopes(surface, t_nodes, A_nodes, i, j)
    line_tol = domain.refine_tol * _LINE_TOL_FACTOR
    # refine on rates scaled to max 1, so proportional rate pairs follow the same path
    scale = max(rates.ch, rates.cr) or 1.0
    f = _Objective(delay, CostRates(rates.ch / scale, rates.cr / scale), tol)
    slope_t, slope_A = slope_t / scale, slope_A / scale

    x0 = (grid_best.t, grid_best.A)
    x, fx = x0, f(*x0)
    for _ in range(_MAX_SWEEPS):
        start, f_start = x, fx
        dirs = [(1.0, 0.0), (0.0, 1.0)] + _ridge_directions(delay, *x)
        box = cell(x)
        for d in dirs:
            slope = abs(d[0]) * slope_t + abs(d[1]) * slope_A
            x, fx = _line_search(f, x, fx, d, box, slope, line_tol)
        # pattern move along the net displacement of this sweep (valley floors)
        dx, dA = x[0] - start[0], x[1] - start[1]
        norm = math.hypot(dx, dA)
        if norm > line_tol:
            d = (dx / norm, dA / norm)
            slope = abs(d[0]) * slope_t + abs(d[1]) * slope_A
            x, fx = _line_search(f, x, fx, d, cell(x), slope, line_tol)
        moved = math.hypot(x[0] - start[0], x[1] - start[1])
        if moved <= line_tol or f_start - fx <= 1e-15 * max(1.0, abs(fx)):
            break

    t_star, A_star = x
    cost_star = grid_best.cost if x == x0 else min(scale * fx, grid_best.cost)
    active = []
    for name, val, bound in (("t_lo", t_star, domain.t_range[0]), ("t_hi", t_star, domain.t_range[1]),
                             ("A_lo", A_star, domain.A_range[0]), ("A_hi", A_star, domain.A_range[1])):
        if abs(val - bound) <= domain.refine_tol:
            active.append(name)
    return OptimizationResult(
        t_star=t_star,
        A_star=A_star,
        cost_star=cost_star,
        breakdown=evaluate(delay, ScheduleParams(t_star, A_star), rates, tol),
        evaluations=surface.size + f.calls,
        grid_best=grid_best,
        active_bounds=tuple(active),
    )
