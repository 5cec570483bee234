"""Expected cost of a periodic-robot schedule.

The robot visits the handover point at ``A, 2A, 3A, ...``; the human arrives
at ``T = t + Y`` and waits for the next visit. Per realisation::

    N = max(1, ceil(T / A))        visits up to and including the productive one
    W = A * N - T                  human waiting time
    cost = C_H * W + (C_R / A) * N

The generic evaluators take the expectation for any delay law using only its
CDF/survival function. Closed forms for the two unit case studies are kept
alongside for cross-checking.
"""

from __future__ import annotations

import bisect
import enum
import math
import sys
from dataclasses import asdict, dataclass

import numpy as np

from .distributions import ArrivalLaw, DelayDistribution

DEFAULT_TOL = 1e-10
# survival level that defines the "end" of the delay law for the horizon cap
_HORIZON_LEVEL = 1e-14
_MAX_SIMPSON_DEPTH = 48


class ConvergenceError(RuntimeError):
    """The series did not reach its tolerance before the truncation cap."""


class Method(str, enum.Enum):
    CLOSED_FORM_UNIFORM = "ClosedFormUniform"
    CLOSED_FORM_EXPONENTIAL = "ClosedFormExponential"
    SERIES_QUADRATURE = "SeriesQuadrature"
    MONTE_CARLO = "MonteCarlo"


@dataclass(frozen=True)
class ScheduleParams:
    """Aimed human arrival ``t`` and robot period ``A``."""

    t: float
    A: float

    def __post_init__(self):
        if not (math.isfinite(self.t) and self.t >= 0):
            raise ValueError(f"t must be finite and >= 0, got {self.t!r}")
        if not (math.isfinite(self.A) and self.A > 0):
            raise ValueError(f"A must be positive, got {self.A!r}")


@dataclass(frozen=True)
class CostRates:
    """Human waiting cost per time unit ``ch`` and robot cost per visit ``cr``."""

    ch: float = 1.0
    cr: float = 1.0

    def __post_init__(self):
        for name in ("ch", "cr"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v >= 0):
                raise ValueError(f"{name} must be finite and >= 0, got {v!r}")

    def scaled(self, factor: float) -> "CostRates":
        return CostRates(self.ch * factor, self.cr * factor)


@dataclass(frozen=True)
class RealizedOutcome:
    N: int
    W: float
    cost: float


@dataclass(frozen=True)
class CostBreakdown:
    expected_waiting: float
    expected_visits: float
    total_cost: float
    method: Method
    truncation_terms: int = 0
    est_error: float = 0.0

    @property
    def unproductive_visits(self) -> float:
        """Expected visits at which the human was absent (diagnostic only)."""
        return self.expected_visits - 1.0

    def to_dict(self) -> dict:
        d = asdict(self)
        d["method"] = self.method.value
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "CostBreakdown":
        d = dict(d)
        d["method"] = Method(d["method"])
        return cls(**d)


def _combine(waiting: float, visits: float, A: float, rates: CostRates) -> float:
    return rates.ch * waiting + (rates.cr / A) * visits


def visit_count(T: float, A: float) -> int:
    """``max(1, ceil(T / A))`` with ``T == k * A`` counted as visit ``k``."""
    n = max(math.ceil(T / A), 1)
    # float division can land one off the ceiling; settle it on the products
    if n > 1 and (n - 1) * A >= T:
        n -= 1
    elif n * A < T:
        n += 1
    return n


def visit_count_array(T: np.ndarray, A: float) -> np.ndarray:
    n = np.maximum(np.ceil(T / A), 1.0)
    n = np.where((n > 1) & ((n - 1) * A >= T), n - 1, n)
    n = np.where(n * A < T, n + 1, n)
    return n.astype(np.int64)


def realized_cost(T: float, params: ScheduleParams, rates: CostRates) -> RealizedOutcome:
    if not math.isfinite(T):
        raise ValueError("arrival time must be finite")
    A = params.A
    n = visit_count(T, A)
    w = A * n - T
    return RealizedOutcome(N=n, W=w, cost=_combine(w, n, A, rates))


# -- adaptive Simpson -------------------------------------------------------

def _simpson_step(f, a, fa, m, fm, b, fb, whole, eps, noise, depth):
    lm = 0.5 * (a + m)
    rm = 0.5 * (m + b)
    flm = f(lm)
    frm = f(rm)
    left = (m - a) / 6.0 * (fa + 4.0 * flm + fm)
    right = (b - m) / 6.0 * (fm + 4.0 * frm + fb)
    delta = left + right - whole
    # also stop at the roundoff floor, so tiny tolerances cannot recurse 2**depth times
    if depth <= 0 or abs(delta) <= max(15.0 * eps, noise * (b - a)):
        return left + right + delta / 15.0, abs(delta) / 15.0
    lv, le = _simpson_step(f, a, fa, lm, flm, m, fm, left, 0.5 * eps, noise, depth - 1)
    rv, re = _simpson_step(f, m, fm, rm, frm, b, fb, right, 0.5 * eps, noise, depth - 1)
    return lv + rv, le + re


def adaptive_simpson(f, a: float, b: float, eps: float, fa=None, fb=None) -> tuple[float, float]:
    """Integrate ``f`` over ``[a, b]`` to absolute tolerance ``eps``.

    ``fa``/``fb`` override the endpoint values, which lets the caller pass
    one-sided limits for integrands with a jump at an endpoint.
    Returns ``(value, error_estimate)``.
    """
    if b <= a:
        return 0.0, 0.0
    fa = f(a) if fa is None else fa
    fb = f(b) if fb is None else fb
    m = 0.5 * (a + b)
    fm = f(m)
    whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    noise = 64 * sys.float_info.epsilon * max(abs(fa), abs(fm), abs(fb))
    return _simpson_step(f, a, fa, m, fm, b, fb, whole, eps, noise, _MAX_SIMPSON_DEPTH)


def _integrate_pieces(f, f_left, a, b, knots, eps):
    """Integrate a right-continuous ``f`` over ``[a, b]``, splitting at ``knots``."""
    lo_i = bisect.bisect_right(knots, a)
    hi_i = bisect.bisect_left(knots, b)
    points = [a, *knots[lo_i:hi_i], b]
    span = b - a
    value = err = 0.0
    for lo, hi in zip(points, points[1:]):
        v, e = adaptive_simpson(f, lo, hi, eps * (hi - lo) / span, fa=f(lo), fb=f_left(hi))
        value += v
        err += e
    return value, err


# -- generic series evaluator -----------------------------------------------

@dataclass(frozen=True)
class _Series:
    visits: float
    waiting: float
    terms: int
    visits_err: float
    waiting_err: float


def _horizon(law: ArrivalLaw, A: float) -> float:
    return law.t + law.delay.quantile(1.0 - _HORIZON_LEVEL) + 1e3 * A


def _series(law: ArrivalLaw, A: float, tol: float) -> _Series:
    if not (math.isfinite(A) and A > 0):
        raise ValueError(f"A must be positive, got {A!r}")
    if not tol > 0:
        raise ValueError("tol must be positive")
    knots = sorted(law.breakpoints())
    cap = _horizon(law, A)

    # first visit absorbs every arrival in (-inf, A]
    lower = law.support_lower()
    if lower < A:
        waiting, w_err = _integrate_pieces(law.cdf, law.cdf_left, lower, A, knots, tol * A)
    else:
        waiting, w_err = 0.0, 0.0

    visits = 1.0
    k = 1
    while True:
        tail = law.survival(k * A)
        visits += tail
        if tail * k < tol * visits:
            break
        a, b = k * A, (k + 1) * A
        if b > cap:
            raise ConvergenceError(
                f"series not converged after {k} terms (horizon {cap:g}, A={A:g}, tol={tol:g})")
        # E[(b - T) 1{a < T <= b}] = int_a^b (S(a) - S(s)) ds
        sa = tail
        v, e = _integrate_pieces(
            lambda s: sa - law.survival(s),
            lambda s: sa - law.survival_left(s),
            a, b, knots, tol * A)
        waiting += v
        w_err += e
        k += 1
    # geometric-style bound on the discarded tail
    v_tail = tail * k
    return _Series(visits, waiting, k, v_tail, w_err + A * v_tail)


def expected_visits(law: ArrivalLaw, A: float, tol: float = DEFAULT_TOL) -> float:
    return _series(law, A, tol).visits


def expected_waiting(law: ArrivalLaw, A: float, tol: float = DEFAULT_TOL) -> float:
    return _series(law, A, tol).waiting


def expected_cost(law: ArrivalLaw, A: float, rates: CostRates, tol: float = DEFAULT_TOL) -> CostBreakdown:
    s = _series(law, A, tol)
    return CostBreakdown(
        expected_waiting=s.waiting,
        expected_visits=s.visits,
        total_cost=_combine(s.waiting, s.visits, A, rates),
        method=Method.SERIES_QUADRATURE,
        truncation_terms=s.terms,
        est_error=rates.ch * s.waiting_err + (rates.cr / A) * s.visits_err,
    )


def evaluate(delay: DelayDistribution, params: ScheduleParams, rates: CostRates,
             tol: float = DEFAULT_TOL) -> CostBreakdown:
    return expected_cost(ArrivalLaw(delay, params.t), params.A, rates, tol)


# -- closed forms for the unit case studies -----------------------------------

def closed_form_exponential(params: ScheduleParams, rates: CostRates) -> CostBreakdown:
    """Unit-rate exponential delay.

    Exact for ``t <= A``; for ``t > A`` the formulas undercount the visits the
    robot makes before the aimed arrival and are returned as printed.
    """
    t, A = params.t, params.A
    ratio = math.exp(t) / math.expm1(A)
    visits = 1.0 + ratio
    waiting = A - (1.0 + t) + A * ratio
    return CostBreakdown(waiting, visits, _combine(waiting, visits, A, rates),
                         Method.CLOSED_FORM_EXPONENTIAL)


def closed_form_uniform(params: ScheduleParams, rates: CostRates) -> CostBreakdown:
    """Unit uniform delay, using the originally published expressions verbatim.

    Reference only: the waiting expression ``(A - A t + t^2) / 2`` matches the
    true expectation at ``t = 0`` only when ``1 / A`` is an integer, and the
    visit-count expression can even go negative for small ``A``. Use
    :func:`expected_cost` for actual values.
    """
    t, A = params.t, params.A
    waiting = (A - A * t + t * t) / 2.0
    c = math.ceil((1.0 + t) / A)
    visits = c * (1.0 + t - 0.5 * (c - 1)) - t
    return CostBreakdown(waiting, visits, _combine(waiting, visits, A, rates),
                         Method.CLOSED_FORM_UNIFORM)


def uniform_printed_total(params: ScheduleParams, rates: CostRates) -> float:
    """Published total for the uniform case, which charges ``C_r`` (not ``C_r/A``) per visit."""
    b = closed_form_uniform(params, rates)
    return rates.ch * b.expected_waiting + rates.cr * b.expected_visits


# -- vectorised grid evaluation -----------------------------------------------

_FIRST_BLOCK = 64
_MAX_BLOCK = 8192


def expected_visits_grid(delay: DelayDistribution, t_values, A_values,
                         tol: float = DEFAULT_TOL) -> np.ndarray:
    """``E[N]`` on the grid, shape ``(len(A_values), len(t_values))``.

    Same series and stopping rule as :func:`expected_visits`, evaluated for a
    whole column of aimed times at once.
    """
    t = np.asarray(t_values, dtype=float)
    A_arr = np.asarray(A_values, dtype=float)
    if np.any(~np.isfinite(A_arr)) or np.any(A_arr <= 0):
        raise ValueError("A must be positive")
    q_end = delay.quantile(1.0 - _HORIZON_LEVEL)
    out = np.empty((A_arr.size, t.size))
    for j, A in enumerate(A_arr):
        cap = (t.max(initial=0.0) + q_end + 1e3 * A) if t.size else 0.0
        total = np.ones_like(t)
        k0, block = 1, _FIRST_BLOCK
        while True:
            k = np.arange(k0, k0 + block, dtype=float)
            s = delay.survival_array(k[:, None] * A - t[None, :])
            total += s.sum(axis=0)
            if np.all(s[-1] * k[-1] < tol * total):
                break
            if (k[-1] + 1) * A > cap:
                raise ConvergenceError(f"series not converged before horizon {cap:g} (A={A:g})")
            k0 += block
            block = min(2 * block, _MAX_BLOCK)
        out[j] = total
    return out


def cost_components_grid(delay: DelayDistribution, t_values, A_values,
                         tol: float = DEFAULT_TOL) -> tuple[np.ndarray, np.ndarray]:
    """``(E[W], E[N])`` grids; waiting from ``E[W] = A E[N] - E[T]``, which holds pathwise."""
    t = np.asarray(t_values, dtype=float)
    A_arr = np.asarray(A_values, dtype=float)
    visits = expected_visits_grid(delay, t, A_arr, tol)
    waiting = A_arr[:, None] * visits - (t[None, :] + delay.mean())
    return waiting, visits


def combine_grid(waiting: np.ndarray, visits: np.ndarray, A_values, rates: CostRates) -> np.ndarray:
    A_arr = np.asarray(A_values, dtype=float)
    return rates.ch * waiting + (rates.cr / A_arr)[:, None] * visits
