"""Path-pair statistics: intersections, the lexicographic first hit, the
continuation-order indicator, and Monte Carlo estimators for the weighted
intersection counts and the two hit probabilities.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from . import _kernels
from ._kernels.encoding import encode_lattice
from .chains import (
    ChainSpec,
    FiniteChainSpec,
    LatticeChainSpec,
    sample_path,
)
from .erasure import OnlineLoopEraser, loop_erase_with_prefix
from .statutil import Z95, mean_stderr, ratio_interval_conservative, wilson_interval


def _states(p) -> tuple:
    return p.states if hasattr(p, "states") else tuple(p)


@dataclass(frozen=True)
class TimeSpaceSet:
    """Predicate over (m, x, n, y) quadruples; hit(A) = some quadruple realized."""

    predicate: Callable
    description: str = "custom"

    def __call__(self, m, x, n, y) -> bool:
        return bool(self.predicate(m, x, n, y))

    @staticmethod
    def diagonal() -> "TimeSpaceSet":
        return TimeSpaceSet(lambda m, x, n, y: x == y, "diagonal")

    @staticmethod
    def windowed_diagonal(m_max: int, n_max: int) -> "TimeSpaceSet":
        return TimeSpaceSet(
            lambda m, x, n, y: x == y and m <= m_max and n <= n_max,
            f"diagonal(m<={m_max}, n<={n_max})",
        )


class WeightTable:
    """Sparse nonnegative weights on (m, x, n, y), vanishing outside a set A."""

    def __init__(self, entries: dict, domain: TimeSpaceSet | None = None):
        self._w = {}
        for (m, x, n, y), wt in entries.items():
            if wt < 0:
                raise ValueError(f"negative weight at {(m, x, n, y)}")
            if domain is not None and wt > 0 and not domain(m, x, n, y):
                raise ValueError(f"weight outside the target set at {(m, x, n, y)}")
            if wt > 0:
                self._w[(m, x, n, y)] = float(wt)
        self.domain = domain

    def get(self, m, x, n, y) -> float:
        return self._w.get((m, x, n, y), 0.0)

    def items(self):
        return self._w.items()

    def __len__(self) -> int:
        return len(self._w)

    def max_time(self) -> int:
        return max((max(m, n) for (m, _, n, _) in self._w), default=-1)


@dataclass(frozen=True)
class HitRecord:
    tau: int | None
    lam: int | None

    def __post_init__(self):
        if (self.tau is None) != (self.lam is None):
            raise ValueError("tau and lambda must both be set or both be None")

    @property
    def hit(self) -> bool:
        return self.tau is not None


def count_intersections(path_x, path_y) -> int:
    """Number of index pairs (k, m) with X_k = Y_m (with multiplicity)."""
    cx = Counter(_states(path_x))
    cy = Counter(_states(path_y))
    if len(cy) < len(cx):
        cx, cy = cy, cx
    return sum(c * cy[s] for s, c in cx.items() if s in cy)


def lex_first_hit(path_x, path_y, A: TimeSpaceSet) -> HitRecord:
    """Lexicographically minimal (tau, lambda) with (tau, X_tau, lambda, Y_lambda) in A."""
    xs, ys = _states(path_x), _states(path_y)
    for m, x in enumerate(xs):
        for n, y in enumerate(ys):
            if A(m, x, n, y):
                return HitRecord(m, n)
    return HitRecord(None, None)


def chi_indicator(full_x, full_y, prefix: Sequence, m: int, n: int) -> tuple[int, int, int]:
    """Continuation-order indicator at (m, n).

    With L = loop-erasure of prefix + X_0..X_m, j is the first L-index hit by
    the X-continuation from m and i the first hit by the Y-continuation from
    n; chi = 1 iff i <= j.  When X_m != Y_n the convention is (0, 0, 1).
    """
    xs, ys = _states(full_x), _states(full_y)
    if m >= len(xs) or n >= len(ys):
        raise IndexError(f"(m={m}, n={n}) out of range for paths of length "
                         f"({len(xs)}, {len(ys)})")
    if xs[m] != ys[n]:
        return 0, 0, 1
    le = loop_erase_with_prefix(prefix, xs[: m + 1]).states
    cont_x = set(xs[m:])
    cont_y = set(ys[n:])
    j = next(idx for idx, s in enumerate(le) if s in cont_x)
    i = next(idx for idx, s in enumerate(le) if s in cont_y)
    return i, j, int(i <= j)


@dataclass
class SwMomentEstimates:
    """Monte Carlo first and second moments of S_w and of its chi-weighted variant."""

    n_samples: int
    s_mean: float
    s_stderr: float
    s2_mean: float
    s2_stderr: float
    y_mean: float
    y_stderr: float
    y2_mean: float
    y2_stderr: float


def mc_sw_moments(
    spec_x: ChainSpec,
    spec_y: ChainSpec,
    start_x,
    start_y,
    weights: WeightTable,
    horizon: int,
    n_samples: int,
    seed: int,
    stream0: int = 0,
    prefix: Sequence = (),
) -> SwMomentEstimates:
    """Estimate E S_w, E S_w^2 and the chi-weighted moments on sampled pairs."""
    if weights.max_time() > horizon:
        raise ValueError("weight table extends beyond the sampling horizon")
    support = list(weights.items())
    s_vals = np.empty(n_samples)
    y_vals = np.empty(n_samples)
    for i in range(n_samples):
        px = sample_path(spec_x, start_x, horizon, seed, stream0 + 2 * i)
        py = sample_path(spec_y, start_y, horizon, seed, stream0 + 2 * i + 1)
        xs, ys = px.states, py.states
        s = 0.0
        y = 0.0
        for (m, x, n, yy), wt in support:
            if m < len(xs) and n < len(ys) and xs[m] == x and ys[n] == yy:
                s += wt
                _, _, chi = chi_indicator(xs, ys, prefix, m, n)
                y += wt * chi
        if y > s + 1e-12:
            raise AssertionError("chi-weighted sum exceeded S_w on a sample")
        s_vals[i] = s
        y_vals[i] = y
    s_mean, s_se = mean_stderr(s_vals)
    s2_mean, s2_se = mean_stderr(s_vals**2)
    y_mean, y_se = mean_stderr(y_vals)
    y2_mean, y2_se = mean_stderr(y_vals**2)
    return SwMomentEstimates(
        n_samples, s_mean, s_se, s2_mean, s2_se, y_mean, y_se, y2_mean, y2_se
    )


@dataclass
class HitRatioResult:
    """Hit probabilities of {X} vs {Y} and LE(X) vs {Y} on shared sample pairs."""

    n_pairs: int
    n_hit_xy: int
    n_hit_le: int
    p_xy: float
    p_xy_ci: tuple[float, float]
    p_le: float
    p_le_ci: tuple[float, float]
    ratio: float | None
    ratio_ci: tuple[float, float] | None

    @property
    def ratio_defined(self) -> bool:
        return self.ratio is not None


def _assert_same_law(spec_x: ChainSpec, spec_y: ChainSpec) -> None:
    if type(spec_x) is not type(spec_y):
        raise ValueError("the two chains must share transition probabilities")
    if isinstance(spec_x, FiniteChainSpec):
        if spec_x.states != spec_y.states or not np.array_equal(spec_x.kernel, spec_y.kernel):
            raise ValueError("finite chains differ in states or kernel")
    elif isinstance(spec_x, LatticeChainSpec):
        if (spec_x.dimension, spec_x.kill_prob) != (spec_y.dimension, spec_y.kill_prob):
            raise ValueError("lattice chains differ in dimension or kill probability")


def mc_hit_ratio(
    spec_x: ChainSpec,
    spec_y: ChainSpec,
    start_x,
    start_y,
    horizon: int,
    n_pairs: int,
    seed: int,
    stream0: int = 0,
    z: float = Z95,
) -> HitRatioResult:
    """Estimate P[{X} meets {Y}] and P[LE(X) meets {Y}] on the same pairs.

    Wilson score intervals for both probabilities; the ratio interval is the
    conservative quotient of the two (numerator and denominator share
    samples, and the LE event implies the plain event).
    """
    _assert_same_law(spec_x, spec_y)
    if isinstance(spec_x, LatticeChainSpec):
        d = spec_x.dimension
        hx, hl = _kernels.lattice_pair_hits(
            d,
            spec_x.kill_prob,
            horizon,
            n_pairs,
            seed,
            stream0,
            encode_lattice(start_x, d),
            encode_lattice(start_y, d),
        )
        n_xy = int(hx.sum())
        n_le = int(hl.sum())
    else:
        n_xy = 0
        n_le = 0
        for i in range(n_pairs):
            px = sample_path(spec_x, start_x, horizon, seed, stream0 + 2 * i)
            py = sample_path(spec_y, start_y, horizon, seed, stream0 + 2 * i + 1)
            y_set = set(py.states)
            if y_set.isdisjoint(px.states):
                continue
            n_xy += 1
            le = OnlineLoopEraser().extend(px.states).snapshot()
            if not y_set.isdisjoint(le.states):
                n_le += 1
    p_xy = n_xy / n_pairs
    p_le = n_le / n_pairs
    if n_xy == 0:
        ratio, ratio_ci = None, None
    else:
        ratio = n_le / n_xy
        ratio_ci = ratio_interval_conservative(n_le, n_xy, n_pairs, z)
    return HitRatioResult(
        n_pairs=n_pairs,
        n_hit_xy=n_xy,
        n_hit_le=n_le,
        p_xy=p_xy,
        p_xy_ci=wilson_interval(n_xy, n_pairs, z),
        p_le=p_le,
        p_le_ci=wilson_interval(n_le, n_pairs, z),
        ratio=ratio,
        ratio_ci=ratio_ci,
    )
