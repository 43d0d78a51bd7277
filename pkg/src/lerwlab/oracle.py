"""Brute-force and linear-algebra ground truth on finite chains.

Everything here is exact (double precision, 1e-12 tolerances): exhaustive
path enumeration with killing mass, hit probabilities, the lexicographic
stopping-time weight table, moments of weighted intersection counts, and the
truncated-Green identities.  Estimators elsewhere are validated against this
module, never the other way round.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .chains import FiniteChainSpec, exact_marginals
from .erasure import loop_erase_with_prefix
from .intersections import (
    TimeSpaceSet,
    WeightTable,
    count_intersections,
    lex_first_hit,
)

ATOL = 1e-12


class BudgetExceededError(RuntimeError):
    """Enumeration would generate more paths than the configured budget."""


@dataclass(frozen=True)
class WeightedPathSet:
    """All paths of one chain up to horizon T, killed prefixes included."""

    spec: FiniteChainSpec
    start: object
    horizon: int
    paths: tuple
    probs: np.ndarray

    def __post_init__(self):
        total = float(self.probs.sum())
        if abs(total - 1.0) > ATOL:
            raise ValueError(f"path probabilities sum to {total}, not 1")

    def __len__(self) -> int:
        return len(self.paths)


def enumerate_paths(
    spec: FiniteChainSpec, start, horizon: int, budget: int = 10**6
) -> WeightedPathSet:
    """Exhaustive path set; a path killed at step t+1 carries mass up to v_t."""
    if horizon < 0:
        raise ValueError("horizon must be nonnegative")
    if spec.n_states**horizon > 4 * budget:
        raise BudgetExceededError(
            f"{spec.n_states}^{horizon} paths exceed budget {budget}"
        )
    kernel = spec.kernel
    deficit = 1.0 - kernel.sum(axis=1)
    states = spec.states
    paths: list[tuple] = []
    probs: list[float] = []

    def walk(prefix: list, i: int, p: float, depth: int) -> None:
        if len(paths) > budget:
            raise BudgetExceededError(f"path budget {budget} exceeded")
        if depth == horizon:
            paths.append(tuple(prefix))
            probs.append(p)
            return
        if deficit[i] > 0.0:
            paths.append(tuple(prefix))
            probs.append(p * deficit[i])
        for j in range(len(states)):
            pij = kernel[i, j]
            if pij > 0.0:
                prefix.append(states[j])
                walk(prefix, j, p * pij, depth + 1)
                prefix.pop()

    walk([start], spec.index(start), 1.0, 0)
    return WeightedPathSet(spec, start, horizon, tuple(paths), np.array(probs))


def hit_prob_exact(set_x: WeightedPathSet, set_y: WeightedPathSet, A: TimeSpaceSet) -> float:
    """P[some (m, X_m, n, Y_n) lies in A], summed over independent path pairs."""
    total = 0.0
    for px, a in zip(set_x.paths, set_x.probs):
        for py, b in zip(set_y.paths, set_y.probs):
            if lex_first_hit(px, py, A).hit:
                total += a * b
    return total


def _marginal_table(path_set: WeightedPathSet) -> dict:
    marg: dict = {}
    for p, a in zip(path_set.paths, path_set.probs):
        for m, x in enumerate(p):
            key = (m, x)
            marg[key] = marg.get(key, 0.0) + a
    return marg


def weight_table_exact(
    set_x: WeightedPathSet, set_y: WeightedPathSet, A: TimeSpaceSet
) -> WeightTable:
    """The stopping-time weights w(m,x,n,y) = P[tau=m, lambda=n | X_m=x, Y_n=y]."""
    joint: dict = {}
    for px, a in zip(set_x.paths, set_x.probs):
        for py, b in zip(set_y.paths, set_y.probs):
            rec = lex_first_hit(px, py, A)
            if rec.hit:
                key = (rec.tau, px[rec.tau], rec.lam, py[rec.lam])
                joint[key] = joint.get(key, 0.0) + a * b
    marg_x = _marginal_table(set_x)
    marg_y = _marginal_table(set_y)
    entries = {
        (m, x, n, y): p / (marg_x[(m, x)] * marg_y[(n, y)])
        for (m, x, n, y), p in joint.items()
    }
    return WeightTable(entries, domain=A)


@dataclass
class SwMomentsExact:
    e_s: float
    e_s2: float
    e_y: float
    e_y2: float


def sw_moments_exact(
    set_x: WeightedPathSet,
    set_y: WeightedPathSet,
    weights: WeightTable,
    prefix: Sequence = (),
) -> SwMomentsExact:
    """Exact moments of S_w and of the chi-weighted sum over all path pairs."""
    support = list(weights.items())
    suff_y_cache: dict = {}

    def suffixes(path: tuple) -> list:
        out = []
        acc: set = set()
        for s in reversed(path):
            acc = acc | {s}
            out.append(acc)
        out.reverse()
        return out

    e_s = e_s2 = e_y = e_y2 = 0.0
    for ix, (px, a) in enumerate(zip(set_x.paths, set_x.probs)):
        entries = [
            (m, x, n, y, wt)
            for (m, x, n, y), wt in support
            if m < len(px) and px[m] == x
        ]
        if not entries:
            continue
        les = {}
        suff_x = suffixes(px)
        for py, b in zip(set_y.paths, set_y.probs):
            if py not in suff_y_cache:
                suff_y_cache[py] = suffixes(py)
            suff_y = suff_y_cache[py]
            s_val = 0.0
            y_val = 0.0
            for m, x, n, y, wt in entries:
                if n < len(py) and py[n] == y:
                    s_val += wt
                    if x != y:
                        chi = 1  # off-diagonal convention: i = j = 0
                    else:
                        if m not in les:
                            les[m] = loop_erase_with_prefix(prefix, px[: m + 1]).states
                        le = les[m]
                        cx, cy = suff_x[m], suff_y[n]
                        j = next(k for k, s in enumerate(le) if s in cx)
                        i = next(k for k, s in enumerate(le) if s in cy)
                        chi = int(i <= j)
                    y_val += wt * chi
            if y_val > s_val + ATOL:
                raise AssertionError("chi-weighted sum exceeded S_w on a pair")
            p = a * b
            e_s += p * s_val
            e_s2 += p * s_val * s_val
            e_y += p * y_val
            e_y2 += p * y_val * y_val
    return SwMomentsExact(e_s, e_s2, e_y, e_y2)


def le_hit_prob_exact(
    set_x: WeightedPathSet, set_y: WeightedPathSet, prefix: Sequence = ()
) -> float:
    """P[loop-erasure of prefix + X meets the trace of Y], by enumeration."""
    y_sets = [(set(py), b) for py, b in zip(set_y.paths, set_y.probs)]
    total = 0.0
    for px, a in zip(set_x.paths, set_x.probs):
        le = set(loop_erase_with_prefix(prefix, px).states)
        hit_mass = sum(b for ys, b in y_sets if not le.isdisjoint(ys))
        total += a * hit_mass
    return total


def chi_conditional_exact(
    set_x: WeightedPathSet,
    set_y: WeightedPathSet,
    m: int,
    n: int,
    x,
    prefix: Sequence = (),
) -> float:
    """P[i(m,n) <= j(m,n) | X_m = Y_n = x], exact over the enumerated pairs."""
    marg_x = _marginal_table(set_x)
    marg_y = _marginal_table(set_y)
    den = marg_x.get((m, x), 0.0) * marg_y.get((n, x), 0.0)
    if den <= 0.0:
        raise ValueError(f"conditioning event X_{m} = Y_{n} = {x!r} has probability 0")
    from .intersections import chi_indicator

    num = 0.0
    for px, a in zip(set_x.paths, set_x.probs):
        if m >= len(px) or px[m] != x:
            continue
        for py, b in zip(set_y.paths, set_y.probs):
            if n >= len(py) or py[n] != x:
                continue
            _, _, chi = chi_indicator(px, py, prefix, m, n)
            num += a * b * chi
    return num / den


@dataclass
class MomentIdentityReport:
    """Truncated-Green identity and second-moment bound for I_n."""

    n: int
    e_i_from_green: float  # sum_z G_n(o,z)^2
    e_i_pairwise: float  # sum over (k, m) of <P[X_k=.], P[Y_m=.]>
    e_i_sq: float
    e_i_sq_bound: float  # 4 * (E I_n)^2
    allz_spread: float
    transitive: bool


def moment_identity_check(
    spec: FiniteChainSpec, o, n: int, transitive: bool = True
) -> MomentIdentityReport:
    """E I_n two independent ways, exact E I_n^2 by the ordered-pair split.

    With ``transitive`` set, the constancy over z of sum_w G_n(z,w)^2 is
    verified first and a violation is an error.
    """
    kernel = spec.kernel
    size = spec.n_states
    powers = [np.eye(size)]
    for _ in range(n):
        powers.append(powers[-1] @ kernel)
    green = np.sum(powers, axis=0)  # G_n(z, w) for every source z

    sum_g_sq = (green**2).sum(axis=1)
    spread = float(sum_g_sq.max() - sum_g_sq.min())
    if transitive and spread > ATOL:
        raise ValueError(
            f"kernel is not vertex-transitive: sum_w G_n(z,w)^2 varies by {spread}"
        )

    o_idx = spec.index(o)
    margs = exact_marginals(spec, o, n)
    e_i_green = float(sum_g_sq[o_idx])
    e_i_pairwise = 0.0
    for k in range(n + 1):
        for m in range(n + 1):
            e_i_pairwise += float(np.dot(margs[k], margs[m]))

    # C(z,w) = sum_{k,i<=n} P[X_k=z, X_i=w], split at k <= i and k > i
    cum = np.cumsum(powers, axis=0)  # cum[j] = sum_{t<=j} P^t
    side_le = np.zeros((size, size))
    side_gt = np.zeros((size, size))
    for k in range(n + 1):
        side_le += margs[k][:, None] * cum[n - k]
        side_gt += margs[k][:, None] * (cum[n - k] - powers[0])
    c_pair = side_le + side_gt.T
    e_i_sq = float((c_pair * c_pair).sum())

    return MomentIdentityReport(
        n=n,
        e_i_from_green=e_i_green,
        e_i_pairwise=e_i_pairwise,
        e_i_sq=e_i_sq,
        e_i_sq_bound=4.0 * e_i_pairwise**2,
        allz_spread=spread,
        transitive=transitive,
    )


@dataclass
class IntersectionLawExact:
    """Exact law of the intersection count I over enumerated path pairs."""

    e_i: float
    e_i_sq: float
    pmf: dict

    def tail(self, c: float) -> float:
        """P[I >= c] (inclusive, with a 1e-12 guard on the threshold)."""
        return sum(p for k, p in self.pmf.items() if k >= c - ATOL)


def intersection_law_exact(
    set_x: WeightedPathSet, set_y: WeightedPathSet
) -> IntersectionLawExact:
    pmf: Counter = Counter()
    for px, a in zip(set_x.paths, set_x.probs):
        for py, b in zip(set_y.paths, set_y.probs):
            pmf[count_intersections(px, py)] += a * b
    e_i = sum(k * p for k, p in pmf.items())
    e_i_sq = sum(k * k * p for k, p in pmf.items())
    return IntersectionLawExact(e_i, e_i_sq, dict(pmf))


def heat_kernel_identity_check(spec: FiniteChainSpec, x, N: int) -> tuple[float, float]:
    """Both sides of the return-time reindexing identity over m + n <= N.

    Left: sum over (m, n), m+n <= N, of sum_z P[X_m=z] P[Y_n=z], computed
    pairwise.  Right: sum_{s<=N} (s+1) P[X_s=x].  Requires a symmetric kernel.
    """
    asym = float(np.abs(spec.kernel - spec.kernel.T).max())
    if asym > ATOL:
        raise ValueError(f"kernel is not symmetric (max asymmetry {asym})")
    margs = exact_marginals(spec, x, N)
    lhs = 0.0
    for m in range(N + 1):
        for n in range(N + 1 - m):
            lhs += float(np.dot(margs[m], margs[n]))
    x_idx = spec.index(x)
    rhs = float(sum((s + 1) * margs[s][x_idx] for s in range(N + 1)))
    return lhs, rhs
