"""State spaces, substochastic kernels, path sampling and Green functions.

Three chain families are supported: explicit finite kernels (row sums <= 1,
the deficit is a per-step killing probability), killed simple random walk on
Z^d, and simple random walk on the glued graph made of a copy of Z^5 and a
copy of Z sharing one vertex o.

Killing convention, used by every sampler and oracle in the package: killing
is evaluated before each move with probability q, so the lifetime is
geometric and counts the start state, and P[path = <start>] = q whenever at
least one step is allowed.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from . import _kernels
from ._kernels.encoding import decode_lattice, encode_glued, encode_lattice
from .rng import Stream, derive_key

MAX_HORIZON = 10**7

KILLED = "killed"
HORIZON_REACHED = "horizon-reached"
ABSORBED = "absorbed"

_CAUSE_FROM_CODE = {
    _kernels.CAUSE_HORIZON: HORIZON_REACHED,
    _kernels.CAUSE_KILLED: KILLED,
}


class NonTransientError(ValueError):
    """Kernel spectral radius too close to 1 for a convergent Green function."""


@dataclass(frozen=True, eq=False)
class FiniteChainSpec:
    """Explicit substochastic kernel over a finite list of state ids."""

    states: tuple
    kernel: np.ndarray

    def __post_init__(self):
        states = tuple(self.states)
        object.__setattr__(self, "states", states)
        kern = np.asarray(self.kernel, dtype=np.float64)
        if kern.shape != (len(states), len(states)):
            raise ValueError(f"kernel shape {kern.shape} does not match {len(states)} states")
        if len(set(states)) != len(states):
            raise ValueError("state ids must be unique")
        if (kern < 0).any() or (kern > 1).any():
            raise ValueError("transition probabilities must lie in [0, 1]")
        if (kern.sum(axis=1) > 1 + 1e-12).any():
            raise ValueError("row sums must not exceed 1")
        kern.setflags(write=False)
        object.__setattr__(self, "kernel", kern)
        object.__setattr__(self, "_index", {s: i for i, s in enumerate(states)})

    @property
    def n_states(self) -> int:
        return len(self.states)

    def index(self, state) -> int:
        try:
            return self._index[state]
        except KeyError:
            raise ValueError(f"unknown state {state!r}") from None

    def row_sums(self) -> np.ndarray:
        return self.kernel.sum(axis=1)


@dataclass(frozen=True)
class LatticeChainSpec:
    """Simple random walk on Z^d, killed before each step with probability q."""

    dimension: int
    kill_prob: float = 0.0

    def __post_init__(self):
        if self.dimension < 1:
            raise ValueError("dimension must be positive")
        if not 0.0 <= self.kill_prob < 1.0:
            raise ValueError("kill_prob must lie in [0, 1)")
        if self.kill_prob == 0.0 and self.dimension < 3:
            raise ValueError(
                "recurrent lattice walk: need kill_prob > 0 or dimension >= 3"
            )

    @property
    def origin(self) -> tuple:
        return (0,) * self.dimension


@dataclass(frozen=True)
class GluedGraphSpec:
    """Z^5 and Z glued at one vertex o; SRW steps uniformly over 12/10/2 edges."""

    def degree(self, state) -> int:
        return len(self.neighbors(state))

    def neighbors(self, state) -> list:
        """Neighbor list in the canonical order shared with the walk kernels.

        Z^5 moves come first as (+e0, -e0, ..., +e4, -e4); at o the two ray
        moves (+1, -1) follow; on the ray the order is (+1, -1).
        """
        tag = state[0]
        if tag == "o":
            out = []
            for a in range(5):
                plus = [0] * 5
                plus[a] = 1
                out.append(("z5", tuple(plus)))
                minus = [0] * 5
                minus[a] = -1
                out.append(("z5", tuple(minus)))
            out.append(("line", 1))
            out.append(("line", -1))
            return out
        if tag == "z5":
            coords = state[1]
            out = []
            for a in range(5):
                for sign in (1, -1):
                    nxt = list(coords)
                    nxt[a] += sign
                    if any(nxt):
                        out.append(("z5", tuple(nxt)))
                    else:
                        out.append(("o",))
            return out
        if tag == "line":
            x = state[1]
            return [
                ("line", x + 1) if x + 1 != 0 else ("o",),
                ("line", x - 1) if x - 1 != 0 else ("o",),
            ]
        raise ValueError(f"unknown glued-graph state {state!r}")


ChainSpec = FiniteChainSpec | LatticeChainSpec | GluedGraphSpec


@dataclass(frozen=True)
class PathSample:
    """One realized trajectory plus its termination cause and RNG provenance."""

    states: tuple
    cause: str
    seed: int
    stream: int

    def __len__(self) -> int:
        return len(self.states)


def _check_horizon(horizon: int) -> None:
    if horizon < 0:
        raise ValueError("horizon must be nonnegative")
    if horizon > MAX_HORIZON:
        raise ValueError(f"horizon {horizon} exceeds cap {MAX_HORIZON}")


def sample_path(
    spec: ChainSpec,
    start,
    horizon: int,
    seed: int,
    stream: int = 0,
    absorb: frozenset | set = frozenset(),
) -> PathSample:
    """Sample one path from ``start``; deterministic in (spec, start, horizon, seed, stream).

    Stops at killing, at entering a state of ``absorb`` (finite chains only),
    or after ``horizon`` steps, whichever comes first.
    """
    _check_horizon(horizon)
    if isinstance(spec, FiniteChainSpec):
        return _sample_finite(spec, start, horizon, seed, stream, frozenset(absorb))
    if absorb:
        raise ValueError("absorbing stop-sets are only supported on finite chains")
    if isinstance(spec, LatticeChainSpec):
        d = spec.dimension
        enc, cause_code = _kernels.lattice_path(
            d, spec.kill_prob, horizon, derive_key(seed, stream), encode_lattice(start, d)
        )
        states = tuple(decode_lattice(int(e), d) for e in enc)
        return PathSample(states, _CAUSE_FROM_CODE[cause_code], seed, stream)
    if isinstance(spec, GluedGraphSpec):
        return _sample_glued(spec, start, horizon, seed, stream)
    raise TypeError(f"unsupported spec type {type(spec).__name__}")


def _sample_finite(spec, start, horizon, seed, stream, absorb):
    i = spec.index(start)
    cum = np.cumsum(spec.kernel, axis=1)
    gen = Stream(seed, stream)
    states = [start]
    cause = HORIZON_REACHED
    if start in absorb:
        return PathSample((start,), ABSORBED, seed, stream)
    for _ in range(horizon):
        u = gen.uniform()
        row = cum[i]
        if u >= row[-1]:
            cause = KILLED
            break
        i = int(np.searchsorted(row, u, side="right"))
        states.append(spec.states[i])
        if spec.states[i] in absorb:
            cause = ABSORBED
            break
    return PathSample(tuple(states), cause, seed, stream)


def _sample_glued(spec, start, horizon, seed, stream):
    # mirrors the glued walk kernel: one draw per step, idx = draw % degree
    from ._kernels.encoding import decode_glued

    gen = Stream(seed, stream)
    state = decode_glued(encode_glued(start))  # canonicalize aliases of o
    states = [state]
    for _ in range(horizon):
        nbrs = spec.neighbors(state)
        state = nbrs[gen.below(len(nbrs))]
        states.append(state)
    return PathSample(tuple(states), HORIZON_REACHED, seed, stream)


def exact_marginals(spec: FiniteChainSpec, start, n: int) -> np.ndarray:
    """Rows k = 0..n of P[X_k = .]; total mass decreases by the killed mass."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    out = np.zeros((n + 1, spec.n_states))
    out[0, spec.index(start)] = 1.0
    for k in range(n):
        out[k + 1] = out[k] @ spec.kernel
    return out


def green_truncated(spec: FiniteChainSpec, o, n: int) -> dict:
    """G_n(o, .) = sum_{k<=n} P[X_k = .], as a state-keyed dict."""
    g = exact_marginals(spec, o, n).sum(axis=0)
    return {s: float(g[i]) for i, s in enumerate(spec.states)}


def spectral_radius_estimate(kernel: np.ndarray, iterations: int = 512) -> float:
    """Geometric-mean power iteration; robust to periodic nonnegative kernels."""
    v = np.ones(kernel.shape[0])
    lo = 0
    total = 1.0
    for k in range(1, iterations + 1):
        v = v @ kernel
        norm = v.sum()
        if norm == 0.0:
            return 0.0
        total *= norm
        v /= norm
        lo = k
        if total < 1e-280:
            break
    return float(total ** (1.0 / lo))


def green_exact(spec: FiniteChainSpec, o) -> dict:
    """G(o, .) = sum_k P[X_k = .] via the fundamental-matrix solve."""
    rho = spectral_radius_estimate(spec.kernel)
    if rho >= 1.0 - 1e-10:
        raise NonTransientError(
            f"kernel spectral radius ~{rho:.12f}: Green function diverges"
        )
    n = spec.n_states
    e = np.zeros(n)
    e[spec.index(o)] = 1.0
    g = np.linalg.solve((np.eye(n) - spec.kernel).T, e)
    return {s: float(g[i]) for i, s in enumerate(spec.states)}


@dataclass
class GreenEstimate:
    """Monte Carlo visit-count estimate of G(o, .) over a target set."""

    targets: tuple
    mean: np.ndarray
    stderr: np.ndarray
    n_samples: int
    cap: int
    truncated_fraction: float
    escape_radius: int | None = None
    escape_return_bound: float | None = None
    counts: np.ndarray = field(repr=False, default=None)

    def ratio_with_ci(self, num: int, den: int, z: float = 1.959963984540054):
        """Delta-method CI for mean[num]/mean[den] using per-walk covariance."""
        a = self.counts[:, num].astype(np.float64)
        b = self.counts[:, den].astype(np.float64)
        ma, mb = a.mean(), b.mean()
        r = ma / mb
        n = len(a)
        cov = np.cov(a, b, ddof=1)
        var_r = (
            cov[0, 0] / mb**2
            + cov[1, 1] * ma**2 / mb**4
            - 2.0 * cov[0, 1] * ma / mb**3
        ) / n
        se = float(np.sqrt(max(var_r, 0.0)))
        return r, (r - z * se, r + z * se)


def mc_green(
    spec: ChainSpec,
    o,
    targets: Iterable,
    n_samples: int,
    cap: int = 10**5,
    seed: int = 0,
    stream0: int = 0,
    escape_radius: int | None = None,
) -> GreenEstimate:
    """Estimate G(o, target) as the mean visit count over ``n_samples`` walks.

    Walks are truncated at ``cap`` steps; the surviving fraction is reported
    as ``truncated_fraction`` (a bias source, never silently dropped).  On the
    glued graph an optional escape radius stops walks once their Z^5 distance
    from o makes a return practically impossible; the reported
    ``escape_return_bound`` bounds the per-walk probability of a missed return.
    """
    if n_samples < 1 or cap < 1:
        raise ValueError("n_samples and cap must be >= 1")
    targets = tuple(targets)
    if isinstance(spec, GluedGraphSpec):
        if o != ("o",):
            raise ValueError("glued-graph estimator starts at the shared vertex o")
        enc = np.array([encode_glued(t) for t in targets], dtype=np.int64)
        r2 = 0 if escape_radius is None else int(escape_radius) ** 2
        counts, truncated = _kernels.glued_visit_counts(
            n_samples, cap, seed, stream0, r2, enc
        )
        truncated_fraction = float(np.mean(truncated))
        bound = None
        if escape_radius is not None:
            # P(hit o from Z^5 distance R) ~ G(x)/G(o); 2x safety on the
            # asymptotic constant 0.127 for Z^5
            bound = 2.0 * 0.127 / float(escape_radius) ** 3
    elif isinstance(spec, LatticeChainSpec):
        if escape_radius is not None:
            raise ValueError("escape_radius only applies to the glued graph")
        d = spec.dimension
        enc_targets = [encode_lattice(t, d) for t in targets]
        counts = np.zeros((n_samples, len(targets)), dtype=np.int64)
        alive = 0
        for i in range(n_samples):
            path, cause = _kernels.lattice_path(
                d, spec.kill_prob, cap, derive_key(seed, stream0 + i), encode_lattice(o, d)
            )
            alive += cause == _kernels.CAUSE_HORIZON
            for j, te in enumerate(enc_targets):
                counts[i, j] = int(np.count_nonzero(path == te))
        truncated_fraction = alive / n_samples
        bound = None
    elif isinstance(spec, FiniteChainSpec):
        if escape_radius is not None:
            raise ValueError("escape_radius only applies to the glued graph")
        counts = np.zeros((n_samples, len(targets)), dtype=np.int64)
        alive = 0
        for i in range(n_samples):
            p = sample_path(spec, o, cap, seed, stream0 + i)
            alive += p.cause == HORIZON_REACHED
            for j, t in enumerate(targets):
                counts[i, j] = sum(1 for s in p.states if s == t)
        truncated_fraction = alive / n_samples
        bound = None
    else:
        raise TypeError(f"unsupported spec type {type(spec).__name__}")

    mean = counts.mean(axis=0)
    stderr = counts.std(axis=0, ddof=1) / np.sqrt(n_samples)
    return GreenEstimate(
        targets=targets,
        mean=mean,
        stderr=stderr,
        n_samples=n_samples,
        cap=cap,
        truncated_fraction=float(truncated_fraction),
        escape_radius=escape_radius,
        escape_return_bound=bound,
        counts=counts,
    )


def induce_on_subset(path, Z) -> tuple[tuple, tuple]:
    """Visits of the path to Z in order, with the source index of each visit.

    Index 0 is included only when the path actually starts in Z.
    """
    states = path.states if isinstance(path, PathSample) else tuple(path)
    zset = set(Z)
    induced = []
    index_map = []
    for i, s in enumerate(states):
        if s in zset:
            induced.append(s)
            index_map.append(i)
    return tuple(induced), tuple(index_map)


def chain_spec_from_json(obj) -> ChainSpec:
    """Build a chain spec from {"type": "finite"|"lattice"|"glued", ...}."""
    if isinstance(obj, str):
        obj = json.loads(obj)
    kind = obj.get("type")
    if kind == "finite":
        states = obj["states"]
        states = tuple(tuple(s) if isinstance(s, list) else s for s in states)
        return FiniteChainSpec(states=states, kernel=np.asarray(obj["kernel"], dtype=float))
    if kind == "lattice":
        return LatticeChainSpec(
            dimension=int(obj["dimension"]), kill_prob=float(obj.get("kill_prob", 0.0))
        )
    if kind == "glued":
        return GluedGraphSpec()
    raise ValueError(f"unknown chain spec type {kind!r}")


def load_chain_spec(path: str) -> ChainSpec:
    with open(path, encoding="utf-8") as fh:
        return chain_spec_from_json(json.load(fh))


def parse_state(spec: ChainSpec, text: str):
    """Parse a CLI state argument: JSON for coordinates, raw id otherwise."""
    if isinstance(spec, LatticeChainSpec):
        val = json.loads(text)
        if isinstance(val, int):
            val = [val]
        return tuple(val)
    if isinstance(spec, GluedGraphSpec):
        val = json.loads(text)
        if val == "o":
            return ("o",)
        tag, payload = val
        return (tag, tuple(payload) if isinstance(payload, list) else payload)
    try:
        val = json.loads(text)
    except json.JSONDecodeError:
        return text
    if isinstance(val, list):
        return tuple(val)
    return val if val in spec.states else text
