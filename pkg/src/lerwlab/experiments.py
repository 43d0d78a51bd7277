"""Named experiment presets binding samplers to oracles, with CSV/JSON reports.

Every preset pins its free parameters (sample counts, horizons, kill rates,
seeds) so a run is one command, and emits one verdict per inequality checked:
{name, value, bound, constant, comparator, slack, pass}.  Reruns with an
identical config are bit-identical in every reported estimate.
"""

from __future__ import annotations

import csv
import json
import math
import os
from dataclasses import dataclass, field

import numpy as np

from . import __version__, kernel_backend
from .chains import (
    FiniteChainSpec,
    GluedGraphSpec,
    LatticeChainSpec,
    sample_path,
)
from .erasure import partial_loop_erase
from .intersections import TimeSpaceSet, mc_hit_ratio
from .oracle import (
    chi_conditional_exact,
    enumerate_paths,
    heat_kernel_identity_check,
    hit_prob_exact,
    intersection_law_exact,
    moment_identity_check,
    sw_moments_exact,
    weight_table_exact,
)
from .statutil import chisquare_uniform
from .wilson import (
    complete_graph,
    cycle_graph,
    enumerate_spanning_trees,
    path_graph,
    pemantle_check,
    wilson_tree,
)
from . import chains
from ._kernels import lattice_pair_counts

EXACT_TOL = 1e-12


# ---------------------------------------------------------------------------
# reference chains used by the exact presets


def lazy_two_state() -> FiniteChainSpec:
    """Two states, stay 1/2 / move 1/2."""
    return FiniteChainSpec(states=(0, 1), kernel=np.array([[0.5, 0.5], [0.5, 0.5]]))


def three_state_kill() -> FiniteChainSpec:
    """Three states, each jumping to the two others w.p. 0.4; kill mass 0.2."""
    k = np.full((3, 3), 0.4)
    np.fill_diagonal(k, 0.0)
    return FiniteChainSpec(states=(0, 1, 2), kernel=k)


def flip_kill_quarter() -> FiniteChainSpec:
    """Deterministic flip damped to 3/4; kill mass 1/4 per step."""
    return FiniteChainSpec(states=(0, 1), kernel=np.array([[0.0, 0.75], [0.75, 0.0]]))


def lazy_cycle(n: int) -> FiniteChainSpec:
    """Lazy walk on the n-cycle: stay 1/2, each neighbor 1/4."""
    k = np.zeros((n, n))
    for i in range(n):
        k[i, i] = 0.5
        k[i, (i + 1) % n] = 0.25
        k[i, (i - 1) % n] = 0.25
    return FiniteChainSpec(states=tuple(range(n)), kernel=k)


def srw_cycle(n: int) -> FiniteChainSpec:
    """Simple random walk on the n-cycle."""
    k = np.zeros((n, n))
    for i in range(n):
        k[i, (i + 1) % n] = 0.5
        k[i, (i - 1) % n] = 0.5
    return FiniteChainSpec(states=tuple(range(n)), kernel=k)


def z1_interval(radius: int) -> FiniteChainSpec:
    """SRW on Z restricted to [-radius, radius]; stepping out kills the walk."""
    states = tuple(range(-radius, radius + 1))
    k = np.zeros((len(states), len(states)))
    for i, s in enumerate(states):
        for t in (s - 1, s + 1):
            if -radius <= t <= radius:
                k[i, states.index(t)] = 0.5
    return FiniteChainSpec(states=states, kernel=k)


# ---------------------------------------------------------------------------
# report plumbing


@dataclass
class Verdict:
    name: str
    value: float
    bound: float
    constant: float
    comparator: str  # ">=" or "<="
    passed: bool
    slack: float

    @staticmethod
    def check(name, value, bound, constant, comparator) -> "Verdict":
        if comparator == ">=":
            passed = value >= bound
            slack = value - bound
        elif comparator == "<=":
            passed = value <= bound
            slack = bound - value
        else:
            raise ValueError(f"unknown comparator {comparator!r}")
        return Verdict(name, float(value), float(bound), float(constant),
                       comparator, bool(passed), float(slack))

    def as_dict(self) -> dict:
        return {
            "name": self.name,
            "value": self.value,
            "bound": self.bound,
            "constant": self.constant,
            "comparator": self.comparator,
            "slack": self.slack,
            "pass": self.passed,
        }


@dataclass
class ExperimentConfig:
    preset: str
    seed: int = 0
    params: dict = field(default_factory=dict)
    out_dir: str | None = None

    @staticmethod
    def from_json(obj) -> "ExperimentConfig":
        if isinstance(obj, str):
            obj = json.loads(obj)
        return ExperimentConfig(
            preset=obj["preset"],
            seed=int(obj.get("seed", 0)),
            params=dict(obj.get("params", {})),
            out_dir=obj.get("out_dir"),
        )

    def as_dict(self) -> dict:
        return {"preset": self.preset, "seed": self.seed, "params": self.params}


@dataclass
class ExperimentReport:
    preset: str
    rows: list  # (quantity, estimate, stderr, ci_lo, ci_hi); None for blanks
    verdicts: list

    @property
    def all_passed(self) -> bool:
        return all(v.passed for v in self.verdicts)

    def row(self, quantity: str):
        for r in self.rows:
            if r[0] == quantity:
                return r
        raise KeyError(quantity)


def _row(quantity, estimate, stderr=None, ci_lo=None, ci_hi=None):
    return (quantity, float(estimate),
            None if stderr is None else float(stderr),
            None if ci_lo is None else float(ci_lo),
            None if ci_hi is None else float(ci_hi))


# ---------------------------------------------------------------------------
# presets


def _sandwich_instances():
    return [
        ("lazy-2state-T4", lazy_two_state(), 0, 1, 4),
        ("3state-kill0.2-T4", three_state_kill(), 0, 1, 4),
        ("flip-kill0.25-T5", flip_kill_quarter(), 0, 1, 5),
    ]


def _preset_seconv_sandwich(params, seed):
    rows, verdicts = [], []
    A = TimeSpaceSet.diagonal()
    for name, spec, sx, sy, T in _sandwich_instances():
        set_x = enumerate_paths(spec, sx, T)
        set_y = enumerate_paths(spec, sy, T)
        hit = hit_prob_exact(set_x, set_y, A)
        w = weight_table_exact(set_x, set_y, A)
        mom = sw_moments_exact(set_x, set_y, w)
        lower = mom.e_s**2 / mom.e_s2
        rows += [
            _row(f"{name}/hit_prob", hit),
            _row(f"{name}/E_Sw", mom.e_s),
            _row(f"{name}/E_Sw2", mom.e_s2),
            _row(f"{name}/cauchy_schwarz_lower", lower),
        ]
        verdicts += [
            Verdict.check(f"{name}/stopping-time-identity", abs(mom.e_s - hit),
                          EXACT_TOL, EXACT_TOL, "<="),
            Verdict.check(f"{name}/lower-bound", lower, hit + EXACT_TOL, 1.0, "<="),
            Verdict.check(f"{name}/upper-bound-64", hit, 64.0 * lower + EXACT_TOL,
                          64.0, "<="),
            Verdict.check(f"{name}/second-moment-64", mom.e_s2, 64.0 * hit + EXACT_TOL,
                          64.0, "<="),
        ]
    return rows, verdicts


def _preset_chi_half(params, seed):
    rows, verdicts = [], []
    A = TimeSpaceSet.diagonal()
    instances = [
        ("lazy-2state-T4", lazy_two_state(), 0, 1, 4),
        ("3state-kill0.2-T4", three_state_kill(), 0, 1, 4),
        ("flip-kill0.25-T5", flip_kill_quarter(), 0, 0, 5),
    ]
    for name, spec, sx, sy, T in instances:
        set_x = enumerate_paths(spec, sx, T)
        set_y = enumerate_paths(spec, sy, T)
        worst = 1.0
        tested = 0
        for m in range(T + 1):
            for x in spec.states:
                try:
                    val = chi_conditional_exact(set_x, set_y, m, m, x)
                except ValueError:
                    continue
                tested += 1
                worst = min(worst, val)
        rows.append(_row(f"{name}/min_chi_conditional_diag", worst))
        rows.append(_row(f"{name}/n_conditionals_tested", tested))
        verdicts.append(
            Verdict.check(f"{name}/exchangeability-half", worst,
                          0.5 - EXACT_TOL, 0.5, ">=")
        )
        w = weight_table_exact(set_x, set_y, A)
        mom = sw_moments_exact(set_x, set_y, w)
        rows.append(_row(f"{name}/E_Upsilon_over_E_Sw", mom.e_y / mom.e_s))
        verdicts.append(
            Verdict.check(f"{name}/upsilon-half", mom.e_y,
                          0.5 * mom.e_s - EXACT_TOL, 0.5, ">=")
        )
    return rows, verdicts


def _preset_moment_identity(params, seed):
    n = int(params.get("n", 4))
    spec = lazy_cycle(int(params.get("cycle", 5)))
    rep = moment_identity_check(spec, 0, n, transitive=True)
    set_x = enumerate_paths(spec, 0, n)
    law = intersection_law_exact(set_x, set_x)
    rows = [
        _row("E_I_from_green", rep.e_i_from_green),
        _row("E_I_pairwise", rep.e_i_pairwise),
        _row("E_I_enumeration", law.e_i),
        _row("E_I_sq", rep.e_i_sq),
        _row("E_I_sq_enumeration", law.e_i_sq),
        _row("allz_spread", rep.allz_spread),
    ]
    verdicts = [
        Verdict.check("first-moment-identity",
                      abs(rep.e_i_from_green - rep.e_i_pairwise), EXACT_TOL,
                      EXACT_TOL, "<="),
        Verdict.check("first-moment-vs-enumeration",
                      abs(rep.e_i_from_green - law.e_i), EXACT_TOL, EXACT_TOL, "<="),
        Verdict.check("second-moment-4-bound", rep.e_i_sq,
                      rep.e_i_sq_bound + EXACT_TOL, 4.0, "<="),
        Verdict.check("second-moment-vs-enumeration",
                      abs(rep.e_i_sq - law.e_i_sq), EXACT_TOL, EXACT_TOL, "<="),
        Verdict.check("transitivity-allz", rep.allz_spread, EXACT_TOL,
                      EXACT_TOL, "<="),
    ]
    return rows, verdicts


def _preset_kahane_bound(params, seed):
    n = int(params.get("n", 4))
    spec = lazy_cycle(int(params.get("cycle", 5)))
    set_x = enumerate_paths(spec, 0, n)
    law = intersection_law_exact(set_x, set_x)
    rows = [_row("E_I", law.e_i)]
    verdicts = []
    for eps in params.get("epsilons", (0.1, 0.5)):
        tail = law.tail(eps * law.e_i)
        bound = (1.0 - eps) ** 2 / 4.0
        rows.append(_row(f"tail_eps_{eps}", tail))
        verdicts.append(
            Verdict.check(f"paley-zygmund-eps-{eps}", tail, bound, bound, ">=")
        )
    return rows, verdicts


def _preset_heat_kernel(params, seed):
    N = int(params.get("N", 20))
    rows, verdicts = [], []
    for name, spec, x in [
        ("C6", srw_cycle(6), 0),
        ("Z1-interval-40", z1_interval(40), 0),
    ]:
        lhs, rhs = heat_kernel_identity_check(spec, x, N)
        rows += [_row(f"{name}/pairwise_sum", lhs), _row(f"{name}/weighted_returns", rhs)]
        verdicts.append(
            Verdict.check(f"{name}/heat-kernel-identity", abs(lhs - rhs),
                          EXACT_TOL, EXACT_TOL, "<=")
        )
    return rows, verdicts


def _preset_lemma_intloop(params, seed):
    d = int(params.get("dimension", 3))
    q = float(params.get("kill", 0.01))
    horizon = int(params.get("horizon", 10**5))
    n_pairs = int(params.get("n_pairs", 10**4))
    start_x = tuple(params.get("start_x", (0,) * d))
    start_y = tuple(params.get("start_y", (0,) * d))
    spec = LatticeChainSpec(dimension=d, kill_prob=q)
    res = mc_hit_ratio(spec, spec, start_x, start_y, horizon, n_pairs, seed)
    rows = [
        _row("p_intersect", res.p_xy, _prop_se(res.n_hit_xy, n_pairs), *res.p_xy_ci),
        _row("p_le_intersect", res.p_le, _prop_se(res.n_hit_le, n_pairs), *res.p_le_ci),
    ]
    verdicts = []
    if res.ratio is None:
        rows.append(_row("ratio_undefined", math.nan))
        verdicts.append(Verdict.check("ratio-defined", 0.0, 1.0, 2.0**-8, ">="))
    else:
        rows.append(_row("ratio", res.ratio, None, *res.ratio_ci))
        verdicts.append(
            Verdict.check("loop-erasure-hit-ratio-2^-8", res.ratio_ci[0],
                          2.0**-8, 2.0**-8, ">=")
        )
    return rows, verdicts


def _prop_se(successes: int, trials: int) -> float:
    p = successes / trials
    return math.sqrt(p * (1.0 - p) / trials)


def _preset_dichotomy(params, seed):
    ns = [int(v) for v in params.get("ns", (100, 1000, 10000))]
    n3 = int(params.get("n_pairs_z3", 1000))
    n5 = int(params.get("n_pairs_z5", 2000))
    sigma = float(params.get("sigma", 3.0))
    rows, verdicts = [], []
    results = {}
    for d, n_pairs, tag in ((3, n3, "Z3"), (5, n5, "Z5")):
        for i, n in enumerate(ns):
            counts = lattice_pair_counts(d, 0.0, n, n_pairs, seed + d, 10**6 * i, 0, 0)
            m = float(counts.mean())
            se = float(counts.std(ddof=1) / math.sqrt(n_pairs))
            results[(tag, n)] = (m, se)
            rows.append(_row(f"{tag}/E_I_n_{n}", m, se))
    for a, b in zip(ns, ns[1:]):
        m1, s1 = results[("Z3", a)]
        m2, s2 = results[("Z3", b)]
        gap = m2 - m1
        verdicts.append(
            Verdict.check(f"Z3-growth-{a}-to-{b}", gap,
                          sigma * math.hypot(s1, s2), sigma, ">=")
        )
    m1, s1 = results[("Z5", ns[-2])]
    m2, s2 = results[("Z5", ns[-1])]
    verdicts.append(
        Verdict.check(f"Z5-stable-{ns[-2]}-to-{ns[-1]}", abs(m2 - m1),
                      sigma * math.hypot(s1, s2), sigma, "<=")
    )
    return rows, verdicts


def _preset_counterexample_h(params, seed):
    n_samples = int(params.get("n_samples", 2 * 10**5))
    cap = int(params.get("cap", 10**5))
    escape_radius = int(params.get("escape_radius", 32))
    tolerance = float(params.get("tolerance", 0.10))
    est = chains.mc_green(
        GluedGraphSpec(),
        ("o",),
        [("o",), ("line", 1)],
        n_samples,
        cap=cap,
        seed=seed,
        escape_radius=escape_radius,
    )
    ratio, ci = est.ratio_with_ci(1, 0)
    rows = [
        _row("G_oo_estimate", est.mean[0], est.stderr[0]),
        _row("G_oz_estimate", est.mean[1], est.stderr[1]),
        _row("ratio_G_oz_over_G_oo", ratio, None, *ci),
        _row("truncated_fraction", est.truncated_fraction),
        _row("escape_return_bound", est.escape_return_bound),
    ]
    target = 2.0 / 12.0
    verdicts = [
        Verdict.check("green-ratio-one-sixth", abs(ratio - target),
                      tolerance * target, target, "<=")
    ]
    return rows, verdicts


def _preset_wilson_uniformity(params, seed):
    n_samples = int(params.get("n_samples", 16000))
    graph = complete_graph(4)
    trees = enumerate_spanning_trees(graph)
    index = {t: i for i, t in enumerate(trees)}
    counts = np.zeros(len(trees), dtype=np.int64)
    for i in range(n_samples):
        t = wilson_tree(graph, 0, seed, stream=i)
        counts[index[t.edge_ids()]] += 1
    stat, p = chisquare_uniform(counts)
    rows = [
        _row("n_spanning_trees", len(trees)),
        _row("chi_square_stat", stat),
        _row("chi_square_p", p),
    ]
    verdicts = [Verdict.check("k4-uniformity-p", p, 0.01, 0.01, ">=")]

    tree_graph = path_graph(5)
    unique = enumerate_spanning_trees(tree_graph)[0]
    identical = all(
        wilson_tree(tree_graph, 0, seed + s).edge_ids() == unique for s in range(3)
    )
    rows.append(_row("tree_input_identity", float(identical)))
    verdicts.append(
        Verdict.check("tree-input-identity", float(identical), 1.0, 1.0, ">=")
    )
    return rows, verdicts


def _preset_pemantle_path(params, seed):
    n_samples = int(params.get("n_samples", 10**5))
    bound = float(params.get("tv_bound", 0.02))
    rows, verdicts = [], []
    cases = [
        ("C4-opposite", cycle_graph(4), 0, 2),
        ("K3-adjacent", complete_graph(3), 0, 1),
    ]
    for name, graph, x, y in cases:
        rep = pemantle_check(graph, x, y, n_samples, seed)
        rows.append(_row(f"{name}/tv_distance", rep.tv_distance, rep.tv_bootstrap_se))
        verdicts.append(
            Verdict.check(f"{name}/path-law-tv", rep.tv_distance, bound, bound, "<=")
        )
    return rows, verdicts


@dataclass
class TripleIntersectionReport:
    n_runs: int
    mean_triple: float
    mean_partial_triple: float
    n_triple_nonempty: int
    n_partial_nonempty: int

    @property
    def conditional_fraction(self) -> float | None:
        if self.n_triple_nonempty == 0:
            return None
        return self.n_partial_nonempty / self.n_triple_nonempty


def triple_intersection(
    spec,
    start_x,
    start_y,
    horizon: int,
    n_runs: int,
    seed: int,
    z_spec=None,
    start_z=None,
    z_set=None,
) -> TripleIntersectionReport:
    """Counts of X cap Y cap Z and of L_Z(X) cap Y cap Z over sampled runs.

    Z is either a fixed state set (``z_set``) or, per run, the trace of an
    independent walk of ``z_spec`` from ``start_z``.  The conditional
    fraction reported is P[partial triple nonempty | triple nonempty] over
    the runs, a finite-scale proxy only.
    """
    if (z_set is None) == (z_spec is None):
        raise ValueError("provide exactly one of z_set or (z_spec, start_z)")
    totals = np.zeros(n_runs)
    totals_partial = np.zeros(n_runs)
    nonempty = partial_nonempty = 0
    for i in range(n_runs):
        px = sample_path(spec, start_x, horizon, seed, 3 * i)
        py = sample_path(spec, start_y, horizon, seed, 3 * i + 1)
        if z_set is None:
            pz = sample_path(z_spec, start_z, horizon, seed, 3 * i + 2)
            zs = set(pz.states)
        else:
            zs = set(z_set)
        triple = (set(px.states) & set(py.states)) & zs
        lz = partial_loop_erase(px.states, zs)
        triple_partial = (set(lz) & set(py.states)) & zs
        totals[i] = len(triple)
        totals_partial[i] = len(triple_partial)
        nonempty += bool(triple)
        partial_nonempty += bool(triple_partial)
    return TripleIntersectionReport(
        n_runs=n_runs,
        mean_triple=float(totals.mean()),
        mean_partial_triple=float(totals_partial.mean()),
        n_triple_nonempty=nonempty,
        n_partial_nonempty=partial_nonempty,
    )


def _preset_triple_intersection(params, seed):
    d = int(params.get("dimension", 3))
    q = float(params.get("kill", 0.01))
    horizon = int(params.get("horizon", 10**5))
    n_runs = int(params.get("n_runs", 2000))
    spec = LatticeChainSpec(dimension=d, kill_prob=q)
    origin = (0,) * d
    rep = triple_intersection(
        spec, origin, origin, horizon, n_runs, seed, z_spec=spec, start_z=origin
    )
    frac = rep.conditional_fraction
    rows = [
        _row("mean_triple_count", rep.mean_triple),
        _row("mean_partial_triple_count", rep.mean_partial_triple),
        _row("n_triple_nonempty", rep.n_triple_nonempty),
        _row("conditional_fraction", math.nan if frac is None else frac),
    ]
    verdicts = [
        Verdict.check("partial-erasure-triple-2^-8",
                      0.0 if frac is None else frac, 2.0**-8, 2.0**-8, ">=")
    ]
    return rows, verdicts


PRESETS = {
    "lemma-intloop": _preset_lemma_intloop,
    "seconv-sandwich": _preset_seconv_sandwich,
    "chi-half": _preset_chi_half,
    "moment-identity": _preset_moment_identity,
    "kahane-bound": _preset_kahane_bound,
    "heat-kernel": _preset_heat_kernel,
    "dichotomy-z3-z5": _preset_dichotomy,
    "counterexample-H": _preset_counterexample_h,
    "wilson-uniformity": _preset_wilson_uniformity,
    "pemantle-path": _preset_pemantle_path,
    "triple-intersection": _preset_triple_intersection,
}


def run_experiment(config: ExperimentConfig) -> ExperimentReport:
    """Run one preset and, when out_dir is set, write its three report files."""
    if config.preset not in PRESETS:
        raise ValueError(
            f"unknown preset {config.preset!r}; choose from {sorted(PRESETS)}"
        )
    rows, verdicts = PRESETS[config.preset](config.params, config.seed)
    report = ExperimentReport(config.preset, rows, verdicts)
    if config.out_dir:
        write_report(config, report, config.out_dir)
    return report


def write_report(config: ExperimentConfig, report: ExperimentReport, out_dir: str) -> None:
    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, "results.csv"), "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["quantity", "estimate", "stderr", "ci_lo", "ci_hi"])
        for quantity, est, se, lo, hi in report.rows:
            writer.writerow([
                quantity,
                repr(est),
                "" if se is None else repr(se),
                "" if lo is None else repr(lo),
                "" if hi is None else repr(hi),
            ])
    with open(os.path.join(out_dir, "verdicts.json"), "w", encoding="utf-8") as fh:
        json.dump(
            {
                "preset": report.preset,
                "all_pass": report.all_passed,
                "verdicts": [v.as_dict() for v in report.verdicts],
            },
            fh,
            indent=2,
            sort_keys=True,
        )
        fh.write("\n")
    with open(os.path.join(out_dir, "run-manifest.json"), "w", encoding="utf-8") as fh:
        json.dump(
            {
                "config": config.as_dict(),
                "package_version": __version__,
                "kernel_backend": kernel_backend,
                "numpy_version": np.__version__,
            },
            fh,
            indent=2,
            sort_keys=True,
        )
        fh.write("\n")
