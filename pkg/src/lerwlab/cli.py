"""Command line interface.

Preset runs: ``lerw-lab <preset> [--config file.json] [--seed N] [--out dir]``
writes results.csv, verdicts.json and run-manifest.json.  The ``intersect``,
``exact`` and ``wilson`` subcommands expose the estimators and oracles on
user-supplied chain specs and graphs; ``bench`` times the compiled kernels
against the numpy fallback.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from collections import Counter

from .chains import (
    FiniteChainSpec,
    LatticeChainSpec,
    load_chain_spec,
    parse_state,
)
from .experiments import PRESETS, ExperimentConfig, run_experiment
from .intersections import TimeSpaceSet, mc_hit_ratio
from .oracle import (
    enumerate_paths,
    hit_prob_exact,
    le_hit_prob_exact,
    sw_moments_exact,
    weight_table_exact,
)
from .statutil import chisquare_uniform
from .wilson import enumerate_spanning_trees, graph_from_json, wilson_tree


def _add_preset_parsers(sub) -> None:
    for name in sorted(PRESETS):
        p = sub.add_parser(name, help=f"run the {name} preset")
        p.add_argument("--config", help="JSON config overriding the preset defaults")
        p.add_argument("--seed", type=int, help="override the seed")
        p.add_argument("--out", help="directory for results.csv / verdicts.json")
        p.set_defaults(func=_cmd_preset, preset=name)


def _cmd_preset(args) -> int:
    if args.config:
        with open(args.config, encoding="utf-8") as fh:
            config = ExperimentConfig.from_json(json.load(fh))
        if config.preset != args.preset:
            raise SystemExit(
                f"config is for preset {config.preset!r}, not {args.preset!r}"
            )
    else:
        config = ExperimentConfig(preset=args.preset)
    if args.seed is not None:
        config.seed = args.seed
    if args.out is not None:
        config.out_dir = args.out
    report = run_experiment(config)
    for v in report.verdicts:
        status = "PASS" if v.passed else "FAIL"
        print(f"[{status}] {v.name}: value={v.value:.10g} bound={v.bound:.10g} "
              f"slack={v.slack:.3g}")
    if config.out_dir:
        print(f"report written to {config.out_dir}")
    return 0 if report.all_passed else 1


def _cmd_intersect(args) -> int:
    spec = load_chain_spec(args.spec)
    if args.kill is not None:
        if not isinstance(spec, LatticeChainSpec):
            raise SystemExit("--kill only applies to lattice specs")
        spec = LatticeChainSpec(dimension=spec.dimension, kill_prob=args.kill)
    start_x = parse_state(spec, args.start_x)
    start_y = parse_state(spec, args.start_y)
    res = mc_hit_ratio(spec, spec, start_x, start_y, args.horizon, args.samples, args.seed)
    rows = [
        ("p_intersect", res.p_xy, _se(res.n_hit_xy, res.n_pairs), *res.p_xy_ci),
        ("p_le_intersect", res.p_le, _se(res.n_hit_le, res.n_pairs), *res.p_le_ci),
    ]
    if res.ratio is not None:
        rows.append(("ratio", res.ratio, "", *res.ratio_ci))
    else:
        rows.append(("ratio", "undefined", "", "", ""))
    _write_csv(args.out, rows)
    return 0


def _se(successes: int, trials: int) -> float:
    p = successes / trials
    return (p * (1 - p) / trials) ** 0.5


def _write_csv(out, rows) -> None:
    fh = open(out, "w", newline="", encoding="utf-8") if out else sys.stdout
    try:
        writer = csv.writer(fh)
        writer.writerow(["quantity", "estimate", "stderr", "ci_lo", "ci_hi"])
        for row in rows:
            writer.writerow(row)
    finally:
        if out:
            fh.close()


def _cmd_exact(args) -> int:
    spec = load_chain_spec(args.spec)
    if not isinstance(spec, FiniteChainSpec):
        raise SystemExit("the exact oracle requires a finite chain spec")
    start_x = parse_state(spec, args.start_x)
    start_y = parse_state(spec, args.start_y)
    if args.m_max is not None or args.n_max is not None:
        m_max = args.m_max if args.m_max is not None else args.horizon
        n_max = args.n_max if args.n_max is not None else args.horizon
        A = TimeSpaceSet.windowed_diagonal(m_max, n_max)
    else:
        A = TimeSpaceSet.diagonal()
    set_x = enumerate_paths(spec, start_x, args.horizon)
    set_y = enumerate_paths(spec, start_y, args.horizon)
    hit = hit_prob_exact(set_x, set_y, A)
    w = weight_table_exact(set_x, set_y, A)
    mom = sw_moments_exact(set_x, set_y, w)
    le_hit = le_hit_prob_exact(set_x, set_y)
    lower = mom.e_s**2 / mom.e_s2 if mom.e_s2 > 0 else 0.0
    checks = [
        ("stopping-time-identity", abs(mom.e_s - hit), 1e-12, "<="),
        ("cauchy-schwarz-lower", lower, hit + 1e-12, "<="),
        ("upper-bound-64", hit, 64 * lower + 1e-12, "<="),
        ("second-moment-64", mom.e_s2, 64 * hit + 1e-12, "<="),
        ("upsilon-half", mom.e_y, 0.5 * mom.e_s - 1e-12, ">="),
        ("le-hit-2^-8", le_hit, 2.0**-8 * hit, ">="),
    ]
    report = {
        "quantities": {
            "hit_prob": float(hit),
            "E_Sw": float(mom.e_s),
            "E_Sw2": float(mom.e_s2),
            "E_Upsilon": float(mom.e_y),
            "E_Upsilon2": float(mom.e_y2),
            "le_hit_prob": float(le_hit),
            "n_paths_x": len(set_x),
            "n_paths_y": len(set_y),
            "weight_support": len(w),
        },
        "checks": [
            {
                "name": name,
                "value": float(value),
                "bound": float(bound),
                "comparator": cmp,
                "slack": float(bound - value) if cmp == "<=" else float(value - bound),
                "pass": bool(value <= bound) if cmp == "<=" else bool(value >= bound),
            }
            for name, value, bound, cmp in checks
        ],
    }
    text = json.dumps(report, indent=2, sort_keys=True) + "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0 if all(c["pass"] for c in report["checks"]) else 1


def _cmd_wilson(args) -> int:
    with open(args.graph, encoding="utf-8") as fh:
        graph = graph_from_json(json.load(fh))
    root = parse_state_graph(graph, args.root)
    tallies: Counter = Counter()
    for i in range(args.samples):
        tree = wilson_tree(graph, root, args.seed, stream=i)
        tallies[tree.edge_ids()] += 1
    report = {
        "samples": args.samples,
        "distinct_trees": len(tallies),
        "trees": [
            {
                "edges": [list(graph.edges[eid]) for eid in sorted(ids)],
                "edge_ids": sorted(ids),
                "count": count,
            }
            for ids, count in sorted(tallies.items(), key=lambda kv: -kv[1])
        ],
    }
    if graph.n_vertices <= 8:
        enum = enumerate_spanning_trees(graph)
        counts = [tallies.get(t, 0) for t in enum]
        stat, p = chisquare_uniform(counts)
        report["enumerated_trees"] = len(enum)
        report["chi_square"] = {"stat": stat, "p_value": p}
    text = json.dumps(report, indent=2) + "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


def parse_state_graph(graph, text: str):
    try:
        val = json.loads(text)
    except json.JSONDecodeError:
        return text
    if isinstance(val, list):
        return tuple(val)
    return val if val in graph.incidence else text


def _cmd_bench(args) -> int:
    from .bench import main as bench_main

    bench_main(out_path=args.out, quick=args.quick)
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="lerw-lab",
        description="Markov chain intersections, loop-erased walks, spanning trees",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    _add_preset_parsers(sub)

    p = sub.add_parser("intersect", help="Monte Carlo hit probabilities for a chain pair")
    p.add_argument("--spec", required=True, help="chain spec JSON file")
    p.add_argument("--start-x", required=True)
    p.add_argument("--start-y", required=True)
    p.add_argument("--kill", type=float, default=None)
    p.add_argument("--horizon", type=int, default=10**5)
    p.add_argument("--samples", type=int, default=10000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None, help="CSV output path (stdout if omitted)")
    p.set_defaults(func=_cmd_intersect)

    p = sub.add_parser("exact", help="exact oracle report for a finite chain pair")
    p.add_argument("--spec", required=True)
    p.add_argument("--start-x", required=True)
    p.add_argument("--start-y", required=True)
    p.add_argument("--horizon", type=int, default=4)
    p.add_argument("--m-max", type=int, default=None, help="time window for the X clock")
    p.add_argument("--n-max", type=int, default=None, help="time window for the Y clock")
    p.add_argument("--out", default=None, help="JSON output path (stdout if omitted)")
    p.set_defaults(func=_cmd_exact)

    p = sub.add_parser("wilson", help="sample uniform spanning trees")
    p.add_argument("--graph", required=True, help="graph JSON file")
    p.add_argument("--root", required=True)
    p.add_argument("--samples", type=int, default=10000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None, help="JSON output path (stdout if omitted)")
    p.set_defaults(func=_cmd_wilson)

    p = sub.add_parser("bench", help="time compiled kernels vs the numpy fallback")
    p.add_argument("--out", default=None, help="JSON output path")
    p.add_argument("--quick", action="store_true", help="smaller workloads")
    p.set_defaults(func=_cmd_bench)

    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
