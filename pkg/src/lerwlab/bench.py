"""Benchmark of the compiled walk kernels against the numpy fallback.

Runs each hot kernel on both backends with the same seeds, times them, and
verifies the outputs are bit-identical (the two implementations share one
draw protocol, so any mismatch is a bug, not noise).
"""

from __future__ import annotations

import json
import time

import numpy as np

from ._kernels import _pyfallback

try:
    from ._kernels import _native
except ImportError:
    _native = None


def _workloads(quick: bool):
    scale = 10 if quick else 1
    targets = np.array([0, (1 << 61) + 1], dtype=np.int64)
    return [
        (
            "lattice_pair_hits[Z3 q=0.01]",
            "lattice_pair_hits",
            (3, 0.01, 10**5, 4000 // scale, 42, 0, 0, 0),
        ),
        (
            "lattice_pair_counts[Z3 n=1e4]",
            "lattice_pair_counts",
            (3, 0.0, 10**4, 200 // scale, 43, 0, 0, 0),
        ),
        (
            "lattice_pair_counts[Z5 n=1e4]",
            "lattice_pair_counts",
            (5, 0.0, 10**4, 200 // scale, 44, 0, 0, 0),
        ),
        (
            "glued_visit_counts[cap=1e5]",
            "glued_visit_counts",
            (20000 // scale, 10**5, 45, 0, 32 * 32, targets),
        ),
    ]


def _as_arrays(result):
    if isinstance(result, tuple):
        return result
    return (result,)


def run_benchmark(quick: bool = False) -> list[dict]:
    rows = []
    for label, fn_name, args in _workloads(quick):
        entry = {"kernel": label}
        t0 = time.perf_counter()
        py_out = _as_arrays(getattr(_pyfallback, fn_name)(*args))
        entry["python_s"] = time.perf_counter() - t0
        if _native is not None:
            t0 = time.perf_counter()
            nat_out = _as_arrays(getattr(_native, fn_name)(*args))
            entry["native_s"] = time.perf_counter() - t0
            entry["identical"] = all(
                np.array_equal(a, b) for a, b in zip(py_out, nat_out)
            )
            entry["speedup"] = entry["python_s"] / entry["native_s"]
        rows.append(entry)
    return rows


def format_table(rows: list[dict]) -> str:
    lines = [f"{'kernel':38s} {'python':>9s} {'native':>9s} {'speedup':>8s} {'identical':>9s}"]
    for r in rows:
        if "native_s" in r:
            lines.append(
                f"{r['kernel']:38s} {r['python_s']:8.3f}s {r['native_s']:8.3f}s "
                f"{r['speedup']:7.1f}x {str(r['identical']):>9s}"
            )
        else:
            lines.append(f"{r['kernel']:38s} {r['python_s']:8.3f}s {'-':>9s} {'-':>8s} {'-':>9s}")
    if _native is None:
        lines.append("compiled kernels unavailable; showing the numpy fallback only")
    return "\n".join(lines)


def main(out_path: str | None = None, quick: bool = False) -> list[dict]:
    rows = run_benchmark(quick=quick)
    print(format_table(rows))
    if out_path:
        with open(out_path, "w", encoding="utf-8") as fh:
            json.dump(rows, fh, indent=2)
            fh.write("\n")
    return rows
