"""Pure-numpy implementations of the hot walk kernels.

Same draw protocol as the compiled module, so outputs are bit-identical:
lattice step t uses counter draws 2t-1 (killing) and 2t (direction); a
glued-graph step t uses draw t.  Pair number i of a pair kernel uses streams
(stream0 + 2i, stream0 + 2i + 1); walk i of a single-walk kernel uses
stream0 + i.
"""

from __future__ import annotations

import numpy as np

from ..rng import GOLDEN, MASK64, derive_key, draw_block, mix64, mix64_array
from .encoding import (
    LINE_TAG,
    decode_glued,
    decode_lattice,
    lattice_axis_steps,
    lattice_limit,
)

BACKEND = "python"

CAUSE_HORIZON = 0
CAUSE_KILLED = 1

_U53 = 2.0**-53


def _derive_keys(seed: int, streams: np.ndarray) -> np.ndarray:
    root = np.uint64(mix64(seed + GOLDEN))
    salted = streams.astype(np.uint64) * np.uint64(0xD1B54A32D192ED03)
    return mix64_array(root ^ salted)


def lattice_path(d: int, q: float, horizon: int, key: int, start_enc: int = 0):
    """One killed simple random walk on Z^d, encoded; returns (path, cause).

    The path includes the start, so its length is steps+1.  Killing (prob q)
    is checked before each move; cause is CAUSE_KILLED or CAUSE_HORIZON.
    """
    lim = lattice_limit(d)
    steps_enc = lattice_axis_steps(d)
    coords = np.array(decode_lattice(start_enc, d), dtype=np.int64)
    pieces = [np.array([start_enc], dtype=np.int64)]
    cause = CAUSE_HORIZON
    done = 0
    # walks with killing rarely live past ~5/q steps; size chunks accordingly
    chunk_cap = 65536 if q <= 0 else max(64, min(65536, int(5.0 / q) + 1))
    while done < horizon:
        c = min(horizon - done, chunk_cap)
        block = draw_block(key, 2 * done, 2 * c)
        u, v = block[0::2], block[1::2]
        take = c
        killed = False
        if q > 0.0:
            dead = (u >> np.uint64(11)).astype(np.float64) * _U53 < q
            if dead.any():
                take = int(np.argmax(dead))
                killed = True
        if take:
            dirs = v[:take] % np.uint64(2 * d)
            axis = (dirs >> np.uint64(1)).astype(np.int64)
            sign = np.where((dirs & np.uint64(1)) == 0, 1, -1).astype(np.int64)
            deltas = np.zeros((take, d), dtype=np.int64)
            deltas[np.arange(take), axis] = sign
            walk = np.cumsum(deltas, axis=0)
            walk += coords
            if np.abs(walk).max() >= lim:
                raise OverflowError(
                    f"walk left the representable box (+-{lim}) for d={d}"
                )
            coords = walk[-1].copy()
            pieces.append(walk @ steps_enc)
        done += take
        if killed:
            cause = CAUSE_KILLED
            break
    return np.concatenate(pieces), cause


def _erase_loops(seq):
    """Online cycle erasure over a list of hashable states."""
    out = []
    pos = {}
    for s in seq:
        j = pos.get(s)
        if j is None:
            pos[s] = len(out)
            out.append(s)
        else:
            for t in out[j + 1 :]:
                del pos[t]
            del out[j + 1 :]
    return out


def lattice_pair_hits(
    d: int,
    q: float,
    horizon: int,
    n_pairs: int,
    seed: int,
    stream0: int,
    start_x_enc: int = 0,
    start_y_enc: int = 0,
):
    """Per pair: does {X} meet {Y}, and does the loop-erasure of X meet {Y}."""
    hit_xy = np.zeros(n_pairs, dtype=np.uint8)
    hit_le = np.zeros(n_pairs, dtype=np.uint8)
    for i in range(n_pairs):
        kx = derive_key(seed, stream0 + 2 * i)
        ky = derive_key(seed, stream0 + 2 * i + 1)
        x_path, _ = lattice_path(d, q, horizon, kx, start_x_enc)
        y_path, _ = lattice_path(d, q, horizon, ky, start_y_enc)
        y_set = set(y_path.tolist())
        x_list = x_path.tolist()
        if y_set.isdisjoint(x_list):
            continue  # LE(X) is a subset of {X}, so neither event occurred
        hit_xy[i] = 1
        if not y_set.isdisjoint(_erase_loops(x_list)):
            hit_le[i] = 1
    return hit_xy, hit_le


def lattice_pair_counts(
    d: int,
    q: float,
    horizon: int,
    n_pairs: int,
    seed: int,
    stream0: int,
    start_x_enc: int = 0,
    start_y_enc: int = 0,
):
    """Per pair: number of index pairs (k, m) with X_k = Y_m."""
    counts = np.zeros(n_pairs, dtype=np.int64)
    for i in range(n_pairs):
        kx = derive_key(seed, stream0 + 2 * i)
        ky = derive_key(seed, stream0 + 2 * i + 1)
        x_path, _ = lattice_path(d, q, horizon, kx, start_x_enc)
        y_path, _ = lattice_path(d, q, horizon, ky, start_y_enc)
        ux, cx = np.unique(x_path, return_counts=True)
        uy, cy = np.unique(y_path, return_counts=True)
        _, ix, iy = np.intersect1d(ux, uy, assume_unique=True, return_indices=True)
        counts[i] = int(np.sum(cx[ix] * cy[iy]))
    return counts


def glued_visit_counts(
    n_walks: int,
    cap: int,
    seed: int,
    stream0: int,
    escape_r2: int,
    targets: np.ndarray,
):
    """Visit counts of SRW on the glued graph, one row per walk.

    Walks start at the shared vertex o and run for at most ``cap`` steps;
    with ``escape_r2 > 0`` a walk stops early once its Z^5 squared distance
    from o reaches ``escape_r2`` (hitting o again from there has negligible
    probability, reported by the caller as a bias bound).  ``truncated``
    flags walks still alive at the cap.
    """
    targets = np.asarray(targets, dtype=np.int64)
    k = len(targets)
    plans = [decode_glued(int(t)) for t in targets]

    counts = np.zeros((n_walks, k), dtype=np.int64)
    truncated = np.zeros(n_walks, dtype=np.uint8)
    for j, plan in enumerate(plans):
        if plan[0] == "o":
            counts[:, j] = 1  # every walk starts at o

    keys = _derive_keys(seed, np.arange(stream0, stream0 + n_walks, dtype=np.int64))
    orig = np.arange(n_walks, dtype=np.int64)
    part = np.zeros(n_walks, dtype=np.int8)  # 0: Z^5 side (incl. o), 1: ray
    coords = np.zeros((n_walks, 5), dtype=np.int64)
    linex = np.zeros(n_walks, dtype=np.int64)
    ssq = np.zeros(n_walks, dtype=np.int64)

    for r in range(1, cap + 1):
        n = len(orig)
        if n == 0:
            break
        u = mix64_array(keys + np.uint64((r * GOLDEN) & MASK64))
        on_line = part == 1
        at_o = ~on_line & (ssq == 0)
        deg = np.full(n, 10, dtype=np.uint64)
        deg[on_line] = 2
        deg[at_o] = 12
        idx = (u % deg).astype(np.int64)

        move_z5 = ~on_line & (idx < 10)
        rows = np.nonzero(move_z5)[0]
        if len(rows):
            ax = idx[rows] >> 1
            sg = 1 - 2 * (idx[rows] & 1)
            cur = coords[rows, ax]
            ssq[rows] += 2 * sg * cur + 1
            coords[rows, ax] = cur + sg

        rows = np.nonzero(at_o & (idx >= 10))[0]
        if len(rows):
            part[rows] = 1
            linex[rows] = np.where(idx[rows] == 10, 1, -1)

        rows = np.nonzero(on_line)[0]
        if len(rows):
            linex[rows] += 1 - 2 * idx[rows]
            back = rows[linex[rows] == 0]
            part[back] = 0  # ray coordinate 0 is the shared vertex o

        for j, plan in enumerate(plans):
            if plan[0] == "o":
                m = (part == 0) & (ssq == 0)
            elif plan[0] == "line":
                m = (part == 1) & (linex == plan[1])
            else:
                m = (part == 0) & (coords == np.array(plan[1])).all(axis=1)
            counts[orig[m], j] += 1

        if escape_r2 > 0:
            live = ~((part == 0) & (ssq >= escape_r2))
            if not live.all():
                orig, keys, part, linex, ssq = (
                    orig[live],
                    keys[live],
                    part[live],
                    linex[live],
                    ssq[live],
                )
                coords = coords[live]

    truncated[orig] = 1
    return counts, truncated
