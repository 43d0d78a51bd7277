# distutils: language = c++
# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled walk kernels.

Draw protocol (shared with the numpy fallback, bit-identical): lattice step t
consumes counter draws 2t-1 (killing) and 2t (direction); a glued-graph step
t consumes draw t.  Pair i of a pair kernel uses streams (stream0 + 2i,
stream0 + 2i + 1); walk i of a single-walk kernel uses stream0 + i.
"""

from cython.operator cimport dereference as deref
from libc.stdint cimport int64_t, uint8_t, uint64_t
from libcpp.algorithm cimport sort as cpp_sort
from libcpp.unordered_map cimport unordered_map
from libcpp.unordered_set cimport unordered_set
from libcpp.vector cimport vector

import numpy as np

from .encoding import decode_glued, decode_lattice, lattice_bits

BACKEND = "native"

CAUSE_HORIZON = 0
CAUSE_KILLED = 1

cdef uint64_t MASK64 = <uint64_t>0xFFFFFFFFFFFFFFFF
cdef uint64_t GOLDEN = <uint64_t>0x9E3779B97F4A7C15
cdef uint64_t MIX1 = <uint64_t>0xBF58476D1CE4E5B9
cdef uint64_t MIX2 = <uint64_t>0x94D049BB133111EB
cdef uint64_t STREAM_SALT = <uint64_t>0xD1B54A32D192ED03
cdef double U53 = 1.0 / 9007199254740992.0


cdef inline uint64_t _mix64(uint64_t z) nogil:
    z ^= z >> 30
    z *= MIX1
    z ^= z >> 27
    z *= MIX2
    z ^= z >> 31
    return z


cdef inline uint64_t _derive_key(uint64_t seed, uint64_t stream) nogil:
    return _mix64(_mix64(seed + GOLDEN) ^ (stream * STREAM_SALT))


cdef uint64_t _mask(object value):
    return <uint64_t>(value & 0xFFFFFFFFFFFFFFFF)


cdef int _walk(int d, double q, int64_t horizon, uint64_t key, int64_t start_enc,
               vector[int64_t]& out) except -1:
    """Fill ``out`` with the encoded path (start included); return the cause."""
    cdef int b = min(20, 62 // d)
    cdef int64_t lim = (<int64_t>1) << (b - 1)
    cdef int64_t axstep[8]
    cdef int64_t coords[8]
    cdef int i
    for i in range(d):
        axstep[i] = (<int64_t>1) << (b * i)
    start = decode_lattice(start_enc, d)
    for i in range(d):
        coords[i] = start[i]
    out.push_back(start_enc)
    cdef int64_t pos = start_enc
    cdef int64_t t
    cdef uint64_t u, v, dr
    cdef int axis, sign
    cdef int two_d = 2 * d
    for t in range(1, horizon + 1):
        if q > 0.0:
            u = _mix64(key + (<uint64_t>(2 * t - 1)) * GOLDEN)
            if (u >> 11) * U53 < q:
                return CAUSE_KILLED
        v = _mix64(key + (<uint64_t>(2 * t)) * GOLDEN)
        dr = v % <uint64_t>two_d
        axis = <int>(dr >> 1)
        sign = 1 if (dr & 1) == 0 else -1
        coords[axis] += sign
        if coords[axis] >= lim or coords[axis] <= -lim:
            raise OverflowError(
                f"walk left the representable box (+-{lim}) for d={d}"
            )
        pos += sign * axstep[axis]
        out.push_back(pos)
    return CAUSE_HORIZON


def lattice_path(int d, double q, horizon, key, start_enc=0):
    """One killed simple random walk on Z^d, encoded; returns (path, cause)."""
    cdef vector[int64_t] buf
    cdef int cause = _walk(d, q, <int64_t>horizon, _mask(key), <int64_t>start_enc, buf)
    cdef Py_ssize_t n = buf.size()
    out = np.empty(n, dtype=np.int64)
    cdef int64_t[::1] view = out
    cdef Py_ssize_t i
    for i in range(n):
        view[i] = buf[i]
    return out, cause


cdef bint _any_in(vector[int64_t]& xs, unordered_set[int64_t]& members) noexcept nogil:
    cdef size_t i
    for i in range(xs.size()):
        if members.count(xs[i]):
            return True
    return False


cdef void _erase_loops_vec(vector[int64_t]& path, vector[int64_t]& out) noexcept nogil:
    """Online cycle erasure of an encoded path into ``out``."""
    cdef unordered_map[int64_t, size_t] pos
    cdef unordered_map[int64_t, size_t].iterator it
    cdef size_t i, j
    cdef int64_t s
    for i in range(path.size()):
        s = path[i]
        it = pos.find(s)
        if it == pos.end():
            pos[s] = out.size()
            out.push_back(s)
        else:
            j = deref(it).second
            while out.size() > j + 1:
                pos.erase(out.back())
                out.pop_back()
    return


def lattice_pair_hits(int d, double q, horizon, n_pairs, seed, stream0,
                      start_x_enc=0, start_y_enc=0):
    """Per pair: does {X} meet {Y}, and does the loop-erasure of X meet {Y}."""
    cdef int64_t n = <int64_t>n_pairs
    cdef int64_t hz = <int64_t>horizon
    cdef uint64_t seed_m = _mask(seed)
    cdef uint64_t stream_m = _mask(stream0)
    cdef int64_t sx = <int64_t>start_x_enc
    cdef int64_t sy = <int64_t>start_y_enc
    hit_xy = np.zeros(n, dtype=np.uint8)
    hit_le = np.zeros(n, dtype=np.uint8)
    cdef uint8_t[::1] hx = hit_xy
    cdef uint8_t[::1] hl = hit_le
    cdef vector[int64_t] x_path, y_path, le
    cdef unordered_set[int64_t] y_set
    cdef int64_t i
    cdef size_t j
    for i in range(n):
        x_path.clear()
        y_path.clear()
        _walk(d, q, hz, _derive_key(seed_m, stream_m + <uint64_t>(2 * i)), sx, x_path)
        _walk(d, q, hz, _derive_key(seed_m, stream_m + <uint64_t>(2 * i + 1)), sy, y_path)
        y_set.clear()
        for j in range(y_path.size()):
            y_set.insert(y_path[j])
        if not _any_in(x_path, y_set):
            continue  # LE(X) is a subset of {X}
        hx[i] = 1
        le.clear()
        _erase_loops_vec(x_path, le)
        if _any_in(le, y_set):
            hl[i] = 1
    return hit_xy, hit_le


def lattice_pair_counts(int d, double q, horizon, n_pairs, seed, stream0,
                        start_x_enc=0, start_y_enc=0):
    """Per pair: number of index pairs (k, m) with X_k = Y_m."""
    cdef int64_t n = <int64_t>n_pairs
    cdef int64_t hz = <int64_t>horizon
    cdef uint64_t seed_m = _mask(seed)
    cdef uint64_t stream_m = _mask(stream0)
    cdef int64_t sx = <int64_t>start_x_enc
    cdef int64_t sy = <int64_t>start_y_enc
    counts = np.zeros(n, dtype=np.int64)
    cdef int64_t[::1] cv = counts
    cdef vector[int64_t] x_path, y_path
    cdef int64_t i, total, cx, cy
    cdef size_t a, b, a2, b2
    cdef int64_t val
    for i in range(n):
        x_path.clear()
        y_path.clear()
        _walk(d, q, hz, _derive_key(seed_m, stream_m + <uint64_t>(2 * i)), sx, x_path)
        _walk(d, q, hz, _derive_key(seed_m, stream_m + <uint64_t>(2 * i + 1)), sy, y_path)
        cpp_sort(x_path.begin(), x_path.end())
        cpp_sort(y_path.begin(), y_path.end())
        total = 0
        a = 0
        b = 0
        while a < x_path.size() and b < y_path.size():
            if x_path[a] < y_path[b]:
                a += 1
            elif y_path[b] < x_path[a]:
                b += 1
            else:
                val = x_path[a]
                a2 = a
                while a2 < x_path.size() and x_path[a2] == val:
                    a2 += 1
                b2 = b
                while b2 < y_path.size() and y_path[b2] == val:
                    b2 += 1
                total += (<int64_t>(a2 - a)) * (<int64_t>(b2 - b))
                a = a2
                b = b2
        cv[i] = total
    return counts


def glued_visit_counts(n_walks, cap, seed, stream0, escape_r2, targets):
    """Visit counts of SRW on the glued graph; see the fallback docstring."""
    cdef int64_t n = <int64_t>n_walks
    cdef int64_t cap_c = <int64_t>cap
    cdef int64_t esc = <int64_t>escape_r2
    cdef uint64_t seed_m = _mask(seed)
    cdef uint64_t stream_m = _mask(stream0)

    targets = np.asarray(targets, dtype=np.int64)
    cdef Py_ssize_t k = len(targets)
    # target plan: kind 0 = shared vertex o, 1 = ray vertex, 2 = Z^5 vertex
    plan_kind = np.empty(k, dtype=np.int64)
    plan_lx = np.zeros(k, dtype=np.int64)
    plan_coords = np.zeros((max(k, 1), 5), dtype=np.int64)
    plan_ssq = np.zeros(k, dtype=np.int64)
    cdef Py_ssize_t j
    for j in range(k):
        state = decode_glued(int(targets[j]))
        if state[0] == "o":
            plan_kind[j] = 0
        elif state[0] == "line":
            plan_kind[j] = 1
            plan_lx[j] = state[1]
        else:
            plan_kind[j] = 2
            for i in range(5):
                plan_coords[j, i] = state[1][i]
            plan_ssq[j] = sum(c * c for c in state[1])
    cdef int64_t[::1] t_kind = plan_kind
    cdef int64_t[::1] t_lx = plan_lx
    cdef int64_t[:, ::1] t_coords = plan_coords
    cdef int64_t[::1] t_ssq = plan_ssq

    counts = np.zeros((n, k), dtype=np.int64)
    truncated = np.zeros(n, dtype=np.uint8)
    cdef int64_t[:, ::1] cv = counts
    cdef uint8_t[::1] tv = truncated

    cdef int64_t w, t, lx, ssq, cur
    cdef uint64_t key, u, deg, idx
    cdef int part, axis, sign, a
    cdef bint alive, match
    cdef int64_t coords[5]
    for w in range(n):
        key = _derive_key(seed_m, stream_m + <uint64_t>w)
        part = 0
        lx = 0
        ssq = 0
        for a in range(5):
            coords[a] = 0
        for j in range(k):
            if t_kind[j] == 0:
                cv[w, j] = 1  # the walk starts at o
        alive = True
        for t in range(1, cap_c + 1):
            u = _mix64(key + (<uint64_t>t) * GOLDEN)
            if part == 1:
                deg = 2
            elif ssq == 0:
                deg = 12
            else:
                deg = 10
            idx = u % deg
            if part == 0 and idx < 10:
                axis = <int>(idx >> 1)
                sign = 1 if (idx & 1) == 0 else -1
                cur = coords[axis]
                ssq += 2 * sign * cur + 1
                coords[axis] = cur + sign
            elif part == 0:
                part = 1
                lx = 1 if idx == 10 else -1
            else:
                lx += 1 - 2 * <int64_t>idx
                if lx == 0:
                    part = 0  # back at the shared vertex o
            for j in range(k):
                if t_kind[j] == 0:
                    match = part == 0 and ssq == 0
                elif t_kind[j] == 1:
                    match = part == 1 and lx == t_lx[j]
                else:
                    match = part == 0 and ssq == t_ssq[j]
                    if match:
                        for a in range(5):
                            if coords[a] != t_coords[j, a]:
                                match = False
                                break
                if match:
                    cv[w, j] += 1
            if esc > 0 and part == 0 and ssq >= esc:
                alive = False
                break
        if alive:
            tv[w] = 1
    return counts, truncated
