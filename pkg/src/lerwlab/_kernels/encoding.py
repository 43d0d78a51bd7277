"""Integer packing of lattice and glued-graph states.

A point of Z^d is packed into one int64 in balanced multi-radix form,
``enc = sum_i c_i * 2**(b*i)`` with ``b = min(20, 62 // d)`` bits per axis;
the packing is unique and additive (a unit move on axis ``i`` adds
``+-2**(b*i)``) while every ``|c_i| < 2**(b-1)``.  Walk kernels enforce that
bound and raise rather than wrap.

The glued graph (a copy of Z^5 and a copy of Z sharing one vertex ``o``)
packs ``o`` as 0, ray vertices as ``LINE_TAG + x`` (x != 0), and Z^5
vertices in the lattice packing with d = 5.
"""

from __future__ import annotations

import numpy as np

LINE_TAG = 1 << 61


def lattice_bits(d: int) -> int:
    if not 1 <= d <= 8:
        raise ValueError(f"lattice dimension must be in 1..8, got {d}")
    return min(20, 62 // d)


def lattice_limit(d: int) -> int:
    """Exclusive bound on |coordinate| representable for dimension d."""
    return 1 << (lattice_bits(d) - 1)


def lattice_axis_steps(d: int) -> np.ndarray:
    """Encoded increment of a +1 move along each axis."""
    b = lattice_bits(d)
    return np.array([1 << (b * i) for i in range(d)], dtype=np.int64)


def encode_lattice(coords, d: int) -> int:
    if len(coords) != d:
        raise ValueError(f"expected {d} coordinates, got {len(coords)}")
    lim = lattice_limit(d)
    b = lattice_bits(d)
    enc = 0
    for i, c in enumerate(coords):
        if not -lim < c < lim:
            raise ValueError(f"coordinate {c} out of range (+-{lim}) for d={d}")
        enc += int(c) * (1 << (b * i))
    return enc


def decode_lattice(enc: int, d: int) -> tuple:
    b = lattice_bits(d)
    base = 1 << b
    half = base >> 1
    e = int(enc)
    out = []
    for _ in range(d):
        r = e % base
        if r >= half:
            r -= base
        out.append(r)
        e = (e - r) >> b
    return tuple(out)


def decode_lattice_array(enc: np.ndarray, d: int) -> np.ndarray:
    b = lattice_bits(d)
    base = 1 << b
    half = base >> 1
    e = enc.astype(np.int64, copy=True)
    out = np.empty((len(e), d), dtype=np.int64)
    for i in range(d):
        r = np.mod(e, base)
        r[r >= half] -= base
        out[:, i] = r
        e = (e - r) >> b
    return out


def encode_glued(state) -> int:
    """Pack a glued-graph state tuple: ("o",), ("line", x) or ("z5", coords)."""
    tag = state[0]
    if tag == "o":
        return 0
    if tag == "line":
        x = int(state[1])
        if x == 0:
            return 0
        if not -LINE_TAG // 2 < x < LINE_TAG // 2:
            raise ValueError(f"line coordinate {x} out of range")
        return LINE_TAG + x
    if tag == "z5":
        enc = encode_lattice(state[1], 5)
        return enc  # all-zero coords are the shared vertex o
    raise ValueError(f"unknown glued-graph state tag {tag!r}")


def decode_glued(enc: int) -> tuple:
    e = int(enc)
    if e == 0:
        return ("o",)
    if e >= LINE_TAG // 2:
        return ("line", e - LINE_TAG)
    return ("z5", decode_lattice(e, 5))
