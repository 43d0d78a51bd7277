"""Cycle erasure of finite paths: offline, online, and set-restricted.

``loop_erase`` is the literal inductive construction (repeatedly jump past
the last occurrence of the current state); ``OnlineLoopEraser`` pops cycles
the moment they close.  The two are equivalent on finite paths, which stays
a permanent property test rather than a trusted fact.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence


@dataclass(frozen=True)
class LoopErasedPath:
    """Self-avoiding erased path; source_index[j] is where u_j was finalized."""

    states: tuple
    source_index: tuple

    def __post_init__(self):
        if len(self.states) != len(self.source_index):
            raise ValueError("states and source_index lengths differ")

    def __len__(self) -> int:
        return len(self.states)


def loop_erase(path: Sequence) -> LoopErasedPath:
    """Erase cycles from a finite path by the last-occurrence construction.

    u_0 is the first state; from u_j, jump to the entry after the last
    occurrence of u_j.  source_index[j] is that last occurrence.
    """
    states = list(path.states) if hasattr(path, "states") else list(path)
    if not states:
        raise ValueError("cannot loop-erase an empty path")
    last = {s: i for i, s in enumerate(states)}
    out = []
    idx = []
    u = states[0]
    while True:
        k = last[u]
        out.append(u)
        idx.append(k)
        if k + 1 == len(states):
            break
        u = states[k + 1]
    return LoopErasedPath(tuple(out), tuple(idx))


class OnlineLoopEraser:
    """Stateful eraser: cycles are removed at the moment they close."""

    def __init__(self):
        self._states: list = []
        self._index: list = []
        self._pos: dict = {}
        self._pushed = 0

    def push(self, state) -> None:
        t = self._pushed
        self._pushed += 1
        j = self._pos.get(state)
        if j is None:
            self._pos[state] = len(self._states)
            self._states.append(state)
            self._index.append(t)
        else:
            for s in self._states[j + 1 :]:
                del self._pos[s]
            del self._states[j + 1 :]
            del self._index[j + 1 :]
            self._index[j] = t  # re-finalized at this push

    def extend(self, states: Iterable) -> "OnlineLoopEraser":
        for s in states:
            self.push(s)
        return self

    def snapshot(self) -> LoopErasedPath:
        if not self._states:
            raise ValueError("no states pushed yet")
        return LoopErasedPath(tuple(self._states), tuple(self._index))


def partial_loop_erase(path: Sequence, Z) -> list:
    """Erase only cycles that start and end at a state of Z.

    A return to a Z-state currently present in the output truncates back to
    (and including) that occurrence; returns to non-Z states never erase, so
    the result need not be self-avoiding off Z.
    """
    states = list(path.states) if hasattr(path, "states") else list(path)
    if not states:
        raise ValueError("cannot loop-erase an empty path")
    zset = set(Z)
    out: list = []
    zpos: dict = {}  # Z-states occur at most once in the output
    for s in states:
        j = zpos.get(s) if s in zset else None
        if j is None:
            if s in zset:
                zpos[s] = len(out)
            out.append(s)
        else:
            for t in out[j + 1 :]:
                if t in zset:
                    del zpos[t]
            del out[j + 1 :]
    return out


def loop_erase_with_prefix(prefix: Sequence, path: Sequence) -> LoopErasedPath:
    """Loop-erasure of prefix + path; source indices count from the prefix start."""
    states = list(path.states) if hasattr(path, "states") else list(path)
    return loop_erase(list(prefix) + states)
