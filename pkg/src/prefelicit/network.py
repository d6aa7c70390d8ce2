"""Per-agent interval constraint network over the bundle lattice.

Every bundle carries an interval ``[lb, ub]`` on the agent's value for it.
A directed edge ``(a, b)`` records ``v(a) >= v(b)``; free-disposal edges are
installed up front and order answers may add more (including two-way edges,
which encode equality).  Updates are pushed through the graph with a
worklist until no bound moves.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .bundles import check_item_count, format_bundle, subset_matrix

INF = math.inf


class InconsistentAnswerError(ValueError):
    """An answer or propagated bound contradicts what is already proven."""


@dataclass
class ChangeReport:
    """Width reductions produced by one update.

    ``reductions`` maps bundle -> (old width - new width) and only covers
    bundles whose upper bound was already finite before the update.
    ``changed`` lists every bundle whose interval moved at all.
    """

    reductions: dict[int, float] = field(default_factory=dict)
    changed: set[int] = field(default_factory=set)

    @property
    def total(self) -> float:
        return float(sum(self.reductions.values()))

    def merge(self, other: "ChangeReport") -> "ChangeReport":
        for b, r in other.reductions.items():
            self.reductions[b] = self.reductions.get(b, 0.0) + r
        self.changed |= other.changed
        return self


class BoundsNetwork:
    """Interval bounds plus dominance edges for one agent.

    Parameters
    ----------
    k : int
        Number of items; the network has ``2**k`` nodes.
    pin_empty : bool, default=True
        Fix the empty bundle at ``[0, 0]``.
    """

    def __init__(self, k: int, pin_empty: bool = True):
        self.k = check_item_count(k)
        self.size = 1 << self.k
        self.pin_empty = pin_empty
        self._lb = [0.0] * self.size
        self._ub = [INF] * self.size
        if pin_empty:
            self._ub[0] = 0.0
        self._out: dict[int, set[int]] = {}
        self._in: dict[int, set[int]] = {}
        self._reach: np.ndarray | None = None
        self._version = 0
        self._arrays: tuple[int, np.ndarray, np.ndarray] | None = None

    # -- inspection -------------------------------------------------------
    def lb(self, b: int) -> float:
        return self._lb[b]

    def ub(self, b: int) -> float:
        return self._ub[b]

    def interval(self, b: int) -> tuple[float, float]:
        return self._lb[b], self._ub[b]

    def width(self, b: int) -> float:
        return self._ub[b] - self._lb[b]

    def is_known(self, b: int) -> bool:
        return self._lb[b] == self._ub[b]

    @property
    def version(self) -> int:
        """Counter bumped whenever a bound or edge changes."""
        return self._version

    def arrays(self) -> tuple[np.ndarray, np.ndarray]:
        """Bounds as numpy arrays ``(lb, ub)`` indexed by bundle mask."""
        if self._arrays is None or self._arrays[0] != self._version:
            self._arrays = (
                self._version,
                np.array(self._lb, dtype=float),
                np.array(self._ub, dtype=float),
            )
        return self._arrays[1], self._arrays[2]

    def extra_edges(self) -> list[tuple[int, int]]:
        """Edges added on top of free disposal, sorted."""
        return sorted((a, b) for a, outs in self._out.items() for b in outs)

    @property
    def edge_count(self) -> int:
        return self.k * (self.size >> 1) + sum(len(v) for v in self._out.values())

    def parents(self, b: int) -> list[int]:
        """Bundles with an edge into ``b`` (they dominate it directly)."""
        out = [b | (1 << i) for i in range(self.k) if not b >> i & 1]
        extra = self._in.get(b)
        if extra:
            out.extend(extra)
        return out

    def children(self, b: int) -> list[int]:
        out = [b ^ (1 << i) for i in range(self.k) if b >> i & 1]
        extra = self._out.get(b)
        if extra:
            out.extend(extra)
        return out

    @property
    def reach(self) -> np.ndarray:
        """Reflexive-transitive closure of the edge relation (``R[a, b]``: path a->b)."""
        if self._reach is None:
            reach = subset_matrix(self.k)
            for a, b in self.extra_edges():
                _close_edge(reach, a, b)
            self._reach = reach
        return self._reach

    def has_path(self, a: int, b: int) -> bool:
        if b & ~a == 0:
            return True
        if not self._out:
            return False
        return bool(self.reach[a, b])

    def dominates(self, a: int, b: int) -> bool:
        """True iff ``v(a) >= v(b)`` is provable from bounds or a path."""
        return self._lb[a] >= self._ub[b] or self.has_path(a, b)

    def comparable(self, a: int, b: int) -> bool:
        return self.dominates(a, b) or self.dominates(b, a)

    # -- updates ----------------------------------------------------------
    def set_value(self, b: int, v: float) -> ChangeReport:
        """Record an exact value and propagate it both ways."""
        v = float(v)
        if not self._lb[b] <= v <= self._ub[b]:
            raise InconsistentAnswerError(
                f"value {v} for bundle {format_bundle(b)} outside "
                f"proven interval [{self._lb[b]}, {self._ub[b]}]"
            )
        report = ChangeReport()
        snapshot: dict[int, tuple[float, float]] = {}
        self._raise_lower(b, v, snapshot)
        self._lower_upper(b, v, snapshot)
        return self._finish(snapshot, report)

    def tighten_lower(self, b: int, z: float) -> ChangeReport:
        snapshot: dict[int, tuple[float, float]] = {}
        self._raise_lower(b, float(z), snapshot)
        return self._finish(snapshot, ChangeReport())

    def tighten_upper(self, b: int, z: float) -> ChangeReport:
        snapshot: dict[int, tuple[float, float]] = {}
        self._lower_upper(b, float(z), snapshot)
        return self._finish(snapshot, ChangeReport())

    def add_edge(self, a: int, b: int) -> ChangeReport:
        """Record ``v(a) >= v(b)`` and propagate; cycles force equal bounds."""
        if a == b:
            return ChangeReport()
        snapshot: dict[int, tuple[float, float]] = {}
        if b not in self._out.get(a, ()):
            self._out.setdefault(a, set()).add(b)
            self._in.setdefault(b, set()).add(a)
            if self._reach is not None:
                _close_edge(self._reach, a, b)
            self._version += 1
        self._raise_lower(a, self._lb[b], snapshot)
        self._lower_upper(b, self._ub[a], snapshot)
        return self._finish(snapshot, ChangeReport())

    def _raise_lower(self, b: int, z: float, snapshot) -> None:
        lb, ub = self._lb, self._ub
        if z <= lb[b]:
            return
        self._touch(b, snapshot)
        lb[b] = z
        self._check(b)
        stack = [b]
        while stack:
            x = stack.pop()
            val = lb[x]
            for p in self.parents(x):
                if lb[p] < val:
                    self._touch(p, snapshot)
                    lb[p] = val
                    self._check(p)
                    stack.append(p)

    def _lower_upper(self, b: int, z: float, snapshot) -> None:
        lb, ub = self._lb, self._ub
        if z >= ub[b]:
            return
        self._touch(b, snapshot)
        ub[b] = z
        self._check(b)
        stack = [b]
        while stack:
            x = stack.pop()
            val = ub[x]
            for c in self.children(x):
                if ub[c] > val:
                    self._touch(c, snapshot)
                    ub[c] = val
                    self._check(c)
                    stack.append(c)

    def _touch(self, b: int, snapshot) -> None:
        if b not in snapshot:
            snapshot[b] = (self._lb[b], self._ub[b])

    def _check(self, b: int) -> None:
        if self._lb[b] > self._ub[b]:
            raise InconsistentAnswerError(
                f"bundle {format_bundle(b)} has lb {self._lb[b]} > ub {self._ub[b]}"
            )

    def _finish(self, snapshot, report: ChangeReport) -> ChangeReport:
        if snapshot:
            self._version += 1
        for b, (old_lb, old_ub) in snapshot.items():
            new_lb, new_ub = self._lb[b], self._ub[b]
            if (old_lb, old_ub) == (new_lb, new_ub):
                continue
            report.changed.add(b)
            if old_ub != INF:
                report.reductions[b] = (old_ub - old_lb) - (new_ub - new_lb)
        return report

    # -- misc -------------------------------------------------------------
    def copy(self) -> "BoundsNetwork":
        other = BoundsNetwork.__new__(BoundsNetwork)
        other.k, other.size, other.pin_empty = self.k, self.size, self.pin_empty
        other._lb = list(self._lb)
        other._ub = list(self._ub)
        other._out = {a: set(v) for a, v in self._out.items()}
        other._in = {a: set(v) for a, v in self._in.items()}
        other._reach = None if self._reach is None else self._reach.copy()
        other._version = self._version
        other._arrays = None
        return other

    def dump(self) -> str:
        """One ``bundle [lb, ub]`` line per bundle, in mask order."""
        lines = []
        for b in range(self.size):
            lines.append(f"{format_bundle(b)} [{_fmt(self._lb[b])}, {_fmt(self._ub[b])}]")
        return "\n".join(lines) + "\n"

    def __repr__(self) -> str:
        return f"BoundsNetwork(k={self.k}, pin_empty={self.pin_empty})"


def new_network(k: int, pin_empty: bool = True) -> BoundsNetwork:
    return BoundsNetwork(k, pin_empty=pin_empty)


def _close_edge(reach: np.ndarray, a: int, b: int) -> None:
    if reach[a, b]:
        return
    sources = reach[:, a]
    reach[sources] |= reach[b]


def _fmt(x: float) -> str:
    if x == INF:
        return "inf"
    if float(x).is_integer():
        return str(int(x))
    return repr(float(x))
