"""Best-first elicitation over the lattice of rank vectors.

A rank vector ``r`` assigns each agent ``i`` its ``r[i]``-th favourite
bundle.  Children increment one coordinate, so values never increase going
down the lattice; the first feasible vector popped in best-first order is
therefore an optimal allocation.
"""
from __future__ import annotations

import bisect
import heapq
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable

import numpy as np

from .agents import Ledger
from .network import BoundsNetwork

RankVector = tuple[int, ...]


def children(r: RankVector, k: int) -> list[RankVector]:
    top = 1 << k
    out = []
    for i, ri in enumerate(r):
        if ri < top:
            out.append(r[:i] + (ri + 1,) + r[i + 1:])
    return out


def lattice_size(n: int, k: int) -> int:
    return (1 << k) ** n


class RankKnowledge:
    """What the elicitor has learned: answered ranks plus one bounds network per agent.

    The bottom rank ``2**k`` is the empty bundle by construction and is
    known without asking.  Each newly learned rank is chained to its known
    neighbours with dominance edges.
    """

    def __init__(self, n: int, k: int):
        self.n, self.k = n, k
        self.top = 1 << k
        self.networks = [BoundsNetwork(k, pin_empty=True) for _ in range(n)]
        self.bundle_at: list[dict[int, int]] = [{self.top: 0} for _ in range(n)]
        self._known: list[list[int]] = [[self.top] for _ in range(n)]
        self._tables: list[tuple | None] = [None] * n

    def knows_bundle(self, i: int, r: int) -> bool:
        return r in self.bundle_at[i]

    def record_rank(self, i: int, r: int, b: int) -> None:
        known = self._known[i]
        pos = bisect.bisect_left(known, r)
        known.insert(pos, r)
        self.bundle_at[i][r] = b
        net = self.networks[i]
        if pos > 0:
            net.add_edge(self.bundle_at[i][known[pos - 1]], b)
        if pos + 1 < len(known):
            net.add_edge(b, self.bundle_at[i][known[pos + 1]])

    def term_bounds(self, i: int, r: int) -> tuple[float, float]:
        """Bounds on agent ``i``'s value for its rank-``r`` bundle."""
        known = self._known[i]
        net = self.networks[i]
        pos = bisect.bisect_left(known, r)
        # value is nonincreasing in rank: the nearest known rank below r
        # gives an upper bound, the nearest at or above gives a lower bound
        lo = net.lb(self.bundle_at[i][known[pos]])
        if known[pos] == r:
            return lo, net.ub(self.bundle_at[i][r])
        hi = net.ub(self.bundle_at[i][known[pos - 1]]) if pos > 0 else math.inf
        return lo, hi

    def term_tables(self, i: int) -> tuple[np.ndarray, np.ndarray]:
        """``term_bounds`` for every rank at once; index 0 is unused."""
        net = self.networks[i]
        stamp = (net.version, len(self._known[i]))
        cached = self._tables[i]
        if cached is not None and cached[0] == stamp:
            return cached[1], cached[2]
        known = np.array(self._known[i])
        bundles = np.array([self.bundle_at[i][r] for r in self._known[i]])
        lb, ub = net.arrays()
        lbk, ubk = lb[bundles], ub[bundles]
        ranks = np.arange(self.top + 1)
        pos = np.searchsorted(known, ranks)
        pos[0] = 0
        exact = known[pos] == ranks
        lo = lbk[pos]
        prev_ub = np.where(pos > 0, ubk[np.maximum(pos - 1, 0)], math.inf)
        hi = np.where(exact, ubk[pos], prev_ub)
        self._tables[i] = (stamp, lo, hi)
        return lo, hi

    def value_bounds(self, r: RankVector) -> tuple[float, float]:
        lo = hi = 0.0
        for i, ri in enumerate(r):
            a, b = self.term_bounds(i, ri)
            lo += a
            hi += b
        return lo, hi

    def stamp(self) -> tuple:
        return tuple((net.version, len(kn)) for net, kn in zip(self.networks, self._known))

    def value_bounds_many(self, R: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        lo = np.zeros(len(R))
        hi = np.zeros(len(R))
        for i in range(self.n):
            tlo, thi = self.term_tables(i)
            lo += tlo[R[:, i]]
            hi += thi[R[:, i]]
        return lo, hi


def rank_vector_value_bounds(knowledge: RankKnowledge, r: RankVector) -> tuple[float, float]:
    return knowledge.value_bounds(r)


class Fringe:
    """Insertion-ordered set of rank vectors with cached value bounds.

    Bounds are recomputed only when the elicitor's knowledge changes; in
    between, two lazy heaps give the vector with the best lower bound and
    the vectors whose upper bound exceeds a threshold.
    """

    def __init__(self, n: int, items: Iterable[RankVector] = ()):
        self.n = n
        self._rows = np.zeros((16, n), dtype=np.int64)
        self._alive = np.zeros(16, dtype=bool)
        self._lo = np.zeros(16)
        self._hi = np.zeros(16)
        self._index: dict[RankVector, int] = {}
        self._used = 0
        self._stamp = None
        self._done = 0  # slots whose bounds are current
        self._lo_heap: list = []
        self._hi_heap: list = []
        for r in items:
            self.add(r)

    def add(self, r: RankVector) -> None:
        if r in self._index:
            return
        if self._used == len(self._rows):
            grow = len(self._rows)
            self._rows = np.concatenate([self._rows, np.zeros((grow, self.n), dtype=np.int64)])
            self._alive = np.concatenate([self._alive, np.zeros(grow, dtype=bool)])
            self._lo = np.concatenate([self._lo, np.zeros(grow)])
            self._hi = np.concatenate([self._hi, np.zeros(grow)])
        self._rows[self._used] = r
        self._alive[self._used] = True
        self._index[r] = self._used
        self._used += 1

    def remove(self, r: RankVector) -> None:
        self._alive[self._index.pop(tuple(r))] = False

    def __contains__(self, r) -> bool:
        return tuple(r) in self._index

    def __len__(self) -> int:
        return len(self._index)

    def rows(self) -> np.ndarray:
        """Live vectors in insertion order."""
        return self._rows[: self._used][self._alive[: self._used]]

    def to_list(self) -> list[RankVector]:
        return [tuple(int(x) for x in row) for row in self.rows()]

    def vector(self, slot: int) -> RankVector:
        return tuple(int(x) for x in self._rows[slot])

    def refresh(self, knowledge: "RankKnowledge") -> None:
        stamp = knowledge.stamp()
        if stamp != self._stamp:
            self._stamp = stamp
            live = np.flatnonzero(self._alive[: self._used])
            self._lo[live], self._hi[live] = knowledge.value_bounds_many(self._rows[live])
            self._lo_heap = list(zip((-self._lo[live]).tolist(), live.tolist()))
            self._hi_heap = list(zip((-self._hi[live]).tolist(), live.tolist()))
            heapq.heapify(self._lo_heap)
            heapq.heapify(self._hi_heap)
        elif self._done < self._used:
            new = np.arange(self._done, self._used)
            self._lo[new], self._hi[new] = knowledge.value_bounds_many(self._rows[new])
            for slot in new.tolist():
                heapq.heappush(self._lo_heap, (-self._lo[slot], slot))
                heapq.heappush(self._hi_heap, (-self._hi[slot], slot))
        self._done = self._used

    def champion(self) -> int:
        """Live slot with the largest lower bound, earliest inserted on ties."""
        heap = self._lo_heap
        while not self._alive[heap[0][1]]:
            heapq.heappop(heap)
        return heap[0][1]

    def above(self, threshold: float) -> list[int]:
        """Live slots whose upper bound exceeds ``threshold``."""
        heap, out, stale = self._hi_heap, [], []
        while heap and -heap[0][0] > threshold:
            item = heapq.heappop(heap)
            if self._alive[item[1]]:
                out.append(item[1])
                stale.append(item)
        for item in stale:
            heapq.heappush(heap, item)
        return out

    def bounds(self, slot: int) -> tuple[float, float]:
        return float(self._lo[slot]), float(self._hi[slot])


def _contenders(fringe: Fringe, knowledge: "RankKnowledge") -> list[int]:
    fringe.refresh(knowledge)
    champ = fringe.champion()
    slots = set(fringe.above(fringe.bounds(champ)[0]))
    slots.add(champ)
    return sorted(slots)


def _sequential_survivors(R: np.ndarray, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    D = lo[:, None] >= hi[None, :]
    D |= np.all(R[:, None, :] <= R[None, :, :], axis=2)
    np.fill_diagonal(D, False)
    alive = np.ones(len(R), dtype=bool)
    for j in np.flatnonzero(D.any(axis=0)):
        if D[alive, j].any():
            alive[j] = False
    return alive


def undominated(fringe, knowledge: "RankKnowledge") -> list[RankVector]:
    """Survivors after removing, in fringe order, each vector provably no better than a remaining one.

    ``r'`` beats ``r`` when its lower bound reaches ``r``'s upper bound or
    when ``r'`` is a lattice ancestor of ``r``.  Vectors whose upper bound
    does not exceed the best lower bound are dismissed in one step against
    that best vector; the full pairwise test runs on what is left.
    """
    if not isinstance(fringe, Fringe):
        fringe = Fringe(knowledge.n, fringe)
    if not len(fringe):
        return []
    slots = _contenders(fringe, knowledge)
    if len(slots) == 1:
        return [fringe.vector(slots[0])]
    R = fringe._rows[slots]
    lo, hi = fringe._lo[slots], fringe._hi[slots]
    alive = _sequential_survivors(R, lo, hi)
    return [fringe.vector(s) for s, keep in zip(slots, alive) if keep]


class _Elicitor:
    def __init__(self, agents, knowledge: RankKnowledge):
        self.agents = agents
        self.knowledge = knowledge
        self.ledger = Ledger()

    def bundle(self, i: int, r: int) -> int:
        kn = self.knowledge
        if not kn.knows_bundle(i, r):
            b = self.agents[i].answer_rank(r)
            self.ledger.rank += 1
            kn.record_rank(i, r, b)
        return kn.bundle_at[i][r]

    def value(self, i: int, r: int) -> None:
        lo, hi = self.knowledge.term_bounds(i, r)
        if lo == hi:
            return
        b = self.knowledge.bundle_at[i][r]
        v = self.agents[i].answer_value(b)
        self.ledger.value += 1
        self.knowledge.networks[i].set_value(b, v)


def find_best_node(
    fringe,
    knowledge: RankKnowledge,
    agents,
    choose: str = "max-ub",
    _elicitor: _Elicitor | None = None,
) -> RankVector:
    """Elicit until one fringe vector is provably at least as good as the rest.

    ``choose`` selects which unresolved vector to elicit next: ``"max-ub"``
    (largest upper bound, then fringe order) or ``"first"`` (fringe order).
    """
    if not len(fringe):
        raise ValueError("fringe is empty")
    if not isinstance(fringe, Fringe):
        fringe = Fringe(knowledge.n, fringe)
    el = _elicitor or _Elicitor(agents, knowledge)
    while True:
        S = undominated(fringe, knowledge)
        bounds = [knowledge.value_bounds(r) for r in S]
        if len(S) == 1 or all(lo == hi == bounds[0][0] for lo, hi in bounds):
            return S[0]
        open_ = [(r, b) for r, b in zip(S, bounds) if b[0] < b[1]]
        if choose == "max-ub":
            target = max(open_, key=lambda rb: rb[1][1])[0]
        else:
            target = open_[0][0]
        for i, ri in enumerate(target):
            el.bundle(i, ri)
            el.value(i, ri)


@dataclass
class RankLatticeResult:
    allocation: tuple[int, ...]
    welfare: float | None
    rank_vector: RankVector
    ledger: Ledger
    expansions: int
    knowledge: RankKnowledge = field(repr=False)


def find_optimal(
    agents,
    choose: str = "max-ub",
    monitor: Callable[[RankVector, list[RankVector]], None] | None = None,
) -> RankLatticeResult:
    """Best-first search from the all-ones vector; the first feasible vector popped wins.

    ``monitor(popped, remaining_fringe)`` is called at every pop.
    """
    n = len(agents)
    if n < 1:
        raise ValueError("need at least one agent")
    k = agents[0].k
    knowledge = RankKnowledge(n, k)
    el = _Elicitor(agents, knowledge)
    root = (1,) * n
    fringe = Fringe(n, [root])
    seen = {root}
    expansions = 0
    while len(fringe):
        r = find_best_node(fringe, knowledge, agents, choose, el)
        fringe.remove(r)
        if monitor:
            monitor(r, fringe.to_list())
        bundles = [el.bundle(i, ri) for i, ri in enumerate(r)]
        used = 0
        feasible = True
        for b in bundles:
            if used & b:
                feasible = False
                break
            used |= b
        if feasible:
            welfare = None
            if all(hasattr(a, "truth") for a in agents):
                welfare = float(sum(a.truth.values[b] for a, b in zip(agents, bundles)))
            return RankLatticeResult(tuple(bundles), welfare, r, el.ledger, expansions, knowledge)
        expansions += 1
        for child in children(r, k):
            if child not in seen:
                seen.add(child)
                fringe.add(child)
    raise RuntimeError("lattice exhausted without a feasible vector")
