"""Candidate-based elicitation: candidates, pruning, termination, and the solve loop."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .agents import EQUAL, GREATER, LESS, Ledger
from .bundles import CapacityError, check_item_count, format_bundle
from .network import BoundsNetwork

DEFAULT_CANDIDATE_CAP = 10 ** 6
_CHUNK = 512


class StalledPolicyError(RuntimeError):
    """The policy proposed nothing although the candidate set is not settled."""


class InferableQueryError(RuntimeError):
    """The policy proposed a query whose answer is already implied."""


@dataclass(frozen=True)
class Query:
    kind: str  # "value", "order" or "bound"
    agent: int
    bundle: int
    other: int | None = None  # second bundle of an order query
    side: str | None = None  # "lower" / "upper" for bound queries
    hint: float | None = None

    def describe(self) -> str:
        if self.kind == "value":
            return f"value agent={self.agent} bundle={format_bundle(self.bundle)}"
        if self.kind == "order":
            return (
                f"order agent={self.agent} a={format_bundle(self.bundle)} "
                f"b={format_bundle(self.other)}"
            )
        return (
            f"bound agent={self.agent} bundle={format_bundle(self.bundle)} "
            f"side={self.side} hint={self.hint:g}"
        )


def initial_candidates(
    n: int, k: int, cap: int = DEFAULT_CANDIDATE_CAP, excluded: Sequence[int] = ()
) -> np.ndarray:
    """All allocations of every item to one of the ``n`` agents.

    Returns an ``(n**k, n)`` array of bundle masks.  Row ``idx`` gives item
    ``j`` to the ``j``-th base-``n`` digit of ``idx`` (item 0 least
    significant).  Agents in ``excluded`` always receive the empty bundle,
    so only the remaining agents are enumerated.
    """
    k = check_item_count(k)
    if n < 1:
        raise ValueError("need at least one agent")
    active = [i for i in range(n) if i not in set(excluded)]
    if not active:
        raise ValueError("every agent is excluded")
    m = len(active) ** k
    if m > cap:
        raise CapacityError(f"{len(active)}**{k} = {m} candidates exceeds cap {cap}")
    idx = np.arange(m, dtype=np.int64)
    out = np.zeros((m, n), dtype=np.int64)
    base = len(active)
    for j in range(k):
        owner = (idx // base ** j) % base
        for pos, agent in enumerate(active):
            out[owner == pos, agent] |= 1 << j
    return out


@dataclass
class ElicitationState:
    """Everything the elicitor knows during one run.

    Parameters
    ----------
    n, k : int
        Agents and items.
    strict : bool, default=False
        Prune only candidates proven strictly worse than another.
    order_cost : float, default=0.1
        Cost charged per order query.
    excluded : sequence of int
        Agents forced to receive nothing (sub-economies for payments).
    """

    n: int
    k: int
    strict: bool = False
    order_cost: float = 0.1
    pin_empty: bool = True
    candidate_cap: int = DEFAULT_CANDIDATE_CAP
    excluded: tuple[int, ...] = ()
    networks: list[BoundsNetwork] = field(init=False)
    candidates: np.ndarray = field(init=False)
    ledger: Ledger = field(init=False)

    def __post_init__(self):
        self.k = check_item_count(self.k)
        self.excluded = tuple(sorted(set(self.excluded)))
        self.networks = [BoundsNetwork(self.k, self.pin_empty) for _ in range(self.n)]
        self.candidates = initial_candidates(self.n, self.k, self.candidate_cap, self.excluded)
        self.ledger = Ledger(order_cost=self.order_cost)
        self.hints: dict[tuple[int, int, str], float] = {}
        self._hint_arrays = {
            (i, side): np.zeros(1 << self.k) for i in range(self.n) for side in ("lower", "upper")
        }
        self.orders: dict[tuple[int, int, int], str] = {}
        self.trace: list[tuple[Query, object, float]] = []
        self._pruned_at: tuple | None = None
        self._dominance: tuple | None = None

    # -- bounds on candidates --------------------------------------------
    def candidate_bounds(self, candidates: np.ndarray | None = None) -> tuple[np.ndarray, np.ndarray]:
        C = self.candidates if candidates is None else candidates
        lo = np.zeros(len(C))
        hi = np.zeros(len(C))
        for i, net in enumerate(self.networks):
            lb, ub = net.arrays()
            lo += lb[C[:, i]]
            hi += ub[C[:, i]]
        return lo, hi

    def _versions(self) -> tuple:
        return tuple(net.version for net in self.networks) + (len(self.candidates),)

    def _path(self, i: int, rows: np.ndarray, cols: np.ndarray) -> np.ndarray:
        net = self.networks[i]
        if net.extra_edges():
            return net.reach[np.ix_(rows, cols)]
        return (cols[None, :] & ~rows[:, None]) == 0

    def dominance_scores(self, cols: np.ndarray | None = None) -> np.ndarray:
        """Best provable margin ``S[c, c']`` of candidate ``c`` over ``c'``.

        ``S >= 0`` proves ``v(c) >= v(c')``.  Agents whose bundle in ``c``
        provably dominates the one in ``c'`` contribute ``max(0, lb - ub)``;
        the rest contribute ``lb - ub``.
        """
        C = self.candidates
        if cols is None:
            cols = np.arange(len(C))
        score = np.zeros((len(C), len(cols)))
        for i, net in enumerate(self.networks):
            lb, ub = net.arrays()
            rows_b, cols_b = C[:, i], C[cols, i]
            diff = lb[rows_b][:, None] - ub[cols_b][None, :]
            path = self._path(i, rows_b, cols_b)
            score += np.where(path, np.maximum(diff, 0.0), diff)
        return score

    def dominance_matrix(self, cols: np.ndarray | None = None) -> np.ndarray:
        """``D[c, c']``: candidate ``c`` dominates candidate ``c'`` (diagonal False)."""
        if cols is None:
            cols = np.arange(len(self.candidates))
        score = self.dominance_scores(cols)
        D = score > 0 if self.strict else score >= 0
        D[cols, np.arange(len(cols))] = False
        return D

    def dominates_candidate(self, c: int, c2: int) -> bool:
        """Index-based check that candidate ``c`` dominates candidate ``c2``."""
        if c == c2:
            return True
        score = self.dominance_scores(np.array([c2]))[c, 0]
        return bool(score > 0 if self.strict else score >= 0)

    def prune(self) -> int:
        """Drop, one at a time in index order, every candidate dominated by a survivor.

        Returns the number removed.  At least one candidate always remains.
        """
        stamp = self._versions()
        if stamp == self._pruned_at:
            return 0
        m = len(self.candidates)
        alive = np.ones(m, dtype=bool)
        for start in range(0, m, _CHUNK):
            cols = np.arange(start, min(m, start + _CHUNK))
            D = self.dominance_matrix(cols)
            hit = np.flatnonzero(D.any(axis=0))
            for j in hit:
                if D[alive, j].any():
                    alive[cols[j]] = False
        removed = int(m - alive.sum())
        if removed:
            self.candidates = self.candidates[alive]
        self._pruned_at = self._versions()
        return removed

    def done(self) -> bool:
        if len(self.candidates) == 1:
            return True
        lo, hi = self.candidate_bounds()
        return bool(np.all(lo == hi))

    # -- allocatability --------------------------------------------------
    def allocatable_mask(self, i: int) -> np.ndarray:
        mask = np.zeros(1 << self.k, dtype=bool)
        mask[self.candidates[:, i]] = True
        return mask

    def allocatable_pairs(self) -> set[tuple[int, int]]:
        """Set of ``(bundle, agent)`` pairs that some remaining candidate uses."""
        return {
            (int(b), i) for i in range(self.n) for b in np.unique(self.candidates[:, i])
        }

    def allocation_counts(self, i: int) -> np.ndarray:
        return np.bincount(self.candidates[:, i], minlength=1 << self.k)

    def classify_case(self, b: int, i: int) -> tuple[int, int]:
        """Count allocatable super-bundles (x) and sub-bundles (y) a value for ``(b, i)`` could move."""
        mask = self.allocatable_mask(i)
        if mask[b]:
            raise ValueError(f"({format_bundle(b)}, {i}) is allocatable")
        net = self.networks[i]
        x = y = 0
        for b2 in np.flatnonzero(mask).tolist():
            if b2 != b and b & ~b2 == 0 and net.lb(b2) < net.ub(b):
                x += 1
            elif b2 != b and b2 & ~b == 0 and net.ub(b2) > net.lb(b):
                y += 1
        return x, y

    # -- queries ---------------------------------------------------------
    def hint_used(self, i: int, b: int, side: str) -> float:
        return self.hints.get((i, b, side), 0.0)

    def hint_array(self, i: int, side: str) -> np.ndarray:
        """Cumulative hint time issued to agent ``i`` per bundle on one side (read-only)."""
        return self._hint_arrays[(i, side)]

    def order_key(self, i: int, a: int, b: int) -> tuple[int, int, int]:
        return (i, min(a, b), max(a, b))

    def is_inferable(self, q: Query) -> bool:
        net = self.networks[q.agent]
        if q.kind == "value":
            return net.is_known(q.bundle)
        if q.kind == "order":
            return (
                q.bundle == q.other
                or self.order_key(q.agent, q.bundle, q.other) in self.orders
                or net.comparable(q.bundle, q.other)
            )
        if q.kind == "bound":
            return net.is_known(q.bundle) or self.hint_used(q.agent, q.bundle, q.side) >= 1.0
        raise ValueError(f"unknown query kind {q.kind!r}")

    def ask(self, q: Query, agents) -> object:
        """Put ``q`` to its agent, fold the answer into the network, charge the ledger."""
        agent = agents[q.agent]
        net = self.networks[q.agent]
        if q.kind == "value":
            answer = agent.answer_value(q.bundle)
            net.set_value(q.bundle, answer)
            cost = 1.0
            self.ledger.value += 1
        elif q.kind == "order":
            answer = agent.answer_order(q.bundle, q.other)
            if answer in (GREATER, EQUAL):
                net.add_edge(q.bundle, q.other)
            if answer in (LESS, EQUAL):
                net.add_edge(q.other, q.bundle)
            self.orders[self.order_key(q.agent, q.bundle, q.other)] = answer
            cost = self.order_cost
            self.ledger.order += 1
        elif q.kind == "bound":
            answer = agent.answer_bound(q.bundle, q.side, q.hint)
            key = (q.agent, q.bundle, q.side)
            self.hints[key] = min(1.0, self.hints.get(key, 0.0) + q.hint)
            self._hint_arrays[(q.agent, q.side)][q.bundle] = self.hints[key]
            if q.side == "lower":
                net.tighten_lower(q.bundle, answer)
            else:
                net.tighten_upper(q.bundle, answer)
            cost = q.hint
            self.ledger.bound += 1
            self.ledger.bound_time += q.hint
        else:
            raise ValueError(f"unknown query kind {q.kind!r}")
        self.trace.append((q, answer, cost))
        return answer

    def allocation(self) -> tuple[int, ...]:
        return tuple(int(b) for b in self.candidates[0])


@dataclass
class SolveResult:
    allocation: tuple[int, ...]
    welfare: float | None
    lower: float
    upper: float
    ledger: Ledger
    state: ElicitationState

    @property
    def trace(self):
        return self.state.trace


def solve(
    state: ElicitationState,
    policy,
    agents,
    monitor: Callable[[ElicitationState], None] | None = None,
    max_queries: int | None = None,
) -> SolveResult:
    """Query until the remaining candidates are provably optimal.

    ``policy.select(state)`` proposes each query.  ``monitor``, if given,
    is called after every prune.
    """
    if hasattr(policy, "reset"):
        policy.reset(state)
    state.prune()
    if monitor:
        monitor(state)
    asked = 0
    while not state.done():
        q = policy.select(state)
        if q is None:
            raise StalledPolicyError(f"{type(policy).__name__} returned no query")
        if state.is_inferable(q):
            raise InferableQueryError(f"{type(policy).__name__} asked inferable {q.describe()}")
        state.ask(q, agents)
        state.prune()
        if monitor:
            monitor(state)
        asked += 1
        if max_queries is not None and asked > max_queries:
            raise StalledPolicyError(f"exceeded {max_queries} queries")
    alloc = state.allocation()
    lo, hi = state.candidate_bounds(state.candidates[:1])
    welfare = None
    if all(hasattr(a, "truth") for a in agents):
        welfare = float(sum(agents[i].truth.values[b] for i, b in enumerate(alloc)))
    return SolveResult(alloc, welfare, float(lo[0]), float(hi[0]), state.ledger, state)


def format_trace(trace) -> str:
    """Line-delimited ``query -> answer cost=c`` records."""
    lines = []
    for q, answer, cost in trace:
        ans = f"{answer:g}" if isinstance(answer, float) else str(answer)
        lines.append(f"{q.describe()} -> {ans} cost={cost:g}")
    return "\n".join(lines) + ("\n" if lines else "")
