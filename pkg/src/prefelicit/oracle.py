"""Ground truth: exhaustive winner determination, Clarke payments, and the ball-drawing formulas."""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .agents import Ledger, SimulatedAgent, TrueValuation
from .bundles import CapacityError

DEFAULT_CAP = 10 ** 6


def enumerate_allocations(n: int, k: int, excluded: Sequence[int] = ()):
    """Yield every assignment of all ``k`` items to the non-excluded agents.

    Order matches the candidate enumeration: item 0 is the fastest-varying
    digit.
    """
    active = [i for i in range(n) if i not in set(excluded)]
    for owners in itertools.product(active, repeat=k):
        alloc = [0] * n
        for item, owner in enumerate(reversed(owners)):
            alloc[owner] |= 1 << item
        yield tuple(alloc)


def welfare(valuations: Sequence[TrueValuation], allocation: Sequence[int]) -> int:
    return sum(v.values[b] for v, b in zip(valuations, allocation))


def brute_force_optimal(
    valuations: Sequence[TrueValuation], excluded: Sequence[int] = (), cap: int = DEFAULT_CAP
) -> tuple[tuple[int, ...], int]:
    """Best allocation by full enumeration; ties go to the first one enumerated."""
    n = len(valuations)
    k = valuations[0].k
    active = n - len(set(excluded))
    if active ** k > cap:
        raise CapacityError(f"{active}**{k} allocations exceeds cap {cap}")
    best, best_w = None, -1
    for alloc in enumerate_allocations(n, k, excluded):
        w = welfare(valuations, alloc)
        if w > best_w:
            best, best_w = alloc, w
    return best, best_w


def clarke_payments(valuations: Sequence[TrueValuation]) -> list[int]:
    """Pivot payments: others' best welfare without ``i`` minus their welfare in the chosen allocation."""
    n = len(valuations)
    alloc, _ = brute_force_optimal(valuations)
    payments = []
    for i in range(n):
        if n == 1:
            payments.append(0)
            continue
        _, without = brute_force_optimal(valuations, excluded=(i,))
        others = welfare(valuations, alloc) - valuations[i].values[alloc[i]]
        payments.append(without - others)
    return payments


class CachedAgent:
    """Wraps a simulated agent so repeated value and order queries are free."""

    def __init__(self, agent: SimulatedAgent):
        self.agent = agent
        self.values: dict[int, int] = {}
        self.orders: dict[tuple[int, int], str] = {}
        self.hits = 0

    @property
    def truth(self):
        return self.agent.truth

    @property
    def k(self):
        return self.agent.k

    @property
    def ledger(self) -> Ledger:
        return self.agent.ledger

    def answer_value(self, b: int) -> int:
        if b in self.values:
            self.hits += 1
            return self.values[b]
        v = self.values[b] = self.agent.answer_value(b)
        return v

    def answer_order(self, a: int, b: int) -> str:
        if (a, b) in self.orders:
            self.hits += 1
            return self.orders[(a, b)]
        ans = self.orders[(a, b)] = self.agent.answer_order(a, b)
        return ans

    def answer_bound(self, b, side, t):
        raise NotImplementedError("bound answers depend on accumulated time and are not cached")


@dataclass
class ElicitedClarke:
    payments: list[float]
    allocation: tuple[int, ...]
    ledger: Ledger
    cache_hits: int


def elicited_clarke(policy_name: str, valuations: Sequence[TrueValuation], config=None, seed=None) -> ElicitedClarke:
    """Clarke payments from ``n + 1`` elicitation runs sharing one answer cache.

    Winning bundles are value-queried (through the cache) so that exact
    welfare figures are available.  Only value/order policies are supported.
    """
    from .core import ElicitationState, solve
    from .policies import BOUND_POLICIES, PolicyConfig, make_policy

    if policy_name in BOUND_POLICIES:
        raise ValueError("elicited_clarke supports value and order policies only")
    config = config or PolicyConfig()
    n = len(valuations)
    k = valuations[0].k
    agents = [CachedAgent(SimulatedAgent(v, order_cost=config.order_cost)) for v in valuations]
    seeds = np.random.SeedSequence(seed).spawn(n + 1)

    def run(excluded):
        state = ElicitationState(n, k, order_cost=config.order_cost, excluded=excluded)
        stream = seeds[excluded[0] + 1 if excluded else 0]
        policy = make_policy(policy_name, config, np.random.default_rng(stream))
        res = solve(state, policy, agents)
        exact = {i: agents[i].answer_value(b) for i, b in enumerate(res.allocation) if i not in excluded}
        return res.allocation, exact

    alloc, exact = run(())
    payments: list[float] = []
    for i in range(n):
        if n == 1:
            payments.append(0.0)
            continue
        _, sub_exact = run((i,))
        without = sum(sub_exact.values())
        others = sum(v for j, v in exact.items() if j != i)
        payments.append(float(without - others))
    ledger = Ledger(order_cost=config.order_cost)
    for a in agents:
        ledger.add(a.ledger)
    return ElicitedClarke(payments, alloc, ledger, sum(a.hits for a in agents))


def expected_draws_all_red(r: int, b: int) -> float:
    """Expected draws without replacement until all ``r`` red balls are out (``b`` blue)."""
    if r < 0 or b < 0:
        raise ValueError("ball counts must be nonnegative")
    return r / (r + 1) * (b + r + 1)


def expected_draws_until_red_or_all_blue(b: int) -> float:
    """Expected draws with one red and ``b`` blue until the red or every blue is out."""
    if b < 1:
        raise ValueError("need at least one blue ball")
    return b * (3 + b) / (2 * (1 + b))


def simulate_draws_all_red(r: int, b: int, trials: int, rng=None) -> float:
    rng = np.random.default_rng(rng)
    if r == 0:
        return 0.0
    order = rng.random((trials, r + b)).argsort(axis=1)
    # balls 0..r-1 are red; the draw count is one past the last red position
    positions = order.argsort(axis=1)[:, :r]
    return float((positions.max(axis=1) + 1).mean())


def simulate_draws_until_red_or_all_blue(b: int, trials: int, rng=None) -> float:
    rng = np.random.default_rng(rng)
    order = rng.random((trials, b + 1)).argsort(axis=1)
    red_pos = order.argsort(axis=1)[:, 0] + 1
    return float(np.minimum(red_pos, b).mean())


def recurrence_all_red(r: int, b: int) -> float:
    """The ball recurrence evaluated directly by dynamic programming."""
    e = np.zeros((r + 1, b + 1))
    for rr in range(1, r + 1):
        for bb in range(b + 1):
            tot = rr + bb
            e[rr, bb] = 1 + rr / tot * e[rr - 1, bb] + (bb / tot * e[rr, bb - 1] if bb else 0.0)
    return float(e[r, b])


def recurrence_red_or_all_blue(b: int) -> float:
    e = 1.0
    for bb in range(2, b + 1):
        e = 1 / (bb + 1) + bb / (bb + 1) * (1 + e)
    return e
