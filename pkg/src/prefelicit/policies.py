"""Query-selection policies for the candidate framework.

Every policy exposes ``reset(state)`` and ``select(state) -> Query | None``.
Policies hold only their random stream and a turn counter, so a fresh
instance is built for every run.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .agents import bound_from_time
from .bundles import grand_bundle, popcounts
from .core import ElicitationState, Query


@dataclass
class PolicyConfig:
    """Tunables shared by the policies.

    order_cost : cost of an order query relative to a value query.
    hint : computation time requested per bound query.
    samples : grid points used to estimate the expected benefit.
    asymmetric : agents use linear (not square-root) lower bounds.
    benefit_weight : ``"pair"`` counts each allocatable (bundle, agent) pair
        once; ``"candidates"`` weights it by the number of candidates using it.
    """

    order_cost: float = 0.1
    hint: float = 0.2
    samples: int = 10
    asymmetric: bool = False
    benefit_weight: str = "pair"
    seed: int | None = None


def _value_pool(state: ElicitationState, restrict: bool) -> list[tuple[int, int]]:
    pool = []
    for i, net in enumerate(state.networks):
        lb, ub = net.arrays()
        open_ = lb != ub
        open_[0] = False
        if restrict:
            open_ &= state.allocatable_mask(i)
        pool.extend((i, int(b)) for b in np.flatnonzero(open_))
    return pool


class RandomValuePolicy:
    """Uniform over every value query not yet answered or implied."""

    name = "random"
    restrict = False

    def __init__(self, rng=None):
        self.rng = np.random.default_rng(rng)

    def reset(self, state):
        pass

    def select(self, state: ElicitationState) -> Query | None:
        pool = _value_pool(state, self.restrict)
        if not pool:
            return None
        i, b = pool[int(self.rng.integers(len(pool)))]
        return Query("value", i, b)


class AllocatableRandomPolicy(RandomValuePolicy):
    """Uniform over open value queries on allocatable (bundle, agent) pairs."""

    name = "allocatable-random"
    restrict = True


class CountingPolicy:
    """Ask the open pair that appears in the most remaining candidates.

    ``tie_break`` picks among equal counts: ``"smaller"`` or ``"larger"``
    bundles first (then lowest mask, then lowest agent), or ``"random"``.
    """

    def __init__(self, tie_break: str = "smaller", rng=None):
        if tie_break not in ("smaller", "larger", "random"):
            raise ValueError(f"unknown tie_break {tie_break!r}")
        self.tie_break = tie_break
        self.name = f"counting-{tie_break}"
        self.rng = np.random.default_rng(rng)
        self._sizes = None

    def reset(self, state):
        self._sizes = popcounts(state.k)

    def select(self, state: ElicitationState) -> Query | None:
        if self._sizes is None:
            self.reset(state)
        best = []
        best_count = 0
        for i, net in enumerate(state.networks):
            lb, ub = net.arrays()
            counts = state.allocation_counts(i)
            counts[(lb == ub)] = 0
            counts[0] = 0
            top = counts.max()
            if top == 0 or top < best_count:
                continue
            if top > best_count:
                best, best_count = [], top
            best.extend((i, int(b)) for b in np.flatnonzero(counts == top))
        if not best:
            return None
        if self.tie_break == "random":
            i, b = best[int(self.rng.integers(len(best)))]
        else:
            sign = 1 if self.tie_break == "smaller" else -1
            i, b = min(best, key=lambda p: (sign * self._sizes[p[1]], p[1], p[0]))
        return Query("value", i, b)


def select_order_query(state: ElicitationState) -> Query | None:
    """First incomparable candidate pair, first agent whose two bundles are unordered.

    Pairs ``(c, c')`` with ``c < c'`` are scanned in row-major candidate
    order; the agent must hold different bundles that its network cannot
    yet compare.
    """
    C = state.candidates
    m = len(C)
    if m < 2:
        return None
    D = state.dominance_matrix()
    open_pairs = np.triu(~D & ~D.T, 1)
    if not open_pairs.any():
        return None
    unordered = []
    any_agent = np.zeros_like(open_pairs)
    for i, net in enumerate(state.networks):
        lb, ub = net.arrays()
        bi = C[:, i]
        path = state._path(i, bi, bi)
        lo, hi = lb[bi], ub[bi]
        inc = ~path & ~path.T & (lo[:, None] < hi[None, :]) & (lo[None, :] < hi[:, None])
        unordered.append(inc)
        any_agent |= inc
    hits = np.argwhere(open_pairs & any_agent)
    if not len(hits):
        return None
    c, c2 = hits[0]
    for i, inc in enumerate(unordered):
        if inc[c, c2]:
            return Query("order", i, int(C[c, i]), int(C[c2, i]))
    return None


class MixedValueOrderPolicy:
    """Alternate order and value queries, starting with an order query.

    Order turns with no incomparable pair fall back to a value query.
    """

    name = "value-order"

    def __init__(self, rng=None, value_policy=None):
        self.value_policy = value_policy or AllocatableRandomPolicy(rng)
        self._turn = 0

    def reset(self, state):
        self._turn = 0
        self.value_policy.reset(state)

    def select(self, state):
        order_turn = self._turn % 2 == 0
        self._turn += 1
        if order_turn:
            q = select_order_query(state)
            if q is not None:
                return q
        return self.value_policy.select(state)


class ExpectedBenefitBoundPolicy:
    """Bound-approximation queries chosen by expected tightening.

    Starts by asking every participating agent for an upper bound on the
    grand bundle.  Afterwards, for each allocatable open pair and each side,
    the true value is assumed uniform on the proven interval and sampled on
    a midpoint grid; each sample yields the bound the agent would return
    after ``hint`` more time, and the gain is the total interval shrinkage
    over bundles still used by some candidate for that agent.  The query
    with the largest mean gain is asked.
    """

    name = "bound"

    def __init__(self, config: PolicyConfig | None = None):
        self.config = config or PolicyConfig()
        self._init: list[Query] = []

    def reset(self, state):
        K = grand_bundle(state.k)
        self._init = [
            Query("bound", i, K, side="upper", hint=self.config.hint)
            for i in range(state.n)
            if i not in state.excluded
        ]

    def select(self, state):
        while self._init:
            q = self._init.pop(0)
            if not state.is_inferable(q):
                return q
        return self.best_query(state)

    def expected_gains(self, state: ElicitationState, i: int):
        """Mean gains for agent ``i``: ``(bundles, lower_gain, upper_gain)``.

        Exhausted sides get ``-1``.
        """
        cfg = self.config
        net = state.networks[i]
        lb, ub = net.arrays()
        counted = state.allocatable_mask(i)
        open_ = counted & (lb < ub)
        bundles = np.flatnonzero(open_)
        if not len(bundles):
            return bundles, np.empty(0), np.empty(0)
        grid = (np.arange(cfg.samples) + 0.5) / cfg.samples
        lo, hi = lb[bundles], ub[bundles]
        finite = np.isfinite(hi)
        span = np.where(finite, hi - lo, 0.0)
        vhat = lo[:, None] + grid[None, :] * span[:, None]
        reach = net.reach if net.extra_edges() else None
        w_idx = np.flatnonzero(counted)
        if reach is None:
            # ancestors of b are its supersets
            anc = (bundles[None, :] & ~w_idx[:, None]) == 0
            desc = (w_idx[:, None] & ~bundles[None, :]) == 0
        else:
            anc = reach[np.ix_(w_idx, bundles)]
            desc = reach[np.ix_(bundles, w_idx)].T
        gains = []
        for side, mask in (("lower", anc), ("upper", desc)):
            used = state.hint_array(i, side)[bundles]
            d = np.minimum(1.0, used + cfg.hint)
            z = bound_from_time(vhat, d[:, None], side, cfg.asymmetric)
            z = np.clip(z, lo[:, None], hi[:, None])
            xs, bs = np.nonzero(mask)
            if side == "lower":
                delta = np.maximum(0.0, z[bs] - lb[w_idx][xs][:, None])
            else:
                delta = np.maximum(0.0, ub[w_idx][xs][:, None] - z[bs])
            per_pair = np.where(np.isfinite(delta), delta, 0.0).mean(axis=1)
            if cfg.benefit_weight == "candidates":
                per_pair = per_pair * state.allocation_counts(i)[w_idx][xs]
            gain = np.bincount(bs, weights=per_pair, minlength=len(bundles))
            gain = np.where(finite & (used < 1.0), gain, -1.0)
            gains.append(gain)
        return bundles, gains[0], gains[1]

    def best_query(self, state: ElicitationState) -> Query | None:
        best, best_gain = None, 0.0
        for i in range(state.n):
            bundles, lower, upper = self.expected_gains(state, i)
            if not len(bundles):
                continue
            both = np.stack([lower, upper], axis=1).ravel()
            j = int(np.argmax(both))
            if both[j] > best_gain:
                best_gain = both[j]
                best = (i, int(bundles[j // 2]), ("lower", "upper")[j % 2])
        if best is None:
            return self._fallback(state)
        i, b, side = best
        return Query("bound", i, b, side=side, hint=self.config.hint)

    def _fallback(self, state):
        # no query promises a gain: widen the widest allocatable open interval
        best, best_key = None, None
        for i, net in enumerate(state.networks):
            lb, ub = net.arrays()
            for b in np.flatnonzero(state.allocatable_mask(i) & (lb < ub)).tolist():
                sides = [s for s in ("lower", "upper") if state.hint_used(i, b, s) < 1.0]
                if not np.isfinite(ub[b]):
                    sides = ["upper"] if "upper" in sides else sides
                if not sides:
                    continue
                side = min(sides, key=lambda s: state.hint_used(i, b, s))
                key = (-(ub[b] - lb[b]), i, b)
                if best_key is None or key < best_key:
                    best_key, best = key, (i, b, side)
        if best is None:
            return None
        i, b, side = best
        return Query("bound", i, b, side=side, hint=self.config.hint)


class MixedBoundOrderPolicy(ExpectedBenefitBoundPolicy):
    """Grand-bundle upper bounds first, then alternate order and bound queries."""

    name = "bound-order"

    def reset(self, state):
        super().reset(state)
        self._turn = 0

    def select(self, state):
        while self._init:
            q = self._init.pop(0)
            if not state.is_inferable(q):
                return q
        order_turn = self._turn % 2 == 0
        self._turn += 1
        if order_turn:
            q = select_order_query(state)
            if q is not None:
                return q
        return self.best_query(state)


def simulated_gain(state: ElicitationState, i: int, b: int, side: str, z: float) -> float:
    """Shrinkage over counted bundles if bound ``z`` were propagated, via a scratch network."""
    scratch = state.networks[i].copy()
    lo, hi = scratch.interval(b)
    z = min(max(z, lo), hi)
    report = scratch.tighten_lower(b, z) if side == "lower" else scratch.tighten_upper(b, z)
    counted = state.allocatable_mask(i)
    return float(sum(r for x, r in report.reductions.items() if counted[x]))


CANDIDATE_POLICIES = (
    "random",
    "allocatable-random",
    "counting-smaller",
    "counting-larger",
    "counting-random",
    "value-order",
    "bound",
    "bound-order",
)
BOUND_POLICIES = ("bound", "bound-order")


def make_policy(name: str, config: PolicyConfig | None = None, rng=None):
    config = config or PolicyConfig()
    if name == "random":
        return RandomValuePolicy(rng)
    if name == "allocatable-random":
        return AllocatableRandomPolicy(rng)
    if name.startswith("counting-"):
        return CountingPolicy(name.split("-", 1)[1], rng)
    if name == "value-order":
        return MixedValueOrderPolicy(rng)
    if name == "bound":
        return ExpectedBenefitBoundPolicy(config)
    if name == "bound-order":
        return MixedBoundOrderPolicy(config)
    raise ValueError(f"unknown policy {name!r}")
