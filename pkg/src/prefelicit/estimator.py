"""Estimator-style wrapper so an elicitation run composes with sklearn tooling."""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from .core import ElicitationState, solve
from .harness import ALL_POLICIES, full_revelation
from .agents import SimulatedAgent
from .oracle import brute_force_optimal
from .policies import PolicyConfig, make_policy
from .rank_lattice import find_optimal
from .validation import check_policy, check_positive, check_valuations


class AuctionElicitor(BaseEstimator):
    """Elicit just enough of each bidder's valuation to prove an optimal allocation.

    ``fit`` takes the hidden valuations (one row per agent, one column per
    bundle mask), wraps them in simulated truthful bidders and runs the chosen
    policy against them.  The elicitor only ever sees query answers.

    Parameters
    ----------
    policy : str, default="allocatable-random"
        ``"rank-lattice"`` or any candidate-framework policy name.
    order_cost : float, default=0.1
    hint : float, default=0.2
        Time requested per bound-approximation query.
    samples : int, default=10
    strict : bool, default=False
        Prune only strictly dominated candidates.
    asymmetric : bool, default=False
    random_state : int, Generator or None

    Attributes
    ----------
    allocation_ : tuple of int
        Bundle mask per agent.
    welfare_ : float
    ledger_ : Ledger
    elicitation_ratio_ : float
        Cost divided by the full-revelation cost.
    n_agents_, n_items_ : int
    """

    def __init__(self, policy="allocatable-random", order_cost=0.1, hint=0.2, samples=10,
                 strict=False, asymmetric=False, random_state=None):
        self.policy = policy
        self.order_cost = order_cost
        self.hint = hint
        self.samples = samples
        self.strict = strict
        self.asymmetric = asymmetric
        self.random_state = random_state

    def fit(self, X, y=None):
        valuations = check_valuations(X)
        check_policy(self.policy, ALL_POLICIES)
        config = PolicyConfig(
            order_cost=check_positive(self.order_cost, "order_cost"),
            hint=check_positive(self.hint, "hint"),
            samples=int(self.samples),
            asymmetric=self.asymmetric,
        )
        agents = [SimulatedAgent(v, config.order_cost, config.asymmetric) for v in valuations]
        n, k = len(valuations), valuations[0].k
        if self.policy == "rank-lattice":
            result = find_optimal(agents)
            cost = result.ledger.rank
        else:
            state = ElicitationState(n, k, strict=self.strict, order_cost=config.order_cost)
            rng = np.random.default_rng(self.random_state)
            result = solve(state, make_policy(self.policy, config, rng), agents)
            cost = result.ledger.total_cost
        self.result_ = result
        self.allocation_ = result.allocation
        self.welfare_ = result.welfare
        self.ledger_ = result.ledger
        self.n_agents_, self.n_items_ = n, k
        self.elicitation_ratio_ = cost / full_revelation(self.policy, n, k)
        return self

    def predict(self, X=None):
        """Allocation found by the last ``fit``, as an ``(n_agents,)`` array of bundle masks."""
        if not hasattr(self, "allocation_"):
            raise NotFittedError("call fit before predict")
        return np.array(self.allocation_, dtype=np.int64)

    def fit_predict(self, X, y=None):
        return self.fit(X).predict()

    def score(self, X, y=None):
        """Welfare of the elicited allocation divided by the exhaustive optimum (1.0 when exact)."""
        valuations = check_valuations(X)
        if not hasattr(self, "allocation_"):
            self.fit(valuations)
        _, best = brute_force_optimal(valuations)
        achieved = sum(v.values[b] for v, b in zip(valuations, self.allocation_))
        return 1.0 if best == 0 else achieved / best
