"""Incremental preference elicitation for combinatorial auctions."""
from .agents import (
    MAXBID,
    Ledger,
    SimulatedAgent,
    TrueValuation,
    generate_bids,
    load_instance,
    two_item_example,
    save_instance,
)
from .bundles import all_bundles, free_disposal_edges, is_subset
from .core import ElicitationState, Query, initial_candidates, solve
from .network import BoundsNetwork, InconsistentAnswerError, new_network
from .oracle import brute_force_optimal, clarke_payments
from .policies import PolicyConfig, make_policy
from .rank_lattice import find_optimal

__version__ = "0.1.0"

__all__ = [
    "MAXBID",
    "BoundsNetwork",
    "ElicitationState",
    "InconsistentAnswerError",
    "Ledger",
    "PolicyConfig",
    "Query",
    "SimulatedAgent",
    "TrueValuation",
    "all_bundles",
    "brute_force_optimal",
    "clarke_payments",
    "find_optimal",
    "free_disposal_edges",
    "generate_bids",
    "initial_candidates",
    "is_subset",
    "load_instance",
    "make_policy",
    "new_network",
    "two_item_example",
    "save_instance",
    "solve",
]
