import numpy as np
import pytest

from prefelicit.agents import SimulatedAgent, TrueValuation, generate_bids, two_item_example
from prefelicit.bundles import CapacityError
from prefelicit.core import (
    ElicitationState,
    InferableQueryError,
    Query,
    StalledPolicyError,
    format_trace,
    initial_candidates,
    solve,
)
from prefelicit.oracle import brute_force_optimal, enumerate_allocations
from prefelicit.policies import make_policy

A, B, AB = 1, 2, 3


def test_initial_candidates_counts():
    assert len(initial_candidates(2, 2)) == 4
    assert initial_candidates(1, 5).tolist() == [[31]]
    C = initial_candidates(3, 4)
    assert len(C) == 81
    # bundles are disjoint and cover every item
    assert all(np.bitwise_or.reduce(row) == 15 for row in C)
    assert all(int(row[i]) & int(row[j]) == 0 for row in C for i in range(3) for j in range(i))


def test_initial_candidates_match_oracle_order():
    C = initial_candidates(3, 3)
    assert [tuple(r) for r in C.tolist()] == list(enumerate_allocations(3, 3))
    C = initial_candidates(3, 2, excluded=(1,))
    assert [tuple(r) for r in C.tolist()] == list(enumerate_allocations(3, 2, excluded=(1,)))


def test_candidate_cap():
    with pytest.raises(CapacityError):
        initial_candidates(4, 10, cap=1000)


def test_dominates_reflexive_and_weak():
    state = ElicitationState(2, 2)
    assert state.dominates_candidate(0, 0)
    # candidates: row 0 = (AB, {}), row 3 = ({}, AB)
    state.networks[0].set_value(AB, 10)
    state.networks[1].set_value(AB, 10)
    assert state.dominates_candidate(0, 3) and state.dominates_candidate(3, 0)


def test_dominance_by_superset_edge():
    state = ElicitationState(2, 2)
    C = state.candidates.tolist()
    full, part = C.index([AB, 0]), C.index([A, B])
    # agent 2's term: lb({}) = 0 >= ub(B) once B is known to be worth 0
    state.networks[1].set_value(B, 0)
    assert state.dominates_candidate(full, part)
    assert not state.dominates_candidate(part, full)


def test_strict_mode_needs_margin():
    state = ElicitationState(2, 2, strict=True)
    state.networks[0].set_value(AB, 10)
    state.networks[1].set_value(AB, 10)
    assert not state.dominates_candidate(0, 3)


def test_prune_cases():
    state = ElicitationState(2, 2)
    assert state.prune() == 0
    assert len(state.candidates) == 4
    state.networks[0].set_value(AB, 10)
    state.networks[1].set_value(AB, 10)
    state.candidates = state.candidates[[0, 3]]
    state.prune()
    assert len(state.candidates) == 1


def test_prune_after_full_revelation_keeps_optima():
    vals = [generate_bids(3, s) for s in (1, 2, 3)]
    state = ElicitationState(3, 3)
    for i, v in enumerate(vals):
        for b in range(1, 8):
            if not state.networks[i].is_known(b):
                state.networks[i].set_value(b, v.values[b])
    state.prune()
    best = brute_force_optimal(vals)[1]
    welfare = [sum(v.values[b] for v, b in zip(vals, row)) for row in state.candidates.tolist()]
    assert len(welfare) >= 1 and set(welfare) == {best}


def test_done_cases():
    state = ElicitationState(2, 2)
    assert not state.done()
    state.candidates = state.candidates[:1]
    assert state.done()
    state = ElicitationState(2, 2)
    for i in range(2):
        for b, v in ((A, 3), (B, 3), (AB, 6)):
            state.networks[i].set_value(b, v)
    state.candidates = state.candidates[:3]
    assert state.done()
    state = ElicitationState(2, 2)
    state.candidates = state.candidates[:2]
    state.networks[0].set_value(AB, 5)
    assert not state.done()


def test_allocatable_pairs():
    state = ElicitationState(2, 2)
    assert state.allocatable_pairs() == {(b, i) for b in range(4) for i in range(2)}
    state.candidates = state.candidates[:1]
    assert len(state.allocatable_pairs()) == 2
    state = ElicitationState(2, 2)
    state.candidates = state.candidates[state.candidates[:, 0] != A]
    assert (A, 0) not in state.allocatable_pairs()


def test_classify_case():
    state = ElicitationState(2, 3)
    state.candidates = np.array([[7, 0]])
    assert state.classify_case(1, 0) == (1, 0)
    state.networks[0].set_value(7, 5)
    state.networks[0].tighten_lower(1, 5)
    assert state.classify_case(1, 0)[0] == 0
    state.candidates = np.array([[4, 3]])
    assert state.classify_case(1, 0) == (0, 0)
    with pytest.raises(ValueError):
        state.classify_case(4, 0)


def test_solve_example_and_trace():
    for name in ("random", "allocatable-random", "counting-smaller", "value-order", "bound", "bound-order"):
        agents = [SimulatedAgent(v) for v in two_item_example()]
        res = solve(ElicitationState(2, 2), make_policy(name, rng=3), agents)
        assert res.welfare == 10
        assert res.allocation == (A, B)
        text = format_trace(res.trace)
        assert text.count("\n") == len(res.trace)


def test_single_agent_needs_no_queries():
    agents = [SimulatedAgent(generate_bids(4, 1))]
    res = solve(ElicitationState(1, 4), make_policy("random", rng=0), agents)
    assert res.ledger.total_cost == 0
    assert res.allocation == (15,)


class Silent:
    def select(self, state):
        return None


class Repeats:
    def select(self, state):
        return Query("value", 0, 0)


def test_policy_errors():
    agents = [SimulatedAgent(v) for v in two_item_example()]
    with pytest.raises(StalledPolicyError):
        solve(ElicitationState(2, 2), Silent(), agents)
    with pytest.raises(InferableQueryError):
        solve(ElicitationState(2, 2), Repeats(), agents)


def test_order_answer_both_adds_two_edges():
    agents = [SimulatedAgent(v) for v in two_item_example()]
    agents[0] = SimulatedAgent(TrueValuation(2, (0, 4, 4, 8)))
    state = ElicitationState(2, 2)
    state.ask(Query("order", 0, A, B), agents)
    assert state.networks[0].has_path(A, B) and state.networks[0].has_path(B, A)
    assert state.is_inferable(Query("order", 0, B, A))
