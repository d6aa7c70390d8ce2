import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from prefelicit.agents import generate_bids
from prefelicit.bundles import is_subset
from prefelicit.network import BoundsNetwork, InconsistentAnswerError, new_network

INF = math.inf
A, B, AB = 1, 2, 3


def bounds(net):
    return [net.interval(b) for b in range(net.size)]


def test_new_network_initial_state():
    net = new_network(2)
    assert net.interval(0) == (0.0, 0.0)
    assert all(net.interval(b) == (0.0, INF) for b in (A, B, AB))
    assert net.edge_count == 4
    assert new_network(0).interval(0) == (0.0, 0.0)
    assert new_network(2, pin_empty=False).interval(0) == (0.0, INF)


def test_set_value_propagates_down():
    net = new_network(2)
    net.set_value(AB, 8)
    assert net.ub(A) == 8 and net.ub(B) == 8


def test_set_value_after_grand():
    net = new_network(2)
    net.set_value(AB, 8)
    net.set_value(A, 4)
    assert net.interval(AB) == (8, 8)
    assert net.interval(A) == (4, 4)
    assert net.ub(0) == 0


def test_set_value_on_pinned_empty_is_noop():
    net = new_network(2)
    report = net.set_value(0, 0)
    assert not report.changed


def test_set_value_outside_interval_raises():
    net = new_network(2)
    net.set_value(AB, 8)
    with pytest.raises(InconsistentAnswerError):
        net.set_value(A, 9)


def test_tighten_examples():
    net = new_network(2)
    assert not net.tighten_lower(A, 0).changed
    net.tighten_upper(AB, 10)
    assert all(net.ub(b) <= 10 for b in range(4))
    net.tighten_lower(A, 4)
    net.tighten_lower(AB, 3)
    assert net.lb(AB) == 4


def test_tighten_conflict_raises():
    net = new_network(2)
    net.tighten_upper(AB, 5)
    with pytest.raises(InconsistentAnswerError):
        net.tighten_lower(A, 6)


def test_add_edge_examples():
    net = new_network(2)
    net.set_value(B, 6)
    net.add_edge(A, B)
    assert net.lb(A) >= 6
    before = bounds(net)
    assert not net.add_edge(A, A).changed
    assert bounds(net) == before


def test_equality_cycle():
    net = new_network(2)
    net.tighten_lower(A, 2)
    net.tighten_upper(A, 9)
    net.tighten_lower(B, 4)
    net.tighten_upper(B, 7)
    net.add_edge(A, B)
    net.add_edge(B, A)
    assert net.interval(A) == (4, 7)
    assert net.interval(B) == (4, 7)


def test_dominates_examples():
    net = new_network(2)
    assert net.dominates(AB, A)
    net.tighten_lower(A, 5)
    net.tighten_upper(A, 9)
    net.tighten_lower(B, 1)
    net.tighten_upper(B, 5)
    assert net.dominates(A, B)
    other = new_network(2)
    other.tighten_upper(A, 9)
    other.tighten_lower(B, 1)
    other.tighten_upper(B, 5)
    assert not other.dominates(A, B)


def test_is_known():
    net = new_network(2)
    assert net.is_known(0)
    assert not net.is_known(A)
    net.set_value(A, 3)
    assert net.is_known(A)


def test_change_report_counts_finite_widths_only():
    net = new_network(2)
    report = net.set_value(AB, 8)
    assert report.total == 0
    assert report.changed == {A, B, AB}
    report = net.set_value(A, 4)
    assert report.reductions == {A: 8.0}


def test_dump_golden():
    net = new_network(2)
    net.set_value(AB, 8)
    net.tighten_lower(A, 2.5)
    assert net.dump() == "{} [0, 0]\nA [2.5, 8]\nB [0, 8]\nAB [8, 8]\n"


def test_copy_is_independent():
    net = new_network(2)
    twin = net.copy()
    twin.set_value(A, 3)
    assert net.interval(A) == (0, INF)


# -- oracles ------------------------------------------------------------------
def scratch_fixpoint(k, lower, upper, edges):
    """Bounds implied by the constraints, by plain iteration over all edges."""
    size = 1 << k
    lb = [max([0.0] + lower.get(b, [])) for b in range(size)]
    ub = [min([INF] + upper.get(b, [])) for b in range(size)]
    ub[0] = 0.0
    all_edges = [(a, b) for a in range(size) for b in range(size) if a != b and is_subset(b, a)]
    all_edges += edges
    changed = True
    while changed:
        changed = False
        for a, b in all_edges:
            if lb[a] < lb[b]:
                lb[a] = lb[b]
                changed = True
            if ub[b] > ub[a]:
                ub[b] = ub[a]
                changed = True
    return lb, ub


def reachability(k, edges):
    size = 1 << k
    R = np.zeros((size, size), dtype=bool)
    for a in range(size):
        for b in range(size):
            R[a, b] = is_subset(b, a)
    for a, b in edges:
        R[a, b] = True
    for m in range(size):
        R |= R[:, [m]] & R[[m], :]
    return R


@st.composite
def update_sequences(draw):
    k = draw(st.integers(1, 4))
    truth = generate_bids(k, draw(st.integers(0, 2**32 - 1)))
    size = 1 << k
    ops = []
    for _ in range(draw(st.integers(1, 8))):
        kind = draw(st.sampled_from(["value", "lower", "upper", "edge"]))
        b = draw(st.integers(1, size - 1))
        v = truth.values[b]
        if kind == "value":
            ops.append(("value", b, v))
        elif kind == "lower":
            ops.append(("lower", b, draw(st.integers(0, v))))
        elif kind == "upper":
            ops.append(("upper", b, v + draw(st.integers(0, 1000))))
        else:
            a = draw(st.integers(0, size - 1))
            if truth.values[a] >= v:
                ops.append(("edge", a, b))
    return k, truth, ops


def apply(net, op):
    kind, x, y = op
    if kind == "value":
        return net.set_value(x, y)
    if kind == "lower":
        return net.tighten_lower(x, y)
    if kind == "upper":
        return net.tighten_upper(x, y)
    return net.add_edge(x, y)


@settings(max_examples=200, deadline=None)
@given(update_sequences())
def test_propagation_matches_scratch_fixpoint(case):
    k, truth, ops = case
    net = BoundsNetwork(k)
    lower, upper, edges = {}, {}, []
    for op in ops:
        prev = bounds(net)
        report = apply(net, op)
        kind, x, y = op
        if kind in ("value", "lower"):
            lower.setdefault(x, []).append(y)
        if kind in ("value", "upper"):
            upper.setdefault(x, []).append(y)
        if kind == "edge":
            edges.append((x, y))
        lb, ub = scratch_fixpoint(k, lower, upper, edges)
        now = bounds(net)
        assert [p[0] for p in now] == lb
        assert [p[1] for p in now] == ub
        # monotone and sound
        for (l0, u0), (l1, u1), v in zip(prev, now, truth.values):
            assert l1 >= l0 and u1 <= u0
            assert l1 <= v <= u1
        # report agrees with the observed change
        moved = {b for b in range(net.size) if prev[b] != now[b]}
        assert report.changed == moved
        for b, r in report.reductions.items():
            assert prev[b][1] != INF
            assert r == pytest.approx((prev[b][1] - prev[b][0]) - (now[b][1] - now[b][0]))


@settings(max_examples=100, deadline=None)
@given(update_sequences())
def test_path_dominance_equals_closure(case):
    k, _, ops = case
    net = BoundsNetwork(k)
    edges = [(x, y) for kind, x, y in ops if kind == "edge"]
    for a, b in edges:
        net.add_edge(a, b)
    R = reachability(k, edges)
    for a in range(net.size):
        for b in range(net.size):
            assert net.has_path(a, b) == R[a, b]
