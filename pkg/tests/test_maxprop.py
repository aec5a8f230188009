import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from smdtn import ScenarioConfig
from smdtn.engine import ScriptedSimulation
from smdtn.routing import MaxPropRouter
from smdtn.routing.core import admit
from smdtn.routing.maxprop import init_vector, meet, path_cost, rank_buffer

from conftest import msg

A, B, C = 0, 1, 2


# -- likelihood vectors ---------------------------------------------------------
def test_init_vector():
    assert init_vector(3, A).tolist() == [0.0, 0.5, 0.5]
    f = init_vector(121, 0)
    assert f[1] == pytest.approx(1 / 120) and f[0] == 0.0
    assert init_vector(2, 0).tolist() == [0.0, 1.0]
    with pytest.raises(ValueError):
        init_vector(1, 0)


def test_meet_once():
    f = meet(init_vector(3, A), B)
    assert abs(f[B] - 0.75) < 1e-9 and abs(f[C] - 0.25) < 1e-9


def test_meet_twice():
    f = meet(meet(init_vector(3, A), B), B)
    assert abs(f[B] - 0.875) < 1e-9 and abs(f[C] - 0.125) < 1e-9


@settings(max_examples=100)
@given(st.integers(2, 30), st.lists(st.integers(0, 10_000), max_size=80))
def test_meet_sequences_stay_normalized(n, picks):
    f = init_vector(n, 0)
    for p in picks:
        peer = 1 + p % (n - 1)
        f = meet(f, peer)
        assert abs(f.sum() - 1.0) <= 1e-9
        assert np.all(f >= 0) and f[0] == 0.0


# -- path cost --------------------------------------------------------------------
def test_path_cost_direct_certain_edge():
    assert path_cost({A: {B: 1.0}}, A, B) == 0.0


def test_path_cost_via_intermediate():
    vectors = {A: {B: 0.75, C: 0.25}, B: {A: 0.5, C: 0.5}}
    assert path_cost(vectors, A, C) == 0.75


def test_path_cost_own_vector_only():
    assert path_cost({0: init_vector(121, 0)}, 0, 77) == pytest.approx(1 - 1 / 120)


def test_path_cost_unreachable():
    assert path_cost({A: {B: 1.0}}, A, C, n=3) == math.inf


def brute_force(vectors, src, dst):
    best = math.inf
    stack = [(src, 0.0, {src})]
    while stack:
        node, cost, seen = stack.pop()
        if node == dst:
            best = min(best, cost)
            continue
        for j, p in vectors.get(node, {}).items():
            if j != node and j not in seen:
                stack.append((j, cost + (1.0 - p), seen | {j}))
    return best


def test_path_cost_matches_simple_path_enumeration():
    rng = np.random.default_rng(20240601)
    for _ in range(1000):
        n = int(rng.integers(2, 7))
        vectors = {}
        for owner in range(n):
            if rng.random() < 0.25:
                continue  # no snapshot held for this node
            others = [j for j in range(n) if j != owner]
            keep = [j for j in others if rng.random() < 0.7] or others[:1]
            w = rng.random(len(keep))
            vectors[owner] = {j: float(x) for j, x in zip(keep, w / w.sum())}
        src, dst = (int(x) for x in rng.choice(n, size=2, replace=False))
        assert path_cost(vectors, src, dst, n) == brute_force(vectors, src, dst)


# -- ranking ------------------------------------------------------------------------
def test_rank_head_by_hops_then_tail():
    ms = [msg(1, hops=5), msg(2, hops=0), msg(3, hops=2)]
    assert [m.hop_count for m in rank_buffer(ms, 3, {1: 0.5})] == [0, 2, 5]


def test_rank_tail_by_cost():
    ms = [msg(1, dst=1, hops=4), msg(2, dst=2, hops=4)]
    assert [m.id for m in rank_buffer(ms, 3, {1: 0.9, 2: 0.3})] == [2, 1]


def test_rank_tie_breaks_on_id():
    ms = [msg(9, hops=4), msg(4, hops=4), msg(6, hops=1), msg(5, hops=1)]
    assert [m.id for m in rank_buffer(ms, 3, {1: 0.5})] == [5, 6, 4, 9]


@settings(max_examples=50)
@given(st.lists(st.tuples(st.integers(0, 6), st.integers(1, 4)), min_size=1, max_size=20))
def test_rank_is_deterministic_total_order(spec):
    ms = [msg(i, dst=d, hops=h) for i, (h, d) in enumerate(spec)]
    costs = {1: 0.2, 2: 0.4, 3: 0.4, 4: math.inf}
    a = rank_buffer(ms, 3, costs)
    b = rank_buffer(list(reversed(ms)), 3, costs)
    assert [m.id for m in a] == [m.id for m in b]


def test_eviction_from_back_of_ranking():
    r = MaxPropRouter(0, 30_000, 5)
    for i, h in ((1, 0), (2, 5), (3, 1)):
        admit(r.buffer, msg(i, dst=1, hops=h), r)
    res = admit(r.buffer, msg(4, dst=1, hops=0), r)
    assert [v.id for v in res.victims] == [2]


# -- acknowledgements -------------------------------------------------------------------
def _routers(n=3):
    return [MaxPropRouter(i, 1_000_000, n) for i in range(n)]


def test_ack_from_peer_drops_held_copy():
    a, b, _ = _routers()
    admit(a.buffer, msg(1, dst=2, ttl=100.0), a)
    b.add_ack(1, 100.0)
    a.on_up(b, 5.0)
    assert 1 not in a.buffer and 1 in a.acks


def test_ack_for_unknown_id_is_kept():
    a, b, _ = _routers()
    b.add_ack(42, 100.0)
    a.on_up(b, 0.0)
    assert a.acks == {42: 100.0} and len(a.buffer) == 0


def test_expired_ack_pruned_and_not_forwarded():
    a, b, _ = _routers()
    b.add_ack(7, 10.0)
    a.on_up(b, 11.0)
    assert 7 not in a.acks
    b.prune_acks(11.0)
    assert 7 not in b.acks


def test_acked_message_not_accepted_or_offered():
    a, b, _ = _routers()
    a.add_ack(1, 100.0)
    assert not a.accepts(msg(1), 0.0)
    admit(b.buffer, msg(1, dst=2), b)
    a.on_up(b, 0.0)
    b.on_up(a, 0.0)
    assert b.select_for_transfer(a, 0.0) == []


def test_direct_destination_first():
    a, b, _ = _routers()
    admit(a.buffer, msg(1, dst=2, hops=0), a)
    admit(a.buffer, msg(2, dst=1, hops=2), a)
    a.on_up(b, 0.0)
    assert [m.id for m in a.select_for_transfer(b, 0.0)] == [2, 1]


def test_snapshot_exchange_newest_wins():
    a, b, _ = _routers()
    a.on_meet(b, 0.0)
    b.on_meet(a, 0.0)
    a.on_up(b, 0.0)
    first = a._w[b.node].copy()
    b.f = meet(b.f, 2)
    a.on_up(b, 5.0)
    assert a.snapshot_time[b.node] == 5.0
    assert not np.array_equal(first, a._w[b.node])


class Probe(ScriptedSimulation):
    def __init__(self, *a, **kw):
        super().__init__(*a, **kw)
        self.samples = []

    def _sweep(self, now):
        super()._sweep(now)
        holders = {r.node for r in self.routers if 1 in r.buffer}
        knowers = {r.node for r in self.routers if 1 in r.acks}
        self.samples.append((holders, knowers))


MP = ScenarioConfig(duration=120.0, tick=0.5, msg_size=10_000, bandwidth=1e12, router="maxprop")


def test_ack_aware_nodes_hold_no_copy():
    # node 0 only learns of the delivery at t=30, so it may still seed node 3
    contacts = [(0, 1, 2.0, 6.0), (1, 2, 8.0, 12.0), (0, 3, 14.0, 18.0), (2, 3, 20.0, 24.0), (0, 1, 30.0, 34.0)]
    sim = Probe(MP, 4, contacts, [(1.0, 0, 2)])
    sim.run()
    assert any(k for _, k in sim.samples)
    for holders, knowers in sim.samples:
        assert not holders & knowers
    assert sim.samples[-1][0] == set()


def test_copy_count_non_increasing_once_acked():
    # the ack reaches every copy holder before any of them meets a new node
    contacts = [(0, 1, 2.0, 6.0), (1, 2, 8.0, 12.0), (0, 1, 14.0, 18.0), (0, 3, 20.0, 24.0), (1, 3, 26.0, 30.0)]
    sim = Probe(MP, 4, contacts, [(1.0, 0, 2)])
    sim.run()
    after = [len(h) for h, k in sim.samples if k]
    assert after and after[-1] == 0
    assert all(x >= y for x, y in zip(after, after[1:]))
