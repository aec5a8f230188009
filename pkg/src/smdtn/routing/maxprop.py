"""MaxProp: delivery-likelihood path costs, hop-count/cost buffer ranking
and network-wide delivery acknowledgements.
"""

from __future__ import annotations

import math
from typing import Callable, Mapping, Sequence

import numpy as np

from .core import AlertMessage, Router

INF = math.inf


def init_vector(n_nodes: int, owner: int) -> np.ndarray:
    """Uniform meeting likelihoods over the other ``n_nodes - 1`` nodes.

    Stored densely by node index; the owner's own slot stays 0 and is not
    part of the distribution.
    """
    if n_nodes < 2:
        raise ValueError("need at least two nodes")
    f = np.full(n_nodes, 1.0 / (n_nodes - 1))
    f[owner] = 0.0
    return f


def meet(f: np.ndarray, peer: int) -> np.ndarray:
    """Incremental-average update after meeting ``peer``: add one, renormalize."""
    out = f.copy()
    out[peer] += 1.0
    return out / out.sum()


def cost_dijkstra(weights: np.ndarray, src: int) -> np.ndarray:
    """Single-source shortest path costs on a dense weight matrix.

    ``weights[i, j]`` is the cost of edge i -> j, ``inf`` for no edge.
    Label-correcting min-plus relaxation restricted to rows that have
    out-edges; with non-negative weights it settles on the same per-path
    left-to-right sums a textbook Dijkstra would produce.
    """
    n = len(weights)
    dist = np.full(n, INF)
    dist[src] = 0.0
    rows = np.flatnonzero(np.isfinite(weights).any(axis=1))
    if len(rows) == 0:
        return dist
    wk = weights[rows]
    for _ in range(n):
        new = np.minimum(dist, (dist[rows][:, None] + wk).min(axis=0))
        if np.array_equal(new, dist):
            break
        dist = new
    return dist


def weight_matrix(vectors: Mapping[int, Mapping[int, float] | np.ndarray], n: int) -> np.ndarray:
    w = np.full((n, n), INF)
    for owner, f in vectors.items():
        if isinstance(f, np.ndarray):
            row = 1.0 - f
            row[owner] = INF
            w[owner] = row
        else:
            for j, p in f.items():
                if j != owner:
                    w[owner, j] = 1.0 - p
    return w


def path_cost(vectors: Mapping[int, Mapping[int, float] | np.ndarray], src: int, dst: int, n: int | None = None) -> float:
    """Cheapest sum of (1 - f_i[j]) over a path src -> dst.

    ``vectors`` holds the likelihood vectors known to ``src`` (its own plus
    peer snapshots); nodes without a vector have no out-edges. Returns
    ``inf`` when ``dst`` is unreachable.
    """
    if src == dst:
        raise ValueError("src and dst must differ")
    if n is None:
        ids = set(vectors)
        for f in vectors.values():
            ids.update(range(len(f)) if isinstance(f, np.ndarray) else f)
        ids.update((src, dst))
        n = max(ids) + 1
    return float(cost_dijkstra(weight_matrix(vectors, n), src)[dst])


def rank_key(m: AlertMessage, cost: float, threshold_hops: int):
    if m.hop_count < threshold_hops:
        return (0, m.hop_count, cost, m.id)
    return (1, cost, 0, m.id)


def rank_buffer(
    messages: Sequence[AlertMessage],
    threshold_hops: int,
    cost_of: Callable[[AlertMessage], float] | Mapping[int, float],
) -> list[AlertMessage]:
    """Young messages (hop_count < threshold) first by hop count, the rest by
    path cost to their destination. Ties fall back to message id."""
    if not callable(cost_of):
        table = cost_of
        cost_of = lambda m: table.get(m.destination, INF)  # noqa: E731
    return sorted(messages, key=lambda m: rank_key(m, cost_of(m), threshold_hops))


class MaxPropRouter(Router):
    name = "maxprop"

    def __init__(self, node: int, capacity: int, n_nodes: int, hop_limit: int | None = None, threshold_hops: int = 3):
        super().__init__(node, capacity, hop_limit)
        self.n = n_nodes
        self.threshold_hops = threshold_hops
        self.f = init_vector(n_nodes, node)
        # row i = 1 - f_i for every vector known here (own row included)
        self._w = np.full((n_nodes, n_nodes), INF)
        self._set_row(node, self.f)
        self.snapshot_time: dict[int, float] = {}
        self.acks: dict[int, float] = {}  # id -> expiry time
        self.offered: dict[int, set[int]] = {}
        self._costs: np.ndarray | None = None

    def _set_row(self, owner: int, f: np.ndarray) -> None:
        row = 1.0 - f
        row[owner] = INF
        self._w[owner] = row
        self._costs = None

    def costs(self) -> np.ndarray:
        if self._costs is None:
            self._costs = cost_dijkstra(self._w, self.node)
        return self._costs

    def cost_to(self, dst: int) -> float:
        return float(self.costs()[dst])

    # -- contact handling ---------------------------------------------------
    def on_meet(self, peer: Router, now: float) -> None:
        self.f = meet(self.f, peer.node)
        self._set_row(self.node, self.f)

    def on_up(self, peer: Router, now: float) -> None:
        self.offered[peer.node] = set()
        if isinstance(peer, MaxPropRouter):
            prev = self.snapshot_time.get(peer.node)
            if prev is None or now >= prev:
                self._set_row(peer.node, peer.f)
                self.snapshot_time[peer.node] = now
            self.merge_acks(peer.acks, now)

    def on_down(self, peer: Router, now: float) -> None:
        self.offered.pop(peer.node, None)

    # -- acknowledgements -----------------------------------------------------
    def add_ack(self, msg_id: int, expiry: float) -> None:
        if self.acks.get(msg_id, -INF) < expiry:
            self.acks[msg_id] = expiry
        if msg_id in self.buffer:
            self.remove(msg_id)

    def merge_acks(self, other: Mapping[int, float], now: float) -> None:
        """Union with a peer's acks; expired entries are not adopted."""
        for mid in other.keys() - self.acks.keys():
            exp = other[mid]
            if exp >= now:
                self.add_ack(mid, exp)

    def prune_acks(self, now: float) -> None:
        stale = [k for k, exp in self.acks.items() if exp < now]
        for k in stale:
            del self.acks[k]

    def on_delivered(self, msg: AlertMessage, now: float) -> None:
        self.add_ack(msg.id, msg.created_at + msg.ttl)

    def on_transfer_done(self, msg: AlertMessage, peer: Router, outcome: str, now: float) -> None:
        # the destination acknowledges over the still-open contact
        if outcome in ("delivered", "duplicate"):
            self.add_ack(msg.id, msg.created_at + msg.ttl)

    def accepts(self, msg: AlertMessage, now: float) -> bool:
        return msg.id not in self.acks

    def sweep(self, now: float) -> list[AlertMessage]:
        self.prune_acks(now)
        return super().sweep(now)

    # -- forwarding -----------------------------------------------------------
    def ranked(self, extra: AlertMessage | None = None) -> list[AlertMessage]:
        costs = self.costs()
        msgs = list(self.buffer)
        if extra is not None:
            msgs.append(extra)
        return rank_buffer(msgs, self.threshold_hops, lambda m: float(costs[m.destination]))

    def select_for_transfer(self, peer: Router, now: float) -> list[AlertMessage]:
        skip = self.offered.get(peer.node, ())
        direct, rest = [], []
        for m in self.ranked():
            if m.id in skip or peer.has(m.id) or m.id in self.acks or m.expired(now, self.hop_limit):
                continue
            if isinstance(peer, MaxPropRouter) and m.id in peer.acks:
                continue
            (direct if m.destination == peer.node else rest).append(m)
        return direct + rest

    def mark_offered(self, peer: Router, msg: AlertMessage) -> None:
        self.offered.setdefault(peer.node, set()).add(msg.id)

    def on_buffer_full(self, incoming: AlertMessage) -> list[AlertMessage]:
        return self.ranked(incoming)[::-1]
