"""Flooding with summary-vector anti-entropy."""

from __future__ import annotations

from typing import Iterable

from .core import AlertMessage, Buffer, Router, ordered


def summary_vector(buffer: Buffer | Iterable[AlertMessage], now: float | None = None, hop_limit: int | None = None) -> set[int]:
    if now is None:
        return {m.id for m in buffer}
    return {m.id for m in buffer if not m.expired(now, hop_limit)}


def request_missing(
    mine: set[int],
    theirs: Iterable[AlertMessage],
    requester: int | None = None,
) -> list[int]:
    """Ids the peer holds that I lack; anything addressed to me comes first,
    then oldest-created first."""
    missing = [m for m in theirs if m.id not in mine]
    mine_first = [m for m in ordered(missing) if m.destination == requester]
    rest = [m for m in ordered(missing) if m.destination != requester]
    return [m.id for m in mine_first + rest]


class EpidemicRouter(Router):
    name = "epidemic"

    def __init__(self, node: int, capacity: int, hop_limit: int | None = None):
        super().__init__(node, capacity, hop_limit)
        self.offered: dict[int, set[int]] = {}
        self._order: list[AlertMessage] = []
        self._order_version = -1

    def on_up(self, peer: Router, now: float) -> None:
        self.offered[peer.node] = set()

    def on_down(self, peer: Router, now: float) -> None:
        self.offered.pop(peer.node, None)

    def _ordered(self) -> list[AlertMessage]:
        if self._order_version != self.version:
            self._order = ordered(self.buffer)
            self._order_version = self.version
        return self._order

    def _wanted(self, peer: Router, now: float):
        # peer knowledge is read live, i.e. the summary is refreshed whenever
        # either side's buffer changes during the contact
        skip = self.offered.get(peer.node, ())
        theirs, done = peer.buffer.entries, peer.delivered
        for m in self._ordered():
            if m.id in skip or m.id in theirs or m.id in done or m.expired(now, self.hop_limit):
                continue
            yield m

    def select_for_transfer(self, peer: Router, now: float) -> list[AlertMessage]:
        wanted = list(self._wanted(peer, now))
        return [m for m in wanted if m.destination == peer.node] + [m for m in wanted if m.destination != peer.node]

    def next_for(self, peer: Router, now: float) -> AlertMessage | None:
        first = None
        for m in self._wanted(peer, now):
            if m.destination == peer.node:
                return m
            if first is None:
                first = m
        return first

    def mark_offered(self, peer: Router, msg: AlertMessage) -> None:
        self.offered.setdefault(peer.node, set()).add(msg.id)

    def on_buffer_full(self, incoming: AlertMessage) -> list[AlertMessage]:
        return ordered([*self.buffer, incoming])
