"""Radio contacts and timed message transfers.

A contact is up while two nodes are within a hard disc of radius
``profile.range``. Each directed link carries at most one transfer at a
time; a transfer that is still in flight when its contact goes down is
aborted and the receiver keeps nothing.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass
from typing import Callable, Iterable, Mapping

import numpy as np


@dataclass(frozen=True)
class RadioProfile:
    name: str
    range: float  # m
    bandwidth: float  # bytes/s

    def __post_init__(self):
        if self.range <= 0 or self.bandwidth <= 0:
            raise ValueError("radio range and bandwidth must be positive")


BLUETOOTH = RadioProfile("bluetooth", 10.0, 250_000.0)
WIFI = RadioProfile("wifi", 30.0, 1_250_000.0)
PROFILES = {p.name: p for p in (BLUETOOTH, WIFI)}


@dataclass
class Contact:
    a: int
    b: int
    up_time: float
    down_time: float | None = None

    def __post_init__(self):
        if not self.a < self.b:
            raise ValueError("contact endpoints must be ordered a < b")

    @property
    def duration(self) -> float | None:
        return None if self.down_time is None else self.down_time - self.up_time


@dataclass
class Transfer:
    message: object  # AlertMessage; kept loose to avoid an import cycle
    src: int
    dst: int
    bytes_total: float
    bytes_done: float = 0.0
    started_at: float = 0.0

    @property
    def message_id(self):
        return self.message.id

    @property
    def link(self) -> tuple[int, int]:
        return (self.src, self.dst)


class BusyLinkError(RuntimeError):
    pass


def pair(a: int, b: int) -> tuple[int, int]:
    return (a, b) if a < b else (b, a)


def pairs_in_range(xy: np.ndarray, rng: float) -> set[tuple[int, int]]:
    n = len(xy)
    if n < 2:
        return set()
    i, j = np.triu_indices(n, k=1)
    d = np.hypot(xy[i, 0] - xy[j, 0], xy[i, 1] - xy[j, 1])
    hit = d <= rng
    return set(zip(i[hit].tolist(), j[hit].tolist()))


def detect_contacts(
    positions: Mapping[int, tuple[float, float]],
    profile: RadioProfile,
    previous: Iterable[tuple[int, int]],
) -> tuple[list[tuple[int, int]], list[tuple[int, int]]]:
    """Return (new ups, new downs), each a sorted list of ordered pairs."""
    nodes = sorted(positions)
    xy = np.array([positions[k] for k in nodes], dtype=float).reshape(-1, 2)
    now = {(nodes[i], nodes[j]) for i, j in pairs_in_range(xy, profile.range)}
    prev = set(previous)
    return sorted(now - prev), sorted(prev - now)


class ContactTracker:
    """Incremental contact detection over a fixed node set (index order).

    Pair distances are recomputed in full only every few ticks; in between,
    only pairs that were within ``range + margin`` are checked. A pair
    farther apart cannot close the margin before the next full pass because
    no two nodes approach faster than ``2 * max_speed``.
    """

    def __init__(self, n: int, profile: RadioProfile, max_speed: float | None = None, margin: float = 250.0):
        self.profile = profile
        self.n = n
        self.max_speed = max_speed
        self.margin = margin
        self._iu = np.triu_indices(n, k=1)
        self.up: set[tuple[int, int]] = set()
        self._cand_i = np.empty(0, dtype=np.int64)
        self._cand_j = np.empty(0, dtype=np.int64)
        self._budget = -1.0  # closing distance the candidate set still covers

    def _refresh(self, x: np.ndarray, y: np.ndarray) -> None:
        i, j = self._iu
        d = np.hypot(x[i] - x[j], y[i] - y[j])
        keep = d <= self.profile.range + self.margin
        self._cand_i, self._cand_j = i[keep], j[keep]
        self._budget = self.margin

    def update(self, xy: np.ndarray, dt: float = 0.0) -> tuple[list[tuple[int, int]], list[tuple[int, int]]]:
        x = np.ascontiguousarray(xy[:, 0])
        y = np.ascontiguousarray(xy[:, 1])
        if self.max_speed is None:
            self._refresh(x, y)
        else:
            self._budget -= 2.0 * self.max_speed * dt
            if self._budget < 0:
                self._refresh(x, y)
        ci, cj = self._cand_i, self._cand_j
        d = np.hypot(x[ci] - x[cj], y[ci] - y[cj])
        hit = d <= self.profile.range
        now = set(zip(ci[hit].tolist(), cj[hit].tolist()))
        ups = sorted(now - self.up)
        downs = sorted(self.up - now)
        self.up = now
        return ups, downs


def start_transfer(
    contact: Contact | tuple[int, int],
    message,
    src: int,
    active: Mapping[tuple[int, int], Transfer] | None = None,
    now: float = 0.0,
) -> Transfer:
    """Open a transfer of ``message`` from ``src`` to the other contact end."""
    a, b = (contact.a, contact.b) if isinstance(contact, Contact) else contact
    if isinstance(contact, Contact) and contact.down_time is not None:
        raise ValueError("contact is down")
    if src not in (a, b):
        raise ValueError(f"node {src} is not an endpoint of contact ({a}, {b})")
    dst = b if src == a else a
    if active is not None and (src, dst) in active:
        raise BusyLinkError(f"link {src}->{dst} already carries a transfer")
    return Transfer(message, src, dst, float(message.size), 0.0, now)


def advance_transfers(
    active: Iterable[Transfer],
    dt: float,
    live: set[tuple[int, int]],
    bandwidth: float,
) -> tuple[list[Transfer], list[Transfer], list[Transfer]]:
    """One-shot advance of every transfer by ``bandwidth * dt`` bytes.

    Returns (completed, aborted, still_active). Reaching exactly the total
    counts as completed.
    """
    completed, aborted, still = [], [], []
    for tr in active:
        if pair(tr.src, tr.dst) not in live:
            aborted.append(tr)
            continue
        tr.bytes_done = min(tr.bytes_total, tr.bytes_done + bandwidth * dt)
        (completed if tr.bytes_done >= tr.bytes_total else still).append(tr)
    return completed, aborted, still


Refill = Callable[[Transfer, float], list[Transfer]]


class LinkLayer:
    """Owns active transfers and the hop counters of one run.

    ``advance`` resolves completions in time order inside the tick. On each
    completion the ``on_complete`` callback may open new transfers (on the
    freed link or any other idle link) that start at the completion instant
    and use the rest of the tick.
    """

    def __init__(self, profile: RadioProfile):
        self.profile = profile
        self.active: dict[tuple[int, int], Transfer] = {}
        self.initiated = 0
        self.completed = 0
        self.aborted = 0

    def busy(self, src: int, dst: int) -> bool:
        return (src, dst) in self.active

    def start(self, src: int, dst: int, message, now: float) -> Transfer:
        tr = start_transfer((min(src, dst), max(src, dst)), message, src, self.active, now)
        self.active[(src, dst)] = tr
        self.initiated += 1
        return tr

    def abort_down(self, live: set[tuple[int, int]]) -> list[Transfer]:
        dead = [k for k in sorted(self.active) if pair(*k) not in live]
        out = [self.active.pop(k) for k in dead]
        self.aborted += len(out)
        return out

    def advance(self, now: float, dt: float, live: set[tuple[int, int]], on_complete: Refill | None = None):
        """Advance all transfers over [now, now + dt].

        Returns (completed, aborted) transfer lists.
        """
        aborted = self.abort_down(live)
        bw = self.profile.bandwidth
        heap: list[tuple[float, int, int]] = []
        # per-link time (within the tick) from which bytes have been credited
        mark: dict[tuple[int, int], float] = {}

        def schedule(tr: Transfer, t0: float):
            mark[tr.link] = t0
            t_done = t0 + (tr.bytes_total - tr.bytes_done) / bw
            if t_done <= dt:
                heapq.heappush(heap, (t_done, tr.src, tr.dst))

        for k in sorted(self.active):
            schedule(self.active[k], 0.0)

        completed = []
        while heap:
            t_done, s, d = heapq.heappop(heap)
            tr = self.active.pop((s, d))
            tr.bytes_done = tr.bytes_total
            mark.pop((s, d))
            self.completed += 1
            completed.append(tr)
            if on_complete is not None:
                for new in on_complete(tr, t_done):
                    schedule(new, t_done)

        for k, tr in self.active.items():
            t0 = mark.get(k, 0.0)
            tr.bytes_done = min(tr.bytes_total, tr.bytes_done + bw * (dt - t0))
        return completed, aborted

    @property
    def in_flight(self) -> int:
        return len(self.active)
