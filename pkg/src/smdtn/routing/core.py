"""Message buffer, expiry rules and the behaviour every router provides."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable


@dataclass(frozen=True, slots=True)
class AlertMessage:
    id: int
    source: int
    destination: int
    size: int
    created_at: float
    ttl: float
    hop_count: int = 0

    def __post_init__(self):
        if self.size <= 0:
            raise ValueError("message size must be positive")
        if self.hop_count < 0:
            raise ValueError("hop_count must be >= 0")

    @property
    def name(self) -> str:
        return f"M{self.id}"

    def hopped(self) -> "AlertMessage":
        return AlertMessage(self.id, self.source, self.destination, self.size, self.created_at, self.ttl, self.hop_count + 1)

    def expired(self, now: float, hop_limit: int | None = None) -> bool:
        if now - self.created_at > self.ttl:
            return True
        return hop_limit is not None and self.hop_count > hop_limit


class OversizeError(ValueError):
    pass


class Buffer:
    def __init__(self, capacity: int):
        if capacity <= 0:
            raise ValueError("buffer capacity must be positive")
        self.capacity = capacity
        self.entries: dict[int, AlertMessage] = {}
        self.occupancy = 0

    def __contains__(self, msg_id: int) -> bool:
        return msg_id in self.entries

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries.values())

    def get(self, msg_id: int) -> AlertMessage | None:
        return self.entries.get(msg_id)

    def free(self) -> int:
        return self.capacity - self.occupancy

    def put(self, msg: AlertMessage) -> None:
        if msg.id in self.entries:
            raise KeyError(f"duplicate message {msg.id}")
        if msg.size > self.free():
            raise OverflowError("buffer overflow")
        self.entries[msg.id] = msg
        self.occupancy += msg.size

    def remove(self, msg_id: int) -> AlertMessage | None:
        msg = self.entries.pop(msg_id, None)
        if msg is not None:
            self.occupancy -= msg.size
        return msg


@dataclass
class AdmitResult:
    stored: bool
    victims: list[AlertMessage] = field(default_factory=list)
    already_have: bool = False


class Router:
    """Router contract. Subclasses override the ``on_*`` hooks and
    ``select_for_transfer``; buffer mechanics live here.
    """

    name = "base"

    def __init__(self, node: int, capacity: int, hop_limit: int | None = None):
        self.node = node
        self.buffer = Buffer(capacity)
        self.hop_limit = hop_limit
        self.delivered: set[int] = set()  # ids received here as final destination
        self.version = 0  # bumps on every buffer change

    # -- queries ----------------------------------------------------------
    def has(self, msg_id: int) -> bool:
        return msg_id in self.buffer or msg_id in self.delivered

    def live_messages(self, now: float) -> list[AlertMessage]:
        return [m for m in self.buffer if not m.expired(now, self.hop_limit)]

    # -- contract hooks -------------------------------------------------------
    def on_meet(self, peer: "Router", now: float) -> None:
        """Called on both ends of a new contact before either ``on_up``."""

    def on_up(self, peer: "Router", now: float) -> None:
        pass

    def on_down(self, peer: "Router", now: float) -> None:
        pass

    def select_for_transfer(self, peer: "Router", now: float) -> list[AlertMessage]:
        raise NotImplementedError

    def next_for(self, peer: "Router", now: float) -> AlertMessage | None:
        msgs = self.select_for_transfer(peer, now)
        return msgs[0] if msgs else None

    def mark_offered(self, peer: "Router", msg: AlertMessage) -> None:
        pass

    def on_buffer_full(self, incoming: AlertMessage) -> list[AlertMessage]:
        """Eviction order, most expendable first; may include ``incoming``."""
        raise NotImplementedError

    def accepts(self, msg: AlertMessage, now: float) -> bool:
        return True

    def on_delivered(self, msg: AlertMessage, now: float) -> None:
        pass

    def on_transfer_done(self, msg: AlertMessage, peer: "Router", outcome: str, now: float) -> None:
        pass

    # -- mechanics ------------------------------------------------------------
    def remove(self, msg_id: int) -> AlertMessage | None:
        m = self.buffer.remove(msg_id)
        if m is not None:
            self.version += 1
        return m

    def receive(self, msg: AlertMessage, now: float) -> tuple[str, list[AlertMessage]]:
        """Handle a message arriving over a completed hop (hop count already
        incremented). Returns (outcome, evicted) where outcome is one of
        ``delivered``, ``duplicate``, ``stored``, ``rejected``.
        """
        if deliver_check(msg, self.node):
            if msg.id in self.delivered:
                return "duplicate", []
            self.delivered.add(msg.id)
            self.on_delivered(msg, now)
            return "delivered", []
        if msg.expired(now, self.hop_limit) or not self.accepts(msg, now):
            return "rejected", []
        res = admit(self.buffer, msg, self)
        if res.stored:
            self.version += 1
            return "stored", res.victims
        if res.victims:
            self.version += 1
        return "rejected", res.victims

    def sweep(self, now: float) -> list[AlertMessage]:
        gone = sweep_expired(self.buffer, now, self.hop_limit)
        if gone:
            self.version += 1
        return gone


def deliver_check(msg: AlertMessage, node: int) -> bool:
    return msg.destination == node


def admit(buffer: Buffer, msg: AlertMessage, router: Router) -> AdmitResult:
    """Store ``msg``, evicting router-chosen victims if space is short."""
    if msg.size > buffer.capacity:
        raise OversizeError(f"message {msg.id} ({msg.size} B) exceeds buffer capacity {buffer.capacity} B")
    if msg.id in buffer:
        return AdmitResult(False, already_have=True)
    victims: list[AlertMessage] = []
    if msg.size > buffer.free():
        for v in router.on_buffer_full(msg):
            if v.id == msg.id:
                return AdmitResult(False, victims)
            buffer.remove(v.id)
            victims.append(v)
            if msg.size <= buffer.free():
                break
    buffer.put(msg)
    return AdmitResult(True, victims)


def sweep_expired(buffer: Buffer, now: float, hop_limit: int | None = None) -> list[AlertMessage]:
    gone = [m for m in buffer if m.expired(now, hop_limit)]
    for m in gone:
        buffer.remove(m.id)
    return gone


def ordered(messages: Iterable[AlertMessage]) -> list[AlertMessage]:
    """Oldest-created first; ids are issued in creation order and break ties."""
    return sorted(messages, key=lambda m: (m.created_at, m.id))
