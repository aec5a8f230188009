"""Deterministic time-stepped simulation loop.

Each tick runs, in order: traffic generation, mobility, contact detection,
router contact callbacks (plus transfer starts on idle links), transfer
advancement with delivery callbacks, expiry sweep, metric sampling.
Iteration is always in node-index / message-id order, and random draws come
from per-purpose streams derived from the seed, so a (config, graph) pair
fully determines the report.
"""

from __future__ import annotations

import hashlib
import heapq
import logging
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .config import ConfigError, ScenarioConfig
from .geo import RouteGraph
from .link import Contact, ContactTracker, LinkLayer, Transfer
from .metrics import ScenarioReport
from .mobility import Fleet, node_ids, place_initial
from .routing import AlertMessage, EpidemicRouter, MaxPropRouter, Router, admit
from .traffic import TrafficSpec, downline_destination, draw_pair, event_times

log = logging.getLogger(__name__)


class SimulationError(RuntimeError):
    def __init__(self, tick: int, cause: BaseException):
        super().__init__(f"tick {tick}: {type(cause).__name__}: {cause}")
        self.tick = tick


def rng_stream(seed: int, purpose: str) -> np.random.Generator:
    digest = hashlib.sha256(f"smdtn/{int(seed)}/{purpose}".encode()).digest()
    return np.random.Generator(np.random.PCG64(int.from_bytes(digest[:16], "little")))


@dataclass
class SimClock:
    tick: float
    tick_index: int = 0

    @property
    def now(self) -> float:
        return self.tick_index * self.tick


def scenario_label(cfg: ScenarioConfig) -> str:
    r = {"epidemic": "EP", "maxprop": "MP"}[cfg.router]
    p = {"bluetooth": "BT", "wifi": "WIFI"}[cfg.radio]
    return f"{r}-{p}"


class Simulation:
    def __init__(self, config: ScenarioConfig, graph: RouteGraph):
        if not graph.routes:
            raise ConfigError("graph has no routes")
        self.cfg = cfg = config
        self.graph = graph
        self.clock = SimClock(cfg.tick)

        trains = place_initial(
            graph, cfg.n_local, cfg.n_express, rng_stream(cfg.seed, "placement"), cfg.local_speed, cfg.express_speed
        )
        self.fleet = Fleet(trains, graph, cfg.dwell)
        self.names = node_ids(cfg.n_local, cfg.n_express)
        self.static_xy = self._event_positions(cfg.event_nodes)
        self.names += [f"e{i}" for i in range(len(self.static_xy))]
        self.n = n = len(self.names)
        self.index = {name: i for i, name in enumerate(self.names)}

        self.routers: list[Router] = [self._make_router(i) for i in range(n)]
        self.profile = cfg.profile
        self.link = LinkLayer(self.profile)
        self.tracker = ContactTracker(n, self.profile, max_speed=float(self.fleet.speed.max(initial=0.0)))
        self.live: set[tuple[int, int]] = set()
        self.neighbours: list[set[int]] = [set() for _ in range(n)]
        self.open_contacts: dict[tuple[int, int], Contact] = {}
        self._idle: dict[tuple[int, int], tuple[int, int]] = {}

        n_trains = len(trains)
        sources = self._pool(cfg.sources, n_trains)
        dests = self._pool(cfg.destinations, n_trains)
        self.traffic = TrafficSpec(cfg.first_at, cfg.interval, cfg.count_target, cfg.msg_size, sources, dests)
        self.events = event_times(self.traffic, cfg.duration) if cfg.duration >= cfg.first_at else []
        self._next_event = 0
        self._traffic_rng = rng_stream(cfg.seed, "traffic")
        self._expiry: list[tuple[float, int]] = []
        self.messages: dict[int, AlertMessage] = {}
        self.holders: dict[int, set[int]] = {}

        self.report = ScenarioReport(scenario=scenario_label(cfg), seed=cfg.seed)

    # -- setup helpers --------------------------------------------------------
    def _make_router(self, i: int) -> Router:
        cfg = self.cfg
        if cfg.router == "maxprop":
            return MaxPropRouter(i, cfg.buffer_capacity, max(self.n, 2), cfg.hop_limit, cfg.threshold_hops)
        return EpidemicRouter(i, cfg.buffer_capacity, cfg.hop_limit)

    def _event_positions(self, specs) -> np.ndarray:
        pts = []
        for spec in specs:
            try:
                rid, idx = spec.rsplit(":", 1)
                route = self.graph.route(rid)
                st = route.stations[int(idx)]
            except (ValueError, KeyError, IndexError):
                raise ConfigError(f"bad event node {spec!r} (want ROUTE:stationIndex)") from None
            pts.append(route.point_at(st.offset))
        return np.array(pts, dtype=float).reshape(-1, 2)

    def _pool(self, text: str, n_trains: int) -> tuple[int, ...]:
        if text.strip().lower() == "all":
            return tuple(range(n_trains))
        out = []
        for name in (p.strip() for p in text.split(",")):
            if name not in self.index:
                raise ConfigError(f"unknown node {name!r} in traffic pool")
            out.append(self.index[name])
        return tuple(out)

    # -- main loop ------------------------------------------------------------
    @property
    def n_ticks(self) -> int:
        return int(math.floor(self.cfg.duration / self.cfg.tick + 1e-9)) + 1

    def positions(self) -> np.ndarray:
        xy = self.fleet.positions()
        if len(self.static_xy):
            xy = np.vstack((xy, self.static_xy))
        return xy

    def run(self, progress: Callable[[int, int], None] | None = None) -> ScenarioReport:
        total = self.n_ticks
        dt = self.cfg.tick
        for k in range(total):
            self.clock.tick_index = k
            now = self.clock.now
            try:
                self._generate(now)
                ups, downs = self._detect(k, dt)
                self._connect(ups, downs, now)
                self._transfer(now, dt)
                self._sweep(now)
            except ConfigError:
                raise
            except Exception as exc:
                raise SimulationError(k, exc) from exc
            if progress is not None and k % 10000 == 0:
                progress(k, total)
        return self._finish()

    def _detect(self, k: int, dt: float):
        if k > 0:
            self.fleet.step(dt)
        return self.tracker.update(self.positions(), dt if k > 0 else 0.0)

    def _draw(self, rng: np.random.Generator) -> tuple[int, int]:
        cfg = self.cfg
        if cfg.dest_mode == "downline":
            src = self.traffic.sources[int(rng.integers(len(self.traffic.sources)))]
            dst = None
            if src < len(self.fleet):
                f = self.fleet
                dst = downline_destination(rng, src, f.route, f.off, f.dirn, self.traffic.destinations)
            if dst is None:
                others = [d for d in self.traffic.destinations if d != src]
                dst = others[int(rng.integers(len(others)))]
            return src, dst
        return draw_pair(rng, self.traffic.sources, self.traffic.destinations)

    def _generate(self, now: float) -> None:
        cfg = self.cfg
        while self._next_event < len(self.events) and self.events[self._next_event] <= now:
            t = self.events[self._next_event]
            self._next_event += 1
            src, dst = self._draw(self._traffic_rng)
            mid = len(self.messages) + 1
            msg = AlertMessage(mid, src, dst, cfg.msg_size, t, cfg.ttl, 0)
            self.messages[mid] = msg
            self.holders[mid] = {src}
            self.report.created += 1
            heapq.heappush(self._expiry, (t + cfg.ttl, mid))
            r = self.routers[src]
            res = admit(r.buffer, msg, r)
            r.version += 1
            self.report.dropped += len(res.victims)

    def _connect(self, ups, downs, now: float) -> None:
        R = self.routers
        for a, b in downs:
            self.live.discard((a, b))
            self.neighbours[a].discard(b)
            self.neighbours[b].discard(a)
            c = self.open_contacts.pop((a, b))
            c.down_time = now
            self.report.contact_durations.append(now - c.up_time)
            R[a].on_down(R[b], now)
            R[b].on_down(R[a], now)
            self._idle.pop((a, b), None)
            self._idle.pop((b, a), None)
        for a, b in ups:
            self.live.add((a, b))
            self.neighbours[a].add(b)
            self.neighbours[b].add(a)
            self.open_contacts[(a, b)] = Contact(a, b, now)
            R[a].on_meet(R[b], now)
            R[b].on_meet(R[a], now)
            R[a].on_up(R[b], now)
            R[b].on_up(R[a], now)
        for a, b in sorted(self.live):
            self._try_start(a, b, now)
            self._try_start(b, a, now)

    def _try_start(self, src: int, dst: int, now: float) -> Transfer | None:
        if self.link.busy(src, dst):
            return None
        r, peer = self.routers[src], self.routers[dst]
        stamp = (r.version, peer.version)
        key = (src, dst)
        if self._idle.get(key) == stamp:
            return None
        msg = r.next_for(peer, now)
        if msg is None:
            self._idle[key] = stamp
            return None
        self._idle.pop(key, None)
        r.mark_offered(peer, msg)
        return self.link.start(src, dst, msg, now)

    def _transfer(self, now: float, dt: float) -> None:
        rep = self.report
        R = self.routers

        def on_complete(tr: Transfer, t_in_tick: float) -> list[Transfer]:
            t = now + t_in_tick
            msg = tr.message.hopped()
            recv = R[tr.dst]
            outcome, victims = recv.receive(msg, t)
            rep.dropped += len(victims)
            if outcome == "delivered":
                rep.delivered_unique += 1
                rep.latencies.append(t - msg.created_at)
                rep.delivered_hops.append(msg.hop_count)
                self.holders[msg.id].add(tr.dst)
            elif outcome == "duplicate":
                rep.duplicates += 1
            elif outcome == "stored":
                self.holders[msg.id].add(tr.dst)
            R[tr.src].on_transfer_done(tr.message, recv, outcome, t)
            started = []
            for s, d in [(tr.src, tr.dst)] + [(tr.dst, x) for x in sorted(self.neighbours[tr.dst])]:
                new = self._try_start(s, d, t)
                if new is not None:
                    started.append(new)
            return started

        self.link.advance(now, dt, self.live, on_complete)

    def _sweep(self, now: float) -> None:
        # every copy of an id shares its creation time and TTL, so expiry is
        # resolved per id rather than by scanning every buffer each tick
        while self._expiry:
            mid = self._expiry[0][1]
            if not self.messages[mid].expired(now):
                break
            heapq.heappop(self._expiry)
            for r in self.routers:
                if r.remove(mid) is not None:
                    self.report.expired += 1
                if isinstance(r, MaxPropRouter):
                    r.acks.pop(mid, None)

    def _finish(self) -> ScenarioReport:
        rep = self.report
        rep.hops_initiated = self.link.initiated
        rep.hops_completed = self.link.completed
        rep.hops_aborted = self.link.aborted
        rep.hops_in_flight = self.link.in_flight
        if self.messages:
            rep.propagation_fraction = sum(len(h) / self.n for h in self.holders.values()) / len(self.messages)
        rep.check()
        return rep


class ScriptedSimulation(Simulation):
    """Same loop driven by a fixed contact schedule instead of mobility.

    ``contacts`` holds ``(a, b, up, down)`` windows in seconds (``down`` may be
    None for "until the end") and ``messages`` holds ``(time, src, dst)``.
    Used for small hand-checkable traces.
    """

    def __init__(
        self,
        config: ScenarioConfig,
        n_nodes: int,
        contacts: list[tuple[int, int, float, float | None]],
        messages: list[tuple[float, int, int]],
    ):
        self.cfg = cfg = config
        self.clock = SimClock(cfg.tick)
        self.names = [str(i) for i in range(n_nodes)]
        self.n = n_nodes
        self.index = {name: i for i, name in enumerate(self.names)}
        self.routers = [self._make_router(i) for i in range(n_nodes)]
        self.profile = cfg.profile
        self.link = LinkLayer(self.profile)
        self.live = set()
        self.neighbours = [set() for _ in range(n_nodes)]
        self.open_contacts = {}
        self._idle = {}
        self.windows = [(min(a, b), max(a, b), up, down) for a, b, up, down in contacts]
        self._script = sorted(messages)
        self.events = [t for t, _, _ in self._script]
        self._next_event = 0
        self._traffic_rng = None
        self._expiry = []
        self.messages = {}
        self.holders = {}
        self.report = ScenarioReport(scenario=scenario_label(cfg), seed=cfg.seed)

    def _detect(self, k: int, dt: float):
        now = self.clock.now
        up = {(a, b) for a, b, t0, t1 in self.windows if t0 <= now and (t1 is None or now < t1)}
        ups, downs = sorted(up - self.live), sorted(self.live - up)
        return ups, downs

    def _draw(self, rng) -> tuple[int, int]:
        _, src, dst = self._script[self._next_event - 1]
        return src, dst


def run(config: ScenarioConfig, graph: RouteGraph, progress=None) -> ScenarioReport:
    return Simulation(config, graph).run(progress)
