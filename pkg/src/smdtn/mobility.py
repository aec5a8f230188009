"""Train movement along 1-D routes: constant cruise speed, station dwell,
express skipping and reversal at the termini.

``step`` is the scalar reference; ``Fleet`` advances every train at once with
numpy and performs the same floating point operations in the same order, so
both produce identical trajectories.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .geo import EXPRESS, LOCAL, RouteGraph

MPH = 0.44704  # m/s
LOCAL_SPEED_MPS = 17.4 * MPH
EXPRESS_SPEED_MPS = 55.0 * MPH
DWELL_SEC = 30.0


class EmptyScenarioError(ValueError):
    pass


@dataclass(frozen=True)
class TrainState:
    node_id: str
    route_id: str
    kind: str
    offset: float
    direction: int
    speed_max: float
    dwell_remaining: float = 0.0
    position: tuple[float, float] = (0.0, 0.0)


def node_ids(n_local: int, n_express: int) -> list[str]:
    return [f"L{i}" for i in range(n_local)] + [f"E{i}" for i in range(n_express)]


def place_initial(
    graph: RouteGraph,
    n_local: int,
    n_express: int,
    rng: np.random.Generator,
    local_speed: float = LOCAL_SPEED_MPS,
    express_speed: float = EXPRESS_SPEED_MPS,
) -> list[TrainState]:
    """Assign trains round-robin over routes with random offset and heading.

    Locals and expresses each restart the round-robin at the first route.
    """
    if n_local + n_express <= 0:
        raise EmptyScenarioError("scenario has no trains")
    if not graph.routes:
        raise ValueError("graph has no routes")
    out = []
    nr = len(graph.routes)
    for group, count, kind, speed in (("L", n_local, LOCAL, local_speed), ("E", n_express, EXPRESS, express_speed)):
        for i in range(count):
            route = graph.routes[i % nr]
            offset = float(rng.uniform(0.0, route.length))
            direction = 1 if rng.random() < 0.5 else -1
            out.append(
                TrainState(
                    node_id=f"{group}{i}",
                    route_id=route.route_id,
                    kind=kind,
                    offset=offset,
                    direction=direction,
                    speed_max=speed,
                    position=route.point_at(offset),
                )
            )
    return out


def step(state: TrainState, graph: RouteGraph, dt: float, dwell_time: float = DWELL_SEC) -> TrainState:
    if dt <= 0:
        raise ValueError("dt must be positive")
    route = graph.route(state.route_id)
    stops = route.stop_offsets(state.kind)
    length = route.length
    off, d, dwell, speed = state.offset, state.direction, state.dwell_remaining, state.speed_max
    t = dt
    while True:
        if dwell > 0:
            used = min(dwell, t)
            dwell -= used
            t -= used
            if dwell > 0:
                break
        if (d > 0 and off >= length) or (d < 0 and off <= 0.0):
            d = -d
        if t <= 0:
            break
        if d > 0:
            target = stops[np.searchsorted(stops, off, side="right")]
        else:
            target = stops[np.searchsorted(stops, off, side="left") - 1]
        dist = abs(target - off)
        reach = speed * t
        if reach < dist:
            off = off + d * reach
            break
        off = float(target)
        t -= dist / speed
        dwell = dwell_time
    return replace(
        state,
        offset=float(off),
        direction=d,
        dwell_remaining=float(dwell),
        position=route.point_at(off),
    )


class Fleet:
    """Vectorized state of all trains in a run."""

    def __init__(self, trains: list[TrainState], graph: RouteGraph, dwell_time: float = DWELL_SEC):
        self.ids = [t.node_id for t in trains]
        self.dwell_time = float(dwell_time)
        n = len(trains)
        route_index = {r.route_id: i for i, r in enumerate(graph.routes)}

        # all stop lists and all polylines concatenated; routes are separated by
        # a 1 m gap on the global arc axis so one np.interp call serves everyone
        stop_lists: dict[tuple[int, str], int] = {}
        stops_flat: list[float] = []
        arc_flat, x_flat, y_flat = [], [], []
        base_arc = []
        pos = 0.0
        for r in graph.routes:
            base_arc.append(pos)
            arc_flat.append(r.arc + pos)
            x_flat.append(r.xy[:, 0])
            y_flat.append(r.xy[:, 1])
            pos += r.length + 1.0
        self._arc = np.concatenate(arc_flat)
        self._x = np.concatenate(x_flat)
        self._y = np.concatenate(y_flat)

        self.route = np.empty(n, dtype=np.int64)
        self.kind = []
        self.off = np.empty(n)
        self.dirn = np.empty(n, dtype=np.int64)
        self.speed = np.empty(n)
        self.dwell = np.empty(n)
        self.length = np.empty(n)
        self.stop_base = np.empty(n, dtype=np.int64)
        self.nxt = np.empty(n, dtype=np.int64)
        self.arc_base = np.empty(n)
        for i, t in enumerate(trains):
            ri = route_index[t.route_id]
            r = graph.routes[ri]
            key = (ri, t.kind)
            if key not in stop_lists:
                stop_lists[key] = len(stops_flat)
                stops_flat.extend(r.stop_offsets(t.kind).tolist())
            stops = r.stop_offsets(t.kind)
            self.route[i] = ri
            self.kind.append(t.kind)
            self.off[i] = t.offset
            self.dirn[i] = t.direction
            self.speed[i] = t.speed_max
            self.dwell[i] = t.dwell_remaining
            self.length[i] = r.length
            self.stop_base[i] = stop_lists[key]
            self.arc_base[i] = base_arc[ri]
            if t.direction > 0:
                self.nxt[i] = np.searchsorted(stops, t.offset, side="right")
            else:
                self.nxt[i] = np.searchsorted(stops, t.offset, side="left") - 1
        self._stops = np.array(stops_flat + [0.0])  # pad keeps out-of-range gathers harmless
        self._stops_list = self._stops.tolist()
        self._graph = graph

    def __len__(self) -> int:
        return len(self.ids)

    def step(self, dt: float) -> None:
        off, dirn, dwell, speed = self.off, self.dirn, self.dwell, self.speed
        # fast path: trains that only dwell, or only cruise without reaching
        # a stop, this tick; everything else goes through the event loop
        target = self._stops[self.stop_base + self.nxt]
        reach = speed * dt
        outward = ((dirn > 0) & (off >= self.length)) | ((dirn < 0) & (off <= 0.0))
        dw = dwell > dt
        mv = (dwell == 0) & ~outward & (reach < np.abs(target - off))
        dwell[dw] -= dt
        off[mv] = off[mv] + dirn[mv] * reach[mv]
        rest = np.flatnonzero(~(dw | mv))
        if len(rest):
            self._step_events(rest, dt)

    def _step_events(self, idx: np.ndarray, dt: float) -> None:
        # few trains per tick land here; plain floats mirror ``step`` exactly
        stops = self._stops_list
        dwell_time = self.dwell_time
        for i in idx.tolist():
            off = float(self.off[i])
            d = int(self.dirn[i])
            dwell = float(self.dwell[i])
            speed = float(self.speed[i])
            length = float(self.length[i])
            base = int(self.stop_base[i])
            nxt = int(self.nxt[i])
            t = dt
            while True:
                if dwell > 0:
                    used = min(dwell, t)
                    dwell -= used
                    t -= used
                    if dwell > 0:
                        break
                if (d > 0 and off >= length) or (d < 0 and off <= 0.0):
                    nxt -= 2 * d
                    d = -d
                if t <= 0:
                    break
                target = stops[base + nxt]
                dist = abs(target - off)
                reach = speed * t
                if reach < dist:
                    off = off + d * reach
                    break
                off = target
                t -= dist / speed
                dwell = dwell_time
                nxt += d
            self.off[i] = off
            self.dirn[i] = d
            self.dwell[i] = dwell
            self.nxt[i] = nxt

    def positions(self) -> np.ndarray:
        s = self.arc_base + self.off
        return np.column_stack((np.interp(s, self._arc, self._x), np.interp(s, self._arc, self._y)))

    def state(self, i: int) -> TrainState:
        r = self._graph.routes[self.route[i]]
        return TrainState(
            node_id=self.ids[i],
            route_id=r.route_id,
            kind=self.kind[i],
            offset=float(self.off[i]),
            direction=int(self.dirn[i]),
            speed_max=float(self.speed[i]),
            dwell_remaining=float(self.dwell[i]),
            position=r.point_at(float(self.off[i])),
        )
