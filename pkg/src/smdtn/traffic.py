"""Alert traffic: fixed-interval creation between random node pairs."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np


@dataclass(frozen=True)
class TrafficSpec:
    first_at: float = 40.0
    interval: float = 82.8
    count_target: int = 521
    size: int = 500_000
    sources: tuple[int, ...] = ()
    destinations: tuple[int, ...] = ()

    def __post_init__(self):
        if self.interval <= 0:
            raise ValueError("traffic interval must be positive")
        if self.count_target < 0:
            raise ValueError("count_target must be >= 0")
        if self.count_target and (not self.sources or not self.destinations):
            raise ValueError("source and destination pools must be non-empty")
        if len(self.sources) == 1 and tuple(self.destinations) == tuple(self.sources):
            raise ValueError("single-node pools must differ")


def event_times(spec: TrafficSpec, duration: float) -> list[float]:
    if duration < spec.first_at:
        raise ValueError("duration ends before the first alert")
    out = []
    k = 0
    while len(out) < spec.count_target:
        t = spec.first_at + k * spec.interval
        if t >= duration:
            break
        out.append(t)
        k += 1
    return out


def draw_pair(rng: np.random.Generator, sources: Sequence[int], destinations: Sequence[int]) -> tuple[int, int]:
    src = sources[int(rng.integers(len(sources)))]
    dst = destinations[int(rng.integers(len(destinations)))]
    while dst == src:
        dst = destinations[int(rng.integers(len(destinations)))]
    return src, dst


def schedule(spec: TrafficSpec, duration: float, rng: np.random.Generator) -> list[tuple[float, int, int]]:
    return [(t, *draw_pair(rng, spec.sources, spec.destinations)) for t in event_times(spec, duration)]


def downline_destination(
    rng: np.random.Generator,
    source: int,
    route: np.ndarray,
    offset: np.ndarray,
    direction: np.ndarray,
    candidates: Sequence[int],
) -> int | None:
    """Pick a destination on the source's route, ahead of its heading.

    Falls back to any other candidate on the same route, then to ``None``
    when the source rides alone.
    """
    same = [c for c in candidates if c != source and c < len(route) and route[c] == route[source]]
    if not same:
        return None
    ahead = [c for c in same if (offset[c] - offset[source]) * direction[source] > 0]
    pool = ahead or same
    return pool[int(rng.integers(len(pool)))]
