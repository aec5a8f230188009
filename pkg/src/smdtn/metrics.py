"""Run counters, the derived metric suite and report files."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence


class UndefinedMetricError(ValueError):
    pass


def delivery_rate(delivered: int, created: int) -> float:
    if created <= 0:
        raise UndefinedMetricError("delivery rate undefined with no alerts created")
    return delivered / created


def hop_completion_rate(initiated: int, completed: int) -> float:
    if initiated <= 0:
        raise UndefinedMetricError("hop completion rate undefined with no hops initiated")
    return completed / initiated


def overhead_ratio(hops_completed: int, delivered_unique: int) -> float:
    if delivered_unique <= 0:
        raise UndefinedMetricError("overhead ratio undefined with no deliveries")
    return (hops_completed - delivered_unique) / delivered_unique


def latency_avg(latencies: Sequence[float]) -> float:
    if not latencies:
        raise UndefinedMetricError("no deliveries, latency undefined")
    return math.fsum(latencies) / len(latencies)


def _or_nan(fn, *args) -> float:
    try:
        return fn(*args)
    except UndefinedMetricError:
        return math.nan


@dataclass
class ScenarioReport:
    scenario: str = ""
    seed: int = 0
    created: int = 0
    delivered_unique: int = 0
    duplicates: int = 0
    latencies: list[float] = field(default_factory=list)
    delivered_hops: list[int] = field(default_factory=list)
    hops_initiated: int = 0
    hops_completed: int = 0
    hops_aborted: int = 0
    hops_in_flight: int = 0
    dropped: int = 0
    expired: int = 0
    contact_durations: list[float] = field(default_factory=list)
    propagation_fraction: float = 0.0

    @property
    def delivery_rate(self) -> float:
        return _or_nan(delivery_rate, self.delivered_unique, self.created)

    @property
    def hop_completion_rate(self) -> float:
        return _or_nan(hop_completion_rate, self.hops_initiated, self.hops_completed)

    @property
    def overhead_ratio(self) -> float:
        return _or_nan(overhead_ratio, self.hops_completed, self.delivered_unique)

    @property
    def latency_avg(self) -> float:
        return _or_nan(latency_avg, self.latencies)

    @property
    def avg_hopcount_delivered(self) -> float:
        if not self.delivered_hops:
            return math.nan
        return sum(self.delivered_hops) / len(self.delivered_hops)

    def check(self) -> None:
        """Counter conservation; raises AssertionError on violation."""
        assert self.delivered_unique <= self.created
        assert self.hops_completed <= self.hops_initiated
        assert self.hops_initiated == self.hops_completed + self.hops_aborted + self.hops_in_flight
        assert len(self.latencies) == self.delivered_unique == len(self.delivered_hops)

    def row(self) -> dict[str, object]:
        return {
            "scenario": self.scenario,
            "seed": self.seed,
            "created": self.created,
            "delivered": self.delivered_unique,
            "duplicates": self.duplicates,
            "delivery_rate": fmt(self.delivery_rate),
            "latency_avg": fmt(self.latency_avg),
            "hops_initiated": self.hops_initiated,
            "hops_completed": self.hops_completed,
            "hops_aborted": self.hops_aborted,
            "hops_in_flight": self.hops_in_flight,
            "hop_completion_rate": fmt(self.hop_completion_rate),
            "overhead_ratio": fmt(self.overhead_ratio),
            "avg_hopcount": fmt(self.avg_hopcount_delivered),
            "dropped": self.dropped,
            "expired": self.expired,
            "contacts": len(self.contact_durations),
            "propagation_fraction": fmt(self.propagation_fraction),
        }


def fmt(x: float) -> str:
    """Shortest round-tripping text for a float; ``nan`` for undefined."""
    if isinstance(x, float) and math.isnan(x):
        return "nan"
    return repr(float(x))


def pct(x: float, digits: int = 1) -> str:
    return "n/a" if math.isnan(x) else f"{100 * x:.{digits}f}%"


def summary_text(r: ScenarioReport) -> str:
    lat = "n/a" if math.isnan(r.latency_avg) else f"{r.latency_avg:.0f} seconds"
    ovh = "n/a" if math.isnan(r.overhead_ratio) else f"{r.overhead_ratio:.2f}"
    hops = "n/a" if math.isnan(r.avg_hopcount_delivered) else f"{r.avg_hopcount_delivered:.2f}"
    lines = [
        f"Scenario: {r.scenario} (seed {r.seed})",
        f"Created: {r.created}",
        f"Alerts (Delivered / Created): {r.delivered_unique} / {r.created}",
        f"Alert Delivery Rate: {pct(r.delivery_rate)}",
        f"Alert Delivery Latency (average): {lat}",
        f"Node Hop (Initiated / Completed): {r.hops_initiated} / {r.hops_completed}",
        f"Hop Completion Rate: {pct(r.hop_completion_rate)}",
        f"Overhead Ratio: {ovh}",
        f"Average Hop Count: {hops}",
        f"Duplicate Deliveries: {r.duplicates}",
    ]
    return "\n".join(lines) + "\n"


def _csv(header: Sequence[str], rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


METRIC_COLUMNS = list(ScenarioReport().row())
SERIES = ("avg_hopcount", "delivery_rate", "latency_avg", "overhead_ratio")


def metrics_csv(reports: Sequence[ScenarioReport]) -> str:
    return _csv(METRIC_COLUMNS, ([r.row()[c] for c in METRIC_COLUMNS] for r in reports))


def series_csv(reports: Sequence[ScenarioReport]) -> str:
    """Long-format values for the per-scenario comparison charts."""
    rows = []
    for metric in SERIES:
        for r in reports:
            rows.append([metric, r.scenario, r.row()[metric]])
    return _csv(["metric", "scenario", "value"], rows)


def emit(report: ScenarioReport, out_dir: str | Path) -> list[Path]:
    report.check()
    out = Path(out_dir)
    files = {
        "summary.txt": summary_text(report),
        "metrics.csv": metrics_csv([report]),
        "latencies.csv": _csv(["latency_s", "hop_count"], ([fmt(l), h] for l, h in zip(report.latencies, report.delivered_hops))),
        "contacts.csv": _csv(["duration_s"], ([fmt(d)] for d in report.contact_durations)),
        "series.csv": series_csv([report]),
    }
    written = []
    try:
        out.mkdir(parents=True, exist_ok=True)
        for name, text in files.items():
            p = out / name
            with open(p, "w", encoding="utf-8", newline="\n") as fh:
                fh.write(text)
            written.append(p)
    except OSError as exc:
        raise OSError(f"cannot write report to {out}: {exc}") from exc
    return written


def duration_histogram(durations: Sequence[float], edges: Sequence[float] = (0, 10, 60, math.inf)) -> list[float]:
    """Fraction of contacts per duration bin [edges[i], edges[i+1])."""
    if not durations:
        return [0.0] * (len(edges) - 1)
    counts = [0] * (len(edges) - 1)
    for d in durations:
        for i in range(len(counts)):
            if edges[i] <= d < edges[i + 1]:
                counts[i] += 1
                break
    return [c / len(durations) for c in counts]
