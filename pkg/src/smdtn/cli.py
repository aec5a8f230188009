"""``smdtn`` command line: ingest, run, batch."""

from __future__ import annotations

import argparse
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from . import default_lines
from .config import ConfigError, ScenarioConfig, load_config
from .engine import SimulationError, run, scenario_label
from .geo import GeoIngestError, RouteGraph, build_graph, load_stations_override, parse_lines
from .metrics import ScenarioReport, _csv, emit, fmt, metrics_csv, summary_text

EXIT_OK, EXIT_IO, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2, 3

# row order of matrix.csv
CELLS = (("epidemic", "bluetooth"), ("maxprop", "bluetooth"), ("epidemic", "wifi"), ("maxprop", "wifi"))


class CliError(Exception):
    def __init__(self, msg: str, code: int):
        super().__init__(msg)
        self.code = code


@dataclass(frozen=True)
class BatchSpec:
    cells: tuple[tuple[str, str], ...]
    seeds: tuple[int, ...]
    config_path: str | None = None

    def __post_init__(self):
        if not self.cells or not self.seeds:
            raise ConfigError("batch needs at least one cell and one seed")


def parse_seeds(text: str) -> tuple[int, ...]:
    """``"1,2,5"`` or ``"1-5"`` (inclusive) or a mix of both."""
    out: list[int] = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        if "-" in part:
            lo, hi = part.split("-", 1)
            out.extend(range(int(lo), int(hi) + 1))
        else:
            out.append(int(part))
    if not out:
        raise ConfigError(f"no seeds in {text!r}")
    return tuple(out)


def _load_cfg(path: str | None) -> ScenarioConfig:
    if path is None:
        return ScenarioConfig()
    try:
        return load_config(path)
    except OSError as exc:
        raise CliError(f"cannot read config {path}: {exc.strerror or exc}", EXIT_IO) from None
    except ConfigError as exc:
        raise CliError(f"{path}: {exc}", EXIT_CONFIG) from None


def _load_graph(path: str | None, cfg: ScenarioConfig) -> RouteGraph:
    if path is None:
        return build_graph(parse_lines(default_lines()), cfg.station_spacing, express_every_k=cfg.express_every_k)
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise CliError(f"cannot read graph {path}: {exc.strerror or exc}", EXIT_IO) from None
    try:
        return RouteGraph.loads(text)
    except (GeoIngestError, KeyError, TypeError, ValueError) as exc:
        raise CliError(f"{path}: {exc}", EXIT_CONFIG) from None


# -- ingest -------------------------------------------------------------------
def cmd_ingest(args) -> int:
    try:
        data = Path(args.lines).read_bytes()
    except OSError as exc:
        raise CliError(f"cannot read {args.lines}: {exc.strerror or exc}", EXIT_IO) from None
    override = None
    if args.stations:
        try:
            override = load_stations_override(Path(args.stations).read_text(encoding="utf-8"))
        except OSError as exc:
            raise CliError(f"cannot read {args.stations}: {exc.strerror or exc}", EXIT_IO) from None
        except ValueError as exc:
            raise CliError(f"{args.stations}: {exc}", EXIT_CONFIG) from None
    try:
        graph = build_graph(parse_lines(data, name_key=args.name_key), args.spacing, override, args.express_every)
    except (GeoIngestError, ValueError) as exc:
        raise CliError(f"{args.lines}: {exc}", EXIT_CONFIG) from None
    try:
        Path(args.output).write_text(graph.dumps(), encoding="utf-8")
    except OSError as exc:
        raise CliError(f"cannot write {args.output}: {exc.strerror or exc}", EXIT_IO) from None
    print(f"routes: {len(graph.routes)}  stations: {graph.station_count}  -> {args.output}")
    return EXIT_OK


# -- run ----------------------------------------------------------------------
def _progress(k: int, total: int) -> None:
    print(f"  tick {k}/{total} ({100 * k / total:.0f}%)", file=sys.stderr)


def cmd_run(args) -> int:
    cfg = _load_cfg(args.config)
    if args.seed is not None:
        cfg = cfg.with_(seed=args.seed)
    graph = _load_graph(args.graph, cfg)
    try:
        report = run(cfg, graph, progress=None if args.quiet else _progress)
    except SimulationError as exc:
        raise CliError(f"runtime error at {exc}", EXIT_RUNTIME) from None
    except ConfigError as exc:
        raise CliError(str(exc), EXIT_CONFIG) from None
    out = Path(args.out) if args.out else Path("out") / f"{report.scenario}-seed{cfg.seed}"
    try:
        emit(report, out)
    except OSError as exc:
        raise CliError(str(exc), EXIT_IO) from None
    sys.stdout.write(summary_text(report))
    return EXIT_OK


# -- batch --------------------------------------------------------------------
def _batch_task(task):
    cfg, graph_text = task
    graph = RouteGraph.loads(graph_text)
    try:
        return run(cfg, graph), None
    except Exception as exc:  # reported with the failing (cell, seed)
        return None, f"{type(exc).__name__}: {exc}"


def _mean(xs: Sequence[float]) -> float:
    xs = [x for x in xs if not math.isnan(x)]
    return math.fsum(xs) / len(xs) if xs else math.nan


MATRIX_COLUMNS = ["scenario", "seed_count", "delivery_rate", "latency_avg", "overhead_ratio", "avg_hopcount"]


def matrix_rows(reports_by_cell: dict[str, list[ScenarioReport]]) -> list[list[object]]:
    rows = []
    for label, reps in reports_by_cell.items():
        rows.append(
            [
                label,
                len(reps),
                fmt(_mean([r.delivery_rate for r in reps])),
                fmt(_mean([r.latency_avg for r in reps])),
                fmt(_mean([r.overhead_ratio for r in reps])),
                fmt(_mean([r.avg_hopcount_delivered for r in reps])),
            ]
        )
    return rows


def run_batch(
    base: ScenarioConfig,
    graph: RouteGraph,
    spec: BatchSpec,
    jobs: int = 1,
) -> dict[str, list[ScenarioReport]]:
    """Run every (cell, seed); returns reports grouped by cell in batch order."""
    tasks, keys = [], []
    for router, radio in spec.cells:
        for seed in spec.seeds:
            cfg = base.with_(router=router, radio=radio, seed=seed)
            tasks.append((cfg, graph.dumps()))
            keys.append((scenario_label(cfg), seed))
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_batch_task, tasks))
    else:
        results = [_batch_task(t) for t in tasks]
    out: dict[str, list[ScenarioReport]] = {}
    for (label, seed), (rep, err) in zip(keys, results):
        if err is not None:
            raise CliError(f"cell {label} seed {seed} failed: {err}", EXIT_RUNTIME)
        out.setdefault(label, []).append(rep)
    return out


def cmd_batch(args) -> int:
    cfg = _load_cfg(args.config)
    graph = _load_graph(args.graph, cfg)
    try:
        seeds = parse_seeds(args.seeds) if args.seeds else (cfg.seed,)
        cells = CELLS
        if args.cells:
            want = [c.strip().upper() for c in args.cells.split(",")]
            by_label = {scenario_label(cfg.with_(router=r, radio=p)): (r, p) for r, p in CELLS}
            unknown = [w for w in want if w not in by_label]
            if unknown:
                raise ConfigError(f"unknown cell(s) {unknown}; choose from {list(by_label)}")
            cells = tuple(c for c in CELLS if scenario_label(cfg.with_(router=c[0], radio=c[1])) in want)
        spec = BatchSpec(cells, seeds, args.config)
    except (ConfigError, ValueError) as exc:
        raise CliError(str(exc), EXIT_CONFIG) from None

    jobs = args.jobs or os.cpu_count() or 1
    by_cell = run_batch(cfg, graph, spec, jobs)

    out = Path(args.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
        all_reports = [r for reps in by_cell.values() for r in reps]
        (out / "matrix.csv").write_text(_csv(MATRIX_COLUMNS, matrix_rows(by_cell)), encoding="utf-8")
        (out / "runs.csv").write_text(metrics_csv(all_reports), encoding="utf-8")
        series = [[m, row[0], row[i]] for i, m in enumerate(MATRIX_COLUMNS[2:], 2) for row in matrix_rows(by_cell)]
        (out / "series.csv").write_text(_csv(["metric", "scenario", "value"], series), encoding="utf-8")
        if args.per_run:
            for r in all_reports:
                emit(r, out / f"{r.scenario}-seed{r.seed}")
    except OSError as exc:
        raise CliError(str(exc), EXIT_IO) from None
    print((out / "matrix.csv").read_text(encoding="utf-8"), end="")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="smdtn", description="Subway DTN alert dissemination simulator")
    sub = p.add_subparsers(dest="cmd", required=True)

    pi = sub.add_parser("ingest", help="build a route graph from a subway-lines GeoJSON file")
    pi.add_argument("lines")
    pi.add_argument("-o", "--output", required=True)
    pi.add_argument("--spacing", type=float, default=800.0, help="station spacing in meters")
    pi.add_argument("--name-key", default="name")
    pi.add_argument("--express-every", type=int, default=3)
    pi.add_argument("--stations", help="JSON station override: route id -> offsets (m)")
    pi.set_defaults(func=cmd_ingest)

    pr = sub.add_parser("run", help="run one scenario")
    pr.add_argument("--config")
    pr.add_argument("--graph")
    pr.add_argument("--seed", type=int)
    pr.add_argument("--out")
    pr.add_argument("-q", "--quiet", action="store_true")
    pr.set_defaults(func=cmd_run)

    pb = sub.add_parser("batch", help="run the router x radio matrix over several seeds")
    pb.add_argument("--config")
    pb.add_argument("--graph")
    pb.add_argument("--seeds", help="e.g. 1-5 or 1,2,3")
    pb.add_argument("--cells", help="subset of EP-BT,MP-BT,EP-WIFI,MP-WIFI")
    pb.add_argument("--out", default="out/batch")
    pb.add_argument("--jobs", type=int, default=0)
    pb.add_argument("--per-run", action="store_true", help="also write each run's report files")
    pb.set_defaults(func=cmd_batch)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"smdtn: error: {exc}", file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
