"""Store-carry-forward alert dissemination over a subway network."""

from importlib.resources import files

from .config import ScenarioConfig, load_config, parse_config
from .engine import Simulation, rng_stream, run
from .geo import RouteGraph, build_graph, parse_lines
from .metrics import ScenarioReport

__version__ = "0.1.0"


def default_lines() -> bytes:
    return files(__package__).joinpath("data/subway_lines.geojson").read_bytes()


def default_graph(cfg: ScenarioConfig | None = None) -> RouteGraph:
    cfg = cfg or ScenarioConfig()
    return build_graph(parse_lines(default_lines()), cfg.station_spacing, express_every_k=cfg.express_every_k)


__all__ = [
    "RouteGraph",
    "ScenarioConfig",
    "ScenarioReport",
    "Simulation",
    "build_graph",
    "default_graph",
    "default_lines",
    "load_config",
    "parse_config",
    "rng_stream",
    "run",
]
