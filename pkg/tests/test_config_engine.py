import pytest

from smdtn import ScenarioConfig, Simulation, default_graph, run
from smdtn.config import ConfigError, dump_config, parse_config
from smdtn.engine import SimClock, SimulationError
from smdtn.metrics import emit

SHORT = ScenarioConfig(duration=1500.0, n_local=20, n_express=20, count_target=15)


def test_defaults_valid():
    cfg = ScenarioConfig()
    assert (cfg.duration, cfg.tick, cfg.n_local, cfg.n_express) == (43200.0, 0.5, 60, 60)
    assert cfg.profile.range == 10.0


@pytest.mark.parametrize(
    "kw",
    [dict(duration=0.0), dict(tick=0.0), dict(tick=1.5), dict(router="prophet"), dict(radio="lte"), dict(msg_size=0)],
)
def test_invalid_config(kw):
    with pytest.raises(ConfigError):
        ScenarioConfig(**kw)


def test_parse_config_keys_and_comments():
    cfg = parse_config(
        """
        # scenario
        router = maxprop
        radio.profile = wifi   # 30 m
        sim.seed = 7
        radio.rangeM = 25
        nodes.events = A:0, 1:3
        """
    )
    assert (cfg.router, cfg.radio, cfg.seed, cfg.profile.range) == ("maxprop", "wifi", 7, 25.0)
    assert cfg.event_nodes == ("A:0", "1:3")


def test_unknown_key_named_with_line():
    with pytest.raises(ConfigError, match=r"line 2: unknown config key 'radio.rnage'"):
        parse_config("router = epidemic\nradio.rnage = 5\n")


def test_bad_value():
    with pytest.raises(ConfigError, match="sim.seed"):
        parse_config("sim.seed = seven")


def test_dump_parse_round_trip():
    cfg = ScenarioConfig(router="maxprop", radio="wifi", seed=9, event_nodes=("1:2",), bandwidth=5e5)
    assert parse_config(dump_config(cfg)) == cfg


def test_clock_is_integer_ticks():
    c = SimClock(0.1, 0)
    c.tick_index = 432000
    assert c.now == 432000 * 0.1


def test_one_tick_run_without_traffic():
    rep = run(ScenarioConfig(duration=0.5, count_target=0), default_graph())
    assert rep.created == 0 and rep.delivered_unique == 0


def test_short_run_counts_and_conservation():
    rep = run(SHORT, default_graph())
    assert rep.created == 15
    assert rep.hops_initiated == rep.hops_completed + rep.hops_aborted + rep.hops_in_flight
    assert len(rep.contact_durations) > 0


@pytest.mark.parametrize("router", ["epidemic", "maxprop"])
def test_same_seed_identical_report_files(tmp_path, router):
    cfg = SHORT.with_(router=router, radio="wifi")
    emit(run(cfg, default_graph()), tmp_path / "a")
    emit(run(cfg, default_graph()), tmp_path / "b")
    for p in (tmp_path / "a").iterdir():
        assert p.read_bytes() == (tmp_path / "b" / p.name).read_bytes()


def test_different_seed_differs():
    a = run(SHORT, default_graph())
    b = run(SHORT.with_(seed=2), default_graph())
    assert a != b


def test_event_nodes_are_stationary_and_named():
    sim = Simulation(SHORT.with_(event_nodes=("1:0", "A:2")), default_graph())
    assert sim.names[-2:] == ["e0", "e1"]
    before = sim.positions()[-2:].copy()
    sim.run()
    assert (sim.positions()[-2:] == before).all()


def test_bad_event_node_spec():
    with pytest.raises(ConfigError):
        Simulation(SHORT.with_(event_nodes=("nowhere:1",)), default_graph())


def test_single_source_pool():
    sim = Simulation(SHORT.with_(sources="L0", destinations="E3"), default_graph())
    sim.run()
    assert {(m.source, m.destination) for m in sim.messages.values()} == {(0, 23)}  # 20 locals precede E0


def test_downline_mode_runs():
    sim = Simulation(SHORT.with_(dest_mode="downline"), default_graph())
    rep = sim.run()
    assert rep.created == 15
    same_route = sum(sim.fleet.route[m.source] == sim.fleet.route[m.destination] for m in sim.messages.values())
    assert same_route == 15


def test_errors_annotated_with_tick(monkeypatch):
    sim = Simulation(SHORT, default_graph())

    def boom(*a, **kw):
        raise RuntimeError("boom")

    monkeypatch.setattr(sim, "_sweep", boom)
    with pytest.raises(SimulationError) as ei:
        sim.run()
    assert ei.value.tick == 0 and "tick 0" in str(ei.value)
