import json
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from smdtn import default_lines
from smdtn.geo import (
    DegenerateRouteError,
    EmptyDatasetError,
    FeatureError,
    GeoParseError,
    GeoRoute,
    RouteGraph,
    build_graph,
    parse_lines,
    project,
    synthesize_stations,
    unproject,
)

DATA = Path(__file__).parent / "data"


def fc(*features):
    return json.dumps({"type": "FeatureCollection", "features": list(features)}).encode()


def line(name, coords, kind=None, gtype="LineString"):
    props = {"name": name}
    if kind:
        props["kind"] = kind
    return {"type": "Feature", "properties": props, "geometry": {"type": gtype, "coordinates": coords}}


def test_single_two_point_line():
    routes = parse_lines(fc(line("A", [[-74.0, 40.7], [-74.0, 40.71]])))
    assert len(routes) == 1
    assert routes[0].route_id == "A"
    assert len(routes[0].vertices) == 2


def test_multilinestring_splits_into_suffixed_parts():
    parts = [[[-74.0, 40.7], [-74.0, 40.71]], [[-73.9, 40.7], [-73.9, 40.72]]]
    routes = parse_lines(fc(line("G", parts, gtype="MultiLineString")))
    assert [r.route_id for r in routes] == ["G-0", "G-1"]


def test_fixture_with_three_features():
    routes = parse_lines((DATA / "three_lines.geojson").read_bytes())
    assert [r.route_id for r in routes] == ["A", "1", "L"]
    assert [r.kind for r in routes] == ["express", "local", "local"]
    assert [len(r.vertices) for r in routes] == [3, 2, 2]


def test_vertex_order_preserved_and_repeats_collapsed():
    coords = [[-74.0, 40.7], [-74.0, 40.7], [-74.0, 40.71], [-73.99, 40.72]]
    (r,) = parse_lines(fc(line("X", coords)))
    assert r.vertices == ((-74.0, 40.7), (-74.0, 40.71), (-73.99, 40.72))


def test_malformed_json_reports_byte_offset():
    data = b'{"type": "FeatureCollection", "features": [,]}'
    with pytest.raises(GeoParseError) as ei:
        parse_lines(data)
    assert ei.value.offset == data.index(b",]")


def test_byte_offset_counts_utf8_bytes():
    data = '{"name": "éé", oops}'.encode()
    with pytest.raises(GeoParseError) as ei:
        parse_lines(data)
    assert ei.value.offset == data.index(b"oops")


def test_feature_without_geometry_names_index():
    bad = {"type": "Feature", "properties": {"name": "B"}}
    with pytest.raises(FeatureError) as ei:
        parse_lines(fc(line("A", [[0, 0], [0, 0.01]]), bad))
    assert ei.value.index == 1


def test_feature_without_name_names_index():
    f = line("A", [[0, 0], [0, 0.01]])
    f["properties"] = {}
    with pytest.raises(FeatureError) as ei:
        parse_lines(fc(f))
    assert ei.value.index == 0


def test_custom_name_key():
    f = line("A", [[0, 0], [0, 0.01]])
    f["properties"] = {"rt_symbol": "Q"}
    assert parse_lines(fc(f), name_key="rt_symbol")[0].route_id == "Q"


def test_empty_collection():
    with pytest.raises(EmptyDatasetError):
        parse_lines(fc())


def test_georoute_invariants():
    with pytest.raises(ValueError):
        GeoRoute("A", "local", ((0.0, 0.0),))
    with pytest.raises(ValueError):
        GeoRoute("", "local", ((0.0, 0.0), (1.0, 1.0)))


# -- projection ---------------------------------------------------------------
def test_projection_origin_is_zero():
    assert project((-73.9, 40.7), (-73.9, 40.7)) == (0.0, 0.0)


def test_projection_examples():
    x, _ = project((-73.999, 40.7), (-74.0, 40.7))
    assert x == pytest.approx(84.31, abs=0.01)
    for lat0 in (0.0, 40.7, 60.0):
        _, y = project((10.0, lat0 + 0.001), (10.0, lat0))
        assert y == pytest.approx(111.19, abs=0.01)


@given(
    st.floats(-170, 170),
    st.floats(-80, 80),
    st.floats(-1, 1),
    st.floats(-1, 1),
)
def test_projection_round_trip(lon0, lat0, dlon, dlat):
    p = (lon0 + dlon, lat0 + dlat)
    q = unproject(project(p, (lon0, lat0)), (lon0, lat0))
    assert abs(q[0] - p[0]) < 1e-9 and abs(q[1] - p[1]) < 1e-9


# -- stations and graph -----------------------------------------------------------
def test_synthesized_stations_every_spacing_plus_termini():
    st_ = synthesize_stations(2000.0, 800.0, 3)
    assert [s.offset for s in st_] == [0.0, 800.0, 1600.0, 2000.0]
    # indices 0 and 3 are every-3rd; index 3 is also the far terminus
    assert [s.offset for s in st_ if s.express_stop] == [0.0, 2000.0]


def test_express_every_k_on_longer_route():
    st_ = synthesize_stations(5000.0, 800.0, 3)
    assert [s.offset for s in st_ if s.express_stop] == [0.0, 2400.0, 4800.0, 5000.0]


def _straight(length_m):
    # a north-south line of the given length near the equator
    dlat = np.degrees(length_m / 6371000.0)
    return GeoRoute("S", "local", ((0.0, 0.0), (0.0, float(dlat))))


def test_build_graph_straight_route():
    g = build_graph([_straight(2000.0)], 800.0)
    r = g.routes[0]
    assert r.length == pytest.approx(2000.0, abs=1e-6)
    assert [s.offset for s in r.stations][:3] == [0.0, 800.0, 1600.0]
    assert r.stations[-1].offset == r.length


def test_stations_override():
    g = build_graph([_straight(2000.0)], 800.0, {"S": [0.0, 1000.0, 1999.9999]})
    offs = [s.offset for s in g.routes[0].stations]
    assert offs[:3] == [0.0, 1000.0, 1999.9999]
    assert offs[-1] == g.routes[0].length


def test_stations_override_out_of_range():
    with pytest.raises(ValueError):
        build_graph([_straight(2000.0)], 800.0, {"S": [0.0, 5000.0]})


def test_degenerate_route():
    with pytest.raises(DegenerateRouteError):
        build_graph([_straight(0.5)])


def test_bad_spacing():
    with pytest.raises(ValueError):
        build_graph([_straight(2000.0)], 0.0)


def test_origin_is_vertex_centroid():
    routes = parse_lines((DATA / "three_lines.geojson").read_bytes())
    g = build_graph(routes)
    pts = np.array([v for r in routes for v in r.vertices])
    assert g.projection_origin == pytest.approx(tuple(pts.mean(axis=0)))


def test_bundled_graph_invariants():
    g = build_graph(parse_lines(default_lines()))
    assert len(g.routes) == 12
    for r in g.routes:
        assert np.all(np.diff(r.arc) > 0)
        offs = [s.offset for s in r.stations]
        assert len(offs) >= 2 and offs[0] == 0.0 and offs[-1] == r.length
        assert all(0 <= o <= r.length for o in offs)
        assert r.stations[0].express_stop and r.stations[-1].express_stop


def test_serialization_round_trip_and_determinism():
    data = (DATA / "three_lines.geojson").read_bytes()
    g1 = build_graph(parse_lines(data))
    g2 = build_graph(parse_lines(data))
    assert g1.dumps() == g2.dumps()
    back = RouteGraph.loads(g1.dumps())
    assert back.dumps() == g1.dumps()
    for a, b in zip(g1.routes, back.routes):
        assert a.route_id == b.route_id and a.kind == b.kind
        np.testing.assert_array_equal(a.xy, b.xy)
        np.testing.assert_array_equal(a.arc, b.arc)
        assert a.stations == b.stations
