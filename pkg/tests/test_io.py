import xml.etree.ElementTree as ET

import numpy as np
import pytest

from orgmod import InputError, ParseError
from orgmod.annealing import AnnealConfig, AnnealTrail, Snapshot, anneal
from orgmod.datasets import karate_path, les_miserables_path, load_karate
from orgmod.graph import Clustering, build_graph, induced_graph
from orgmod.io import (
    config_from_dict,
    dumps_json,
    layout_from_dict,
    layout_to_dict,
    load_matrix,
    loads_json,
    parse_edge_list,
    parse_gml,
    parse_pajek,
    prior_from_dict,
    read_graph,
    render_dot,
    render_frames,
    render_svg,
    result_to_dict,
)
from orgmod.layout import FuzzyFrame, Layout, grid_layout
from orgmod.prior import build_grid, custom_prior, grid_prior, identity_prior

SVG = "{http://www.w3.org/2000/svg}"


def test_edge_list_examples():
    g = parse_edge_list("a b\nb c")
    assert (g.n, g.edge_count, g.total_weight) == (3, 2, 2)
    assert list(g.labels) == ["a", "b", "c"]
    g = parse_edge_list("a b 2.5\n# comment\n\na b 0.5")
    assert g.weights[0, 1] == 3.0
    g = read_graph(karate_path())
    assert (g.n, g.edge_count) == (34, 78)


def test_edge_list_errors():
    with pytest.raises(ParseError, match="line 2"):
        parse_edge_list("a b\na b c d")
    with pytest.raises(ParseError, match="line 1"):
        parse_edge_list("a b -1")
    with pytest.raises(ParseError, match="line 1"):
        parse_edge_list("a b x")
    with pytest.raises(InputError):
        parse_edge_list("# nothing")


def test_pajek():
    g = parse_pajek("*Vertices 2\n1 \"x\"\n2 \"y\"\n*Arcs\n1 2 1\n2 1 1\n")
    assert g.weights[0, 1] == 2 and list(g.labels) == ["x", "y"]
    g = parse_pajek("% comment\n*Vertices 3\n*Edges\n1 2 0.5\n2 3 4\n")
    assert g.weights[0, 1] == 0.5 and g.weights[1, 2] == 4
    g = parse_pajek("*Vertices 2\n*Arcs\n1 1 1\n1 2 1\n")
    assert g.weights[0, 0] == 2
    with pytest.raises(ParseError, match="line 3"):
        parse_pajek("*Vertices 2\n*Edges\n0 1\n")
    with pytest.raises(ParseError, match="line 1"):
        parse_pajek("1 2\n")
    with pytest.raises(ParseError, match="line 3"):
        parse_pajek("*Vertices 2\n*Edges\n1 3\n")


def test_gml():
    g = parse_gml('graph [ node [ id 0 label "a" ] node [ id 1 label "b" ] edge [ source 0 target 1 ] ]')
    assert (g.n, g.total_weight) == (2, 1) and list(g.labels) == ["a", "b"]
    text = """# header comment
    graph [
      directed 0
      comment "ignored"
      node [ id 5 label "x" graphics [ x 1 y 2 ] ]
      node [ id 7 ]
      edge [ source 5 target 7 value 3 extra [ nested 1 ] ]
    ]"""
    g = parse_gml(text)
    assert g.weights[0, 1] == 3 and list(g.labels) == ["x", "7"]
    with pytest.raises(ParseError, match="line 1"):
        parse_gml("graph [ node [ id 0 ] edge [ source 0 target 9 ] ]")
    with pytest.raises(ParseError):
        parse_gml("graph [ node [ id 0 ]")


def test_les_miserables_fixture():
    g = read_graph(les_miserables_path())
    assert g.n == 77 and g.edge_count == 254
    assert len(np.unique(g.weights.data)) > 1


def test_read_graph_format_override(tmp_path):
    p = tmp_path / "g.dat"
    p.write_text("*Vertices 2\n*Edges\n1 2\n")
    assert read_graph(p, "pajek").n == 2
    with pytest.raises(ParseError):
        read_graph(p)
    with pytest.raises(InputError):
        read_graph(p, "graphml")


def test_load_matrix(tmp_path):
    p = tmp_path / "s.txt"
    p.write_text("1 0.5\n0.5 1\n")
    np.testing.assert_array_equal(load_matrix(p), [[1, 0.5], [0.5, 1]])
    with pytest.raises(ParseError):
        load_matrix("1 2\n3\n")


def test_json_float_round_trip(rng):
    xs = list(rng.normal(size=200) * 10.0 ** rng.integers(-300, 300, 200)) + [0.1, 1 / 3, 1e-320]
    text = dumps_json({"x": xs, "n": 3, "s": "é\"", "none": None, "b": True})
    back = loads_json(text)
    assert back["x"] == xs
    assert dumps_json(back) == text
    with pytest.raises(InputError):
        dumps_json({"x": float("nan")})


def test_result_json_round_trip():
    g = load_karate()
    prior = grid_prior(2, 2, "linear", 0.5)
    cfg = AnnealConfig(outer_steps=34, seed=4)
    res = anneal(g, prior, cfg)
    doc = result_to_dict(g, prior, res)
    assert list(doc) == ["graph", "config", "result", "trail"]
    assert list(doc["result"]) == ["assignments", "modularity", "organized_modularity",
                                   "nonempty_clusters", "critical_temperature", "transitions"]
    assert len(doc["result"]["assignments"]) == g.n
    text = dumps_json(doc)
    back = loads_json(text)
    assert back == doc and dumps_json(back) == text
    assert config_from_dict(back["config"]) == cfg
    p2 = prior_from_dict(back["config"]["prior"])
    np.testing.assert_array_equal(p2.similarity, prior.similarity)
    assert anneal(g, p2, config_from_dict(back["config"])).clustering == res.clustering


def test_custom_prior_round_trip():
    s = np.array([[1, 0.1, 0.1, 0], [0.1, 1, 0, 0.1], [0.1, 0, 1, 0.1], [0, 0.1, 0.1, 1.0]])
    prior = custom_prior(build_grid(2, 2), s)
    g = load_karate()
    res = anneal(g, prior, AnnealConfig(outer_steps=5))
    back = prior_from_dict(loads_json(dumps_json(result_to_dict(g, prior, res)))["config"]["prior"])
    np.testing.assert_array_equal(back.similarity, s)
    np.testing.assert_array_equal(back.positions, prior.positions)


def test_layout_round_trip():
    lay = Layout([[0, 0], [1, 0.5]], [3, 4], [[0, 1]], [2.5], (2, 7))
    back = layout_from_dict(loads_json(dumps_json(layout_to_dict(lay))))
    np.testing.assert_array_equal(back.points, lay.points)
    assert back.node_ids == (2, 7)
    with pytest.raises(InputError):
        layout_from_dict({"points": [[0, 0]], "edges": [[0, 1]]})


def _parse_svg(text):
    root = ET.fromstring(text.encode())
    return root.findall(f".//{SVG}circle"), root.findall(f".//{SVG}line")


def test_svg_examples():
    circles, lines = _parse_svg(render_svg(Layout([[0, 0]], [5], np.zeros((0, 2)), [])))
    assert len(circles) == 1 and len(lines) == 0


def test_svg_karate_square():
    g = load_karate()
    s = np.full((4, 4), 0.05)
    np.fill_diagonal(s, 1.0)
    s[0, 3] = s[3, 0] = s[1, 2] = s[2, 1] = 0.0
    prior = custom_prior(build_grid(2, 2), s)
    best = max((anneal(g, prior, AnnealConfig(outer_steps=151, seed=k)) for k in range(5)),
               key=lambda r: r.clustering.nonempty_clusters())
    lay = grid_layout(best.clustering, prior, induced_graph(g, best.clustering))
    circles, lines = _parse_svg(render_svg(lay))
    # one cluster touches a single other cluster, so 4 of the 6 pairs are linked
    assert len(circles) == 4 and len(lines) == 4
    radii = [float(c.get("r")) for c in circles]
    order = np.argsort(lay.sizes)
    assert np.all(np.diff(np.array(radii)[order]) >= 0)
    widths = [float(line.get("stroke-width")) for line in lines]
    assert min(widths) >= 0.5 - 1e-9 and max(widths) == pytest.approx(4.0)


def test_render_frames(tmp_path):
    lay = Layout([[0, 0], [1, 1]], [1, 1], [[0, 1]], [1.0])
    frames = [FuzzyFrame(1.0 / (i + 1), lay, np.array([0, 1]), lay.points) for i in range(6)]
    paths = render_frames(frames, tmp_path / "f")
    assert [p.name for p in paths] == [f"frame_{i:04d}.svg" for i in range(6)]
    for p in paths:
        ET.fromstring(p.read_bytes())


def test_dot():
    g = build_graph([(0, 1, 1), (1, 2, 0.1), (2, 3, 1)])
    cl = Clustering([0, 0, 2, 2], 3)
    dot = render_dot(induced_graph(g, cl))
    assert dot.startswith("graph {")
    assert "0 -- 2 [weight=0.1]" in dot
    assert "  1 [" not in dot
    assert "->" not in dot


def test_identity_prior_serialization():
    g = load_karate()
    res = anneal(g, identity_prior(3), AnnealConfig(outer_steps=5))
    doc = loads_json(dumps_json(result_to_dict(g, identity_prior(3), res)))
    assert prior_from_dict(doc["config"]["prior"]).is_identity
