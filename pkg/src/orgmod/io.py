"""Graph file parsers, JSON reports and SVG/DOT rendering."""

import json
import math
import os
import re
from pathlib import Path

import numpy as np

from .exceptions import InputError, ParseError
from .annealing import AnnealConfig
from .graph import build_graph
from .layout import Layout
from .prior import custom_prior, grid_prior, identity_prior
from .quality import modularity, organized_modularity

__all__ = [
    "parse_edge_list",
    "parse_pajek",
    "parse_gml",
    "read_graph",
    "load_matrix",
    "dumps_json",
    "loads_json",
    "result_to_dict",
    "layout_to_dict",
    "layout_from_dict",
    "render_svg",
    "render_frames",
    "render_dot",
]


class _Indexer:
    """Maps arbitrary vertex names to dense indices in first-appearance order."""

    def __init__(self):
        self.index = {}
        self.names = []

    def __call__(self, name):
        i = self.index.get(name)
        if i is None:
            i = self.index[name] = len(self.names)
            self.names.append(name)
        return i


def _weight(token, line):
    try:
        w = float(token)
    except ValueError:
        raise ParseError(f"weight {token!r} is not a number", line) from None
    if not math.isfinite(w):
        raise ParseError(f"weight {token!r} is not finite", line)
    if w < 0:
        raise ParseError(f"negative weight {w}", line)
    return w


def _finish(triples, n, labels):
    if not triples:
        raise InputError("graph has no edges")
    return build_graph(triples, n_vertices=n, labels=labels)


def parse_edge_list(text):
    """``source target [weight]`` per line; ``#`` comments and blank lines skipped."""
    ids = _Indexer()
    triples = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        tokens = line.split()
        if len(tokens) not in (2, 3):
            raise ParseError(f"expected 'source target [weight]', got {line!r}", lineno)
        w = _weight(tokens[2], lineno) if len(tokens) == 3 else 1.0
        triples.append((ids(tokens[0]), ids(tokens[1]), w))
    return _finish(triples, len(ids.names), ids.names)


_PAJEK_VERTEX = re.compile(r'^\s*(\d+)\s*(?:"([^"]*)"|(\S+))?')


def parse_pajek(text):
    """Pajek ``.net``: ``*Vertices n`` then ``*Edges`` and/or ``*Arcs``.

    Arcs are symmetrized as ``W_ij = W->ij + W->ji``; edges are read as
    undirected. Indices are 1-based.
    """
    n = None
    labels = None
    section = None
    triples = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("%"):
            continue
        if line.startswith("*"):
            head = line.split()
            key = head[0].lower()
            if key == "*vertices":
                if len(head) < 2 or not head[1].isdigit():
                    raise ParseError("'*Vertices' needs a vertex count", lineno)
                n = int(head[1])
                labels = [str(i) for i in range(1, n + 1)]
                section = "vertices"
            elif key in ("*edges", "*arcs"):
                if n is None:
                    raise ParseError(f"{head[0]} before '*Vertices'", lineno)
                section = key[1:]
            else:
                raise ParseError(f"unsupported section {head[0]!r}", lineno)
            continue
        if section is None:
            raise ParseError("missing '*Vertices' header", lineno)
        if section == "vertices":
            m = _PAJEK_VERTEX.match(line)
            if not m:
                raise ParseError(f"malformed vertex line {line!r}", lineno)
            i = int(m.group(1))
            if not 1 <= i <= n:
                raise ParseError(f"vertex index {i} outside 1..{n}", lineno)
            label = m.group(2) if m.group(2) is not None else m.group(3)
            if label is not None:
                labels[i - 1] = label
            continue
        tokens = line.split()
        if len(tokens) < 2:
            raise ParseError(f"expected 'source target [weight]', got {line!r}", lineno)
        try:
            u, v = int(tokens[0]), int(tokens[1])
        except ValueError:
            raise ParseError(f"non-integer vertex index in {line!r}", lineno) from None
        for i in (u, v):
            if not 1 <= i <= n:
                raise ParseError(f"vertex index {i} outside 1..{n}", lineno)
        w = _weight(tokens[2], lineno) if len(tokens) >= 3 else 1.0
        if section == "arcs" and u == v:
            # W_ii = W->ii + W->ii
            w = 2.0 * w
        triples.append((u - 1, v - 1, w))
    if n is None:
        raise ParseError("missing '*Vertices' header")
    return _finish(triples, n, labels)


_GML_TOKEN = re.compile(r'\s*(?:(\[)|(\])|"((?:[^"\\]|\\.)*)"|([^\s\[\]"]+))', re.S)


def _gml_tokens(text):
    """Yield ``(kind, value, line)``; ``#`` starts a comment to end of line."""
    lines = text.splitlines()
    for lineno, raw in enumerate(lines, 1):
        pos = 0
        while pos < len(raw):
            if raw[pos:].lstrip().startswith("#"):
                break
            m = _GML_TOKEN.match(raw, pos)
            if not m or m.end() == pos:
                if raw[pos:].strip() == "":
                    break
                raise ParseError(f"unexpected character {raw[pos:].strip()[:1]!r}", lineno)
            pos = m.end()
            if m.group(1):
                yield "[", None, lineno
            elif m.group(2):
                yield "]", None, lineno
            elif m.group(3) is not None:
                yield "str", m.group(3), lineno
            elif m.group(4):
                yield "atom", m.group(4), lineno


def _gml_parse_list(tokens, closing):
    items = []
    for kind, value, line in tokens:
        if kind == "]":
            if not closing:
                raise ParseError("unbalanced ']'", line)
            return items
        if kind != "atom":
            raise ParseError(f"expected a key, got {kind} {value!r}", line)
        key = value
        try:
            vkind, vvalue, vline = next(tokens)
        except StopIteration:
            raise ParseError(f"key {key!r} has no value", line) from None
        if vkind == "[":
            items.append((key, _gml_parse_list(tokens, True), line))
        elif vkind == "]":
            raise ParseError(f"key {key!r} has no value", vline)
        else:
            items.append((key, vvalue, line))
    if closing:
        raise ParseError("unterminated '['")
    return items


def parse_gml(text):
    """GML subset: ``graph [ node [ id label ] edge [ source target value ] ]``.

    Unknown keys are ignored. Directed graphs are symmetrized like Pajek arcs.
    """
    top = _gml_parse_list(_gml_tokens(text), False)
    graphs = [(v, line) for k, v, line in top if k.lower() == "graph" and isinstance(v, list)]
    if not graphs:
        raise ParseError("no 'graph [ ... ]' block found")
    body, _ = graphs[0]
    ids = {}
    labels = []
    raw_edges = []
    for key, value, line in body:
        k = key.lower()
        if k == "node" and isinstance(value, list):
            attrs = {kk.lower(): (vv, ll) for kk, vv, ll in value if not isinstance(vv, list)}
            if "id" not in attrs:
                raise ParseError("node without 'id'", line)
            node_id = attrs["id"][0]
            if node_id in ids:
                raise ParseError(f"duplicate node id {node_id!r}", line)
            ids[node_id] = len(labels)
            labels.append(attrs["label"][0] if "label" in attrs else node_id)
        elif k == "edge" and isinstance(value, list):
            attrs = {kk.lower(): (vv, ll) for kk, vv, ll in value if not isinstance(vv, list)}
            for end in ("source", "target"):
                if end not in attrs:
                    raise ParseError(f"edge without '{end}'", line)
            w = 1.0
            for wkey in ("value", "weight"):
                if wkey in attrs:
                    w = _weight(attrs[wkey][0], attrs[wkey][1])
                    break
            raw_edges.append((attrs["source"], attrs["target"], w, line))
    triples = []
    for (src, sline), (dst, dline), w, line in raw_edges:
        if src not in ids:
            raise ParseError(f"edge references unknown node id {src!r}", sline)
        if dst not in ids:
            raise ParseError(f"edge references unknown node id {dst!r}", dline)
        triples.append((ids[src], ids[dst], w))
    return _finish(triples, len(labels), labels)


_PARSERS = {"pajek": parse_pajek, "gml": parse_gml, "edgelist": parse_edge_list}
_EXTENSIONS = {".net": "pajek", ".paj": "pajek", ".gml": "gml"}


def read_graph(path, fmt=None):
    """Read a graph file; the format follows the extension unless ``fmt`` is given."""
    path = Path(path)
    if fmt is None:
        fmt = _EXTENSIONS.get(path.suffix.lower(), "edgelist")
    if fmt not in _PARSERS:
        raise InputError(f"unknown graph format {fmt!r}; expected one of {sorted(_PARSERS)}")
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc
    return _PARSERS[fmt](text)


def load_matrix(path_or_text):
    """Whitespace-separated square matrix, one row per line."""
    if isinstance(path_or_text, (str, os.PathLike)) and "\n" not in str(path_or_text) and Path(path_or_text).exists():
        text = Path(path_or_text).read_text(encoding="utf-8")
    else:
        text = str(path_or_text)
    rows = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        try:
            row = [float(t) for t in line.split()]
        except ValueError:
            raise ParseError(f"non-numeric entry in {line!r}", lineno) from None
        if rows and len(row) != len(rows[0]):
            raise ParseError(f"row has {len(row)} entries, expected {len(rows[0])}", lineno)
        rows.append(row)
    if not rows or len(rows) != len(rows[0]):
        raise ParseError("matrix must be square and non-empty")
    return np.array(rows)


# ---------------------------------------------------------------------------
# JSON

def _format_float(x):
    if math.isnan(x) or math.isinf(x):
        raise InputError(f"cannot serialize non-finite number {x}")
    text = "%.17g" % x
    if not any(c in text for c in ".eE"):
        text += ".0"
    return text


def _dump(obj, indent, level, out):
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if obj is None:
        out.append("null")
    elif obj is True:
        out.append("true")
    elif obj is False:
        out.append("false")
    elif isinstance(obj, (int, np.integer)):
        out.append(str(int(obj)))
    elif isinstance(obj, (float, np.floating)):
        out.append(_format_float(float(obj)))
    elif isinstance(obj, str):
        out.append(json.dumps(obj, ensure_ascii=False))
    elif isinstance(obj, dict):
        if not obj:
            out.append("{}")
            return
        out.append("{\n")
        for i, (k, v) in enumerate(obj.items()):
            out.append(f'{pad}"{k}": ')
            _dump(v, indent, level + 1, out)
            out.append(",\n" if i < len(obj) - 1 else "\n")
        out.append(end + "}")
    elif isinstance(obj, (list, tuple, np.ndarray)):
        seq = list(obj)
        if not seq:
            out.append("[]")
            return
        if all(isinstance(v, (int, float, np.integer, np.floating)) and not isinstance(v, bool) for v in seq):
            out.append("[")
            for i, v in enumerate(seq):
                _dump(v, indent, level + 1, out)
                if i < len(seq) - 1:
                    out.append(", ")
            out.append("]")
            return
        out.append("[\n")
        for i, v in enumerate(seq):
            out.append(pad)
            _dump(v, indent, level + 1, out)
            out.append(",\n" if i < len(seq) - 1 else "\n")
        out.append(end + "]")
    else:
        raise InputError(f"cannot serialize {type(obj).__name__}")


def dumps_json(obj, indent=2):
    """Serialize with insertion-ordered keys and 17 significant digits per float."""
    out = []
    _dump(obj, indent, 0, out)
    out.append("\n")
    return "".join(out)


def loads_json(text):
    return json.loads(text)


def _prior_dict(prior):
    rows, cols = prior.shape if prior.shape is not None else (None, None)
    d = {
        "rows": rows,
        "cols": cols,
        "kernel": prior.kernel,
        "lambda": prior.scale,
        "n_clusters": prior.c,
    }
    if prior.kernel == "custom":
        d["similarity"] = [list(r) for r in prior.similarity]
        d["positions"] = [list(p) for p in prior.positions]
    return d


def graph_summary(graph):
    return {"n": graph.n, "edge_count": graph.edge_count, "total_weight": graph.total_weight}


def result_to_dict(graph, prior, result):
    """Stable-key dictionary for one annealing run."""
    cfg = result.config.to_dict()
    cfg["prior"] = _prior_dict(prior)
    return {
        "graph": graph_summary(graph),
        "config": cfg,
        "result": {
            "assignments": [int(a) for a in result.clustering.assignment],
            "modularity": modularity(graph, result.clustering),
            "organized_modularity": organized_modularity(graph, result.clustering, prior),
            "nonempty_clusters": result.clustering.nonempty_clusters(),
            "critical_temperature": result.critical_temperature,
            "transitions": [float(t) for t in result.transitions],
        },
        "trail": [
            {"temperature": s.temperature, "expected_modularity": s.expected_modularity}
            for s in result.trail
        ],
    }


def prior_from_dict(d):
    kernel = d["kernel"]
    if kernel == "identity":
        return identity_prior(d["n_clusters"])
    if kernel == "custom":
        return custom_prior(np.array(d["positions"]), np.array(d["similarity"]))
    return grid_prior(d["rows"], d["cols"], kernel, d["lambda"])


def config_from_dict(d):
    fields = {k: v for k, v in d.items() if k != "prior"}
    return AnnealConfig(**fields)


def layout_to_dict(layout):
    return {
        "node_kind": layout.node_kind,
        "node_ids": [int(i) for i in layout.node_ids],
        "points": [[float(x), float(y)] for x, y in layout.points],
        "sizes": [int(s) for s in layout.sizes],
        "edges": [[int(a), int(b)] for a, b in layout.edges],
        "edge_weights": [float(w) for w in layout.edge_weights],
    }


def layout_from_dict(d):
    try:
        points = np.array(d["points"], dtype=np.float64).reshape(-1, 2)
        edges = np.array(d.get("edges", []), dtype=np.int64).reshape(-1, 2)
    except (KeyError, ValueError, TypeError) as exc:
        raise InputError(f"malformed layout: {exc}") from exc
    if edges.size and (edges.min() < 0 or edges.max() >= len(points)):
        raise InputError("layout edge references a missing point")
    sizes = d.get("sizes") or [1] * len(points)
    weights = d.get("edge_weights") or [1.0] * len(edges)
    return Layout(points, sizes, edges, weights, tuple(d.get("node_ids") or ()), d.get("node_kind", "cluster"))


# ---------------------------------------------------------------------------
# SVG / DOT

_UNIT = 100.0


def render_svg(layout, labels=None, title=None):
    """One SVG document for a layout.

    Circle areas are proportional to node sizes; stroke widths grow with
    ``log(1 + weight)`` between 0.5 and 4 display units.
    """
    pts = layout.points * _UNIT
    if len(pts):
        lo, hi = pts.min(axis=0), pts.max(axis=0)
    else:
        lo = hi = np.zeros(2)
    sizes = layout.sizes.astype(float)
    r_max = 0.3 * _UNIT
    radii = r_max * np.sqrt(sizes / sizes.max()) if len(sizes) and sizes.max() > 0 else np.zeros(0)
    span = np.maximum(hi - lo, 0.0) + 2 * r_max
    margin = 0.1 * np.maximum(span, _UNIT)
    x0, y0 = lo - r_max - margin
    w, h = span + 2 * margin
    # plane (x, y) drawn with rows downwards: first coordinate is the row
    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="{y0:.3f} {x0:.3f} {h:.3f} {w:.3f}">',
    ]
    if title:
        out.append(f"  <title>{_escape(title)}</title>")
    if len(layout.edges):
        lw = np.log1p(layout.edge_weights)
        top = lw.max() if lw.max() > 0 else 1.0
        widths = 0.5 + 3.5 * lw / top
        out.append('  <g stroke="#555" stroke-opacity="0.8" stroke-linecap="round">')
        for (a, b), sw in zip(layout.edges, widths):
            (xa, ya), (xb, yb) = pts[a], pts[b]
            out.append(
                f'    <line x1="{ya:.3f}" y1="{xa:.3f}" x2="{yb:.3f}" y2="{xb:.3f}" stroke-width="{sw:.3f}"/>'
            )
        out.append("  </g>")
    out.append('  <g fill="#4a7bb7" stroke="#1d3557" stroke-width="1">')
    for (x, y), r in zip(pts, radii):
        out.append(f'    <circle cx="{y:.3f}" cy="{x:.3f}" r="{max(r, 2.0):.3f}"/>')
    out.append("  </g>")
    names = labels if labels is not None else [str(i) for i in layout.node_ids]
    out.append('  <g font-family="sans-serif" font-size="14" text-anchor="middle" fill="#000">')
    for (x, y), name in zip(pts, names):
        out.append(f'    <text x="{y:.3f}" y="{x + 5:.3f}">{_escape(str(name))}</text>')
    out.append("  </g>")
    out.append("</svg>")
    return "\n".join(out) + "\n"


def _escape(s):
    return s.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;").replace('"', "&quot;")


def render_frames(frames, out_dir):
    """Write ``frame_0000.svg``, ``frame_0001.svg``, ... and return their paths."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    for i, frame in enumerate(frames):
        p = out_dir / f"frame_{i:04d}.svg"
        p.write_text(render_svg(frame.layout, labels=[""] * frame.n_groups,
                                title=f"T = {frame.temperature:.6g}"), encoding="utf-8")
        paths.append(p)
    return paths


def render_dot(induced, labels=None):
    """Undirected DOT text of an induced graph; empty clusters are omitted."""
    keep = [k for k in range(induced.c) if induced.sizes[k] > 0]
    lines = ["graph {"]
    for k in keep:
        name = labels[k] if labels is not None else str(k)
        lines.append(f'  {k} [label="{_escape(str(name))}", size={int(induced.sizes[k])}];')
    for k, l, w in induced.edges():
        if induced.sizes[k] > 0 and induced.sizes[l] > 0:
            lines.append(f"  {k} -- {l} [weight={w!r}];")
    lines.append("}")
    return "\n".join(lines) + "\n"
