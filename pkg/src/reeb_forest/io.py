"""Readers and writers: graph JSON / edge TSV, distance matrices, posets, Newick, DOT."""

from __future__ import annotations

import csv
import io
import json
import math
from pathlib import Path

import numpy as np

from .graph import MetricGraph
from .metric import FiniteMetricSpace
from .poset import Poset, build_poset
from .reeb import FilteredPoset, ReebTree

__all__ = [
    "ParseError",
    "FORMATS",
    "detect_format",
    "read_input",
    "parse_graph_json",
    "parse_edge_tsv",
    "parse_matrix_csv",
    "parse_matrix_json",
    "parse_poset_json",
    "format_number",
    "to_newick",
    "parse_newick",
    "newick_distances",
    "to_dot",
    "write_text",
]

FORMATS = ("auto", "graph-json", "edge-tsv", "matrix-csv", "matrix-json", "poset-json")


class ParseError(ValueError):
    """Malformed input; ``line`` and ``column`` are 1-based."""

    def __init__(self, message: str, line: int = 1, column: int = 1):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column


def format_number(x: float) -> str:
    """12 significant digits, integers without a trailing ``.0``."""
    x = float(x)
    if x == 0:
        return "0"
    return f"{x:.12g}"


def _number(text: str, line: int, column: int) -> float:
    try:
        v = float(text)
    except ValueError:
        raise ParseError(f"expected a number, got {text.strip()!r}", line, column) from None
    if not math.isfinite(v):
        raise ParseError(f"non-finite number {text.strip()!r}", line, column)
    return v


def _load_json(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise ParseError(e.msg, e.lineno, e.colno) from None


def _locate(text: str, needle: str) -> tuple[int, int]:
    """Line and column of the first occurrence of ``needle`` (1, 1 if absent)."""
    pos = text.find(needle)
    if pos < 0:
        return 1, 1
    line = text.count("\n", 0, pos) + 1
    return line, pos - (text.rfind("\n", 0, pos) + 1) + 1


def _require(obj, key: str, text: str):
    if not isinstance(obj, dict):
        raise ParseError("expected a JSON object at top level")
    if key not in obj:
        raise ParseError(f"missing key {key!r}")
    return obj[key]


def parse_graph_json(text: str) -> MetricGraph:
    """``{"vertices": [...], "edges": [[u, v, length], ...], "base": optional}``."""
    obj = _load_json(text)
    edges = _require(obj, "edges", text)
    out = []
    for k, e in enumerate(edges):
        if not (isinstance(e, list) and len(e) == 3 and isinstance(e[2], (int, float))
                and not isinstance(e[2], bool)):
            raise ParseError(f"edge {k} must be [u, v, length]", *_locate(text, '"edges"'))
        out.append((str(e[0]), str(e[1]), e[2]))
    vertices = obj.get("vertices")
    if vertices is None:
        vertices = list(dict.fromkeys(v for u, w, _ in out for v in (u, w)))
    return MetricGraph([str(v) for v in vertices], out, base=obj.get("base"))


def parse_edge_tsv(text: str, base=None) -> MetricGraph:
    """One edge per line, ``u v length`` separated by tabs or spaces; ``#`` starts a comment."""
    edges, order = [], {}
    for ln, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0]
        if not line.strip():
            continue
        fields, col, pos = [], [], 0
        for tok in line.split():
            pos = line.index(tok, pos)
            fields.append(tok)
            col.append(pos + 1)
            pos += len(tok)
        if len(fields) != 3:
            raise ParseError(f"expected 3 fields (u, v, length), got {len(fields)}", ln, col[0])
        u, v = fields[0], fields[1]
        edges.append((u, v, _number(fields[2], ln, col[2])))
        order.setdefault(u, None)
        order.setdefault(v, None)
    if not edges:
        raise ParseError("no edges found")
    return MetricGraph(list(order), edges, base=base)


def _field_starts(line: str) -> list[int]:
    starts, quoted = [0], False
    for i, ch in enumerate(line):
        if ch == '"':
            quoted = not quoted
        elif ch == "," and not quoted:
            starts.append(i + 1)
    return starts


def parse_matrix_csv(text: str) -> FiniteMetricSpace:
    """Square matrix; header row holds labels, rows may repeat the label in a first column."""
    lines = text.splitlines()
    rows = list(csv.reader(lines))
    numbered = [(i + 1, r) for i, r in enumerate(rows) if any(c.strip() for c in r)]
    if not numbered:
        raise ParseError("empty matrix")
    _, header = numbered[0]
    header = [h.strip() for h in header]
    if header and header[0] == "":
        header = header[1:]
    n = len(header)
    body = numbered[1:]
    if len(body) != n:
        ln = body[n][0] if len(body) > n else (body[-1][0] + 1 if body else 2)
        raise ParseError(f"expected {n} rows after the header, got {len(body)}", ln, 1)
    d = np.zeros((n, n))
    for i, (ln, row) in enumerate(body):
        starts = _field_starts(lines[ln - 1])
        offset = 0
        if len(row) == n + 1:
            if row[0].strip() != header[i]:
                raise ParseError(f"row label {row[0].strip()!r} does not match {header[i]!r}", ln, 1)
            offset = 1
        elif len(row) != n:
            raise ParseError(f"expected {n} values, got {len(row)}", ln, 1)
        for j in range(n):
            c = offset + j
            d[i, j] = _number(row[c], ln, starts[c] + 1 if c < len(starts) else 1)
    return FiniteMetricSpace(header, d)


def parse_matrix_json(text: str) -> FiniteMetricSpace:
    """``{"labels": [...], "d": [[...], ...]}``."""
    obj = _load_json(text)
    labels = _require(obj, "labels", text)
    d = _require(obj, "d", text)
    try:
        arr = np.array(d, dtype=float)
    except (TypeError, ValueError):
        raise ParseError("'d' must be a numeric matrix", *_locate(text, '"d"')) from None
    return FiniteMetricSpace(labels, arr)


def parse_poset_json(text: str) -> FilteredPoset:
    """``{"n": optional, "labels": optional, "covers": [[a, b], ...], "f": [...]}`` with ``a < b``."""
    obj = _load_json(text)
    covers = _require(obj, "covers", text)
    f = _require(obj, "f", text)
    labels = obj.get("labels")
    n = obj.get("n", len(labels) if labels is not None else len(f))
    if len(f) != n:
        raise ParseError(f"'f' has {len(f)} values for {n} elements", *_locate(text, '"f"'))
    for k, c in enumerate(covers):
        if not (isinstance(c, list) and len(c) == 2):
            raise ParseError(f"cover {k} must be a pair [a, b]", *_locate(text, '"covers"'))
    P = build_poset([tuple(c) for c in covers], n=n, labels=labels)
    return FilteredPoset(P, [float(v) for v in f])


def detect_format(path: str | None, text: str) -> str:
    """By extension first, then by content."""
    ext = Path(path).suffix.lower() if path else ""
    if ext in (".tsv", ".edges", ".txt"):
        return "edge-tsv"
    if ext == ".csv":
        return "matrix-csv"
    stripped = text.lstrip()
    if stripped.startswith("{"):
        obj = _load_json(text)
        if isinstance(obj, dict):
            if "covers" in obj:
                return "poset-json"
            if "d" in obj:
                return "matrix-json"
            if "edges" in obj:
                return "graph-json"
        raise ParseError("cannot tell which JSON format this is (expected 'edges', 'd' or 'covers')")
    first = stripped.splitlines()[0] if stripped else ""
    return "matrix-csv" if "," in first else "edge-tsv"


def read_input(path: str | None, fmt: str = "auto", *, text: str | None = None, base=None):
    """Parse ``path`` (or ``text``) into a MetricGraph, FiniteMetricSpace or FilteredPoset."""
    if text is None:
        text = Path(path).read_text()
    if fmt == "auto":
        fmt = detect_format(path, text)
    if fmt == "graph-json":
        G = parse_graph_json(text)
        return G.with_base(base) if base is not None else G
    if fmt == "edge-tsv":
        return parse_edge_tsv(text, base)
    if fmt == "matrix-csv":
        return parse_matrix_csv(text)
    if fmt == "matrix-json":
        return parse_matrix_json(text)
    if fmt == "poset-json":
        return parse_poset_json(text)
    raise ValueError(f"unknown format {fmt!r}")


# Newick

_UNQUOTED_BAD = set(" \t\n()[]':;,")


def _quote(label: str) -> str:
    if label and not (set(label) & _UNQUOTED_BAD):
        return label
    return "'" + label.replace("'", "''") + "'"


def to_newick(T: ReebTree) -> str:
    """Rooted at the smallest element; branch length is ``f(child) - f(parent)``."""
    f = T.f

    def render(x: int) -> str:
        kids = T.children(x)
        inner = "(" + ",".join(render(c) for c in kids) + ")" if kids else ""
        s = inner + _quote(T.labels[x])
        if T.parent[x] is not None:
            s += ":" + format_number(f[x] - f[T.parent[x]])
        return s

    # iterative depth would only matter for very deep trees
    return render(T.root) + ";"


class _NewickReader:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0
        self.nodes: list[tuple[str, int | None, float]] = []  # label, parent, length

    def error(self, msg: str) -> ParseError:
        line = self.text.count("\n", 0, self.pos) + 1
        col = self.pos - (self.text.rfind("\n", 0, self.pos) + 1) + 1
        return ParseError(msg, line, col)

    def skip(self):
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1

    def peek(self) -> str:
        self.skip()
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def label(self) -> str:
        self.skip()
        if self.peek() == "'":
            self.pos += 1
            out = []
            while True:
                if self.pos >= len(self.text):
                    raise self.error("unterminated quoted label")
                ch = self.text[self.pos]
                if ch == "'":
                    if self.text[self.pos + 1: self.pos + 2] == "'":
                        out.append("'")
                        self.pos += 2
                        continue
                    self.pos += 1
                    return "".join(out)
                out.append(ch)
                self.pos += 1
        start = self.pos
        while self.pos < len(self.text) and self.text[self.pos] not in _UNQUOTED_BAD:
            self.pos += 1
        return self.text[start:self.pos]

    def length(self) -> float:
        if self.peek() != ":":
            return 0.0
        self.pos += 1
        self.skip()
        start = self.pos
        while self.pos < len(self.text) and self.text[self.pos] not in _UNQUOTED_BAD:
            self.pos += 1
        tok = self.text[start:self.pos]
        try:
            return float(tok)
        except ValueError:
            self.pos = start
            raise self.error(f"bad branch length {tok!r}") from None

    def subtree(self, parent: int | None) -> int:
        me = len(self.nodes)
        self.nodes.append(("", parent, 0.0))
        if self.peek() == "(":
            self.pos += 1
            while True:
                self.subtree(me)
                ch = self.peek()
                if ch == ",":
                    self.pos += 1
                elif ch == ")":
                    self.pos += 1
                    break
                else:
                    raise self.error("expected ',' or ')'")
        name = self.label()
        self.nodes[me] = (name, parent, self.length())
        return me

    def parse(self):
        self.subtree(None)
        if self.peek() != ";":
            raise self.error("expected ';'")
        self.pos += 1
        if self.peek():
            raise self.error("trailing text after ';'")
        return self.nodes


def parse_newick(text: str) -> list[tuple[str, int | None, float]]:
    """Nodes in preorder as ``(label, parent index, branch length)``."""
    return _NewickReader(text).parse()


def newick_distances(nodes) -> tuple[list[str], np.ndarray]:
    """Path-length distances between all parsed nodes."""
    n = len(nodes)
    depth = np.zeros(n)
    anc: list[list[int]] = []
    for i, (_, parent, length) in enumerate(nodes):
        if parent is None:
            anc.append([i])
        else:
            depth[i] = depth[parent] + length
            anc.append(anc[parent] + [i])
    d = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            k = 0
            while k < min(len(anc[i]), len(anc[j])) and anc[i][k] == anc[j][k]:
                k += 1
            lca = anc[i][k - 1]
            d[i, j] = d[j, i] = depth[i] + depth[j] - 2 * depth[lca]
    return [name for name, _, _ in nodes], d


# DOT

def _dot_id(s: str) -> str:
    return '"' + s.replace("\\", "\\\\").replace('"', '\\"') + '"'


def to_dot(fp: FilteredPoset, name: str = "covering") -> str:
    """Covering graph drawn bottom-up, one rank per ``f`` level."""
    P = fp.poset
    f = fp.f
    lines = [f"digraph {name} {{", "  rankdir=BT;"]
    for level in sorted(set(f.tolist())):
        members = [x for x in range(P.n) if f[x] == level]
        lines.append("  { rank=same; " + " ".join(_dot_id(P.labels[x]) for x in members) + " }")
    for x in range(P.n):
        lines.append(f"  {_dot_id(P.labels[x])} [label={_dot_id(P.labels[x] + ' (' + format_number(f[x]) + ')')}];")
    for a, b in P.cover_pairs():
        lines.append(f"  {_dot_id(P.labels[a])} -> {_dot_id(P.labels[b])};")
    lines.append("}")
    return "\n".join(lines) + "\n"


def write_text(path: str, text: str) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write(text)


def dump_json(obj) -> str:
    buf = io.StringIO()
    json.dump(obj, buf, indent=2)
    return buf.getvalue() + "\n"
