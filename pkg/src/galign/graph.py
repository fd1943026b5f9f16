"""Attributed-graph data model and TSV loaders.

Graphs are simple and undirected.  Vertices are addressed externally by
string ids and internally by dense integer ids in file order.  Vertex
types, vertex attribute tokens, edge types and typed edge attributes are
all optional; absent metadata simply deactivates the similarity
components that would use it.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field


class GraphError(ValueError):
    """Raised for malformed input files or inconsistent references."""


# edge attribute kinds accepted in the edge-file header
_EDGE_KINDS = ("set", "numeric")

UNTYPED = -1


class AttributedGraph:
    """Immutable-after-construction undirected graph with optional metadata.

    Construction goes through :meth:`from_data` or :func:`load_graph`;
    the arrays below are not meant to be mutated afterwards.
    """

    def __init__(self, ext_ids, edges, vtypes, vtype_names, vattrs,
                 edge_schema, etypes, etype_names, eattrs):
        self.ext_ids = list(ext_ids)
        self._index = {e: i for i, e in enumerate(self.ext_ids)}
        if len(self._index) != len(self.ext_ids):
            raise GraphError("duplicate external vertex id")
        n = len(self.ext_ids)
        self.edges = sorted(edges)
        self.vtype = list(vtypes) if vtypes is not None else [UNTYPED] * n
        self.vtype_names = list(vtype_names)
        self.vattrs = list(vattrs) if vattrs is not None else [frozenset()] * n
        self.edge_schema = tuple(edge_schema)
        self.etype = dict(etypes) if etypes else {}
        self.etype_names = list(etype_names)
        self.eattrs = dict(eattrs) if eattrs else {}

        adj = [[] for _ in range(n)]
        for u, v in self.edges:
            adj[u].append(v)
            adj[v].append(u)
        self.adj = [sorted(a) for a in adj]
        self.adj_sets = [set(a) for a in self.adj]

        # lazy similarity caches
        self._nbr_vtype_hist = None
        self._inc_etype_hist = None
        self._inc_numeric = None
        self._inc_tokens = None

    # -- basic accessors -------------------------------------------------

    @property
    def n(self) -> int:
        return len(self.ext_ids)

    @property
    def m(self) -> int:
        return len(self.edges)

    def degree(self, u: int) -> int:
        return len(self.adj[u])

    def internal_id(self, ext: str) -> int:
        try:
            return self._index[ext]
        except KeyError:
            raise GraphError("unknown external vertex id %r" % ext) from None

    def has_vertex_types(self) -> bool:
        return len(self.vtype_names) > 0

    def has_vertex_attrs(self) -> bool:
        return any(self.vattrs)

    def has_edge_types(self) -> bool:
        return len(self.etype_names) > 0

    def numeric_edge_attrs(self):
        return [i for i, (_, k) in enumerate(self.edge_schema) if k == "numeric"]

    def set_edge_attrs(self):
        return [i for i, (_, k) in enumerate(self.edge_schema) if k == "set"]

    # -- similarity caches ----------------------------------------------

    def neighbor_vtype_hist(self, u: int) -> dict:
        """Histogram of the vertex-type ids found in N[u]."""
        if self._nbr_vtype_hist is None:
            self._nbr_vtype_hist = [None] * self.n
        h = self._nbr_vtype_hist[u]
        if h is None:
            h = {}
            for w in self.adj[u]:
                t = self.vtype[w]
                h[t] = h.get(t, 0) + 1
            self._nbr_vtype_hist[u] = h
        return h

    def incident_etype_hist(self, u: int) -> dict:
        """Histogram of edge-type ids over the edges incident to u."""
        if self._inc_etype_hist is None:
            self._inc_etype_hist = [None] * self.n
        h = self._inc_etype_hist[u]
        if h is None:
            h = {}
            for w in self.adj[u]:
                t = self.etype.get((u, w) if u < w else (w, u), UNTYPED)
                h[t] = h.get(t, 0) + 1
            self._inc_etype_hist[u] = h
        return h

    def incident_numeric_values(self, u: int) -> list:
        """Per incident edge, the tuple of numeric attribute values."""
        if self._inc_numeric is None:
            self._inc_numeric = [None] * self.n
        vals = self._inc_numeric[u]
        if vals is None:
            cols = self.numeric_edge_attrs()
            vals = []
            for w in self.adj[u]:
                key = (u, w) if u < w else (w, u)
                row = self.eattrs.get(key)
                vals.append(tuple(row[c] if row else None for c in cols))
            self._inc_numeric[u] = vals
        return vals

    def incident_token_counts(self, u: int) -> Counter:
        """Multiset of set-valued attribute tokens over incident edges."""
        if self._inc_tokens is None:
            self._inc_tokens = [None] * self.n
        c = self._inc_tokens[u]
        if c is None:
            c = Counter()
            cols = self.set_edge_attrs()
            for w in self.adj[u]:
                key = (u, w) if u < w else (w, u)
                row = self.eattrs.get(key)
                if row:
                    for col in cols:
                        c.update(row[col])
            self._inc_tokens[u] = c
        return c

    # -- construction ----------------------------------------------------

    @classmethod
    def from_data(cls, ext_ids, edge_list, vertex_types=None, vertex_attrs=None,
                  edge_schema=(), edge_types=None, edge_attrs=None):
        """Build a graph from plain python data.

        edge_list holds (u, v) internal-id pairs; duplicates and
        self-loops are dropped.  vertex_types maps internal id to a type
        name (or None), vertex_attrs to an iterable of tokens.
        edge_types / edge_attrs are keyed by the canonical (min, max)
        pair.
        """
        n = len(ext_ids)
        seen = set()
        edges = []
        for u, v in edge_list:
            if u == v:
                continue
            key = (u, v) if u < v else (v, u)
            if key in seen:
                continue
            seen.add(key)
            edges.append(key)

        vtype_names = []
        vtype_index = {}
        vtypes = [UNTYPED] * n
        if vertex_types is not None:
            for i in range(n):
                name = vertex_types[i] if i < len(vertex_types) else None
                if name is None or name == "":
                    continue
                if name not in vtype_index:
                    vtype_index[name] = len(vtype_names)
                    vtype_names.append(name)
                vtypes[i] = vtype_index[name]

        vattrs = [frozenset()] * n
        if vertex_attrs is not None:
            vattrs = [frozenset(vertex_attrs[i]) if i < len(vertex_attrs) and vertex_attrs[i] else frozenset()
                      for i in range(n)]

        etype_names = []
        etype_index = {}
        etypes = {}
        if edge_types:
            for key, name in edge_types.items():
                if name is None or name == "":
                    continue
                if name not in etype_index:
                    etype_index[name] = len(etype_names)
                    etype_names.append(name)
                etypes[key] = etype_index[name]

        return cls(ext_ids, edges, vtypes, vtype_names, vattrs,
                   edge_schema, etypes, etype_names, edge_attrs or {})


# -- file parsing ---------------------------------------------------------


def _parse_edge_header(line: str, lineno: int):
    """Parse '#edges [type] [attrs=<name:kind,...>]' into (has_type, schema)."""
    has_type = False
    schema = []
    for tok in line.split()[1:]:
        if tok == "type":
            has_type = True
        elif tok.startswith("attrs=<") and tok.endswith(">"):
            body = tok[len("attrs=<"):-1]
            if body:
                for part in body.split(","):
                    if ":" not in part:
                        raise GraphError("line %d: bad attr declaration %r" % (lineno, part))
                    name, kind = part.split(":", 1)
                    if kind not in _EDGE_KINDS:
                        raise GraphError("line %d: unknown attr kind %r" % (lineno, kind))
                    schema.append((name, kind))
        else:
            raise GraphError("line %d: unknown edge header token %r" % (lineno, tok))
    return has_type, schema


def _parse_attr_values(text: str, schema, lineno: int):
    """Split a comma-separated value field against the declared schema."""
    parts = text.split(",") if text != "" else []
    if len(parts) != len(schema):
        raise GraphError("line %d: expected %d attribute values, got %d"
                         % (lineno, len(schema), len(parts)))
    out = []
    for raw, (name, kind) in zip(parts, schema):
        if kind == "numeric":
            if raw == "":
                out.append(None)
            else:
                try:
                    out.append(float(raw))
                except ValueError:
                    raise GraphError("line %d: non-numeric value %r for attribute %s"
                                     % (lineno, raw, name)) from None
        else:
            out.append(frozenset(t for t in raw.split("|") if t))
    return tuple(out)


def load_graph(edge_path, vertex_path=None) -> AttributedGraph:
    """Load a graph from an edge TSV and an optional vertex TSV.

    Vertex rows: ext_id <TAB> type <TAB> attr1,attr2,...  (trailing
    fields optional).  Edge rows: ext_u <TAB> ext_v plus a type column
    and an attribute-value column when the '#edges' header declares
    them.  '#' lines are comments; ids referenced only by edges are
    created with empty metadata.
    """
    ext_ids = []
    index = {}
    vtypes = []
    vattrs = []

    def intern(ext):
        i = index.get(ext)
        if i is None:
            i = len(ext_ids)
            index[ext] = i
            ext_ids.append(ext)
            vtypes.append(None)
            vattrs.append(frozenset())
        return i

    if vertex_path is not None:
        with open(vertex_path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, 1):
                line = line.rstrip("\n")
                if not line or line.startswith("#"):
                    continue
                fields = line.split("\t")
                if len(fields) > 3:
                    raise GraphError("line %d: too many fields in vertex row" % lineno)
                ext = fields[0]
                if ext == "":
                    raise GraphError("line %d: empty vertex id" % lineno)
                if ext in index:
                    raise GraphError("line %d: duplicate vertex id %r" % (lineno, ext))
                i = intern(ext)
                if len(fields) > 1 and fields[1] != "":
                    vtypes[i] = fields[1]
                if len(fields) > 2 and fields[2] != "":
                    vattrs[i] = frozenset(t for t in fields[2].split(",") if t)

    has_type = False
    schema = []
    edge_list = []
    edge_types = {}
    edge_attrs = {}
    with open(edge_path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.rstrip("\n")
            if not line:
                continue
            if line.startswith("#"):
                if line.split()[:1] == ["#edges"]:
                    has_type, schema = _parse_edge_header(line, lineno)
                continue
            fields = line.split("\t")
            want = 2 + (1 if has_type else 0) + (1 if schema else 0)
            if len(fields) != want:
                raise GraphError("line %d: expected %d fields, got %d"
                                 % (lineno, want, len(fields)))
            u = intern(fields[0])
            v = intern(fields[1])
            if u == v:
                continue
            key = (u, v) if u < v else (v, u)
            edge_list.append(key)
            col = 2
            if has_type:
                if fields[col] != "":
                    edge_types[key] = fields[col]
                col += 1
            if schema:
                edge_attrs[key] = _parse_attr_values(fields[col], schema, lineno)

    return AttributedGraph.from_data(
        ext_ids, edge_list,
        vertex_types=vtypes, vertex_attrs=vattrs,
        edge_schema=schema, edge_types=edge_types, edge_attrs=edge_attrs)


def save_graph(g: AttributedGraph, edge_path, vertex_path=None) -> None:
    """Serialize a graph back to the TSV formats accepted by load_graph."""
    if vertex_path is not None:
        with open(vertex_path, "w", encoding="utf-8") as fh:
            for i, ext in enumerate(g.ext_ids):
                tname = g.vtype_names[g.vtype[i]] if g.vtype[i] != UNTYPED else ""
                attrs = ",".join(sorted(g.vattrs[i]))
                fh.write("%s\t%s\t%s\n" % (ext, tname, attrs))
    with open(edge_path, "w", encoding="utf-8") as fh:
        header = "#edges"
        if g.etype_names:
            header += " type"
        if g.edge_schema:
            header += " attrs=<%s>" % ",".join("%s:%s" % (n, k) for n, k in g.edge_schema)
        fh.write(header + "\n")
        for u, v in g.edges:
            row = [g.ext_ids[u], g.ext_ids[v]]
            if g.etype_names:
                t = g.etype.get((u, v), UNTYPED)
                row.append(g.etype_names[t] if t != UNTYPED else "")
            if g.edge_schema:
                vals = g.eattrs.get((u, v))
                cols = []
                for c, (_, kind) in enumerate(g.edge_schema):
                    if vals is None or vals[c] is None:
                        cols.append("")
                    elif kind == "numeric":
                        cols.append(repr(vals[c]))
                    else:
                        cols.append("|".join(sorted(vals[c])))
                row.append(",".join(cols))
            fh.write("\t".join(row) + "\n")


# -- vertex-pair files ----------------------------------------------------


def _load_pair_rows(path):
    rows = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.rstrip("\n")
            if not line or line.startswith("#"):
                continue
            fields = line.split("\t")
            if len(fields) < 2:
                raise GraphError("line %d: expected two tab-separated ids" % lineno)
            rows.append((lineno, fields))
    return rows


@dataclass
class AnchorMap:
    """Injective vertex correspondence used to seed an alignment."""

    pairs: list = field(default_factory=list)
    source: str = "file"

    def __post_init__(self):
        self.left = {}
        self.right = {}
        for u, v in self.pairs:
            if u in self.left or v in self.right:
                raise GraphError("anchor map is not injective at pair (%d, %d)" % (u, v))
            self.left[u] = v
            self.right[v] = u

    def __len__(self):
        return len(self.pairs)


class GroundTruth(AnchorMap):
    """Known correct correspondence used for scoring, not for seeding."""


def load_anchor_map(path, g1: AttributedGraph, g2: AttributedGraph) -> AnchorMap:
    pairs = []
    for lineno, fields in _load_pair_rows(path):
        try:
            pairs.append((g1.internal_id(fields[0]), g2.internal_id(fields[1])))
        except GraphError as exc:
            raise GraphError("line %d: %s" % (lineno, exc)) from None
    return AnchorMap(pairs, source="file")


def load_ground_truth(path, g1: AttributedGraph, g2: AttributedGraph) -> GroundTruth:
    pairs = []
    for lineno, fields in _load_pair_rows(path):
        try:
            pairs.append((g1.internal_id(fields[0]), g2.internal_id(fields[1])))
        except GraphError as exc:
            raise GraphError("line %d: %s" % (lineno, exc)) from None
    return GroundTruth(pairs, source="file")


def load_external_similarity(path, g1: AttributedGraph, g2: AttributedGraph) -> dict:
    """Sparse cross-graph vertex similarity table; values must be in [0, 1]."""
    table = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.rstrip("\n")
            if not line or line.startswith("#"):
                continue
            fields = line.split("\t")
            if len(fields) != 3:
                raise GraphError("line %d: expected ext_u, ext_v, value" % lineno)
            try:
                val = float(fields[2])
            except ValueError:
                raise GraphError("line %d: bad similarity value %r" % (lineno, fields[2])) from None
            if not 0.0 <= val <= 1.0:
                raise GraphError("line %d: similarity %g outside [0, 1]" % (lineno, val))
            try:
                key = (g1.internal_id(fields[0]), g2.internal_id(fields[1]))
            except GraphError as exc:
                raise GraphError("line %d: %s" % (lineno, exc)) from None
            table[key] = val
    return table


def load_token_weights(path) -> dict:
    """Per-token weights for the vertex-attribute similarity component."""
    weights = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.rstrip("\n")
            if not line or line.startswith("#"):
                continue
            fields = line.split("\t")
            if len(fields) != 2:
                raise GraphError("line %d: expected token, weight" % lineno)
            try:
                weights[fields[0]] = float(fields[1])
            except ValueError:
                raise GraphError("line %d: bad weight %r" % (lineno, fields[1])) from None
    return weights
