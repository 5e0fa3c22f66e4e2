"""Ribbon-graph data model and topological invariants.

A graph is a combinatorial map: every vertex carries a cyclic
(counterclockwise) sequence of ports, every internal edge pairs two ports,
and every external leg occupies one port.  Faces are traced with the usual
next-port permutation; ports occupied by external legs act as punctures
that mark a face broken without terminating the walk.

All values are immutable after construction and every function here is
pure, so concurrent evaluation on shared graphs is safe.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .errors import InvalidMap, MalformedGraph, UnknownEdge

MOYAL = "moyal"
FREE = "free"

SIMPLE = "simple"
GENERALISED = "generalised"


@dataclass(frozen=True)
class Vertex:
    id: str
    ports: tuple[str, ...]
    kind: str = MOYAL


@dataclass(frozen=True)
class Edge:
    id: str
    ports: tuple[str, str]
    kind: str = SIMPLE
    insertions: int = 0

    @property
    def generalised(self) -> bool:
        return self.kind == GENERALISED

    @property
    def segments(self) -> int:
        """Number of propagator segments the edge is made of."""
        return self.insertions + 1 if self.generalised else 1


@dataclass(frozen=True)
class ExternalLeg:
    id: str
    port: str
    kappa: bool = False


class RibbonGraph:
    """Validated combinatorial map with external legs.

    Instances are immutable; derived lookups (port owners, adjacency,
    bridges) are built once at construction.
    """

    __slots__ = (
        "vertices",
        "edges",
        "externals",
        "_vertex_by_id",
        "_edge_by_id",
        "_external_by_id",
        "_port_vertex",
        "_port_occupant",
        "_bridges",
    )

    def __init__(self, vertices, edges, externals, check: bool = True):
        self.vertices: tuple[Vertex, ...] = tuple(vertices)
        self.edges: tuple[Edge, ...] = tuple(edges)
        self.externals: tuple[ExternalLeg, ...] = tuple(externals)
        self._vertex_by_id = {v.id: v for v in self.vertices}
        self._edge_by_id = {e.id: e for e in self.edges}
        self._external_by_id = {x.id: x for x in self.externals}
        self._port_vertex: dict[str, str] = {}
        self._port_occupant: dict[str, tuple[str, str]] = {}
        self._bridges = None
        for v in self.vertices:
            for p in v.ports:
                if check and p in self._port_vertex:
                    raise MalformedGraph(f"port {p!r} appears on two vertices")
                self._port_vertex[p] = v.id
        for e in self.edges:
            for p in e.ports:
                if check and p in self._port_occupant:
                    raise MalformedGraph(f"port {p!r} used twice")
                self._port_occupant[p] = ("edge", e.id)
        for x in self.externals:
            if check and x.port in self._port_occupant:
                raise MalformedGraph(f"port {x.port!r} used twice")
            self._port_occupant[x.port] = ("ext", x.id)
        if check:
            self._validate()

    def _validate(self):
        if not self.vertices:
            raise MalformedGraph("graph has no vertices")
        if len(self._vertex_by_id) != len(self.vertices):
            raise MalformedGraph("duplicate vertex id")
        if len(self._edge_by_id) != len(self.edges):
            raise MalformedGraph("duplicate edge id")
        if len(self._external_by_id) != len(self.externals):
            raise MalformedGraph("duplicate external id")
        for v in self.vertices:
            if v.kind == MOYAL and len(v.ports) != 4:
                raise MalformedGraph(f"moyal vertex {v.id!r} has {len(v.ports)} ports")
            if v.kind == FREE and not 1 <= len(v.ports) <= 2:
                raise MalformedGraph(f"free vertex {v.id!r} must have 1 or 2 ports")
            if v.kind not in (MOYAL, FREE):
                raise MalformedGraph(f"unknown vertex kind {v.kind!r}")
        for e in self.edges:
            if len(set(e.ports)) != 2:
                raise MalformedGraph(f"edge {e.id!r} must pair two distinct ports")
            if e.kind == GENERALISED and e.insertions < 1:
                raise MalformedGraph(f"generalised edge {e.id!r} needs insertions >= 1")
            if e.kind == SIMPLE and e.insertions:
                raise MalformedGraph(f"simple edge {e.id!r} cannot carry insertions")
            if e.kind not in (SIMPLE, GENERALISED):
                raise MalformedGraph(f"unknown edge kind {e.kind!r}")
            for p in e.ports:
                if p not in self._port_vertex:
                    raise MalformedGraph(f"edge {e.id!r} uses unknown port {p!r}")
        for x in self.externals:
            if x.port not in self._port_vertex:
                raise MalformedGraph(f"external {x.id!r} uses unknown port {x.port!r}")
        for p in self._port_vertex:
            if p not in self._port_occupant:
                raise MalformedGraph(f"port {p!r} is neither wired nor external")

    # -- lookups -----------------------------------------------------------

    def vertex(self, vid: str) -> Vertex:
        return self._vertex_by_id[vid]

    def edge(self, eid: str) -> Edge:
        try:
            return self._edge_by_id[eid]
        except KeyError:
            raise UnknownEdge(f"unknown edge {eid!r}") from None

    def external(self, xid: str) -> ExternalLeg:
        return self._external_by_id[xid]

    def port_vertex(self, port: str) -> str:
        return self._port_vertex[port]

    def occupant(self, port: str) -> tuple[str, str]:
        """("edge", edge_id) or ("ext", leg_id) sitting on the port."""
        return self._port_occupant[port]

    def edge_endpoints(self, eid: str) -> tuple[str, str]:
        e = self.edge(eid)
        return self._port_vertex[e.ports[0]], self._port_vertex[e.ports[1]]

    # -- counts ------------------------------------------------------------

    @property
    def n_external(self) -> int:
        return len(self.externals)

    @property
    def n_kappa_external(self) -> int:
        return sum(1 for x in self.externals if x.kappa)

    @property
    def e(self) -> int:
        return len(self.edges)

    @property
    def e_simple(self) -> int:
        return sum(1 for e in self.edges if not e.generalised)

    @property
    def e_generalised(self) -> int:
        return sum(1 for e in self.edges if e.generalised)

    @property
    def v(self) -> int:
        return len(self.vertices)

    def has_moyal_vertex(self) -> bool:
        return any(v.kind == MOYAL for v in self.vertices)

    # -- connectivity ------------------------------------------------------

    def components(self) -> list[frozenset[str]]:
        """Connected components as vertex-id sets, sorted by smallest member."""
        return _components(
            [v.id for v in self.vertices],
            [self.edge_endpoints(e.id) for e in self.edges],
        )

    @property
    def k(self) -> int:
        return len(self.components())

    def is_connected(self) -> bool:
        return self.k == 1

    def bridges(self) -> frozenset[str]:
        """Edge ids whose deletion increases the number of components."""
        if self._bridges is None:
            self._bridges = _find_bridges(self)
        return self._bridges

    def is_bridge(self, eid: str) -> bool:
        self.edge(eid)
        return eid in self.bridges()

    def is_tree_like(self) -> bool:
        """True when every generalised edge is a bridge of its component."""
        return all(self.is_bridge(e.id) for e in self.edges if e.generalised)

    # -- equality / serialization ------------------------------------------

    def to_dict(self) -> dict:
        vertices = []
        for v in self.vertices:
            d = {"id": v.id, "ports": list(v.ports)}
            if v.kind != MOYAL:
                d["kind"] = v.kind
            vertices.append(d)
        edges = []
        for e in self.edges:
            d = {"id": e.id, "kind": e.kind, "ports": list(e.ports)}
            if e.generalised:
                d["insertions"] = e.insertions
            edges.append(d)
        externals = [
            {"id": x.id, "port": x.port, "kappa": x.kappa} for x in self.externals
        ]
        return {"vertices": vertices, "edges": edges, "externals": externals}

    def __eq__(self, other):
        return isinstance(other, RibbonGraph) and self.to_dict() == other.to_dict()

    def __repr__(self):
        return (
            f"RibbonGraph(v={self.v}, e={self.e}, N={self.n_external}, "
            f"k={self.k})"
        )


def build_graph(description: dict) -> RibbonGraph:
    """Build a validated graph from a parsed description dict."""
    if not isinstance(description, dict):
        raise MalformedGraph("description must be a JSON object")
    try:
        raw_vertices = description["vertices"]
        raw_edges = description.get("edges", [])
        raw_externals = description.get("externals", [])
    except (KeyError, TypeError) as exc:
        raise MalformedGraph(f"missing top-level key: {exc}") from exc
    vertices = []
    for rv in raw_vertices:
        try:
            vertices.append(
                Vertex(str(rv["id"]), tuple(str(p) for p in rv["ports"]),
                       kind=rv.get("kind", MOYAL))
            )
        except (KeyError, TypeError) as exc:
            raise MalformedGraph(f"bad vertex entry {rv!r}") from exc
    edges = []
    for re_ in raw_edges:
        try:
            kind = re_.get("kind", SIMPLE)
            ports = tuple(str(p) for p in re_["ports"])
            if len(ports) != 2:
                raise MalformedGraph(f"edge {re_.get('id')!r} needs exactly 2 ports")
            ins = int(re_.get("insertions", 0))
            edges.append(Edge(str(re_["id"]), ports, kind=kind, insertions=ins))
        except (KeyError, TypeError, ValueError) as exc:
            raise MalformedGraph(f"bad edge entry {re_!r}") from exc
    externals = []
    for rx in raw_externals:
        try:
            externals.append(
                ExternalLeg(str(rx["id"]), str(rx["port"]), bool(rx.get("kappa", False)))
            )
        except (KeyError, TypeError) as exc:
            raise MalformedGraph(f"bad external entry {rx!r}") from exc
    return RibbonGraph(vertices, edges, externals)


def dump_graph(g: RibbonGraph) -> str:
    """Canonical JSON serialization; stable byte-for-byte."""
    return json.dumps(g.to_dict(), indent=2) + "\n"


def load_graph(text: str) -> RibbonGraph:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise MalformedGraph(f"invalid JSON: {exc}") from exc
    return build_graph(data)


# -- faces ----------------------------------------------------------------


def trace_faces(port_cycles, edge_pairs, punctures):
    """Trace the faces of a combinatorial map.

    port_cycles: iterable of port tuples, one per vertex, counterclockwise.
    edge_pairs:  iterable of (a, b) port pairs (the edge involution).
    punctures:   ports occupied by external legs; they do not stop a walk
                 but mark the face broken.

    Returns (faces, broken) where faces is a list of port tuples and
    broken the number of faces meeting at least one puncture.
    """
    nxt_at_vertex = {}
    for cycle in port_cycles:
        n = len(cycle)
        for i, p in enumerate(cycle):
            nxt_at_vertex[p] = cycle[(i + 1) % n]
    partner = {}
    for a, b in edge_pairs:
        partner[a] = b
        partner[b] = a
    punctures = set(punctures)

    def step(port):
        # next-port permutation: rotate at the partner's vertex; punctured
        # ports are their own partner.
        return nxt_at_vertex[partner.get(port, port)]

    faces = []
    seen = set()
    for start in sorted(nxt_at_vertex):
        if start in seen:
            continue
        walk = []
        p = start
        while True:
            walk.append(p)
            seen.add(p)
            p = step(p)
            if p == start:
                break
        faces.append(tuple(walk))
    broken = sum(1 for f in faces if any(p in punctures for p in f))
    return faces, broken


def faces(g: RibbonGraph):
    """All face walks of the graph plus the broken-face count."""
    return trace_faces(
        [v.ports for v in g.vertices],
        [e.ports for e in g.edges],
        [x.port for x in g.externals],
    )


# -- topology report -------------------------------------------------------


@dataclass(frozen=True)
class ComponentTopology:
    vertices: frozenset[str]
    v: int
    e: int
    e_simple: int
    e_generalised: int
    n_external: int
    f: int
    chi: int
    genus: int
    broken_faces: int
    tree_like: bool

    @property
    def planar(self) -> bool:
        return self.genus == 0

    @property
    def regular(self) -> bool:
        return self.broken_faces == 1


@dataclass(frozen=True)
class TopologyReport:
    v: int
    e: int
    e_simple: int
    e_generalised: int
    f: int
    k: int
    chi: int
    genus: int
    broken_faces: int
    n_external: int
    n_kappa_external: int
    planar: bool
    regular: bool
    tree_like: bool
    components: tuple[ComponentTopology, ...] = field(default_factory=tuple)


def topology(g: RibbonGraph) -> TopologyReport:
    """Euler-characteristic topology of the map, per component and total.

    Raises InvalidMap when a component's Euler defect 2 - chi is odd,
    which cannot happen for an orientable rotation system.
    """
    comps = g.components()
    all_faces, _ = faces(g)
    face_component = {}
    for fw in all_faces:
        face_component[fw] = g.port_vertex(fw[0])
    comp_reports = []
    bridge_set = g.bridges()
    for comp in comps:
        cv = [v for v in g.vertices if v.id in comp]
        ce = [e for e in g.edges if g.port_vertex(e.ports[0]) in comp]
        cx = [x for x in g.externals if g.port_vertex(x.port) in comp]
        cf = [fw for fw in all_faces if face_component[fw] in comp]
        ext_ports = {x.port for x in cx}
        broken = sum(1 for fw in cf if any(p in ext_ports for p in fw))
        chi = len(cv) - len(ce) + len(cf)
        defect = 2 - chi
        if defect % 2 or defect < 0:
            raise InvalidMap(f"component {sorted(comp)} has chi={chi}")
        tree_like = all(e.id in bridge_set for e in ce if e.generalised)
        comp_reports.append(
            ComponentTopology(
                vertices=comp,
                v=len(cv),
                e=len(ce),
                e_simple=sum(1 for e in ce if not e.generalised),
                e_generalised=sum(1 for e in ce if e.generalised),
                n_external=len(cx),
                f=len(cf),
                chi=chi,
                genus=defect // 2,
                broken_faces=broken,
                tree_like=tree_like,
            )
        )
    total_genus = sum(c.genus for c in comp_reports)
    total_broken = sum(c.broken_faces for c in comp_reports)
    return TopologyReport(
        v=g.v,
        e=g.e,
        e_simple=g.e_simple,
        e_generalised=g.e_generalised,
        f=len(all_faces),
        k=len(comps),
        chi=sum(c.chi for c in comp_reports),
        genus=total_genus,
        broken_faces=total_broken,
        n_external=g.n_external,
        n_kappa_external=g.n_kappa_external,
        planar=total_genus == 0,
        regular=total_broken == 1,
        tree_like=all(c.tree_like for c in comp_reports),
        components=tuple(comp_reports),
    )


# -- spanning trees --------------------------------------------------------


@dataclass(frozen=True)
class SpanningTree:
    """Rooted spanning forest with branch bookkeeping.

    parent maps a non-root vertex to (parent vertex, connecting edge id);
    branch maps a tree edge id to the vertex set hanging below it.
    """

    roots: tuple[str, ...]
    tree_edges: frozenset[str]
    loop_edges: frozenset[str]
    parent: dict[str, tuple[str, str]]
    branch: dict[str, frozenset[str]]

    @property
    def root(self) -> str:
        return self.roots[0]

    def child_vertex(self, eid: str) -> str:
        for v, (_, e) in self.parent.items():
            if e == eid:
                return v
        raise UnknownEdge(f"edge {eid!r} is not a tree edge")


def spanning_tree(g: RibbonGraph, root: str | None = None,
                  scales=None) -> SpanningTree:
    """Spanning forest of the graph, one root per component.

    Without scales, edges are taken in id order (BFS-like Kruskal).  With a
    scale attribution the forest is built greedily by descending effective
    scale, lowest edge id breaking ties, so that its restriction to every
    quasi-local subgraph spans that subgraph.
    """
    if scales is None:
        order = sorted(e.id for e in g.edges)
    else:
        order = sorted(
            (e.id for e in g.edges),
            key=lambda eid: (-scales.effective(eid), eid),
        )
    comp_of = {v.id: v.id for v in g.vertices}

    def find(a):
        while comp_of[a] != a:
            comp_of[a] = comp_of[comp_of[a]]
            a = comp_of[a]
        return a

    tree = []
    for eid in order:
        a, b = g.edge_endpoints(eid)
        ra, rb = find(a), find(b)
        if ra != rb:
            comp_of[ra] = rb
            tree.append(eid)
    tree_set = frozenset(tree)
    loop_set = frozenset(e.id for e in g.edges) - tree_set

    adj = {v.id: [] for v in g.vertices}
    for eid in tree:
        a, b = g.edge_endpoints(eid)
        adj[a].append((eid, b))
        adj[b].append((eid, a))
    comps = g.components()
    roots = []
    for comp in comps:
        if root is not None and root in comp:
            roots.append(root)
        else:
            roots.append(min(comp))
    parent = {}
    seen = set()
    for r in roots:
        seen.add(r)
        stack = [r]
        while stack:
            u = stack.pop()
            for eid, w in sorted(adj[u]):
                if w not in seen:
                    seen.add(w)
                    parent[w] = (u, eid)
                    stack.append(w)
    children = {}
    for w, (pu, _) in parent.items():
        children.setdefault(pu, []).append(w)
    branch = {}
    for eid in tree:
        child = next(v for v, (_, pe) in parent.items() if pe == eid)
        below = {child}
        stack = [child]
        while stack:
            u = stack.pop()
            for w in children.get(u, ()):
                if w not in below:
                    below.add(w)
                    stack.append(w)
        branch[eid] = frozenset(below)
    return SpanningTree(
        roots=tuple(roots),
        tree_edges=tree_set,
        loop_edges=loop_set,
        parent=parent,
        branch=branch,
    )


def all_spanning_trees(g: RibbonGraph):
    """Every spanning forest edge set, as frozensets, in id order."""
    import itertools

    need = g.v - g.k
    edge_ids = sorted(e.id for e in g.edges)
    out = []
    for combo in itertools.combinations(edge_ids, need):
        comp = {v.id: v.id for v in g.vertices}

        def find(a):
            while comp[a] != a:
                comp[a] = comp[comp[a]]
                a = comp[a]
            return a

        ok = True
        for eid in combo:
            a, b = g.edge_endpoints(eid)
            ra, rb = find(a), find(b)
            if ra == rb:
                ok = False
                break
            comp[ra] = rb
        if ok:
            out.append(frozenset(combo))
    return out


def tree_from_edges(g: RibbonGraph, edge_set, root: str) -> SpanningTree:
    """Root a given spanning edge set and rebuild the branch map."""
    adj = {v.id: [] for v in g.vertices}
    for eid in sorted(edge_set):
        a, b = g.edge_endpoints(eid)
        adj[a].append((eid, b))
        adj[b].append((eid, a))
    parent = {}
    seen = {root}
    stack = [root]
    while stack:
        u = stack.pop()
        for eid, w in sorted(adj[u]):
            if w not in seen:
                seen.add(w)
                parent[w] = (u, eid)
                stack.append(w)
    children = {}
    for w, (pu, _) in parent.items():
        children.setdefault(pu, []).append(w)
    branch = {}
    for eid in edge_set:
        child = next(v for v, (_, pe) in parent.items() if pe == eid)
        below = {child}
        stack = [child]
        while stack:
            u = stack.pop()
            for w in children.get(u, ()):
                if w not in below:
                    below.add(w)
                    stack.append(w)
        branch[eid] = frozenset(below)
    return SpanningTree(
        roots=(root,),
        tree_edges=frozenset(edge_set),
        loop_edges=frozenset(e.id for e in g.edges) - frozenset(edge_set),
        parent=parent,
        branch=branch,
    )


def _components(vertex_ids, endpoint_pairs):
    comp_of = {v: v for v in vertex_ids}

    def find(a):
        while comp_of[a] != a:
            comp_of[a] = comp_of[comp_of[a]]
            a = comp_of[a]
        return a

    for a, b in endpoint_pairs:
        ra, rb = find(a), find(b)
        if ra != rb:
            comp_of[ra] = rb
    groups = {}
    for v in vertex_ids:
        groups.setdefault(find(v), set()).add(v)
    return sorted((frozenset(s) for s in groups.values()), key=min)


def _find_bridges(g: RibbonGraph) -> frozenset[str]:
    return bridges_of(
        [v.id for v in g.vertices],
        [(e.id, *g.edge_endpoints(e.id)) for e in g.edges],
    )


def bridges_of(vertex_ids, labeled_edges) -> frozenset[str]:
    """All bridges via one lowlink pass; parallel edges handled by edge id.

    labeled_edges: iterable of (edge_id, vertex_a, vertex_b).
    """
    adj = {v: [] for v in vertex_ids}
    for eid, a, b in labeled_edges:
        if a == b:
            continue  # self-loops are never bridges
        adj[a].append((eid, b))
        adj[b].append((eid, a))
    for v in adj:
        adj[v].sort()
    index: dict[str, int] = {}
    low: dict[str, int] = {}
    bridges = set()
    counter = [0]

    def visit(u, entry_edge):
        index[u] = low[u] = counter[0]
        counter[0] += 1
        for eid, w in adj[u]:
            if eid == entry_edge:
                continue
            if w not in index:
                visit(w, eid)
                low[u] = min(low[u], low[w])
                if low[w] > index[u]:
                    bridges.add(eid)
            else:
                low[u] = min(low[u], index[w])

    for start in sorted(adj):
        if start not in index:
            visit(start, None)
    return frozenset(bridges)
