"""Scale attributions, quasi-local subgraphs and their inclusion forest.

A scale attribution assigns a slice index to every propagator segment.
A generalised line made of n insertions has n+1 segments and behaves,
for membership purposes, as a single line at its minimal segment scale.
The subgraph of lines at scale >= i decomposes into connected components;
collecting these components over all levels yields an inclusion forest.

Everything here is pure and operates on immutable inputs, so evaluation
over many attributions can run concurrently.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

from .errors import AttributionMismatch, MissingScale, NotGeneralised
from .graph import RibbonGraph, bridges_of, _components


class ScaleAttribution:
    """Per-edge slice indices; per-segment for generalised lines."""

    __slots__ = ("_segments",)

    def __init__(self, graph: RibbonGraph, mapping: dict):
        segments = {}
        for e in graph.edges:
            if e.id not in mapping:
                raise MissingScale(f"no scale for edge {e.id!r}")
            raw = mapping[e.id]
            if e.generalised:
                if not isinstance(raw, (list, tuple)):
                    raise AttributionMismatch(
                        f"generalised edge {e.id!r} needs a list of "
                        f"{e.segments} segment scales"
                    )
                if len(raw) != e.segments:
                    raise AttributionMismatch(
                        f"edge {e.id!r} has {e.segments} segments, "
                        f"got {len(raw)} scales"
                    )
                seg = tuple(int(s) for s in raw)
            else:
                if isinstance(raw, (list, tuple)):
                    if len(raw) != 1:
                        raise AttributionMismatch(
                            f"simple edge {e.id!r} takes a single scale"
                        )
                    raw = raw[0]
                seg = (int(raw),)
            if any(s < 0 for s in seg):
                raise AttributionMismatch(f"negative scale on edge {e.id!r}")
            segments[e.id] = seg
        unknown = set(mapping) - set(segments)
        if unknown:
            raise AttributionMismatch(f"unknown edges in attribution: {sorted(unknown)}")
        self._segments = segments

    def segments(self, eid: str) -> tuple[int, ...]:
        try:
            return self._segments[eid]
        except KeyError:
            raise MissingScale(f"no scale for edge {eid!r}") from None

    def effective(self, eid: str) -> int:
        """Scale of the line as a whole: the minimum over its segments."""
        return min(self.segments(eid))

    def end_scales(self, eid: str) -> tuple[int, int]:
        seg = self.segments(eid)
        return seg[0], seg[-1]

    def i_high(self, eid: str) -> int:
        a, b = self.end_scales(eid)
        return max(a, b)

    def i_low(self, eid: str) -> int:
        a, b = self.end_scales(eid)
        return min(a, b)

    @property
    def max_scale(self) -> int:
        return max(max(seg) for seg in self._segments.values()) if self._segments else 0

    def to_dict(self) -> dict:
        out = {}
        for eid, seg in sorted(self._segments.items()):
            out[eid] = list(seg) if len(seg) > 1 else seg[0]
        return out


def flat_attribution(graph: RibbonGraph, scale: int = 0) -> ScaleAttribution:
    mapping = {}
    for e in graph.edges:
        mapping[e.id] = [scale] * e.segments if e.generalised else scale
    return ScaleAttribution(graph, mapping)


def enumerate_attributions(graph: RibbonGraph, max_scale: int):
    """Yield every attribution with all segment scales <= max_scale."""
    slots = []
    for e in graph.edges:
        slots.append((e.id, e.segments))
    ranges = [range(max_scale + 1)] * sum(n for _, n in slots)
    for combo in itertools.product(*ranges):
        mapping = {}
        pos = 0
        for eid, n in slots:
            chunk = combo[pos:pos + n]
            pos += n
            mapping[eid] = list(chunk) if n > 1 else chunk[0]
        yield ScaleAttribution(graph, mapping)


def attribution_count(graph: RibbonGraph, max_scale: int) -> int:
    n_slots = sum(e.segments for e in graph.edges)
    return (max_scale + 1) ** n_slots


def quasi_local(graph: RibbonGraph, scales: ScaleAttribution, level: int):
    """Connected components of the subgraph of lines at scale >= level.

    Returns a list of (vertex_set, edge_set) pairs sorted by smallest
    vertex.  At level 0 these are the components of the graph itself,
    including any edgeless ones.
    """
    hot = [e for e in graph.edges if scales.effective(e.id) >= level]
    if level <= 0:
        comps = graph.components()
        out = []
        for comp in comps:
            es = frozenset(
                e.id for e in hot if graph.port_vertex(e.ports[0]) in comp
            )
            out.append((comp, es))
        return out
    vids = sorted({v for e in hot for v in graph.edge_endpoints(e.id)})
    comps = _components(vids, [graph.edge_endpoints(e.id) for e in hot])
    out = []
    for comp in comps:
        es = frozenset(
            e.id for e in hot if graph.port_vertex(e.ports[0]) in comp
        )
        out.append((comp, es))
    return out


@dataclass(frozen=True)
class NodeLeg:
    """External leg of a quasi-local node.

    origin is ("external", leg_id) for a true leg of the graph or
    ("edge", edge_id) for a hooked line of strictly lower scale; kappa
    marks legs that enter the node through an insertion.
    """

    port: str
    kappa: bool
    origin: tuple[str, str]


@dataclass(frozen=True)
class GNNode:
    level: int
    index: int
    vertices: frozenset[str]
    edges: frozenset[str]
    legs: tuple[NodeLeg, ...]
    parent: tuple[int, int] | None
    children: tuple[tuple[int, int], ...]

    @property
    def key(self) -> tuple[int, int]:
        return (self.level, self.index)

    @property
    def n_external(self) -> int:
        return len(self.legs)

    @property
    def n_kappa(self) -> int:
        return sum(1 for leg in self.legs if leg.kappa)


@dataclass(frozen=True)
class GNTree:
    nodes: tuple[GNNode, ...]

    def node(self, key) -> GNNode:
        for n in self.nodes:
            if n.key == tuple(key):
                return n
        raise KeyError(key)

    def level(self, i: int) -> list[GNNode]:
        return [n for n in self.nodes if n.level == i]

    @property
    def max_level(self) -> int:
        return max(n.level for n in self.nodes)

    def roots(self) -> list[GNNode]:
        return [n for n in self.nodes if n.parent is None]


def _node_legs(graph: RibbonGraph, scales: ScaleAttribution, level: int,
               vertices, edges) -> tuple[NodeLeg, ...]:
    legs = []
    for vid in sorted(vertices):
        for port in graph.vertex(vid).ports:
            kind, oid = graph.occupant(port)
            if kind == "ext":
                leg = graph.external(oid)
                legs.append(NodeLeg(port, leg.kappa, ("external", oid)))
            elif oid not in edges:
                e = graph.edge(oid)
                kappa = False
                if e.generalised:
                    # the hooked end enters through an insertion when its
                    # end segment is at least as hot as the node
                    seg = scales.segments(oid)
                    end_scale = seg[0] if port == e.ports[0] else seg[-1]
                    kappa = end_scale >= level
                legs.append(NodeLeg(port, kappa, ("edge", oid)))
    return tuple(legs)


def gn_tree(graph: RibbonGraph, scales: ScaleAttribution) -> GNTree:
    """Inclusion forest of all quasi-local components, levels 0..max."""
    levels = {}
    for i in range(scales.max_scale + 1):
        comps = quasi_local(graph, scales, i)
        levels[i] = [
            (idx, vs, es) for idx, (vs, es) in enumerate(comps, start=1)
        ]
    keys = {}
    raw = {}
    for i, entries in levels.items():
        for idx, vs, es in entries:
            key = (i, idx)
            keys[key] = (vs, es)
            raw[key] = _node_legs(graph, scales, i, vs, es)
    parent = {}
    children = {key: [] for key in keys}
    for (i, idx), (vs, _) in keys.items():
        if i == 0:
            parent[(i, idx)] = None
            continue
        for (j, jdx), (pvs, _) in keys.items():
            if j == i - 1 and vs <= pvs:
                parent[(i, idx)] = (j, jdx)
                children[(j, jdx)].append((i, idx))
                break
        else:
            parent[(i, idx)] = None
    nodes = []
    for key in sorted(keys):
        vs, es = keys[key]
        nodes.append(
            GNNode(
                level=key[0],
                index=key[1],
                vertices=vs,
                edges=es,
                legs=raw[key],
                parent=parent[key],
                children=tuple(sorted(children[key])),
            )
        )
    return GNTree(tuple(nodes))


def is_admissible(graph: RibbonGraph, scales: ScaleAttribution, eid: str) -> bool:
    """A generalised line is admissible when it bridges its own quasi-local
    component at its effective scale."""
    e = graph.edge(eid)
    if not e.generalised:
        raise NotGeneralised(f"edge {eid!r} is simple")
    level = scales.effective(eid)
    for vs, es in quasi_local(graph, scales, level):
        if eid in es:
            labeled = [(x, *graph.edge_endpoints(x)) for x in sorted(es)]
            return eid in bridges_of(sorted(vs), labeled)
    raise MissingScale(f"edge {eid!r} not found at its own scale")
