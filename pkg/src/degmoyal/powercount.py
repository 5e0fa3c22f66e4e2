"""Degree-of-convergence bounds and divergence classification.

Every quasi-local node of the inclusion forest is classified by the case
table below; omega is the proved lower bound on the degree of
convergence, so a node is divergent when omega <= 0, logarithmically so
at exactly 0.  Divergent nodes are assigned the coupling whose flow they
feed.

Case table (first match wins, after the no-Moyal-vertex chain check):
  1. not tree-like:                    omega = N + 4 n_kappa_loops
  2. non planar (g > 0):               omega = N
  3. planar, b >= 2:                   omega = N - 2
  4. planar regular, internal ins.:    omega = N - 2
  5. planar regular, none:             omega = N - 4 + 2 N_kappa,
                                       minus 2 more when N_kappa = N
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .errors import InconsistentNode, InvalidTopology
from .graph import MOYAL, RibbonGraph, bridges_of, trace_faces
from .multiscale import GNNode, ScaleAttribution, gn_tree

MASS_WAVE_OMEGA = "mass/wave/omega"
LAMBDA = "lambda"
KAPPA2 = "kappa2"
NONE = "none"

CASE_CHAIN = "insertion-chain"
CASE_NOT_TREE_LIKE = "not-tree-like"
CASE_NON_PLANAR = "non-planar"
CASE_BROKEN = "planar-irregular"
CASE_INTERNAL_INSERTIONS = "planar-regular-with-insertions"
CASE_REGULAR = "planar-regular"


def omega_kappa0(n_external: int, genus: int, broken_faces: int) -> int:
    """Insertion-free lower bound N - 4 + 4 g + 2 (b - 1)."""
    _check_topology(n_external, genus, broken_faces)
    return n_external - 4 + 4 * genus + 2 * (broken_faces - 1)


def omega_phi6(n_external: int, genus: int, broken_faces: int,
               v4: int) -> Fraction:
    """Six-valent-model bound (N - 6 + 8 g + 4 (b - 1) + 2 v4) / 2."""
    _check_topology(n_external, genus, broken_faces)
    if v4 < 0:
        raise InvalidTopology("v4 must be nonnegative")
    return Fraction(n_external - 6 + 8 * genus + 4 * (broken_faces - 1)
                    + 2 * v4, 2)


def _check_topology(n_external, genus, broken_faces):
    if n_external < 2 or n_external % 2:
        raise InvalidTopology(f"N must be even and >= 2, got {n_external}")
    if genus < 0:
        raise InvalidTopology("genus must be nonnegative")
    if broken_faces < 1:
        raise InvalidTopology("broken face count must be positive")


@dataclass(frozen=True)
class NodeClassification:
    level: int
    index: int
    n_external: int
    n_kappa: int
    genus: int
    broken_faces: int
    tree_like: bool
    n_kappa_loops: int
    internal_insertions: bool
    no_moyal: bool
    omega: int
    case: str
    divergent: bool
    logarithmic: bool
    counterterm: str

    def to_dict(self) -> dict:
        return {
            "node": [self.level, self.index],
            "N": self.n_external,
            "N_kappa": self.n_kappa,
            "genus": self.genus,
            "broken_faces": self.broken_faces,
            "tree_like": self.tree_like,
            "n_kappa_loops": self.n_kappa_loops,
            "internal_insertions": self.internal_insertions,
            "no_moyal": self.no_moyal,
            "omega": self.omega,
            "case": self.case,
            "divergent": self.divergent,
            "logarithmic": self.logarithmic,
            "counterterm": self.counterterm,
        }


def classify_node(n_external: int, n_kappa: int, genus: int,
                  broken_faces: int, tree_like: bool, n_kappa_loops: int,
                  internal_insertions: bool, no_moyal: bool = False,
                  level: int = 0, index: int = 1) -> NodeClassification:
    """Classify one quasi-local node from its topological data."""
    _check_topology(n_external, genus, broken_faces)
    if n_kappa < 0 or n_kappa > n_external:
        raise InconsistentNode("N_kappa must lie in [0, N]")
    if n_kappa_loops < 0:
        raise InconsistentNode("n_kappa_loops must be nonnegative")
    if tree_like and n_kappa_loops:
        raise InconsistentNode("a tree-like node has no generalised loop lines")
    if n_kappa_loops and not internal_insertions:
        raise InconsistentNode("generalised loop lines are internal insertions")

    if no_moyal:
        # chains of propagators joined purely by insertions stay uniformly
        # bounded in the slice index: logarithmic, feeds kappa^2
        omega = 0
        case = CASE_CHAIN
    elif not tree_like:
        omega = n_external + 4 * n_kappa_loops
        case = CASE_NOT_TREE_LIKE
    elif genus > 0:
        omega = n_external
        case = CASE_NON_PLANAR
    elif broken_faces >= 2:
        omega = n_external - 2
        case = CASE_BROKEN
    elif internal_insertions:
        omega = n_external - 2
        case = CASE_INTERNAL_INSERTIONS
    else:
        omega = n_external - 4 + 2 * n_kappa
        if n_kappa == n_external:
            omega -= 2
        case = CASE_REGULAR

    divergent = omega <= 0
    logarithmic = omega == 0
    counterterm = _counterterm(n_external, broken_faces, n_kappa,
                               internal_insertions, no_moyal, divergent)
    return NodeClassification(
        level=level,
        index=index,
        n_external=n_external,
        n_kappa=n_kappa,
        genus=genus,
        broken_faces=broken_faces,
        tree_like=tree_like,
        n_kappa_loops=n_kappa_loops,
        internal_insertions=internal_insertions,
        no_moyal=no_moyal,
        omega=omega,
        case=case,
        divergent=divergent,
        logarithmic=logarithmic,
        counterterm=counterterm,
    )


def _counterterm(n_external, broken_faces, n_kappa, internal_insertions,
                 no_moyal, divergent) -> str:
    if not divergent:
        return NONE
    if no_moyal:
        return KAPPA2
    if n_external == 4:
        return LAMBDA
    if n_external == 2:
        if broken_faces >= 2 or internal_insertions or n_kappa:
            return KAPPA2
        return MASS_WAVE_OMEGA
    return NONE


@dataclass(frozen=True)
class DivergenceReport:
    nodes: tuple[NodeClassification, ...]

    @property
    def divergent_nodes(self):
        return tuple(n for n in self.nodes if n.divergent)

    @property
    def any_divergent(self) -> bool:
        return any(n.divergent for n in self.nodes)

    @property
    def counterterms(self) -> tuple[str, ...]:
        seen = []
        for n in self.nodes:
            if n.divergent and n.counterterm not in seen:
                seen.append(n.counterterm)
        return tuple(sorted(seen))

    def to_dict(self) -> dict:
        return {
            "nodes": [n.to_dict() for n in self.nodes],
            "any_divergent": self.any_divergent,
            "counterterms": list(self.counterterms),
        }


def node_data(graph: RibbonGraph, node: GNNode) -> dict:
    """Topological data of one quasi-local node.

    The node's map keeps the full port cycles of its vertices; every port
    not used by a node edge (a true external leg or a hooked lower-scale
    line) punctures a face.
    """
    port_cycles = [graph.vertex(v).ports for v in sorted(node.vertices)]
    edge_pairs = [graph.edge(e).ports for e in sorted(node.edges)]
    internal_ports = {p for pair in edge_pairs for p in pair}
    punctures = [
        p for cycle in port_cycles for p in cycle if p not in internal_ports
    ]
    fs, broken = trace_faces(port_cycles, edge_pairs, punctures)
    v = len(node.vertices)
    e = len(node.edges)
    chi = v - e + len(fs)
    defect = 2 - chi
    if defect % 2 or defect < 0:
        raise InvalidTopology(f"node {node.key} has chi={chi}")
    labeled = [(eid, *graph.edge_endpoints(eid)) for eid in sorted(node.edges)]
    brs = bridges_of(sorted(node.vertices), labeled)
    gen_edges = [eid for eid in node.edges if graph.edge(eid).generalised]
    tree_like = all(eid in brs for eid in gen_edges)
    return {
        "n_external": node.n_external,
        "n_kappa": node.n_kappa,
        "genus": defect // 2,
        "broken_faces": broken,
        "tree_like": tree_like,
        "n_kappa_loops": _min_generalised_loops(graph, node),
        "internal_insertions": bool(gen_edges),
        "no_moyal": not any(
            graph.vertex(v).kind == MOYAL for v in node.vertices
        ),
    }


def _min_generalised_loops(graph: RibbonGraph, node: GNNode) -> int:
    """Fewest generalised loop lines over spanning forests of the node,
    by greedily packing generalised edges into the forest."""
    gen = sorted(e for e in node.edges if graph.edge(e).generalised)
    simple = sorted(e for e in node.edges if not graph.edge(e).generalised)
    comp = {v: v for v in node.vertices}

    def find(a):
        while comp[a] != a:
            comp[a] = comp[comp[a]]
            a = comp[a]
        return a

    in_forest = 0
    for eid in gen + simple:
        a, b = graph.edge_endpoints(eid)
        ra, rb = find(a), find(b)
        if ra != rb:
            comp[ra] = rb
            if eid in gen:
                in_forest += 1
    return len(gen) - in_forest


def classify_graph(graph: RibbonGraph,
                   scales: ScaleAttribution) -> DivergenceReport:
    """Classify every node of the inclusion forest of the attribution."""
    tree = gn_tree(graph, scales)
    out = []
    for node in tree.nodes:
        data = node_data(graph, node)
        out.append(
            classify_node(level=node.level, index=node.index, **data)
        )
    return DivergenceReport(tuple(out))
