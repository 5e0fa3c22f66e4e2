"""Ribbon-graph topology, oscillation rosettes, multiscale power counting
and sliced-propagator numerics for a harmonically confined scalar field
on a half-commutative Moyal plane."""

from .graph import (Edge, ExternalLeg, RibbonGraph, SpanningTree,
                    TopologyReport, Vertex, build_graph, dump_graph, faces,
                    load_graph, spanning_tree, topology)
from .multiscale import (GNNode, GNTree, ScaleAttribution,
                         enumerate_attributions, flat_attribution, gn_tree,
                         is_admissible, quasi_local)
from .numerics import (ModelParams, ScanResult, SliceBoundReport,
                       generalised_line_bound, generalised_line_value,
                       propagator_slice, scaling_scan, verify_slice_bound)
from .oscillation import (ContourOrder, MomentumRouting, PhaseForm,
                          contour_order, momentum_routing, phase_oracle,
                          rosette_factor, tree_reduce)
from .powercount import (DivergenceReport, NodeClassification, classify_graph,
                         classify_node, omega_kappa0, omega_phi6)

__version__ = "0.1.0"

__all__ = [
    "Edge", "ExternalLeg", "RibbonGraph", "SpanningTree", "TopologyReport",
    "Vertex", "build_graph", "dump_graph", "faces", "load_graph",
    "spanning_tree", "topology",
    "GNNode", "GNTree", "ScaleAttribution", "enumerate_attributions",
    "flat_attribution", "gn_tree", "is_admissible", "quasi_local",
    "ModelParams", "ScanResult", "SliceBoundReport",
    "generalised_line_bound", "generalised_line_value", "propagator_slice",
    "scaling_scan", "verify_slice_bound",
    "ContourOrder", "MomentumRouting", "PhaseForm", "contour_order",
    "momentum_routing", "phase_oracle", "rosette_factor", "tree_reduce",
    "DivergenceReport", "NodeClassification", "classify_graph",
    "classify_node", "omega_kappa0", "omega_phi6",
]
