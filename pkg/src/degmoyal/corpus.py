"""Bundled example graphs and scale attributions.

Each .graph file is a JSON combinatorial map; .scales files are JSON
attribution maps for specific graphs.  Bare names (with or without the
extension) resolve against the bundle; the CLI falls back here when a
path does not exist on disk.
"""

from __future__ import annotations

import json
from importlib import resources

from .graph import RibbonGraph, load_graph
from .multiscale import ScaleAttribution

GRAPHS = (
    "fig1",
    "fig2",
    "fig3",
    "fig4",
    "tadpole_planar",
    "tadpole_nonplanar",
    "kappa_chain",
    "fourpoint_planar",
    "theta_nonplanar",
    "crossing_pair",
)

SCALE_FILES = ("fig3a", "fig3b")


def _root():
    return resources.files(__package__) / "corpus"


def graph_names() -> tuple[str, ...]:
    return GRAPHS


def graph_text(name: str) -> str:
    name = name.removesuffix(".graph")
    if name not in GRAPHS:
        raise KeyError(f"unknown corpus graph {name!r}")
    return (_root() / f"{name}.graph").read_text()


def load(name: str) -> RibbonGraph:
    return load_graph(graph_text(name))


def load_scales(name: str, graph: RibbonGraph) -> ScaleAttribution:
    name = name.removesuffix(".scales")
    if name not in SCALE_FILES:
        raise KeyError(f"unknown corpus attribution {name!r}")
    data = json.loads((_root() / f"{name}.scales").read_text())
    return ScaleAttribution(graph, data)
