"""Independent brute-force oracles used by the tests.

These deliberately avoid the production code paths: bridges by deletion
and component counting, admissibility by recounting components of the
hot subgraph, quadrature by a fixed-grid midpoint Riemann sum, and the
divergence case table as a straight-line transcription.
"""

from __future__ import annotations

import math

import numpy as np


def count_components(vertex_ids, endpoint_pairs) -> int:
    comp = {v: v for v in vertex_ids}

    def find(a):
        while comp[a] != a:
            comp[a] = comp[comp[a]]
            a = comp[a]
        return a

    for a, b in endpoint_pairs:
        ra, rb = find(a), find(b)
        if ra != rb:
            comp[ra] = rb
    return len({find(v) for v in vertex_ids})


def bridge_by_deletion(graph, eid: str) -> bool:
    vertex_ids = [v.id for v in graph.vertices]
    before = count_components(
        vertex_ids, [graph.edge_endpoints(e.id) for e in graph.edges]
    )
    after = count_components(
        vertex_ids,
        [graph.edge_endpoints(e.id) for e in graph.edges if e.id != eid],
    )
    return after > before


def admissible_by_deletion(graph, scales, eid: str) -> bool:
    level = scales.effective(eid)
    hot = [e.id for e in graph.edges if scales.effective(e.id) >= level]
    vids = sorted({v for e in hot for v in graph.edge_endpoints(e)})
    # restrict to the component containing the candidate line
    comp = {v: v for v in vids}

    def find(a):
        while comp[a] != a:
            comp[a] = comp[comp[a]]
            a = comp[a]
        return a

    for e in hot:
        a, b = graph.edge_endpoints(e)
        ra, rb = find(a), find(b)
        if ra != rb:
            comp[ra] = rb
    seed = find(graph.edge_endpoints(eid)[0])
    members = [v for v in vids if find(v) == seed]
    inside = [e for e in hot if graph.edge_endpoints(e)[0] in set(members)]
    before = count_components(members, [graph.edge_endpoints(e) for e in inside])
    after = count_components(
        members, [graph.edge_endpoints(e) for e in inside if e != eid]
    )
    return after > before


def riemann_slice(params, i, p, pr, qr, n=400_000) -> float:
    """Fixed-grid midpoint sum of the sliced Schwinger integral."""
    ot = params.omega_tilde
    p = np.asarray(p, dtype=float).reshape(-1)
    pr = np.asarray(pr, dtype=float).reshape(-1)
    qr = np.asarray(qr, dtype=float).reshape(-1)
    psqm = float(p @ p) + params.mass**2
    splus = float((pr + qr) @ (pr + qr))
    sminus = float((pr - qr) @ (pr - qr))
    if i == 0:
        lo = 1.0
        hi = 1.0 + 45.0 / (params.mass**2 + 2.0 * ot)
    else:
        lo = params.big_m ** (-2 * i)
        hi = params.big_m ** (-2 * (i - 1))
    a = lo + (np.arange(n) + 0.5) * (hi - lo) / n
    x = 2.0 * ot * a
    log_sinh = x + np.log1p(-np.exp(-2.0 * x)) - math.log(2.0)
    ex = (-a * psqm - log_sinh
          - 0.25 * ot * splus / np.tanh(ot * a)
          - 0.25 * ot * np.tanh(ot * a) * sminus)
    f = np.exp(ex)
    return params.omega / (math.pi * params.theta) * float(f.sum()) * (hi - lo) / n


def expected_omega(n_ext, n_kappa, genus, broken, tree_like, n_kappa_loops,
                   internal_insertions, no_moyal=False):
    """Straight-line transcription of the case table; None = inconsistent."""
    if n_ext < 2 or n_ext % 2 or n_kappa > n_ext:
        return None
    if tree_like and n_kappa_loops > 0:
        return None
    if n_kappa_loops > 0 and not internal_insertions:
        return None
    if no_moyal:
        return 0
    if not tree_like:
        return n_ext + 4 * n_kappa_loops
    if genus > 0:
        return n_ext
    if broken >= 2:
        return n_ext - 2
    if internal_insertions:
        return n_ext - 2
    if n_kappa < n_ext:
        return n_ext - 4 + 2 * n_kappa
    return n_ext - 4 + 2 * (n_kappa - 1)


def random_ribbon_graph(rng, max_vertices=3, generalised_prob=0.3):
    """Random valid small graph: Moyal vertices with a random port pairing."""
    from degmoyal.graph import Edge, ExternalLeg, RibbonGraph, Vertex

    nv = int(rng.integers(1, max_vertices + 1))
    vertices = []
    ports = []
    for i in range(nv):
        vid = f"v{i}"
        vports = tuple(f"v{i}p{j}" for j in range(4))
        vertices.append(Vertex(vid, vports))
        ports.extend(vports)
    perm = list(rng.permutation(len(ports)))
    n_edges = int(rng.integers(0, len(ports) // 2 + 1))
    edges = []
    used = 0
    for k in range(n_edges):
        a, b = ports[perm[used]], ports[perm[used + 1]]
        used += 2
        if rng.random() < generalised_prob:
            edges.append(Edge(f"e{k}", (a, b), "generalised",
                              int(rng.integers(1, 4))))
        else:
            edges.append(Edge(f"e{k}", (a, b)))
    externals = []
    for j, idx in enumerate(perm[used:]):
        externals.append(
            ExternalLeg(f"x{j}", ports[idx], bool(rng.random() < 0.3))
        )
    return RibbonGraph(vertices, edges, externals)
