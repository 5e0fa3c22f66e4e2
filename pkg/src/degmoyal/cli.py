"""Command-line front end.

Subcommands: analyze, rosette, gn-tree, classify, verify-bounds,
scale-scan, oracle-check.  Exit codes: 0 ok, 1 divergence found under
--fail-on-divergent, 2 parse error, 3 invalid map, 4 attribution
mismatch, 5 oracle mismatch.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import corpus
from .errors import (AttributionMismatch, InvalidMap, MalformedGraph,
                     MissingScale)
from .graph import (RibbonGraph, all_spanning_trees, dump_graph, load_graph,
                    spanning_tree, topology, tree_from_edges)
from .multiscale import (ScaleAttribution, attribution_count,
                         enumerate_attributions, flat_attribution, gn_tree)
from .numerics import ModelParams, scaling_scan, verify_slice_bound
from .oscillation import (check_against_oracle, format_symbol,
                          rosette_factor, contour_order)
from .powercount import classify_graph

EXIT_OK = 0
EXIT_DIVERGENT = 1
EXIT_PARSE = 2
EXIT_INVALID_MAP = 3
EXIT_ATTRIBUTION = 4
EXIT_ORACLE = 5

ENUMERATION_CAP = 2_000_000


class CliError(Exception):
    def __init__(self, code, message):
        super().__init__(message)
        self.code = code


def _read_graph(spec: str) -> RibbonGraph:
    path = Path(spec)
    if path.exists():
        try:
            return load_graph(path.read_text())
        except MalformedGraph as exc:
            raise CliError(EXIT_PARSE, f"cannot parse {spec}: {exc}")
    name = Path(spec).name.removesuffix(".graph")
    try:
        text = corpus.graph_text(name)
    except KeyError:
        raise CliError(EXIT_PARSE, f"no such file or corpus graph: {spec}")
    try:
        return load_graph(text)
    except MalformedGraph as exc:  # pragma: no cover - corpus is valid
        raise CliError(EXIT_PARSE, f"corpus graph {name}: {exc}")


def _read_scales(spec: str | None, graph: RibbonGraph,
                 default_flat: bool = True) -> ScaleAttribution:
    if spec is None:
        if default_flat:
            return flat_attribution(graph)
        raise CliError(EXIT_ATTRIBUTION, "an attribution file is required")
    path = Path(spec)
    if path.exists():
        try:
            data = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise CliError(EXIT_PARSE, f"cannot parse {spec}: {exc}")
    else:
        name = Path(spec).name.removesuffix(".scales")
        try:
            return corpus.load_scales(name, graph)
        except KeyError:
            raise CliError(EXIT_PARSE, f"no such file or corpus scales: {spec}")
        except (AttributionMismatch, MissingScale) as exc:
            raise CliError(EXIT_ATTRIBUTION, str(exc))
    try:
        return ScaleAttribution(graph, data)
    except (AttributionMismatch, MissingScale) as exc:
        raise CliError(EXIT_ATTRIBUTION, str(exc))


def _params(args) -> ModelParams:
    return ModelParams(theta=args.theta, omega=args.omega, mass=args.mass,
                       big_m=args.big_m, kappa=args.kappa, lam=args.lam)


def _emit(args, payload: dict, text_lines):
    if args.format == "json":
        print(json.dumps(payload, indent=2, sort_keys=True))
    elif args.format == "csv":
        rows = payload.get("csv") or []
        for row in rows:
            print(",".join(str(x) for x in row))
    else:
        for line in text_lines:
            print(line)


# -- subcommands -------------------------------------------------------------


def cmd_analyze(args) -> int:
    g = _read_graph(args.graph)
    try:
        rep = topology(g)
    except InvalidMap as exc:
        raise CliError(EXIT_INVALID_MAP, str(exc))
    payload = {
        "graph": args.graph,
        "v": rep.v, "e": rep.e, "e_simple": rep.e_simple,
        "e_generalised": rep.e_generalised, "f": rep.f, "k": rep.k,
        "chi": rep.chi, "genus": rep.genus, "broken_faces": rep.broken_faces,
        "N": rep.n_external, "N_kappa": rep.n_kappa_external,
        "planar": rep.planar, "regular": rep.regular,
        "tree_like": rep.tree_like,
        "components": [
            {
                "vertices": sorted(c.vertices), "v": c.v, "e": c.e,
                "e_simple": c.e_simple, "e_generalised": c.e_generalised,
                "f": c.f, "chi": c.chi, "genus": c.genus,
                "broken_faces": c.broken_faces, "N": c.n_external,
                "tree_like": c.tree_like,
            }
            for c in rep.components
        ],
    }
    lines = [
        f"graph {args.graph}: v={rep.v} e={rep.e} (simple {rep.e_simple}, "
        f"generalised {rep.e_generalised}) f={rep.f} k={rep.k}",
        f"chi={rep.chi} genus={rep.genus} broken_faces={rep.broken_faces} "
        f"N={rep.n_external} N_kappa={rep.n_kappa_external}",
        f"planar={rep.planar} regular={rep.regular} tree_like={rep.tree_like}",
    ]
    for c in rep.components:
        lines.append(
            f"  component {'+'.join(sorted(c.vertices))}: v={c.v} e={c.e} "
            f"f={c.f} chi={c.chi} g={c.genus} b={c.broken_faces} "
            f"N={c.n_external} tree_like={c.tree_like}"
        )
    _emit(args, payload, lines)
    return EXIT_OK


def cmd_rosette(args) -> int:
    g = _read_graph(args.graph)
    tree = spanning_tree(g, root=args.root)
    form = rosette_factor(g, tree)
    co = contour_order(g, tree)
    ambiguous = co.ambiguous_tree_nestings()
    terms = [
        [format_symbol(a), format_symbol(b), str(c)]
        for a, b, c in form.entries()
    ]
    payload = {
        "graph": args.graph,
        "root": tree.root,
        "tree_edges": sorted(tree.tree_edges),
        "loop_edges": sorted(tree.loop_edges),
        "terms": terms,
        "constraint": {
            format_symbol(s): str(c) for s, c in sorted(form.constraint.items())
        },
        "ambiguous_tree_nestings": [list(p) for p in ambiguous],
    }
    lines = [
        f"rosette of {args.graph}, root {tree.root}, "
        f"tree {sorted(tree.tree_edges)}, loops {sorted(tree.loop_edges)}",
    ]
    lines += [f"  {a} ^ {b}: {c}" for a, b, c in terms]
    lines.append(
        "constraint: "
        + " + ".join(f"{format_symbol(s)}" for s, _ in sorted(form.constraint.items()))
    )
    if ambiguous:
        lines.append(f"ambiguous tree nestings (point vs subtree): {ambiguous}")
    _emit(args, payload, lines)
    return EXIT_OK


def cmd_gn_tree(args) -> int:
    g = _read_graph(args.graph)
    scales = _read_scales(args.scales, g)
    tree = gn_tree(g, scales)
    nodes = []
    lines = [f"inclusion forest of {args.graph}"]
    for n in tree.nodes:
        nodes.append({
            "node": list(n.key),
            "vertices": sorted(n.vertices),
            "edges": sorted(n.edges),
            "N": n.n_external,
            "N_kappa": n.n_kappa,
            "parent": list(n.parent) if n.parent else None,
            "children": [list(c) for c in n.children],
        })
        lines.append(
            f"  ({n.level},{n.index}) edges={sorted(n.edges)} N={n.n_external} "
            f"N_kappa={n.n_kappa} parent={n.parent}"
        )
    _emit(args, {"graph": args.graph, "nodes": nodes}, lines)
    return EXIT_OK


def cmd_classify(args) -> int:
    g = _read_graph(args.graph)
    if args.enumerate_scales is not None:
        cap = attribution_count(g, args.enumerate_scales)
        if cap > ENUMERATION_CAP:
            raise CliError(EXIT_ATTRIBUTION,
                           f"{cap} attributions exceed the enumeration cap")
        total = 0
        divergent_nodes = 0
        not_tree_like_divergent = 0
        counterterms: dict[str, int] = {}
        for scales in enumerate_attributions(g, args.enumerate_scales):
            rep = classify_graph(g, scales)
            total += 1
            for n in rep.divergent_nodes:
                divergent_nodes += 1
                counterterms[n.counterterm] = counterterms.get(n.counterterm, 0) + 1
                if not n.tree_like and not n.no_moyal:
                    not_tree_like_divergent += 1
        payload = {
            "graph": args.graph,
            "max_scale": args.enumerate_scales,
            "attributions": total,
            "divergent_nodes": divergent_nodes,
            "divergent_not_tree_like": not_tree_like_divergent,
            "counterterms": counterterms,
        }
        lines = [
            f"{args.graph}: {total} attributions with scales <= "
            f"{args.enumerate_scales}",
            f"divergent nodes: {divergent_nodes} "
            f"(not tree-like among them: {not_tree_like_divergent})",
            f"counterterm tally: {counterterms}",
        ]
        _emit(args, payload, lines)
        if args.fail_on_divergent and divergent_nodes:
            return EXIT_DIVERGENT
        return EXIT_OK
    scales = _read_scales(args.scales, g)
    rep = classify_graph(g, scales)
    payload = rep.to_dict()
    payload["graph"] = args.graph
    lines = [f"classification of {args.graph}"]
    lines.append("  node   N Nk  g  b tree_like  omega verdict       counterterm")
    for n in rep.nodes:
        verdict = ("log-divergent" if n.logarithmic else
                   "divergent" if n.divergent else "convergent")
        lines.append(
            f"  ({n.level},{n.index}) {n.n_external:3d} {n.n_kappa:2d} "
            f"{n.genus:2d} {n.broken_faces:2d} {str(n.tree_like):9s} "
            f"{n.omega:6d} {verdict:13s} {n.counterterm}"
        )
    lines.append(f"counterterms: {list(rep.counterterms)}")
    _emit(args, payload, lines)
    if args.fail_on_divergent and rep.any_divergent:
        return EXIT_DIVERGENT
    return EXIT_OK


def cmd_verify_bounds(args) -> int:
    params = _params(args)
    i_values = list(range(1, args.imax + 1))
    rep = verify_slice_bound(params, i_values)
    payload = rep.to_dict()
    payload["params"] = params.to_dict()
    payload["csv"] = [["i", "K_i"]] + [
        [i, k] for i, k in zip(rep.i_values, rep.k_per_slice)
    ]
    lines = [f"slice-bound fit, i in {list(rep.i_values)}"]
    lines += [f"  i={i}: K_i={k:.8f}" for i, k in zip(rep.i_values, rep.k_per_slice)]
    lines.append(
        f"K={rep.k:.8f} variation={rep.variation:.4f} over {list(rep.stable_range)} "
        f"stable={rep.stable}"
    )
    _emit(args, payload, lines)
    return EXIT_OK


def cmd_scale_scan(args) -> int:
    params = _params(args)
    g = _read_graph(args.graph)
    i_values = list(range(args.imin, args.imax + 1))
    res = scaling_scan(params, g, i_values, samples=args.samples,
                       seed=args.seed, external_weight=args.external_weight)
    payload = res.to_dict()
    payload["graph"] = args.graph
    payload["csv"] = [["i", "amplitude", "stderr", "amplitude_nophase",
                       "stderr_nophase"]] + [
        [pt.i, repr(pt.value), repr(pt.stderr), repr(pt.value_nophase),
         repr(pt.stderr_nophase)]
        for pt in res.points
    ]
    lines = [f"scale scan of {args.graph} ({res.mode}), "
             f"{res.samples} samples/slice, seed {res.seed}, "
             f"backend {res.backend}"]
    for pt in res.points:
        lines.append(
            f"  i={pt.i}: A={pt.value:.6e} +- {pt.stderr:.2e}"
            f"   no-phase A={pt.value_nophase:.6e} +- {pt.stderr_nophase:.2e}"
        )
    lines.append(
        f"slope={res.slope:.4f} +- {res.slope_err:.4f}   "
        f"no-phase slope={res.slope_nophase:.4f} +- {res.slope_nophase_err:.4f}"
    )
    _emit(args, payload, lines)
    return EXIT_OK


def cmd_oracle_check(args) -> int:
    g = _read_graph(args.graph)
    if not g.is_connected():
        raise CliError(EXIT_PARSE, "oracle check needs a connected graph")
    rng = np.random.default_rng(args.seed)
    trees = all_spanning_trees(g)[: args.max_trees]
    checked = 0
    mismatches = []
    for edge_set in trees:
        for root in sorted(v.id for v in g.vertices):
            tree = tree_from_edges(g, edge_set, root)
            mismatches += check_against_oracle(g, tree, args.trials, rng)
            checked += args.trials * 2
    payload = {
        "graph": args.graph,
        "trees": len(trees),
        "trials_per_tree": args.trials,
        "comparisons": checked,
        "mismatches": mismatches,
    }
    lines = [
        f"oracle check of {args.graph}: {len(trees)} trees x roots x "
        f"{args.trials} assignments, {checked} comparisons, "
        f"{len(mismatches)} mismatches"
    ]
    for m in mismatches[:5]:
        lines.append(f"  MISMATCH {m}")
    _emit(args, payload, lines)
    return EXIT_ORACLE if mismatches else EXIT_OK


# -- argument parsing ---------------------------------------------------------


def _add_param_flags(p):
    p.add_argument("--theta", type=float, default=1.0)
    p.add_argument("--omega", type=float, default=1.0)
    p.add_argument("--mass", type=float, default=1.0)
    p.add_argument("--bigM", dest="big_m", type=float, default=2.0)
    p.add_argument("--kappa", type=float, default=1.0)
    p.add_argument("--lambda", dest="lam", type=float, default=1.0)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="degmoyal",
        description="Ribbon-graph power counting and slice numerics for the "
                    "harmonically confined half-commutative scalar model",
    )
    ap.add_argument("--format", choices=("text", "json", "csv"),
                    default="text")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="topological invariants of a graph")
    p.add_argument("--graph", required=True)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("rosette", help="oscillation form of a graph")
    p.add_argument("--graph", required=True)
    p.add_argument("--root", default=None)
    p.set_defaults(func=cmd_rosette)

    p = sub.add_parser("gn-tree", help="quasi-local inclusion forest")
    p.add_argument("--graph", required=True)
    p.add_argument("--scales", default=None)
    p.set_defaults(func=cmd_gn_tree)

    p = sub.add_parser("classify", help="divergence classification")
    p.add_argument("--graph", required=True)
    p.add_argument("--scales", default=None)
    p.add_argument("--enumerate-scales", type=int, default=None,
                   help="classify under every attribution up to this scale")
    p.add_argument("--fail-on-divergent", action="store_true")
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("verify-bounds", help="slice bound constant fit")
    p.add_argument("--imax", type=int, default=6)
    _add_param_flags(p)
    p.set_defaults(func=cmd_verify_bounds)

    p = sub.add_parser("scale-scan", help="Monte Carlo scaling exponents")
    p.add_argument("--graph", required=True)
    p.add_argument("--imin", type=int, default=2)
    p.add_argument("--imax", type=int, default=6)
    p.add_argument("--samples", type=int, default=1_000_000)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--external-weight", type=float, default=None)
    _add_param_flags(p)
    p.set_defaults(func=cmd_scale_scan)

    p = sub.add_parser("oracle-check",
                       help="compare rosette forms against the phase oracle")
    p.add_argument("--graph", required=True)
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--max-trees", type=int, default=32)
    p.add_argument("--seed", type=int, default=1)
    p.set_defaults(func=cmd_oracle_check)

    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except MalformedGraph as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except InvalidMap as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID_MAP
    except (AttributionMismatch, MissingScale) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ATTRIBUTION


def main_entry():  # console script
    raise SystemExit(main())


if __name__ == "__main__":
    main_entry()
