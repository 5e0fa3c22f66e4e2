"""Symbolic momentum routing and vertex-oscillation rosettes.

For a rooted spanning tree the counterclockwise contour walk of the
ribbon tree linearly orders the external legs, the two ends of every
loop line and a contraction marker per tree line.  Line variables are

    p_l  = q_first - q_second      (difference of the two end momenta)
    dp_l = q_first + q_second      (their sum; the "short" variable)

with "first" the end met first along the contour (for a tree line, the
end closer to the root).  Two independent computations produce the total
oscillation as an antisymmetric bilinear form over these symbols:

* ``tree_reduce`` contracts tree lines one at a time, maintaining an
  ordered rosette and updating the form incrementally;
* ``rosette_factor`` writes the closed form directly from the
  arch/crossing/nesting relations of the contour order.

Both forms agree with the direct per-vertex phase (``phase_oracle``)
exactly, in rational arithmetic, once the momentum routing is
substituted.  All wedges live in the two noncommutative directions:
``a ^ b = (theta/2) (a_x b_y - a_y b_x)``.

Pure functions over immutable inputs throughout.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .errors import Disconnected, InconsistentAssignment, MalformedGraph
from .graph import MOYAL, RibbonGraph, SpanningTree

HALF = Fraction(1, 2)
ONE = Fraction(1)


def ext_symbol(leg_id: str):
    return ("q", leg_id)


def line_symbol(edge_id: str):
    return ("p", edge_id)


def short_symbol(edge_id: str):
    return ("d", edge_id)


def format_symbol(sym) -> str:
    kind = sym[0]
    if kind == "q":
        return f"q({sym[1]})"
    if kind == "p":
        return f"p({sym[1]})"
    if kind == "d":
        return f"dp({sym[1]})"
    return repr(sym)


def wedge(u, v, theta=ONE):
    """a ^ b = (theta/2) * (a_x b_y - a_y b_x) on 2-vectors."""
    return Fraction(theta) / 2 * (u[0] * v[1] - u[1] * v[0])


# -- contour order ----------------------------------------------------------


def _rotation(vertex, entry_port):
    """Ports of a vertex in cyclic order, starting after entry_port
    (which is excluded); with entry_port None the stored order is used."""
    ports = vertex.ports
    if entry_port is None:
        return list(ports)
    i = ports.index(entry_port)
    return [ports[(i + k) % len(ports)] for k in range(1, len(ports))]


@dataclass(frozen=True)
class ContourOrder:
    """Linear order of contour items and the derived line relations."""

    items: tuple
    ext_pos: dict
    loop_span: dict            # edge -> (first_pos, second_pos)
    loop_first_end: dict       # edge -> 0/1, index into edge.ports
    tree_pos: dict             # edge -> descent position
    tree_span: dict            # edge -> (descent, index after subtree)

    @property
    def externals_in_order(self) -> tuple[str, ...]:
        return tuple(it[1] for it in self.items if it[0] == "ext")

    def span(self, eid: str) -> tuple[int, int]:
        """Positional interval of a line; a point for tree lines."""
        if eid in self.loop_span:
            return self.loop_span[eid]
        d = self.tree_pos[eid]
        return (d, d)

    def lines(self):
        return sorted(list(self.loop_span) + list(self.tree_pos))

    def loops(self):
        return sorted(self.loop_span)

    def arches_over(self, eid: str):
        """External legs strictly between the two ends of a loop line."""
        a, b = self.loop_span[eid]
        return [x for x, p in sorted(self.ext_pos.items()) if a < p < b]

    def crosses_left(self, ea: str, eb: str) -> bool:
        """True when one meets ea, eb, ea, eb along the contour."""
        if ea not in self.loop_span or eb not in self.loop_span:
            return False
        a1, a2 = self.loop_span[ea]
        b1, b2 = self.loop_span[eb]
        return a1 < b1 < a2 < b2

    def crossings(self):
        out = []
        loops = self.loops()
        for i, ea in enumerate(loops):
            for eb in loops[i + 1:]:
                if self.crosses_left(ea, eb):
                    out.append((ea, eb))
                elif self.crosses_left(eb, ea):
                    out.append((eb, ea))
        return out

    def nested_in(self, inner: str, outer: str) -> bool:
        """inner line sits strictly inside the span of an outer loop line;
        tree lines count through their contraction point."""
        if outer not in self.loop_span:
            return False
        a, b = self.loop_span[outer]
        lo, hi = self.span(inner)
        return a < lo and hi < b

    def nestings(self):
        out = []
        for outer in self.loops():
            for inner in self.lines():
                if inner != outer and self.nested_in(inner, outer):
                    out.append((inner, outer))
        return out

    def ambiguous_tree_nestings(self):
        """(tree, loop) pairs where reading the tree line as its whole
        subtree interval instead of its contraction point would change the
        nesting relation.  Reported for diagnosis; the contraction-point
        reading is the one validated against the phase oracle."""
        out = []
        for t, (d, u) in sorted(self.tree_span.items()):
            for outer, (a, b) in sorted(self.loop_span.items()):
                point = a < d < b
                interval = a < d and (u - 1) < b
                if point != interval:
                    out.append((t, outer))
        return out


def contour_order(graph: RibbonGraph, tree: SpanningTree) -> ContourOrder:
    """Counterclockwise contour walk of the rooted ribbon tree."""
    if not graph.is_connected():
        raise Disconnected("contour order needs a connected graph")
    items = []
    ext_pos = {}
    loop_span = {}
    loop_first_end = {}
    tree_pos = {}
    tree_span = {}
    visited = {tree.root}

    def walk(vid, entry_port):
        for port in _rotation(graph.vertex(vid), entry_port):
            kind, oid = graph.occupant(port)
            if kind == "ext":
                ext_pos[oid] = len(items)
                items.append(("ext", oid))
                continue
            e = graph.edge(oid)
            other_port = e.ports[1] if port == e.ports[0] else e.ports[0]
            other_vertex = graph.port_vertex(other_port)
            if e.id in tree.tree_edges and other_vertex not in visited:
                d = len(items)
                tree_pos[e.id] = d
                items.append(("tree", e.id))
                visited.add(other_vertex)
                walk(other_vertex, other_port)
                tree_span[e.id] = (d, len(items))
            else:
                end = 0 if port == e.ports[0] else 1
                if e.id not in loop_span:
                    loop_span[e.id] = (len(items),)
                    loop_first_end[e.id] = end
                else:
                    loop_span[e.id] = (loop_span[e.id][0], len(items))
                items.append(("loop", e.id, end))

    walk(tree.root, None)
    expected = graph.n_external + 2 * len(tree.loop_edges) + len(tree.tree_edges)
    if len(items) != expected:
        raise MalformedGraph("contour walk did not cover the graph")
    return ContourOrder(
        items=tuple(items),
        ext_pos=ext_pos,
        loop_span=loop_span,
        loop_first_end=loop_first_end,
        tree_pos=tree_pos,
        tree_span=tree_span,
    )


# -- phase forms -------------------------------------------------------------


class PhaseForm:
    """Antisymmetric bilinear form with exact rational coefficients,
    plus the linear momentum-constraint row."""

    __slots__ = ("symbols", "_index", "coeffs", "constraint")

    def __init__(self, symbols, constraint=None):
        self.symbols = tuple(symbols)
        self._index = {s: i for i, s in enumerate(self.symbols)}
        self.coeffs: dict[tuple[int, int], Fraction] = {}
        self.constraint: dict = dict(constraint or {})

    def add(self, sa, sb, c):
        """Accumulate c * (sa ^ sb)."""
        ia, ib = self._index[sa], self._index[sb]
        if ia == ib:
            return
        c = Fraction(c)
        if ia > ib:
            ia, ib = ib, ia
            c = -c
        new = self.coeffs.get((ia, ib), Fraction(0)) + c
        if new:
            self.coeffs[(ia, ib)] = new
        else:
            self.coeffs.pop((ia, ib), None)

    def coefficient(self, sa, sb) -> Fraction:
        ia, ib = self._index[sa], self._index[sb]
        if ia == ib:
            return Fraction(0)
        if ia < ib:
            return self.coeffs.get((ia, ib), Fraction(0))
        return -self.coeffs.get((ib, ia), Fraction(0))

    def entries(self):
        """Sorted (symbol_a, symbol_b, coefficient) triples, a before b."""
        for (ia, ib) in sorted(self.coeffs):
            yield self.symbols[ia], self.symbols[ib], self.coeffs[(ia, ib)]

    def is_zero(self) -> bool:
        return not self.coeffs

    def evaluate(self, assignment, theta=ONE) -> Fraction:
        """Exact value on a full symbol -> 2-vector assignment."""
        total = Fraction(0)
        for sa, sb, c in self.entries():
            total += c * wedge(assignment[sa], assignment[sb], theta)
        return total

    def substituted(self, subs: dict) -> "PhaseForm":
        """Eliminate symbols via linear substitutions sym -> {sym: coeff}."""
        remaining = [s for s in self.symbols if s not in subs]
        out = PhaseForm(remaining)
        for sa, sb, c in self.entries():
            ta = subs.get(sa, {sa: ONE})
            tb = subs.get(sb, {sb: ONE})
            for fa, ca in ta.items():
                for fb, cb in tb.items():
                    if fa == fb:
                        continue
                    out.add(fa, fb, c * ca * cb)
        for sym, coeff in self.constraint.items():
            terms = subs.get(sym, {sym: ONE})
            for f, cf in terms.items():
                out.constraint[f] = out.constraint.get(f, Fraction(0)) + coeff * cf
        out.constraint = {s: c for s, c in out.constraint.items() if c}
        return out

    def same_form(self, other: "PhaseForm") -> bool:
        mine = {(self.symbols[a], self.symbols[b]): c
                for (a, b), c in self.coeffs.items()}
        theirs = {(other.symbols[a], other.symbols[b]): c
                  for (a, b), c in other.coeffs.items()}
        return mine == theirs

    def __repr__(self):
        n = len(self.coeffs)
        return f"PhaseForm({n} terms over {len(self.symbols)} symbols)"


def symbol_space(graph: RibbonGraph, order: ContourOrder):
    """Canonical symbol order: externals along the contour, then per-edge
    (p, dp) pairs sorted by edge id."""
    syms = [ext_symbol(x) for x in order.externals_in_order]
    for e in sorted(e.id for e in graph.edges):
        syms.append(line_symbol(e))
        syms.append(short_symbol(e))
    return tuple(syms)


def _base_constraint(graph: RibbonGraph):
    cons = {}
    for x in graph.externals:
        cons[ext_symbol(x.id)] = Fraction(1)
    for e in graph.edges:
        cons[short_symbol(e.id)] = Fraction(1)
    return cons


# -- closed form -------------------------------------------------------------


def rosette_factor(graph: RibbonGraph, tree: SpanningTree) -> PhaseForm:
    """Total oscillation assembled directly from the contour relations.

    The five pieces: external pairs, the line "mixed" terms (self, nesting
    and symmetrised crossing), arches over externals, loop crossings, and
    the short-variable terms.
    """
    co = contour_order(graph, tree)
    form = PhaseForm(symbol_space(graph, co), _base_constraint(graph))
    exts = co.externals_in_order
    for i, xa in enumerate(exts):
        for xb in exts[i + 1:]:
            form.add(ext_symbol(xa), ext_symbol(xb), ONE)
    for eid in co.lines():
        form.add(line_symbol(eid), short_symbol(eid), HALF)
    for inner, outer in co.nestings():
        form.add(line_symbol(outer), short_symbol(inner), ONE)
    for ea, eb in co.crossings():
        form.add(line_symbol(ea), short_symbol(eb), HALF)
        form.add(line_symbol(eb), short_symbol(ea), HALF)
        form.add(line_symbol(ea), line_symbol(eb), HALF)
        form.add(short_symbol(ea), short_symbol(eb), HALF)
    for eid in co.loops():
        for leg in co.arches_over(eid):
            form.add(line_symbol(eid), ext_symbol(leg), ONE)
    for eid in co.lines():
        lo, hi = co.span(eid)
        for leg, p in co.ext_pos.items():
            if hi < p:
                form.add(short_symbol(eid), ext_symbol(leg), ONE)
            elif p < lo:
                form.add(ext_symbol(leg), short_symbol(eid), ONE)
    lines = co.lines()
    for i, ea in enumerate(lines):
        for eb in lines[i + 1:]:
            la, ha = co.span(ea)
            lb, hb = co.span(eb)
            if ha < lb:
                form.add(short_symbol(ea), short_symbol(eb), ONE)
            elif hb < la:
                form.add(short_symbol(eb), short_symbol(ea), ONE)
    return form


# -- iterative contraction ----------------------------------------------------


class _Rosette:
    """Ordered rosette maintained during tree contraction.

    Items are ("mom", symbol) with symbol an external or half-line
    momentum, or ("marker", edge_id) for a contracted tree line.
    """

    def __init__(self):
        self.items = []
        self.coeffs: dict[tuple, Fraction] = {}

    @staticmethod
    def _wedge_symbol(item):
        return short_symbol(item[1]) if item[0] == "marker" else item[1]

    def add(self, sa, sb, c):
        if sa == sb:
            return
        c = Fraction(c)
        if sb < sa:
            sa, sb = sb, sa
            c = -c
        new = self.coeffs.get((sa, sb), Fraction(0)) + c
        if new:
            self.coeffs[(sa, sb)] = new
        else:
            self.coeffs.pop((sa, sb), None)

    def substitute(self, old, terms):
        """Replace a symbol by a linear combination everywhere."""
        hits = [(k, c) for k, c in self.coeffs.items() if old in k]
        for (sa, sb), c in hits:
            del self.coeffs[(sa, sb)]
            ta = terms if sa == old else {sa: ONE}
            tb = terms if sb == old else {sb: ONE}
            for fa, ca in ta.items():
                for fb, cb in tb.items():
                    self.add(fa, fb, c * ca * cb)

    def contract(self, i0, edge_id, new_moms):
        """Single tree-line contraction at rosette position i0.

        The half-line momentum sitting at i0 becomes the line's short
        variable; the marker lands just before the attached vertex's
        remaining momenta; every cross pair keeps contour orientation;
        the line contributes its own half p ^ dp term.
        """
        old_item = self.items[i0]
        d_sym = short_symbol(edge_id)
        self.substitute(old_item[1], {d_sym: ONE})
        for idx, it in enumerate(self.items):
            if idx == i0:
                continue
            w = self._wedge_symbol(it)
            if idx < i0:
                for q in new_moms:
                    self.add(w, q, ONE)
            else:
                for q in new_moms:
                    self.add(q, w, ONE)
        for q in new_moms:
            self.add(d_sym, q, ONE)
        for i, qa in enumerate(new_moms):
            for qb in new_moms[i + 1:]:
                self.add(qa, qb, ONE)
        self.add(line_symbol(edge_id), d_sym, HALF)
        self.items[i0:i0 + 1] = [("marker", edge_id)] + [
            ("mom", q) for q in new_moms
        ]


def _half_symbol(edge, port):
    end = 0 if port == edge.ports[0] else 1
    return ("h", edge.id, end)


def _port_symbol(graph, port):
    kind, oid = graph.occupant(port)
    if kind == "ext":
        return ext_symbol(oid)
    return _half_symbol(graph.edge(oid), port)


def tree_reduce(graph: RibbonGraph, tree: SpanningTree) -> PhaseForm:
    """Total oscillation via iterated single contractions of tree lines.

    Starts from the root vertex's own oscillation and attaches one vertex
    per step, following the contour.  Loop half-line momenta are traded
    for line variables at the end.  The result is expressed over the same
    canonical symbols as ``rosette_factor``.
    """
    if not graph.is_connected():
        raise Disconnected("tree reduction needs a connected graph")
    ros = _Rosette()
    root = graph.vertex(tree.root)
    ros.items = [("mom", _port_symbol(graph, p)) for p in root.ports]
    for i, ia in enumerate(ros.items):
        for ib in ros.items[i + 1:]:
            ros.add(ia[1], ib[1], ONE)
    visited = {tree.root}

    def walk(vid, entry_port):
        for port in _rotation(graph.vertex(vid), entry_port):
            kind, oid = graph.occupant(port)
            if kind != "edge":
                continue
            e = graph.edge(oid)
            other_port = e.ports[1] if port == e.ports[0] else e.ports[0]
            other_vertex = graph.port_vertex(other_port)
            if e.id in tree.tree_edges and other_vertex not in visited:
                target = ("mom", _half_symbol(e, port))
                i0 = ros.items.index(target)
                child = graph.vertex(other_vertex)
                new_moms = [
                    _port_symbol(graph, p)
                    for p in _rotation(child, other_port)
                ]
                ros.contract(i0, e.id, new_moms)
                visited.add(other_vertex)
                walk(other_vertex, other_port)

    walk(tree.root, None)

    # trade loop half-line momenta for line variables
    first_end = {}
    for it in ros.items:
        if it[0] == "mom" and it[1][0] == "h":
            _, eid, end = it[1]
            if eid not in first_end:
                first_end[eid] = end
    for eid, end in sorted(first_end.items()):
        p, d = line_symbol(eid), short_symbol(eid)
        ros.substitute(("h", eid, end), {d: HALF, p: HALF})
        ros.substitute(("h", eid, 1 - end), {d: HALF, p: -HALF})

    co = contour_order(graph, tree)
    form = PhaseForm(symbol_space(graph, co), _base_constraint(graph))
    for (sa, sb), c in ros.coeffs.items():
        form.add(sa, sb, c)
    return form


# -- momentum routing ---------------------------------------------------------


@dataclass(frozen=True)
class MomentumRouting:
    """Solved tree-line momenta as linear combinations of free symbols.

    solved maps ("p", tree_edge) to a {symbol: coefficient} combination of
    external momenta, loop-line variables and short variables; free lists
    the unconstrained symbols; global_constraint is the one delta left
    after routing.  first_end records, per edge, which stored port is met
    first along the contour (defining the sign of the line variable).
    """

    solved: dict
    free: tuple
    first_end: dict
    global_constraint: dict

    def child_half_expression(self, eid: str) -> dict:
        """Momentum at the root-far end of a tree line, over free symbols."""
        expr = dict(self.solved[line_symbol(eid)])
        # child half = (dp - p)/2 with p solved as dp + 2 * (branch sum)
        out = {}
        for sym, c in expr.items():
            if sym == short_symbol(eid):
                continue
            out[sym] = -c / 2
        return out

    def complete(self, assignment: dict) -> dict:
        """Extend a free-symbol assignment with the solved momenta."""
        full = dict(assignment)
        for sym, combo in self.solved.items():
            x = Fraction(0)
            y = Fraction(0)
            for s, c in combo.items():
                vx, vy = full[s]
                x += c * vx
                y += c * vy
            full[sym] = (x, y)
        return full


def momentum_routing(graph: RibbonGraph, tree: SpanningTree) -> MomentumRouting:
    """Solve one momentum per tree line from the branch constraints."""
    if not graph.is_connected():
        raise Disconnected("momentum routing needs a connected graph")
    co = contour_order(graph, tree)
    first_end = dict(co.loop_first_end)
    for eid in tree.tree_edges:
        e = graph.edge(eid)
        branch = tree.branch[eid]
        # parent end (met first) is the one outside the branch
        first_end[eid] = 1 if graph.port_vertex(e.ports[0]) in branch else 0
    solved = {}
    for eid in sorted(tree.tree_edges):
        branch = tree.branch[eid]
        expr: dict = {}

        def acc(sym, c):
            expr[sym] = expr.get(sym, Fraction(0)) + c
            if not expr[sym]:
                del expr[sym]

        for x in graph.externals:
            if graph.port_vertex(x.port) in branch:
                acc(ext_symbol(x.id), ONE)
        for e in graph.edges:
            if e.id == eid:
                continue
            va, vb = graph.edge_endpoints(e.id)
            ina, inb = va in branch, vb in branch
            if ina and inb:
                acc(short_symbol(e.id), ONE)
            elif ina or inb:
                end_in = 0 if ina else 1
                sign = ONE if end_in == first_end[e.id] else -ONE
                acc(short_symbol(e.id), HALF)
                acc(line_symbol(e.id), sign * HALF)
        combo = {short_symbol(eid): ONE}
        for sym, c in expr.items():
            combo[sym] = combo.get(sym, Fraction(0)) + 2 * c
        solved[line_symbol(eid)] = {s: c for s, c in combo.items() if c}
    free = tuple(
        s for s in symbol_space(graph, co) if s not in solved
    )
    return MomentumRouting(
        solved=solved,
        free=free,
        first_end=first_end,
        global_constraint=_base_constraint(graph),
    )


def half_momenta(graph: RibbonGraph, routing: MomentumRouting,
                 full_assignment: dict) -> dict:
    """Momentum carried into the graph at every port."""
    out = {}
    for x in graph.externals:
        out[x.port] = full_assignment[ext_symbol(x.id)]
    for e in graph.edges:
        p = full_assignment[line_symbol(e.id)]
        d = full_assignment[short_symbol(e.id)]
        first = ((d[0] + p[0]) / 2, (d[1] + p[1]) / 2)
        second = ((d[0] - p[0]) / 2, (d[1] - p[1]) / 2)
        fe = routing.first_end[e.id]
        out[e.ports[fe]] = first
        out[e.ports[1 - fe]] = second
    return out


def phase_oracle(graph: RibbonGraph, tree: SpanningTree, assignment: dict,
                 theta=ONE, routing: MomentumRouting | None = None) -> Fraction:
    """Direct accumulation of the per-vertex oscillation.

    assignment gives rational 2-vectors to the free symbols; tree momenta
    are solved through the routing.  Raises InconsistentAssignment when
    any vertex fails momentum conservation.
    """
    if routing is None:
        routing = momentum_routing(graph, tree)
    full = routing.complete(assignment)
    ports = half_momenta(graph, routing, full)
    total = Fraction(0)
    for v in graph.vertices:
        vals = [ports[p] for p in v.ports]
        sx = sum(val[0] for val in vals)
        sy = sum(val[1] for val in vals)
        if sx or sy:
            raise InconsistentAssignment(
                f"vertex {v.id!r} violates conservation: ({sx}, {sy})"
            )
        if v.kind != MOYAL:
            continue
        for i, qa in enumerate(vals):
            for qb in vals[i + 1:]:
                total += wedge(qa, qb, theta)
    return total


def random_assignment(graph: RibbonGraph, routing: MomentumRouting, rng,
                      max_num: int = 9, max_den: int = 4) -> dict:
    """Random rational 2-vectors for the free symbols, with one symbol
    solved so the global constraint holds exactly."""

    def rand_frac():
        return Fraction(int(rng.integers(-max_num, max_num + 1)),
                        int(rng.integers(1, max_den + 1)))

    cons = routing.global_constraint
    pivots = [s for s in routing.free if s in cons]
    if not pivots:
        raise InconsistentAssignment("no free symbol left to solve the "
                                     "global constraint")
    pivot = pivots[-1]
    assignment = {}
    for s in routing.free:
        if s == pivot:
            continue
        assignment[s] = (rand_frac(), rand_frac())
    sx = sum(cons.get(s, Fraction(0)) * v[0] for s, v in assignment.items())
    sy = sum(cons.get(s, Fraction(0)) * v[1] for s, v in assignment.items())
    cp = cons[pivot]
    assignment[pivot] = (-sx / cp, -sy / cp)
    return assignment


def check_against_oracle(graph: RibbonGraph, tree: SpanningTree, trials: int,
                         rng, theta=ONE):
    """Compare both symbolic forms with the oracle on random assignments.

    Returns a list of mismatch descriptions; empty means all trials agreed
    exactly.
    """
    routing = momentum_routing(graph, tree)
    forms = {
        "tree_reduce": tree_reduce(graph, tree),
        "rosette_factor": rosette_factor(graph, tree),
    }
    mismatches = []
    for trial in range(trials):
        assignment = random_assignment(graph, routing, rng)
        full = routing.complete(assignment)
        want = phase_oracle(graph, tree, assignment, theta, routing)
        for name, form in forms.items():
            got = form.evaluate(full, theta)
            if got != want:
                mismatches.append(
                    {
                        "trial": trial,
                        "form": name,
                        "root": tree.root,
                        "expected": str(want),
                        "got": str(got),
                        "assignment": {
                            format_symbol(s): (str(v[0]), str(v[1]))
                            for s, v in assignment.items()
                        },
                    }
                )
    return mismatches
