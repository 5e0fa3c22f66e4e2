"""Sliced-propagator numerics: quadrature, bound checks, scaling scans.

The propagator of the harmonically confined model, in the mixed momentum
representation, is

    C(p, pr; p, qr) = (Omega / pi theta) * Int dalpha / sinh(2 Ot alpha)
        * exp(-alpha (p^2 + m^2))
        * exp(-(Ot/4) [coth(Ot alpha) (pr+qr)^2 + tanh(Ot alpha) (pr-qr)^2])

with Ot = 2 Omega / theta, p the commutative and pr, qr the
noncommutative end momenta.  Slice i restricts alpha to
[M^-2i, M^-2(i-1)] (slice 0 takes [1, inf)).

Per slice the integrand's weakest dampings give the sharp exponential
rates used by the bound checks: alpha_min on p^2 + m^2, the coth value
at alpha_max on (pr+qr)^2, the tanh value at alpha_min on (pr-qr)^2.
These instantiate the K exp(-M^-2i p^2) exp(-M^2i (pr+qr)^2 -
M^-2i (pr-qr)^2) slice-bound shape with explicit constants; the unit
coefficient form overflows in double precision already for moderate
momenta, while K stays finite and slice-stable with the sharp rates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (MalformedGraph, MCVarianceTooHigh, QuadratureFailure,
                     UnboundedRatio)
from .graph import RibbonGraph, spanning_tree
from .kernels import (propagator_batch, resolve_backend, slice_alpha_range,
                      slice_tables)
from .oscillation import (contour_order, ext_symbol, line_symbol,
                          rosette_factor, short_symbol)


@dataclass(frozen=True)
class ModelParams:
    theta: float = 1.0
    omega: float = 1.0
    mass: float = 1.0
    big_m: float = 2.0
    kappa: float = 1.0
    lam: float = 1.0

    def __post_init__(self):
        if self.theta <= 0 or self.omega <= 0:
            raise ValueError("theta and omega must be positive")
        if self.mass < 0:
            raise ValueError("mass must be nonnegative")
        if self.big_m <= 1:
            raise ValueError("slicing ratio M must exceed 1")

    @property
    def omega_tilde(self) -> float:
        return 2.0 * self.omega / self.theta

    def to_dict(self) -> dict:
        return {
            "theta": self.theta,
            "omega": self.omega,
            "mass": self.mass,
            "big_m": self.big_m,
            "kappa": self.kappa,
            "lambda": self.lam,
        }


def _vec2(x):
    a = np.asarray(x, dtype=np.float64).reshape(-1)
    if a.size == 1:
        a = np.array([a[0], 0.0])
    if a.size != 2:
        raise ValueError("momenta are 2-vectors")
    return a


def _log_sinh(x: float) -> float:
    return x + math.log1p(-math.exp(-2.0 * x)) - math.log(2.0)


def propagator_slice(params: ModelParams, i: int, p, pr, qr,
                     rel_tol: float = 1e-8) -> float:
    """Slice value by panel-doubling Gauss-Legendre quadrature.

    Doubles the number of panels until the relative change drops below
    rel_tol; raises QuadratureFailure when 2^14 panels do not suffice.
    """
    p = _vec2(p)
    pr = _vec2(pr)
    qr = _vec2(qr)
    psq_m = float(p @ p) + params.mass**2
    splus = float((pr + qr) @ (pr + qr))
    sminus = float((pr - qr) @ (pr - qr))
    ot = params.omega_tilde
    pref = params.omega / (math.pi * params.theta)

    def integrand(alpha):
        out = np.empty_like(alpha)
        for k, a in enumerate(alpha):
            ex = (-a * psq_m - _log_sinh(2.0 * ot * a)
                  - 0.25 * ot * splus / math.tanh(ot * a)
                  - 0.25 * ot * math.tanh(ot * a) * sminus)
            out[k] = math.exp(ex) if ex > -745.0 else 0.0
        return out

    if i == 0:
        # alpha = 1/t maps [1, inf) onto (0, 1]
        def f(t):
            return integrand(1.0 / t) / t**2

        lo, hi = 0.0, 1.0
    else:
        f = integrand
        lo, hi = slice_alpha_range(i, params.big_m)

    nodes, weights = np.polynomial.legendre.leggauss(16)
    value = None
    panels = 1
    while panels <= 2**14:
        edges = np.linspace(lo, hi, panels + 1)
        total = 0.0
        for a, b in zip(edges[:-1], edges[1:]):
            mid = 0.5 * (a + b)
            half = 0.5 * (b - a)
            total += half * float(weights @ f(mid + half * nodes))
        total *= pref
        if value is not None and abs(total - value) <= rel_tol * abs(total):
            return total
        value = total
        panels *= 2
    raise QuadratureFailure(
        f"slice {i} quadrature did not reach rel_tol={rel_tol}"
    )


def slice_sum(params: ModelParams, up_to: int, p, pr, qr) -> float:
    return sum(propagator_slice(params, i, p, pr, qr)
               for i in range(up_to + 1))


# -- slice bounds ------------------------------------------------------------


def bound_rates(params: ModelParams, i: int) -> tuple[float, float, float]:
    """Sharp per-slice exponential rates (commutative, sum, difference)."""
    lo, hi = slice_alpha_range(i, params.big_m)
    ot = params.omega_tilde
    rate_p = lo
    rate_plus = 0.25 * ot if math.isinf(hi) else 0.25 * ot / math.tanh(ot * hi)
    rate_minus = 0.25 * ot * math.tanh(ot * lo)
    return rate_p, rate_plus, rate_minus


def bound_log_factor(params: ModelParams, i: int, p, pr, qr) -> float:
    p = _vec2(p)
    pr = _vec2(pr)
    qr = _vec2(qr)
    rp, rplus, rminus = bound_rates(params, i)
    return (-rp * (float(p @ p) + params.mass**2)
            - rplus * float((pr + qr) @ (pr + qr))
            - rminus * float((pr - qr) @ (pr - qr)))


def bound_factor(params: ModelParams, i: int, p, pr, qr) -> float:
    return math.exp(bound_log_factor(params, i, p, pr, qr))


def default_momentum_grid(n: int = 5, top: float = 4.0):
    """A 5x5x5 grid: |p| and |pr| from 0 to top, qr signed along pr."""
    ps = np.linspace(0.0, top, n)
    prs = np.linspace(0.0, top, n)
    qrs = np.linspace(-top, top, n)
    grid = []
    for a in ps:
        for b in prs:
            for c in qrs:
                grid.append(((a, 0.0), (b, 0.0), (c, 0.0)))
    return grid


@dataclass(frozen=True)
class SliceBoundReport:
    i_values: tuple[int, ...]
    k_per_slice: tuple[float, ...]
    k: float
    stable_range: tuple[int, ...]
    variation: float
    argmax: tuple

    @property
    def stable(self) -> bool:
        return self.variation <= 0.20

    def to_dict(self) -> dict:
        return {
            "i_values": list(self.i_values),
            "k_per_slice": list(self.k_per_slice),
            "k": self.k,
            "stable_range": list(self.stable_range),
            "variation": self.variation,
            "stable": self.stable,
        }


def verify_slice_bound(params: ModelParams, i_values, grid=None,
                       stable_range=(2, 3, 4, 5, 6)) -> SliceBoundReport:
    """Fit the slice-bound constant over a momentum grid.

    K is the largest ratio of slice value to bound factor; the report
    records the per-slice maxima and their spread over the stability
    window.  A ratio that keeps growing across the window signals a bug
    in the slicing and raises UnboundedRatio.
    """
    if grid is None:
        grid = default_momentum_grid()
    i_values = tuple(i_values)
    k_per = []
    argmax = None
    best = -math.inf
    for i in i_values:
        ki = 0.0
        for (p, pr, qr) in grid:
            val = propagator_slice(params, i, p, pr, qr)
            if val <= 0.0:
                continue  # underflowed together with the bound factor
            ratio = math.exp(
                math.log(val) - bound_log_factor(params, i, p, pr, qr)
            )
            if ratio > ki:
                ki = ratio
            if ratio > best:
                best = ratio
                argmax = (i, p, pr, qr)
        k_per.append(ki)
    window = [k for i, k in zip(i_values, k_per) if i in set(stable_range)]
    if len(window) >= 2:
        variation = (max(window) - min(window)) / min(window)
        increasing = all(b > a for a, b in zip(window, window[1:]))
        if increasing and window[-1] > 1.5 * window[0]:
            raise UnboundedRatio(
                f"bound ratio grows across slices: {window}"
            )
    else:
        variation = 0.0
    return SliceBoundReport(
        i_values=i_values,
        k_per_slice=tuple(k_per),
        k=max(k_per),
        stable_range=tuple(sorted(set(stable_range) & set(i_values))),
        variation=variation,
        argmax=argmax,
    )


# -- generalised lines -------------------------------------------------------


def generalised_line_value(params: ModelParams, segment_scales, p, pr,
                           qr) -> float:
    """Chain of segments joined by insertions, as a product of slices.

    The interior junctions pin the noncommutative momentum to zero, so
    only the two end segments see pr and qr.
    """
    scales = [int(s) for s in segment_scales]
    if len(scales) < 2:
        raise MalformedGraph("a generalised line has at least two segments")
    n = len(scales) - 1
    zero = (0.0, 0.0)
    value = params.kappa ** (2 * n)
    value *= propagator_slice(params, scales[0], p, pr, zero)
    for s in scales[1:-1]:
        value *= propagator_slice(params, s, p, zero, zero)
    value *= propagator_slice(params, scales[-1], p, zero, qr)
    return value


def generalised_line_bound(params: ModelParams, segment_scales, p, pr, qr,
                           k: float) -> float:
    """Product bound with the sharp per-segment rates.

    The commutative damping multiplies over all segments; each end
    segment damps its own noncommutative momentum at the combined
    coth + tanh rate (its other end is pinned to zero).
    """
    scales = [int(s) for s in segment_scales]
    n = len(scales) - 1
    p = _vec2(p)
    pr = _vec2(pr)
    qr = _vec2(qr)
    psq_m = float(p @ p) + params.mass**2
    ex = 0.0
    for s in scales:
        rp, _, _ = bound_rates(params, s)
        ex -= rp * psq_m
    for s, mom in ((scales[0], pr), (scales[-1], qr)):
        _, rplus, rminus = bound_rates(params, s)
        ex -= (rplus + rminus) * float(mom @ mom)
    return params.kappa ** (2 * n) * k ** (n + 1) * math.exp(ex)


# -- scaling scan ------------------------------------------------------------


@dataclass(frozen=True)
class ScanPoint:
    i: int
    value: float
    stderr: float
    value_nophase: float
    stderr_nophase: float


@dataclass(frozen=True)
class ScanResult:
    mode: str
    i_values: tuple[int, ...]
    points: tuple[ScanPoint, ...]
    slope: float
    slope_err: float
    slope_nophase: float
    slope_nophase_err: float
    samples: int
    seed: int
    backend: str
    external_weight: float = 1.0
    phase_couplings: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "i_values": list(self.i_values),
            "points": [
                {
                    "i": pt.i,
                    "value": pt.value,
                    "stderr": pt.stderr,
                    "value_nophase": pt.value_nophase,
                    "stderr_nophase": pt.stderr_nophase,
                }
                for pt in self.points
            ],
            "slope": self.slope,
            "slope_err": self.slope_err,
            "slope_nophase": self.slope_nophase,
            "slope_nophase_err": self.slope_nophase_err,
            "samples": self.samples,
            "seed": self.seed,
            "backend": self.backend,
            "external_weight": self.external_weight,
            "phase_couplings": dict(self.phase_couplings),
        }


def _fit_slope(i_values, values, errors, big_m):
    x = np.asarray(i_values, dtype=np.float64)
    y = np.log(np.asarray(values)) / math.log(big_m)
    sy = np.asarray(errors) / np.asarray(values) / math.log(big_m)
    xb = x.mean()
    denom = float(((x - xb) ** 2).sum())
    slope = float(((x - xb) * (y - y.mean())).sum() / denom)
    err = float(math.sqrt((((x - xb) / denom) ** 2 * sy**2).sum()))
    return slope, err


def _loop_phase_couplings(graph: RibbonGraph):
    """Couplings of the rosette phase for a one-loop two-point graph.

    Returns (loop edge, designated external, c_wu, c_wx, c_ux) where w, u
    are the loop line's difference and sum variables and x the designated
    external momentum; the remaining external is held at zero.
    """
    tree = spanning_tree(graph)
    loops = sorted(tree.loop_edges)
    if len(loops) != 1 or graph.n_external != 2:
        raise MalformedGraph("scan needs a one-loop two-point graph")
    loop = loops[0]
    form = rosette_factor(graph, tree)
    co = contour_order(graph, tree)
    designated = None
    for leg in co.externals_in_order:
        if (form.coefficient(line_symbol(loop), ext_symbol(leg))
                or form.coefficient(short_symbol(loop), ext_symbol(leg))):
            designated = leg
            break
    if designated is None:
        designated = co.externals_in_order[0]
    c_wu = float(form.coefficient(line_symbol(loop), short_symbol(loop)))
    c_wx = float(form.coefficient(line_symbol(loop), ext_symbol(designated)))
    c_ux = float(form.coefficient(short_symbol(loop), ext_symbol(designated)))
    return loop, designated, c_wu, c_wx, c_ux


def _mc_chain(params, tables, i, bx, samples, chunk, seed, backend):
    """Interior insertion factor against the commutative test weight."""
    lo, _ = slice_alpha_range(i, params.big_m)
    beta_p = 0.8 * (lo + bx)
    rng = np.random.default_rng([seed, i, 2])
    total = 0.0
    total_sq = 0.0
    done = 0
    while done < samples:
        n = min(chunk, samples - done)
        pvec = rng.normal(0.0, math.sqrt(0.5 / beta_p), size=(n, 2))
        psq = np.einsum("ij,ij->i", pvec, pvec)
        zeros = np.zeros(n)
        vals = propagator_batch(psq, zeros, zeros, params.mass**2,
                                tables, backend)
        est = vals * np.exp((beta_p - bx) * psq) * (math.pi / beta_p)
        total += float(est.sum())
        total_sq += float((est**2).sum())
        done += n
    mean = total / samples
    var = max(total_sq / samples - mean**2, 0.0)
    return mean, math.sqrt(var / samples)


def _mc_one_loop(params, tables, i, couplings, with_phase, bx, samples,
                 chunk, seed, backend):
    """Loop integral of one slice, with or without the rosette cosine.

    The designated external leg's Gaussian test integral is carried out
    analytically, leaving cos(phase) times a quadratic damping; each
    variant gets its own matched importance-sampling proposal.
    """
    theta = params.theta
    c_wu = couplings["c_wu"]
    c_wx = couplings["c_wx"]
    c_ux = couplings["c_ux"]
    lo, _ = slice_alpha_range(i, params.big_m)
    _, rplus, rminus = bound_rates(params, i)
    extra_u = extra_w = 0.0
    if with_phase:
        # analytic test-weight damping, added to the proposal only when
        # no cross term can undercut it
        extra_u = theta**2 * c_ux**2 / (16.0 * bx) if c_wx == 0 else 0.0
        extra_w = theta**2 * c_wx**2 / (16.0 * bx) if c_ux == 0 else 0.0
    beta_p = 0.8 * lo
    beta_u = 0.8 * (rplus + extra_u)
    beta_w = 0.8 * (rminus + extra_w)
    jac = 0.25  # d2pr d2qr = d2u d2w / 4
    norm = (math.pi / beta_p) * (math.pi / beta_u) * (math.pi / beta_w)
    rng = np.random.default_rng([seed, i, 1 if with_phase else 0])
    total = 0.0
    total_sq = 0.0
    done = 0
    while done < samples:
        n = min(chunk, samples - done)
        pvec = rng.normal(0.0, math.sqrt(0.5 / beta_p), size=(n, 2))
        uvec = rng.normal(0.0, math.sqrt(0.5 / beta_u), size=(n, 2))
        wvec = rng.normal(0.0, math.sqrt(0.5 / beta_w), size=(n, 2))
        psq = np.einsum("ij,ij->i", pvec, pvec)
        usq = np.einsum("ij,ij->i", uvec, uvec)
        wsq = np.einsum("ij,ij->i", wvec, wvec)
        vals = propagator_batch(psq, usq, wsq, params.mass**2,
                                tables, backend)
        est = vals * np.exp(beta_p * psq + beta_u * usq + beta_w * wsq)
        est *= jac * norm
        if with_phase:
            cross = wvec[:, 0] * uvec[:, 1] - wvec[:, 1] * uvec[:, 0]
            est *= np.cos(c_wu * 0.5 * theta * cross)
            vvec = c_wx * wvec + c_ux * uvec
            vnorm = np.einsum("ij,ij->i", vvec, vvec)
            est *= np.exp(-theta**2 * vnorm / (16.0 * bx))
        total += float(est.sum())
        total_sq += float((est**2).sum())
        done += n
    mean = total / samples
    var = max(total_sq / samples - mean**2, 0.0)
    return mean, math.sqrt(var / samples)


def scaling_scan(params: ModelParams, graph: RibbonGraph, i_values,
                 samples: int = 1_000_000, seed: int = 1,
                 backend: str | None = None,
                 external_weight: float | None = None,
                 chunk: int = 200_000,
                 max_rel_err: float = 0.2) -> ScanResult:
    """Monte Carlo slice amplitudes and their log_M slope.

    For a one-loop two-point graph the amplitude integrates the sliced
    loop propagator over its free momenta against the cosine of the
    rosette phase; the designated external leg is integrated against a
    Gaussian test weight (done analytically), the other is held at zero.
    A variant without the phase is always reported alongside.  Graphs
    with no Moyal vertex scan the interior insertion factor against the
    test weight in the commutative momentum.

    When external_weight is None the Gaussian rate is picked by coupling
    type: a leg oscillating against the loop's difference variable needs
    a weight broad against the top slice's tanh scale (rate 0.05), any
    other coupling takes rate 1.  Importance sampling follows the sharp
    slice rates; sums over samples are chunk-ordered and reproducible
    for a fixed seed and backend.
    """
    backend = resolve_backend(backend)
    i_values = tuple(int(i) for i in i_values)
    chain = not graph.has_moyal_vertex()
    couplings = {}
    if chain:
        mode = "insertion-chain"
        bx = 1.0 if external_weight is None else float(external_weight)
    else:
        mode = "one-loop"
        loop, designated, c_wu, c_wx, c_ux = _loop_phase_couplings(graph)
        if external_weight is None:
            bx = 0.05 if c_wx else 1.0
        else:
            bx = float(external_weight)
        couplings = {
            "loop_edge": loop,
            "external": designated,
            "c_wu": c_wu,
            "c_wx": c_wx,
            "c_ux": c_ux,
        }
    points = []
    for i in i_values:
        tables = slice_tables(params, i)
        if chain:
            mean, err = _mc_chain(params, tables, i, bx, samples, chunk,
                                  seed, backend)
            mean_np, err_np = mean, err
        else:
            mean, err = _mc_one_loop(params, tables, i, couplings, True, bx,
                                     samples, chunk, seed, backend)
            mean_np, err_np = _mc_one_loop(params, tables, i, couplings,
                                           False, bx, samples, chunk, seed,
                                           backend)
        for m, s in ((mean, err), (mean_np, err_np)):
            if m <= 0 or s / m > max_rel_err:
                raise MCVarianceTooHigh(
                    f"slice {i}: mean={m:.3e}, stderr={s:.3e}"
                )
        points.append(ScanPoint(i, mean, err, mean_np, err_np))
    slope, err = _fit_slope(
        i_values, [pt.value for pt in points],
        [pt.stderr for pt in points], params.big_m)
    slope_np, err_np = _fit_slope(
        i_values, [pt.value_nophase for pt in points],
        [pt.stderr_nophase for pt in points], params.big_m)
    return ScanResult(
        mode=mode,
        i_values=i_values,
        points=tuple(points),
        slope=slope,
        slope_err=err,
        slope_nophase=slope_np,
        slope_nophase_err=err_np,
        samples=samples,
        seed=seed,
        backend=backend,
        external_weight=bx,
        phase_couplings=couplings,
    )
