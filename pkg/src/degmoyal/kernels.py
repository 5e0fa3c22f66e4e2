"""Batch evaluation kernels for the sliced propagator.

The hot loop of the Monte Carlo scan evaluates the slice integral on
large sample batches with fixed Gauss-Legendre nodes.  Two
implementations are provided: a jit-compiled one and a vectorized pure
numpy one.  The environment variable DEGMOYAL_BACKEND selects between
them ("numba", "numpy" or "auto"; auto prefers numba when importable).

Reductions over samples stay outside the kernels so sums are performed
by numpy's pairwise summation, keeping results reproducible for a fixed
seed and backend.
"""

from __future__ import annotations

import math
import os

import numpy as np

try:
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    numba = None
    HAVE_NUMBA = False

_GL_CACHE: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def resolve_backend(explicit: str | None = None) -> str:
    choice = explicit or os.environ.get("DEGMOYAL_BACKEND", "auto")
    choice = choice.lower()
    if choice not in ("auto", "numba", "numpy"):
        raise ValueError(f"unknown backend {choice!r}")
    if choice == "auto":
        return "numba" if HAVE_NUMBA else "numpy"
    if choice == "numba" and not HAVE_NUMBA:
        raise RuntimeError("numba backend requested but numba is not importable")
    return choice


def gauss_legendre(n: int):
    if n not in _GL_CACHE:
        x, w = np.polynomial.legendre.leggauss(n)
        _GL_CACHE[n] = (x, w)
    return _GL_CACHE[n]


def slice_alpha_range(i: int, big_m: float) -> tuple[float, float]:
    """Schwinger-parameter window of slice i; slice 0 is (1, inf)."""
    if i < 0:
        raise ValueError("slice index must be nonnegative")
    if i == 0:
        return 1.0, math.inf
    return big_m ** (-2 * i), big_m ** (-2 * (i - 1))


def slice_tables(params, i: int, order: int = 24):
    """Fixed quadrature tables for one slice.

    Returns (alpha, weight, c_plus, c_minus) arrays such that the slice
    value at (p^2, S+, S-) is
        sum_j weight_j * exp(-alpha_j (p^2 + m^2)
                             - c_plus_j S+ - c_minus_j S-).
    Slice 0 is mapped through alpha = 1/t onto a finite window.
    """
    x, w = gauss_legendre(order)
    ot = params.omega_tilde
    pref = params.omega / (math.pi * params.theta)
    if i == 0:
        # alpha = 1/t, t in (0, 1]: dalpha = dt / t^2
        t = 0.5 * (x + 1.0)
        alpha = 1.0 / t
        jac = 0.5 / t**2
    else:
        lo, hi = slice_alpha_range(i, params.big_m)
        alpha = lo + 0.5 * (x + 1.0) * (hi - lo)
        jac = 0.5 * (hi - lo) * np.ones_like(alpha)
    weight = pref * jac * np.exp(-_log_sinh(2.0 * ot * alpha))
    c_plus = 0.25 * ot / np.tanh(ot * alpha)
    c_minus = 0.25 * ot * np.tanh(ot * alpha)
    return (alpha.astype(np.float64), weight.astype(np.float64),
            c_plus.astype(np.float64), c_minus.astype(np.float64))


def _log_sinh(x):
    x = np.asarray(x, dtype=np.float64)
    return x + np.log1p(-np.exp(-2.0 * x)) - math.log(2.0)


def propagator_batch_numpy(psq, splus, sminus, msq, alpha, weight,
                           c_plus, c_minus):
    """Vectorized slice values for sample arrays psq, S+, S-."""
    out = np.zeros_like(psq)
    for j in range(alpha.shape[0]):
        out += weight[j] * np.exp(
            -alpha[j] * (psq + msq) - c_plus[j] * splus - c_minus[j] * sminus
        )
    return out


if HAVE_NUMBA:

    @numba.njit(parallel=True, cache=True)
    def propagator_batch_numba(psq, splus, sminus, msq, alpha, weight,
                               c_plus, c_minus):  # pragma: no cover - jit
        n = psq.shape[0]
        m = alpha.shape[0]
        out = np.empty(n, dtype=np.float64)
        for k in numba.prange(n):
            acc = 0.0
            for j in range(m):
                acc += weight[j] * math.exp(
                    -alpha[j] * (psq[k] + msq)
                    - c_plus[j] * splus[k]
                    - c_minus[j] * sminus[k]
                )
            out[k] = acc
        return out

else:  # pragma: no cover - exercised only without numba

    def propagator_batch_numba(*args, **kwargs):
        raise RuntimeError("numba is not importable")


def propagator_batch(psq, splus, sminus, msq, tables,
                     backend: str | None = None):
    """Dispatch batch slice evaluation to the selected backend."""
    alpha, weight, c_plus, c_minus = tables
    psq = np.ascontiguousarray(psq, dtype=np.float64)
    splus = np.ascontiguousarray(splus, dtype=np.float64)
    sminus = np.ascontiguousarray(sminus, dtype=np.float64)
    if resolve_backend(backend) == "numba":
        return propagator_batch_numba(psq, splus, sminus, float(msq),
                                      alpha, weight, c_plus, c_minus)
    return propagator_batch_numpy(psq, splus, sminus, float(msq),
                                  alpha, weight, c_plus, c_minus)
