"""Numeric primitives: normal cdf/quantile, Hadamard matrices, largest-root search.

Everything downstream builds on these four operations.  The cdf and quantile
carry message points between the uniform and Gaussian pictures, Sylvester
Hadamard matrices supply the per-step mixing weights of the multi-receiver
schedules, and ``largest_root`` solves the scalar fixed-point equations behind
the rate formulas (which always want the *largest* admissible root, hence the
descending scan).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.special import ndtr, ndtri

__all__ = [
    "MAX_HADAMARD_LOG2",
    "HadamardMatrix",
    "RootResult",
    "RootFindingError",
    "NoSignChangeError",
    "std_normal_cdf",
    "std_normal_quantile",
    "sylvester_hadamard",
    "largest_root",
]

MAX_HADAMARD_LOG2 = 10


class RootFindingError(RuntimeError):
    """The root finder could not certify a root in the requested bracket."""


class NoSignChangeError(RootFindingError):
    """f kept one sign on the whole scan grid and never came within tol of zero."""


@dataclass(frozen=True)
class HadamardMatrix:
    """Sylvester Hadamard matrix: entries in {+1, -1} with H @ H.T = order * I.

    The first row and first column are all +1; ``entries`` is an int64 array
    marked read-only so schedules can share one instance.
    """

    order: int
    entries: np.ndarray

    def column(self, j: int) -> np.ndarray:
        return self.entries[:, j]


@dataclass(frozen=True)
class RootResult:
    """A bracketed root: location, |f(root)|, and bisection iterations used."""

    root: float
    residual: float
    iterations: int


def std_normal_cdf(x):
    """Standard normal cdf.  Scalars in, float out; ndarrays map elementwise."""
    if np.ndim(x) == 0:
        return float(ndtr(float(x)))
    return ndtr(np.asarray(x, dtype=float))


def std_normal_quantile(p):
    """Inverse standard normal cdf on the open interval (0, 1).

    Raises ValueError outside (0, 1); the embedding step relies on this to
    reject degenerate message points rather than emitting infinities.
    """
    arr = np.asarray(p, dtype=float)
    if not np.all((arr > 0.0) & (arr < 1.0)):
        raise ValueError("quantile argument must lie strictly inside (0, 1)")
    if np.ndim(p) == 0:
        return float(ndtri(float(p)))
    return ndtri(arr)


def sylvester_hadamard(k: int) -> HadamardMatrix:
    """Hadamard matrix of order 2**k via the doubling construction [[H, H], [H, -H]].

    Supported up to k = MAX_HADAMARD_LOG2; the construction is exact in int64
    far beyond that, but desk-scale schedules never need more.
    """
    if not isinstance(k, (int, np.integer)) or isinstance(k, bool):
        raise ValueError("k must be an integer")
    if k < 0:
        raise ValueError("k must be >= 0")
    if k > MAX_HADAMARD_LOG2:
        raise ValueError(
            f"order 2**{k} exceeds the supported limit 2**{MAX_HADAMARD_LOG2}"
        )
    h = np.ones((1, 1), dtype=np.int64)
    for _ in range(int(k)):
        h = np.block([[h, h], [h, -h]])
    h.setflags(write=False)
    return HadamardMatrix(order=1 << int(k), entries=h)


def largest_root(
    f: Callable[[float], float],
    lo: float,
    hi: float,
    tol: float = 1e-12,
    *,
    grid_points: int = 10_001,
) -> RootResult:
    """Largest x in [lo, hi] with f(x) = 0.

    A uniform grid of ``grid_points`` samples is scanned from hi downward for
    the first sign change, and that cell is bisected to floating-point
    resolution.  A grid point where f vanishes exactly short-circuits; if no
    sign change exists, the largest grid point with |f| <= tol is accepted
    (tangent roots), otherwise NoSignChangeError carries the scan diagnostics.
    """
    if not (np.isfinite(lo) and np.isfinite(hi) and lo < hi):
        raise ValueError("largest_root needs finite bounds with lo < hi")
    if grid_points < 2:
        raise ValueError("grid_points must be at least 2")
    xs = np.linspace(float(lo), float(hi), int(grid_points))
    vals = np.array([f(float(x)) for x in xs], dtype=float)
    if np.any(np.isnan(vals)):
        raise ValueError("f evaluated to NaN on the scan grid")

    for i in range(len(xs) - 1, 0, -1):
        if vals[i] == 0.0:
            return RootResult(float(xs[i]), 0.0, 0)
        if (vals[i] < 0.0) != (vals[i - 1] < 0.0):
            return _bisect(
                f, float(xs[i - 1]), float(xs[i]), float(vals[i - 1]), float(vals[i]), tol
            )
    if vals[0] == 0.0:
        return RootResult(float(xs[0]), 0.0, 0)

    near = np.flatnonzero(np.abs(vals) <= tol)
    if near.size:
        i = int(near[-1])
        return RootResult(float(xs[i]), float(abs(vals[i])), 0)
    raise NoSignChangeError(
        f"no sign change on [{lo}, {hi}]: f(lo)={vals[0]:.6g}, f(hi)={vals[-1]:.6g}, "
        f"min |f| on grid {np.min(np.abs(vals)):.6g} exceeds tol {tol:g}"
    )


def _bisect(f, a: float, b: float, fa: float, fb: float, tol: float) -> RootResult:
    iterations = 0
    while True:
        mid = 0.5 * (a + b)
        if not (a < mid < b):
            break  # bracket is at floating-point resolution
        fm = float(f(mid))
        iterations += 1
        if fm == 0.0:
            return RootResult(mid, 0.0, iterations)
        if (fm < 0.0) == (fa < 0.0):
            a, fa = mid, fm
        else:
            b, fb = mid, fm
    root, res = (a, abs(fa)) if abs(fa) <= abs(fb) else (b, abs(fb))
    if res > tol:
        raise RootFindingError(
            f"bisection hit float resolution at x={root!r} with |f|={res:.3g} > tol {tol:g}"
        )
    return RootResult(root, res, iterations)
