"""Numerical certification of weak convexity.

Three grid procedures:

* :func:`estimate_concavity` estimates the concavity measure
  ``kappa(psi) = sup_{0<x1<x2} (psi'(x2) - psi'(x1)) / (x1 - x2)``.  For an
  even penalty ``g(x) = psi(|x|)`` this equals the weak-convexity modulus.
* :func:`certify_weak_convexity` runs a midpoint-convexity test on
  ``value(x) + rho/2 x^2``.
* :func:`estimate_lipschitz_deriv` lower-bounds the Lipschitz constant of a
  derivative, which upper-bounds the modulus of a smooth penalty.

Grid estimates are lower bounds of the true suprema.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Tuple

import numpy as np

from .errors import NumericError, ParameterError
from .penalty import Kind, PenaltySpec

__all__ = [
    "Grid",
    "ConcavityEstimate",
    "CertificationReport",
    "default_grid",
    "certification_grid",
    "estimate_concavity",
    "certify_weak_convexity",
    "estimate_lipschitz_deriv",
]

MIDPOINT_TOL = 1e-10


@dataclass(frozen=True)
class Grid:
    """Sample abscissae ``n`` points on ``[x_min, x_max]``.

    ``spacing`` is ``"log"`` (requires ``x_min > 0``) or ``"linear"``.
    """

    x_min: float
    x_max: float
    n: int
    spacing: str = "log"

    def __post_init__(self):
        if not self.x_min < self.x_max:
            raise ParameterError(f"grid needs x_min < x_max, got [{self.x_min}, {self.x_max}]")
        if self.n < 2:
            raise ParameterError(f"grid needs at least 2 points, got {self.n}")
        if self.spacing not in ("log", "linear"):
            raise ParameterError(f"unknown grid spacing {self.spacing!r}")
        if self.spacing == "log" and self.x_min <= 0:
            raise ParameterError("log grid needs x_min > 0")

    def points(self) -> np.ndarray:
        if self.spacing == "log":
            xs = np.geomspace(self.x_min, self.x_max, self.n)
        else:
            xs = np.linspace(self.x_min, self.x_max, self.n)
        # geomspace/linspace already pin both endpoints; keep them exact
        xs[0], xs[-1] = self.x_min, self.x_max
        return xs


@dataclass(frozen=True)
class ConcavityEstimate:
    kappa: float
    witness_pair: Tuple[float, float]
    grid: Grid


@dataclass(frozen=True)
class CertificationReport:
    """Outcome of a midpoint-convexity test.

    ``witness`` is the first violating triple ``(a, (a+b)/2, b)`` and
    ``defect`` the amount by which the midpoint exceeded the chord there
    (for a passing report, the largest defect seen).
    """

    passed: bool
    rho: float
    defect: float
    witness: Optional[Tuple[float, float, float]] = None

    def __bool__(self):
        return self.passed


def _scale(spec: PenaltySpec) -> float:
    if spec.kind is Kind.WELSCH:
        return 10.0 * spec.lam
    return 10.0 * spec.gamma * spec.lam


def default_grid(spec: PenaltySpec, n: int = 100_000) -> Grid:
    """Log grid on ``[1e-4 lam, 10 gamma lam]`` (``10 lam`` for Welsch)."""
    return Grid(1e-4 * spec.lam, _scale(spec), n, "log")


def certification_grid(spec: PenaltySpec, n: int = 4001) -> Grid:
    """Symmetric linear grid on ``[-X, X]`` with ``X`` as in :func:`default_grid`.

    Linear spacing keeps every cell wide enough for a curvature deficit of
    ``1e-2`` to show up above the midpoint tolerance.
    """
    x = _scale(spec)
    return Grid(-x, x, n, "linear")


def _sample(fn: Callable, xs: np.ndarray) -> np.ndarray:
    try:
        vals = np.asarray(fn(xs), dtype=float)
        if vals.shape != xs.shape:
            raise TypeError
    except TypeError:
        vals = np.array([float(fn(float(x))) for x in xs])
    bad = np.flatnonzero(~np.isfinite(vals))
    if bad.size:
        raise NumericError(f"non-finite sample at x={xs[bad[0]]!r}")
    return vals


def _pair_offsets(n: int):
    off = 1
    while off < n:
        yield off
        off *= 2


def estimate_concavity(psi_deriv: Callable, grid: Grid, exhaustive: bool = False) -> ConcavityEstimate:
    """Estimate the concavity measure of ``psi`` from samples of ``psi'``.

    By default only adjacent pairs and pairs at power-of-two offsets are
    examined; the quotient over a long pair is a weighted mean of the
    adjacent quotients it spans, so this loses nothing on a fixed grid.
    ``exhaustive=True`` scans all ``n(n-1)/2`` pairs.
    """
    if grid.x_min <= 0:
        raise ParameterError("concavity grid must lie in (0, inf)")
    xs = grid.points()
    d = _sample(psi_deriv, xs)
    n = xs.size

    best, bi, bj = -np.inf, 0, 1
    if exhaustive:
        for i in range(n - 1):
            q = (d[i + 1:] - d[i]) / (xs[i] - xs[i + 1:])
            k = int(np.argmax(q))
            if q[k] > best:
                best, bi, bj = float(q[k]), i, i + 1 + k
    else:
        for off in _pair_offsets(n):
            q = (d[off:] - d[:-off]) / (xs[:-off] - xs[off:])
            k = int(np.argmax(q))
            if q[k] > best:
                best, bi, bj = float(q[k]), k, k + off
    return ConcavityEstimate(max(best, 0.0), (float(xs[bi]), float(xs[bj])), grid)


def certify_weak_convexity(value: Callable, rho: float, grid: Grid, tol: float = MIDPOINT_TOL) -> CertificationReport:
    """Midpoint test of ``h(x) = value(x) + rho/2 x^2`` on consecutive grid cells.

    Each cell ``[a, b]`` must satisfy ``h((a+b)/2) <= (h(a) + h(b))/2 + tol``.
    Failure is reported, not raised.
    """
    xs = grid.points()
    a, b = xs[:-1], xs[1:]
    m = 0.5 * (a + b)
    half = 0.5 * rho

    def h(x):
        return _sample(value, x) + half * x * x

    ha, hb, hm = h(a), h(b), h(m)
    defect = hm - 0.5 * (ha + hb)
    bad = np.flatnonzero(defect > tol)
    if bad.size:
        i = bad[0]
        return CertificationReport(False, rho, float(defect[i]), (float(a[i]), float(m[i]), float(b[i])))
    return CertificationReport(True, rho, float(defect.max()))


def estimate_lipschitz_deriv(deriv: Callable, grid: Grid) -> float:
    """Largest absolute difference quotient of ``deriv`` over adjacent grid points."""
    xs = grid.points()
    d = _sample(deriv, xs)
    return float(np.max(np.abs(np.diff(d)) / np.diff(xs)))
