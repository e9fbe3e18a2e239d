"""Proximal operators of the scalar penalties.

``prox(y) = argmin_x 1/2 (x - y)^2 + step * g(x)``, applied element-wise.
The minimization is strictly convex when ``step * rho < 1``; queries outside
that regime are rejected.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _backend
from .errors import NumericError, ParameterError
from .penalty import Kind, PenaltySpec, penalty_deriv, penalty_rho, penalty_value

__all__ = [
    "ProxQuery",
    "prox",
    "prox_mcp",
    "prox_scad",
    "prox_welsch",
    "prox_oracle",
    "soft_threshold",
]

NEWTON_RTOL = 1e-12
NEWTON_MAX_ITER = 100


@dataclass(frozen=True)
class ProxQuery:
    y: float
    spec: PenaltySpec
    step: float = 1.0

    def __post_init__(self):
        _check_step(self.spec, self.step)


def _check_step(spec, step):
    if not step > 0:
        raise ParameterError(f"step must be positive, got {step!r}")
    if step * penalty_rho(spec) >= 1.0:
        raise ParameterError(
            f"step * rho = {step * penalty_rho(spec):.6g} >= 1: prox objective is not convex"
        )


def _wrap(y, out):
    return float(out) if np.ndim(y) == 0 else out


def soft_threshold(y, t):
    y = np.asarray(y, dtype=float)
    return np.sign(y) * np.maximum(np.abs(y) - t, 0.0)


def _firm(y, lam, gamma):
    a = np.abs(y)
    mid = np.sign(y) * gamma * (a - lam) / (gamma - 1.0)
    return np.where(a <= lam, 0.0, np.where(a <= gamma * lam, mid, y))


def prox_mcp(y, spec: PenaltySpec, step: float = 1.0):
    """Firm thresholding.

    ``0`` for ``|y| <= lam``, ``sign(y) gamma (|y| - lam)/(gamma - 1)`` up to
    ``gamma lam``, identity beyond.  ``step`` is absorbed exactly by
    ``(lam, gamma) -> (step lam, gamma/step)``.
    """
    if spec.kind is not Kind.MCP:
        raise ParameterError(f"prox_mcp needs an MCP spec, got {spec.kind.value}")
    _check_step(spec, step)
    ya = np.asarray(y, dtype=float)
    return _wrap(y, _firm(ya, step * spec.lam, spec.gamma / step))


def prox_scad(y, spec: PenaltySpec, step: float = 1.0):
    """Three-branch SCAD thresholding (``step == 1``); bisection otherwise."""
    if spec.kind is not Kind.SCAD:
        raise ParameterError(f"prox_scad needs a SCAD spec, got {spec.kind.value}")
    _check_step(spec, step)
    ya = np.asarray(y, dtype=float)
    if step != 1.0:
        # a scaled SCAD is not a SCAD (knots do not move with lam)
        return _wrap(y, _prox_bisect(ya, spec, step))
    lam, gamma = spec.lam, spec.gamma
    a = np.abs(ya)
    mid = np.sign(ya) * ((gamma - 1.0) * a - gamma * lam) / (gamma - 2.0)
    out = np.where(
        a <= 2.0 * lam,
        soft_threshold(ya, lam),
        np.where(a <= gamma * lam, mid, ya),
    )
    return _wrap(y, out)


def prox_welsch(y, spec: PenaltySpec, step: float = 1.0, backend=None):
    """Safeguarded Newton solve of ``x - y + step * g'(x) = 0`` in ``[0, |y|] sign(y)``.

    Stops when the residual is at most ``1e-12 max(1, |y|)``; a Newton step
    leaving the current bracket is replaced by bisection.
    """
    if spec.kind is not Kind.WELSCH:
        raise ParameterError(f"prox_welsch needs a Welsch spec, got {spec.kind.value}")
    _check_step(spec, step)
    ya = np.asarray(y, dtype=float)
    flat = np.ascontiguousarray(ya.reshape(-1))
    try:
        out = _backend.get(backend).prox_welsch(flat, spec.lam, float(step), NEWTON_RTOL, NEWTON_MAX_ITER)
    except ArithmeticError as exc:
        raise NumericError(str(exc)) from None
    return _wrap(y, np.asarray(out).reshape(ya.shape))


def _prox_bisect(ya, spec, step, iters=200):
    # kinked penalties: zero whenever |y| lies inside the subdifferential at 0
    a = np.abs(ya)
    c = step * spec.lam
    lo = np.zeros_like(a)
    hi = a.copy()
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        f = mid - a + step * np.asarray(penalty_deriv(mid, spec))
        pos = f > 0
        hi = np.where(pos, mid, hi)
        lo = np.where(pos, lo, mid)
    x = 0.5 * (lo + hi)
    return np.where(a <= c, 0.0, np.sign(ya) * x)


def prox(y, spec: PenaltySpec = None, step: float = 1.0):
    """Dispatch to the prox of ``spec.kind``."""
    if isinstance(y, ProxQuery):
        y, spec, step = y.y, y.spec, y.step
    if spec.kind is Kind.MCP:
        return prox_mcp(y, spec, step)
    if spec.kind is Kind.SCAD:
        return prox_scad(y, spec, step)
    return prox_welsch(y, spec, step)


def prox_oracle(y, spec: PenaltySpec, step: float = 1.0, x_min=None, x_max=None, n: int = 100_001,
                ternary_iters: int = 100, chunk: int = 64):
    """Brute-force prox: grid argmin, then ternary search in the winning cell.

    Independent of the closed forms; used to validate them.  The default
    bracket is ``[-|y|max - 1, |y|max + 1]``.
    """
    _check_step(spec, step)
    ya = np.asarray(y, dtype=float)
    flat = ya.reshape(-1)
    amax = float(np.max(np.abs(flat))) if flat.size else 0.0
    x_min = -amax - 1.0 if x_min is None else float(x_min)
    x_max = amax + 1.0 if x_max is None else float(x_max)
    if not (x_min <= -amax and x_max >= amax):
        raise ParameterError("oracle bracket must contain [-|y|, |y|]")
    if n < 100_000:
        raise ParameterError("oracle needs n >= 1e5 grid points")

    xs = np.linspace(x_min, x_max, n)
    gx = step * np.asarray(penalty_value(xs, spec))
    out = np.empty_like(flat)
    for s in range(0, flat.size, chunk):
        yy = flat[s:s + chunk, None]
        obj = 0.5 * (xs[None, :] - yy) ** 2 + gx[None, :]
        idx = np.argmin(obj, axis=1)
        lo = xs[np.maximum(idx - 1, 0)]
        hi = xs[np.minimum(idx + 1, n - 1)]
        yv = yy[:, 0]

        def f(x):
            return 0.5 * (x - yv) ** 2 + step * np.asarray(penalty_value(x, spec))

        for _ in range(ternary_iters):
            m1 = lo + (hi - lo) / 3.0
            m2 = hi - (hi - lo) / 3.0
            left = f(m1) <= f(m2)
            hi = np.where(left, m2, hi)
            lo = np.where(left, lo, m1)
        out[s:s + chunk] = 0.5 * (lo + hi)
    return _wrap(y, out.reshape(ya.shape))
