"""Scalar weakly-convex prototype penalties.

Each penalty is an even function ``g(x) = psi(|x|)`` with ``psi(0) = 0``.
Three kinds are supported:

``MCP``
    minimax-concave penalty, one knot at ``gamma * lam``.
``SCAD``
    smoothly clipped absolute deviation, knots at ``lam`` and ``gamma * lam``.
``WELSCH``
    ``(lam**2 / 2) * (1 - exp(-x**2 / lam**2))``, smooth and bounded.

All evaluation functions are vectorized: they accept scalars or arrays and
return a float for scalar input, an ``ndarray`` otherwise.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import ParameterError

__all__ = [
    "Kind",
    "PenaltySpec",
    "PenaltyCalculus",
    "WELSCH_RHO",
    "mcp_value",
    "mcp_convex_part",
    "scad_value",
    "welsch_value",
    "penalty_value",
    "penalty_deriv",
    "penalty_second_deriv",
    "penalty_rho",
    "penalty_lipschitz",
    "penalty_saturation",
    "l1_weight",
    "smooth_part_value",
    "smooth_part_deriv",
    "calculus",
]

# min of (1 - 2t) exp(-t) over t >= 0 is attained at t = 3/2
WELSCH_RHO = 2.0 * math.exp(-1.5)


class Kind(str, enum.Enum):
    MCP = "mcp"
    SCAD = "scad"
    WELSCH = "welsch"


@dataclass(frozen=True)
class PenaltySpec:
    """A prototype penalty and its parameters.

    Parameters
    ----------
    kind : Kind or str
        ``"mcp"``, ``"scad"`` or ``"welsch"``.
    lam : float
        Threshold (MCP/SCAD) or scale (Welsch); must be positive.
    gamma : float, optional
        Concavity knob. Required for MCP (``gamma > 1``) and SCAD
        (``gamma > 2``); ignored and stored as ``None`` for Welsch.
    """

    kind: Kind
    lam: float
    gamma: Optional[float] = None

    def __post_init__(self):
        try:
            kind = Kind(self.kind)
        except ValueError:
            raise ParameterError(f"unknown penalty kind {self.kind!r}") from None
        object.__setattr__(self, "kind", kind)
        lam = float(self.lam)
        if not (math.isfinite(lam) and lam > 0):
            raise ParameterError(f"lam must be positive and finite, got {self.lam!r}")
        object.__setattr__(self, "lam", lam)

        if kind is Kind.WELSCH:
            object.__setattr__(self, "gamma", None)
            return
        if self.gamma is None:
            raise ParameterError(f"{kind.value} requires gamma")
        gamma = float(self.gamma)
        floor = 1.0 if kind is Kind.MCP else 2.0
        if not (math.isfinite(gamma) and gamma > floor):
            raise ParameterError(
                f"{kind.value} requires gamma > {floor:g}, got {self.gamma!r}"
            )
        object.__setattr__(self, "gamma", gamma)

    @classmethod
    def mcp(cls, lam=1.0, gamma=2.0):
        return cls(Kind.MCP, lam, gamma)

    @classmethod
    def scad(cls, lam=1.0, gamma=3.7):
        return cls(Kind.SCAD, lam, gamma)

    @classmethod
    def welsch(cls, lam=1.0):
        return cls(Kind.WELSCH, lam)

    @property
    def rho(self) -> float:
        return penalty_rho(self)


@dataclass(frozen=True)
class PenaltyCalculus:
    """Bundle of the callables and constants describing one penalty."""

    value: Callable
    deriv: Callable
    rho: float
    saturation: Optional[float]


def _wrap(x, out):
    if np.ndim(x) == 0:
        return float(out)
    return out


def _require(spec, kind):
    if spec.kind is not kind:
        raise ParameterError(f"expected a {kind.value} spec, got {spec.kind.value}")


def _mcp(a, lam, gamma):
    # a = |x|
    return np.where(a <= gamma * lam, lam * a - a * a / (2.0 * gamma), 0.5 * gamma * lam * lam)


def _scad(a, lam, gamma):
    mid = (2.0 * gamma * lam * a - a * a - lam * lam) / (2.0 * (gamma - 1.0))
    top = 0.5 * lam * lam * (gamma + 1.0)
    return np.where(a <= lam, lam * a, np.where(a <= gamma * lam, mid, top))


def _welsch(x, lam):
    return 0.5 * lam * lam * -np.expm1(-(x / lam) ** 2)


def mcp_value(x, spec: PenaltySpec):
    """Minimax-concave penalty ``lam|x| - x^2/(2 gamma)``, flat beyond ``gamma*lam``."""
    _require(spec, Kind.MCP)
    a = np.abs(np.asarray(x, dtype=float))
    return _wrap(x, _mcp(a, spec.lam, spec.gamma))


def mcp_convex_part(x, spec: PenaltySpec):
    """Convex function ``c`` with ``mcp_value(x) = c(x) - x^2/(2 gamma)``."""
    _require(spec, Kind.MCP)
    xa = np.asarray(x, dtype=float)
    return _wrap(x, _mcp(np.abs(xa), spec.lam, spec.gamma) + xa * xa / (2.0 * spec.gamma))


def scad_value(x, spec: PenaltySpec):
    _require(spec, Kind.SCAD)
    a = np.abs(np.asarray(x, dtype=float))
    return _wrap(x, _scad(a, spec.lam, spec.gamma))


def welsch_value(x, spec: PenaltySpec):
    _require(spec, Kind.WELSCH)
    return _wrap(x, _welsch(np.asarray(x, dtype=float), spec.lam))


def penalty_value(x, spec: PenaltySpec):
    """Evaluate the penalty of any kind."""
    if spec.kind is Kind.MCP:
        return mcp_value(x, spec)
    if spec.kind is Kind.SCAD:
        return scad_value(x, spec)
    return welsch_value(x, spec)


def penalty_deriv(x, spec: PenaltySpec):
    """Exact derivative of the penalty.

    At the origin the MCP/SCAD kink is resolved by the subgradient
    selection 0.
    """
    xa = np.asarray(x, dtype=float)
    lam, gamma = spec.lam, spec.gamma
    if spec.kind is Kind.WELSCH:
        return _wrap(x, xa * np.exp(-(xa / lam) ** 2))
    a = np.abs(xa)
    s = np.sign(xa)
    if spec.kind is Kind.MCP:
        d = np.where(a <= gamma * lam, lam - a / gamma, 0.0)
    else:
        d = np.where(
            a <= lam,
            lam,
            np.where(a <= gamma * lam, (gamma * lam - a) / (gamma - 1.0), 0.0),
        )
    return _wrap(x, s * d)


def penalty_second_deriv(x, spec: PenaltySpec):
    """Second derivative away from the origin and the knots.

    Piecewise penalties return the one-sided value of the branch that
    contains ``|x|`` (same branch convention as :func:`penalty_value`).
    """
    xa = np.asarray(x, dtype=float)
    lam, gamma = spec.lam, spec.gamma
    if spec.kind is Kind.WELSCH:
        t = (xa / lam) ** 2
        return _wrap(x, (1.0 - 2.0 * t) * np.exp(-t))
    a = np.abs(xa)
    if spec.kind is Kind.MCP:
        d = np.where(a <= gamma * lam, -1.0 / gamma, 0.0)
    else:
        d = np.where((a > lam) & (a <= gamma * lam), -1.0 / (gamma - 1.0), 0.0)
    return _wrap(x, d)


def penalty_rho(spec: PenaltySpec) -> float:
    """Closed-form weak-convexity modulus.

    MCP: ``1/gamma``; SCAD: ``1/(gamma - 1)``; Welsch: ``2 exp(-3/2)``
    independently of the scale.
    """
    if spec.kind is Kind.MCP:
        return 1.0 / spec.gamma
    if spec.kind is Kind.SCAD:
        return 1.0 / (spec.gamma - 1.0)
    return WELSCH_RHO


def penalty_lipschitz(spec: PenaltySpec) -> float:
    """Lipschitz constant of the derivative on each smooth piece.

    For MCP/SCAD the jump of the derivative at the origin is excluded; this
    is also the Lipschitz constant of :func:`smooth_part_deriv`.
    For Welsch ``sup |g''| = g''(0) = 1``.
    """
    if spec.kind is Kind.WELSCH:
        return 1.0
    return penalty_rho(spec)


def penalty_saturation(spec: PenaltySpec) -> float:
    """Supremum of the penalty (all three kinds are bounded)."""
    lam, gamma = spec.lam, spec.gamma
    if spec.kind is Kind.MCP:
        return 0.5 * gamma * lam * lam
    if spec.kind is Kind.SCAD:
        return 0.5 * lam * lam * (gamma + 1.0)
    return 0.5 * lam * lam


def l1_weight(spec: PenaltySpec) -> float:
    """Weight ``c`` of the nonsmooth part ``c|x|`` of the penalty (0 for Welsch)."""
    return 0.0 if spec.kind is Kind.WELSCH else spec.lam


def smooth_part_value(x, spec: PenaltySpec):
    """``penalty_value(x) - l1_weight * |x|``; continuously differentiable."""
    xa = np.asarray(x, dtype=float)
    return _wrap(x, np.asarray(penalty_value(xa, spec)) - l1_weight(spec) * np.abs(xa))


def smooth_part_deriv(x, spec: PenaltySpec):
    """Derivative of :func:`smooth_part_value`, continuous everywhere."""
    xa = np.asarray(x, dtype=float)
    return _wrap(x, np.asarray(penalty_deriv(xa, spec)) - l1_weight(spec) * np.sign(xa))


def calculus(spec: PenaltySpec) -> PenaltyCalculus:
    return PenaltyCalculus(
        value=lambda x: penalty_value(x, spec),
        deriv=lambda x: penalty_deriv(x, spec),
        rho=penalty_rho(spec),
        saturation=penalty_saturation(spec),
    )
