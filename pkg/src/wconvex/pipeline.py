"""High-level helpers shared by the CLI and the acceptance tests."""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .analysis import (
    certification_grid,
    certify_weak_convexity,
    default_grid,
    estimate_concavity,
    estimate_lipschitz_deriv,
)
from .errors import ParameterError
from .penalty import Kind, PenaltySpec, penalty_deriv, penalty_rho, penalty_value
from .regop import FilterBank, RegularizerHandle, build_regularizer, dct3_kernels, diff_kernels, load_bank
from .solver import DenoiseProblem, SolverConfig, SolverTrace, solve

__all__ = [
    "DEFAULT_LAMBDA",
    "DEFAULT_GAMMA",
    "make_spec",
    "make_bank",
    "DenoiseResult",
    "denoise",
    "CertificationRow",
    "certify_penalty",
]

DEFAULT_LAMBDA = {Kind.MCP: 0.05, Kind.SCAD: 0.05, Kind.WELSCH: 0.2}
DEFAULT_GAMMA = {Kind.MCP: 2.0, Kind.SCAD: 3.7}


def make_spec(kind="welsch", lam: Optional[float] = None, gamma: Optional[float] = None) -> PenaltySpec:
    """Build a spec, filling unset parameters with per-kind defaults."""
    kind = Kind(kind)
    lam = DEFAULT_LAMBDA[kind] if lam is None else lam
    if kind is not Kind.WELSCH and gamma is None:
        gamma = DEFAULT_GAMMA[kind]
    return PenaltySpec(kind, lam, gamma)


def make_bank(filters: str, shape) -> FilterBank:
    """``default`` (differences + DCT), ``diff``, ``dct3`` or ``file:<path>``."""
    if filters == "default":
        return FilterBank.create(diff_kernels() + dct3_kernels(), shape)
    if filters == "diff":
        return FilterBank.create(diff_kernels(), shape)
    if filters == "dct3":
        return FilterBank.create(dct3_kernels(), shape)
    if filters.startswith("file:"):
        return load_bank(filters[5:], shape)
    raise ParameterError(f"unknown filter bank {filters!r}")


@dataclass
class DenoiseResult:
    noisy: np.ndarray
    denoised: np.ndarray
    residual: np.ndarray
    trace: SolverTrace
    reg: RegularizerHandle


def denoise(y, spec: PenaltySpec, filters="default", target_rho=0.9, cfg: SolverConfig = SolverConfig()):
    """Denoise ``y``; the residual is ``y - x_hat``."""
    y = np.asarray(y, dtype=float)
    reg = build_regularizer(make_bank(filters, y.shape), spec, target_rho)
    x, trace = solve(DenoiseProblem(y, reg), cfg)
    return DenoiseResult(y, x, y - x, trace, reg)


@dataclass
class CertificationRow:
    spec: PenaltySpec
    rho: float
    kappa: float
    witness: tuple
    lipschitz: float
    pass_above: bool
    fail_below: bool
    seconds: float

    @property
    def ok(self):
        return abs(self.kappa - self.rho) <= 1e-3 and self.pass_above and self.fail_below

    def line(self):
        s = self.spec
        params = f"lam={s.lam:g}" + ("" if s.gamma is None else f",gamma={s.gamma:g}")
        return (f"{s.kind.value}({params}) rho={self.rho:.6f} kappa={self.kappa:.6f} "
                f"lipschitz={self.lipschitz:.6f} certify(kappa+1e-3)={'pass' if self.pass_above else 'FAIL'} "
                f"certify(kappa-1e-2)={'fail' if self.fail_below else 'PASS'} "
                f"[{'ok' if self.ok else 'MISMATCH'}] {self.seconds:.2f}s")


def certify_penalty(spec: PenaltySpec) -> CertificationRow:
    """Estimate kappa, compare with the closed-form modulus, and bracket it by midpoint tests."""
    t0 = time.perf_counter()
    est = estimate_concavity(lambda x: penalty_deriv(x, spec), default_grid(spec))
    grid = certification_grid(spec)
    value = lambda x: penalty_value(x, spec)  # noqa: E731
    above = certify_weak_convexity(value, est.kappa + 1e-3, grid).passed
    below = not certify_weak_convexity(value, est.kappa - 1e-2, grid).passed
    lip = estimate_lipschitz_deriv(lambda x: penalty_deriv(x, spec), default_grid(spec))
    return CertificationRow(spec, penalty_rho(spec), est.kappa, est.witness_pair, lip, above, below,
                            time.perf_counter() - t0)
