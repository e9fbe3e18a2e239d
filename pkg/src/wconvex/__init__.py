"""Weakly-convex regularization: prototype penalties, certification, and denoising."""

from . import _backend
from .errors import FormatError, NumericError, ParameterError, ShapeError, WconvexError
from .penalty import (
    Kind,
    PenaltySpec,
    mcp_convex_part,
    mcp_value,
    penalty_deriv,
    penalty_rho,
    penalty_value,
    scad_value,
    welsch_value,
)

BACKEND = _backend.NAME

__version__ = "0.1.0"
