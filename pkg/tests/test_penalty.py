import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, optimize

from wconvex.errors import ParameterError
from wconvex.penalty import (
    WELSCH_RHO,
    Kind,
    PenaltySpec,
    calculus,
    mcp_convex_part,
    mcp_value,
    penalty_deriv,
    penalty_lipschitz,
    penalty_rho,
    penalty_saturation,
    penalty_second_deriv,
    penalty_value,
    scad_value,
    smooth_part_deriv,
    smooth_part_value,
    welsch_value,
)

SPECS = [
    PenaltySpec.mcp(1.0, 2.0),
    PenaltySpec.mcp(0.3, 1.5),
    PenaltySpec.scad(1.0, 3.0),
    PenaltySpec.scad(0.5, 3.7),
    PenaltySpec.welsch(1.0),
    PenaltySpec.welsch(0.2),
]


def knots(spec):
    if spec.kind is Kind.MCP:
        return [0.0, spec.gamma * spec.lam]
    if spec.kind is Kind.SCAD:
        return [0.0, spec.lam, spec.gamma * spec.lam]
    return [0.0]


def reach(spec):
    return 10 * spec.lam * (spec.gamma or 1.0)


# --- construction -----------------------------------------------------------

@pytest.mark.parametrize("args", [
    (Kind.MCP, 0.0, 2.0),
    (Kind.MCP, -1.0, 2.0),
    (Kind.MCP, 1.0, 1.0),
    (Kind.MCP, 1.0, None),
    (Kind.SCAD, 1.0, 2.0),
    (Kind.SCAD, 1.0, 1.5),
    (Kind.WELSCH, 0.0, None),
    (Kind.WELSCH, math.inf, None),
    ("huber", 1.0, 2.0),
])
def test_invalid_specs_rejected_at_construction(args):
    with pytest.raises(ParameterError):
        PenaltySpec(*args)


def test_welsch_ignores_gamma():
    assert PenaltySpec("welsch", 1.0, 7.0).gamma is None


def test_wrong_kind_is_parameter_error():
    with pytest.raises(ParameterError):
        mcp_value(1.0, PenaltySpec.welsch())
    with pytest.raises(ParameterError):
        welsch_value(1.0, PenaltySpec.mcp())


# --- spec examples ----------------------------------------------------------

def test_mcp_values():
    s = PenaltySpec.mcp(1.0, 2.0)
    assert mcp_value(0.0, s) == 0.0
    assert mcp_value(3.0, s) == 1.0
    assert mcp_value(1.0, s) == pytest.approx(0.75, abs=1e-15)
    # cross-check: integrate the derivative from 0 to 1
    area, _ = integrate.quad(lambda t: penalty_deriv(t, s), 0.0, 1.0)
    assert area == pytest.approx(0.75, abs=1e-12)


def test_mcp_convex_part_values():
    s = PenaltySpec.mcp(1.0, 2.0)
    assert mcp_convex_part(0.0, s) == 0.0
    assert mcp_convex_part(3.0, s) == pytest.approx(3.25, abs=1e-15)
    assert mcp_convex_part(1.0, s) == pytest.approx(1.0, abs=1e-15)


def test_scad_values():
    s = PenaltySpec.scad(1.0, 3.0)
    assert scad_value(0.0, s) == 0.0
    assert scad_value(0.5, s) == 0.5
    assert scad_value(10.0, s) == 2.0
    # saturation equals the numeric maximum of the value
    res = optimize.minimize_scalar(lambda x: -scad_value(x, s), bounds=(0, 20), method="bounded")
    assert -res.fun == pytest.approx(2.0, abs=1e-9)


@pytest.mark.parametrize("spec", [PenaltySpec.scad(1.0, 3.0), PenaltySpec.scad(0.5, 3.7), PenaltySpec.mcp(1, 2)])
def test_piecewise_continuity_at_knots(spec):
    for k in knots(spec)[1:]:
        for f in (penalty_value, penalty_deriv):
            left, right = f(k * (1 - 1e-12), spec), f(k * (1 + 1e-12), spec)
            assert left == pytest.approx(right, abs=1e-10)


def test_welsch_values():
    s = PenaltySpec.welsch(1.0)
    assert welsch_value(0.0, s) == 0.0
    for lam in (0.1, 1.0, 3.0):
        sl = PenaltySpec.welsch(lam)
        assert welsch_value(100 * lam, sl) == pytest.approx(lam * lam / 2, rel=1e-12)
    expected = 0.5 * (1 - math.exp(-1))
    assert welsch_value(1.0, s) == pytest.approx(expected, rel=1e-14)
    assert expected == pytest.approx(0.316060, abs=1e-6)
    area, _ = integrate.quad(lambda t: penalty_deriv(t, s), 0.0, 1.0)
    assert area == pytest.approx(expected, abs=1e-12)


def test_derivative_examples():
    for s in SPECS:
        assert penalty_deriv(0.0, s) == 0.0
    assert penalty_deriv(1.0, PenaltySpec.mcp(1, 2)) == 0.5
    assert penalty_deriv(1.0, PenaltySpec.welsch(1)) == pytest.approx(math.exp(-1), rel=1e-15)


def test_rho_examples():
    assert penalty_rho(PenaltySpec.mcp(1, 2)) == 0.5
    assert penalty_rho(PenaltySpec.scad(1, 3)) == 0.5
    assert penalty_rho(PenaltySpec.welsch(0.3)) == penalty_rho(PenaltySpec.welsch(4.0))
    assert WELSCH_RHO == pytest.approx(0.446260, abs=1e-6)


def test_welsch_rho_against_numeric_minimum():
    # g''(x) = exp(-t)(1 - 2t), t = x^2/lam^2
    res = optimize.minimize_scalar(lambda t: math.exp(-t) * (1 - 2 * t), bounds=(0, 10), method="bounded",
                                   options={"xatol": 1e-12})
    assert res.x == pytest.approx(1.5, abs=1e-6)
    assert -res.fun == pytest.approx(penalty_rho(PenaltySpec.welsch()), abs=1e-12)


def test_scad_rho_is_minus_middle_curvature():
    s = PenaltySpec.scad(1.0, 3.0)
    xs = np.linspace(1.01, 2.99, 50)
    assert np.allclose(penalty_second_deriv(xs, s), -penalty_rho(s))


def test_saturation_and_calculus():
    for s in SPECS:
        c = calculus(s)
        assert c.rho == penalty_rho(s)
        assert c.saturation == pytest.approx(c.value(1e3 * reach(s)), rel=1e-12)
        assert c.value(2.0) == penalty_value(2.0, s)
        assert c.deriv(2.0) == penalty_deriv(2.0, s)
    assert penalty_saturation(PenaltySpec.mcp(1, 2)) == 1.0
    assert penalty_saturation(PenaltySpec.scad(1, 3)) == 2.0


def test_lipschitz_constants():
    assert penalty_lipschitz(PenaltySpec.welsch(0.2)) == 1.0
    assert penalty_lipschitz(PenaltySpec.mcp(1, 4)) == 0.25
    assert penalty_lipschitz(PenaltySpec.scad(1, 3)) == 0.5


def test_scalar_and_array_io():
    s = PenaltySpec.mcp()
    assert isinstance(penalty_value(1.0, s), float)
    out = penalty_value(np.array([[1.0, 2.0]]), s)
    assert isinstance(out, np.ndarray) and out.shape == (1, 2)


# --- properties -------------------------------------------------------------

@pytest.mark.parametrize("spec", SPECS)
def test_even_and_zero_at_origin(spec):
    rng = np.random.default_rng(0)
    x = rng.uniform(-reach(spec), reach(spec), 10_000)
    assert np.array_equal(penalty_value(-x, spec), penalty_value(x, spec))
    assert np.array_equal(penalty_deriv(-x, spec), -penalty_deriv(x, spec))
    assert penalty_value(0.0, spec) == 0.0


@pytest.mark.parametrize("spec", SPECS)
def test_value_nondecreasing_on_half_line(spec):
    x = np.linspace(0, reach(spec), 20_001)
    assert np.all(np.diff(penalty_value(x, spec)) >= -1e-15)


@pytest.mark.parametrize("spec", SPECS)
def test_derivative_weakly_monotone_and_tight(spec):
    rng = np.random.default_rng(1)
    rho = penalty_rho(spec)
    x = np.sort(rng.uniform(0, reach(spec), 4000))
    d = penalty_deriv(x, spec)
    # all ordered pairs of the sample
    dx = x[None, :] - x[:, None]
    dd = d[None, :] - d[:, None]
    upper = dx > 0
    assert np.all(dd[upper] >= -rho * dx[upper] - 1e-12)
    # tightness: (rho - 1e-3) weak monotonicity is violated somewhere
    assert np.any(dd[upper] < -(rho - 1e-3) * dx[upper])


@pytest.mark.parametrize("spec", [s for s in SPECS if s.kind is Kind.MCP])
def test_mcp_decomposition(spec):
    x = np.random.default_rng(2).uniform(-reach(spec), reach(spec), 10_000)
    diff = mcp_convex_part(x, spec) - x * x / (2 * spec.gamma)
    assert np.max(np.abs(diff - mcp_value(x, spec))) <= 1e-12


@pytest.mark.parametrize("spec", SPECS)
def test_derivative_matches_central_differences(spec):
    rng = np.random.default_rng(3)
    x = rng.uniform(-reach(spec) / 5, reach(spec) / 5, 2000)
    ks = np.array(knots(spec))
    x = x[np.min(np.abs(np.abs(x)[:, None] - ks[None, :]), axis=1) >= 1e-2]
    h = 1e-5
    fd = (penalty_value(x + h, spec) - penalty_value(x - h, spec)) / (2 * h)
    d = penalty_deriv(x, spec)
    assert np.max(np.abs(d - fd) / np.maximum(1.0, np.abs(d))) <= 1e-5


@pytest.mark.parametrize("spec", SPECS)
def test_second_derivative_matches_differences_of_first(spec):
    x = np.linspace(-reach(spec) / 5, reach(spec) / 5, 997)
    ks = np.array(knots(spec))
    x = x[np.min(np.abs(np.abs(x)[:, None] - ks[None, :]), axis=1) >= 1e-2]
    h = 1e-6
    fd = (penalty_deriv(x + h, spec) - penalty_deriv(x - h, spec)) / (2 * h)
    assert np.allclose(penalty_second_deriv(x, spec), fd, atol=1e-6)


@pytest.mark.parametrize("spec", SPECS)
def test_smooth_split(spec):
    x = np.linspace(-reach(spec), reach(spec), 1001)
    lam1 = 0.0 if spec.kind is Kind.WELSCH else spec.lam
    assert np.allclose(smooth_part_value(x, spec) + lam1 * np.abs(x), penalty_value(x, spec), atol=1e-14)
    d = smooth_part_deriv(x, spec)
    # continuous through the origin
    assert abs(smooth_part_deriv(1e-12, spec)) < 1e-9
    assert np.all(np.abs(np.diff(d)) <= penalty_lipschitz(spec) * np.diff(x) + 1e-12)


@settings(max_examples=200, deadline=None)
@given(
    kind=st.sampled_from(["mcp", "scad", "welsch"]),
    lam=st.floats(0.01, 10.0),
    extra=st.floats(0.01, 20.0),
    x=st.floats(-1e3, 1e3, allow_nan=False),
)
def test_value_bounded_by_saturation(kind, lam, extra, x):
    gamma = {"mcp": 1.0, "scad": 2.0}.get(kind, 0.0) + extra
    s = PenaltySpec(kind, lam, gamma)
    v = penalty_value(x, s)
    assert 0.0 <= v <= penalty_saturation(s) * (1 + 1e-14)
