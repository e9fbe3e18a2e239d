import numpy as np
import pytest

from wconvex.errors import NumericError, ParameterError, ShapeError
from wconvex.penalty import PenaltySpec, penalty_value
from wconvex.prox import prox
from wconvex.regop import FilterBank, build_regularizer, conv_forward, default_kernels, diff_kernels, reg_grad
from wconvex.solver import (
    DenoiseProblem,
    SolverConfig,
    auto_step,
    denoiser_lipschitz_check,
    gradient_residual,
    objective,
    solve,
    solve_unfolded,
)


def welsch_problem(seed=0, shape=(8, 8), lam=0.5, target=0.9):
    rng = np.random.default_rng(seed)
    y = rng.uniform(0, 1, shape)
    reg = build_regularizer(FilterBank.create(default_kernels(), shape), PenaltySpec.welsch(lam), target)
    return DenoiseProblem(y, reg)


def zero_weight(shape, spec=PenaltySpec.welsch(1.0)):
    bank = FilterBank.create(diff_kernels(), shape)
    return build_regularizer(bank.with_weights([0.0, 0.0]), spec, 0.9)


def identity_problem(spec, y):
    bank = FilterBank.create([[[1.0]]], y.shape)
    return DenoiseProblem(y, build_regularizer(bank, spec, 0.99))


# --- objective --------------------------------------------------------------

def test_objective_trivial_cases():
    rng = np.random.default_rng(0)
    y = rng.uniform(0, 1, (6, 6))
    p = DenoiseProblem(y, zero_weight(y.shape))
    assert objective(y, p) == 0.0
    reg = build_regularizer(FilterBank.create(diff_kernels(), y.shape), PenaltySpec.welsch(), 0.9)
    assert objective(np.zeros_like(y), DenoiseProblem(y, reg)) == pytest.approx(0.5 * np.sum(y ** 2), rel=1e-14)


def test_objective_compositional_oracle():
    p = welsch_problem(1)
    x = np.random.default_rng(2).standard_normal(p.y.shape)
    total = 0.5 * np.sum((p.y - x) ** 2)
    for k, mu, spec in zip(p.reg.bank.kernels, p.reg.bank.weights, p.reg.penalties):
        total += mu * np.sum(penalty_value(conv_forward(x, k), spec))
    assert objective(x, p) == pytest.approx(total, rel=1e-13)


def test_problem_validation():
    p = welsch_problem()
    with pytest.raises(ShapeError):
        DenoiseProblem(np.zeros((4, 4)), p.reg)
    with pytest.raises(ShapeError):
        objective(np.zeros((4, 4)), p)
    with pytest.raises(ParameterError):
        DenoiseProblem(np.full(p.y.shape, np.nan), p.reg)
    with pytest.raises(ParameterError):
        SolverConfig(max_iters=0)
    with pytest.raises(ParameterError):
        solve_unfolded(p, -1)


# --- solve ------------------------------------------------------------------

def test_zero_weight_returns_y():
    y = np.random.default_rng(3).uniform(0, 1, (5, 7))
    x, tr = solve(DenoiseProblem(y, zero_weight(y.shape)))
    assert np.array_equal(x, y)
    assert tr.iters_run <= 2 and tr.converged


@pytest.mark.parametrize("spec", [PenaltySpec.mcp(1.0, 2.0), PenaltySpec.mcp(0.4, 3.0),
                                  PenaltySpec.scad(1.0, 3.0), PenaltySpec.welsch(1.0)])
def test_identity_filter_reproduces_scalar_prox(spec):
    y = np.random.default_rng(4).uniform(-3 * spec.lam * (spec.gamma or 1), 3 * spec.lam * (spec.gamma or 1), (1, 64))
    p = identity_problem(spec, y)
    x, tr = solve(p, SolverConfig(max_iters=5000, tol=1e-12))
    assert tr.converged
    mu = p.reg.bank.weights[0]
    assert np.max(np.abs(x - prox(y, spec, mu))) <= 1e-6


@pytest.mark.parametrize("seed", range(3))
def test_welsch_convergence_contract(seed):
    p = welsch_problem(seed)
    x, tr = solve(p, SolverConfig(max_iters=5000, tol=1e-8))
    assert tr.converged
    assert tr.grad_residual[-1] <= 1e-8
    assert gradient_residual(x, p) == pytest.approx(tr.grad_residual[-1], rel=1e-6, abs=1e-14)
    assert np.all(np.diff(tr.objective) <= 1e-12)
    assert len(tr.objective) == tr.iters_run + 1


def test_linear_rate():
    p = welsch_problem(5, shape=(16, 16))
    x, tr = solve(p, SolverConfig(max_iters=5000, tol=1e-13))
    f = np.array(tr.objective)
    gap = f[:-1] - f[-1]
    keep = gap > 1e-11
    gap = gap[keep]
    t = np.arange(gap.size)
    slope = np.polyfit(t, np.log(gap), 1)[0]
    assert np.exp(slope) <= tr.rate_bound * 1.05
    assert tr.rate_bound == pytest.approx(1 - auto_step(p.reg) * (1 - p.reg.rho_total))


def test_keep_every_and_trace_fields():
    p = welsch_problem(6)
    x, tr = solve(p, SolverConfig(max_iters=5000, tol=1e-10, keep_every=5))
    assert 0 in tr.iterates_kept and tr.iters_run in tr.iterates_kept
    assert all(k % 5 == 0 for k in tr.iterates_kept if k not in (0, tr.iters_run))
    assert np.array_equal(tr.iterates_kept[tr.iters_run], x)
    assert tr.step == auto_step(p.reg)


def test_max_iters_without_convergence():
    p = welsch_problem(7)
    x, tr = solve(p, SolverConfig(max_iters=3, tol=1e-14))
    assert tr.iters_run == 3 and not tr.converged


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_non_finite_objective_raises():
    p = welsch_problem(8)
    with pytest.raises(NumericError):
        solve(p, SolverConfig(max_iters=50, step=1e200))


def test_determinism():
    p = welsch_problem(9)
    a, _ = solve(p)
    b, _ = solve(p)
    assert np.array_equal(a, b)


# --- unfolded ---------------------------------------------------------------

def test_unfolded_examples():
    p = welsch_problem(10)
    assert np.array_equal(solve_unfolded(p, 0), p.y)
    one = solve_unfolded(p, 1)
    assert np.allclose(one, p.y - auto_step(p.reg) * reg_grad(p.y, p.reg), atol=1e-15)


def test_unfolded_matches_config_mode():
    p = welsch_problem(11)
    x, tr = solve(p, SolverConfig(unfold_k=25))
    assert tr.iters_run == 25
    assert np.array_equal(x, solve_unfolded(p, 25))


def test_unfolded_converges_to_solution():
    p = welsch_problem(12)
    ref, tr = solve(p, SolverConfig(max_iters=10_000, tol=1e-10))
    assert tr.converged
    xk = solve_unfolded(p, 1000)
    assert np.linalg.norm(xk - ref) / np.linalg.norm(p.y) <= 1e-5


# --- Lipschitz check --------------------------------------------------------

def test_lipschitz_check_trivial():
    p = welsch_problem(13)
    rep = denoiser_lipschitz_check(p.reg, [(p.y, p.y)])
    assert rep.passed and rep.ratios == [1.0]
    y1, y2 = welsch_problem(14).y, welsch_problem(15).y
    rep = denoiser_lipschitz_check(zero_weight(y1.shape), [(y1, y2)])
    assert rep.passed and rep.ratios[0] == pytest.approx(1.0, abs=1e-15) and rep.bound == 1.0


def test_lipschitz_check_random_pairs():
    reg = welsch_problem().reg
    rng = np.random.default_rng(16)
    pairs = [(rng.uniform(0, 1, (8, 8)), rng.uniform(0, 1, (8, 8))) for _ in range(5)]
    rep = denoiser_lipschitz_check(reg, pairs)
    assert rep.passed
    assert max(rep.ratios) <= rep.bound
