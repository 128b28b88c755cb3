import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from nlsrot.eigensolver import (
    MinimizationProblem,
    Q_closed_form,
    compare_with_oracle,
    constraint_value,
    energy_I,
    equation_residual,
    gn_check,
    minimize,
    project_to_M,
    solve_Q,
    symmetrize,
)
from nlsrot.errors import DegenerateInput, InvalidProblem
from nlsrot.spectral import Field, Grid, l2_norm, norms

from conftest import random_smooth

G = Grid(1, 12.0, 1024)


@pytest.fixture(scope="module")
def defocusing():
    return minimize(MinimizationProblem(2.5, G))


@pytest.fixture(scope="module")
def focusing():
    return minimize(MinimizationProblem(-1.5, G))


@pytest.fixture(scope="module")
def q_l2():
    return l2_norm(Q_closed_form(G))


@pytest.mark.parametrize("nu", [-1.5, 0.0, 2.5])
def test_energy_of_ground_state(nu):
    # <H psi_0, psi_0> = 1/2 for the normalized Gaussian
    psi = G.field(lambda x: math.pi**-0.25 * np.exp(-0.5 * x**2))
    assert energy_I(psi, nu) == pytest.approx(0.25 - 0.5 * nu, abs=1e-12)
    assert energy_I(psi, nu, potential=False) == pytest.approx(0.125 - 0.5 * nu, abs=1e-12)


def test_energy_of_zero():
    assert energy_I(G.zeros(), 2.5) == 0.0


@given(seed=st.integers(0, 2**31 - 1), scale=st.floats(0.1, 10.0))
def test_projection_properties(seed, scale):
    f = random_smooth(G, np.random.default_rng(seed)) + G.field(lambda x: np.exp(-0.5 * x**2))
    p = project_to_M(f)
    assert constraint_value(p) == pytest.approx(1.0, rel=1e-12)
    assert np.max(np.abs(p.values - p.parity().values)) < 1e-14
    assert l2_norm(project_to_M(p) - p) < 1e-12
    assert l2_norm(project_to_M(scale * f) - p) < 1e-10


def test_projection_of_odd_or_zero_raises():
    with pytest.raises(DegenerateInput):
        project_to_M(G.zeros())
    with pytest.raises(DegenerateInput):
        project_to_M(G.field(lambda x: x * np.exp(-0.5 * x**2)))


def test_symmetrize_2d_is_d4_invariant():
    g = Grid(2, 8.0, 32)
    s = symmetrize(random_smooth(g, np.random.default_rng(3)))
    v = s.values
    assert np.max(np.abs(v - v.T)) < 1e-14
    assert np.max(np.abs(s.parity().values - v)) < 1e-14


@pytest.mark.parametrize(
    "nu,sign,pot",
    [(0.5, None, True), (0.4, "defocusing", True), (0.6, "focusing", True), (1.0, "defocusing", False), (0.1, "focusing", False), (1.0, "sideways", True)],
)
def test_invalid_problems(nu, sign, pot):
    with pytest.raises(InvalidProblem):
        MinimizationProblem(nu, G, sign, pot)


def test_sign_is_inferred():
    assert MinimizationProblem(2.5, G).sign == "defocusing"
    assert MinimizationProblem(-1.5, G).sign == "focusing"


def test_defocusing_solution(defocusing):
    s = defocusing
    assert s.converged
    assert s.relative_residual < 1e-8
    assert s.mu < 0
    assert equation_residual(s.psi, 2.5, "defocusing") == pytest.approx(s.residual)
    assert l2_norm(s.psi - abs(s.mu) ** 0.25 * s.minimizer) < 1e-12


def test_defocusing_oracle_agreement(defocusing):
    c = compare_with_oracle(defocusing)
    assert c.agree and not c.multiplicity
    assert c.l2_gap < 1e-6
    assert c.delta_oracle == pytest.approx(c.delta_solver, abs=1e-10)


def test_focusing_solution_and_oracle(focusing, q_l2):
    s = focusing
    assert s.converged and s.mu > 0
    c = compare_with_oracle(s)
    assert c.agree and c.l2_gap < 1e-6
    # a focusing profile carries more mass than the ground-state bound
    assert l2_norm(s.psi) > (1 / 3) ** 0.25 * q_l2


@pytest.mark.parametrize("which", ["defocusing", "focusing"])
def test_delta_and_history(which, request):
    s = request.getfixturevalue(which)
    assert s.delta == pytest.approx(energy_I(s.minimizer, s.nu), abs=1e-14)
    assert constraint_value(s.minimizer) == pytest.approx(1.0, rel=1e-12)
    h = np.array(s.history)
    assert len(h) >= 2
    assert np.all(np.diff(h) <= 1e-13)


def test_focusing_family_grows():
    grads = [norms(minimize(MinimizationProblem(nu, G)).psi, p=()).grad_l2 for nu in (-1.5, -3.5, -5.5)]
    assert grads[0] < grads[1] < grads[2]


def test_ground_state_matches_closed_form():
    q = solve_Q(G)
    exact = Q_closed_form(G)
    assert np.max(np.abs(q.values - exact.values)) < 1e-6
    assert np.all(q.values.real > 0)
    assert np.max(np.abs(q.values.imag)) < 1e-12


def test_gagliardo_nirenberg(q_l2):
    assert gn_check(Q_closed_form(G), q_l2) == pytest.approx(1.0, abs=1e-10)
    assert gn_check(G.field(lambda x: np.exp(-0.5 * x**2)), q_l2) > 1.0
    with pytest.raises(DegenerateInput):
        gn_check(G.zeros(), q_l2)


@given(seed=st.integers(0, 2**31 - 1))
def test_gagliardo_nirenberg_random(seed):
    q_l2 = l2_norm(Q_closed_form(G))
    f = random_smooth(G, np.random.default_rng(seed))
    assert gn_check(f, q_l2) >= 1 - 1e-8


def test_two_dimensional_smoke():
    g = Grid(2, 12.0, 128)
    s = minimize(MinimizationProblem(-1.0, g))
    assert s.converged and s.relative_residual < 1e-8
    v = s.psi.values
    assert np.max(np.abs(v - v.T)) < 1e-12
    q = solve_Q(g)
    assert l2_norm(q) ** 2 == pytest.approx(5.8504, abs=1e-3)
    assert gn_check(q, l2_norm(q)) == pytest.approx(1.0, abs=1e-6)


def test_solve_Q_dimension_mismatch():
    with pytest.raises(ValueError):
        solve_Q(G, d=2)
    with pytest.raises(ValueError):
        Q_closed_form(Grid(2, 8.0, 32))
