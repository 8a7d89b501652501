import math

import numpy as np
import pytest
from scipy.optimize import linprog

from mdl_bell.errors import InvalidArgumentError
from mdl_bell.mdl_inequality import (
    BellFunctional,
    JointDistribution,
    chsh_functional,
    critical_ell,
    eq4_functional,
    evaluate,
)
from mdl_bell.mdl_oracle import (
    NoThresholdError,
    all_strategies,
    enumerate_vertices,
    maximize,
    random_model,
    threshold,
)
from mdl_bell.quantum_core import CorrelationTable, born_table, golden_state, paper_settings

ELL_GRID = np.linspace(0.0, 0.25, 25)


def lp_maximum(f: BellFunctional, ell: float) -> float:
    """Maximum of f over l-MDL models by linear programming.

    Variables w[s, x, y] >= 0: probability of deterministic strategy s with
    input pair (x, y). Components sharing a strategy can be merged because the
    constraint q >= l is convex, so the model set is exactly
    {w : w[s, xy] >= l * sum_xy' w[s, xy'], sum w = 1}.
    """
    strategies = all_strategies()
    n = 16 * 4
    c = np.zeros(n)
    for si, s in enumerate(strategies):
        for k, (x, y) in enumerate([(0, 0), (0, 1), (1, 0), (1, 1)]):
            c[4 * si + k] = f.coefficients[s.a_of_x[x], s.b_of_y[y], x, y]
    A_ub, b_ub = [], []
    for si in range(16):
        for k in range(4):
            row = np.zeros(n)
            row[4 * si: 4 * si + 4] = ell
            row[4 * si + k] -= 1.0
            A_ub.append(row)
            b_ub.append(0.0)
    res = linprog(-c, A_ub=np.array(A_ub), b_ub=b_ub, A_eq=np.ones((1, n)), b_eq=[1.0], bounds=(0, None), method="highs")
    assert res.status == 0
    return -res.fun


class TestVertices:
    @pytest.mark.parametrize("ell", [0.0, 0.1, 0.2, 0.25])
    def test_count_and_validity(self, ell):
        vs = enumerate_vertices(ell)
        assert len(vs) == 64
        for v in vs:
            j = v.joint()
            assert j.p.sum() == pytest.approx(1.0, abs=1e-12)

    def test_uniform_at_quarter(self):
        vs = enumerate_vertices(0.25)
        assert all(np.allclose(v.inputs.q, 0.25) for v in vs)
        assert len({v.joint().p.tobytes() for v in vs}) == 16

    def test_point_masses_at_zero(self):
        for v in enumerate_vertices(0.0):
            assert sorted(v.inputs.q.ravel()) == [0, 0, 0, 1]

    def test_permutations_at_tenth(self):
        for v in enumerate_vertices(0.1):
            assert sorted(v.inputs.q.ravel()) == pytest.approx([0.1, 0.1, 0.1, 0.7])

    @pytest.mark.parametrize("ell", [-0.1, 0.3])
    def test_out_of_range(self, ell):
        with pytest.raises(InvalidArgumentError):
            enumerate_vertices(ell)

    def test_enumeration_order(self):
        vs = enumerate_vertices(0.1)
        assert vs[0].strategy.bits == (0, 0, 0, 0) and vs[0].peak == (0, 0)
        assert vs[1].peak == (0, 1)
        assert vs[4].strategy.bits == (0, 0, 0, 1)


class TestMaximize:
    def test_joint_form_tenth(self):
        value, vertex = maximize(eq4_functional(0.1), 0.1)
        assert value == pytest.approx(0.0, abs=1e-12)
        # first maximiser in enumeration order: a = b = 0 everywhere, peak on (0, 0)
        assert vertex.strategy.bits == (0, 0, 0, 0)

    @pytest.mark.parametrize("ell", [0.01, 0.05, 0.146, 0.25])
    def test_joint_form_bound_is_zero(self, ell):
        assert maximize(eq4_functional(ell), ell)[0] == pytest.approx(0.0, abs=1e-12)

    def test_zero_functional(self):
        assert maximize(BellFunctional.zero(), 0.2)[0] == 0.0

    @pytest.mark.parametrize("ell", ELL_GRID)
    def test_joint_form_tight_on_grid(self, ell):
        assert abs(maximize(eq4_functional(ell), ell)[0]) <= 1e-12

    @pytest.mark.parametrize("ell", ELL_GRID)
    def test_chsh_bound(self, ell):
        assert maximize(chsh_functional(), ell)[0] == pytest.approx(1 - 2 * ell, abs=1e-12)

    @pytest.mark.parametrize("ell", [0.0, 0.07, 0.13, 0.25])
    def test_agrees_with_linear_program(self, ell):
        rng = np.random.default_rng(int(ell * 1000))
        functionals = [eq4_functional(ell), chsh_functional()]
        functionals += [BellFunctional(rng.normal(size=(2, 2, 2, 2))) for _ in range(5)]
        for f in functionals:
            assert maximize(f, ell)[0] == pytest.approx(lp_maximum(f, ell), abs=1e-8)


class TestRandomModels:
    def test_deterministic(self):
        a, b = random_model(0.1, 5, 42), random_model(0.1, 5, 42)
        np.testing.assert_array_equal(a.joint().p, b.joint().p)

    def test_quarter_uniform(self):
        m = random_model(0.25, 6, 1)
        for _, _, q in m.components:
            np.testing.assert_array_equal(q.q, 0.25)

    def test_inputs_respect_bound(self):
        m = random_model(0.2, 10, 3)
        for _, _, q in m.components:
            assert np.all(q.q >= 0.2 - 1e-12)

    def test_joint_form_soundness_sweep(self):
        rng = np.random.default_rng(2024)
        worst = -np.inf
        for i in range(2000):
            ell = float(rng.uniform(0, 0.25))
            m = random_model(ell, int(rng.integers(1, 6)), i)
            worst = max(worst, evaluate(eq4_functional(ell), m.joint()))
        assert worst <= 1e-12

    def test_vertex_optimality(self):
        rng = np.random.default_rng(9)
        f = BellFunctional(rng.normal(size=(2, 2, 2, 2)))
        for i in range(200):
            ell = float(rng.uniform(0, 0.25))
            assert evaluate(f, random_model(ell, 3, i).joint()) <= maximize(f, ell)[0] + 1e-12


class TestThreshold:
    def test_chsh(self):
        t = threshold(lambda _ell: chsh_functional(), lambda _ell: math.sqrt(2) / 2)
        assert t == pytest.approx((2 - math.sqrt(2)) / 4, abs=1e-6)

    def test_fixed_functional_accepted(self):
        t = threshold(chsh_functional(), lambda _ell: math.sqrt(2) / 2)
        assert t == pytest.approx((2 - math.sqrt(2)) / 4, abs=1e-6)

    def test_ideal_quantum_violates_everywhere(self):
        j = JointDistribution.from_conditional(born_table(golden_state(), paper_settings()))
        t = threshold(eq4_functional, lambda ell: evaluate(eq4_functional(ell), j))
        assert t == pytest.approx(0.0, abs=1e-8)

    def test_table1_raw_matches_closed_form(self):
        table = CorrelationTable.from_hardy_terms(2939 / 35183, 129 / 36658, 114 / 34693, 130 / 36962)
        j = JointDistribution.from_conditional(table)
        t = threshold(eq4_functional, lambda ell: evaluate(eq4_functional(ell), j))
        assert t == pytest.approx(critical_ell(table).value, abs=1e-8)
        assert t == pytest.approx(0.0902, abs=1e-4)

    def test_no_crossing(self):
        with pytest.raises(NoThresholdError):
            threshold(chsh_functional(), lambda _ell: 0.0)
