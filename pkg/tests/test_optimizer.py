import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mdl_bell.errors import InvalidArgumentError
from mdl_bell.mdl_inequality import critical_ell
from mdl_bell.optimizer import (
    DEGENERATE_SENTINEL,
    ObjectiveSpec,
    ParameterPoint,
    hardy_terms,
    objective,
    objective_details,
    optimize,
    random_starts,
)
from mdl_bell.quantum_core import (
    GOLDEN_CHI,
    PAPER_THETA,
    SettingsSet,
    born_table,
    mix_white_noise,
    schmidt_state,
)

PENALIZED = ObjectiveSpec()
CRIT = ObjectiveSpec(objective="critical_ell")
HALF_DEG = math.radians(0.5)

angles = st.floats(-math.pi, math.pi)


def born_route(point, v):
    rho = mix_white_noise(schmidt_state(point.chi), v)
    return born_table(rho, SettingsSet.from_angles(*point.angles))


@pytest.fixture(scope="module")
def tied_search():
    return optimize(PENALIZED, tied=True, n_starts=32, seed=0)


class TestParameterPoint:
    def test_paper_point(self):
        p = ParameterPoint.paper()
        assert math.degrees(p.chi) == pytest.approx(20.905, abs=1e-3)
        assert math.degrees(p.theta_a0) == pytest.approx(76.717, abs=1e-3)
        assert p.theta_b1 == pytest.approx(-(PAPER_THETA + math.pi / 4))

    def test_vector_round_trip(self):
        p = ParameterPoint(0.3, 0.1, 0.2, -0.4, 1.1)
        assert ParameterPoint.from_vector(p.vector(), tied=False) == p

    def test_canonical_wraps(self):
        p = ParameterPoint(0.3, 0.1 + math.pi, 0.2 - 2 * math.pi, -0.4, 1.1).canonical()
        np.testing.assert_allclose(p.angles, (0.1, 0.2, -0.4, 1.1), atol=1e-12)

    def test_non_finite(self):
        with pytest.raises(InvalidArgumentError):
            ParameterPoint(math.nan, 0, 0, 0, 0)

    @pytest.mark.parametrize("kw", [{"visibility": 0.0}, {"visibility": 1.2}, {"objective": "chsh"}, {"kappa": 0}])
    def test_bad_spec(self, kw):
        with pytest.raises(InvalidArgumentError):
            ObjectiveSpec(**kw)


class TestObjective:
    def test_penalized_at_paper_point(self):
        assert objective(ParameterPoint.paper(), PENALIZED) == pytest.approx(-1 / 12, abs=1e-12)

    def test_critical_ell_at_paper_point(self):
        assert objective(ParameterPoint.paper(), CRIT) == pytest.approx(0.0, abs=1e-12)

    def test_product_state_flagged(self):
        # chi = 0: P0 = cos^2 t cos^2 t and S > 0, root lands at or above 1/4
        d = objective_details(ParameterPoint.from_theta(0.0, PAPER_THETA), CRIT)
        assert d.degenerate and d.value >= 0.25

    def test_undefined_gives_sentinel(self):
        # product state with every Hardy cell orthogonal to it
        p = ParameterPoint(0.0, math.pi / 2, 0.0, 0.0, math.pi / 2)
        p0, s = hardy_terms(p)
        assert p0 == 0.0 and s == 0.0
        d = objective_details(p, CRIT)
        assert d.degenerate and d.value == DEGENERATE_SENTINEL

    def test_visibility_099_regression(self):
        # P0 = 0.99/12 + 0.0025, S = 3 * 0.0025: root is exactly 3/43
        assert objective(ParameterPoint.paper(), ObjectiveSpec(0.99, "critical_ell")) == pytest.approx(
            float(Fraction(3, 43)), abs=1e-12
        )

    @settings(max_examples=100, deadline=None)
    @given(st.floats(0, math.pi / 2), angles, angles, angles, angles, st.floats(0.01, 1.0))
    def test_closed_form_matches_born_rule(self, chi, a0, a1, b0, b1, v):
        p = ParameterPoint(chi, a0, a1, b0, b1)
        p0, s = hardy_terms(p, v)
        t = born_route(p, v)
        ref_p0, ref_s = t.hardy_terms[0], sum(t.hardy_terms[1:])
        assert p0 == pytest.approx(ref_p0, abs=1e-12)
        assert s == pytest.approx(ref_s, abs=1e-12)

    @settings(max_examples=100, deadline=None)
    @given(st.floats(0.05, math.pi / 2), angles, angles, angles, angles)
    def test_critical_ell_matches_inequality_module(self, chi, a0, a1, b0, b1):
        p = ParameterPoint(chi, a0, a1, b0, b1)
        ref = critical_ell(born_route(p, 0.97))
        d = objective_details(p, ObjectiveSpec(0.97, "critical_ell"))
        if ref.defined:
            assert d.value == pytest.approx(ref.raw_root, abs=1e-10)

    @settings(max_examples=100, deadline=None)
    @given(st.floats(0, math.pi / 4), angles, angles, angles, angles)
    def test_reflection_swap_symmetry(self, chi, a0, a1, b0, b1):
        p = ParameterPoint(chi, a0, a1, b0, b1)
        q = ParameterPoint(chi, -b0, -b1, -a0, -a1)
        for spec in (PENALIZED, CRIT):
            assert objective(q, spec) == pytest.approx(objective(p, spec), abs=1e-12)

    @settings(max_examples=50, deadline=None)
    @given(st.floats(0, math.pi / 4), angles, angles, angles, angles, st.integers(-2, 2))
    def test_period_pi(self, chi, a0, a1, b0, b1, k):
        p = ParameterPoint(chi, a0, a1, b0, b1)
        q = ParameterPoint(chi, a0 + k * math.pi, a1, b0 - k * math.pi, b1)
        assert objective(q, PENALIZED) == pytest.approx(objective(p, PENALIZED), abs=1e-12)


class TestSearch:
    def test_recovers_paper_point(self, tied_search):
        best = tied_search.best
        assert abs(math.degrees(best.chi - GOLDEN_CHI)) <= 0.5
        assert abs(math.degrees(best.theta_a0 - PAPER_THETA)) <= 0.5
        assert tied_search.objective_value < -0.0833

    def test_reported_value_reproducible(self, tied_search):
        assert objective(tied_search.best, PENALIZED) == tied_search.objective_value

    def test_trace_complete(self, tied_search):
        assert [i for i, _, _ in tied_search.trace] == list(range(32))
        assert tied_search.objective_value == min(v for _, _, v in tied_search.trace)

    def test_deterministic(self, tied_search):
        again = optimize(PENALIZED, tied=True, n_starts=32, seed=0)
        assert again.best == tied_search.best
        assert again.objective_value == tied_search.objective_value

    def test_threads_do_not_change_result(self, tied_search, monkeypatch):
        monkeypatch.setenv("MDL_BELL_THREADS", "4")
        again = optimize(PENALIZED, tied=True, n_starts=32, seed=0)
        assert again.best == tied_search.best

    @pytest.mark.parametrize("kappa, tol", [(1e4, 1e-4), (1e3, 5e-4)])
    def test_stationary_near_paper_point(self, kappa, tol):
        res = optimize(ObjectiveSpec(kappa=kappa), tied=True, starts=[ParameterPoint.paper()])
        drift = np.abs(res.best.vector() - ParameterPoint.paper().vector())
        assert drift.max() <= tol

    @pytest.mark.parametrize("spec", [PENALIZED, CRIT])
    def test_perturbations_do_not_improve(self, spec):
        base = ParameterPoint.paper()
        v0 = base.vector(full=True)
        f0 = objective(base, spec)
        for axis in range(5):
            for sign in (-1, 1):
                v = v0.copy()
                v[axis] += sign * HALF_DEG
                assert objective(ParameterPoint.from_vector(v, tied=False), spec) >= f0

    def test_noisy_critical_ell_optimum(self):
        spec = ObjectiveSpec(0.99, "critical_ell")
        res = optimize(spec, tied=True, n_starts=16, seed=0)
        assert res.objective_value <= objective(ParameterPoint.paper(), spec)
        assert abs(math.degrees(res.best.chi - GOLDEN_CHI)) <= 2.0
        assert abs(math.degrees(res.best.theta_a0 - PAPER_THETA)) <= 2.0

    def test_untied_not_worse(self, tied_search):
        res = optimize(PENALIZED, tied=False, n_starts=8, seed=0)
        assert res.best.tied is False
        assert res.objective_value <= objective(ParameterPoint.paper(), PENALIZED) + 1e-9

    def test_starts_in_box(self):
        for v in random_starts(False, 50, 3):
            assert 0 <= v[0] <= math.pi / 4
            assert np.all((v[1:] >= -math.pi / 2) & (v[1:] < math.pi / 2))

    def test_zero_starts(self):
        with pytest.raises(InvalidArgumentError):
            optimize(PENALIZED, n_starts=0)

    def test_to_dict(self, tied_search):
        d = tied_search.to_dict()
        assert d["best"]["degrees"]["chi"] == pytest.approx(math.degrees(tied_search.best.chi))
        assert len(d["starts"]) == 32
