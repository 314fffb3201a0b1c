"""Multiplicative-weights engines and the penalty search."""

from __future__ import annotations

import math

import numpy as np
import pytest

import sketchmatch as sm
from sketchmatch.mwu import (
    CoveringProblem,
    OracleContractError,
    PackingProblem,
    covering_multipliers,
    covering_step_budget,
    lagrangian_search,
    packing_multipliers,
    packing_step_budget,
    solve_covering,
    solve_packing,
)
from sketchmatch.oracle import DualStep, PrimalCertificate, matching_oracle

from conftest import EPS


class TestCoveringMultipliers:
    def test_uniform_on_unit_ratios(self):
        u, log_u = covering_multipliers(np.ones(3), np.ones(3), alpha=2.0)
        assert u == pytest.approx([1.0, 1.0, 1.0])
        assert log_u == pytest.approx([-2.0, -2.0, -2.0])

    def test_doubled_ratio_shrinks_by_exp_alpha(self):
        u, _ = covering_multipliers(
            np.array([1.0, 2.0]), np.ones(2), alpha=math.log(2.0)
        )
        assert u[0] == pytest.approx(1.0)
        assert u[1] == pytest.approx(0.5)

    def test_zero_iterate_weights_inverse_targets(self):
        u, _ = covering_multipliers(
            np.zeros(3), np.array([1.0, 2.0, 4.0]), alpha=3.0
        )
        assert u == pytest.approx([1.0, 0.5, 0.25])

    def test_packing_mirror_grows_with_load(self):
        z, _ = packing_multipliers(
            np.array([0.0, 1.0]), np.ones(2), alpha=math.log(3.0)
        )
        assert z[1] == pytest.approx(1.0)
        assert z[0] == pytest.approx(1.0 / 3.0)


class TestStepBudgets:
    def test_covering_formula(self):
        got = covering_step_budget(2.0, 0.5, 1, 0.25)
        assert got == math.ceil(64.0 * 2.0 * (4.0 + 2.0) * math.log(2.0 * 1 / 0.5))

    def test_packing_formula(self):
        # delta = 1/6 and a start ratio of 2 gives the 2 * (36 + 1) shape
        got = packing_step_budget(2.0, 1.0 / 6.0, 5, 2.0)
        assert got == math.ceil(64.0 * 2.0 * 37.0 * math.log(10.0))

    def test_packing_start_below_one_drops_log_term(self):
        got = packing_step_budget(2.0, 0.5, 5, 0.5)
        assert got == math.ceil(64.0 * 2.0 * 4.0 * math.log(10.0))


def _segment_problem(upper: float, rho: float = 2.0):
    """Scalar covering problem over the segment [0, upper] vs target 1."""

    def oracle(u, state):
        # best point in the set under the current multipliers
        if upper * u[0] >= (1.0 - 0.05) * u[0]:
            return upper
        return None

    return CoveringProblem(
        c=np.ones(1),
        rho=rho,
        x0=0.5,
        matvec=lambda x: np.array([float(x)]),
        combine=lambda x, y, s: (1.0 - s) * x + s * y,
        oracle=oracle,
    )


class TestSolveCovering:
    def test_feasible_segment(self):
        out = solve_covering(_segment_problem(2.0), 0.1)
        assert out.feasible
        assert out.lam >= 1.0 - 3.0 * 0.1
        assert out.steps <= out.budget
        assert 0.0 <= out.x <= 2.0

    def test_infeasible_segment_returns_witness(self):
        out = solve_covering(_segment_problem(0.5), 0.1)
        assert not out.feasible
        u = out.infeasible_u
        assert u is not None
        # no point of [0, 0.5] meets the margin under the witness
        assert 0.5 * u[0] < (1.0 - 0.05) * u[0]

    def test_two_variable_three_row_instance(self):
        # coverage over {x >= 0 : x1 + x2 <= 2}; optimum min-ratio is 1
        c = np.ones(3)
        a = np.array([[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]])

        def oracle(u, state):
            gains = a.T @ u  # pick the better extreme point (2,0) / (0,2)
            y = np.zeros(2)
            y[int(np.argmax(gains))] = 2.0
            return y

        problem = CoveringProblem(
            c=c,
            rho=2.0,
            x0=np.array([0.5, 0.5]),
            matvec=lambda x: a @ x,
            combine=lambda x, y, s: (1.0 - s) * x + s * y,
            oracle=oracle,
        )
        eps = 0.1
        out = solve_covering(problem, eps)
        assert out.feasible
        assert out.lam >= 1.0 - 3.0 * eps
        assert out.steps <= out.budget
        assert out.x.sum() <= 2.0 + 1e-9
        assert (out.x >= -1e-12).all()
        assert out.phases >= 1
        # the iterate's true coverage matches the incremental row values
        assert np.allclose(a @ out.x, out.ax, rtol=1e-6, atol=1e-9)

    def test_width_violation_raises(self):
        problem = _segment_problem(2.0)
        problem.oracle = lambda u, state: 5.0  # exceeds rho * c
        with pytest.raises(OracleContractError):
            solve_covering(problem, 0.1)

    def test_margin_violation_raises(self):
        problem = _segment_problem(2.0)
        problem.oracle = lambda u, state: 0.1
        with pytest.raises(OracleContractError):
            solve_covering(problem, 0.1)

    def test_bad_start_rejected(self):
        problem = _segment_problem(2.0)
        problem.x0 = 0.0
        with pytest.raises(ValueError):
            solve_covering(problem, 0.1)


class TestSolvePacking:
    def test_packed_start_returns_without_oracle(self):
        def oracle(z, state):  # pragma: no cover - must not run
            raise AssertionError("oracle called on an already packed start")

        problem = PackingProblem(
            d=np.ones(1),
            rho=2.0,
            x0=0.5,
            matvec=lambda x: np.array([float(x)]),
            combine=lambda x, y, s: (1.0 - s) * x + s * y,
            oracle=oracle,
        )
        out = solve_packing(problem, 1.0 / 6.0)
        assert out.feasible
        assert out.steps == 0
        assert out.lam == pytest.approx(0.5)

    def test_balances_two_rows(self):
        # points x1 + x2 = 1 loading rows (2 x1, 2 x2) against d = 1
        a = np.array([[2.0, 0.0], [0.0, 2.0]])

        def oracle(z, state):
            costs = a.T @ z
            y = np.zeros(2)
            y[int(np.argmin(costs))] = 1.0
            return y

        problem = PackingProblem(
            d=np.ones(2),
            rho=2.0,
            x0=np.array([1.0, 0.0]),
            matvec=lambda x: a @ x,
            combine=lambda x, y, s: (1.0 - s) * x + s * y,
            oracle=oracle,
        )
        delta = 0.05
        out = solve_packing(problem, delta)
        assert out.feasible
        assert out.lam <= 1.0 + 6.0 * delta
        assert out.steps <= out.budget
        assert out.x.sum() == pytest.approx(1.0)

    def test_infeasible_returns_witness(self):
        # the same segment against d = 0.4: best ratio is 1 / 0.4 = 2.5
        a = np.array([[2.0, 0.0], [0.0, 2.0]])
        d = np.full(2, 0.4)
        delta = 0.05

        def oracle(z, state):
            costs = a.T @ z
            y = np.zeros(2)
            y[int(np.argmin(costs))] = 1.0
            if float(z @ (a @ y)) > (1.0 + delta / 2.0) * float(z @ d):
                return None
            return y

        problem = PackingProblem(
            d=d,
            rho=10.0,
            x0=np.array([1.0, 0.0]),
            matvec=lambda x: a @ x,
            combine=lambda x, y, s: (1.0 - s) * x + s * y,
            oracle=oracle,
        )
        out = solve_packing(problem, delta)
        assert not out.feasible
        z = out.infeasible_z
        assert z is not None
        for vertex in (np.array([1.0, 0.0]), np.array([0.0, 1.0])):
            assert float(z @ (a @ vertex)) > (1.0 + delta / 2.0) * float(z @ d)


def _triangle_index(eps: float = EPS):
    g = sm.load_graph("0 1 10\n0 2 10\n1 2 10\n")
    lv = sm.discretize(g, eps)
    odd = sm.enumerate_small_odd_sets(g, eps)
    return sm.SystemIndex(lv, eps, odd)


class TestLagrangianSearch:
    def test_certificate_passes_through(self):
        index = _triangle_index()
        cert = PrimalCertificate(y={}, mu={}, y_caps={}, objective=0.0, beta=1.0)
        calls = []

        def oracle(u, z, pen, beta):
            calls.append(pen)
            return cert

        out = lagrangian_search(
            index,
            oracle,
            np.ones(len(index.rows)),
            np.ones(len(index.vrows)),
            beta=1.0,
        )
        assert out is cert
        assert len(calls) == 1

    def test_light_load_returns_first_step(self):
        index = _triangle_index()
        calls = []

        def oracle(u, z, pen, beta):
            calls.append(pen)
            return DualStep.zeros(beta)  # zero load always qualifies

        out = lagrangian_search(
            index,
            oracle,
            np.ones(len(index.rows)),
            np.ones(len(index.vrows)),
            beta=1.0,
        )
        assert isinstance(out, DualStep)
        assert len(calls) == 1
        usc = index.multiplier_cover_target(np.ones(len(index.rows)))
        zq = index.zeta_degree_target(np.ones(len(index.vrows)))
        assert calls[0] == pytest.approx(index.epsilon * usc / (16.0 * zq))

    def test_real_oracle_output_obeys_search_contract(self):
        index = _triangle_index()
        u = np.ones(len(index.rows))
        zeta = np.ones(len(index.vrows))
        beta = 1.0
        out = lagrangian_search(
            index,
            lambda uu, zz, pp, bb: matching_oracle(index, uu, zz, pp, bb),
            u,
            zeta,
            beta,
        )
        usc = index.multiplier_cover_target(u)
        zq = index.zeta_degree_target(zeta)
        if isinstance(out, PrimalCertificate):
            assert out.objective >= (1.0 - index.epsilon) * beta - 1e-9
        else:
            load = float(zeta @ index.degree_values(out.iterate))
            cover = float(u @ index.cover_values(out.iterate))
            bar = (13.0 / 12.0) * zq
            assert load <= bar * (1.0 + 1e-6)
            if out.branch == "mixed":
                assert load == pytest.approx(bar, rel=1e-5)
            assert cover >= (1.0 - index.epsilon / 8.0) * usc * (1.0 - 1e-6) - 1e-9

    def test_zero_cover_target_short_circuits(self):
        index = _triangle_index()

        def oracle(u, z, pen, beta):  # pragma: no cover - must not run
            raise AssertionError("oracle called with no cover mass")

        out = lagrangian_search(
            index,
            oracle,
            np.zeros(len(index.rows)),
            np.ones(len(index.vrows)),
            beta=1.0,
        )
        assert isinstance(out, DualStep)
        assert float(sum(out.iterate.x_top.values()) if out.iterate.x_top else 0.0) == 0.0
