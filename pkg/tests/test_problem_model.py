import json

import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from pdflow.exceptions import (
    DimensionMismatchError,
    DomainError,
    SlaterUnverifiedWarning,
    ValidationError,
)
from pdflow.problem_model import (
    ConcaveProgram,
    PrimalDualPoint,
    QuadraticProgramSpec,
    grad_lambda_lagrangian,
    grad_x_lagrangian,
    lagrangian,
    load_problem,
    load_quadratic,
    save_problem,
)
from conftest import central_diff_grad, central_diff_jac, rel_err


def unconstrained_bowl():
    # f(x) = -||x||^2 / 2, no constraints
    spec = QuadraticProgramSpec(P=np.eye(2), q=[0.0, 0.0], c=0.0)
    return load_quadratic(spec)


class TestLagrangian:
    def test_demo_at_1_4(self, interval):
        prog, _ = interval
        assert lagrangian(prog, PrimalDualPoint([1.0], [4.0])) == -16.0

    def test_demo_at_origin(self, interval):
        prog, _ = interval
        assert lagrangian(prog, PrimalDualPoint([0.0], [0.0])) == -25.0

    def test_no_constraints_reduces_to_objective(self):
        prog = unconstrained_bowl()
        p = PrimalDualPoint([1.0, 2.0], [])
        assert lagrangian(prog, p) == prog.objective(p.x) == -2.5

    def test_dimension_mismatch_names_field(self, interval):
        prog, _ = interval
        with pytest.raises(DimensionMismatchError, match="lambda"):
            lagrangian(prog, PrimalDualPoint([0.0], [0.0, 1.0]))
        with pytest.raises(DimensionMismatchError, match="'x'"):
            lagrangian(prog, PrimalDualPoint([0.0, 0.0], [0.0]))


class TestGradients:
    def test_grad_x_at_saddle_is_zero(self, interval):
        prog, _ = interval
        assert_array_equal(
            grad_x_lagrangian(prog, PrimalDualPoint([1.0], [4.0])), [0.0]
        )

    def test_grad_x_at_origin(self, interval):
        prog, _ = interval
        assert_array_equal(
            grad_x_lagrangian(prog, PrimalDualPoint([0.0], [0.0])), [10.0]
        )

    def test_zero_multiplier_reduces_to_objective_grad(self, disc):
        prog, _ = disc
        x = np.array([0.7, -0.3])
        p = PrimalDualPoint(x, [0.0, 0.0])
        assert_array_equal(grad_x_lagrangian(prog, p), prog.objective_grad(x))

    def test_grad_lambda_is_minus_g(self, interval):
        prog, _ = interval
        for x, expected in [(1.0, 0.0), (0.0, 1.0), (2.0, -3.0)]:
            out = grad_lambda_lagrangian(prog, PrimalDualPoint([x], [0.5]))
            assert_allclose(out, [expected], atol=1e-14)

    def test_grad_lambda_independent_of_lambda(self, halfplane):
        prog, _ = halfplane
        x = np.array([0.3, 1.1])
        a = grad_lambda_lagrangian(prog, PrimalDualPoint(x, [0.0]))
        b = grad_lambda_lagrangian(prog, PrimalDualPoint(x, [7.5]))
        assert_array_equal(a, b)

    def test_grad_x_matches_finite_differences(self, all_problems):
        rng = np.random.default_rng(11)
        for prog, _ in all_problems:
            for _ in range(20):
                x = rng.uniform(-3, 3, prog.n)
                lam = rng.uniform(0, 3, prog.m)
                p = PrimalDualPoint(x, lam)
                fd = central_diff_grad(
                    lambda xx: lagrangian(prog, PrimalDualPoint(xx, lam)), x
                )
                assert rel_err(grad_x_lagrangian(prog, p), fd) < 1e-5


class TestQuadraticSpec:
    def test_demo_closed_forms(self, interval):
        prog, _ = interval
        assert prog.objective(np.array([5.0])) == 0.0
        assert prog.constraints(np.array([1.0]))[0] == 0.0

    def test_identity_bowl(self):
        prog = unconstrained_bowl()
        x = np.array([3.0, 4.0])
        assert prog.objective(x) == -12.5
        assert_array_equal(prog.objective_grad(x), -x)

    def test_zero_eigenvalue_rejected(self):
        spec = QuadraticProgramSpec(
            P=[[1.0, 0.0], [0.0, 0.0]], q=[0.0, 0.0], c=0.0
        )
        with pytest.raises(ValidationError, match="eigenvalue"):
            load_quadratic(spec)

    def test_asymmetric_P_rejected(self):
        spec = QuadraticProgramSpec(P=[[1.0, 0.5], [0.0, 1.0]], q=[0.0, 0.0], c=0.0)
        with pytest.raises(ValidationError, match="symmetric"):
            spec.validate()

    def test_indefinite_constraint_rejected(self):
        spec = QuadraticProgramSpec(
            P=[[1.0]], q=[0.0], c=0.0, A=[[[-1.0]]], b=[[0.0]], d=[0.0]
        )
        with pytest.raises(ValidationError, match=r"A\[0\]"):
            spec.validate()

    def test_gradient_consistency_by_construction(self, all_problems):
        rng = np.random.default_rng(7)
        for prog, _ in all_problems:
            for _ in range(10):
                x = rng.uniform(-2, 2, prog.n)
                fd = central_diff_grad(prog.objective, x)
                assert rel_err(prog.objective_grad(x), fd) < 1e-5
                if prog.m:
                    fdj = central_diff_jac(prog.constraints, x, prog.m)
                    assert rel_err(prog.constraint_jac(x), fdj) < 1e-5


class TestConvexitySampled:
    def test_objective_strictly_concave(self, all_problems):
        rng = np.random.default_rng(3)
        for prog, _ in all_problems:
            for _ in range(50):
                x = rng.uniform(-4, 4, prog.n)
                y = rng.uniform(-4, 4, prog.n)
                if np.allclose(x, y):
                    continue
                th = rng.uniform(0.05, 0.95)
                mid = prog.objective(th * x + (1 - th) * y)
                chord = th * prog.objective(x) + (1 - th) * prog.objective(y)
                assert mid > chord

    def test_constraints_convex(self, all_problems):
        rng = np.random.default_rng(4)
        for prog, _ in all_problems:
            if prog.m == 0:
                continue
            for _ in range(50):
                x = rng.uniform(-4, 4, prog.n)
                y = rng.uniform(-4, 4, prog.n)
                th = rng.uniform(0.0, 1.0)
                mid = prog.constraints(th * x + (1 - th) * y)
                chord = th * prog.constraints(x) + (1 - th) * prog.constraints(y)
                assert np.all(mid <= chord + 1e-12)


class TestSaddleProperty:
    def test_saddle_inequalities(self, all_problems):
        # L(x, lam*) <= L(x*, lam*) <= L(x*, lam) for sampled x, lam >= 0
        rng = np.random.default_rng(5)
        for prog, saddle in all_problems:
            p_star = PrimalDualPoint(saddle.x_star, saddle.lam_star)
            l_star = lagrangian(prog, p_star)
            for _ in range(100):
                x = saddle.x_star + rng.uniform(-3, 3, prog.n)
                lam = np.maximum(saddle.lam_star + rng.uniform(-3, 3, prog.m), 0.0)
                assert lagrangian(prog, PrimalDualPoint(x, saddle.lam_star)) <= l_star + 1e-9
                assert lagrangian(prog, PrimalDualPoint(saddle.x_star, lam)) >= l_star - 1e-9


class TestSerialization:
    def test_round_trip(self, tmp_path, disc):
        prog, _ = disc
        path = tmp_path / "problem.json"
        save_problem(prog.quadratic, path)
        loaded = load_problem(path, slater_candidate=[0.0, 0.0])
        spec, ref = loaded.quadratic, prog.quadratic
        assert_array_equal(spec.P, ref.P)
        assert_array_equal(spec.q, ref.q)
        assert spec.c == ref.c
        assert_array_equal(spec.A, ref.A)
        assert_array_equal(spec.b, ref.b)
        assert_array_equal(spec.d, ref.d)

    def test_parse_error_reports_line(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text('{\n "n": 1,\n broken\n}\n')
        with pytest.raises(ValidationError, match="line 3"):
            load_problem(path)

    def test_constraint_count_mismatch(self, tmp_path):
        data = {"n": 1, "m": 2, "P": [[2.0]], "q": [0.0], "c": 0.0,
                "constraints": [{"A": [[0.0]], "b": [0.0], "d": -1.0}]}
        path = tmp_path / "mismatch.json"
        path.write_text(json.dumps(data))
        with pytest.raises(ValidationError, match="m=2"):
            load_problem(path)


class TestSlaterCheck:
    def test_infeasible_candidate_rejected(self):
        from pdflow.problems import interval_qp_spec

        with pytest.raises(ValidationError, match="Slater"):
            load_quadratic(interval_qp_spec(), slater_candidate=[2.0])

    def test_missing_candidate_warns(self):
        from pdflow.problems import interval_qp_spec

        with pytest.warns(SlaterUnverifiedWarning):
            load_quadratic(interval_qp_spec())

    def test_no_warning_without_constraints(self, recwarn):
        unconstrained_bowl()
        assert not any(
            isinstance(w.message, SlaterUnverifiedWarning) for w in recwarn.list
        )


class TestPrimalDualPoint:
    def test_domain_check(self):
        p = PrimalDualPoint([0.0], [-0.1])
        assert not p.in_domain
        with pytest.raises(DomainError):
            p.require_in_domain()

    def test_vector_round_trip(self):
        p = PrimalDualPoint([1.0, 2.0], [3.0])
        q = PrimalDualPoint.from_vector(p.as_vector(), 2)
        assert_array_equal(q.x, p.x)
        assert_array_equal(q.lam, p.lam)

    def test_program_rejects_bad_dims(self):
        with pytest.raises(ValidationError):
            ConcaveProgram(
                n=0, m=0, objective=lambda x: 0.0,
                objective_grad=lambda x: np.zeros(0),
                constraints=lambda x: np.zeros(0),
                constraint_jac=lambda x: np.zeros((0, 0)),
            )
