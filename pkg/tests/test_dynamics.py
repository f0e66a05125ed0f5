import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from pdflow.analysis import kkt_residual, projection_identity_sweep, sample_states
from pdflow.dynamics import (
    GainMatrices,
    field_primal_dual,
    field_unprojected,
    field_with_gains,
    verify_projection_identity,
)
from pdflow.exceptions import DomainError, ValidationError
from pdflow.problem_model import PrimalDualPoint


class TestUnprojectedField:
    def test_zero_at_saddle(self, interval):
        prog, _ = interval
        assert_array_equal(
            field_unprojected(prog, PrimalDualPoint([1.0], [4.0])), [0.0, 0.0]
        )

    def test_raw_multiplier_slot_is_g(self, interval):
        prog, _ = interval
        assert_array_equal(
            field_unprojected(prog, PrimalDualPoint([0.0], [0.0])), [10.0, -1.0]
        )

    def test_unconstrained_is_objective_grad(self):
        from pdflow.problem_model import QuadraticProgramSpec, load_quadratic

        prog = load_quadratic(QuadraticProgramSpec(P=[[1.0]], q=[2.0], c=0.0))
        p = PrimalDualPoint([0.5], [])
        assert_array_equal(field_unprojected(prog, p), [1.5])

    def test_defined_outside_domain(self, interval):
        prog, _ = interval
        # grad g(0) = 0, so the multiplier does not enter at x = 0
        out = field_unprojected(prog, PrimalDualPoint([0.0], [-1.0]))
        assert_allclose(out, [10.0, -1.0])


class TestProjectedField:
    def test_clamps_at_origin(self, interval):
        prog, _ = interval
        vec, mask = field_primal_dual(prog, PrimalDualPoint([0.0], [0.0]))
        assert_array_equal(vec, [10.0, 0.0])
        assert_array_equal(mask, [True])

    def test_zero_at_saddle(self, interval):
        prog, _ = interval
        vec, mask = field_primal_dual(prog, PrimalDualPoint([1.0], [4.0]))
        assert_array_equal(vec, [0.0, 0.0])
        assert_array_equal(mask, [False])

    def test_interior_matches_raw(self, disc):
        prog, _ = disc
        p = PrimalDualPoint([0.3, -0.5], [0.7, 1.2])
        vec, mask = field_primal_dual(prog, p)
        assert_array_equal(vec, field_unprojected(prog, p))
        assert not mask.any()

    def test_rejects_outside_domain(self, interval):
        prog, _ = interval
        with pytest.raises(DomainError):
            field_primal_dual(prog, PrimalDualPoint([0.0], [-0.5]))


class TestGains:
    def test_identity_gains_no_op(self, disc):
        prog, _ = disc
        gains = GainMatrices.identity(prog.n, prog.m)
        p = PrimalDualPoint([1.0, 0.2], [0.0, 0.5])
        assert_array_equal(
            field_with_gains(prog, gains, p), field_primal_dual(prog, p)[0]
        )

    def test_scaling(self, interval):
        prog, _ = interval
        gains = GainMatrices([2.0], [3.0])
        out = field_with_gains(prog, gains, PrimalDualPoint([0.0], [0.0]))
        assert_array_equal(out, [20.0, 0.0])

    def test_equilibrium_preserved(self, interval):
        prog, _ = interval
        for k1, k2 in [(0.5, 3.0), (2.0, 0.1), (1.0, 1.0)]:
            out = field_with_gains(
                prog, GainMatrices([k1], [k2]), PrimalDualPoint([1.0], [4.0])
            )
            assert_array_equal(out, [0.0, 0.0])

    def test_zero_sets_coincide(self, all_problems):
        rng = np.random.default_rng(9)
        for prog, saddle in all_problems:
            gains = GainMatrices(
                rng.uniform(0.5, 3.0, prog.n), rng.uniform(0.5, 3.0, prog.m)
            )
            # zero exactly at the optimizer...
            p_star = PrimalDualPoint(saddle.x_star, saddle.lam_star)
            base = np.linalg.norm(field_primal_dual(prog, p_star)[0])
            scaled = np.linalg.norm(field_with_gains(prog, gains, p_star))
            assert base <= 1e-9 and scaled <= 1e-9
            # ...and nowhere else on a sample
            xs, lams = sample_states(rng, prog.n, prog.m, 200)
            for i in range(200):
                p = PrimalDualPoint(xs[i], lams[i])
                b = np.linalg.norm(field_primal_dual(prog, p)[0])
                s = np.linalg.norm(field_with_gains(prog, gains, p))
                assert (b <= 1e-12) == (s <= 1e-12)

    def test_nonpositive_gain_rejected(self):
        with pytest.raises(ValidationError):
            GainMatrices([1.0, 0.0], [1.0])
        with pytest.raises(ValidationError):
            GainMatrices([1.0], [-2.0])


class TestProjectedSystemIdentity:
    def test_at_clamping_point(self, interval):
        prog, _ = interval
        assert verify_projection_identity(prog, PrimalDualPoint([0.0], [0.0]))

    def test_interior_point(self, disc):
        prog, _ = disc
        assert verify_projection_identity(prog, PrimalDualPoint([2.5, 0.1], [1.0, 2.0]))

    def test_boundary_with_outward_g(self, interval):
        # lambda = 0 but g(x) > 0: nothing to clamp on either side
        prog, _ = interval
        assert verify_projection_identity(prog, PrimalDualPoint([3.0], [0.0]))

    def test_exact_on_seeded_sample(self, all_problems):
        # mixed interior/boundary points with g of both signs, exact equality
        rng = np.random.default_rng(101)
        for prog, _ in all_problems:
            assert projection_identity_sweep(prog, rng, n_samples=10_000) == 0


class TestEquilibriaAreKktPoints:
    def test_optimizer_is_equilibrium(self, all_problems):
        for prog, saddle in all_problems:
            p = PrimalDualPoint(saddle.x_star, saddle.lam_star)
            assert np.linalg.norm(field_primal_dual(prog, p)[0]) <= 1e-9
            assert kkt_residual(prog, p).total <= 1e-9

    def test_non_optimizers_fail_both(self, all_problems):
        rng = np.random.default_rng(42)
        for prog, _ in all_problems:
            xs, lams = sample_states(rng, prog.n, prog.m, 1000)
            for i in range(1000):
                p = PrimalDualPoint(xs[i], lams[i])
                assert np.linalg.norm(field_primal_dual(prog, p)[0]) > 1e-6
                assert kkt_residual(prog, p).total > 1e-6
