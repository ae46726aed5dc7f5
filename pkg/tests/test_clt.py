import numpy as np
import pytest

from liftlab import clt, h2, linalg
from liftlab.h2 import MatPoly

from conftest import random_contraction, random_isometry, random_unitary


def window_vectors(problem, rng, count):
    w = problem.window_columns()
    coeffs = rng.standard_normal((w.shape[1], count)) + 1j * rng.standard_normal((w.shape[1], count))
    return (w @ coeffs).T


def random_shift_problem(rng, mult=None, degree=None, p_dim=None, x_norm=0.9):
    mult = mult or int(rng.integers(1, 3))
    degree = degree or int(rng.integers(4, 9))
    p_dim = p_dim or int(rng.integers(mult, mult + 3))
    t_prime = random_contraction(rng, p_dim, p_dim, norm=rng.uniform(0.3, 0.95))
    return clt.shift_intertwining_problem(rng, mult, degree, t_prime, x_norm=x_norm)


class TestOperatorSpecs:
    def test_truncated_shift_matrix(self):
        s = clt.TruncatedShift(1, 3)
        m = s.matrix()
        expected = np.diag(np.ones(3), -1)
        np.testing.assert_allclose(m, expected)
        assert s.window_dim == 3

    def test_multop_with_z_symbol_is_the_shift(self):
        sym = MatPoly(np.stack([np.zeros((2, 2)), np.eye(2)]))
        mo = clt.MultOp(sym, 4)
        np.testing.assert_allclose(mo.matrix(), clt.TruncatedShift(2, 4).matrix())
        assert mo.window_dim == clt.TruncatedShift(2, 4).window_dim

    def test_dense(self, rng):
        u = random_unitary(rng, 3)
        spec = clt.DenseOp(u)
        assert spec.window_dim == 3
        np.testing.assert_allclose(spec.matrix(), u)


class TestBuildProblem:
    def test_identity_problem(self):
        p = clt.build_problem(np.eye(2), np.eye(2), 0.5 * np.eye(2))
        assert p.window_dim == 2

    def test_shift_to_scalar(self):
        x = np.zeros((1, 65), dtype=complex)
        x[0, 0] = 0.5
        p = clt.build_problem(clt.TruncatedShift(1, 64), np.array([[0.0]]), x)
        w = p.window_columns()
        residual = np.linalg.norm((p.t_prime @ p.x - p.x @ p.t_matrix) @ w, 2)
        assert residual == 0.0

    def test_intertwining_violation(self, rng):
        t = np.eye(2)
        t_prime = np.array([[0.0, 1.0], [0.0, 0.0]])
        x = 0.5 * np.eye(2)
        with pytest.raises(clt.IntertwiningViolated):
            clt.build_problem(t, t_prime, x)

    def test_rejects_expansive_x(self):
        with pytest.raises(clt.NotContraction):
            clt.build_problem(np.eye(2), np.eye(2), 2 * np.eye(2))

    def test_rejects_non_isometric_t(self):
        with pytest.raises(clt.NotIsometryOnWindow):
            clt.build_problem(0.5 * np.eye(2), np.eye(2), 0.1 * np.eye(2))


class TestMinimalLifting:
    def test_zero_contraction_gives_shift(self):
        ml = clt.minimal_isometric_lifting(np.array([[0.0]]), 4)
        np.testing.assert_allclose(ml.u, np.diag(np.ones(5), -1), atol=1e-15)
        assert ml.total_dim == 6

    def test_unitary_needs_no_room(self, rng):
        u = random_unitary(rng, 3)
        ml = clt.minimal_isometric_lifting(u, 8)
        assert ml.defect_basis.dim == 0
        np.testing.assert_allclose(ml.u, u)

    def test_isometric_on_window(self, rng):
        t_prime = random_contraction(rng, 2, 2, norm=0.9)
        ml = clt.minimal_isometric_lifting(t_prime, 6)
        window = np.eye(ml.total_dim)[:, : ml.window_dim]
        gram = window.conj().T @ ml.u.conj().T @ ml.u @ window
        assert np.linalg.norm(gram - np.eye(ml.window_dim), 2) <= 1e-12

    def test_projection_intertwines(self, rng):
        t_prime = random_contraction(rng, 3, 3, norm=0.8)
        ml = clt.minimal_isometric_lifting(t_prime, 5)
        np.testing.assert_allclose(ml.projection @ ml.u, t_prime @ ml.projection, atol=1e-12)

    def test_minimality_spot_check(self, rng):
        t_prime = random_contraction(rng, 2, 2, norm=0.9)
        ml = clt.minimal_isometric_lifting(t_prime, 5, check_minimality=True)
        assert ml.minimality_defect == 0


class TestBuildOmega:
    def test_zero_x_maps_th_to_bottom(self, rng):
        u = random_unitary(rng, 3)
        p = clt.build_problem(u, 0.5 * random_unitary(rng, 3), np.zeros((3, 3)))
        ld = clt.build_omega(p)
        full = clt.omega_full(ld)
        h = rng.standard_normal(3) + 1j * rng.standard_normal(3)
        got = full @ (u @ h)
        np.testing.assert_allclose(got[:3], 0, atol=1e-10)
        np.testing.assert_allclose(got[3:], h, atol=1e-10)

    def test_unitary_x_gives_empty_coupling(self, rng):
        u = random_unitary(rng, 3)
        p = clt.build_problem(u, u, np.eye(3))
        ld = clt.build_omega(p)
        assert ld.defect_dim == 0
        assert ld.omega_bar.shape[1] == 0

    def test_isometry_identity(self, rng):
        for _ in range(10):
            p = random_shift_problem(rng)
            d_x = linalg.defect(p.x)
            d_tp = linalg.defect(p.t_prime)
            for h in window_vectors(p, rng, 10):
                lhs = np.linalg.norm(d_x @ p.t_matrix @ h) ** 2
                rhs = np.linalg.norm(d_tp @ p.x @ h) ** 2 + np.linalg.norm(d_x @ h) ** 2
                assert abs(lhs - rhs) <= 1e-10 * max(1.0, lhs)

    def test_partial_isometry(self, rng):
        for _ in range(5):
            p = random_shift_problem(rng)
            om = clt.build_omega(p).omega_bar
            assert np.linalg.norm(om @ om.conj().T @ om - om, 2) <= 1e-10

    def test_kernel_dim_matches_shift_multiplicity(self, rng):
        for mult in (1, 2):
            p = random_shift_problem(rng, mult=mult, degree=6)
            ld = clt.build_omega(p)
            assert ld.ker_omega.dim == mult


class TestBuildOmegaExplicit:
    def test_scalar_hand_evaluation(self):
        p = clt.build_problem(np.eye(1), np.eye(1), np.array([[0.5]]))
        ld = clt.build_omega_explicit(p)
        gram = ld.omega_bar.conj().T @ ld.omega_bar
        np.testing.assert_allclose(gram, [[1.0]], atol=1e-12)

    def test_zero_x_matches_definitional(self, rng):
        u = random_unitary(rng, 3)
        p = clt.build_problem(u, 0.4 * random_unitary(rng, 3), np.zeros((3, 3)))
        a = clt.omega_full(clt.build_omega(p))
        b = clt.omega_full(clt.build_omega_explicit(p))
        assert np.linalg.norm(a - b, 2) <= 1e-10

    def test_matches_definitional_on_random_problems(self, rng):
        for _ in range(10):
            p = random_shift_problem(rng, x_norm=rng.uniform(0.2, 0.9))
            a = clt.omega_full(clt.build_omega(p))
            b = clt.omega_full(clt.build_omega_explicit(p))
            assert np.linalg.norm(a - b, 2) <= 1e-8

    def test_rejects_singular_defect(self, rng):
        u = random_unitary(rng, 2)
        p = clt.build_problem(u, u, np.eye(2))
        with pytest.raises(clt.DefectSingular):
            clt.build_omega_explicit(p)


class TestAssembleW:
    def test_zero_parameter_gives_constant_coupling(self, rng):
        p = random_shift_problem(rng)
        ld = clt.build_omega(p)
        w = clt.assemble_schur_W(ld, None)
        assert w.degree == 0
        np.testing.assert_allclose(w.coeffs[0], ld.omega_bar, atol=1e-14)

    def test_trivial_kernel_ignores_parameter(self, rng):
        u = random_unitary(rng, 3)
        p = clt.build_problem(u, 0.5 * random_unitary(rng, 3), np.zeros((3, 3)))
        ld = clt.build_omega(p)
        assert ld.ker_omega.dim == 0
        w = clt.assemble_schur_W(ld, MatPoly.zero(ld.ker_omega_star.dim, 0))
        np.testing.assert_allclose(w.coeffs[0], ld.omega_bar, atol=1e-14)

    def test_isometric_parameter_gives_isometric_w0(self, rng):
        p = random_shift_problem(rng, mult=1, degree=6, p_dim=2)
        ld = clt.build_omega(p)
        k, ks = ld.ker_omega.dim, ld.ker_omega_star.dim
        assert k >= 1 and ks >= k
        r0 = random_isometry(rng, ks, k)
        w = clt.assemble_schur_W(ld, MatPoly.constant(r0))
        w0 = w.coeffs[0]
        np.testing.assert_allclose(w0.conj().T @ w0, np.eye(ld.defect_dim), atol=1e-10)

    def test_wrong_shapes_rejected(self, rng):
        p = random_shift_problem(rng)
        ld = clt.build_omega(p)
        with pytest.raises(clt.WrongKernelShapes):
            clt.assemble_schur_W(ld, MatPoly.zero(ld.ker_omega_star.dim + 1, ld.ker_omega.dim))

    def test_expansive_parameter_rejected(self, rng):
        p = random_shift_problem(rng, mult=1, degree=5, p_dim=2)
        ld = clt.build_omega(p)
        r = MatPoly.constant(2.0 * np.eye(ld.ker_omega_star.dim, ld.ker_omega.dim))
        with pytest.raises(clt.NotContractiveOnGrid):
            clt.assemble_schur_W(ld, r)


class TestLift:
    def test_identity_problem_zero_x(self, rng):
        u = random_unitary(rng, 2)
        p = clt.build_problem(u, 0.5 * random_unitary(rng, 2), np.zeros((2, 2)))
        lifting = clt.lift(p, None, 16)
        res = lifting.residuals()
        assert res["projection"] == 0.0
        assert res["intertwining"] <= 1e-10
        assert res["window_norm"] <= 1.0 + 1e-10

    def test_contract_on_random_problems(self, rng):
        for _ in range(10):
            p = random_shift_problem(rng)
            ld = clt.build_omega(p)
            k, ks = ld.ker_omega.dim, ld.ker_omega_star.dim
            r = MatPoly.constant(random_contraction(rng, ks, k, norm=rng.uniform(0, 1)))
            lifting = clt.lift(p, r, 48, ld=ld)
            res = lifting.residuals()
            assert res["projection"] <= 1e-12
            assert res["intertwining"] <= 1e-8
            assert res["window_norm"] <= 1.0 + 1e-8

    def test_contraction_on_window_vectors(self, rng):
        p = random_shift_problem(rng, mult=1, degree=8)
        lifting = clt.lift(p, None, 64)
        for h in window_vectors(p, rng, 100):
            assert np.linalg.norm(lifting.apply(h)) <= np.linalg.norm(h) * (1 + 1e-10)

    def test_distinct_parameters_give_distinct_liftings(self, rng):
        for _ in range(5):
            p = random_shift_problem(rng, mult=1, degree=6, p_dim=2)
            ld = clt.build_omega(p)
            k, ks = ld.ker_omega.dim, ld.ker_omega_star.dim
            r1 = MatPoly.constant(random_isometry(rng, ks, k))
            r2 = MatPoly.constant(-r1.coeffs[0])
            l1 = clt.lift(p, r1, 24, ld=ld)
            l2 = clt.lift(p, r2, 24, ld=ld)
            h = window_vectors(p, rng, 1)[0]
            assert np.linalg.norm(l1.apply(h) - l2.apply(h)) > 1e-6

    def test_shift_with_isometric_parameter_is_isometric(self, rng):
        p = random_shift_problem(rng, mult=1, degree=10, p_dim=2, x_norm=0.85)
        ld = clt.build_omega(p)
        r0 = random_isometry(rng, ld.ker_omega_star.dim, ld.ker_omega.dim)
        lifting = clt.lift(p, MatPoly.constant(r0), 256, ld=ld)
        for h in window_vectors(p, rng, 20):
            ratio = np.linalg.norm(lifting.apply(h)) / np.linalg.norm(h)
            assert abs(ratio - 1.0) <= 1e-6


class TestDimsReport:
    def test_identity_zero_x(self, rng):
        u = random_unitary(rng, 2)
        p = clt.build_problem(u, u, np.zeros((2, 2)))
        ld = clt.build_omega(p)
        rep = clt.dims_report(ld, p)
        assert rep.dim_ker == 0 and rep.dim_ker_star == 0
        assert rep.kernel_inequality and rep.defect_inequality and rep.meet_inequality

    def test_shift_fixture_reduction(self, rng):
        for mult in (1, 2):
            p = random_shift_problem(rng, mult=mult, degree=6, p_dim=mult + 1)
            ld = clt.build_omega(p)
            rep = clt.dims_report(ld, p)
            assert rep.dim_ker == mult
            assert rep.dim_defect_tstar == mult
            # strict contraction on both sides: the meets collapse to the defects
            assert rep.dim_meet_left == rep.dim_defect_tstar
            assert rep.dim_meet_right == rep.dim_defect_tprime
            assert rep.kernel_inequality == rep.defect_inequality == rep.meet_inequality
