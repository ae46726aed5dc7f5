import numpy as np
import pytest

from liftlab import h2, linalg
from liftlab.h2 import MatPoly, VecPoly

from conftest import contractive_matpoly, random_matpoly


class TestEval:
    def test_constant_identity(self, rng):
        p = MatPoly.identity(3)
        for z in [0.0, 0.3 + 0.4j, 1j]:
            np.testing.assert_allclose(p(z), np.eye(3), atol=1e-15)

    def test_z_times_identity(self):
        p = MatPoly(np.stack([np.zeros((2, 2)), np.eye(2)]))
        np.testing.assert_allclose(p(1j), 1j * np.eye(2), atol=1e-15)

    def test_value_at_zero_is_constant_term(self, rng):
        p = random_matpoly(rng, 3, 2, 5)
        np.testing.assert_allclose(p(0.0), p.coeffs[0], atol=1e-15)


class TestCircleGrid:
    def test_constant(self):
        p = MatPoly.constant([[2.0, 0], [0, 3.0]])
        vals = h2.eval_circle_grid(p, 1.0, 8)
        assert vals.shape == (8, 2, 2)
        for v in vals:
            np.testing.assert_allclose(v, p.coeffs[0], atol=1e-14)

    def test_fourth_roots(self):
        p = MatPoly(np.stack([np.zeros((1, 1)), np.eye(1)]))
        vals = h2.eval_circle_grid(p, 1.0, 4)[:, 0, 0]
        np.testing.assert_allclose(vals, [1, 1j, -1, -1j], atol=1e-14)

    def test_grid_too_coarse(self, rng):
        p = random_matpoly(rng, 1, 1, 4)
        with pytest.raises(h2.GridTooCoarse):
            h2.eval_circle_grid(p, 1.0, 8)

    def test_parseval_cross_check(self, rng):
        p = random_matpoly(rng, 3, 2, 6)
        d = rng.standard_normal(2) + 1j * rng.standard_normal(2)
        vals = np.einsum("nij,j->ni", h2.eval_circle_grid(p, 1.0, 2 * 6 + 1), d)
        grid_mean = np.mean(np.sum(np.abs(vals) ** 2, axis=1))
        coeff_sum = np.sum(np.abs(np.einsum("nij,j->ni", p.coeffs, d)) ** 2)
        assert abs(grid_mean - coeff_sum) <= 1e-12 * max(1, coeff_sum)


class TestNeumannInverse:
    def test_zero(self):
        j = h2.neumann_inverse(MatPoly.zero(2, 2), 5)
        np.testing.assert_allclose(j.coeffs[0], np.eye(2), atol=1e-15)
        assert np.linalg.norm(j.coeffs[1:].ravel()) == 0

    def test_geometric_series(self):
        c = 0.5
        j = h2.neumann_inverse(MatPoly.constant([[c]]), 8)
        np.testing.assert_allclose(j.coeffs[:, 0, 0], c ** np.arange(9), atol=1e-14)

    def test_not_square(self, rng):
        with pytest.raises(h2.NotSquare):
            h2.neumann_inverse(random_matpoly(rng, 3, 2, 1), 4)

    def test_multiply_back_oracle(self, rng):
        # oracle: explicit polynomial multiplication of (I - zA) by J
        for _ in range(8):
            dim = int(rng.integers(1, 7))
            deg = int(rng.integers(0, 9))
            n = int(rng.integers(deg + 1, 257))
            a = contractive_matpoly(rng, dim, dim, deg, norm=0.9)
            j = h2.neumann_inverse(a, n)
            za = MatPoly(np.concatenate([np.zeros((1, dim, dim)), a.coeffs], axis=0))
            prod = h2.polymul(za, j, n)
            residual = h2.pad_coeffs(j, n).coeffs - prod.coeffs
            residual[0] -= np.eye(dim)
            assert np.max(np.abs(residual)) <= 1e-12


class TestGamma:
    def test_constant_isometry_column(self):
        w = MatPoly.constant([[0.0], [1.0]])
        g = h2.gamma_from_W(w, 6)
        np.testing.assert_allclose(g.coeffs[0], [[1.0]], atol=1e-15)
        assert np.linalg.norm(g.coeffs[1:].ravel()) == 0

    def test_scalar_half_geometric(self):
        w = MatPoly.constant([[0.5], [0.5]])
        g = h2.gamma_from_W(w, 64)
        expected = 0.5 ** (np.arange(65) + 1)
        np.testing.assert_allclose(g.coeffs[:, 0, 0], expected, atol=1e-15)
        gd = h2.apply_to_vector(g, [1.0])
        assert abs(h2.hardy_norm_sq(gd) - 1.0 / 3.0) <= 1e-9

    def test_zero_bottom_block(self, rng):
        a = contractive_matpoly(rng, 2, 2, 2, norm=0.8)
        w = h2.vstack_polys(a, MatPoly.zero(1, 2, a.degree))
        g = h2.gamma_from_W(w, 16)
        assert np.max(np.abs(g.coeffs)) <= 1e-14


class TestHardyNorm:
    def test_constant(self):
        v = VecPoly(np.array([[3.0, 4.0]], dtype=complex))
        assert h2.hardy_norm_sq(v) == pytest.approx(25.0)

    def test_orthonormal_coefficients(self):
        v = VecPoly(np.array([[1.0, 0.0], [0.0, 1.0]], dtype=complex))
        assert h2.hardy_norm_sq(v) == pytest.approx(2.0)


class TestRadialMean:
    def test_identity(self, rng):
        d = np.array([1.0, 2.0])
        for rho in (0.3, 0.9, 1.0):
            got = h2.radial_mean_norm_sq(MatPoly.identity(2), d, rho, 16)
            assert got == pytest.approx(5.0)

    def test_z_identity_quarter(self):
        p = MatPoly(np.stack([np.zeros((2, 2)), np.eye(2)]))
        got = h2.radial_mean_norm_sq(p, [1.0, 0.0], 0.5, 8)
        assert got == pytest.approx(0.25)

    def test_parseval_cross_check(self, rng):
        p = random_matpoly(rng, 2, 2, 5)
        d = rng.standard_normal(2)
        got = h2.radial_mean_norm_sq(p, d, 1.0, 11)
        coeff = np.sum(np.abs(np.einsum("nij,j->ni", p.coeffs, d)) ** 2)
        assert abs(got - coeff) <= 1e-12 * max(1.0, coeff)

    def test_defect_option(self, rng):
        # scalar oracle: D of constant c applied to values of J
        c = 0.6
        w = MatPoly.constant([[c]])
        j = MatPoly.from_scalar_coeffs([1.0, 0.5])
        got = h2.radial_mean_norm_sq(j, [1.0], 0.5, 8, defect_of=w)
        expected = (1 - c**2) * (1 + 0.25 * 0.25)
        assert got == pytest.approx(expected, abs=1e-12)


class TestResolventGrid:
    def test_matches_series_when_coefficients_decay(self, rng):
        a = contractive_matpoly(rng, 3, 3, 3, norm=0.8)
        d = rng.standard_normal(3)
        rho, grid = 0.7, 512
        direct = h2.resolvent_apply_grid(a, d, rho, grid)
        j = h2.neumann_inverse(a, 200)
        series = np.einsum("nij,j->ni", h2.eval_circle_grid(j, rho, grid), d)
        assert np.max(np.abs(direct - series)) <= 1e-10

    def test_scalar_closed_form(self):
        a = MatPoly.constant([[0.5]])
        vals = h2.resolvent_apply_grid(a, [1.0], 0.5, 8)[:, 0]
        z = h2.circle_nodes(0.5, 8)
        np.testing.assert_allclose(vals, 1.0 / (1.0 - 0.5 * z), atol=1e-14)


class TestHerglotzFromMeasure:
    def test_lebesgue_gives_one(self):
        mu = h2.CircleMeasure(density_pieces=[(0.0, 2 * np.pi, 1.0)])
        f = h2.herglotz_from_measure(mu, 16)
        np.testing.assert_allclose(f.coeffs[0], [[1.0]], atol=1e-14)
        assert np.max(np.abs(f.coeffs[1:])) <= 1e-14

    def test_point_mass_gives_cayley(self):
        mu = h2.CircleMeasure(point_masses=[(0.0, 1.0)])
        f = h2.herglotz_from_measure(mu, 8)
        np.testing.assert_allclose(f.coeffs[:, 0, 0], [1] + [2] * 8, atol=1e-14)

    def test_split_density_plus_mass(self):
        # density 3/4 on (0, pi), 1/4 on (pi, 2 pi), atom of mass 1/2 at 1
        mu = h2.CircleMeasure(
            density_pieces=[(0.0, np.pi, 0.75), (np.pi, 2 * np.pi, 0.25)],
            point_masses=[(0.0, 0.5)],
        )
        f = h2.herglotz_from_measure(mu, 32)
        assert f(0.0)[0, 0] == pytest.approx(1.0, abs=1e-14)

    def test_validation(self):
        with pytest.raises(h2.H2Error):
            h2.CircleMeasure(density_pieces=[(0.0, 1.0, -2.0)])
        with pytest.raises(h2.H2Error):
            h2.CircleMeasure(density_pieces=[(0.0, 2.0, 1.0), (1.0, 3.0, 1.0)])


class TestHerglotzFromA:
    def test_zero(self):
        f = h2.herglotz_from_A(MatPoly.zero(2, 2), 6)
        np.testing.assert_allclose(f.coeffs[0], np.eye(2), atol=1e-15)
        assert np.max(np.abs(f.coeffs[1:])) == 0

    def test_scalar_one(self):
        f = h2.herglotz_from_A(MatPoly.constant([[1.0]]), 6)
        np.testing.assert_allclose(f.coeffs[:, 0, 0], [1] + [2] * 6, atol=1e-14)

    def test_real_part_psd_on_grid(self, rng):
        for _ in range(5):
            a = contractive_matpoly(rng, 3, 3, 2, norm=0.9)
            f = h2.herglotz_from_A(a, 128)
            vals = h2.eval_circle_grid(f, 0.9, 512)
            re = 0.5 * (vals + np.conj(np.swapaxes(vals, 1, 2)))
            eigs = np.linalg.eigvalsh(re)
            assert eigs.min() >= -1e-10


class TestOuter:
    def test_unit_modulus(self):
        res = h2.outer_from_boundary_modulus(np.ones(64), 32)
        np.testing.assert_allclose(res.poly.coeffs[0], [[1.0]], atol=1e-12)
        assert np.max(np.abs(res.poly.coeffs[1:])) <= 1e-12
        assert res.max_modulus_error <= 1e-12

    def test_constant_modulus(self):
        res = h2.outer_from_boundary_modulus(np.full(64, 2.5), 32)
        assert res.poly(0.0)[0, 0] == pytest.approx(2.5, abs=1e-12)

    def test_reconstructs_one_minus_half_z(self):
        # oracle: b(z) = 1 - z/2 has boundary modulus |1 - exp(i t)/2|
        grid = 256
        theta = 2 * np.pi * np.arange(grid) / grid
        m = np.abs(1 - np.exp(1j * theta) / 2)
        res = h2.outer_from_boundary_modulus(m, grid // 2)
        expected = np.zeros(grid // 2 + 1)
        expected[0], expected[1] = 1.0, -0.5
        np.testing.assert_allclose(res.poly.coeffs[:, 0, 0], expected, atol=1e-10)
        assert res.max_modulus_error <= 1e-10
        assert res.clamped == 0

    def test_all_zero_rejected(self):
        with pytest.raises(h2.AllZeroModulus):
            h2.outer_from_boundary_modulus(np.zeros(16), 8)

    def test_szego_equality(self, rng):
        # log|b(0)| equals the grid mean of log|b| for the constructed outer b;
        # bandlimited modulus data so the truncated exp series holds the mass
        grid = 128
        theta = 2 * np.pi * np.arange(grid) / grid
        logm = sum(
            0.2 * rng.standard_normal() * np.cos(k * theta + rng.uniform(0, 2 * np.pi))
            for k in range(1, 7)
        )
        m = np.exp(logm)
        res = h2.outer_from_boundary_modulus(m, grid // 2)
        vals = h2.unit_circle_values(res.poly.coeffs[:, 0, 0], grid)
        lhs = np.log(abs(res.poly(0.0)[0, 0]))
        rhs = np.mean(np.log(np.abs(vals)))
        assert abs(lhs - rhs) <= 1e-8
        assert res.poly(0.0)[0, 0].real > 0


class TestIsOuter:
    def test_identity(self):
        assert h2.is_outer(MatPoly.identity(2), 16)

    def test_scalar_shift_is_not(self):
        p = MatPoly.from_scalar_coeffs([0.0, 1.0])
        assert not h2.is_outer(p, 16)

    def test_one_minus_half_z(self):
        # Jensen oracle: the quadrature mean of log|1 - z/2| on the circle is 0
        p = MatPoly.from_scalar_coeffs([1.0, -0.5])
        grid = 4096
        theta = 2 * np.pi * np.arange(grid) / grid
        oracle = np.mean(np.log(np.abs(1 - np.exp(1j * theta) / 2)))
        assert abs(oracle) <= 1e-12
        assert h2.is_outer(p, grid)


class TestRadialChainIdentities:
    """Exact finite-radius identities tying the grid quantities together."""

    def _setup(self, rng, rho, grid=512):
        w = contractive_matpoly(rng, 5, 3, int(rng.integers(0, 5)), norm=0.95)
        a, b = w.block_rows(3)
        d = rng.standard_normal(3) + 1j * rng.standard_normal(3)
        d_vals = h2.resolvent_apply_grid(a, d, rho, grid)
        w_vals = np.einsum("nij,nj->ni", h2.eval_circle_grid(w, rho, grid), d_vals)
        a_vals = np.einsum("nij,nj->ni", h2.eval_circle_grid(a, rho, grid), d_vals)
        b_vals = w_vals[:, 3:]
        return d, d_vals, w_vals, a_vals, b_vals

    def test_gamma_norm_chain(self, rng):
        for rho in (0.5, 0.9):
            d, d_vals, w_vals, a_vals, b_vals = self._setup(rng, rho)
            nd2 = float(np.sum(np.abs(d) ** 2))
            mean_gamma = np.mean(np.sum(np.abs(b_vals) ** 2, axis=1))
            mean_dvals = np.mean(np.sum(np.abs(d_vals) ** 2, axis=1))
            mean_defect = np.mean(
                np.sum(np.abs(d_vals) ** 2, axis=1) - np.sum(np.abs(w_vals) ** 2, axis=1)
            )
            rhs = nd2 - mean_defect - (1 / rho**2 - 1) * (mean_dvals - nd2)
            assert abs(mean_gamma - rhs) <= 1e-9 * max(1.0, nd2)

    def test_a_defect_chain(self, rng):
        for rho in (0.5, 0.9):
            d, d_vals, _, a_vals, _ = self._setup(rng, rho)
            nd2 = float(np.sum(np.abs(d) ** 2))
            mean_da = np.mean(
                np.sum(np.abs(d_vals) ** 2, axis=1) - np.sum(np.abs(a_vals) ** 2, axis=1)
            )
            mean_dvals = np.mean(np.sum(np.abs(d_vals) ** 2, axis=1))
            rhs = nd2 / rho**2 + (1 - 1 / rho**2) * mean_dvals
            assert abs(mean_da - rhs) <= 1e-9 * max(1.0, nd2)

    def test_coefficient_tail_bound(self, rng):
        # partial sums of the output coefficients never exceed the input norm
        w = contractive_matpoly(rng, 4, 2, 3, norm=0.95)
        a, _ = w.block_rows(2)
        n = 64
        g = h2.gamma_from_W(w, n)
        j = h2.neumann_inverse(a, n)
        d = rng.standard_normal(2)
        dn = np.einsum("nij,j->ni", j.coeffs, d)
        gn = np.einsum("nij,j->ni", g.coeffs, d)
        nd2 = np.sum(np.abs(d) ** 2)
        for k in range(1, n + 1):
            lhs = np.sum(np.abs(dn[k]) ** 2) + np.sum(np.abs(gn[:k]) ** 2)
            assert lhs <= nd2 + 1e-10

    def test_harmonic_mass_identity(self, rng):
        # grid mean of ||D_{zA(z)} d(z)||^2 equals ||d||^2 at every radius,
        # and matches Re(F d, d) for the associated positive-real-part F
        for _ in range(3):
            dim = int(rng.integers(1, 5))
            deg = int(rng.integers(0, 5))
            a = contractive_matpoly(rng, dim, dim, deg, norm=0.9)
            d = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
            nd2 = float(np.sum(np.abs(d) ** 2))
            f = h2.herglotz_from_A(a, 256)
            for rho in (0.3, 0.7, 0.95):
                grid = 1024
                d_vals = h2.resolvent_apply_grid(a, d, rho, grid)
                z = h2.circle_nodes(rho, grid)
                za_vals = z[:, None, None] * h2.eval_circle_grid(a, rho, grid)
                za_d = np.einsum("nij,nj->ni", za_vals, d_vals)
                h_d = np.sum(np.abs(d_vals) ** 2, axis=1) - np.sum(np.abs(za_d) ** 2, axis=1)
                assert abs(np.mean(h_d) - nd2) <= 1e-9 * max(1.0, nd2)
                f_vals = np.einsum("nij,j->ni", h2.eval_circle_grid(f, rho, grid), d)
                re_fdd = np.real(np.einsum("ni,i->n", f_vals, np.conj(d)))
                assert np.max(np.abs(re_fdd - h_d)) <= 1e-9 * max(1.0, nd2)
