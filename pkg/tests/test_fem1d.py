import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fracfp import fem1d
from fracfp.fem1d import (
    BreakdownError,
    SpatialMesh,
    TriDiagMatrix,
    assemble_B,
    assemble_mass,
    first_moment,
    interpolate,
    l2_norm,
    load_vector,
    thomas_solve,
)


def hat(mesh, p, x):
    """Hat function of node ``p`` (0..P) and its derivative at ``x``."""
    xp, h = mesh.nodes[p], mesh.h
    val = np.clip(1.0 - np.abs(x - xp) / h, 0.0, None)
    slope = np.where((x > xp - h) & (x < xp), 1.0 / h, 0.0) - np.where(
        (x > xp) & (x < xp + h), 1.0 / h, 0.0
    )
    return val, slope


def dense_oracle(mesh, integrand, order=20):
    """Interior matrix ``A_pq = int integrand(phi_q, phi_q', phi_p, phi_p', x)``."""
    x, w = mesh.element_points(order)
    x, w = x.ravel(), mesh.h * np.tile(w, mesh.P)
    n = mesh.ndof
    A = np.zeros((n, n))
    for p in range(n):
        vp, dp = hat(mesh, p + 1, x)
        for q in range(n):
            vq, dq = hat(mesh, q + 1, x)
            A[p, q] = np.sum(w * integrand(vq, dq, vp, dp, x))
    return A


class TestSpatialMesh:
    def test_nodes(self):
        m = SpatialMesh(-2.0, 4.0, 8)
        assert m.nodes[0] == -2.0 and m.nodes[-1] == 2.0
        np.testing.assert_allclose(np.diff(m.nodes), 0.5, rtol=1e-15)
        assert m.ndof == 7 and m.interior.size == 7

    @pytest.mark.parametrize("P,L", [(1, 1.0), (4, 0.0), (4, -1.0)])
    def test_invalid(self, P, L):
        with pytest.raises(ValueError):
            SpatialMesh(0.0, L, P)


class TestTriDiag:
    def test_shape_check(self):
        with pytest.raises(ValueError):
            TriDiagMatrix(np.ones(2), np.ones(2), np.ones(1))

    def test_matvec_matches_dense(self):
        rng = np.random.default_rng(3)
        A = TriDiagMatrix(rng.random(5), rng.random(6), rng.random(5))
        v = rng.random(6)
        np.testing.assert_allclose(A.matvec(v), A.to_dense() @ v, rtol=1e-15)


class TestMass:
    def test_unit_spacing(self):
        M = assemble_mass(SpatialMesh(0.0, 4.0, 4))
        np.testing.assert_allclose(M.diag, [2 / 3] * 3, rtol=1e-15)
        np.testing.assert_allclose(M.sub, [1 / 6] * 2, rtol=1e-15)
        np.testing.assert_array_equal(M.sub, M.sup)

    def test_matches_oracle(self):
        mesh = SpatialMesh(0.3, 1.7, 7)
        A = dense_oracle(mesh, lambda vq, dq, vp, dp, x: vq * vp)
        np.testing.assert_allclose(assemble_mass(mesh).to_dense(), A, rtol=1e-13, atol=1e-15)

    def test_row_sums_of_full_operator(self):
        # with the boundary hats restored, each interior row integrates phi_p against 1
        mesh = SpatialMesh(0.0, 2.0, 10)
        M = assemble_mass(mesh).to_dense()
        rows = M.sum(axis=1)
        rows[0] += mesh.h / 6
        rows[-1] += mesh.h / 6
        np.testing.assert_allclose(rows, mesh.h, rtol=1e-14)

    @pytest.mark.parametrize("P", [2, 3, 8, 33, 64])
    def test_spd(self, P):
        M = assemble_mass(SpatialMesh(0.0, 1.0, P)).to_dense()
        minors = [np.linalg.det(M[:i, :i]) for i in range(1, M.shape[0] + 1)]
        assert all(d > 0 for d in minors)
        x = np.random.default_rng(P).standard_normal((20, M.shape[0]))
        assert np.all(np.einsum("ij,jk,ik->i", x, M, x) > 0)


class TestAssembleB:
    def test_zero_forcing_is_laplacian(self):
        B = assemble_B(SpatialMesh(0.0, 5.0, 5), lambda x, t: 0.0, 0.0)
        np.testing.assert_array_equal(B.diag, 2.0)
        np.testing.assert_array_equal(B.sub, -1.0)
        np.testing.assert_array_equal(B.sup, -1.0)

    @pytest.mark.parametrize("F", [lambda x, t: 0.0 * x + 2.5, lambda x, t: x,
                                   lambda x, t: 1.0 - 3.0 * x + t])
    def test_linear_forcing_matches_oracle(self, F):
        mesh = SpatialMesh(-0.4, 3.0, 3) if F(1.0, 0.0) == 1.0 else SpatialMesh(-1.0, 2.0, 9)
        t = 0.7
        A = dense_oracle(mesh, lambda vq, dq, vp, dp, x: dq * dp - F(x, t) * vq * dp)
        B = assemble_B(mesh, F, t).to_dense()
        assert np.max(np.abs(B - A)) <= 1e-12 * np.max(np.abs(A))

    def test_constant_forcing_convection_entries(self):
        c, mesh = 2.5, SpatialMesh(0.0, 1.0, 6)
        conv = assemble_B(mesh, lambda x, t: c + 0.0 * x, 0.0).to_dense() - assemble_B(
            mesh, lambda x, t: 0.0, 0.0).to_dense()
        # -(c phi_q, phi_p') = +-c/2 off the diagonal, zero on it
        np.testing.assert_allclose(np.diag(conv), 0.0, atol=1e-13)
        np.testing.assert_allclose(np.diag(conv, 1), c / 2, rtol=1e-13)
        np.testing.assert_allclose(np.diag(conv, -1), -c / 2, rtol=1e-13)

    def test_cached_stiffness_identical(self):
        mesh = SpatialMesh(0.0, 1.0, 12)
        K = fem1d.assemble_stiffness(mesh)
        F = lambda x, t: np.sin(x) + t  # noqa: E731
        a, b = assemble_B(mesh, F, 0.3), assemble_B(mesh, F, 0.3, stiffness=K)
        np.testing.assert_array_equal(a.diag, b.diag)


class TestLoad:
    def test_zero_source(self):
        G = load_vector(SpatialMesh(0.0, 1.0, 5), lambda x, t: 0.0 * x, (0.0, 0.1))
        np.testing.assert_array_equal(G, 0.0)

    def test_unit_source(self):
        mesh = SpatialMesh(0.0, 2.0, 8)
        G = load_vector(mesh, lambda x, t: 1.0 + 0.0 * x, (0.5, 0.75))
        np.testing.assert_allclose(G, 0.25 * mesh.h, rtol=1e-14)

    def oracle(self, mesh, g, t0, t1, order=20):
        x, w = mesh.element_points(order)
        x, w = x.ravel(), mesh.h * np.tile(w, mesh.P)
        tau, wt = fem1d.gauss_rule(order)
        out = np.zeros(mesh.ndof)
        for p in range(mesh.ndof):
            vp, _ = hat(mesh, p + 1, x)
            out[p] = sum(wt_i * (t1 - t0) * np.sum(w * g(x, s) * vp)
                         for s, wt_i in zip(t0 + (t1 - t0) * tau, wt))
        return out

    def test_smooth_source(self):
        mesh = SpatialMesh(0.0, math.pi, 64)
        g = lambda x, t: t * np.sin(x)  # noqa: E731
        G = load_vector(mesh, g, (0.2, 0.45))
        np.testing.assert_allclose(G, self.oracle(mesh, g, 0.2, 0.45), rtol=1e-10)

    def test_bilinear_source_exact_with_two_points(self):
        mesh = SpatialMesh(-1.0, 2.0, 5)
        g = lambda x, t: (1.0 + 2.0 * x) * (3.0 - t)  # noqa: E731
        G = load_vector(mesh, g, (0.1, 0.6), space_order=2, time_order=2)
        np.testing.assert_allclose(G, self.oracle(mesh, g, 0.1, 0.6), rtol=1e-12)


class TestInterpolationAndNorms:
    def test_zero(self):
        mesh = SpatialMesh(0.0, 1.0, 5)
        np.testing.assert_array_equal(interpolate(mesh, lambda x: 0.0), np.zeros(4))
        assert l2_norm(mesh, np.zeros(4)) == 0.0

    def test_sin_nodes(self):
        v = interpolate(SpatialMesh(0.0, math.pi, 4), np.sin)
        np.testing.assert_allclose(v, np.sin([math.pi / 4, math.pi / 2, 3 * math.pi / 4]))

    def test_interpolation_order(self):
        errs = []
        for P in (16, 32, 64, 128):
            mesh = SpatialMesh(0.0, math.pi, P)
            errs.append(l2_norm(mesh, interpolate(mesh, np.sin), np.sin))
        ratios = np.array(errs[:-1]) / np.array(errs[1:])
        np.testing.assert_allclose(ratios, 4.0, rtol=0.02)

    def test_norm_of_sin(self):
        mesh = SpatialMesh(0.0, math.pi, 40)
        assert l2_norm(mesh, f=np.sin) == pytest.approx(math.sqrt(math.pi / 2), rel=1e-7)
        assert l2_norm(mesh, f=np.sin, order=10, composite=False) == pytest.approx(
            math.sqrt(math.pi / 2), rel=1e-12)

    def test_piecewise_linear_exact(self):
        mesh = SpatialMesh(0.0, math.pi, 2)
        v = interpolate(mesh, lambda x: x * (math.pi - x))
        # hats on (0, pi) with one interior node: ||v phi||^2 = v^2 * 2h/3
        assert l2_norm(mesh, v) == pytest.approx(abs(v[0]) * math.sqrt(2 * mesh.h / 3), rel=1e-14)

    def test_integral_and_evaluate(self):
        mesh = SpatialMesh(0.0, 1.0, 4)
        v = np.array([1.0, 2.0, 1.0])
        assert fem1d.integral(mesh, v) == pytest.approx(1.0)
        np.testing.assert_allclose(fem1d.evaluate(mesh, v, [0.125, 0.5, 1.0]), [0.5, 2.0, 0.0])


class TestFirstMoment:
    def test_symmetric_is_zero(self):
        mesh = SpatialMesh(-3.0, 6.0, 12)
        v = interpolate(mesh, lambda x: np.cos(x * math.pi / 6))
        assert abs(first_moment(mesh, v)) < 1e-13

    def test_single_hat(self):
        # one interior node at x = 1/2 with value 1 on (0, 1): the tent has area 1/2, centred at 1/2
        mesh = SpatialMesh(0.0, 1.0, 2)
        assert first_moment(mesh, np.array([1.0])) == pytest.approx(0.25, rel=1e-15)

    def test_shifted_against_quadrature(self):
        mesh = SpatialMesh(0.5, 2.0, 7)
        v = np.random.default_rng(7).random(6)
        x = np.linspace(mesh.x_left, mesh.x_right, 200001)
        ref = np.trapezoid(x * fem1d.evaluate(mesh, v, x), x)
        assert first_moment(mesh, v) == pytest.approx(ref, rel=1e-8)

    def test_gaussian_initial_density(self):
        mesh = SpatialMesh(-9.0, 18.0, 162)
        v = interpolate(mesh, lambda x: np.exp(-2.0 * x**2) / (0.5 * math.sqrt(2 * math.pi)))
        assert abs(first_moment(mesh, v)) <= 1e-10


class TestThomas:
    def test_identity(self):
        A = TriDiagMatrix(np.zeros(3), np.ones(4), np.zeros(3))
        b = np.array([1.0, -2.0, 3.0, 0.5])
        np.testing.assert_array_equal(thomas_solve(A, b), b)

    def test_small_system(self):
        A = TriDiagMatrix(-np.ones(2), 2 * np.ones(3), -np.ones(2))
        np.testing.assert_allclose(thomas_solve(A, np.ones(3)), [1.5, 2.0, 1.5], rtol=1e-15)

    def test_single_unknown(self):
        A = TriDiagMatrix(np.zeros(0), np.array([4.0]), np.zeros(0))
        np.testing.assert_allclose(thomas_solve(A, np.array([2.0])), [0.5])

    @settings(max_examples=100, deadline=None)
    @given(st.integers(1, 200), st.integers(0, 2**32 - 1))
    def test_random_dominant(self, n, seed):
        rng = np.random.default_rng(seed)
        sub, sup = rng.uniform(-1, 1, n - 1), rng.uniform(-1, 1, n - 1)
        diag = 2.0 + rng.random(n)
        diag *= rng.choice([-1.0, 1.0], n)
        A = TriDiagMatrix(sub, diag, sup)
        b = rng.standard_normal(n)
        x = thomas_solve(A, b)
        ref = np.linalg.solve(A.to_dense(), b)
        assert np.max(np.abs(x - ref)) <= 1e-12 * max(1.0, np.max(np.abs(ref)))
        res = np.max(np.abs(A.matvec(x) - b))
        assert res <= 1e-10 * A.norm_inf() * np.max(np.abs(x))

    def test_breakdown_reports_row(self):
        A = TriDiagMatrix(np.array([1.0, 1.0]), np.array([1.0, 1.0, 1.0]), np.array([1.0, 1.0]))
        with pytest.raises(BreakdownError) as info:
            thomas_solve(A, np.ones(3))
        assert info.value.row == 1

    def test_zero_first_pivot(self):
        A = TriDiagMatrix(np.ones(1), np.array([0.0, 1.0]), np.ones(1))
        with pytest.raises(BreakdownError):
            thomas_solve(A, np.ones(2))

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            thomas_solve(TriDiagMatrix(np.zeros(1), np.ones(2), np.zeros(1)), np.ones(3))
