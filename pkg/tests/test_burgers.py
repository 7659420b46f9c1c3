import numpy as np
import pytest

from admmvar.burgers import (
    BurgersFDConfig,
    BurgersFEMConfig,
    BurgersSpectralConfig,
    burgers_initial_state,
    fd_adjoint,
    fd_initial_state,
    fd_step,
    fd_tangent,
    fem_adjoint,
    fem_assemble_s1,
    fem_assemble_s2,
    fem_initial_state,
    fem_step,
    fem_tangent,
    spectral_adjoint,
    spectral_initial_state,
    spectral_step,
    spectral_tangent,
    spectral_tangent_matrix,
)
from admmvar.numerics import tridiagonal_solve

FD = BurgersFDConfig(m=100)
FEM = BurgersFEMConfig(m=100)
SPECTRAL = BurgersSpectralConfig(m=50)


def fd_step_loop_oracle(u, cfg):
    """Explicit per-node loop of the central-difference update."""
    m, dt, dx, g = cfg.m, cfg.dt, cfg.dx, cfg.gamma
    full = np.zeros(m + 1)
    full[1:m] = u
    out = np.zeros(m - 1)
    for i in range(1, m):
        out[i - 1] = (
            full[i]
            - dt * (full[i + 1] ** 2 - full[i - 1] ** 2) / (4 * dx)
            + g * dt * (full[i + 1] + full[i - 1] - 2 * full[i]) / dx**2
        )
    return out


class TestFiniteDifference:
    def test_zero_fixed_point(self):
        z = np.zeros(FD.dim)
        np.testing.assert_array_equal(fd_step(z, FD), z)

    def test_single_spike_support_and_values(self):
        j = 40  # 0-based interior index, away from both boundaries
        u = np.zeros(FD.dim)
        u[j] = 1.0
        out = fd_step(u, FD)
        r = FD.gamma * FD.dt / FD.dx**2
        c = FD.dt / (4 * FD.dx)
        expected = np.zeros(FD.dim)
        # downstream neighbor (j+1) receives the positive flux contribution
        expected[j - 1] = r - c
        expected[j] = 1 - 2 * r
        expected[j + 1] = r + c
        np.testing.assert_allclose(out, expected, atol=1e-15)

    def test_sin_profile_matches_loop_oracle(self):
        u = fd_initial_state(FD)
        np.testing.assert_allclose(fd_step(u, FD), fd_step_loop_oracle(u, FD), rtol=1e-14)

    def test_unstable_construction_rejected(self):
        with pytest.raises(ValueError):
            BurgersFDConfig(m=100, dt=0.02)

    def test_tangent_zero(self):
        rng = np.random.default_rng(0)
        u = rng.standard_normal(FD.dim)
        np.testing.assert_array_equal(fd_tangent(u, np.zeros(FD.dim), FD), np.zeros(FD.dim))

    def test_tangent_at_zero_state_is_diffusion(self):
        rng = np.random.default_rng(1)
        v = rng.standard_normal(FD.dim)
        out = fd_tangent(np.zeros(FD.dim), v, FD)
        r = FD.gamma * FD.dt / FD.dx**2
        vp = np.zeros(FD.dim + 2)
        vp[1:-1] = v
        np.testing.assert_allclose(out, r * vp[:-2] + (1 - 2 * r) * v + r * vp[2:], atol=1e-15)

    def test_tangent_finite_difference(self):
        rng = np.random.default_rng(2)
        u = fd_initial_state(FD) + 0.1 * rng.standard_normal(FD.dim)
        v = rng.standard_normal(FD.dim)
        eps = 1e-7
        fd = (fd_step(u + eps * v, FD) - fd_step(u, FD)) / eps
        tan = fd_tangent(u, v, FD)
        assert np.linalg.norm(fd - tan) / np.linalg.norm(tan) <= 1e-5

    def test_adjoint_at_zero_equals_tangent(self):
        rng = np.random.default_rng(3)
        w = rng.standard_normal(FD.dim)
        np.testing.assert_allclose(
            fd_adjoint(np.zeros(FD.dim), w, FD), fd_tangent(np.zeros(FD.dim), w, FD), atol=1e-15
        )

    def test_adjoint_dot_product_100_triples(self):
        rng = np.random.default_rng(4)
        worst = 0.0
        for _ in range(100):
            u = rng.standard_normal(FD.dim)
            v = rng.standard_normal(FD.dim)
            w = rng.standard_normal(FD.dim)
            lhs = np.dot(fd_tangent(u, v, FD), w)
            rhs = np.dot(v, fd_adjoint(u, w, FD))
            worst = max(worst, abs(lhs - rhs) / (np.linalg.norm(v) * np.linalg.norm(w)))
        assert worst <= 1e-12

    def test_fuzz_outputs_finite(self):
        rng = np.random.default_rng(5)
        for _ in range(20):
            u = rng.standard_normal(FD.dim)
            assert np.isfinite(fd_step(u, FD)).all()

    def test_initial_state_small_m(self):
        cfg = BurgersFDConfig(m=4, dt=1e-4)
        np.testing.assert_allclose(
            fd_initial_state(cfg), [np.sin(np.pi / 4), np.sin(np.pi / 2), np.sin(3 * np.pi / 4)]
        )


def dense_fem_matrices(cfg):
    """Dense R and T assembled independently from the printed entry patterns."""
    n = cfg.dim
    dx = cfg.dx
    R = np.zeros((n, n))
    T = np.zeros((n, n))
    for i in range(n):
        R[i, i] = 2 * dx / 3
        T[i, i] = 2 / dx
        if i + 1 < n:
            R[i, i + 1] = R[i + 1, i] = dx / 6
            T[i, i + 1] = T[i + 1, i] = -1 / dx
    return R, T


def dense_s1_s2(u):
    n = len(u)
    full = np.zeros(n + 2)
    full[1:-1] = u
    S1 = np.zeros((n, n))
    S2 = np.zeros((n, n))
    for row in range(1, n + 1):  # 1-based interior index
        um, uc, up = full[row - 1], full[row], full[row + 1]
        S1[row - 1, row - 1] = (up - um) / 3
        S2[row - 1, row - 1] = (um - up) / 6
        if row > 1:
            S1[row - 1, row - 2] = (uc - um) / 6
            S2[row - 1, row - 2] = -(um + 2 * uc) / 6
        if row < n:
            S1[row - 1, row] = (up - uc) / 6
            S2[row - 1, row] = (2 * uc + up) / 6
    return S1, S2


def galerkin_convection_quadrature(u):
    """Independent 2-point-Gauss quadrature of sum_i u_i * int(u u_x phi_i).

    u is piecewise linear with zero boundary values; the integrand on each
    element is quadratic, so two Gauss points integrate it exactly.
    """
    n = len(u)
    dx = np.pi / (n + 1)
    full = np.zeros(n + 2)
    full[1:-1] = u
    gauss = (0.5 - 0.5 / np.sqrt(3), 0.5 + 0.5 / np.sqrt(3))
    total = 0.0
    for e in range(n + 1):  # element [x_e, x_{e+1}]
        ul, ur = full[e], full[e + 1]
        du = (ur - ul) / dx
        for t in gauss:
            uval = ul + (ur - ul) * t
            # test function u itself: phi-weighted sum equals u at this point
            total += 0.5 * dx * uval * du * uval
    return total


class TestFiniteElement:
    def test_s1_s2_zero_state(self):
        z = np.zeros(FEM.dim)
        assert np.all(fem_assemble_s1(z, FEM).diagonal == 0)
        assert np.all(fem_assemble_s2(z, FEM).diagonal == 0)
        assert np.all(fem_assemble_s1(z, FEM).lower == 0)
        assert np.all(fem_assemble_s2(z, FEM).upper == 0)

    def test_s1_constant_state_boundary_rows(self):
        c = 1.7
        u = np.full(FEM.dim, c)
        S1 = fem_assemble_s1(u, FEM)
        np.testing.assert_allclose(S1.diagonal[0], c / 3)
        np.testing.assert_allclose(S1.diagonal[-1], -c / 3)
        np.testing.assert_allclose(S1.diagonal[1:-1], 0.0, atol=1e-16)

    def test_s1_matches_dense_pattern(self):
        rng = np.random.default_rng(6)
        u = rng.standard_normal(FEM.dim)
        S1d, S2d = dense_s1_s2(u)
        S1 = fem_assemble_s1(u, FEM)
        S2 = fem_assemble_s2(u, FEM)
        np.testing.assert_allclose(np.diag(S1.diagonal) + np.diag(S1.lower, -1) + np.diag(S1.upper, 1), S1d)
        np.testing.assert_allclose(np.diag(S2.diagonal) + np.diag(S2.lower, -1) + np.diag(S2.upper, 1), S2d)

    def test_s1_quadratic_form_matches_quadrature(self):
        rng = np.random.default_rng(7)
        u = rng.standard_normal(FEM.dim)
        S1 = fem_assemble_s1(u, FEM)
        lhs = float(np.dot(u, S1.apply(u)))
        rhs = galerkin_convection_quadrature(u)
        assert abs(lhs - rhs) <= 1e-12 * max(1.0, abs(rhs))

    def test_zero_fixed_point(self):
        z = np.zeros(FEM.dim)
        np.testing.assert_array_equal(fem_step(z, FEM), z)

    def test_diffusion_only_matches_dense(self):
        # gamma-part of the update, with the convection matrix forced to zero
        u = np.sin(np.arange(1, FEM.m) * FEM.dx)
        R, T = dense_fem_matrices(FEM)
        expected = u - FEM.dt * FEM.gamma * np.linalg.solve(R, T @ u)
        got = u - FEM.dt * FEM.gamma * tridiagonal_solve(FEM.mass, FEM.stiffness.apply(u))
        np.testing.assert_allclose(got, expected, atol=1e-12)

    def test_full_step_matches_dense(self):
        rng = np.random.default_rng(8)
        u = rng.standard_normal(FEM.dim)
        R, T = dense_fem_matrices(FEM)
        S1d, _ = dense_s1_s2(u)
        expected = u - FEM.dt * np.linalg.solve(R, S1d @ u + FEM.gamma * T @ u)
        np.testing.assert_allclose(fem_step(u, FEM), expected, atol=1e-12)

    def test_tangent_matches_dense(self):
        rng = np.random.default_rng(9)
        u = rng.standard_normal(FEM.dim)
        v = rng.standard_normal(FEM.dim)
        R, T = dense_fem_matrices(FEM)
        S1d, S2d = dense_s1_s2(u)
        expected = v - FEM.dt * np.linalg.solve(R, (S1d + S2d + FEM.gamma * T) @ v)
        np.testing.assert_allclose(fem_tangent(u, v, FEM), expected, atol=1e-12)

    def test_tangent_zero(self):
        rng = np.random.default_rng(10)
        u = rng.standard_normal(FEM.dim)
        np.testing.assert_array_equal(fem_tangent(u, np.zeros(FEM.dim), FEM), np.zeros(FEM.dim))

    def test_tangent_finite_difference(self):
        rng = np.random.default_rng(11)
        u = fem_initial_state(FEM) + 0.1 * rng.standard_normal(FEM.dim)
        v = rng.standard_normal(FEM.dim)
        eps = 1e-7
        fd = (fem_step(u + eps * v, FEM) - fem_step(u, FEM)) / eps
        tan = fem_tangent(u, v, FEM)
        assert np.linalg.norm(fd - tan) / np.linalg.norm(tan) <= 1e-5

    def test_adjoint_dot_product(self):
        rng = np.random.default_rng(12)
        worst = 0.0
        for _ in range(100):
            u = rng.standard_normal(FEM.dim)
            v = rng.standard_normal(FEM.dim)
            w = rng.standard_normal(FEM.dim)
            lhs = np.dot(fem_tangent(u, v, FEM), w)
            rhs = np.dot(v, fem_adjoint(u, w, FEM))
            worst = max(worst, abs(lhs - rhs) / (np.linalg.norm(v) * np.linalg.norm(w)))
        assert worst <= 1e-11

    def test_unstable_construction_rejected(self):
        with pytest.raises(ValueError):
            BurgersFEMConfig(m=100, dt=0.01)

    def test_initial_state_is_mass_solve(self):
        x = np.arange(1, FEM.m) * FEM.dx
        expected = tridiagonal_solve(FEM.mass, FEM.stiffness.apply(np.sin(x)))
        np.testing.assert_array_equal(fem_initial_state(FEM), expected)


def spectral_step_loop_oracle(u, cfg):
    m, dt, g = cfg.m, cfg.dt, cfg.gamma
    full = np.zeros(m + 1)  # full[i] = u_i, 1-based with u_0 = 0
    full[1:] = u
    out = np.zeros(m)
    conv1 = sum(full[l] * full[l + 1] for l in range(1, m))
    out[0] = full[1] + dt * (0.5 * conv1 - g * full[1])
    for i in range(2, m + 1):
        A = sum(full[l] * full[i - l] for l in range(1, i + 1) if 0 <= i - l <= m)
        B = sum(full[l] * full[i + l] for l in range(1, m - i + 1))
        out[i - 1] = full[i] - dt * ((i / 4) * (A - 2 * B) + g * i * i * full[i])
    return out


class TestSpectral:
    def test_zero_fixed_point(self):
        z = np.zeros(SPECTRAL.dim)
        np.testing.assert_array_equal(spectral_step(z, SPECTRAL), z)

    def test_first_mode_unit(self):
        u = spectral_initial_state(SPECTRAL)
        out = spectral_step(u, SPECTRAL)
        np.testing.assert_allclose(out[0], 1 - SPECTRAL.gamma * SPECTRAL.dt)
        np.testing.assert_allclose(out[1], -SPECTRAL.dt / 2)
        np.testing.assert_array_equal(out[2:], np.zeros(SPECTRAL.dim - 2))

    def test_matches_double_loop_oracle(self):
        rng = np.random.default_rng(13)
        u = rng.standard_normal(SPECTRAL.dim)
        np.testing.assert_allclose(
            spectral_step(u, SPECTRAL), spectral_step_loop_oracle(u, SPECTRAL), rtol=1e-14, atol=1e-14
        )

    def test_tangent_zero(self):
        rng = np.random.default_rng(14)
        u = rng.standard_normal(SPECTRAL.dim)
        np.testing.assert_array_equal(
            spectral_tangent(u, np.zeros(SPECTRAL.dim), SPECTRAL), np.zeros(SPECTRAL.dim)
        )

    def test_tangent_finite_difference(self):
        rng = np.random.default_rng(15)
        u = 0.5 * rng.standard_normal(SPECTRAL.dim)
        v = rng.standard_normal(SPECTRAL.dim)
        eps = 1e-7
        fd = (spectral_step(u + eps * v, SPECTRAL) - spectral_step(u, SPECTRAL)) / eps
        tan = spectral_tangent(u, v, SPECTRAL)
        assert np.linalg.norm(fd - tan) / np.linalg.norm(tan) <= 1e-5

    def test_adjoint_is_dense_transpose(self):
        rng = np.random.default_rng(16)
        u = rng.standard_normal(SPECTRAL.dim)
        w = rng.standard_normal(SPECTRAL.dim)
        M = spectral_tangent_matrix(u, SPECTRAL)
        np.testing.assert_allclose(spectral_adjoint(u, w, SPECTRAL), M.T @ w, rtol=1e-14)

    def test_adjoint_dot_product(self):
        rng = np.random.default_rng(17)
        worst = 0.0
        for _ in range(100):
            u = rng.standard_normal(SPECTRAL.dim)
            v = rng.standard_normal(SPECTRAL.dim)
            w = rng.standard_normal(SPECTRAL.dim)
            lhs = np.dot(spectral_tangent(u, v, SPECTRAL), w)
            rhs = np.dot(v, spectral_adjoint(u, w, SPECTRAL))
            worst = max(worst, abs(lhs - rhs) / (np.linalg.norm(v) * np.linalg.norm(w)))
        assert worst <= 1e-12

    def test_tangent_linearity(self):
        rng = np.random.default_rng(18)
        u = rng.standard_normal(SPECTRAL.dim)
        v1 = rng.standard_normal(SPECTRAL.dim)
        v2 = rng.standard_normal(SPECTRAL.dim)
        lhs = spectral_tangent(u, 2.0 * v1 - 0.5 * v2, SPECTRAL)
        rhs = 2.0 * spectral_tangent(u, v1, SPECTRAL) - 0.5 * spectral_tangent(u, v2, SPECTRAL)
        np.testing.assert_allclose(lhs, rhs, atol=1e-13)

    def test_unstable_construction_rejected(self):
        with pytest.raises(ValueError):
            BurgersSpectralConfig(m=100, dt=0.01)

    def test_initial_state(self):
        u0 = burgers_initial_state(SPECTRAL)
        assert u0[0] == 1.0
        assert np.all(u0[1:] == 0.0)


def quadratic_occurrence_count(step, dim, zero):
    """Count (a, b) monomial occurrences with nonzero coefficients across all
    output components, by exact polarization of the quadratic map."""
    base = step(zero)

    def quad(u):
        # remove constant and linear parts: Q(u) = (f(u) + f(-u))/2 - f(0)
        return 0.5 * (step(u) + step(-u)) - base

    count = 0
    for a in range(dim):
        ea = np.zeros(dim)
        ea[a] = 1.0
        qa = quad(ea)
        count += np.count_nonzero(np.abs(qa) > 1e-13)  # u_a^2 terms
        for b in range(a + 1, dim):
            eb = np.zeros(dim)
            eb[b] = 1.0
            cross = quad(ea + eb) - qa - quad(eb)
            count += np.count_nonzero(np.abs(cross) > 1e-13)
    return count


class TestComplexitySignature:
    def test_fd_quadratic_terms_linear_in_m(self):
        cfg = BurgersFDConfig(m=10, dt=1e-4)
        n = quadratic_occurrence_count(lambda u: fd_step(u, cfg), cfg.dim, np.zeros(cfg.dim))
        # 2(m-1) formula occurrences minus the two boundary squares that hit zeros
        assert n == 2 * (cfg.m - 1) - 2

    def test_spectral_quadratic_terms_quadratic_in_m(self):
        cfg = BurgersSpectralConfig(m=12, dt=1e-3)
        n = quadratic_occurrence_count(
            lambda u: spectral_step(u, cfg), cfg.dim, np.zeros(cfg.dim)
        )
        assert n >= cfg.m**2 / 2


class TestBatching:
    def test_fd_batch(self):
        rng = np.random.default_rng(19)
        U = rng.standard_normal((6, FD.dim))
        batch = fd_step(U, FD)
        for i in range(6):
            np.testing.assert_array_equal(batch[i], fd_step(U[i], FD))

    def test_fem_batch(self):
        rng = np.random.default_rng(20)
        U = rng.standard_normal((6, FEM.dim))
        W = rng.standard_normal((6, FEM.dim))
        batch = fem_adjoint(U, W, FEM)
        for i in range(6):
            np.testing.assert_array_equal(batch[i], fem_adjoint(U[i], W[i], FEM))

    def test_spectral_batch(self):
        rng = np.random.default_rng(21)
        U = rng.standard_normal((4, SPECTRAL.dim))
        batch = spectral_step(U, SPECTRAL)
        for i in range(4):
            np.testing.assert_array_equal(batch[i], spectral_step(U[i], SPECTRAL))


class TestTangentSuperposition:
    @pytest.mark.parametrize(
        "tangent,cfg",
        [(fd_tangent, FD), (fem_tangent, FEM)],
        ids=["fd", "fem"],
    )
    def test_linear_in_perturbation(self, tangent, cfg):
        rng = np.random.default_rng(22)
        u = rng.standard_normal(cfg.dim)
        v1 = rng.standard_normal(cfg.dim)
        v2 = rng.standard_normal(cfg.dim)
        lhs = tangent(u, 0.3 * v1 - 1.7 * v2, cfg)
        rhs = 0.3 * tangent(u, v1, cfg) - 1.7 * tangent(u, v2, cfg)
        np.testing.assert_allclose(lhs, rhs, atol=1e-13)
