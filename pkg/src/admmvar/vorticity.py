"""Large-scale 2-D vorticity dynamics on a square box with slip boundary
(omega = 0 on the walls):

    d(omega)/dt + J(psi, omega) = -kappa * lap^2(omega),   omega = lap(psi).

Space is discretized with the enstrophy/energy-conserving Arakawa Jacobian
(average of the three second-order forms) and the 5-point Laplacian; the
streamfunction solve lap(psi) = omega uses red-black SOR. Time stepping is a
prediction-correction pair: a forward-Euler predictor followed by a corrector
that re-advects the predicted field with the original streamfunction.

The tangent map differentiates the predictor-corrector exactly, treating the
Arakawa bracket through its bilinear operator form J(u, v) = Jop[u] v
= -Jop[v] u. Because the discrete bracket sum is totally antisymmetric for
fields vanishing on the boundary, Jop[u] is exactly skew-symmetric, so its
transpose is plain negation; the adjoint therefore needs only Poisson solves
and stencil applications. Inverse-Laplacian applications inside the tangent
and adjoint reuse the same SOR solver and tolerance as the forward model, so
the duality identity holds to solver tolerance (~1e-10), not round-off.

Fields are interior values on the (m-1) x (m-1) lattice; every function
accepts (..., n, n) or row-major flattened (..., n*n) layouts and broadcasts
over leading batch axes.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .numerics import Grid2D, as_field, laplacian_5pt, pad_zero, sor_poisson_solve


@dataclass(frozen=True)
class VorticityConfig:
    grid: Grid2D = field(default_factory=lambda: Grid2D(m=20, dx=0.2, dy=0.2))
    dt: float | None = None        # defaults to 3*dx*dy
    kappa: float | None = None     # defaults to 0.001*dx*dy
    sor_relax: float | None = None  # defaults to the grid optimum
    sor_tol: float = 1e-10
    sor_max_sweeps: int = 100_000

    def __post_init__(self):
        if self.dt is None:
            object.__setattr__(self, "dt", 3.0 * self.grid.dx * self.grid.dy)
        if self.kappa is None:
            object.__setattr__(self, "kappa", 0.001 * self.grid.dx * self.grid.dy)
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if self.kappa < 0:
            raise ValueError("kappa must be non-negative")

    @property
    def dim(self) -> int:
        return self.grid.interior_dim


def arakawa_jacobian(u: np.ndarray, v: np.ndarray, grid: Grid2D) -> np.ndarray:
    """Nine-point Arakawa Jacobian (J1 + J2 + J3)/3 with zero ghost values.

    Conserves the lattice sums of J, u*J and v*J (mean vorticity, enstrophy
    and energy) when the one-point boundary ring is included in the sum, and
    is exactly antisymmetric under u <-> v.
    """
    uf, flat = as_field(u, grid)
    vf, _ = as_field(v, grid)
    U = pad_zero(uf)
    V = pad_zero(vf)
    c = slice(1, -1)
    p = slice(2, None)
    m = slice(0, -2)
    J1 = (U[..., p, c] - U[..., m, c]) * (V[..., c, p] - V[..., c, m]) - (
        U[..., c, p] - U[..., c, m]
    ) * (V[..., p, c] - V[..., m, c])
    J2 = (
        U[..., p, c] * (V[..., p, p] - V[..., p, m])
        - U[..., m, c] * (V[..., m, p] - V[..., m, m])
        - U[..., c, p] * (V[..., p, p] - V[..., m, p])
        + U[..., c, m] * (V[..., p, m] - V[..., m, m])
    )
    J3 = (
        (U[..., p, p] - U[..., m, p]) * V[..., c, p]
        - (U[..., p, m] - U[..., m, m]) * V[..., c, m]
        - (U[..., p, p] - U[..., p, m]) * V[..., p, c]
        + (U[..., m, p] - U[..., m, m]) * V[..., m, c]
    )
    out = (J1 + J2 + J3) / (12.0 * grid.dx * grid.dy)
    return out.reshape(out.shape[:-2] + (grid.interior_dim,)) if flat else out


@dataclass(frozen=True)
class JacobianOperator:
    """The linear operator Jop[u] = J(u, .) frozen at a field u."""

    u: np.ndarray
    grid: Grid2D

    def apply(self, v: np.ndarray) -> np.ndarray:
        vf, flat = as_field(v, self.grid)
        out = arakawa_jacobian(self.u, vf, self.grid)
        return out.reshape(out.shape[:-2] + (self.grid.interior_dim,)) if flat else out

    def apply_transpose(self, w: np.ndarray) -> np.ndarray:
        # the discrete bracket is totally antisymmetric, so Jop[u]^T = -Jop[u]
        return -self.apply(w)

    def materialize(self) -> np.ndarray:
        dim = self.grid.interior_dim
        M = np.empty((dim, dim))
        e = np.zeros(dim)
        for j in range(dim):
            e[j] = 1.0
            M[:, j] = arakawa_jacobian(self.u, e, self.grid).ravel()
            e[j] = 0.0
        return M


def jacobian_operator(u: np.ndarray, grid: Grid2D) -> JacobianOperator:
    uf, _ = as_field(u, grid)
    return JacobianOperator(uf, grid)


def biharmonic_apply(w: np.ndarray, grid: Grid2D) -> np.ndarray:
    """lap(lap(w)) with a zero ghost ring before each Laplacian."""
    wf, flat = as_field(w, grid)
    out = laplacian_5pt(laplacian_5pt(wf, grid), grid)
    return out.reshape(out.shape[:-2] + (grid.interior_dim,)) if flat else out


def _solve_psi(w: np.ndarray, cfg: VorticityConfig) -> np.ndarray:
    return sor_poisson_solve(
        w, cfg.grid, relax=cfg.sor_relax, tol=cfg.sor_tol, max_sweeps=cfg.sor_max_sweeps
    )


def predict(w: np.ndarray, cfg: VorticityConfig) -> np.ndarray:
    """Forward-Euler predictor: w - dt*(J(psi, w) + kappa*lap^2 w)."""
    wf, flat = as_field(w, cfg.grid)
    psi = _solve_psi(wf, cfg)
    out = wf - cfg.dt * (
        arakawa_jacobian(psi, wf, cfg.grid) + cfg.kappa * biharmonic_apply(wf, cfg.grid)
    )
    return out.reshape(out.shape[:-2] + (cfg.dim,)) if flat else out


def step(w: np.ndarray, cfg: VorticityConfig) -> np.ndarray:
    """Predictor-corrector step; the corrector advects the predicted field
    with the streamfunction of the original one."""
    wf, flat = as_field(w, cfg.grid)
    grid = cfg.grid
    psi = _solve_psi(wf, cfg)
    wp = wf - cfg.dt * (
        arakawa_jacobian(psi, wf, grid) + cfg.kappa * biharmonic_apply(wf, grid)
    )
    out = wf - cfg.dt * (
        arakawa_jacobian(psi, wp, grid) + cfg.kappa * biharmonic_apply(wp, grid)
    )
    return out.reshape(out.shape[:-2] + (cfg.dim,)) if flat else out


def tangent_apply(w: np.ndarray, dv: np.ndarray, cfg: VorticityConfig) -> np.ndarray:
    """Exact derivative of step() at w applied to the perturbation dv."""
    wf, flat = as_field(w, cfg.grid)
    dvf, _ = as_field(dv, cfg.grid)
    grid = cfg.grid
    kappa = cfg.kappa
    dt = cfg.dt
    psi = _solve_psi(wf, cfg)
    wp = wf - dt * (arakawa_jacobian(psi, wf, grid) + kappa * biharmonic_apply(wf, grid))
    phi = _solve_psi(dvf, cfg)
    dP = dvf + dt * (
        arakawa_jacobian(wf, phi, grid)
        - arakawa_jacobian(psi, dvf, grid)
        - kappa * biharmonic_apply(dvf, grid)
    )
    out = dvf + dt * (
        arakawa_jacobian(wp, phi, grid)
        - (arakawa_jacobian(psi, dP, grid) + kappa * biharmonic_apply(dP, grid))
    )
    return out.reshape(out.shape[:-2] + (cfg.dim,)) if flat else out


def adjoint_apply(w: np.ndarray, dw: np.ndarray, cfg: VorticityConfig) -> np.ndarray:
    """Transpose of tangent_apply in the Euclidean inner product.

    Uses Jop[.]^T = -Jop[.] plus the self-adjointness of the inverse
    Laplacian and the biharmonic stencil.
    """
    wf, flat = as_field(w, cfg.grid)
    dwf, _ = as_field(dw, cfg.grid)
    grid = cfg.grid
    kappa = cfg.kappa
    dt = cfg.dt
    psi = _solve_psi(wf, cfg)
    wp = wf - dt * (arakawa_jacobian(psi, wf, grid) + kappa * biharmonic_apply(wf, grid))
    t1 = _solve_psi(-arakawa_jacobian(wp, dwf, grid), cfg)
    v = -arakawa_jacobian(psi, dwf, grid) + kappa * biharmonic_apply(dwf, grid)
    dPt = v + dt * (
        _solve_psi(-arakawa_jacobian(wf, v, grid), cfg)
        + arakawa_jacobian(psi, v, grid)
        - kappa * biharmonic_apply(v, grid)
    )
    out = dwf + dt * (t1 - dPt)
    return out.reshape(out.shape[:-2] + (cfg.dim,)) if flat else out


def energy_inner(a: np.ndarray, b: np.ndarray, cfg: VorticityConfig) -> float:
    """Velocity-space inner product <a, (-lap)^-1 b> via one Poisson solve."""
    af, _ = as_field(a, cfg.grid)
    bf, _ = as_field(b, cfg.grid)
    return float(np.sum(af * (-_solve_psi(bf, cfg))))


def initial_field(cfg: VorticityConfig, stream) -> np.ndarray:
    """Random initial vorticity, componentwise 5*N(0,1)."""
    n = cfg.grid.interior_n
    return 5.0 * stream.normal((n, n))


def save_field_csv(w: np.ndarray, grid: Grid2D, path) -> None:
    """Write an interior field as CSV rows i,j,omega (row-major indices)."""
    wf, _ = as_field(w, grid)
    n = grid.interior_n
    with open(path, "w") as fh:
        fh.write("i,j,omega\n")
        for i in range(n):
            for j in range(n):
                fh.write(f"{i},{j},{wf[i, j]:.17g}\n")
