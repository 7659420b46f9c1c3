"""Lorenz-63 dynamics under a fixed-step RK4 map, with the exact tangent
linear and adjoint of the discrete map.

The one-step map H advances the state (x, y, z) by one RK4 step of

    x' = sigma (y - x)
    y' = x (rho - z) - y
    z' = x y - beta z

Differentiating the discrete RK4 recursion (rather than re-integrating the
continuous variational equations) gives a 3x3 tangent matrix whose transpose
is the adjoint, so the duality identity <dH v, w> = <v, dH^T w> holds to
round-off. All functions broadcast over leading axes: states may be (3,) or
(..., 3), in which case a batch of independent systems is advanced at once.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class LorenzParams:
    sigma: float = 10.0
    rho: float = 28.0
    beta: float = 8.0 / 3.0
    dt: float = 0.01

    def __post_init__(self):
        if self.dt < 0:
            raise ValueError("dt must be non-negative")


def lorenz_rhs(u: np.ndarray, p: LorenzParams) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    x, y, z = u[..., 0], u[..., 1], u[..., 2]
    return np.stack(
        [p.sigma * (y - x), x * (p.rho - z) - y, x * y - p.beta * z], axis=-1
    )


def lorenz_jacobian(u: np.ndarray, p: LorenzParams) -> np.ndarray:
    """Jacobian of the continuous right-hand side; rows are
    (-sigma, sigma, 0), (rho - z, -1, -x), (y, x, -beta)."""
    u = np.asarray(u, dtype=float)
    x, y, z = u[..., 0], u[..., 1], u[..., 2]
    one = np.ones_like(x)
    zero = np.zeros_like(x)
    return np.stack(
        [
            np.stack([-p.sigma * one, p.sigma * one, zero], axis=-1),
            np.stack([p.rho - z, -one, -x], axis=-1),
            np.stack([y, x, -p.beta * one], axis=-1),
        ],
        axis=-2,
    )


def rk4_step(u: np.ndarray, p: LorenzParams) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    dt = p.dt
    k1 = lorenz_rhs(u, p)
    k2 = lorenz_rhs(u + 0.5 * dt * k1, p)
    k3 = lorenz_rhs(u + 0.5 * dt * k2, p)
    k4 = lorenz_rhs(u + dt * k3, p)
    return u + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def rk4_tangent_matrix(u: np.ndarray, p: LorenzParams) -> np.ndarray:
    """Exact derivative of the one-step RK4 map, shape (..., 3, 3)."""
    u = np.asarray(u, dtype=float)
    dt = p.dt
    I = np.eye(3)
    k1 = lorenz_rhs(u, p)
    K1 = lorenz_jacobian(u, p)
    u2 = u + 0.5 * dt * k1
    K2 = lorenz_jacobian(u2, p) @ (I + 0.5 * dt * K1)
    k2 = lorenz_rhs(u2, p)
    u3 = u + 0.5 * dt * k2
    K3 = lorenz_jacobian(u3, p) @ (I + 0.5 * dt * K2)
    k3 = lorenz_rhs(u3, p)
    u4 = u + dt * k3
    K4 = lorenz_jacobian(u4, p) @ (I + dt * K3)
    return I + (dt / 6.0) * (K1 + 2.0 * K2 + 2.0 * K3 + K4)


def rk4_tangent(u: np.ndarray, v: np.ndarray, p: LorenzParams) -> np.ndarray:
    """Apply dH(u) to the perturbation v."""
    M = rk4_tangent_matrix(u, p)
    v = np.asarray(v, dtype=float)
    return np.einsum("...ij,...j->...i", M, v)


def rk4_adjoint(u: np.ndarray, w: np.ndarray, p: LorenzParams) -> np.ndarray:
    """Apply dH(u)^T to the sensitivity w."""
    M = rk4_tangent_matrix(u, p)
    w = np.asarray(w, dtype=float)
    return np.einsum("...ji,...j->...i", M, w)
