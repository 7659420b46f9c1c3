"""Uniform callable contract over the built-in dynamical models.

A ModelCapability bundles the one-step map with its tangent and adjoint,
working on flat state vectors. All three callables accept arrays shaped
(..., dim) and act on the last axis, so solvers can sweep a whole stack of
time blocks in one vectorized call. sample_state draws a typical-magnitude
state for verification utilities, true_initial provides the twin-experiment
truth at t = 0.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import burgers, lorenz, vorticity
from .numerics import RandomStream


@dataclass(frozen=True)
class ModelCapability:
    name: str
    dim: int
    step: Callable[[np.ndarray], np.ndarray]
    tangent: Callable[[np.ndarray, np.ndarray], np.ndarray]
    adjoint: Callable[[np.ndarray, np.ndarray], np.ndarray]
    sample_state: Callable[[RandomStream], np.ndarray]
    true_initial: Callable[[RandomStream], np.ndarray]
    dt: float
    config: object = None


def lorenz_model(params: lorenz.LorenzParams | None = None) -> ModelCapability:
    p = params or lorenz.LorenzParams()
    truth = np.array([-0.5, 0.5, 20.5])
    return ModelCapability(
        name="lorenz",
        dim=3,
        step=lambda u: lorenz.rk4_step(u, p),
        tangent=lambda u, v: lorenz.rk4_tangent(u, v, p),
        adjoint=lambda u, w: lorenz.rk4_adjoint(u, w, p),
        sample_state=lambda stream: truth + stream.normal(3),
        true_initial=lambda stream: truth.copy(),
        dt=p.dt,
        config=p,
    )


def burgers_fd_model(cfg: burgers.BurgersFDConfig | None = None) -> ModelCapability:
    c = cfg or burgers.BurgersFDConfig()
    base = burgers.fd_initial_state(c)
    return ModelCapability(
        name="burgers-fd",
        dim=c.dim,
        step=lambda u: burgers.fd_step(u, c),
        tangent=lambda u, v: burgers.fd_tangent(u, v, c),
        adjoint=lambda u, w: burgers.fd_adjoint(u, w, c),
        sample_state=lambda stream: base + 0.2 * stream.normal(c.dim),
        true_initial=lambda stream: base.copy(),
        dt=c.dt,
        config=c,
    )


def burgers_fem_model(cfg: burgers.BurgersFEMConfig | None = None) -> ModelCapability:
    c = cfg or burgers.BurgersFEMConfig()
    base = burgers.fem_initial_state(c)
    return ModelCapability(
        name="burgers-fem",
        dim=c.dim,
        step=lambda u: burgers.fem_step(u, c),
        tangent=lambda u, v: burgers.fem_tangent(u, v, c),
        adjoint=lambda u, w: burgers.fem_adjoint(u, w, c),
        sample_state=lambda stream: base + 0.2 * stream.normal(c.dim),
        true_initial=lambda stream: base.copy(),
        dt=c.dt,
        config=c,
    )


def burgers_spectral_model(cfg: burgers.BurgersSpectralConfig | None = None) -> ModelCapability:
    c = cfg or burgers.BurgersSpectralConfig()
    base = burgers.spectral_initial_state(c)
    decay = 1.0 / (1.0 + np.arange(c.dim)) ** 2

    def sample(stream):
        return base + 0.1 * decay * stream.normal(c.dim)

    return ModelCapability(
        name="burgers-spectral",
        dim=c.dim,
        step=lambda u: burgers.spectral_step(u, c),
        tangent=lambda u, v: burgers.spectral_tangent(u, v, c),
        adjoint=lambda u, w: burgers.spectral_adjoint(u, w, c),
        sample_state=sample,
        true_initial=lambda stream: base.copy(),
        dt=c.dt,
        config=c,
    )


def vorticity_model(cfg: vorticity.VorticityConfig | None = None) -> ModelCapability:
    c = cfg or vorticity.VorticityConfig()
    return ModelCapability(
        name="vorticity2d",
        dim=c.dim,
        step=lambda u: vorticity.step(u, c),
        tangent=lambda u, v: vorticity.tangent_apply(u, v, c),
        adjoint=lambda u, w: vorticity.adjoint_apply(u, w, c),
        sample_state=lambda stream: 5.0 * stream.normal(c.dim),
        true_initial=lambda stream: 5.0 * stream.normal(c.dim),
        dt=c.dt,
        config=c,
    )
