"""First-order shooting baselines: steepest descent and nonlinear conjugate
gradients (Fletcher-Reeves / Polak-Ribiere+) on the initial-condition
objective

    F(u0) = T_o/2 sum_j ||H^(jq)(u0) - obs_j||^2 + alpha/2 ||u0 - bg||^2.

The gradient is assembled by one forward rollout that stores all states,
followed by a reverse sweep of adjoint applications with the weighted data
residuals injected at observation steps; no k-step Jacobian is ever formed.

The line search is Armijo backtracking refined by one quadratic
interpolation: after a step satisfying sufficient decrease is found, the
parabola through (0, f0, f'0) and (t, ft) proposes its minimizer, which is
accepted when it also satisfies the Armijo test and improves on t. On an
exactly quadratic objective this recovers the exact line minimizer, so CG
terminates in at most dim steps there.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .assim import AssimilationProblem, shooting_objective


class LineSearchError(Exception):
    """No sufficient-decrease step found within the halving budget."""

    def __init__(self, message, last_x=None, history=None):
        super().__init__(message)
        self.last_x = last_x
        self.history = history or []


@dataclass(frozen=True)
class BaselineConfig:
    method: str = "cg-pr"  # gd | cg-fr | cg-pr
    max_iters: int = 200
    initial_step: float = 1.0
    shrink: float = 0.5
    sufficient_decrease: float = 1e-4
    grad_tol: float = 1e-8
    max_halvings: int = 60

    def __post_init__(self):
        if self.method not in ("gd", "cg-fr", "cg-pr"):
            raise ValueError(f"unknown method {self.method!r}")
        if not 0.0 < self.shrink < 1.0:
            raise ValueError("shrink must lie in (0, 1)")
        if not 0.0 < self.sufficient_decrease <= 0.5:
            raise ValueError("sufficient-decrease constant must lie in (0, 0.5]")


@dataclass(frozen=True)
class BaselineRecord:
    iter: int
    objective: float
    grad_norm: float
    step_size: float


def shooting_gradient(u0: np.ndarray, prob: AssimilationProblem) -> np.ndarray:
    """grad F(u0) by forward rollout + reverse adjoint accumulation."""
    obs = prob.obs
    model = prob.model
    weight = prob.norm.apply_weight
    N = prob.N
    u0 = np.asarray(u0, dtype=float)
    traj = np.empty((N + 1,) + u0.shape)
    traj[0] = u0
    for k in range(N):
        traj[k + 1] = model.step(traj[k])
    adj = np.zeros_like(u0)
    for k in range(N, 0, -1):
        if k % obs.q == 0:
            adj = adj + obs.T_o * weight(traj[k] - obs.observations[k // obs.q])
        adj = model.adjoint(traj[k - 1], adj)
    grad = adj + obs.T_o * weight(traj[0] - obs.observations[0])
    grad += prob.alpha * weight(u0 - obs.background)
    return grad


def _line_search(fun, x, fx, grad, direction, cfg, t_init=None):
    gd = float(np.dot(grad, direction))
    if gd >= 0:
        raise LineSearchError("search direction is not a descent direction", last_x=x)
    t = cfg.initial_step if t_init is None else t_init
    for _ in range(cfg.max_halvings):
        ft = fun(x + t * direction)
        if ft <= fx + cfg.sufficient_decrease * t * gd:
            denom = 2.0 * (ft - fx - gd * t)
            if denom > 0:
                tq = -gd * t * t / denom
                if np.isfinite(tq) and tq > 0:
                    fq = fun(x + tq * direction)
                    if fq <= fx + cfg.sufficient_decrease * tq * gd and fq < ft:
                        return tq, fq
            return t, ft
        t *= cfg.shrink
    raise LineSearchError(
        f"no sufficient decrease after {cfg.max_halvings} halvings", last_x=x
    )


def minimize(fun, grad_fn, x0, cfg: BaselineConfig):
    """Shared descent loop; returns (x, history, info).

    info carries the stop reason ('grad_tol' or 'max_iters') and, for the CG
    methods, the number of restarts forced by non-descent directions.
    """
    x = np.array(x0, dtype=float)
    fx = fun(x)
    g = grad_fn(x)
    gnorm = float(np.linalg.norm(g))
    history = [BaselineRecord(0, fx, gnorm, math.nan)]
    direction = -g
    gg = float(np.dot(g, g))
    restarts = 0
    t_init = None
    for it in range(1, cfg.max_iters + 1):
        if gnorm <= cfg.grad_tol:
            return x, history, {"stop": "grad_tol", "restarts": restarts}
        try:
            t, fx_new = _line_search(fun, x, fx, g, direction, cfg, t_init=t_init)
        except LineSearchError as err:
            err.last_x = x
            err.history = history
            raise
        # warm-start the next search near the accepted step
        t_init = min(cfg.initial_step, 8.0 * t)
        x = x + t * direction
        fx = fx_new
        g_new = grad_fn(x)
        gg_new = float(np.dot(g_new, g_new))
        if cfg.method == "gd":
            direction = -g_new
        else:
            if cfg.method == "cg-fr":
                beta = gg_new / gg
            else:
                beta = max(float(np.dot(g_new, g_new - g)) / gg, 0.0)
            direction = -g_new + beta * direction
            if float(np.dot(direction, g_new)) >= 0:
                direction = -g_new
                restarts += 1
        g = g_new
        gg = gg_new
        gnorm = float(np.sqrt(gg))
        history.append(BaselineRecord(it, fx, gnorm, t))
    return x, history, {"stop": "max_iters", "restarts": restarts}


def _problem_functions(prob: AssimilationProblem):
    return (lambda x: shooting_objective(x, prob), lambda x: shooting_gradient(x, prob))


def gradient_descent(u0_init, prob: AssimilationProblem, cfg: BaselineConfig | None = None):
    cfg = cfg or BaselineConfig(method="gd")
    if cfg.method != "gd":
        cfg = BaselineConfig(**{**cfg.__dict__, "method": "gd"})
    fun, grad = _problem_functions(prob)
    x, history, _ = minimize(fun, grad, u0_init, cfg)
    return x, history


def nonlinear_cg(u0_init, prob: AssimilationProblem, cfg: BaselineConfig | None = None):
    cfg = cfg or BaselineConfig(method="cg-pr")
    if cfg.method == "gd":
        raise ValueError("nonlinear_cg requires a cg-* method")
    fun, grad = _problem_functions(prob)
    x, history, _ = minimize(fun, grad, u0_init, cfg)
    return x, history
