"""Linearized multi-block ADMM with proximal regularization for the
discrete assimilation problem

    min sum_k f_k(u_k)   s.t.  u_{k+1} = H(u_k),  k = 0..N-1.

One block per time step. Each sweep minimizes, for every k simultaneously
(Jacobi schedule: all right-hand sides read the previous iterate), the
quadratic subproblem obtained by keeping the backward penalty
||u_k - H(u_{k-1}) - s*lam_{k-1}||^2/(2s) exact, linearizing the forward
penalty through g_k = dH(u_k)^T (u_{k+1} - H(u_k) - s*lam_k), and adding the
proximal term ||u_k - u_k^l||^2/(2*eta). The dual ascent then follows:
lam_k <- lam_k - (u_{k+1} - H(u_k))/s at the fresh primal.

With the Euclidean data norm every subproblem has the closed form

    u_k = [w_k*obs + a_k/s + u_k^l/eta + g_k/s] / (w_k + 1/s + 1/eta),

where a_k = H(u_{k-1}^l) + s*lam_{k-1}^l and w_k = mu*T_o at observation
steps (zero elsewhere; k = 0 swaps the a-term for the background pull and
k = N drops the linearized term). Under the energy norm the observation-step
stationarity system (w_k*M + c*I) u = ... is solved by conjugate gradients
on its shifted-Poisson equivalent.

Because the sweep is Jacobi, the block updates are order-independent; an
optional thread pool splits the time axis into contiguous chunks with
bit-identical results for any worker count.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .assim import AssimilationProblem, rollout, total_error, total_objective


@dataclass(frozen=True)
class AdmmParams:
    s: float = 2.0 / 3.0
    eta: float = 0.1
    max_outer: int = 600
    constraint_tol: float | None = None
    workers: int = 1
    schedule: str = "jacobi"  # "gauss-seidel" is an experimental variant

    def __post_init__(self):
        if self.s <= 0 or self.eta <= 0:
            raise ValueError("s and eta must be positive")
        if self.schedule not in ("jacobi", "gauss-seidel"):
            raise ValueError(f"unknown schedule {self.schedule!r}")


@dataclass
class AdmmState:
    primal: np.ndarray  # (N+1, dim)
    duals: np.ndarray   # (N, dim)
    outer_iter: int = 0


@dataclass(frozen=True)
class IterationRecord:
    iter: int
    total_error: float
    constraint_error: float
    objective: float


def init_state(
    problem: AssimilationProblem,
    mode: str = "zeros",
    u0_guess: np.ndarray | None = None,
    trajectory: np.ndarray | None = None,
) -> AdmmState:
    """Initial primal trajectory: all zeros, a model rollout from a guessed
    initial condition, or a given trajectory. Duals start at zero."""
    N = problem.N
    dim = problem.model.dim
    if mode == "zeros":
        primal = np.zeros((N + 1, dim))
    elif mode == "rollout":
        if u0_guess is None:
            raise ValueError("rollout init requires u0_guess")
        primal = rollout(problem.model, np.asarray(u0_guess, dtype=float), N)
    elif mode == "given":
        if trajectory is None:
            raise ValueError("given init requires a trajectory")
        primal = np.array(trajectory, dtype=float)
        if primal.shape != (N + 1, dim):
            raise ValueError(f"trajectory shape {primal.shape} != {(N + 1, dim)}")
    else:
        raise ValueError(f"unknown init mode {mode!r}")
    return AdmmState(primal=primal, duals=np.zeros((N, dim)))


def _observation_weight(problem: AssimilationProblem, k: int) -> float:
    obs = problem.obs
    if k > 0 and k % obs.q == 0:
        return problem.mu * obs.T_o
    return 0.0


def _linearized_pull(state: AdmmState, problem: AssimilationProblem, params: AdmmParams, k: int) -> np.ndarray:
    """g_k = dH(u_k^l)^T (u_{k+1}^l - H(u_k^l) - s*lam_k^l)."""
    u = state.primal
    resid = u[k + 1] - problem.model.step(u[k]) - params.s * state.duals[k]
    return problem.model.adjoint(u[k], resid)


def primal_update_first(state: AdmmState, problem: AssimilationProblem, params: AdmmParams) -> np.ndarray:
    obs = problem.obs
    g0 = _linearized_pull(state, problem, params, 0)
    rhs_plain = state.primal[0] / params.eta + g0 / params.s
    w_data = problem.mu * obs.T_o
    w_bg = problem.mu * problem.alpha
    if problem.norm.kind == "euclidean":
        num = w_data * obs.observations[0] + w_bg * obs.background + rhs_plain
        return num / (w_data + w_bg + 1.0 / params.eta)
    target = (w_data * obs.observations[0] + w_bg * obs.background) / (w_data + w_bg)
    return problem.norm.solve_shifted(w_data + w_bg, 1.0 / params.eta, target, rhs_plain)


def primal_update_interior(k: int, state: AdmmState, problem: AssimilationProblem, params: AdmmParams) -> np.ndarray:
    if not 1 <= k <= problem.N - 1:
        raise ValueError("interior update needs 1 <= k <= N-1")
    obs = problem.obs
    a_k = problem.model.step(state.primal[k - 1]) + params.s * state.duals[k - 1]
    g_k = _linearized_pull(state, problem, params, k)
    w_k = _observation_weight(problem, k)
    c = 1.0 / params.s + 1.0 / params.eta
    rhs_plain = a_k / params.s + state.primal[k] / params.eta + g_k / params.s
    if problem.norm.kind == "euclidean" or w_k == 0.0:
        num = rhs_plain if w_k == 0.0 else w_k * obs.observations[k // obs.q] + rhs_plain
        return num / (w_k + c)
    return problem.norm.solve_shifted(w_k, c, obs.observations[k // obs.q], rhs_plain)


def primal_update_last(state: AdmmState, problem: AssimilationProblem, params: AdmmParams) -> np.ndarray:
    N = problem.N
    obs = problem.obs
    a_N = problem.model.step(state.primal[N - 1]) + params.s * state.duals[N - 1]
    w_N = _observation_weight(problem, N)
    c = 1.0 / params.s + 1.0 / params.eta
    rhs_plain = a_N / params.s + state.primal[N] / params.eta
    if problem.norm.kind == "euclidean" or w_N == 0.0:
        num = rhs_plain if w_N == 0.0 else w_N * obs.observations[N // obs.q] + rhs_plain
        return num / (w_N + c)
    return problem.norm.solve_shifted(w_N, c, obs.observations[N // obs.q], rhs_plain)


def dual_update(state: AdmmState, problem: AssimilationProblem, params: AdmmParams) -> np.ndarray:
    """lam_k <- lam_k - (u_{k+1} - H(u_k))/s at the current primal."""
    u = state.primal
    H = problem.model.step(u[:-1])
    return state.duals - (u[1:] - H) / params.s


def _chunked(fn, *arrays, workers: int):
    """Apply fn to row-chunks of the given arrays; identical to one full
    call, since every row is computed independently."""
    n = arrays[0].shape[0]
    if workers <= 1 or n < 2 * workers:
        return fn(*arrays)
    bounds = np.linspace(0, n, workers + 1, dtype=int)
    out = None
    with ThreadPoolExecutor(max_workers=workers) as pool:
        futures = [
            (slice(lo, hi), pool.submit(fn, *(a[lo:hi] for a in arrays)))
            for lo, hi in zip(bounds[:-1], bounds[1:])
            if hi > lo
        ]
        for sl, fut in futures:
            block = fut.result()
            if out is None:
                out = np.empty((n,) + block.shape[1:])
            out[sl] = block
    return out


def _sweep(
    state: AdmmState,
    problem: AssimilationProblem,
    params: AdmmParams,
    H_prev: np.ndarray | None,
) -> tuple[AdmmState, np.ndarray]:
    """One Jacobi sweep; returns the new state and H evaluated at its primal
    (reusable both for the dual step here and the next sweep)."""
    model = problem.model
    obs = problem.obs
    u = state.primal
    lam = state.duals
    s, eta = params.s, params.eta
    N = problem.N

    H = _chunked(model.step, u[:-1], workers=params.workers) if H_prev is None else H_prev
    resid = u[1:] - H - s * lam
    g = _chunked(model.adjoint, u[:-1], resid, workers=params.workers)
    a = H + s * lam  # a_{k+1} lives at row k

    c = 1.0 / s + 1.0 / eta
    num = u / eta
    num[1:] += a / s
    num[:-1] += g / s
    new = np.empty_like(u)
    new[:] = num / c

    w_data = problem.mu * obs.T_o
    w_bg = problem.mu * problem.alpha
    if problem.norm.kind == "euclidean":
        new[0] = (
            w_data * obs.observations[0] + w_bg * obs.background + u[0] / eta + g[0] / s
        ) / (w_data + w_bg + 1.0 / eta)
        for j in range(1, obs.n_intervals + 1):
            k = j * obs.q
            new[k] = (w_data * obs.observations[j] + num[k]) / (w_data + c)
    else:
        target0 = (w_data * obs.observations[0] + w_bg * obs.background) / (w_data + w_bg)
        new[0] = problem.norm.solve_shifted(
            w_data + w_bg, 1.0 / eta, target0, u[0] / eta + g[0] / s
        )
        for j in range(1, obs.n_intervals + 1):
            k = j * obs.q
            new[k] = problem.norm.solve_shifted(w_data, c, obs.observations[j], num[k])

    H_new = _chunked(model.step, new[:-1], workers=params.workers)
    lam_new = lam - (new[1:] - H_new) / s
    return AdmmState(primal=new, duals=lam_new, outer_iter=state.outer_iter + 1), H_new


def _sweep_gauss_seidel(
    state: AdmmState, problem: AssimilationProblem, params: AdmmParams
) -> tuple[AdmmState, np.ndarray]:
    """Sequential variant: a_k reads the already-updated left neighbor.

    The primary Jacobi sweep reads every right-hand side from iteration l;
    this sequential variant is kept as an experimental option only.
    """
    model = problem.model
    new = np.empty_like(state.primal)
    new[0] = primal_update_first(state, problem, params)
    for k in range(1, problem.N):
        # g_k is still linearized at the snapshot; only a_k is fresh
        g_k = _linearized_pull(state, problem, params, k)
        a_k = model.step(new[k - 1]) + params.s * state.duals[k - 1]
        w_k = _observation_weight(problem, k)
        c = 1.0 / params.s + 1.0 / params.eta
        rhs_plain = a_k / params.s + state.primal[k] / params.eta + g_k / params.s
        if problem.norm.kind == "euclidean" or w_k == 0.0:
            num = rhs_plain if w_k == 0.0 else w_k * problem.obs.observations[k // problem.obs.q] + rhs_plain
            new[k] = num / (w_k + c)
        else:
            new[k] = problem.norm.solve_shifted(
                w_k, c, problem.obs.observations[k // problem.obs.q], rhs_plain
            )
    shifted = AdmmState(np.vstack([new[:-1], state.primal[problem.N][None, :]]), state.duals)
    new[problem.N] = primal_update_last(shifted, problem, params)
    H_new = model.step(new[:-1])
    lam_new = state.duals - (new[1:] - H_new) / params.s
    return AdmmState(primal=new, duals=lam_new, outer_iter=state.outer_iter + 1), H_new


def outer_iteration(
    state: AdmmState, problem: AssimilationProblem, params: AdmmParams
) -> AdmmState:
    """One full primal sweep followed by the dual ascent."""
    if params.schedule == "gauss-seidel":
        return _sweep_gauss_seidel(state, problem, params)[0]
    return _sweep(state, problem, params, H_prev=None)[0]


def _record(
    it: int,
    primal: np.ndarray,
    H: np.ndarray,
    problem: AssimilationProblem,
    reference: np.ndarray | None,
) -> IterationRecord:
    ce = float(np.sum((primal[1:] - H) ** 2))
    te = total_error(primal, reference) if reference is not None else math.nan
    return IterationRecord(
        iter=it,
        total_error=te,
        constraint_error=ce,
        objective=total_objective(primal, problem),
    )


def solve(
    problem: AssimilationProblem,
    params: AdmmParams,
    init_mode: str = "zeros",
    u0_guess: np.ndarray | None = None,
    trajectory: np.ndarray | None = None,
    reference: np.ndarray | None = None,
) -> tuple[AdmmState, list[IterationRecord]]:
    """Run sweeps until the outer budget or the constraint tolerance is met.

    Returns the final state and one IterationRecord per sweep, with record 0
    describing the initial state. total_error entries are NaN when no
    reference trajectory is supplied.
    """
    state = init_state(problem, init_mode, u0_guess=u0_guess, trajectory=trajectory)
    H = problem.model.step(state.primal[:-1])
    history = [_record(0, state.primal, H, problem, reference)]
    if params.constraint_tol is not None and history[0].constraint_error <= params.constraint_tol:
        return state, history
    for it in range(1, params.max_outer + 1):
        if params.schedule == "gauss-seidel":
            state, H = _sweep_gauss_seidel(state, problem, params)
        else:
            state, H = _sweep(state, problem, params, H_prev=H)
        history.append(_record(it, state.primal, H, problem, reference))
        if params.constraint_tol is not None and history[-1].constraint_error <= params.constraint_tol:
            break
    return state, history
