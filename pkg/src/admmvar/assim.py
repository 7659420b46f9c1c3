"""Twin-experiment problem assembly: observation generation, the per-step
sub-objectives and their total, the augmented Lagrangian, the shooting
objective over the initial condition, error metrics, and the objective
landscape scanner.

Trajectories are arrays shaped (N+1, dim); observations live at steps
0, q, 2q, ..., N. Data misfits are measured either in the Euclidean norm or
in the velocity-space energy norm <v, (-lap)^-1 v> used by the vorticity
problem. Constraint violations and total error are always Euclidean.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .models import ModelCapability
from .numerics import RandomStream, as_field, cg_spd_solve, laplacian_5pt, sor_poisson_solve
from .vorticity import VorticityConfig


class EuclideanNorm:
    """Plain L2 misfit weighting."""

    kind = "euclidean"

    def norm_sq(self, v: np.ndarray) -> float:
        return float(np.sum(np.asarray(v) ** 2))

    def apply_weight(self, v: np.ndarray) -> np.ndarray:
        return np.asarray(v, dtype=float)


class EnergyNorm:
    """Inverse-Laplacian weighting ||(-lap)^(-1/2) v||^2 on a vorticity grid.

    apply_weight computes M v with M = (-lap)^-1 by one SOR Poisson solve;
    solve_shifted solves (w*M + c*I) x = rhs through the equivalent SPD
    system (w*I + c*(-lap)) x = (-lap) rhs by conjugate gradients.
    """

    kind = "energy"

    def __init__(self, cfg: VorticityConfig):
        self.cfg = cfg
        self.grid = cfg.grid

    def apply_weight(self, v: np.ndarray) -> np.ndarray:
        sol = sor_poisson_solve(
            v, self.grid, relax=self.cfg.sor_relax, tol=self.cfg.sor_tol,
            max_sweeps=self.cfg.sor_max_sweeps,
        )
        return -sol

    def norm_sq(self, v: np.ndarray) -> float:
        return float(np.sum(np.asarray(v) * self.apply_weight(v)))

    def neg_laplacian(self, v: np.ndarray) -> np.ndarray:
        vf, flat = as_field(v, self.grid)
        out = -laplacian_5pt(vf, self.grid)
        return out.reshape(out.shape[:-2] + (self.grid.interior_dim,)) if flat else out

    def solve_shifted(self, w: float, c: float, rhs_weighted: np.ndarray,
                      rhs_plain: np.ndarray, tol: float = 1e-10) -> np.ndarray:
        """Minimizer of (w/2)||x - target||_M^2-style stationarity systems:

            (w*M + c*I) x = w*M*rhs_weighted + rhs_plain

        transformed by -lap into (w*I + c*(-lap)) x = w*rhs_weighted
        + (-lap) rhs_plain, which is SPD for w >= 0, c > 0.
        """
        b = w * np.asarray(rhs_weighted, dtype=float) + self.neg_laplacian(rhs_plain)
        return cg_spd_solve(lambda x: w * x + c * self.neg_laplacian(x), b, tol=tol)


@dataclass(frozen=True)
class ObservationSet:
    observations: np.ndarray  # (n_obs + 1, dim), rows at steps 0, q, ..., N
    background: np.ndarray    # prior estimate of the initial state
    q: int                    # model steps per observation interval
    T_o: float                # observation interval in time units
    noise_std: float
    seed: int

    @property
    def n_intervals(self) -> int:
        return self.observations.shape[0] - 1

    @property
    def n_steps(self) -> int:
        return self.n_intervals * self.q


@dataclass(frozen=True)
class AssimilationProblem:
    model: ModelCapability
    obs: ObservationSet
    alpha: float = 0.0
    mu: float = 1.0
    norm: object = field(default_factory=EuclideanNorm)

    def __post_init__(self):
        if self.alpha < 0:
            raise ValueError("alpha must be non-negative")
        if self.mu <= 0:
            raise ValueError("mu must be positive")

    @property
    def N(self) -> int:
        return self.obs.n_steps


def rollout(model: ModelCapability, u0: np.ndarray, n_steps: int) -> np.ndarray:
    """Forward trajectory (n_steps + 1, dim) from u0."""
    u0 = np.asarray(u0, dtype=float)
    traj = np.empty((n_steps + 1,) + u0.shape)
    traj[0] = u0
    for k in range(n_steps):
        traj[k + 1] = model.step(traj[k])
    return traj


def generate_observations(
    model: ModelCapability,
    u0_true: np.ndarray,
    N: int,
    q: int,
    noise_std: float,
    seed: int,
) -> tuple[ObservationSet, np.ndarray]:
    """Roll the model N steps from u0_true, record every q-th state, add
    N(0, noise_std^2) noise elementwise, and return the observation set
    together with the full true trajectory.

    The background estimate defaults to the (noisy) first observation. Noise
    is drawn in one row-major block from the seeded stream, so a fixed seed
    reproduces the set bit for bit.
    """
    if N % q != 0:
        raise ValueError(f"q={q} must divide N={N}")
    truth = rollout(model, u0_true, N)
    obs = truth[::q].copy()
    if noise_std != 0.0:
        stream = RandomStream(seed)
        obs += noise_std * stream.normal(obs.shape)
    background = obs[0].copy()
    return (
        ObservationSet(
            observations=obs,
            background=background,
            q=q,
            T_o=q * model.dt,
            noise_std=noise_std,
            seed=seed,
        ),
        truth,
    )


def sub_objective(k: int, u_k: np.ndarray, prob: AssimilationProblem) -> float:
    """Per-step objective f_k: data misfit at observation steps (plus the
    background tie at k = 0), zero elsewhere; scaled uniformly by mu."""
    obs = prob.obs
    if k == 0:
        val = 0.5 * obs.T_o * prob.norm.norm_sq(u_k - obs.observations[0])
        if prob.alpha != 0.0:
            val += 0.5 * prob.alpha * prob.norm.norm_sq(u_k - obs.background)
        return prob.mu * val
    if k % obs.q == 0 and 0 < k <= prob.N:
        return prob.mu * 0.5 * obs.T_o * prob.norm.norm_sq(u_k - obs.observations[k // obs.q])
    return 0.0


def total_objective(traj: np.ndarray, prob: AssimilationProblem) -> float:
    total = sub_objective(0, traj[0], prob)
    for k in range(prob.obs.q, prob.N + 1, prob.obs.q):
        total += sub_objective(k, traj[k], prob)
    return total


def augmented_lagrangian(
    traj: np.ndarray, duals: np.ndarray, prob: AssimilationProblem, s: float
) -> float:
    """Square-completed augmented Lagrangian

        sum_k f_k + 1/(2s) sum ||u_{k+1} - H(u_k) - s*lam_k||^2
                  - (s/2) sum ||lam_k||^2.
    """
    H = prob.model.step(traj[:-1])
    gap = traj[1:] - H - s * np.asarray(duals)
    return (
        total_objective(traj, prob)
        + float(np.sum(gap**2)) / (2.0 * s)
        - 0.5 * s * float(np.sum(np.asarray(duals) ** 2))
    )


def shooting_objective(u0: np.ndarray, prob: AssimilationProblem) -> float:
    """Initial-condition objective (no mu scaling):

        F(u0) = T_o/2 sum_j ||H^(jq)(u0) - obs_j||^2 + alpha/2 ||u0 - bg||^2
    """
    obs = prob.obs
    u = np.asarray(u0, dtype=float)
    total = 0.5 * obs.T_o * prob.norm.norm_sq(u - obs.observations[0])
    for j in range(1, obs.n_intervals + 1):
        for _ in range(obs.q):
            u = prob.model.step(u)
        total += 0.5 * obs.T_o * prob.norm.norm_sq(u - obs.observations[j])
    total += 0.5 * prob.alpha * prob.norm.norm_sq(np.asarray(u0) - obs.background)
    return total


def shooting_objective_batch(u0s: np.ndarray, prob: AssimilationProblem) -> np.ndarray:
    """Vectorized shooting objective over a batch (B, dim) of initial states
    (Euclidean norm only)."""
    if prob.norm.kind != "euclidean":
        raise ValueError("batched shooting objective requires the Euclidean norm")
    obs = prob.obs
    u = np.array(u0s, dtype=float)
    vals = 0.5 * obs.T_o * np.sum((u - obs.observations[0]) ** 2, axis=-1)
    for j in range(1, obs.n_intervals + 1):
        for _ in range(obs.q):
            u = prob.model.step(u)
        vals += 0.5 * obs.T_o * np.sum((u - obs.observations[j]) ** 2, axis=-1)
    vals += 0.5 * prob.alpha * np.sum((np.asarray(u0s) - obs.background) ** 2, axis=-1)
    return vals


def total_error(traj: np.ndarray, reference: np.ndarray) -> float:
    """Euclidean trajectory distance sqrt(sum_k ||u_k - ref_k||^2)."""
    traj = np.asarray(traj)
    reference = np.asarray(reference)
    if traj.shape != reference.shape:
        raise ValueError("trajectories must have equal shapes")
    return float(np.sqrt(np.sum((traj - reference) ** 2)))


def constraint_error(traj: np.ndarray, model: ModelCapability) -> float:
    """Dynamics infeasibility sum_k ||u_{k+1} - H(u_k)||^2."""
    traj = np.asarray(traj)
    H = model.step(traj[:-1])
    return float(np.sum((traj[1:] - H) ** 2))


def scan_landscape(
    prob: AssimilationProblem,
    box: np.ndarray,
    resolution: int,
    chunk: int = 20_000,
) -> tuple[list[np.ndarray], np.ndarray]:
    """Evaluate the shooting objective on a tensor grid over a 3-D box.

    box is ((x_lo, x_hi), (y_lo, y_hi), (z_lo, z_hi)); returns the per-axis
    coordinate arrays and the (resolution,)*3 value grid. Grid cells are
    independent, so they are evaluated in vectorized chunks; ordering of the
    output is the plain C order of the tensor grid.
    """
    if prob.model.dim > 3:
        raise ValueError("landscape scanning is limited to models with dim <= 3")
    box = np.asarray(box, dtype=float)
    axes = [np.linspace(lo, hi, resolution) for lo, hi in box]
    pts = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, 3)
    values = np.empty(pts.shape[0])
    for start in range(0, pts.shape[0], chunk):
        sl = slice(start, min(start + chunk, pts.shape[0]))
        values[sl] = shooting_objective_batch(pts[sl], prob)
    return axes, values.reshape((resolution,) * 3)
