"""Shared dense-vector numerics: tridiagonal / Poisson / CG solvers and a
reproducible standard-normal stream.

All solvers operate on plain float64 numpy arrays and leave their inputs
untouched. State vectors are 1-D arrays; 2-D interior fields may be passed
either flattened (row-major) or as (n, n) arrays. Every routine broadcasts
over arbitrary leading batch axes, acting on the trailing state axis (or the
trailing two axes for grid fields), so a whole stack of independent systems
can be solved in one call.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


class SolverError(Exception):
    """A direct solver hit a numerically singular pivot."""


class ConvergenceError(Exception):
    """An iterative solver ran out of its sweep/iteration budget.

    Carries the residual that was actually achieved so callers can decide
    whether to retry with a larger budget.
    """

    def __init__(self, message, achieved_residual=None):
        super().__init__(message)
        self.achieved_residual = achieved_residual


@dataclass(frozen=True)
class TridiagonalMatrix:
    """Tridiagonal matrix stored as its three bands.

    lower/upper have length size-1, diagonal has length size.
    """

    lower: np.ndarray
    diagonal: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "lower", np.asarray(self.lower, dtype=float))
        object.__setattr__(self, "diagonal", np.asarray(self.diagonal, dtype=float))
        object.__setattr__(self, "upper", np.asarray(self.upper, dtype=float))
        n = self.diagonal.shape[0]
        if self.lower.shape[0] != n - 1 or self.upper.shape[0] != n - 1:
            raise ValueError("band lengths inconsistent with matrix size")

    @property
    def size(self) -> int:
        return self.diagonal.shape[0]

    def apply(self, x: np.ndarray) -> np.ndarray:
        """Matrix-vector product, batched over leading axes of x."""
        x = np.asarray(x, dtype=float)
        out = self.diagonal * x
        out[..., :-1] += self.upper * x[..., 1:]
        out[..., 1:] += self.lower * x[..., :-1]
        return out

    def transpose(self) -> "TridiagonalMatrix":
        return TridiagonalMatrix(self.upper, self.diagonal, self.lower)


def tridiagonal_solve(A: TridiagonalMatrix, b: np.ndarray) -> np.ndarray:
    """Solve A x = b by the Thomas algorithm.

    b may carry leading batch axes; the system is solved along the last axis
    (the matrix is shared across the batch). Raises SolverError when a pivot
    falls below 1e-14 in magnitude.
    """
    b = np.asarray(b, dtype=float)
    n = A.size
    if b.shape[-1] != n:
        raise ValueError(f"rhs length {b.shape[-1]} != matrix size {n}")
    lo, di, up = A.lower, A.diagonal, A.upper
    cp = np.empty(n - 1) if n > 1 else np.empty(0)
    dp = np.empty_like(b)
    piv = di[0]
    if abs(piv) <= 1e-14:
        raise SolverError("singular pivot in tridiagonal solve (row 0)")
    if n > 1:
        cp[0] = up[0] / piv
    dp[..., 0] = b[..., 0] / piv
    for i in range(1, n):
        den = di[i] - lo[i - 1] * cp[i - 1]
        if abs(den) <= 1e-14:
            raise SolverError(f"singular pivot in tridiagonal solve (row {i})")
        if i < n - 1:
            cp[i] = up[i] / den
        dp[..., i] = (b[..., i] - lo[i - 1] * dp[..., i - 1]) / den
    x = np.empty_like(b)
    x[..., -1] = dp[..., -1]
    for i in range(n - 2, -1, -1):
        x[..., i] = dp[..., i] - cp[i] * x[..., i + 1]
    return x


@dataclass(frozen=True)
class Grid2D:
    """Uniform 2-D grid on a square: m cells per axis, (m-1)^2 interior points."""

    m: int
    dx: float
    dy: float

    def __post_init__(self):
        if self.m < 3:
            raise ValueError("need m >= 3 for an interior")
        if self.dx <= 0 or self.dy <= 0:
            raise ValueError("grid spacings must be positive")

    @property
    def interior_n(self) -> int:
        return self.m - 1

    @property
    def interior_dim(self) -> int:
        return (self.m - 1) ** 2

    def optimal_relax(self) -> float:
        # classical optimum for SOR on the 5-point Poisson stencil
        return 2.0 / (1.0 + math.sin(math.pi / self.m))


def as_field(v: np.ndarray, grid: Grid2D) -> tuple[np.ndarray, bool]:
    """Accept (..., n*n) flat or (..., n, n) layout; return (..., n, n)."""
    v = np.asarray(v, dtype=float)
    n = grid.interior_n
    if v.shape[-1] == n and v.ndim >= 2 and v.shape[-2] == n:
        return v, False
    if v.shape[-1] == n * n:
        return v.reshape(v.shape[:-1] + (n, n)), True
    raise ValueError(f"field shape {v.shape} incompatible with grid m={grid.m}")


def pad_zero(a: np.ndarray) -> np.ndarray:
    """Surround interior values with one ring of zeros (Dirichlet ghost layer)."""
    out = np.zeros(a.shape[:-2] + (a.shape[-2] + 2, a.shape[-1] + 2))
    out[..., 1:-1, 1:-1] = a
    return out


def laplacian_5pt(a: np.ndarray, grid: Grid2D) -> np.ndarray:
    """Standard 5-point Laplacian with zero Dirichlet ghosts (negative definite)."""
    P = pad_zero(a)
    c = slice(1, -1)
    return (P[..., 2:, c] + P[..., :-2, c] - 2.0 * a) / grid.dx**2 + (
        P[..., c, 2:] + P[..., c, :-2] - 2.0 * a
    ) / grid.dy**2


def _sub_slices(n: int, i0: int):
    count = (n - i0) // 2 + 1
    tgt = slice(i0, i0 + 2 * count, 2)
    minus = slice(i0 - 1, i0 - 1 + 2 * count, 2)
    plus = slice(i0 + 1, i0 + 1 + 2 * count, 2)
    rhs = slice(i0 - 1, n, 2)
    return tgt, minus, plus, rhs


def sor_poisson_solve(
    rhs: np.ndarray,
    grid: Grid2D,
    relax: float | None = None,
    tol: float = 1e-10,
    max_sweeps: int = 100_000,
) -> np.ndarray:
    """Solve the discrete Poisson problem lap(psi) = rhs with psi = 0 on the
    boundary, by red-black successive over-relaxation.

    rhs may be (..., n, n) or flattened (..., n*n); the result matches the
    input layout. Batched systems share the sweep loop and iterate until the
    worst slice meets the max-norm residual tolerance. Sweep order is fixed
    (red sub-lattices (1,1),(2,2) then black (1,2),(2,1), each updated as one
    vectorized assignment), so results are deterministic.

    Raises ConvergenceError (with the achieved residual) if max_sweeps is
    exhausted first.
    """
    f, was_flat = as_field(rhs, grid)
    if relax is None:
        relax = grid.optimal_relax()
    if not 0.0 < relax < 2.0:
        raise ValueError("relaxation factor must lie in (0, 2)")
    if max_sweeps < 1:
        raise ValueError("max_sweeps must be at least 1")
    n = grid.interior_n
    cx = 1.0 / grid.dx**2
    cy = 1.0 / grid.dy**2
    diag = 2.0 * (cx + cy)
    P = pad_zero(np.zeros_like(f))
    subs = {i0: _sub_slices(n, i0) for i0 in (1, 2)}
    colors = (((1, 1), (2, 2)), ((1, 2), (2, 1)))
    check_every = 4
    sweeps = 0
    while sweeps < max_sweeps:
        for group in colors:
            for i0, j0 in group:
                rt, rm, rp, rr = subs[i0]
                ct, cm, cp, cr = subs[j0]
                nb = (P[..., rm, ct] + P[..., rp, ct]) * cx + (
                    P[..., rt, cm] + P[..., rt, cp]
                ) * cy
                tgt = P[..., rt, ct]
                tgt *= 1.0 - relax
                tgt += (relax / diag) * (nb - f[..., rr, cr])
        sweeps += 1
        if sweeps % check_every == 0 or sweeps == max_sweeps:
            psi = P[..., 1:-1, 1:-1]
            res = np.max(np.abs(laplacian_5pt(psi, grid) - f))
            if res <= tol:
                out = psi.copy()
                return out.reshape(out.shape[:-2] + (n * n,)) if was_flat else out
    raise ConvergenceError(
        f"SOR did not reach tol={tol:g} within {max_sweeps} sweeps "
        f"(residual {res:g})",
        achieved_residual=float(res),
    )


def cg_spd_solve(apply_A, b: np.ndarray, tol: float = 1e-10) -> np.ndarray:
    """Conjugate gradients for a symmetric positive definite operator.

    apply_A maps an array shaped like b to an array of the same shape.
    Terminates when ||Ax - b|| <= tol * ||b||; raises ConvergenceError after
    2*dim iterations.
    """
    b = np.asarray(b, dtype=float)
    x = np.zeros_like(b)
    r = b.copy()
    nb = float(np.sqrt(np.sum(b * b)))
    if nb == 0.0:
        return x
    p = r.copy()
    rs = float(np.sum(r * r))
    max_iters = 2 * b.size
    for _ in range(max_iters):
        if math.sqrt(rs) <= tol * nb:
            return x
        Ap = apply_A(p)
        alpha = rs / float(np.sum(p * Ap))
        x = x + alpha * p
        r = r - alpha * Ap
        rs_new = float(np.sum(r * r))
        p = r + (rs_new / rs) * p
        rs = rs_new
    if math.sqrt(rs) <= tol * nb:
        return x
    raise ConvergenceError(
        f"CG exceeded {max_iters} iterations (rel. residual {math.sqrt(rs) / nb:g})",
        achieved_residual=math.sqrt(rs),
    )


# Wichura's AS241 rational approximation to the inverse standard-normal CDF
# (double precision). Fixed coefficients keep the sample stream bit-stable.
_A = (3.3871328727963666080e0, 1.3314166789178437745e2, 1.9715909503065514427e3,
      1.3731693765509461125e4, 4.5921953931549871457e4, 6.7265770927008700853e4,
      3.3430575583588128105e4, 2.5090809287301226727e3)
_B = (1.0, 4.2313330701600911252e1, 6.8718700749205790830e2,
      5.3941960214247511077e3, 2.1213794301586595867e4, 3.9307895800092710610e4,
      2.8729085735721942674e4, 5.2264952788528545610e3)
_C = (1.42343711074968357734e0, 4.63033784615654529590e0, 5.76949722146069140550e0,
      3.64784832476320460504e0, 1.27045825245236838258e0, 2.41780725177450611770e-1,
      2.27238449892691845833e-2, 7.74545014278341407640e-4)
_D = (1.0, 2.05319162663775882187e0, 1.67638483018380384940e0,
      6.89767334985100004550e-1, 1.48103976427480074590e-1, 1.51986665636164571966e-2,
      5.47593808499534494600e-4, 1.05075007164441684324e-9)
_E = (6.65790464350110377720e0, 5.46378491116411436990e0, 1.78482653991729133580e0,
      2.96560571828504891230e-1, 2.65321895265761230930e-2, 1.24266094738807843860e-3,
      2.71155556874348757815e-5, 2.01033439929228813265e-7)
_F = (1.0, 5.99832206555887937690e-1, 1.36929880922735805310e-1,
      1.48753612908506148525e-2, 7.86869131145613259100e-4, 1.84631831751005468180e-5,
      1.42151175831644588870e-7, 2.04426310338993978564e-15)


def _poly(coeffs, r):
    out = np.full_like(r, coeffs[7])
    for c in coeffs[6::-1]:
        out = out * r + c
    return out


def normal_quantile(p: np.ndarray) -> np.ndarray:
    """Inverse standard-normal CDF (AS241), elementwise, p in (0, 1)."""
    p = np.asarray(p, dtype=float)
    q = p - 0.5
    out = np.empty_like(p)
    central = np.abs(q) <= 0.425
    r = 0.180625 - q[central] ** 2
    out[central] = q[central] * _poly(_A, r) / _poly(_B, r)
    tail = ~central
    if np.any(tail):
        qt = q[tail]
        r = np.where(qt < 0, p[tail], 1.0 - p[tail])
        r = np.sqrt(-np.log(r))
        near = r <= 5.0
        val = np.empty_like(r)
        rn = r[near] - 1.6
        val[near] = _poly(_C, rn) / _poly(_D, rn)
        rf = r[~near] - 5.0
        val[~near] = _poly(_E, rf) / _poly(_F, rf)
        out[tail] = np.where(qt < 0, -val, val)
    return out


@dataclass
class RandomStream:
    """Seeded standard-normal sampler with a platform-stable stream.

    Uniform 53-bit integers come from the counter-based Philox generator;
    normals are produced by the AS241 inverse-CDF transform. The same seed
    and draw order therefore reproduce the same doubles everywhere. The
    stream is stateful: consecutive draws continue the sequence.
    """

    seed: int
    _gen: np.random.Generator = field(init=False, repr=False)

    def __post_init__(self):
        self._gen = np.random.Generator(np.random.Philox(key=self.seed))

    def normal(self, count_or_shape) -> np.ndarray:
        shape = (count_or_shape,) if np.isscalar(count_or_shape) else tuple(count_or_shape)
        total = int(np.prod(shape)) if shape else 1
        if total == 0:
            return np.zeros(shape)
        raw = self._gen.integers(0, 1 << 53, size=total, dtype=np.uint64)
        u = (raw.astype(float) + 0.5) * 2.0**-53
        return normal_quantile(u).reshape(shape)


def gaussian_draw(stream: RandomStream, count: int) -> np.ndarray:
    """Draw count i.i.d. N(0,1) samples, advancing the stream."""
    if count < 0:
        raise ValueError("count must be non-negative")
    return stream.normal(count)
