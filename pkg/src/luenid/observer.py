"""Observer construction, the filter target map and its left inverses.

The observer drives two banks of first-order filters with the measured output
and the input:

    z' = Lambda z + L y,    w' = Lambda w + L u,
    Lambda = Diag(k * lambda_tilde),  L = 1_r.

Along solutions, z tracks T(x, theta, w) exponentially, where component i of
the target map is T_i = M_i(theta) (x - theta_b w_i) with
M_i(theta) = C (A(theta) - lambda_i I)^(-1).  For the canonical realization
T is linear in the unknowns: T = P(z, w) [x; theta_a; theta_b] with P the
r x 3n matrix whose i-th row is [V_i^T, z_i V_i^T, -w_i V_i^T] and
V_i = -[1/lambda_i, ..., 1/lambda_i^n]^T.  Inverting that relation by least
squares recovers state and parameters; a gridded McShane infimum provides an
optimization-free cross-check at desk scale.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .errors import BoxTooLarge, SingularShift, SpectrumOverlap
from .ltisys import CanonicalTheta, canonical_matrices, spectrum

_SOLVE_RCOND_SCALE = np.finfo(float).eps


@dataclass(frozen=True, eq=False)
class ObserverSpec:
    """Observer configuration: base eigenvalues, gain, order, inversion threshold."""

    lambda_tilde: np.ndarray
    k: float
    n: int
    r: int = None
    p_min: float = 0.0

    def __post_init__(self):
        lt = np.asarray(self.lambda_tilde, dtype=float).ravel()
        if lt.size == 0:
            raise ValueError("lambda_tilde must be nonempty")
        if np.any(lt >= 0.0):
            raise ValueError(f"lambda_tilde entries must be strictly negative, got {lt}")
        if np.unique(lt).size != lt.size:
            raise ValueError(f"lambda_tilde entries must be pairwise distinct, got {lt}")
        object.__setattr__(self, "lambda_tilde", lt)
        if self.k <= 0.0:
            raise ValueError(f"gain k must be positive, got {self.k}")
        object.__setattr__(self, "k", float(self.k))
        if self.r is None:
            object.__setattr__(self, "r", lt.size)
        elif self.r != lt.size:
            raise ValueError(f"r = {self.r} does not match len(lambda_tilde) = {lt.size}")
        if self.n < 1:
            raise ValueError(f"system order n must be >= 1, got {self.n}")
        if self.p_min < 0.0:
            raise ValueError(f"p_min must be >= 0, got {self.p_min}")
        object.__setattr__(self, "p_min", float(self.p_min))

    @property
    def lambdas(self) -> np.ndarray:
        """Effective filter eigenvalues k * lambda_tilde."""
        return self.k * self.lambda_tilde

    def with_p_min(self, p_min: float) -> "ObserverSpec":
        return ObserverSpec(self.lambda_tilde, self.k, self.n, self.r, p_min)


@dataclass(frozen=True, eq=False)
class ObserverState:
    """Filter states (z, w)."""

    z: np.ndarray
    w: np.ndarray

    def __post_init__(self):
        z = np.asarray(self.z, dtype=float).ravel()
        w = np.asarray(self.w, dtype=float).ravel()
        if z.size != w.size:
            raise ValueError(f"z and w must have equal length, got {z.size}, {w.size}")
        if not (np.all(np.isfinite(z)) and np.all(np.isfinite(w))):
            raise ValueError("observer state must be finite")
        object.__setattr__(self, "z", z)
        object.__setattr__(self, "w", w)


def default_spectrum_margin(spec: ObserverSpec) -> float:
    return 0.05 * spec.k * np.abs(spec.lambda_tilde).min()


def _theta_a_samples(lower: np.ndarray, upper: np.ndarray, grid_points: int):
    """Corners plus a uniform grid of the theta_a sub-box."""
    n = lower.size
    corners = np.array(list(itertools.product(*zip(lower, upper))))
    axes = [np.linspace(lower[i], upper[i], grid_points) for i in range(n)]
    grid = np.array(list(itertools.product(*axes)))
    return np.vstack([corners, grid])


def build_observer(spec: ObserverSpec, theta_box, margin: float = None,
                   grid_points: int = 5):
    """Return (Lambda, L) = (Diag(k lambda_tilde), 1_r) after a spectrum check.

    theta_box is a (lower, upper) pair of length-2n bounds on theta.  Plant
    eigenvalues depend only on theta_a, so the check samples the corners and a
    uniform grid of the theta_a sub-box and requires every effective filter
    eigenvalue to stay at least `margin` away from every sampled plant
    eigenvalue.  Raises SpectrumOverlap otherwise (increase k or the margin
    budget).
    """
    lower, upper = (np.asarray(b, dtype=float).ravel() for b in theta_box)
    if lower.size != 2 * spec.n or upper.size != 2 * spec.n:
        raise ValueError(
            f"theta box bounds must have length 2n = {2 * spec.n}, got {lower.size}"
        )
    if np.any(upper < lower):
        raise ValueError("theta box upper bounds must dominate lower bounds")
    if margin is None:
        margin = default_spectrum_margin(spec)
    lams = spec.lambdas
    for theta_a in _theta_a_samples(lower[:spec.n], upper[:spec.n], grid_points):
        for mu in spectrum(theta_a):
            dist = np.abs(lams - mu).min()
            if dist <= margin:
                raise SpectrumOverlap(
                    f"filter eigenvalue within {dist:.3e} of plant eigenvalue "
                    f"{mu:.6g} sampled at theta_a = {theta_a} (margin {margin:.3e})"
                )
    return np.diag(lams), np.ones(spec.r)


def m_row(theta: CanonicalTheta, lambda_i: float, det_tol: float = 1e-12) -> np.ndarray:
    """Row M_i = C (A(theta) - lambda_i I)^(-1), computed by a linear solve."""
    sys = canonical_matrices(theta)
    shifted = sys.A - lambda_i * np.eye(theta.n)
    if abs(np.linalg.det(shifted)) <= det_tol:
        raise SingularShift(
            f"lambda = {lambda_i} lies in (or numerically on) the plant spectrum"
        )
    return np.linalg.solve(shifted.T, sys.C)


def m_matrix(theta: CanonicalTheta, lambdas) -> np.ndarray:
    """Stack of the rows M_i over all filter eigenvalues; shape (r, n)."""
    return np.vstack([m_row(theta, li) for li in np.asarray(lambdas, dtype=float)])


def t_map(x, theta: CanonicalTheta, w, spec: ObserverSpec) -> np.ndarray:
    """Filter target map: component i is M_i(theta) (x - theta_b w_i)."""
    x = np.asarray(x, dtype=float).ravel()
    w = np.asarray(w, dtype=float).ravel()
    M = m_matrix(theta, spec.lambdas)
    return M @ x - (M @ theta.theta_b) * w


def inverse_power_columns(lambdas, n: int) -> np.ndarray:
    """The r x n matrix with rows V_i^T = -[1/lambda_i, ..., 1/lambda_i^n]."""
    lambdas = np.asarray(lambdas, dtype=float).ravel()
    return -np.column_stack([lambdas ** -j for j in range(1, n + 1)])


def p_matrix(z, w, spec: ObserverSpec) -> np.ndarray:
    """Regression matrix with rows [V_i^T, z_i V_i^T, -w_i V_i^T]; shape (r, 3n)."""
    z = np.asarray(z, dtype=float).ravel()
    w = np.asarray(w, dtype=float).ravel()
    V = inverse_power_columns(spec.lambdas, spec.n)
    return np.hstack([V, z[:, None] * V, -w[:, None] * V])


def _solve_rcond(spec: ObserverSpec) -> float:
    return _SOLVE_RCOND_SCALE * max(spec.r, 3 * spec.n)


def t_star_explicit(z, w, spec: ObserverSpec, fallback: str = "zero",
                    previous=None):
    """Least-squares left inverse of the target map.

    When sigma_min(P)^2 >= p_min the minimizer of |P v - z| is computed through
    an orthogonal (SVD) factorization -- identical to the pseudo-inverse
    formula whenever P has full column rank -- and split as
    v = (x_hat, theta_a, theta_b) with valid=True.  Otherwise the configured
    fallback is returned with valid=False: "zero" yields the zero estimate,
    "hold" repeats `previous` (an (x_hat, theta_hat) pair).
    """
    if spec.r < 3 * spec.n:
        raise ValueError(f"left inversion needs r >= 3n, got r={spec.r}, n={spec.n}")
    z = np.asarray(z, dtype=float).ravel()
    P = p_matrix(z, w, spec)
    svals = np.linalg.svd(P, compute_uv=False)
    if svals[-1] ** 2 >= spec.p_min:
        v = np.linalg.pinv(P, rcond=_solve_rcond(spec)) @ z
        n = spec.n
        return v[:n], CanonicalTheta(v[n:2 * n], v[2 * n:]), True
    if fallback == "hold" and previous is not None:
        x_prev, theta_prev = previous
        return np.asarray(x_prev, dtype=float).copy(), theta_prev, False
    n = spec.n
    return np.zeros(n), CanonicalTheta(np.zeros(n), np.zeros(n)), False


def apply_estimate_mode(sol: np.ndarray, valid: np.ndarray, mode: str) -> np.ndarray:
    """Replace invalid rows of a raw estimate series by the configured fallback.

    "zero" zeroes them; "hold" copies the most recent valid row forward
    (rows before the first valid one become zero).
    """
    if mode not in ("zero", "hold"):
        raise ValueError(f"unknown estimate mode {mode!r}")
    sol = sol.copy()
    if mode == "zero":
        sol[~valid] = 0.0
        return sol
    N = sol.shape[0]
    src = np.maximum.accumulate(np.where(valid, np.arange(N), -1))
    padded = np.vstack([np.zeros(sol.shape[1]), sol])
    return padded[src + 1]


def t_star_series(Z, W, spec: ObserverSpec, mode: str = "zero",
                  chunk: int = 20000):
    """Vectorized left inversion along a trajectory.

    Z and W have shape (N, r).  Returns (estimates (N, 3n), valid (N,),
    sigma_min_sq (N,)).  Invalid samples are zeroed ("zero" mode) or copied
    forward from the last valid sample ("hold" mode).
    """
    Z = np.asarray(Z, dtype=float)
    W = np.asarray(W, dtype=float)
    N = Z.shape[0]
    n = spec.n
    if spec.r < 3 * n:
        raise ValueError(f"left inversion needs r >= 3n, got r={spec.r}, n={n}")
    V = inverse_power_columns(spec.lambdas, n)
    rcond = _solve_rcond(spec)
    sol = np.empty((N, 3 * n))
    smin2 = np.empty(N)
    for lo in range(0, N, chunk):
        hi = min(lo + chunk, N)
        Zc, Wc = Z[lo:hi], W[lo:hi]
        P = np.concatenate([
            np.broadcast_to(V, (hi - lo, spec.r, n)),
            Zc[:, :, None] * V[None, :, :],
            -Wc[:, :, None] * V[None, :, :],
        ], axis=2)
        smin2[lo:hi] = np.linalg.svd(P, compute_uv=False)[:, -1] ** 2
        sol[lo:hi] = (np.linalg.pinv(P, rcond=rcond) @ Zc[:, :, None])[:, :, 0]
    valid = smin2 >= spec.p_min
    return apply_estimate_mode(sol, valid, mode), valid, smin2


def lyapunov_v(x, theta: CanonicalTheta, state: ObserverState,
               spec: ObserverSpec) -> float:
    """Distance |z - T(x, theta, w)|: the observer's strict Lyapunov function."""
    return float(np.linalg.norm(state.z - t_map(x, theta, state.w, spec)))


def _grid_axes(box, grid_points_per_dim: int):
    lower, upper = (np.asarray(b, dtype=float).ravel() for b in box)
    if lower.size != upper.size:
        raise ValueError("box bounds must have equal length")
    if np.any(upper < lower):
        raise ValueError("box upper bounds must dominate lower bounds")
    return [np.linspace(lower[d], upper[d], grid_points_per_dim)
            for d in range(lower.size)]


def mcshane_inverse(z, w, box, L_T: float, grid_points_per_dim: int,
                    spec: ObserverSpec, budget: int = 2_000_000):
    """Optimization-free left inverse via the McShane extension formula.

    For every coordinate c of (x, theta) the estimate is the infimum over a
    uniform grid on `box` (a (lower, upper) pair of length-3n bounds) of
    c + |T(x, theta, w) - z| / L_T.  L_T must lower-bound the injectivity
    modulus of T on the box for the infimum to be attained at the truth on
    exact data.  Intended for n <= 2; raises BoxTooLarge when the grid
    exceeds `budget` points.
    """
    if L_T <= 0.0:
        raise ValueError(f"L_T must be positive, got {L_T}")
    n = spec.n
    z = np.asarray(z, dtype=float).ravel()
    w = np.asarray(w, dtype=float).ravel()
    axes = _grid_axes(box, grid_points_per_dim)
    if len(axes) != 3 * n:
        raise ValueError(f"box must bound all 3n = {3 * n} coordinates, got {len(axes)}")
    total = grid_points_per_dim ** (3 * n)
    if total > budget:
        raise BoxTooLarge(f"grid of {total} points exceeds the budget of {budget}")

    x_grid = np.array(list(itertools.product(*axes[:n])))
    tb_grid = np.array(list(itertools.product(*axes[2 * n:])))
    best = np.full(3 * n, np.inf)
    for ta in itertools.product(*axes[n:2 * n]):
        theta_a = np.array(ta)
        try:
            M = m_matrix(CanonicalTheta(theta_a, np.zeros(n)), spec.lambdas)
        except SingularShift:
            continue
        # T(x, theta, w) = M x - (M theta_b) * w, broadcast over both grids
        TX = x_grid @ M.T                     # (gx, r)
        TB = (tb_grid @ M.T) * w[None, :]     # (gb, r)
        dist = np.linalg.norm(TX[:, None, :] - TB[None, :, :] - z[None, None, :],
                              axis=2) / L_T
        dmin_x = dist.min(axis=1)
        dmin_b = dist.min(axis=0)
        dmin = dmin_x.min()
        for d in range(n):
            best[d] = min(best[d], (x_grid[:, d] + dmin_x).min())
            best[n + d] = min(best[n + d], theta_a[d] + dmin)
            best[2 * n + d] = min(best[2 * n + d], (tb_grid[:, d] + dmin_b).min())
    return best[:n], CanonicalTheta(best[n:2 * n], best[2 * n:])


def t_jacobian_min(box, w, spec: ObserverSpec, grid_points: int = 7,
                   fd_step: float = 1e-6) -> float:
    """Minimum sigma_min of dT/d(x, theta) over a uniform grid on a box.

    A positive floor certifies (numerically) that the target map stays
    injective on the box for this w, i.e. that the McShane premise holds;
    values near zero flag a degeneracy surface inside the box.
    """
    axes = _grid_axes(box, grid_points)
    n = spec.n
    worst = np.inf
    for point in itertools.product(*axes):
        p = np.array(point)
        jac = np.empty((spec.r, 3 * n))
        for d in range(3 * n):
            dp = np.zeros(3 * n)
            dp[d] = fd_step
            hi, lo = p + dp, p - dp
            try:
                T_hi = t_map(hi[:n], CanonicalTheta(hi[n:2 * n], hi[2 * n:]), w, spec)
                T_lo = t_map(lo[:n], CanonicalTheta(lo[n:2 * n], lo[2 * n:]), w, spec)
            except SingularShift:
                return 0.0
            jac[:, d] = (T_hi - T_lo) / (2.0 * fd_step)
        worst = min(worst, float(np.linalg.svd(jac, compute_uv=False)[-1]))
    return worst


def estimate_injectivity_modulus(box, w, spec: ObserverSpec,
                                 num_pairs: int = 2000, seed: int = 0,
                                 safety: float = 0.5) -> float:
    """Sampled estimate of min |T(p) - T(q)| / |p - q| over a box, times safety.

    Draws random point pairs in `box` (length-3n bounds on (x, theta)) --
    half spread across the box, half at small random separations where the
    worst directional stretching lives -- and returns the smallest observed
    ratio scaled by `safety`.  Sampling can only overestimate the true
    modulus, hence the deflation; the result is a practical L_T for the
    McShane inverse on exact data.
    """
    lower, upper = (np.asarray(b, dtype=float).ravel() for b in box)
    n = spec.n
    span = np.linalg.norm(upper - lower)
    rng = np.random.default_rng(seed)

    def ratio(p, q):
        gap = np.linalg.norm(p - q)
        if gap < 1e-12:
            return np.inf
        try:
            Tp = t_map(p[:n], CanonicalTheta(p[n:2 * n], p[2 * n:]), w, spec)
            Tq = t_map(q[:n], CanonicalTheta(q[n:2 * n], q[2 * n:]), w, spec)
        except SingularShift:
            return np.inf
        return np.linalg.norm(Tp - Tq) / gap

    best = np.inf
    half = num_pairs // 2
    pts = rng.uniform(lower, upper, size=(2 * half, 3 * n))
    for p, q in zip(pts[:half], pts[half:]):
        best = min(best, ratio(p, q))
    for _ in range(num_pairs - half):
        p = rng.uniform(lower, upper)
        direction = rng.normal(size=3 * n)
        direction /= np.linalg.norm(direction)
        eps = span * 10.0 ** rng.uniform(-4.0, -0.5)
        q = np.clip(p + eps * direction, lower, upper)
        best = min(best, ratio(p, q))
    return float(safety * best)
