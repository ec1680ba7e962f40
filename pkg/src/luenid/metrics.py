"""Quantitative assessment of identification runs.

Eigenvalue errors pair the two spectra greedily by distance; the Markov-
parameter error is the similarity-invariant relative mismatch
|O_n B - O_n(theta_hat) B(theta_hat)| / |O_n B|; decay rates are fitted as
log-linear slopes of the Lyapunov distance; and a finite-difference Jacobian
of the stacked output-derivative map provides a numerical injectivity
certificate over a parameter box.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateReference, DegenerateWindow
from .ltisys import CanonicalTheta, StateSpace, canonical_matrices, markov_parameters, spectrum
from .simulate import Trajectory


@dataclass(eq=False)
class RunReport:
    """Summary numbers for one identification run."""

    final_eigen_error: float
    final_markov_error: float
    err_series: np.ndarray
    fitted_decay_rate: float
    steady_state_eigen_error: float
    steady_state_markov_error: float
    validity_fraction: float


def _greedy_pair_distance(a, b) -> float:
    """Sum of distances under greedy minimal-distance pairing of two spectra."""
    a = list(a)
    b = list(b)
    total = 0.0
    while a:
        d = np.array([[abs(p - q) for q in b] for p in a])
        i, j = np.unravel_index(np.argmin(d), d.shape)
        total += float(d[i, j])
        a.pop(i)
        b.pop(j)
    return total


def eigen_error(theta_hat: CanonicalTheta, theta_true: CanonicalTheta) -> float:
    """Paired distance between the estimated and true plant spectra."""
    return _greedy_pair_distance(spectrum(theta_hat.theta_a), spectrum(theta_true.theta_a))


def markov_error(theta_hat: CanonicalTheta, reference: StateSpace) -> float:
    """Relative Markov-parameter error of theta_hat against a reference system."""
    ref = markov_parameters(reference)
    scale = np.linalg.norm(ref)
    if scale == 0.0:
        raise DegenerateReference("reference Markov parameters are all zero")
    est = markov_parameters(canonical_matrices(theta_hat))
    return float(np.linalg.norm(est - ref) / scale)


def markov_parameters_series(theta_hat_series: np.ndarray) -> np.ndarray:
    """Markov parameters of canonical theta estimates, vectorized over samples.

    Uses the convolution recurrence h_j = theta_b_j - sum_m theta_a_m h_(j-m),
    which agrees with markov_parameters(canonical_matrices(.)) sample by
    sample.  Input shape (N, 2n); output shape (N, n).
    """
    th = np.asarray(theta_hat_series, dtype=float)
    n = th.shape[1] // 2
    ta, tb = th[:, :n], th[:, n:]
    H = np.empty((th.shape[0], n))
    for j in range(n):
        acc = tb[:, j].copy()
        for m in range(j):
            acc -= ta[:, m] * H[:, j - 1 - m]
        H[:, j] = acc
    return H


def markov_error_series(theta_hat_series: np.ndarray, reference: StateSpace) -> np.ndarray:
    """Relative Markov-parameter error at every sample of an estimate series."""
    ref = markov_parameters(reference)
    scale = np.linalg.norm(ref)
    if scale == 0.0:
        raise DegenerateReference("reference Markov parameters are all zero")
    H = markov_parameters_series(theta_hat_series)
    return np.linalg.norm(H - ref[None, :], axis=1) / scale


def eigen_error_series(theta_hat_series: np.ndarray, theta_true: CanonicalTheta) -> np.ndarray:
    """Paired spectrum distance at every sample of an estimate series."""
    th = np.asarray(theta_hat_series, dtype=float)
    n = th.shape[1] // 2
    true_spec = spectrum(theta_true.theta_a)
    out = np.empty(th.shape[0])
    for i in range(th.shape[0]):
        out[i] = _greedy_pair_distance(np.roots(np.concatenate([[1.0], th[i, :n]])),
                                       true_spec)
    return out


def fit_decay_rate(traj: Trajectory, window) -> float:
    """Least-squares slope of log V versus t over a (t0, t1) window."""
    t0, t1 = window
    mask = (traj.t >= t0) & (traj.t <= t1)
    if mask.sum() < 2:
        raise DegenerateWindow(f"window ({t0}, {t1}) contains fewer than two samples")
    V = traj.V[mask]
    if np.any(V <= 0.0):
        raise DegenerateWindow("V reaches zero inside the fit window")
    return float(np.polyfit(traj.t[mask], np.log(V), 1)[0])


def output_derivative_map(x, theta: CanonicalTheta, v, r: int) -> np.ndarray:
    """Stack of the first r output derivatives given input derivatives v.

    Component i is C A^i x + sum_(m<i) C A^(i-1-m) B v_m: the shifted
    accumulation of Markov parameters against the input derivative stack.
    """
    sys = canonical_matrices(theta)
    v = np.asarray(v, dtype=float).ravel()
    out = np.empty(r)
    row = sys.C
    markov = []
    for i in range(r):
        out[i] = row @ x
        markov.append(row @ sys.B)
        row = row @ sys.A
    for i in range(1, r):
        m = min(i, v.size)
        out[i] += sum(markov[i - 1 - j] * v[j] for j in range(m))
    return out


def injectivity_diagnostic(theta_box, x_box, input_derivatives, r: int,
                           grid_points: int = 3, fd_step: float = 1e-6) -> float:
    """Smallest singular value of the output-derivative-map Jacobian over a box.

    Samples (x, theta) on a uniform grid including the box corners,
    differentiates the stacked derivative map in (x, theta) by central finite
    differences, and returns the minimum sigma_min: a numerical certificate
    that the map stays injective (uniformly in the given input derivatives)
    on the box.  Values near zero flag loss of identifiability.
    """
    v = np.asarray(getattr(input_derivatives, "values", input_derivatives),
                   dtype=float).ravel()
    x_lo, x_hi = (np.asarray(b, dtype=float).ravel() for b in x_box)
    th_lo, th_hi = (np.asarray(b, dtype=float).ravel() for b in theta_box)
    n = x_lo.size
    axes = [np.linspace(x_lo[d], x_hi[d], grid_points) for d in range(n)]
    axes += [np.linspace(th_lo[d], th_hi[d], grid_points) for d in range(2 * n)]
    worst = np.inf
    for point in itertools.product(*axes):
        p = np.array(point)
        jac = np.empty((r, 3 * n))
        for d in range(3 * n):
            dp = np.zeros(3 * n)
            dp[d] = fd_step
            hi = p + dp
            lo = p - dp
            f_hi = output_derivative_map(hi[:n], CanonicalTheta(hi[n:2 * n], hi[2 * n:]), v, r)
            f_lo = output_derivative_map(lo[:n], CanonicalTheta(lo[n:2 * n], lo[2 * n:]), v, r)
            jac[:, d] = (f_hi - f_lo) / (2.0 * fd_step)
        worst = min(worst, float(np.linalg.svd(jac, compute_uv=False)[-1]))
    return worst


def summarize_run(traj: Trajectory, theta_true: CanonicalTheta,
                  reference: StateSpace, discard_before: float,
                  steady_window: float = None) -> RunReport:
    """Condense a run into the standard report numbers.

    Steady-state errors are medians over the trailing window of given length
    (default: the post-transient half of the run); the decay rate is fitted
    over [discard_before, horizon].
    """
    horizon = traj.t[-1]
    if steady_window is None:
        steady_window = 0.5 * max(horizon - discard_before, traj.metadata["step_s"])
    w_start = max(discard_before, horizon - steady_window)
    wmask = traj.t >= w_start
    post = traj.t >= discard_before

    err_series = markov_error_series(traj.theta_hat, reference)
    eig_series = eigen_error_series(traj.theta_hat[wmask], theta_true)
    try:
        rate = fit_decay_rate(traj, (discard_before, horizon))
    except DegenerateWindow:
        rate = 0.0
    return RunReport(
        final_eigen_error=float(eigen_error(
            CanonicalTheta(traj.theta_hat[-1, :theta_true.n],
                           traj.theta_hat[-1, theta_true.n:]), theta_true)),
        final_markov_error=float(err_series[-1]),
        err_series=err_series,
        fitted_decay_rate=rate,
        steady_state_eigen_error=float(np.median(eig_series)),
        steady_state_markov_error=float(np.median(err_series[wmask])),
        validity_fraction=float(traj.valid[post].mean()),
    )
