"""Canonical parameterization of SISO LTI systems.

A system is described either by a general (A, B, C) triple or by the
2n-dimensional parameter vector theta = (theta_a, theta_b) of the observable
canonical form

    A(theta) = [-theta_a | e_2 ... e_n],   B(theta) = theta_b,   C = e_1^T,

whose characteristic polynomial is
lambda^n + theta_a1 lambda^(n-1) + ... + theta_an.  Controllability of the
canonical pair is equivalent to invertibility of the 2n x 2n resultant-style
Sylvester matrix built from (theta_a, theta_b).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, NotObservable

DEFAULT_RANK_TOL = 1e-8


def _as_vector(v, name: str) -> np.ndarray:
    arr = np.atleast_1d(np.asarray(v, dtype=float)).ravel()
    if arr.size == 0:
        raise DimensionMismatch(f"{name} must have at least one entry")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} must be finite, got {arr}")
    return arr


@dataclass(frozen=True, eq=False)
class CanonicalTheta:
    """Parameter vector of the canonical realization: denominator and numerator parts."""

    theta_a: np.ndarray
    theta_b: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "theta_a", _as_vector(self.theta_a, "theta_a"))
        object.__setattr__(self, "theta_b", _as_vector(self.theta_b, "theta_b"))
        if self.theta_a.size != self.theta_b.size:
            raise DimensionMismatch(
                f"theta_a has length {self.theta_a.size} but theta_b has length {self.theta_b.size}"
            )

    @property
    def n(self) -> int:
        return self.theta_a.size

    @property
    def vector(self) -> np.ndarray:
        """Concatenated (theta_a, theta_b), length 2n."""
        return np.concatenate([self.theta_a, self.theta_b])

    @classmethod
    def from_vector(cls, v) -> "CanonicalTheta":
        v = _as_vector(v, "theta")
        if v.size % 2:
            raise DimensionMismatch(f"theta vector must have even length, got {v.size}")
        n = v.size // 2
        return cls(v[:n], v[n:])


@dataclass(frozen=True, eq=False)
class StateSpace:
    """A general (A, B, C) triple for an n-dimensional SISO system."""

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray

    def __post_init__(self):
        A = np.asarray(self.A, dtype=float)
        B = np.asarray(self.B, dtype=float).ravel()
        C = np.asarray(self.C, dtype=float).ravel()
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise DimensionMismatch(f"A must be square, got shape {A.shape}")
        n = A.shape[0]
        if B.size != n or C.size != n:
            raise DimensionMismatch(
                f"B and C must have length {n}, got {B.size} and {C.size}"
            )
        for name, arr in (("A", A), ("B", B), ("C", C)):
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"{name} must be finite")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "C", C)

    @property
    def n(self) -> int:
        return self.A.shape[0]


def canonical_matrices(theta: CanonicalTheta) -> StateSpace:
    """Realize theta as the observable canonical triple (A, B, C)."""
    n = theta.n
    A = np.zeros((n, n))
    A[:, 0] = -theta.theta_a
    for i in range(n - 1):
        A[i, i + 1] = 1.0
    C = np.zeros(n)
    C[0] = 1.0
    return StateSpace(A, theta.theta_b.copy(), C)


def observability_matrix(sys: StateSpace) -> np.ndarray:
    """Stack the rows C, CA, ..., CA^(n-1)."""
    rows = [sys.C]
    for _ in range(sys.n - 1):
        rows.append(rows[-1] @ sys.A)
    return np.vstack(rows)


def controllability_matrix(sys: StateSpace) -> np.ndarray:
    """Stack the columns B, AB, ..., A^(n-1)B."""
    cols = [sys.B]
    for _ in range(sys.n - 1):
        cols.append(sys.A @ cols[-1])
    return np.column_stack(cols)


def to_canonical(sys: StateSpace, rank_tol: float = DEFAULT_RANK_TOL):
    """Convert an observable (A, B, C) triple to canonical parameters.

    Returns (theta, Q) where Q is the change of basis such that
    Q A Q^-1, Q B, C Q^-1 equal the canonical triple of theta.  Q is built
    row-recursively from q_1 = C, q_{i+1} = q_i A + theta_a_i C; the last
    recursion step closes by the Cayley-Hamilton theorem.

    Raises NotObservable when the observability matrix is numerically rank
    deficient (smallest singular value <= rank_tol times the largest).
    """
    obs = observability_matrix(sys)
    svals = np.linalg.svd(obs, compute_uv=False)
    if svals[-1] <= rank_tol * svals[0]:
        raise NotObservable(
            f"observability matrix is rank deficient (sigma_min/sigma_max = "
            f"{svals[-1] / svals[0]:.3e})"
        )
    theta_a = np.poly(sys.A)[1:].real
    rows = [sys.C]
    for i in range(sys.n - 1):
        rows.append(rows[-1] @ sys.A + theta_a[i] * sys.C)
    Q = np.vstack(rows)
    theta_b = Q @ sys.B
    return CanonicalTheta(theta_a, theta_b), Q


def spectrum(theta_a) -> np.ndarray:
    """Roots of lambda^n + theta_a1 lambda^(n-1) + ... + theta_an.

    Computed as companion-matrix eigenvalues, returned sorted by real part
    then imaginary part.
    """
    theta_a = _as_vector(theta_a, "theta_a")
    roots = np.roots(np.concatenate([[1.0], theta_a]))
    order = np.lexsort((roots.imag, roots.real))
    return roots[order]


def markov_parameters(sys: StateSpace) -> np.ndarray:
    """The first n Markov parameters [CB, CAB, ..., CA^(n-1)B]."""
    row = sys.C
    out = np.empty(sys.n)
    for i in range(sys.n):
        out[i] = row @ sys.B
        row = row @ sys.A
    return out


def sylvester_matrix(theta: CanonicalTheta) -> np.ndarray:
    """The banded 2n x 2n resultant matrix of (theta_a, theta_b).

    Left block columns carry theta_b (theta_bn on top), right block columns
    carry theta_a with a trailing 1.  The matrix is invertible exactly when
    the canonical pair (A(theta_a), B(theta_b)) is controllable.
    """
    n = theta.n
    M = np.zeros((2 * n, 2 * n))
    for j in range(n):
        for d in range(n):
            M[j + d, j] = theta.theta_b[n - 1 - d]
            M[j + d, n + j] = theta.theta_a[n - 1 - d]
        M[j + n, n + j] = 1.0
    return M


def is_controllable(theta: CanonicalTheta, tol: float = None):
    """Controllability test via the Sylvester matrix.

    Returns (flag, sigma_min) where flag is True when the smallest singular
    value exceeds tol (default: 1e-8 times the largest singular value).
    """
    svals = np.linalg.svd(sylvester_matrix(theta), compute_uv=False)
    if tol is None:
        tol = DEFAULT_RANK_TOL * svals[0]
    return bool(svals[-1] > tol), float(svals[-1])
