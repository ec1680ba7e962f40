import numpy as np
import pytest
import sympy
from numpy.testing import assert_allclose

from luenid import (CanonicalTheta, NotObservable, StateSpace,
                    canonical_matrices, controllability_matrix, is_controllable,
                    markov_parameters, observability_matrix, spectrum,
                    sylvester_matrix, to_canonical)

PAPER_A = np.array([[-2.31, -0.17, -0.16],
                    [-0.17, -1.02, 0.04],
                    [-0.15, 0.04, -0.26]])
PAPER_B = np.array([0.0, 0.88, 0.0])
PAPER_C = np.array([1.18, -0.78, -0.96])

# char-poly coefficients of PAPER_A, locked against the symbolic determinant
# oracle in test_to_canonical_paper_system
PAPER_THETA_A = np.array([3.59, 3.1675, 0.574814])


def paper_system():
    return StateSpace(PAPER_A, PAPER_B, PAPER_C)


def random_observable(rng, n):
    while True:
        A = rng.normal(size=(n, n)) / np.sqrt(n)
        B = rng.normal(size=n)
        C = rng.normal(size=n)
        sys_ = StateSpace(A, B, C)
        svals = np.linalg.svd(observability_matrix(sys_), compute_uv=False)
        if svals[-1] > 1e-3 * svals[0]:
            return sys_


class TestCanonicalMatrices:
    def test_scalar(self):
        sys_ = canonical_matrices(CanonicalTheta([1.0], [1.0]))
        assert_allclose(sys_.A, [[-1.0]])
        assert_allclose(sys_.B, [1.0])
        assert_allclose(sys_.C, [1.0])

    def test_third_order_structure(self):
        ta = np.array([0.3, -1.2, 2.5])
        sys_ = canonical_matrices(CanonicalTheta(ta, [1.0, 2.0, 3.0]))
        expected = np.array([[-0.3, 1.0, 0.0],
                             [1.2, 0.0, 1.0],
                             [-2.5, 0.0, 0.0]])
        assert_allclose(sys_.A, expected)
        assert_allclose(sys_.C, [1.0, 0.0, 0.0])

    def test_double_integrator(self):
        sys_ = canonical_matrices(CanonicalTheta([0.0, 0.0], [0.0, 1.0]))
        assert_allclose(sys_.A, [[0.0, 1.0], [0.0, 0.0]])
        assert_allclose(sys_.B, [0.0, 1.0])


class TestToCanonical:
    def test_fixed_point(self):
        rng = np.random.default_rng(1)
        for _ in range(20):
            theta = CanonicalTheta(rng.normal(size=3), rng.normal(size=3))
            back, Q = to_canonical(canonical_matrices(theta))
            assert_allclose(back.vector, theta.vector, atol=1e-11)
            assert_allclose(Q, np.eye(3), atol=1e-11)

    def test_paper_system(self):
        # oracle: expand det(lambda I - A) symbolically
        lam = sympy.symbols("lam")
        A = sympy.Matrix(PAPER_A.tolist())
        poly = sympy.Poly((lam * sympy.eye(3) - A).det(), lam)
        coeffs = np.array([float(c) for c in poly.all_coeffs()[1:]])
        assert_allclose(coeffs, PAPER_THETA_A, atol=1e-12)

        theta, Q = to_canonical(paper_system())
        assert_allclose(theta.theta_a, PAPER_THETA_A, atol=1e-12)
        canon = canonical_matrices(theta)
        assert_allclose(Q @ PAPER_A, canon.A @ Q, atol=1e-12)
        assert_allclose(Q @ PAPER_B, canon.B, atol=1e-12)
        assert_allclose(np.linalg.solve(Q.T, PAPER_C), canon.C, atol=1e-12)

    def test_scalar_hand_calculation(self):
        theta, Q = to_canonical(StateSpace([[-2.0]], [3.0], [5.0]))
        assert_allclose(theta.theta_a, [2.0])
        assert_allclose(Q, [[5.0]])
        assert_allclose(theta.theta_b, [15.0])

    def test_not_observable(self):
        with pytest.raises(NotObservable):
            to_canonical(StateSpace([[1.0, 0.0], [0.0, 2.0]], [1.0, 1.0], [1.0, 0.0]))


class TestSpectrum:
    def test_all_zero(self):
        assert_allclose(spectrum([0.0, 0.0, 0.0]), np.zeros(3))

    def test_factorable(self):
        assert_allclose(spectrum([3.0, 2.0]), [-2.0, -1.0], atol=1e-12)

    def test_paper_system_oracle(self):
        theta, _ = to_canonical(paper_system())
        oracle = np.sort(np.linalg.eigvals(PAPER_A).real)
        assert_allclose(spectrum(theta.theta_a).real, oracle, atol=1e-10)
        assert np.abs(spectrum(theta.theta_a).imag).max() < 1e-12


class TestMarkovParameters:
    def test_canonical_trivial(self):
        sys_ = canonical_matrices(CanonicalTheta([0.0, 0.0], [1.0, 0.0]))
        assert_allclose(markov_parameters(sys_), [1.0, 0.0])

    def test_paper_system_direct_oracle(self):
        sys_ = paper_system()
        oracle = np.array([PAPER_C @ PAPER_B,
                           PAPER_C @ PAPER_A @ PAPER_B,
                           PAPER_C @ PAPER_A @ PAPER_A @ PAPER_B])
        assert_allclose(markov_parameters(sys_), oracle, atol=1e-14)
        assert_allclose(oracle, [-0.6864, 0.489808, -0.13216192], atol=1e-12)

    def test_similarity_invariance(self):
        rng = np.random.default_rng(2)
        for _ in range(50):
            sys_ = random_observable(rng, 3)
            Q = rng.normal(size=(3, 3)) + 3.0 * np.eye(3)
            transformed = StateSpace(Q @ sys_.A @ np.linalg.inv(Q), Q @ sys_.B,
                                     np.linalg.solve(Q.T, sys_.C))
            assert_allclose(markov_parameters(transformed), markov_parameters(sys_),
                            rtol=1e-9, atol=1e-9)


class TestSylvesterMatrix:
    def test_scalar_structure(self):
        M = sylvester_matrix(CanonicalTheta([5.0], [7.0]))
        assert_allclose(M, [[7.0, 5.0], [0.0, 1.0]])
        flag, _ = is_controllable(CanonicalTheta([5.0], [7.0]))
        assert flag
        flag, sigma = is_controllable(CanonicalTheta([5.0], [1e-12]))
        assert not flag

    def test_zero_numerator_singular(self):
        M = sylvester_matrix(CanonicalTheta([1.0, 2.0], [0.0, 0.0]))
        assert np.linalg.matrix_rank(M) < 4
        flag, sigma = is_controllable(CanonicalTheta([1.0, 2.0], [0.0, 0.0]))
        assert not flag and sigma < 1e-12

    def test_against_controllability_rank_oracle(self):
        rng = np.random.default_rng(3)
        for _ in range(100):
            theta = CanonicalTheta(rng.normal(size=2), rng.normal(size=2))
            sys_ = canonical_matrices(theta)
            ctrb_rank = np.linalg.matrix_rank(controllability_matrix(sys_))
            flag, _ = is_controllable(theta)
            assert flag == (ctrb_rank == 2)


class TestInvariants:
    def test_roundtrip_1000_thetas(self):
        rng = np.random.default_rng(4)
        for _ in range(1000):
            n = rng.integers(1, 5)
            theta = CanonicalTheta(rng.normal(size=n), rng.normal(size=n))
            back, _ = to_canonical(canonical_matrices(theta))
            scale = max(1.0, np.abs(theta.vector).max())
            assert np.abs(back.vector - theta.vector).max() <= 1e-9 * scale

    def test_similarity_residual_random_observable(self):
        rng = np.random.default_rng(5)
        for _ in range(200):
            n = int(rng.integers(1, 5))
            sys_ = random_observable(rng, n)
            theta, Q = to_canonical(sys_)
            canon = canonical_matrices(theta)
            a_scale = max(1.0, np.linalg.norm(sys_.A))
            assert np.linalg.norm(Q @ sys_.A - canon.A @ Q) <= 1e-9 * a_scale * np.linalg.norm(Q)

    def test_spectrum_matches_canonical_eigenvalues(self):
        rng = np.random.default_rng(6)
        for _ in range(200):
            n = int(rng.integers(1, 5))
            theta_a = rng.normal(size=n)
            eigs = np.linalg.eigvals(canonical_matrices(
                CanonicalTheta(theta_a, np.ones(n))).A)
            eigs = eigs[np.lexsort((eigs.imag, eigs.real))]
            assert np.abs(spectrum(theta_a) - eigs).max() < 1e-8

    def test_sylvester_agrees_with_ctrb_rank_1000(self):
        rng = np.random.default_rng(7)
        count = 0
        for _ in range(1000):
            n = int(rng.integers(1, 5))
            theta = CanonicalTheta(rng.normal(size=n), rng.normal(size=n))
            sys_ = canonical_matrices(theta)
            ctrb_ok = np.linalg.matrix_rank(controllability_matrix(sys_)) == n
            flag, _ = is_controllable(theta)
            assert flag == ctrb_ok
            count += 1
        assert count == 1000
