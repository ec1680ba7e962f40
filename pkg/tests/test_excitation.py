import numpy as np
import pytest
import sympy
from numpy.testing import assert_allclose

from luenid import (DimensionMismatch, InvalidQuadrature, Multisine,
                    diff_exciting_order, eval_derivatives,
                    generate_exciting_input, hankel, persistency_gram)

SIN = Multisine(((1.0, 1.0, 0.0),))
SIN_PLUS_SIN2 = Multisine(((1.0, 1.0, 0.0), (1.0, 2.0, 0.0)))


class TestMultisine:
    def test_rejects_duplicate_frequencies(self):
        with pytest.raises(ValueError):
            Multisine(((1.0, 1.0, 0.0), (2.0, 1.0, 0.5)))

    def test_rejects_zero_amplitude(self):
        with pytest.raises(ValueError):
            Multisine(((0.0, 1.0, 0.0),))

    def test_value(self):
        t = np.linspace(0, 5, 50)
        assert_allclose(SIN_PLUS_SIN2.value(t), np.sin(t) + np.sin(2 * t))
        assert SIN.value(np.pi / 2) == pytest.approx(1.0)

    def test_empty_signal_is_zero(self):
        zero = Multisine(())
        assert zero.value(1.7) == 0.0
        assert_allclose(eval_derivatives(zero, 0.3, 4).values, np.zeros(5))


class TestEvalDerivatives:
    def test_single_sine(self):
        assert_allclose(eval_derivatives(SIN, 0.0, 4).values, [0, 1, 0, -1, 0],
                        atol=1e-14)

    def test_two_sines_symbolic_oracle(self):
        t = sympy.symbols("t")
        expr = sympy.sin(t) + sympy.sin(2 * t)
        oracle = [float(sympy.diff(expr, t, m).subs(t, 0)) for m in range(7)]
        assert_allclose(oracle, [0, 3, 0, -9, 0, 33, 0], atol=1e-12)
        assert_allclose(eval_derivatives(SIN_PLUS_SIN2, 0.0, 6).values, oracle,
                        atol=1e-12)

    def test_amplitude_and_frequency(self):
        sig = Multisine(((2.0, 3.0, 0.0),))
        assert_allclose(eval_derivatives(sig, 0.0, 2).values, [0.0, 6.0, 0.0],
                        atol=1e-14)

    def test_matches_finite_differences(self):
        sig = Multisine(((0.7, 0.9, 0.3), (1.3, 1.7, -0.8)))
        h = 1e-4
        for t in (0.0, 0.37, 2.9):
            stack = eval_derivatives(sig, t, 4).values
            for m in range(1, 5):
                lo = eval_derivatives(sig, t - h, m - 1).values[m - 1]
                hi = eval_derivatives(sig, t + h, m - 1).values[m - 1]
                fd = (hi - lo) / (2 * h)
                assert abs(fd - stack[m]) <= 1e-5 * max(1.0, abs(stack[m]))


class TestHankel:
    def test_small(self):
        assert_allclose(hankel([0.0, 1.0, 0.0]), [[0, 1], [1, 0]])

    def test_single_sine_order2_singular(self):
        M = hankel([0.0, 1.0, 0.0, -1.0, 0.0])
        assert_allclose(M, [[0, 1, 0], [1, 0, -1], [0, -1, 0]])
        assert abs(np.linalg.det(M)) < 1e-14

    def test_determinant_exact_oracle(self):
        v = eval_derivatives(SIN_PLUS_SIN2, 0.0, 6).values
        ints = sympy.Matrix([[int(round(v[i + j])) for j in range(4)] for i in range(4)])
        assert abs(int(ints.det())) == 324
        assert abs(np.linalg.det(hankel(np.round(v)))) == pytest.approx(324.0)

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatch):
            hankel([1.0, 2.0])

    def test_antidiagonal_equality_exact(self):
        rng = np.random.default_rng(0)
        v = rng.normal(size=9)
        M = hankel(v)
        for i in range(5):
            for j in range(5):
                assert M[i, j] == v[i + j]


class TestDiffExcitingOrder:
    def test_single_sine_order1(self):
        ok, sigma = diff_exciting_order(SIN, 0.0, 1)
        assert ok and sigma == pytest.approx(1.0)

    def test_single_sine_order2_fails(self):
        ok, sigma = diff_exciting_order(SIN, 0.0, 2)
        assert not ok and sigma < 1e-12

    def test_two_sines_order3_over_grid(self):
        for t in np.linspace(0.0, 10.0, 1000):
            ok, _ = diff_exciting_order(SIN_PLUS_SIN2, t, 3)
            assert ok


class TestPersistencyGram:
    def test_zero_signal(self):
        gram, rho = persistency_gram(Multisine(()), 0.0, 1.0, 2)
        assert_allclose(gram, np.zeros((3, 3)))
        assert rho == 0.0

    def test_single_sine_closed_form(self):
        gram, rho = persistency_gram(SIN, 0.0, 2 * np.pi, 1)
        assert_allclose(gram, np.pi * np.eye(2), atol=1e-6)
        assert rho == pytest.approx(np.pi, abs=1e-6)

    def test_two_sines_positive(self):
        for eps in (0.5, 1.0, 2.0):
            _, rho = persistency_gram(SIN_PLUS_SIN2, 0.0, eps, 3)
            assert rho > 0.0

    def test_psd_and_monotone_in_epsilon(self):
        rng = np.random.default_rng(1)
        last = None
        for eps in (0.25, 0.5, 1.0, 2.0):
            gram, rho = persistency_gram(SIN_PLUS_SIN2, 0.3, eps, 3)
            assert np.linalg.eigvalsh(gram)[0] >= -1e-10
            if last is not None:
                assert rho >= last - 1e-12
            last = rho
        for _ in range(10):
            sig = Multisine(((rng.uniform(0.5, 2), rng.uniform(0.2, 3), rng.uniform(0, 6)),))
            gram, _ = persistency_gram(sig, rng.uniform(0, 5), 1.0, 2)
            assert np.linalg.eigvalsh(gram)[0] >= -1e-10

    def test_invalid_quadrature(self):
        with pytest.raises(InvalidQuadrature):
            persistency_gram(SIN, 0.0, 1.0, 1, quad_step=1.5)
        with pytest.raises(InvalidQuadrature):
            persistency_gram(SIN, 0.0, 1.0, 1, quad_step=0.3)


class TestGenerateExcitingInput:
    def test_order1_single_sine(self):
        sig = generate_exciting_input(1)
        assert sig.count == 1
        assert diff_exciting_order(sig, 0.0, 1)[0]

    def test_order3_two_sines(self):
        sig = generate_exciting_input(3)
        assert sig.count == 2
        assert diff_exciting_order(sig, 0.0, 3)[0]

    def test_order11_six_sines_and_term_override(self):
        sig = generate_exciting_input(11)
        assert sig.count == 6
        assert diff_exciting_order(sig, 0.0, 11)[0]
        rich = generate_exciting_input(11, num_terms=11)
        assert rich.count == 11
        assert np.unique(rich.frequencies).size == 11

    def test_custom_rules(self):
        sig = generate_exciting_input(3, freq_rule=lambda i: 0.4 * i,
                                      amp_rule=lambda i, w: 2.0)
        assert_allclose(sig.frequencies, [0.4, 0.8])
        assert_allclose(sig.amplitudes, [2.0, 2.0])


class TestLemma1Property:
    """r distinct sines are differentially exciting of order 2r-1 everywhere."""

    def test_default_signals_on_grid(self):
        grid = np.linspace(0.0, 20.0, 500)
        for r_sig in (1, 2, 3, 6):
            sig = generate_exciting_input(2 * r_sig - 1)
            assert sig.count == r_sig
            for t in grid:
                ok, sigma = diff_exciting_order(sig, t, 2 * r_sig - 1)
                assert ok, f"r={r_sig} failed at t={t} (sigma_min={sigma:.3e})"

    def test_random_multisines(self):
        rng = np.random.default_rng(2)
        grid = np.linspace(0.0, 20.0, 100)
        for _ in range(15):
            r_sig = int(rng.integers(1, 4))
            freqs = np.cumsum(rng.uniform(0.3, 0.9, size=r_sig)) + rng.uniform(0.1, 0.4)
            amps = rng.uniform(0.5, 2.0, size=r_sig) * rng.choice([-1.0, 1.0], size=r_sig)
            sig = Multisine(tuple((amps[i], freqs[i], 0.0) for i in range(r_sig)))
            for t in grid:
                ok, _ = diff_exciting_order(sig, t, 2 * r_sig - 1)
                assert ok
