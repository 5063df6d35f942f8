import math

import numpy as np
import pytest

from selbergzeta import numerics as nm
from selbergzeta.errors import ConvergenceError, DomainError, PoleError, TailBoundError

EULER_GAMMA = 0.5772156649015329

# reference values from mpmath at 30 digits
HURWITZ_25_1i_075 = 2.20030589299868042622 + 0.29222330083215433600j
LOGGAMMA_25_15i = -0.22711224079322732219 + 1.17129293466460303398j


class TestHurwitz:
    def test_basel(self):
        assert nm.hurwitz_zeta(2, 1) == pytest.approx(math.pi ** 2 / 6, abs=1e-12)

    def test_index_shift(self):
        assert nm.hurwitz_zeta(3, 2) == pytest.approx(0.202056903160, abs=1e-12)

    def test_complex_against_reference(self):
        assert abs(nm.hurwitz_zeta(2.5 + 1.0j, 0.75) - HURWITZ_25_1i_075) < 1e-10

    def test_brute_force_partial_sum(self):
        # direct sum to 10^6 plus the integral and midpoint corrections of the tail
        s, a = 2.5 + 1.0j, 0.75
        n = np.arange(10 ** 6) + a
        x = 10 ** 6 + a
        brute = np.sum(n ** -s) + x ** (1 - s) / (s - 1) + 0.5 * x ** -s + s / 12 * x ** (-s - 1)
        assert abs(nm.hurwitz_zeta(s, a) - brute) < 1e-10

    def test_vectorised(self):
        s = np.array([2.0, 3.0, 2.5 + 1j])
        out = nm.hurwitz_zeta(s, 0.75)
        assert out.shape == (3,)
        assert out[2] == pytest.approx(HURWITZ_25_1i_075, abs=1e-10)

    def test_continuation_left_of_one(self):
        # zeta(0, a) = 1/2 - a and zeta(-1, a) = -B_2(a)/2
        assert nm.hurwitz_zeta(0.0, 0.3) == pytest.approx(0.2, abs=1e-10)
        a = 0.3
        assert nm.hurwitz_zeta(-1.0, a) == pytest.approx(-(a * a - a + 1 / 6) / 2, abs=1e-10)

    def test_pole(self):
        with pytest.raises(PoleError):
            nm.hurwitz_zeta(1.0, 0.5)

    def test_bad_shift(self):
        with pytest.raises(DomainError):
            nm.hurwitz_zeta(2.0, 0.0)


class TestGamma:
    def test_log_gamma_values(self):
        assert abs(nm.log_gamma(1.0)) < 1e-14
        assert nm.log_gamma(0.5) == pytest.approx(0.572364942925, abs=1e-12)
        assert abs(nm.log_gamma(2.5 + 1.5j) - LOGGAMMA_25_15i) < 1e-10

    def test_digamma_values(self):
        assert nm.digamma(1.0) == pytest.approx(-EULER_GAMMA, abs=1e-12)
        assert nm.digamma(2.0) == pytest.approx(1 - EULER_GAMMA, abs=1e-12)

    def test_digamma_finite_difference(self):
        s, h = 1 + 2j, 1e-6
        fd = (nm.log_gamma(s + h) - nm.log_gamma(s - h)) / (2 * h)
        assert abs(nm.digamma(s) - fd) < 1e-8

    @pytest.mark.parametrize("fn", [nm.log_gamma, nm.digamma])
    def test_left_half_plane_rejected(self, fn):
        with pytest.raises(DomainError):
            fn(-0.5 + 1j)


def cofactor_det(M):
    n = len(M)
    if n == 1:
        return M[0][0]
    return sum((-1) ** j * M[0][j] * cofactor_det([row[:j] + row[j + 1:] for row in M[1:]])
               for j in range(n))


class TestDeterminant:
    def test_trivial(self):
        assert nm.complex_det(np.eye(5)) == pytest.approx(1.0)
        assert nm.complex_det(np.diag([2, 3j])) == pytest.approx(6j)
        assert nm.complex_det(np.zeros((0, 0))) == 1.0

    def test_against_cofactor_expansion(self):
        rng = np.random.default_rng(7)
        M = rng.uniform(0, 1, (8, 8)) * np.exp(2j * np.pi * rng.uniform(size=(8, 8)))
        assert abs(nm.complex_det(M) - cofactor_det(M.tolist())) < 1e-10

    def test_singular(self):
        assert nm.complex_det(np.ones((4, 4))) == pytest.approx(0.0, abs=1e-14)

    def test_growth(self):
        det, growth = nm.complex_det(np.eye(3) * 2, with_growth=True)
        assert det == pytest.approx(8.0) and growth == pytest.approx(1.0)

    @pytest.mark.parametrize("M", [np.ones((2, 3)), np.array([[np.nan, 0], [0, 1]])])
    def test_invalid(self, M):
        with pytest.raises(DomainError):
            nm.complex_det(M)


class TestEigen:
    def test_diagonal(self):
        lam, v = nm.leading_eigenpair(np.diag([3.0, 1.0]))
        assert lam == pytest.approx(3.0)
        assert np.allclose(np.abs(v), [1, 0])

    def test_triangular(self):
        lam, _ = nm.leading_eigenpair(np.array([[2.0, 1.0], [0.0, 1.0]]))
        assert lam == pytest.approx(2.0)

    def test_not_separated(self):
        with pytest.raises(ConvergenceError):
            nm.leading_eigenpair(np.array([[0.0, 1.0], [1.0, 0.0]]), max_iter=200, start=[1.0, 0.0])

    def test_deflation(self):
        rng = np.random.default_rng(3)
        Q, _ = np.linalg.qr(rng.normal(size=(6, 6)))
        M = Q @ np.diag([5.0, -3.0, 2.0, 1.0, 0.5, 0.1]) @ Q.T
        vals = nm.leading_eigenvalues(M, 3)
        assert np.allclose(vals, [5.0, -3.0, 2.0], atol=1e-9)


def simpson(f, lo, hi, n):
    x = np.linspace(lo, hi, n + 1)
    y = f(x)
    h = (hi - lo) / n
    return h / 3 * (y[0] + y[-1] + 4 * y[1:-1:2].sum() + 2 * y[2:-1:2].sum())


class TestIntegrate:
    def test_gaussian(self):
        f = nm.RealLineIntegrand(lambda r: math.exp(-r * r), decay=1.0)
        assert nm.integrate_real_line(f) == pytest.approx(math.sqrt(math.pi), abs=1e-10)

    def test_zero(self):
        f = nm.RealLineIntegrand(lambda r: 0.0, decay=1.0)
        assert nm.integrate_real_line(f) == 0

    def test_fixed_grid_oracle(self):
        g = lambda r: r * np.tanh(np.pi * r) * np.exp(-r * r / 100)
        f = nm.RealLineIntegrand(lambda r: float(g(r)), decay=0.01)
        oracle = 2 * simpson(g, 0.0, 80.0, 160_000)
        assert nm.integrate_real_line(f) == pytest.approx(oracle, abs=1e-8)

    def test_envelope_violation(self):
        f = nm.RealLineIntegrand(lambda r: math.exp(-0.1 * r * r), decay=1.0)
        with pytest.raises(TailBoundError):
            nm.integrate_real_line(f)

    def test_bad_tolerance(self):
        f = nm.RealLineIntegrand(lambda r: 0.0, decay=1.0)
        with pytest.raises(DomainError):
            nm.integrate_real_line(f, tol=0)
