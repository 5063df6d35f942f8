"""Special functions and dense complex linear algebra.

Everything here works in double precision. The Hurwitz zeta function is
evaluated by Euler-Maclaurin summation, which also provides its analytic
continuation to the left of Re s = 1.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable

import numpy as np
import scipy.integrate
import scipy.linalg
import scipy.special

from .errors import ConvergenceError, DomainError, PoleError, TailBoundError

# B_2, B_4, ..., B_24
_BERNOULLI_EVEN = [
    Fraction(1, 6), Fraction(-1, 30), Fraction(1, 42), Fraction(-1, 30),
    Fraction(5, 66), Fraction(-691, 2730), Fraction(7, 6), Fraction(-3617, 510),
    Fraction(43867, 798), Fraction(-174611, 330), Fraction(854513, 138),
    Fraction(-236364091, 2730),
]
EM_TERMS = 12
# B_{2j} / (2j)!
_EM_COEFFS = np.array(
    [float(b / math.factorial(2 * j + 2)) for j, b in enumerate(_BERNOULLI_EVEN[:EM_TERMS])]
)


def _em_cutoff(s: np.ndarray) -> int:
    return max(20, int(math.ceil(float(np.max(np.abs(s.imag), initial=0.0)))))


def hurwitz_zeta(s, a: float):
    """Hurwitz zeta function sum_{n>=0} (n + a)^(-s).

    ``s`` may be a complex scalar or array; ``a`` is a positive real. The
    direct sum runs to N = max(20, ceil(max |Im s|)) and the tail is
    replaced by the Euler-Maclaurin formula with 12 Bernoulli terms, which
    continues the function analytically to Re s > -23.
    """
    a = float(a)
    if not a > 0.0:
        raise DomainError(f"hurwitz_zeta requires a > 0, got {a}")
    scalar = np.ndim(s) == 0
    s = np.atleast_1d(np.asarray(s, dtype=complex))
    if np.any(np.abs(s - 1.0) < 1e-12):
        raise PoleError("hurwitz_zeta has a pole at s = 1")
    N = _em_cutoff(s)
    logs = np.log(np.arange(N) + a)
    direct = np.exp(-np.multiply.outer(s, logs)).sum(axis=-1)

    x = N + a
    logx = math.log(x)
    xs = np.exp(-s * logx)  # x^{-s}
    tail = x * xs / (s - 1.0) + 0.5 * xs
    # sum_j B_{2j}/(2j)! * s(s+1)...(s+2j-2) * x^{-s-2j+1}
    rising = s.copy()
    power = xs / x
    for j in range(EM_TERMS):
        tail = tail + _EM_COEFFS[j] * rising * power
        rising = rising * (s + 2 * j + 1) * (s + 2 * j + 2)
        power = power / (x * x)
    out = direct + tail
    return complex(out[0]) if scalar else out


def riemann_zeta(s):
    """Riemann zeta function via ``hurwitz_zeta(s, 1)``."""
    return hurwitz_zeta(s, 1.0)


def _require_right_half_plane(s, name: str) -> None:
    if np.any(np.real(s) <= 0):
        raise DomainError(f"{name} requires Re s > 0")


def log_gamma(s):
    """Principal branch of log Gamma(s) for Re s > 0."""
    _require_right_half_plane(s, "log_gamma")
    out = scipy.special.loggamma(np.asarray(s, dtype=complex))
    return complex(out) if np.ndim(out) == 0 else out


def digamma(s):
    """Digamma function psi(s) = Gamma'(s)/Gamma(s) for Re s > 0."""
    _require_right_half_plane(s, "digamma")
    out = scipy.special.psi(np.asarray(s, dtype=complex))
    return complex(out) if np.ndim(out) == 0 else out


def _check_matrix(M) -> np.ndarray:
    M = np.asarray(M, dtype=complex)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise DomainError(f"expected a square matrix, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise DomainError("matrix has non-finite entries")
    return M


def complex_det(M, with_growth: bool = False):
    """Determinant by LU factorisation with partial pivoting.

    With ``with_growth`` the pivot growth factor max|U| / max|M| is returned
    alongside the determinant. Singular matrices give 0.
    """
    M = _check_matrix(M)
    n = M.shape[0]
    if n == 0:
        return (1.0 + 0j, 1.0) if with_growth else 1.0 + 0j
    if n == 1:
        det = complex(M[0, 0])
        return (det, 1.0) if with_growth else det
    if n == 2:
        det = complex(M[0, 0] * M[1, 1] - M[0, 1] * M[1, 0])
        if not with_growth:
            return det
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
        lu, piv = scipy.linalg.lu_factor(M, check_finite=False)
    diag = np.diag(lu)
    swaps = int(np.count_nonzero(piv != np.arange(n)))
    if n != 2:
        det = complex(np.prod(diag)) * (-1.0) ** swaps
    if not with_growth:
        return det
    scale = np.max(np.abs(M))
    growth = float(np.max(np.abs(np.triu(lu))) / scale) if scale > 0 else 1.0
    return det, growth


def leading_eigenpair(M, tol: float = 1e-12, max_iter: int = 20000, start=None):
    """Dominant eigenvalue and unit eigenvector by power iteration.

    Raises ConvergenceError when the residual ||Mv - lambda v|| does not
    drop below ``tol * ||v||`` within ``max_iter`` steps, which happens when
    the dominant eigenvalue is not separated from the rest of the spectrum.
    """
    M = _check_matrix(M)
    n = M.shape[0]
    v = np.ones(n, dtype=complex) if start is None else np.asarray(start, dtype=complex)
    v = v / np.linalg.norm(v)
    lam = 0j
    for _ in range(max_iter):
        w = M @ v
        lam = np.vdot(v, w)
        if np.linalg.norm(w - lam * v) <= tol:
            i = int(np.argmax(np.abs(v)))
            v = v * (abs(v[i]) / v[i])
            return complex(lam), v
        nw = np.linalg.norm(w)
        if nw == 0.0:
            return 0j, v
        v = w / nw
    raise ConvergenceError(f"power iteration did not converge in {max_iter} steps")


def leading_eigenvalues(M, count: int, tol: float = 1e-12, max_iter: int = 20000) -> list[complex]:
    """The ``count`` largest-modulus eigenvalues via Wielandt deflation.

    After each eigenpair (lambda, v) is found, M is replaced by
    M - v x^T with x^T = (row i of M) / v_i, which sends lambda to 0 and
    leaves the other eigenvalues in place.
    """
    M = _check_matrix(M).copy()
    out = []
    for _ in range(count):
        lam, v = leading_eigenpair(M, tol=tol, max_iter=max_iter)
        out.append(lam)
        i = int(np.argmax(np.abs(v)))
        M = M - np.outer(v, M[i, :] / v[i])
    return out


@dataclass(frozen=True)
class RealLineIntegrand:
    """A function on the real line with a Gaussian decay envelope.

    The declared envelope is ``amplitude * (1 + r^2) * exp(-decay * r^2)``.
    """

    evaluator: Callable[[float], complex]
    decay: float
    amplitude: float = 1.0

    def __post_init__(self):
        if not (self.decay > 0 and self.amplitude >= 0):
            raise DomainError("decay must be positive and amplitude non-negative")

    def envelope(self, r):
        r = np.asarray(r, dtype=float)
        return self.amplitude * (1.0 + r * r) * np.exp(-self.decay * r * r)

    def tail_integral(self, R: float) -> float:
        """Upper bound for the integral of the envelope over |r| > R."""
        a = self.decay
        # int_R^inf (1+r^2) e^{-a r^2} dr <= e^{-aR^2} (1 + R^2 + 1/a) / (2aR)  for R > 0
        return 2.0 * self.amplitude * math.exp(-a * R * R) * (1.0 + R * R + 1.0 / a) / (2.0 * a * R)

    def cutoff(self, tol: float) -> float:
        R = max(1.0, math.sqrt(1.0 / self.decay))
        while self.tail_integral(R) > tol:
            R *= 1.1
        return R


def integrate_real_line(f: RealLineIntegrand, tol: float = 1e-10) -> complex:
    """Integral of ``f`` over the real line to absolute accuracy ``tol``.

    The line is cut at the radius where the envelope tail drops below
    tol/4; the remaining interval is handled by adaptive Gauss-Kronrod.
    """
    if not tol > 0:
        raise DomainError("tol must be positive")
    R = f.cutoff(tol / 4.0)
    probe = np.array([-2 * R, -1.5 * R, -R, R, 1.5 * R, 2 * R])
    vals = np.abs(np.array([f.evaluator(float(r)) for r in probe], dtype=complex))
    if np.any(vals > f.envelope(probe) * (1 + 1e-9) + 1e-300):
        raise TailBoundError("integrand exceeds its declared decay envelope")
    total = 0j
    err = 0.0
    for lo, hi in [(-R, 0.0), (0.0, R)]:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", scipy.integrate.IntegrationWarning)
            val, est, _ = scipy.integrate.quad(
                f.evaluator, lo, hi, complex_func=True, epsabs=tol / 4.0, epsrel=0.0,
                limit=400, full_output=True,
            )
        total += val
        err += abs(est.real) + abs(est.imag)
    if err > tol:
        raise ConvergenceError(f"quadrature error estimate {err:.2e} exceeds tolerance {tol:.2e}")
    return complex(total)
