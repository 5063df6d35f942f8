"""Truncated Mayer transfer operators and their Fredholm determinants.

The scalar operator

    (L_s f)(z) = sum_{n >= 1} (z + n)^(-2s) f(1 / (z + n))

is represented on the monomial basis (z - c)^k, k < K, where c is the
expansion centre. For Gamma_0(m) the operator acts on vectors indexed by
cosets and each branch carries the permutation matrix of the corresponding
inverse branch of the Gauss map. Splitting the n-sum by residue modulo the
cusp period M turns every matrix entry into a finite combination of Hurwitz
zeta values.

With Z_m(s) = det(1 - L) det(1 + L), zeros on the critical line are located
by winding numbers on small rectangles and refined by complex secant steps.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from . import congruence
from .congruence import CosetTable
from .errors import (
    BoundaryZeroError,
    ConvergenceError,
    ConvergenceRegionError,
    DomainError,
)
from .numerics import complex_det, hurwitz_zeta

# Expansion centre of the monomial basis. The disk |z - 0.6| < 1/2 is mapped
# into itself by every branch z -> 1/(z+n), and truncations converge much
# faster than around z = 1.
DEFAULT_CENTER = 0.6
MIN_ORDER = 4
REGION_TOL = 1e-14


@dataclass(frozen=True)
class SpectralPoint:
    """A complex argument s, tagged by the region it lies in."""

    s: complex
    region: str = field(default="")

    def __post_init__(self):
        s = complex(self.s)
        object.__setattr__(self, "s", s)
        tag = self.classify(s)
        if self.region == "":
            object.__setattr__(self, "region", tag)
        elif self.region != tag:
            raise DomainError(f"s = {s} lies in region {tag!r}, not {self.region!r}")

    @staticmethod
    def classify(s: complex) -> str:
        if abs(s.real - 0.5) <= REGION_TOL:
            return "critical"
        if s.real > 1.0:
            return "euler"
        return "other"

    @classmethod
    def critical(cls, r: float) -> "SpectralPoint":
        return cls(complex(0.5, r))


def as_point(s) -> SpectralPoint:
    return s if isinstance(s, SpectralPoint) else SpectralPoint(complex(s))


def _check_pole(s: complex, degree_sum: int) -> None:
    # Hurwitz values at 2s + p for p = 0 .. degree_sum; pole when 2s + p = 1
    for p in range(degree_sum + 1):
        if abs(2 * s + p - 1) < 1e-12:
            raise ConvergenceRegionError(
                f"matrix elements are singular at s = {s} (Hurwitz pole at degree sum {p})"
            )


def _binomial_table(sigma: complex, K: int) -> np.ndarray:
    """B[k, j] = binom(-(sigma + j), k) for 0 <= k, j < K."""
    B = np.empty((K, K), dtype=complex)
    for j in range(K):
        a = sigma + j
        b = 1.0 + 0j
        for k in range(K):
            B[k, j] = b
            b = b * (-(a + k)) / (k + 1)
    return B


def _recentre_table(center: float, K: int) -> np.ndarray:
    """W[l, j] = binom(l, j) (-c)^(l-j), so (w - c)^l = sum_j W[l, j] w^j."""
    W = np.zeros((K, K))
    for l in range(K):
        for j in range(l + 1):
            W[l, j] = math.comb(l, j) * (-center) ** (l - j)
    return W


def _branch_block(s: complex, K: int, shift: float, scale: float, center: float) -> np.ndarray:
    """Matrix of f -> sum_q (z + shift + scale q)^(-2s) f(1/(z + shift + scale q)), q >= 0.

    With shift = 1 and scale = 1 this is the full scalar operator.
    """
    sigma = 2 * s
    p = np.arange(2 * K - 1)
    H = hurwitz_zeta(sigma + p, (center + shift) / scale) * np.exp(-(sigma + p) * math.log(scale))
    B = _binomial_table(sigma, K)
    jk = np.add.outer(np.arange(K), np.arange(K))  # [k, j] -> k + j
    A = B * H[jk]
    return A @ _recentre_table(center, K).T


def scalar_matrix_element(k: int, l: int, s, center: float = DEFAULT_CENTER) -> complex:
    """Coefficient of (z - c)^k in L_s (z - c)^l.

    Expanding (1/(z+n) - c)^l binomially and each (z + n)^(-2s-j) about
    z = c gives

        sum_{j <= l} binom(l, j) (-c)^(l-j) binom(-(2s+j), k) zeta_H(2s+j+k, 1+c).
    """
    if k < 0 or l < 0:
        raise DomainError("degrees must be non-negative")
    s = as_point(s).s
    _check_pole(s, k + l)
    total = 0j
    for j in range(l + 1):
        coef = math.comb(l, j) * (-center) ** (l - j)
        b = 1.0 + 0j
        a = 2 * s + j
        for i in range(k):
            b *= -(a + i) / (i + 1)
        total += coef * b * hurwitz_zeta(2 * s + j + k, 1.0 + center)
    return complex(total)


def scalar_matrix(s, K: int, center: float = DEFAULT_CENTER) -> np.ndarray:
    s = as_point(s).s
    if K < 1:
        raise DomainError("truncation order must be positive")
    _check_pole(s, 2 * K - 2)
    return _branch_block(s, K, 1.0, 1.0, center)


def branch_permutation(table: CosetTable, n: int, reflect: bool = True):
    """Coset permutation attached to the n-th branch z -> 1/(z + n).

    The branch is the matrix [[0, 1], [1, n]] = R S T^n of determinant -1,
    so by default the reflection R is included. ``reflect=False`` uses
    S T^n alone.
    """
    if reflect:
        return congruence.rep_of_reflected_ST_n(table, n)
    return congruence.rep_of_ST_n(table, n)


@dataclass(frozen=True)
class TransferMatrix:
    """Truncated vector-valued operator; coset index outer, Taylor degree inner."""

    point: SpectralPoint
    K: int
    table: CosetTable
    blocks: np.ndarray
    center: float = DEFAULT_CENTER
    reflect: bool = True

    @property
    def level(self) -> int:
        return self.table.level

    @property
    def dim(self) -> int:
        return self.blocks.shape[0]

    def truncated(self, K: int) -> np.ndarray:
        """The operator matrix restricted to degrees < K in every coset block."""
        if not 1 <= K <= self.K:
            raise DomainError(f"cannot truncate order {self.K} to {K}")
        idx = (np.arange(self.table.index)[:, None] * self.K + np.arange(K)[None, :]).ravel()
        return self.blocks[np.ix_(idx, idx)]

    def block(self, a: int, b: int) -> np.ndarray:
        K = self.K
        return self.blocks[a * K:(a + 1) * K, b * K:(b + 1) * K]


def build_operator(s, K: int, table: CosetTable, center: float = DEFAULT_CENTER,
                   reflect: bool = True) -> TransferMatrix:
    """Assemble the mu K x mu K matrix of the Gamma_0(m) transfer operator.

    Branches n = r + M q share the permutation of residue r, so the matrix is
    sum_r kron(P_r, L_r) with L_r built from zeta_H(., (c + r)/M) M^(-.).
    """
    pt = as_point(s)
    if K < MIN_ORDER:
        raise DomainError(f"truncation order must be at least {MIN_ORDER}")
    _check_pole(pt.s, 2 * K - 2)
    M = table.period
    mu = table.index
    L = np.zeros((mu * K, mu * K), dtype=complex)
    for r in range(1, M + 1):
        P = congruence.permutation_matrix(branch_permutation(table, r, reflect))
        L += np.kron(P, _branch_block(pt.s, K, float(r), float(M), center))
    if not np.all(np.isfinite(L)):
        raise ConvergenceRegionError(f"non-finite matrix entries at s = {pt.s}")
    return TransferMatrix(pt, K, table, L, center, reflect)


class FredholmResult(NamedTuple):
    d_minus: complex
    d_plus: complex
    error: float  # |Z(K) - Z(K-4)|
    converged: bool


def _dets(A: np.ndarray) -> tuple[complex, complex]:
    I = np.eye(A.shape[0])
    return complex_det(I - A), complex_det(I + A)


def fredholm_dets(s, K: int, table: CosetTable, center: float = DEFAULT_CENTER,
                  reflect: bool = True, strict: bool = False) -> FredholmResult:
    """det(1 - L) and det(1 + L) at truncation K with a successive-K error.

    The error estimate is the change of the product against order K - 4.
    The estimates are considered converged when the change from K - 4 to K
    is smaller than the one from K - 8 to K - 4 (or already negligible).
    With ``strict`` a non-contracting sequence raises ConvergenceError.
    """
    op = build_operator(s, K, table, center, reflect)
    dm, dp = _dets(op.blocks)
    z = dm * dp
    seq = [z]
    for Kp in (K - 4, K - 8):
        if Kp >= 1:
            a, b = _dets(op.truncated(Kp))
            seq.append(a * b)
    err = abs(seq[0] - seq[1]) if len(seq) > 1 else float("inf")
    if len(seq) == 3:
        prev = abs(seq[1] - seq[2])
        converged = err < prev or err <= 1e-13 * max(1.0, abs(z))
    else:
        converged = False
    if strict and not converged:
        raise ConvergenceError(f"determinants do not contract in K at s = {op.point.s}")
    return FredholmResult(dm, dp, float(err), bool(converged))


class ZetaValue(NamedTuple):
    value: complex
    error: float
    converged: bool


def zeta_transfer(s, m: int = 1, K: int = 24, center: float = DEFAULT_CENTER,
                  reflect: bool = True, strict: bool = False) -> ZetaValue:
    """Z_m(s) = det(1 - L_{s,m}) det(1 + L_{s,m}) with its truncation error."""
    table = congruence.build_coset_table(m)
    res = fredholm_dets(s, K, table, center, reflect, strict)
    return ZetaValue(res.d_minus * res.d_plus, res.error, res.converged)


# ---------------------------------------------------------------------------
# zero location on the critical line


class _Evaluator:
    """Cached Z_m evaluations; keys are rounded so that shared edges hit."""

    def __init__(self, m: int, K: int, center: float, reflect: bool):
        self.table = congruence.build_coset_table(m)
        self.K = K
        self.center = center
        self.reflect = reflect
        self.cache: dict = {}

    def __call__(self, s: complex) -> complex:
        key = (round(s.real, 12), round(s.imag, 12))
        v = self.cache.get(key)
        if v is None:
            op = build_operator(complex(*key), self.K, self.table, self.center, self.reflect)
            dm, dp = _dets(op.blocks)
            v = dm * dp
            self.cache[key] = v
        return v


def _edge_phase(f, a: complex, b: complex, fa: complex, fb: complex, depth: int = 0,
                min_abs: float = 0.0) -> float:
    """Change of arg f along the segment a -> b, subdividing until each step is small."""
    if fa == 0 or fb == 0:
        raise BoundaryZeroError(f"zeta vanishes on the contour near {a}")
    d = math.remainder(math.atan2(fb.imag, fb.real) - math.atan2(fa.imag, fa.real), 2 * math.pi)
    if abs(d) < 0.5 and depth >= 2:
        return d
    if depth > 40 or abs(b - a) < 1e-9:
        raise BoundaryZeroError(f"contour passes too close to a zero near {(a + b) / 2}")
    mid = 0.5 * (a + b)
    fm = f(mid)
    return (_edge_phase(f, a, mid, fa, fm, depth + 1)
            + _edge_phase(f, mid, b, fm, fb, depth + 1))


def winding_number(f, corners: tuple[complex, complex]) -> int:
    """Winding number of f around 0 along the boundary of an axis-parallel rectangle."""
    lo, hi = corners
    pts = [lo, complex(hi.real, lo.imag), hi, complex(lo.real, hi.imag)]
    vals = [f(p) for p in pts]
    total = 0.0
    for i in range(4):
        total += _edge_phase(f, pts[i], pts[(i + 1) % 4], vals[i], vals[(i + 1) % 4])
    w = total / (2 * math.pi)
    n = round(w)
    if abs(w - n) > 1e-3:
        raise BoundaryZeroError(f"non-integral winding {w:.4f}")
    return int(n)


def _refine(f, s0: complex, box: tuple[complex, complex], multiple: bool,
            tol: float = 1e-11, max_iter: int = 60) -> complex:
    """Secant iteration on f (or on f/f' for multiple zeros) started at s0."""
    h = 1e-6

    def g(s):
        v = f(s)
        if not multiple:
            return v
        dv = (f(s + h) - f(s - h)) / (2 * h)
        return v / dv if dv != 0 else 0j

    x0, x1 = s0, s0 + 1e-4j
    g0, g1 = g(x0), g(x1)
    for _ in range(max_iter):
        if g1 == g0:
            break
        x2 = x1 - g1 * (x1 - x0) / (g1 - g0)
        x0, g0 = x1, g1
        x1 = x2
        if not (box[0].real - 0.05 <= x1.real <= box[1].real + 0.05
                and box[0].imag - 0.05 <= x1.imag <= box[1].imag + 0.05):
            raise ConvergenceError(f"secant iteration left the search box from {s0}")
        g1 = g(x1)
        if abs(x1 - x0) < tol:
            return x1
    if abs(x1 - x0) < 1e-7:
        return x1
    raise ConvergenceError(f"secant iteration did not converge from {s0}")


class Zero(NamedTuple):
    r: float
    winding: int
    s: complex


MAX_SCAN_WIDTH = 10.0


def locate_zeros(m: int, r_interval: tuple[float, float], K: int = 24, *,
                 height: float = 0.05, half_width: float = 0.05,
                 center: float = DEFAULT_CENTER, reflect: bool = True,
                 max_width: float = MAX_SCAN_WIDTH, refine: bool = True) -> list[Zero]:
    """Zeros of Z_m near s = 1/2 + i r for r in the interval.

    The strip |Re s - 1/2| <= half_width is cut into rectangles of the given
    height. Each rectangle with non-zero winding number is reported once,
    with the zero refined by secant iteration (applied to Z/Z' when the
    winding exceeds one). A rectangle whose boundary passes too close to a
    zero is shifted once by a small jitter.
    """
    r_lo, r_hi = map(float, r_interval)
    if not r_hi > r_lo:
        raise DomainError("empty r interval")
    if r_hi - r_lo > max_width:
        raise DomainError(f"scan width {r_hi - r_lo} exceeds the bound {max_width}")
    f = _Evaluator(m, K, center, reflect)
    n_tiles = max(1, int(math.ceil((r_hi - r_lo) / height - 1e-9)))
    edges = np.linspace(r_lo, r_hi, n_tiles + 1)
    out: list[Zero] = []
    for i in range(n_tiles):
        b0, b1 = edges[i], edges[i + 1]
        lo = complex(0.5 - half_width, b0)
        hi = complex(0.5 + half_width, b1)
        try:
            w = winding_number(f, (lo, hi))
        except BoundaryZeroError:
            jitter = 1e-3 * height
            lo, hi = lo + 1j * jitter, hi + 1j * jitter
            w = winding_number(f, (lo, hi))
        if w == 0:
            continue
        s0 = complex(0.5, 0.5 * (lo.imag + hi.imag))
        s = _refine(f, s0, (lo, hi), multiple=w > 1) if refine and w > 0 else s0
        out.append(Zero(float(s.imag), w, s))
    out.sort(key=lambda z: z.r)
    return out


def winding_about(m: int, r: float, K: int = 24, height: float = 0.05,
                  half_width: float = 0.05, center: float = DEFAULT_CENTER,
                  reflect: bool = True) -> int:
    """Winding number of Z_m around the rectangle centred at 1/2 + i r."""
    f = _Evaluator(m, K, center, reflect)
    lo = complex(0.5 - half_width, r - height / 2)
    hi = complex(0.5 + half_width, r + height / 2)
    return winding_number(f, (lo, hi))
