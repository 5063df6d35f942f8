"""Right cosets of Gamma_0(m) in PSL(2, Z) and their permutation action.

Cosets Gamma_0(m) g are labelled by the bottom row (c : d) of g, a point of
the projective line P^1(Z/mZ). A matrix g acts on labels by right
multiplication of the row vector; the permutation stored for g is the left
action ``x -> x g^{-1}``, so that ``perm(gh) = perm(g) o perm(h)`` and the
associated permutation matrices form a representation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import DecompositionError, DomainError, SizeBoundError

MAX_LEVEL = 10_000

Perm = tuple[int, ...]

S_MATRIX = ((0, -1), (1, 0))
T_MATRIX = ((1, 1), (0, 1))
# z -> -z, normalises Gamma_0(m); extends the coset action to PGL(2, Z)
R_MATRIX = ((-1, 0), (0, 1))


def compose(p: Perm, q: Perm) -> Perm:
    """The permutation p o q (apply q first)."""
    return tuple(p[i] for i in q)


def inverse(p: Perm) -> Perm:
    out = [0] * len(p)
    for i, j in enumerate(p):
        out[j] = i
    return tuple(out)


def power(p: Perm, n: int) -> Perm:
    if n < 0:
        p, n = inverse(p), -n
    result = tuple(range(len(p)))
    base = p
    while n:
        if n & 1:
            result = compose(base, result)
        base = compose(base, base)
        n >>= 1
    return result


def cycle_lengths(p: Perm) -> list[int]:
    seen = [False] * len(p)
    out = []
    for i in range(len(p)):
        if seen[i]:
            continue
        n = 0
        j = i
        while not seen[j]:
            seen[j] = True
            j = p[j]
            n += 1
        out.append(n)
    return out


def permutation_matrix(p: Perm) -> np.ndarray:
    """Matrix P with P e_i = e_{p(i)}."""
    n = len(p)
    P = np.zeros((n, n))
    P[list(p), list(range(n))] = 1.0
    return P


def normalize_label(c: int, d: int, m: int) -> tuple[int, int]:
    """Canonical representative of (c : d) in P^1(Z/mZ).

    Scales by a unit so the first entry becomes gcd(c, m), then takes the
    smallest second entry among the remaining unit multiples.
    """
    c %= m
    d %= m
    if m == 1:
        return (0, 0)
    g = math.gcd(c, m)
    if math.gcd(g, d) != 1:
        raise DomainError(f"({c} : {d}) is not a point of P^1(Z/{m}Z)")
    mg = m // g
    # unit u with u*c = g mod m
    u = pow(c // g, -1, mg) if mg > 1 else 1
    while math.gcd(u, m) != 1:
        u += mg
    d = (u * d) % m
    if g == m:  # c = 0: (0 : d) with d a unit
        return (0, 1)
    best = d
    for k in range(1, g):
        lam = 1 + k * mg
        if math.gcd(lam, m) == 1:
            cand = (lam * d) % m
            if cand < best:
                best = cand
    return (g, best)


def p1_labels(m: int) -> list[tuple[int, int]]:
    """All points of P^1(Z/mZ), found as the orbit of (0 : 1) under S and T."""
    if m == 1:
        return [(0, 0)]
    start = (0, 1)
    seen = {start}
    stack = [start]
    while stack:
        c, d = stack.pop()
        for nxt in (normalize_label(-d, c, m), normalize_label(c, d + c, m)):
            if nxt not in seen:
                seen.add(nxt)
                stack.append(nxt)
    return sorted(seen)


def index_formula(m: int) -> int:
    """[PSL(2,Z) : Gamma_0(m)] = m prod_{p | m} (1 + 1/p)."""
    mu = m
    n = m
    p = 2
    while p * p <= n:
        if n % p == 0:
            mu = mu // p * (p + 1)
            while n % p == 0:
                n //= p
        p += 1
    if n > 1:
        mu = mu // n * (n + 1)
    return mu


@dataclass(frozen=True)
class CosetTable:
    """Coset structure of Gamma_0(m) inside PSL(2, Z)."""

    level: int
    labels: tuple[tuple[int, int], ...]
    perm_S: Perm
    perm_T: Perm
    perm_R: Perm
    period: int
    cusp_widths: tuple[int, ...]

    @property
    def index(self) -> int:
        return len(self.labels)

    def act(self, g, label_index: int) -> int:
        """Index of the coset label * g^{-1}, computed directly on P^1."""
        (a, b), (c, d) = g
        det = a * d - b * c
        if det not in (1, -1):
            raise DomainError("matrix is not in GL(2, Z)")
        x, y = self.labels[label_index]
        # g^{-1} = det * [[d, -b], [-c, a]]
        nx, ny = det * (x * d - y * c), det * (-x * b + y * a)
        return self._lookup[normalize_label(nx, ny, self.level)]

    def perm_of_action(self, g) -> Perm:
        """Permutation of g computed label by label (no word decomposition)."""
        if self.level > DENSE_LOOKUP_LEVEL:
            return tuple(self.act(g, i) for i in range(self.index))
        (a, b), (c, d) = g
        if self.level == 1:
            return (0,)
        det = a * d - b * c
        if det not in (1, -1):
            raise DomainError("matrix is not in GL(2, Z)")
        m = self.level
        x, y = self._label_arrays
        nx = (det * (x * (d % m) - y * (c % m))) % m
        ny = (det * (y * (a % m) - x * (b % m))) % m
        return tuple(int(v) for v in _dense_lookup(self.labels, m)[nx, ny])

    @property
    def _label_arrays(self):
        arr = np.array(self.labels, dtype=np.int64).reshape(-1, 2)
        return arr[:, 0], arr[:, 1]

    @property
    def _lookup(self) -> dict:
        return _label_lookup(self.labels)


@lru_cache(maxsize=64)
def _label_lookup(labels) -> dict:
    return {lab: i for i, lab in enumerate(labels)}


DENSE_LOOKUP_LEVEL = 2000


@lru_cache(maxsize=16)
def _dense_lookup(labels, m: int) -> np.ndarray:
    """Array lut[c, d] = index of the label of (c : d), or -1 off P^1(Z/mZ)."""
    lut = np.full((m, m), -1, dtype=np.int64)
    for i, (c0, d0) in enumerate(labels):
        for u in range(1, m):
            if math.gcd(u, m) == 1:
                lut[(u * c0) % m, (u * d0) % m] = i
    return lut


@lru_cache(maxsize=64)
def build_coset_table(m: int, max_level: int = MAX_LEVEL) -> CosetTable:
    if m < 1:
        raise DomainError("level must be a positive integer")
    if m > max_level:
        raise SizeBoundError(f"level {m} exceeds the configured bound {max_level}")
    if m == 1:
        return CosetTable(1, ((0, 0),), (0,), (0,), (0,), 1, (1,))
    labels = tuple(p1_labels(m))
    lookup = _label_lookup(labels)

    def perm(g):
        (a, b), (c, d) = g
        det = a * d - b * c
        out = []
        for x, y in labels:
            nx, ny = det * (x * d - y * c), det * (-x * b + y * a)
            out.append(lookup[normalize_label(nx, ny, m)])
        return tuple(out)

    pS, pT, pR = perm(S_MATRIX), perm(T_MATRIX), perm(R_MATRIX)
    widths = tuple(sorted(cycle_lengths(pT)))
    period = math.lcm(*widths)
    return CosetTable(m, labels, pS, pT, pR, period, widths)


def rep_of_ST_n(table: CosetTable, n: int) -> Perm:
    """Permutation of S T^n; depends only on n modulo the cusp period."""
    return compose(table.perm_S, power(table.perm_T, n % table.period))


def rep_of_reflected_ST_n(table: CosetTable, n: int) -> Perm:
    """Permutation of R S T^n = [[0, 1], [1, n]], the n-th inverse branch of the Gauss map."""
    return compose(table.perm_R, rep_of_ST_n(table, n))


def matrix_word(g, nearest: bool = False) -> list[tuple[str, int]]:
    """Write g in SL(2, Z) as +-T^q1 S T^q2 S ... T^qk.

    Each step strips T^q from the left (q = a // c, or the nearest integer
    with ``nearest``) and then S, exactly the continued-fraction expansion
    of a/c.
    """
    (a, b), (c, d) = g
    if not all(isinstance(v, (int, np.integer)) for v in (a, b, c, d)) or a * d - b * c != 1:
        raise DecompositionError("matrix is not integral with determinant 1")
    a, b, c, d = int(a), int(b), int(c), int(d)
    word: list[tuple[str, int]] = []
    for _ in range(10_000):
        if c == 0:
            break
        q = (2 * a + c) // (2 * c) if nearest else a // c
        a, b = a - q * c, b - q * d
        word.append(("T", q))
        word.append(("S", 1))
        a, b, c, d = c, d, -a, -b
    else:
        raise DecompositionError("word decomposition did not terminate")
    if a * d != 1:
        raise DecompositionError("unexpected remainder in word decomposition")
    word.append(("T", b * d))
    return word


def word_matrix(word) -> tuple[tuple[int, int], tuple[int, int]]:
    M = np.eye(2, dtype=object)
    S = np.array(S_MATRIX, dtype=object)
    for gen, e in word:
        if gen == "S":
            for _ in range(e % 4):
                M = M.dot(S)
        else:
            M = M.dot(np.array([[1, e], [0, 1]], dtype=object))
    return ((int(M[0, 0]), int(M[0, 1])), (int(M[1, 0]), int(M[1, 1])))


def rep_of_matrix(table: CosetTable, g, nearest: bool = False) -> Perm:
    """Permutation of g in SL(2, Z), composed along its S, T word."""
    word = matrix_word(g, nearest=nearest)
    p = tuple(range(table.index))
    for gen, e in word:
        q = power(table.perm_S, e) if gen == "S" else power(table.perm_T, e % table.period)
        p = compose(p, q)
    return p


def cusp_count(m: int) -> int:
    """Classical number of cusps of Gamma_0(m): sum_{d | m} phi(gcd(d, m/d))."""
    total = 0
    for d in range(1, m + 1):
        if m % d == 0:
            g = math.gcd(d, m // d)
            total += sum(1 for k in range(1, g + 1) if math.gcd(k, g) == 1)
    return total
