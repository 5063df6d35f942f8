"""Divisor weights beta = mu * mu and the new-form combinations they drive.

beta(a) = sum_{l | a} mu(l) mu(a/l) is multiplicative with beta(p) = -2,
beta(p^2) = 1 and beta(p^k) = 0 for k >= 3. Weighted by beta, dimensions of
Maass form spaces at the divisors of n give new-form dimensions, and
products of Selberg zeta functions give the new-form zeta function.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Mapping

import numpy as np

from . import geodesics, transfer
from .congruence import build_coset_table
from .numerics import complex_det
from .errors import DiscriminantError, DomainError, MissingLevelError, ZeroWeightError


def factorize(n: int) -> dict[int, int]:
    if n < 1:
        raise DomainError("expected a positive integer")
    out: dict[int, int] = {}
    p = 2
    while p * p <= n:
        while n % p == 0:
            out[p] = out.get(p, 0) + 1
            n //= p
        p += 1 if p == 2 else 2
    if n > 1:
        out[n] = out.get(n, 0) + 1
    return out


def divisors(n: int) -> list[int]:
    ds = [1]
    for p, e in factorize(n).items():
        ds = [d * p ** k for d in ds for k in range(e + 1)]
    return sorted(ds)


def mobius(n: int) -> int:
    f = factorize(n)
    if any(e > 1 for e in f.values()):
        return 0
    return -1 if len(f) % 2 else 1


@lru_cache(maxsize=None)
def beta(a: int) -> int:
    """sum over l | a of mu(l) mu(a/l), by direct divisor summation."""
    if a < 1:
        raise DomainError("beta is defined for positive integers")
    return sum(mobius(l) * mobius(a // l) for l in divisors(a))


def beta_table(N: int) -> np.ndarray:
    """beta(1..N) as an integer array (index 0 unused), by Dirichlet convolution."""
    mu = np.zeros(N + 1, dtype=np.int64)
    mu[1] = 1
    for i in range(1, N + 1):  # mu = inverse of the constant function 1
        mu[2 * i::i] -= mu[i]
    out = np.zeros(N + 1, dtype=np.int64)
    for d in range(1, N + 1):
        if mu[d]:
            out[d::d] += mu[d] * mu[1:N // d + 1]
    return out


def divisor_weights(n: int) -> dict[int, int]:
    """{m : beta(n/m)} over the divisors m of n."""
    return {m: beta(n // m) for m in divisors(n)}


@dataclass(frozen=True)
class Discriminant:
    d: int
    ramified_primes: tuple[int, ...]


def validate_discriminant(d: int) -> Discriminant:
    """Accept d iff it is squarefree with an even number (at least 2) of prime factors."""
    if d < 1:
        raise DiscriminantError(f"discriminant must be positive, got {d}")
    f = factorize(d)
    if any(e > 1 for e in f.values()):
        raise DiscriminantError(f"{d} is not squarefree")
    if len(f) < 2:
        raise DiscriminantError(f"{d} has fewer than two prime factors")
    if len(f) % 2:
        raise DiscriminantError(f"{d} has an odd number ({len(f)}) of prime factors")
    return Discriminant(d, tuple(sorted(f)))


def _weighted_product(values: Mapping[int, complex], weights: Mapping[int, int]) -> complex:
    out = 1.0 + 0j
    for m in sorted(weights):
        w = weights[m]
        if w == 0:
            continue
        v = values[m]
        if w < 0 and v == 0:
            raise ZeroWeightError(f"factor at level {m} vanishes but carries weight {w}")
        out *= v ** w  # integer weights: no branch choice involved
    return out


def newform_zeta(s, n: int, K: int = 24, backend: str = "transfer", *,
                 t_max: int = 300, k_max: int = 12, quaternion: bool = False):
    """prod_{m | n} Z_m(s)^beta(n/m) with each Z_m from the chosen backend.

    Returns (value, error) where the error is propagated to first order
    from the per-level error estimates. With ``quaternion`` n must be an
    admissible reduced discriminant.
    """
    if quaternion:
        validate_discriminant(n)
    weights = divisor_weights(n)
    vals: dict[int, complex] = {}
    rel = 0.0
    for m in sorted(weights):
        if weights[m] == 0:
            continue
        if backend == "transfer":
            z = transfer.zeta_transfer(s, m, K)
            v, e = z.value, z.error
        elif backend == "euler":
            z = geodesics.euler_zeta(s, m, t_max=t_max, k_max=k_max)
            v, e = z.value, z.error
        else:
            raise DomainError(f"unknown backend {backend!r}")
        vals[m] = v
        if v != 0:
            rel += abs(weights[m]) * e / abs(v)
    value = _weighted_product(vals, weights)
    return value, abs(value) * rel


def det_identity_rhs(s, n: int, K: int = 24, center: float = transfer.DEFAULT_CENTER):
    """prod_{m | n} det(1 - L_{s,m})^beta(n/m), with a successive-K error estimate."""
    weights = divisor_weights(n)
    vals, vals_prev = {}, {}
    for m in sorted(weights):
        if weights[m] == 0:
            continue
        op = transfer.build_operator(s, K, build_coset_table(m), center)
        I = np.eye(op.dim)
        vals[m] = complex_det(I - op.blocks)
        sub = op.truncated(K - 4)
        vals_prev[m] = complex_det(np.eye(sub.shape[0]) - sub)
    value = _weighted_product(vals, weights)
    prev = _weighted_product(vals_prev, weights)
    return value, abs(value - prev)


# ---------------------------------------------------------------------------
# multiplicity bookkeeping


@dataclass(frozen=True)
class Cluster:
    lam: float
    delta: dict  # level -> dimension
    delta_new: int


def _cluster(values: Iterable[float], tol: float) -> list[list[float]]:
    vals = sorted(values)
    groups: list[list[float]] = []
    for v in vals:
        if groups and v - groups[-1][-1] <= tol:
            groups[-1].append(v)
        else:
            groups.append([v])
    return groups


def delta_new(n: int, dims: Mapping[int, Mapping[float, int]] | object, lambda_tol: float = 1e-6):
    """New-form dimensions delta_new(n, lam) = sum_{m | n} beta(n/m) delta(m, lam).

    ``dims`` maps level -> {lam: dimension}, or is an EigenvalueTable (any
    object with a ``dimensions()`` method returning that mapping). Returns
    (nonzero, audit): the clusters with non-zero new dimension, and all
    clusters.
    """
    if hasattr(dims, "dimensions"):
        dims = dims.dimensions()
    weights = divisor_weights(n)
    missing = [m for m in weights if m not in dims]
    if missing:
        raise MissingLevelError(f"levels {missing} dividing {n} are absent")
    all_lams = [lam for m in weights for lam in dims[m]]
    audit = []
    for group in _cluster(all_lams, lambda_tol):
        lo, hi = group[0], group[-1]
        per_level = {}
        for m in weights:
            per_level[m] = sum(d for lam, d in dims[m].items() if lo <= lam <= hi)
        dn = sum(weights[m] * per_level[m] for m in weights)
        audit.append(Cluster(float(np.mean(group)), per_level, int(dn)))
    return [c for c in audit if c.delta_new != 0], audit


def oldform_dimensions(n: int, seeds: Mapping[int, Mapping[float, int]]) -> dict[int, dict[float, int]]:
    """Dimensions at every m | n generated by new-form seeds at the divisors.

    A new form of level e contributes tau(m/e) copies at level m, one for each
    embedding f(z) -> f(d z) with d | m/e.
    """
    out: dict[int, dict[float, int]] = {}
    for m in divisors(n):
        acc: dict[float, int] = {}
        for e in divisors(m):
            for lam, d in seeds.get(e, {}).items():
                acc[lam] = acc.get(lam, 0) + d * len(divisors(m // e))
        out[m] = acc
    return out
