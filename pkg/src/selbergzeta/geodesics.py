"""Length spectrum of the modular surface and Euler-product zeta values.

Hyperbolic conjugacy classes of PSL(2, Z) with trace t correspond to proper
equivalence classes of binary quadratic forms a x^2 + b x y + c y^2 of
discriminant D = t^2 - 4 (forms of any content). Every class is a cycle of
Gauss-reduced forms under the reduction step rho. Only forms with a > 0 are
stored; two rho steps map these to each other, so a class is an orbit of
rho^2 on reduced forms with a > 0.

For a reduced form with a > 0 put x = (t - b)/2, y = (t + b)/2. Then
-a c = x y - 1 and the reduction inequalities become x <= a <= y - 1, so
reduced forms are the solutions of x y = 1 (mod a) in that range. The class
matrix is [[x, -c], [a, y]].
"""

from __future__ import annotations

import hashlib
import logging
import math
import os
import tempfile
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator, Sequence

import numpy as np

from . import congruence
from .errors import CacheCorruptionError, DiscriminantError, DomainError, RegionError

log = logging.getLogger(__name__)

CACHE_ENV = "SELBERGZETA_CACHE"
FORMAT_VERSION = 1


def norm_of_trace(t) -> float:
    """N = ((t + sqrt(t^2 - 4)) / 2)^2, the squared larger eigenvalue."""
    t = np.asarray(t, dtype=float)
    out = ((t + np.sqrt(t * t - 4.0)) / 2.0) ** 2
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class HyperbolicClass:
    trace: int
    form: tuple[int, int, int]  # reduced (a, b, c) with a > 0, smallest in its cycle
    form_cycle_id: int  # position of the cycle among classes of the same trace
    primitive: bool

    @property
    def norm(self) -> float:
        return norm_of_trace(self.trace)

    @property
    def length(self) -> float:
        t = self.trace
        return 2.0 * math.acosh(t / 2.0)

    @property
    def rep(self) -> tuple[tuple[int, int], tuple[int, int]]:
        a, b, c = self.form
        t = self.trace
        return (((t - b) // 2, -c), (a, (t + b) // 2))

    @property
    def content(self) -> int:
        return math.gcd(*self.form)


def _check_trace(t: int) -> None:
    if t < 3:
        raise DomainError(f"hyperbolic traces satisfy t >= 3, got {t}")
    D = t * t - 4
    if math.isqrt(D) ** 2 == D:
        raise DiscriminantError(f"discriminant {D} is a perfect square")


def rho(form: tuple[int, int, int], t: int) -> tuple[int, int, int]:
    """One Gauss reduction step (a, b, c) -> (c, b', c') on reduced forms of disc t^2 - 4.

    b' is the representative of -b mod 2|c| in the window (sqrt D - 2|c|, sqrt D),
    which for these discriminants is t - 2|c| <= b' <= t - 2.
    """
    a, b, c = form
    D = t * t - 4
    ac = abs(c)
    lo = t - 2 * ac
    b1 = lo + ((-b - lo) % (2 * ac))
    c1 = (b1 * b1 - D) // (4 * c)
    return (c, b1, c1)


def reduced_forms(t: int) -> list[tuple[int, int, int]]:
    """Reduced forms (a, b, c) with a > 0 of discriminant t^2 - 4, by direct search."""
    _check_trace(t)
    out = []
    for b in range(t - 2, 0, -2):
        x = (t - b) // 2
        y = (t + b) // 2
        n = x * y - 1
        for a in range(x, y):
            if n % a == 0:
                out.append((a, b, -(n // a)))
    out.sort()
    return out


def _chebyshev_powers(t_max: int) -> dict[int, list[int]]:
    """Map t -> [U_{k-1}(t0/2)] over all t0 >= 3, k >= 2 with 2 T_k(t0/2) = t <= t_max."""
    out: dict[int, list[int]] = {}
    t0 = 3
    while t0 * t0 - 2 <= t_max:
        tau_prev, tau = 2, t0  # 2 T_0, 2 T_1
        u_prev, u = 1, t0  # U_0, U_1
        while True:
            tau_prev, tau = tau, t0 * tau - tau_prev
            if tau > t_max:
                break
            out.setdefault(tau, []).append(u)
            u_prev, u = u, t0 * u - u_prev
        t0 += 1
    return out


def _is_primitive(t: int, content: int, powers: dict[int, list[int]]) -> bool:
    # the class is P^k for a trace-t0 class P iff U_{k-1}(t0/2) divides the content
    return not any(content % u == 0 for u in powers.get(t, ()))


def classes_by_trace(t: int) -> list[HyperbolicClass]:
    """All hyperbolic classes of trace t, primitive or not, ordered by cycle."""
    forms = reduced_forms(t)
    seen: set = set()
    cycles = []
    for f in forms:
        if f in seen:
            continue
        cyc = []
        g = f
        while g not in seen:
            seen.add(g)
            cyc.append(g)
            g = rho(rho(g, t), t)
        cycles.append(min(cyc))
    cycles.sort()
    powers = _chebyshev_powers(t)
    return [HyperbolicClass(t, f, i, _is_primitive(t, math.gcd(*f), powers))
            for i, f in enumerate(cycles)]


# ---------------------------------------------------------------------------
# bulk enumeration


def _bulk_reduced_forms(t_max: int):
    """Arrays (t, a, b, c) of all reduced forms with a > 0 and 3 <= t <= t_max."""
    ts, As, Bs = [], [], []
    for a in range(1, t_max):
        if a + 2 > t_max:  # x + y >= 1 + (a + 1)
            break
        xs = np.array([x for x in range(1, a + 1) if math.gcd(x, a) == 1], dtype=np.int64)
        if a == 1:
            inv = np.zeros(1, dtype=np.int64)
        else:
            inv = np.array([pow(int(x), -1, a) for x in xs], dtype=np.int64)
        y0 = inv + a * ((a + 1 - inv + a - 1) // a)  # smallest y = inv (mod a), y >= a + 1
        jmax = (t_max - xs - y0) // a
        if np.all(jmax < 0):
            continue
        reps = np.maximum(jmax + 1, 0)
        x_rep = np.repeat(xs, reps)
        y_rep = np.repeat(y0, reps) + a * (np.arange(reps.sum()) - np.repeat(np.cumsum(reps) - reps, reps))
        ts.append(x_rep + y_rep)
        As.append(np.full(x_rep.shape, a, dtype=np.int64))
        Bs.append(y_rep - x_rep)
    t = np.concatenate(ts)
    a = np.concatenate(As)
    b = np.concatenate(Bs)
    keep = t >= 3
    t, a, b = t[keep], a[keep], b[keep]
    c = -(((t - b) // 2) * ((t + b) // 2) - 1) // a
    return t, a, b, c


def _bulk_rho(t, a, b, c):
    D = t * t - 4
    ac = np.abs(c)
    lo = t - 2 * ac
    b1 = lo + np.mod(-b - lo, 2 * ac)
    c1 = (b1 * b1 - D) // (4 * c)
    return c, b1, c1


def _enumerate(t_max: int):
    t, a, b, c = _bulk_reduced_forms(t_max)
    base = t_max + 1
    key = (t * base + a) * base + b
    order = np.argsort(key)
    t, a, b, c, key = t[order], a[order], b[order], c[order], key[order]
    a1, b1, c1 = _bulk_rho(t, a, b, c)
    a2, b2, c2 = _bulk_rho(t, a1, b1, c1)
    img = np.searchsorted(key, (t * base + a2) * base + b2)
    if np.any(img >= len(key)) or np.any(key[img] != (t * base + a2) * base + b2):
        raise AssertionError("reduction step left the set of reduced forms")
    # cycle minimum by pointer doubling; indices are sorted by (t, a, b)
    low = np.arange(len(key))
    ptr = img.copy()
    span = 1
    while span < len(key):
        low = np.minimum(low, low[ptr])
        ptr = ptr[ptr]
        span *= 2
    heads = np.unique(low)
    ct, ca, cb, cc = t[heads], a[heads], b[heads], c[heads]
    return ct, ca, cb, cc


class LengthSpectrum(Sequence):
    """Primitive hyperbolic classes with trace <= t_max, sorted by norm.

    Behaves as a sequence of HyperbolicClass and exposes the underlying
    integer arrays for vectorised use.
    """

    def __init__(self, t_max: int, traces, forms, cycle_ids):
        self.t_max = int(t_max)
        self.traces = np.asarray(traces, dtype=np.int64)
        self.forms = np.asarray(forms, dtype=np.int64).reshape(-1, 3)
        self.cycle_ids = np.asarray(cycle_ids, dtype=np.int64)

    def __len__(self) -> int:
        return len(self.traces)

    def __getitem__(self, i):
        if isinstance(i, slice):
            return [self[j] for j in range(*i.indices(len(self)))]
        a, b, c = (int(v) for v in self.forms[i])
        return HyperbolicClass(int(self.traces[i]), (a, b, c), int(self.cycle_ids[i]), True)

    def __iter__(self) -> Iterator[HyperbolicClass]:
        for i in range(len(self)):
            yield self[i]

    @property
    def norms(self) -> np.ndarray:
        return norm_of_trace(self.traces)

    @property
    def lengths(self) -> np.ndarray:
        return 2.0 * np.arccosh(self.traces / 2.0)

    def truncate(self, t_max: int) -> "LengthSpectrum":
        k = int(np.searchsorted(self.traces, t_max, side="right"))
        return LengthSpectrum(t_max, self.traces[:k], self.forms[:k], self.cycle_ids[:k])


def compute_length_spectrum(t_max: int) -> LengthSpectrum:
    if t_max < 3:
        raise DomainError("t_max must be at least 3")
    t, a, b, c = _enumerate(t_max)
    # classes come out sorted by (t, a, b); number them within each trace
    starts = np.searchsorted(t, t, side="left")
    ids = np.arange(len(t)) - starts
    content = np.gcd(np.gcd(a, b), np.abs(c))
    powers = _chebyshev_powers(t_max)
    prim = np.ones(len(t), dtype=bool)
    for i in np.nonzero(content >= 3)[0]:
        prim[i] = _is_primitive(int(t[i]), int(content[i]), powers)
    forms = np.stack([a, b, c], axis=1)
    return LengthSpectrum(t_max, t[prim], forms[prim], ids[prim])


# ---------------------------------------------------------------------------
# disk cache


def cache_dir() -> Path:
    env = os.environ.get(CACHE_ENV)
    if env:
        return Path(env)
    return Path(os.environ.get("XDG_CACHE_HOME", Path.home() / ".cache")) / "selbergzeta"


def _cache_path(t_max: int, directory: Path | None) -> Path:
    return (directory or cache_dir()) / f"spectrum_t{t_max}.txt"


def _body_lines(spec: LengthSpectrum) -> list[str]:
    return [f"{t} {a} {b} {c} {i} 1\n"
            for t, (a, b, c), i in zip(spec.traces.tolist(), spec.forms.tolist(),
                                       spec.cycle_ids.tolist())]


def write_cache(spec: LengthSpectrum, directory: Path | None = None) -> Path:
    """Write the spectrum atomically (temporary file, then rename)."""
    path = _cache_path(spec.t_max, directory)
    path.parent.mkdir(parents=True, exist_ok=True)
    body = "".join(_body_lines(spec))
    digest = hashlib.sha256(body.encode()).hexdigest()
    header = (f"# selbergzeta length spectrum\n"
              f"format_version={FORMAT_VERSION}\n"
              f"t_max={spec.t_max}\n"
              f"checksum={digest}\n"
              f"# t a b c form_cycle_id primitive\n")
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(header)
            fh.write(body)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def read_cache(path: Path) -> LengthSpectrum:
    text = Path(path).read_text()
    lines = text.splitlines(keepends=True)
    meta = {}
    body_start = None
    for i, line in enumerate(lines):
        if line.startswith("#"):
            continue
        if "=" in line:
            k, v = line.strip().split("=", 1)
            meta[k] = v
            continue
        body_start = i
        break
    if body_start is None:
        body_start = len(lines)
    try:
        version = int(meta["format_version"])
        t_max = int(meta["t_max"])
        digest = meta["checksum"]
    except (KeyError, ValueError) as exc:
        raise CacheCorruptionError(f"{path}: malformed header") from exc
    if version != FORMAT_VERSION:
        raise CacheCorruptionError(f"{path}: unsupported format version {version}")
    body = "".join(lines[body_start:])
    if hashlib.sha256(body.encode()).hexdigest() != digest:
        raise CacheCorruptionError(f"{path}: checksum mismatch")
    rows = np.loadtxt(body.splitlines(), dtype=np.int64, ndmin=2) if body else np.zeros((0, 6), np.int64)
    return LengthSpectrum(t_max, rows[:, 0], rows[:, 1:4], rows[:, 4])


def length_spectrum(t_max: int, use_cache: bool = True,
                    directory: Path | None = None) -> LengthSpectrum:
    """Primitive classes of trace <= t_max sorted by norm, cached on disk.

    A corrupted cache file is reported in the log and recomputed.
    """
    if t_max < 3:
        raise DomainError("t_max must be at least 3")
    if not use_cache:
        return compute_length_spectrum(t_max)
    path = _cache_path(t_max, directory)
    if path.exists():
        try:
            return read_cache(path)
        except CacheCorruptionError as exc:
            log.warning("discarding length-spectrum cache: %s", exc)
    spec = compute_length_spectrum(t_max)
    try:
        write_cache(spec, directory)
    except OSError as exc:  # read-only cache location is not fatal
        log.warning("could not write length-spectrum cache: %s", exc)
    return spec


# ---------------------------------------------------------------------------
# Euler products


@dataclass(frozen=True)
class EulerValue:
    value: complex
    tail_bound: float  # bound on |log Z_true - log Z_computed|
    error: float  # corresponding absolute error bound on the value
    classes: int


def induced_cycle_lengths(spec: LengthSpectrum, m: int) -> list[list[int]]:
    """Cycle type of the coset permutation of each class representative."""
    table = congruence.build_coset_table(m)
    if m == 1:
        return [[1]] * len(spec)
    out = []
    for t, (a, b, c) in zip(spec.traces.tolist(), spec.forms.tolist()):
        g = (((t - b) // 2, -c), (a, (t + b) // 2))
        out.append(congruence.cycle_lengths(table.perm_of_action(g)))
    return out


class InducedSpectrum:
    """Norms of the primitive hyperbolic classes of Gamma_0(m) lifted from a PSL(2, Z) spectrum.

    A class P whose coset permutation has a cycle of length l yields a
    primitive class of Gamma_0(m) with norm N(P)^l. Complete for norms up
    to that of the underlying trace bound.
    """

    def __init__(self, spec: LengthSpectrum, m: int):
        cyc = induced_cycle_lengths(spec, m)
        base = spec.norms
        self.level = m
        self.t_max = spec.t_max
        self.norms = np.array([base[i] ** l for i, c in enumerate(cyc) for l in c])

    def __len__(self) -> int:
        return len(self.norms)


def euler_zeta(s, m: int = 1, t_max: int = 200, k_max: int = 12,
               spectrum: LengthSpectrum | None = None) -> EulerValue:
    """Truncated Euler product over primitive classes with trace <= t_max.

    Z_m(s) = prod_{k=0}^{k_max} prod_P prod_{cycles l of rho_m(P)} (1 - N(P)^(-(s+k) l)).

    The reported tail bound covers the omitted classes, estimated from the
    counting function of the computed spectrum with a safety factor 2, and
    the omitted k > k_max factors.
    """
    s = complex(getattr(s, "s", s))
    if not s.real > 1.0:
        raise RegionError(f"the Euler product needs Re s > 1, got {s}")
    if t_max < 3 or k_max < 1:
        raise DomainError("t_max must be at least 3 and k_max at least 1")
    spec = (spectrum.truncate(t_max) if spectrum is not None and spectrum.t_max >= t_max
            else length_spectrum(t_max))
    logN = np.log(spec.norms)
    mu = congruence.build_coset_table(m).index
    ks = np.arange(k_max + 1)
    if m == 1:
        # sum_k log(1 - N^{-(s+k)})
        x = np.exp(-np.multiply.outer(logN, s + ks))
        logZ = np.log1p(-x).sum()
    else:
        cyc = induced_cycle_lengths(spec, m)
        logZ = 0j
        lens = np.array([l for c in cyc for l in c], dtype=float)
        owner = np.repeat(np.arange(len(cyc)), [len(c) for c in cyc])
        expo = np.multiply.outer(logN[owner] * lens, s + ks)
        logZ = np.log1p(-np.exp(-expo)).sum()
    sigma = s.real
    X = norm_of_trace(t_max)
    count = len(spec)
    c_emp = max(1.0, count * math.log(X) / X)
    # omitted classes: sum_{N > X} sum_k mu |log(1 - N^{-s-k})| <= 2 mu c int_X x^{-sigma} dx/log x
    tail_classes = 2.0 * mu * c_emp * X ** (1.0 - sigma) / ((sigma - 1.0) * math.log(X)) * 2.0
    # omitted k: sum_P mu sum_{k > k_max} 2 N^{-sigma-k}
    Ns = spec.norms
    tail_k = 2.0 * mu * float(np.sum(Ns ** (-(sigma + k_max + 1)) / (1.0 - 1.0 / Ns)))
    bound = tail_classes + tail_k
    value = complex(np.exp(logZ))
    return EulerValue(value, bound, abs(value) * math.expm1(bound), count)
