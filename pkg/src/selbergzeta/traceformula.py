"""Terms of the Selberg trace formula for Gaussian test functions.

The test function is h(r^2 + 1/4) = sum_i w_i exp(-t_i r^2) with Fourier
partner g(u) = sum_i w_i (4 pi t_i)^(-1/2) exp(-u^2 / (4 t_i)). Every term
below is a linear functional of (h, g); integrals over the real line go
through :func:`numerics.integrate_real_line` with an explicit envelope.

Balance:  sum_k h(lambda_k) + C  =  I + H + E + P.
"""

from __future__ import annotations

import ast
import csv
import io
import logging
import math
import operator
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np
import scipy.interpolate

from .errors import (BudgetExceededError, DomainError, IngestError, MissingLevelError,
                     PhaseGridError)
from .congruence import build_coset_table, cusp_count
from .geodesics import norm_of_trace
from .newform import beta, divisors
from .numerics import RealLineIntegrand, digamma, integrate_real_line, log_gamma, riemann_zeta

log = logging.getLogger(__name__)

QUAD_TOL = 1e-10


# ---------------------------------------------------------------------------
# test functions


@dataclass(frozen=True)
class TestFunction:
    """Gaussian mixture h(r) = sum w exp(-t r^2); a single Gaussian has weight 1."""

    widths: tuple[float, ...]
    weights: tuple[float, ...] = (1.0,)

    __test__ = False  # not a pytest class

    def __post_init__(self):
        if len(self.widths) != len(self.weights) or not self.widths:
            raise DomainError("widths and weights must be non-empty and of equal length")
        if any(not t > 0 for t in self.widths):
            raise DomainError("Gaussian widths must be positive")

    @classmethod
    def gaussian(cls, t: float) -> "TestFunction":
        return cls((float(t),), (1.0,))

    @property
    def family(self) -> str:
        return "gaussian"

    @property
    def decay(self) -> float:
        return min(self.widths)

    @property
    def amplitude(self) -> float:
        return float(sum(abs(w) for w in self.weights))

    def h(self, r):
        """h as a function of the spectral parameter r (real or complex)."""
        r = np.asarray(r)
        out = sum(w * np.exp(-t * r * r) for t, w in zip(self.widths, self.weights))
        return out if np.ndim(out) else complex(out) if np.iscomplexobj(out) else float(out)

    def h_of_lambda(self, lam):
        """h(lambda) with lambda = r^2 + 1/4, so h = sum w exp(-t (lambda - 1/4))."""
        lam = np.asarray(lam, dtype=float)
        out = sum(w * np.exp(-t * (lam - 0.25)) for t, w in zip(self.widths, self.weights))
        return out if np.ndim(out) else float(out)

    def g(self, u):
        u = np.asarray(u, dtype=float)
        out = sum(w * np.exp(-u * u / (4 * t)) / math.sqrt(4 * math.pi * t)
                  for t, w in zip(self.widths, self.weights))
        return out if np.ndim(out) else float(out)

    def scaled(self, c: float) -> "TestFunction":
        return TestFunction(self.widths, tuple(c * w for w in self.weights))

    def __add__(self, other: "TestFunction") -> "TestFunction":
        return TestFunction(self.widths + other.widths, self.weights + other.weights)


# ---------------------------------------------------------------------------
# scattering phase


def modular_scattering(s: complex) -> complex:
    """phi(s) = sqrt(pi) Gamma(s - 1/2) zeta(2s - 1) / (Gamma(s) zeta(2s)) for PSL(2, Z).

    Gamma(s - 1/2) is taken as Gamma(s + 1/2) / (s - 1/2) so that only
    Re > 0 gamma values are needed near the critical line.
    """
    s = complex(s)
    lg = log_gamma(s + 0.5) - log_gamma(s)
    return (math.sqrt(math.pi) * np.exp(lg) / (s - 0.5)
            * riemann_zeta(2 * s - 1) / riemann_zeta(2 * s))


def modular_phase_derivative(r: float, delta: float = 1e-5) -> float:
    """(phi'/phi)(1/2 + i r) by central differences of log phi plus one Richardson step."""
    s = complex(0.5, r)

    def central(d):
        ratio = modular_scattering(s + d) / modular_scattering(s - d)
        return np.log(ratio) / (2 * d)

    val = (4 * central(delta / 2) - central(delta)) / 3
    return float(val.real)


def tabulated_phase(rs: Sequence[float], values: Sequence[float]) -> Callable[[float], float]:
    """Cubic-spline interpolant of a sampled phase; raises PhaseGridError off the grid."""
    rs = np.asarray(rs, dtype=float)
    vals = np.asarray(values, dtype=float)
    if rs.ndim != 1 or len(rs) < 4 or np.any(np.diff(rs) <= 0):
        raise DomainError("phase grid must be strictly increasing with at least 4 points")
    spline = scipy.interpolate.CubicSpline(rs, vals)
    lo, hi = rs[0], rs[-1]

    def phase(r: float) -> float:
        if not lo <= r <= hi:
            raise PhaseGridError(f"scattering phase requested at r = {r} outside [{lo}, {hi}]")
        return float(spline(r))

    phase.domain = (lo, hi)  # type: ignore[attr-defined]
    return phase


def zero_phase(r: float) -> float:
    return 0.0


# ---------------------------------------------------------------------------
# group data


@dataclass(frozen=True)
class GroupData:
    volume: float
    elliptic: tuple[tuple[int, int], ...] = ()  # (order nu, class count)
    cusps: int = 0
    scattering_phase: Callable[[float], float] = zero_phase  # (phi'/phi)(1/2 + i r)
    K0: float = 0.0
    phase_bound: float = 10.0  # |phase(r)| <= phase_bound (1 + r^2), for the quadrature envelope
    name: str = ""

    def __post_init__(self):
        if not self.volume > 0:
            raise DomainError("volume must be positive")
        if self.cusps < 0:
            raise DomainError("cusp count must be non-negative")
        for nu, count in self.elliptic:
            if nu < 2 or count < 1:
                raise DomainError("elliptic orders must be >= 2 with positive class counts")


def elliptic_point_counts(m: int) -> tuple[int, int]:
    """Numbers of order-2 and order-3 elliptic classes of Gamma_0(m), by counting roots mod m."""
    e2 = sum(1 for x in range(m) if (x * x + 1) % m == 0)
    e3 = sum(1 for x in range(m) if (x * x + x + 1) % m == 0)
    return e2, e3


def congruence_group_data(m: int, phase: Callable[[float], float] | None = None,
                          K0: float = 0.0) -> GroupData:
    """Volume, elliptic and cusp data of Gamma_0(m); the scattering phase must be supplied."""
    mu = build_coset_table(m).index
    e2, e3 = elliptic_point_counts(m)
    ell = tuple((nu, c) for nu, c in ((2, e2), (3, e3)) if c)
    return GroupData(mu * math.pi / 3, ell, cusp_count(m), phase or zero_phase, K0,
                     name=f"Gamma_0({m})")


PRESET_PACKAGE_FILE = "modular.preset"


def parse_preset(text: str) -> dict[str, str]:
    out = {}
    for n, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise DomainError(f"preset line {n}: expected key=value")
        k, v = line.split("=", 1)
        out[k.strip()] = v.strip()
    return out


def group_from_preset(values: Mapping[str, str]) -> GroupData:
    """GroupData from preset keys: volume, elliptic (nu:count,...), cusps, K0, scattering."""
    expr = values.get("volume")
    if expr is None:
        raise DomainError("preset lacks a volume")
    volume = _parse_number(expr)
    elliptic = []
    if values.get("elliptic"):
        for item in values["elliptic"].split(","):
            nu, count = item.split(":")
            elliptic.append((int(nu), int(count)))
    cusps = int(values.get("cusps", "0"))
    K0 = _parse_number(values.get("K0", "0"))
    scat = values.get("scattering", "none")
    if scat == "modular":
        phase = modular_phase_derivative
    elif scat == "none":
        phase = zero_phase
    else:
        raise DomainError(f"unknown scattering kind {scat!r}")
    return GroupData(volume, tuple(elliptic), cusps, phase, K0, name=values.get("name", ""))


_BINOPS = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul,
           ast.Div: operator.truediv}


def _parse_number(expr: str) -> float:
    """A float, optionally written with pi and + - * / (e.g. ``pi/3``)."""

    def ev(node):
        if isinstance(node, ast.Expression):
            return ev(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            return float(node.value)
        if isinstance(node, ast.Name) and node.id == "pi":
            return math.pi
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
            v = ev(node.operand)
            return -v if isinstance(node.op, ast.USub) else v
        if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
            return _BINOPS[type(node.op)](ev(node.left), ev(node.right))
        raise DomainError(f"cannot parse number {expr!r}")

    try:
        return ev(ast.parse(expr.strip(), mode="eval"))
    except (SyntaxError, ZeroDivisionError) as exc:
        raise DomainError(f"cannot parse number {expr!r}") from exc


def load_preset(path: str | Path | None = None) -> GroupData:
    """Read a key=value preset; the default is the shipped modular-group preset."""
    if path is None:
        text = resources.files("selbergzeta.data").joinpath(PRESET_PACKAGE_FILE).read_text()
    else:
        text = Path(path).read_text()
    return group_from_preset(parse_preset(text))


def modular_group() -> GroupData:
    return load_preset()


# ---------------------------------------------------------------------------
# eigenvalue tables

TAGS = ("new", "old", "all")


@dataclass(frozen=True)
class EigenRow:
    level: int
    r: float
    multiplicity: int
    tag: str

    @property
    def lam(self) -> float:
        return self.r * self.r + 0.25


@dataclass(frozen=True)
class EigenvalueTable:
    rows: tuple[EigenRow, ...] = ()
    warnings: tuple[str, ...] = field(default=(), compare=False)

    def __post_init__(self):
        rows = tuple(sorted(self.rows, key=lambda e: (e.level, e.r)))
        object.__setattr__(self, "rows", rows)

    def __len__(self) -> int:
        return len(self.rows)

    @property
    def levels(self) -> list[int]:
        return sorted({e.level for e in self.rows})

    def filter(self, level: int | None = None, tags: Iterable[str] | None = None) -> "EigenvalueTable":
        tags = set(tags) if tags is not None else None
        return EigenvalueTable(tuple(e for e in self.rows
                                     if (level is None or e.level == level)
                                     and (tags is None or e.tag in tags)))

    def head(self, count: int) -> "EigenvalueTable":
        return EigenvalueTable(self.rows[:count])

    def merge(self, other: "EigenvalueTable") -> "EigenvalueTable":
        return EigenvalueTable(self.rows + other.rows)

    def dimensions(self, include_constant: bool = True) -> dict[int, dict[float, int]]:
        """level -> {lambda: multiplicity}; the constant function contributes lambda = 0."""
        out: dict[int, dict[float, int]] = {}
        for e in self.rows:
            d = out.setdefault(e.level, {0.0: 1} if include_constant else {})
            d[e.lam] = d.get(e.lam, 0) + e.multiplicity
        return out

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("level,r,multiplicity,tag\n")
        for e in self.rows:
            buf.write(f"{e.level},{e.r:.13f},{e.multiplicity},{e.tag}\n")
        return buf.getvalue()


LAMBDA_TOL = 1e-9


def parse_eigenvalue_csv(text: str) -> EigenvalueTable:
    """Validate and parse an eigenvalue CSV with columns level, r, multiplicity, tag.

    A lambda column may accompany or replace r; when both are present they
    must satisfy lambda = r^2 + 1/4 to 1e-9 relative.

    Rows must be sorted by r within each level. Duplicate (level, r) rows
    are merged with summed multiplicity and reported in ``warnings``.
    """
    reader = csv.reader(io.StringIO(text))
    try:
        header = [h.strip() for h in next(reader)]
    except StopIteration:
        raise IngestError("empty file", 1) from None
    cols = {name: i for i, name in enumerate(header)}
    known = {"level", "r", "lambda", "multiplicity", "tag"}
    if (len(cols) != len(header) or not set(cols) <= known
            or not {"level", "multiplicity", "tag"} <= set(cols) or not {"r", "lambda"} & set(cols)):
        raise IngestError("header must name level, r and/or lambda, multiplicity and tag, "
                          f"got {','.join(header)}", 1)
    merged: dict[tuple[int, float], list] = {}
    last_r: dict[int, float] = {}
    warnings = []
    for lineno, row in enumerate(reader, 2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != len(header):
            raise IngestError(f"expected {len(header)} fields, got {len(row)}", lineno)
        try:
            level = int(row[cols["level"]])
            lam = float(row[cols["lambda"]]) if "lambda" in cols else None
            if "r" in cols:
                r = float(row[cols["r"]])
            elif lam is not None and lam >= 0.25:
                r = math.sqrt(lam - 0.25)
            else:
                raise IngestError("lambda below 1/4 has no real spectral parameter", lineno)
            mult = int(row[cols["multiplicity"]])
        except ValueError as exc:
            raise IngestError(f"unparsable field ({exc})", lineno) from None
        tag = row[cols["tag"]].strip()
        if level < 1:
            raise IngestError("level must be positive", lineno)
        if not (math.isfinite(r) and r >= 0):
            raise IngestError("r must be a finite non-negative number", lineno)
        if mult < 1:
            raise IngestError("multiplicity must be positive", lineno)
        if tag not in TAGS:
            raise IngestError(f"tag must be one of {TAGS}", lineno)
        if lam is not None and "r" in cols:
            if abs(lam - (r * r + 0.25)) > LAMBDA_TOL * max(1.0, lam):
                raise IngestError(f"lambda {lam} differs from r^2 + 1/4 = {r * r + 0.25}", lineno)
        if level in last_r and r < last_r[level]:
            raise IngestError(f"rows of level {level} are not sorted by r", lineno)
        last_r[level] = r
        key = (level, r)
        if key in merged:
            merged[key][2] += mult
            warnings.append(f"line {lineno}: duplicate row for level {level}, r = {r}; multiplicities summed")
        else:
            merged[key] = [level, r, mult, tag]
    rows = tuple(EigenRow(l, r, m, t) for l, r, m, t in merged.values())
    for w in warnings:
        log.warning(w)
    return EigenvalueTable(rows, tuple(warnings))


def load_eigenvalues(path: str | Path | None = None) -> EigenvalueTable:
    """Parse an eigenvalue file; the default is the shipped level-1 table."""
    if path is None:
        text = resources.files("selbergzeta.data").joinpath("maass_level1.csv").read_text()
    else:
        text = Path(path).read_text()
    return parse_eigenvalue_csv(text)


# ---------------------------------------------------------------------------
# terms


def _integrate(func, tf: TestFunction, bound: float, tol: float) -> complex:
    f = RealLineIntegrand(func, decay=tf.decay, amplitude=bound * tf.amplitude)
    return integrate_real_line(f, tol)


def identity_term(gd: GroupData, tf: TestFunction, tol: float = QUAD_TOL) -> float:
    """(vol / 4 pi) int r tanh(pi r) h dr."""
    val = _integrate(lambda r: r * math.tanh(math.pi * r) * tf.h(r), tf, 1.0, tol)
    return gd.volume / (4 * math.pi) * val.real


@dataclass(frozen=True)
class HyperbolicResult:
    value: float
    tail_bound: float


def hyperbolic_term(spectrum, tf: TestFunction, m_max: int = 20) -> HyperbolicResult:
    """sum_P sum_{m <= m_max} log N / (N^{m/2} - N^{-m/2}) g(m log N).

    ``spectrum`` is a LengthSpectrum (or any sequence of classes with a
    ``norm``). The tail bound covers classes beyond the spectrum, using the
    prime geodesic count ~ e^u / u with a safety factor 2, and the omitted
    powers m > m_max.
    """
    if hasattr(spectrum, "norms"):
        N = np.asarray(spectrum.norms, dtype=float)
    else:
        N = np.array([c.norm for c in spectrum], dtype=float)
    if N.size == 0:
        return HyperbolicResult(0.0, 0.0)
    logN = np.log(N)
    t_max = getattr(spectrum, "t_max", None)
    U = math.log(norm_of_trace(t_max)) if t_max else float(logN.max())
    total = 0.0
    for m in range(1, m_max + 1):
        total += float(np.sum(logN / (N ** (m / 2) - N ** (-m / 2)) * tf.g(m * logN)))
    # omitted powers: g is decreasing on u > 0
    m1 = m_max + 1
    tail_m = float(np.sum(logN * np.abs(tf.g(m1 * logN)) * N ** (-m1 / 2)
                          / (1 - N ** -0.5) / (1 - N ** -m1)))
    # omitted classes: sum_{log N > U} log N N^{-1/2} |g(log N)| ~ int_U e^{u/2} |g(u)| du
    tail_p = 0.0
    for t, w in zip(tf.widths, tf.weights):
        tail_p += abs(w) * math.exp(t / 4) * 0.5 * math.erfc((U - t) / (2 * math.sqrt(t)))
    return HyperbolicResult(total, 2.0 * (tail_p + tail_m))


def elliptic_term(gd: GroupData, tf: TestFunction, tol: float = QUAD_TOL) -> float:
    """(1/2) sum_R sum_{m<nu} (nu sin(pi m/nu))^-1 int exp(-2 pi r m/nu)/(1 + exp(-2 pi r)) h dr."""
    total = 0.0
    for nu, count in gd.elliptic:
        for m in range(1, nu):
            a = 2 * math.pi * m / nu

            def f(r, a=a):
                # exp(-a r) / (1 + exp(-2 pi r)) without overflow
                return math.exp(-a * r - np.logaddexp(0.0, -2 * math.pi * r)) * tf.h(r)

            val = _integrate(f, tf, 1.0, tol).real
            total += count * val / (nu * math.sin(math.pi * m / nu))
    return 0.5 * total


def parabolic_term(gd: GroupData, tf: TestFunction, tol: float = QUAD_TOL) -> float:
    """-K g(0) log 2 + (K/4) h(1/4) - (K / 2 pi) int psi(1 + i r) h dr."""
    K = gd.cusps
    if K == 0:
        return 0.0
    val = _integrate(lambda r: digamma(complex(1.0, r)) * tf.h(r), tf, 1.0, tol)
    if abs(val.imag) > 1e-8:
        raise AssertionError(f"digamma integral has imaginary part {val.imag}")
    return -K * tf.g(0.0) * math.log(2) + K / 4 * tf.h(0.0) - K / (2 * math.pi) * val.real


PHASE_TOL = 1e-8  # the finite-difference phase carries ~1e-11 noise per sample


def continuous_term(gd: GroupData, tf: TestFunction, tol: float = PHASE_TOL,
                    k0_sign: int = +1) -> float:
    """-(1/4 pi) int (phi'/phi)(1/2 + i r) h dr + k0_sign (K0 / 4) h(1/4).

    With the default k0_sign = +1 the constant term enters as + K0/4, which
    is the sign under which the modular-group balance closes (K0 = -1).
    ``k0_sign=-1`` gives the opposite sign; it leaves a residual of exactly
    -K0/2 h(1/4) in the balance.
    """
    if k0_sign not in (1, -1):
        raise DomainError("k0_sign must be +1 or -1")
    phase = gd.scattering_phase
    if phase is zero_phase:
        integral = 0.0
    else:
        integral = _integrate(lambda r: phase(r) * tf.h(r), tf, gd.phase_bound, tol).real
    return -integral / (4 * math.pi) + k0_sign * gd.K0 / 4 * tf.h(0.0)


def spectral_side(table: EigenvalueTable, tf: TestFunction, level: int | None = None,
                  tags: Iterable[str] | None = None, include_constant: bool = True) -> float:
    """sum multiplicity * h(lambda_k), plus h(lambda_0 = 0) once for the constant function."""
    sub = table.filter(level, tags)
    total = 0.0
    for e in sub.rows:
        total += e.multiplicity * tf.h(e.r)
    if include_constant and (len(sub) or level is not None):
        total += tf.h_of_lambda(0.0)
    return float(total)


def newform_combination(n: int, per_level: Mapping[int, float]) -> float:
    """sum_{m | n} beta(n/m) term_m."""
    ds = divisors(n)
    missing = [m for m in ds if m not in per_level]
    if missing:
        raise MissingLevelError(f"levels {missing} dividing {n} are absent")
    return float(sum(beta(n // m) * per_level[m] for m in ds))


# ---------------------------------------------------------------------------
# balance


@dataclass(frozen=True)
class BalanceReport:
    terms: dict
    lhs: float
    rhs: float
    residual: float
    budget: dict

    @property
    def total_budget(self) -> float:
        return float(sum(self.budget.values()))

    @property
    def relative_residual(self) -> float:
        return abs(self.residual) / abs(self.rhs) if self.rhs else abs(self.residual)

    @property
    def within_budget(self) -> bool:
        return abs(self.residual) <= self.total_budget

    def as_dict(self) -> dict:
        return {"terms": dict(sorted(self.terms.items())), "lhs": self.lhs, "rhs": self.rhs,
                "residual": self.residual, "relative_residual": self.relative_residual,
                "budget": dict(sorted(self.budget.items())), "total_budget": self.total_budget,
                "within_budget": self.within_budget}


def eigenvalue_tail(gd: GroupData, tf: TestFunction, r_max: float) -> float:
    """Weyl-law bound for sum_{r_k > r_max} h(r_k): (vol/2 pi) int_{r_max} r h dr, doubled."""
    total = 0.0
    for t, w in zip(tf.widths, tf.weights):
        total += abs(w) * math.exp(-t * r_max * r_max) / (2 * t)
    return 2.0 * gd.volume / (2 * math.pi) * total


def balance_check(gd: GroupData, table: EigenvalueTable, spectrum, tf: TestFunction, *,
                  level: int | None = None, m_max: int = 20, tol: float = QUAD_TOL,
                  r_accuracy: float = 1e-8, phase_tol: float = PHASE_TOL, k0_sign: int = +1,
                  strict: bool = False) -> BalanceReport:
    """Evaluate both sides; the budget lists every truncation and accuracy term."""
    terms = {
        "spectral": spectral_side(table, tf, level),
        "continuous": continuous_term(gd, tf, phase_tol, k0_sign),
        "identity": identity_term(gd, tf, tol),
        "elliptic": elliptic_term(gd, tf, tol),
        "parabolic": parabolic_term(gd, tf, tol),
    }
    hyp = hyperbolic_term(spectrum, tf, m_max) if spectrum is not None else HyperbolicResult(0.0, 0.0)
    terms["hyperbolic"] = hyp.value
    lhs = terms["spectral"] + terms["continuous"]
    rhs = terms["identity"] + terms["hyperbolic"] + terms["elliptic"] + terms["parabolic"]
    sub = table.filter(level)
    r_max = max((e.r for e in sub.rows), default=0.0)
    # |dh/dr| <= sum |w| 2 t r exp(-t r^2)
    r_err = sum(e.multiplicity * r_accuracy * sum(abs(w) * 2 * t * e.r * math.exp(-t * e.r ** 2)
                                                  for t, w in zip(tf.widths, tf.weights))
                for e in sub.rows)
    budget = {
        "quadrature": 4 * tol + (phase_tol if gd.scattering_phase is not zero_phase else 0.0),
        "hyperbolic_tail": hyp.tail_bound,
        "eigenvalue_tail": eigenvalue_tail(gd, tf, r_max) if not (len(sub) == 0 and r_max == 0) else 0.0,
        "eigenvalue_accuracy": r_err,
    }
    report = BalanceReport(terms, lhs, rhs, lhs - rhs, budget)
    if strict and not report.within_budget:
        raise BudgetExceededError(
            f"residual {report.residual:.3e} exceeds budget {report.total_budget:.3e}")
    return report
