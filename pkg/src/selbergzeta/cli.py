"""Command-line interface.

    selbergzeta zeta --m 1 --s 2 --backend both
    selbergzeta zeta --newform 6 --s 2
    selbergzeta zeros --m 1 --r 9 10
    selbergzeta trace --t 0.01
    selbergzeta ingest table.csv
    selbergzeta spectrum --t-max 50

Exit codes: 0 success, 2 invalid input or precondition, 3 numerical
non-convergence, 4 trace-formula residual over budget.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import sys
from pathlib import Path

from . import geodesics, newform, traceformula, transfer
from .errors import (BudgetExceededError, ConvergenceError, DomainError, IngestError,
                     SelbergError)

EXIT_OK, EXIT_INPUT, EXIT_CONVERGENCE, EXIT_BUDGET = 0, 2, 3, 4

log = logging.getLogger("selbergzeta")


def _complex(text: str) -> complex:
    try:
        return complex(text.replace(" ", "").replace("i", "j"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a complex number: {text!r}") from None


def _positive_float(text: str) -> float:
    v = float(text)
    if not v > 0:
        raise argparse.ArgumentTypeError("must be positive")
    return v


def _order(text: str) -> int:
    v = int(text)
    if v < transfer.MIN_ORDER:
        raise argparse.ArgumentTypeError(f"truncation order must be >= {transfer.MIN_ORDER}")
    return v


def _fmt(x) -> str:
    if isinstance(x, float):
        return repr(x)
    return str(x)


def emit(rows: list[dict], columns: list[str], fmt: str, out) -> None:
    if fmt == "json":
        json.dump(rows, out, sort_keys=True, indent=1)
        out.write("\n")
        return
    w = csv.writer(out, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_fmt(row[c]) for c in columns])


# ---------------------------------------------------------------------------
# subcommands


ZETA_COLUMNS = ["s_re", "s_im", "level", "newform", "quantity", "backend",
                "value_re", "value_im", "error"]


def cmd_zeta(args, out) -> int:
    if (args.m is None) == (args.newform is None):
        raise DomainError("give exactly one of --m and --newform")
    backends = ["transfer", "euler"] if args.backend == "both" else [args.backend]
    rows = []
    for s in args.s:
        for backend in backends:
            row = {"s_re": s.real, "s_im": s.imag, "backend": backend,
                   "level": args.m if args.m is not None else "",
                   "newform": args.newform if args.newform is not None else ""}
            if args.newform is not None:
                if args.det_rhs:
                    if backend != "transfer":
                        raise DomainError("the determinant product needs the transfer backend")
                    value, err = newform.det_identity_rhs(s, args.newform, args.K)
                    row["quantity"] = "det_product"
                else:
                    value, err = newform.newform_zeta(
                        s, args.newform, args.K, backend, t_max=args.t_max, k_max=args.k_max,
                        quaternion=args.quaternion)
                    row["quantity"] = "newform_zeta"
            elif backend == "transfer":
                z = transfer.zeta_transfer(s, args.m, args.K)
                value, err = z.value, z.error
                row["quantity"] = "zeta"
            else:
                z = geodesics.euler_zeta(s, args.m, t_max=args.t_max, k_max=args.k_max)
                value, err = z.value, z.error
                row["quantity"] = "zeta"
            row.update(value_re=value.real, value_im=value.imag, error=float(err))
            rows.append(row)
    emit(rows, ZETA_COLUMNS, args.format, out)
    return EXIT_OK


def cmd_zeros(args, out) -> int:
    lo, hi = args.r
    zeros = transfer.locate_zeros(args.m, (lo, hi), args.K, height=args.height,
                                  half_width=args.half_width)
    rows = [{"m": args.m, "r": z.r, "winding": z.winding, "re_s": z.s.real,
             "error": max(abs(z.s.real - 0.5), 1e-8)} for z in zeros]
    emit(rows, ["m", "r", "winding", "re_s", "error"], args.format, out)
    return EXIT_OK


def _load_table(spec: str) -> traceformula.EigenvalueTable:
    if spec == "none":
        raise DomainError("the trace formula needs an eigenvalue table")
    if spec == "builtin":
        return traceformula.load_eigenvalues()
    if spec == "cached":
        path = geodesics.cache_dir() / INGESTED_NAME
        if not path.exists():
            raise DomainError(f"no ingested table at {path}; run the ingest command first")
        return traceformula.load_eigenvalues(path)
    path = Path(spec)
    if not path.exists():
        raise DomainError(f"eigenvalue file {path} does not exist")
    return traceformula.load_eigenvalues(path)


def _load_phase(path: str):
    rs, vals = [], []
    with open(path) as fh:
        for row in csv.reader(fh):
            if not row or row[0].strip() in ("r", "") or row[0].startswith("#"):
                continue
            rs.append(float(row[0]))
            vals.append(float(row[1]))
    return traceformula.tabulated_phase(rs, vals)


def cmd_trace(args, out) -> int:
    table = _load_table(args.eigenvalues)
    if args.count is not None:
        table = table.head(args.count)
    tf = traceformula.TestFunction.gaussian(args.t)
    spectrum = geodesics.length_spectrum(args.t_max)
    rows = []
    if args.newform is None:
        gd = traceformula.load_preset(args.preset)
        rep = traceformula.balance_check(gd, table, spectrum, tf, level=args.level,
                                         m_max=args.m_max, k0_sign=args.k0_sign)
        rows.append(_report_row(args.level or 1, rep))
        emit_report(rows, args.format, out)
        return EXIT_OK if rep.within_budget else EXIT_BUDGET
    n = args.newform
    phase = _load_phase(args.phase) if args.phase else None
    per_level: dict[str, dict[int, float]] = {k: {} for k in ("identity", "hyperbolic", "elliptic",
                                                               "parabolic", "continuous")}
    for m in newform.divisors(n):
        if m == 1:
            gd = traceformula.load_preset(args.preset)
        else:
            gd = traceformula.congruence_group_data(m, phase, args.K0)
        level_spec = spectrum if m == 1 else geodesics.InducedSpectrum(spectrum, m)
        hyp = traceformula.hyperbolic_term(level_spec, tf, args.m_max)
        terms = {
            "identity": traceformula.identity_term(gd, tf),
            "hyperbolic": hyp.value,
            "elliptic": traceformula.elliptic_term(gd, tf),
            "parabolic": traceformula.parabolic_term(gd, tf),
        }
        if m == 1 or phase is not None:
            terms["continuous"] = traceformula.continuous_term(gd, tf, k0_sign=args.k0_sign)
        for k, v in terms.items():
            per_level[k][m] = v
        rows.append({"level": m, "kind": "per_level", **{k: terms.get(k, "") for k in TERM_KEYS},
                     "error": hyp.tail_bound + 5 * traceformula.QUAD_TOL})
    combined = {}
    for k, vals in per_level.items():
        if len(vals) == len(newform.divisors(n)):
            combined[k] = traceformula.newform_combination(n, vals)
    if "continuous" in combined:
        combined["parabolic_minus_continuous"] = combined["parabolic"] - combined["continuous"]
    rows.append({"level": n, "kind": "newform", **{k: combined.get(k, "") for k in TERM_KEYS},
                 "error": "", "parabolic_minus_continuous": combined.get("parabolic_minus_continuous", "")})
    for r in rows:
        r.setdefault("parabolic_minus_continuous", "")
    emit(rows, ["level", "kind", *TERM_KEYS, "parabolic_minus_continuous", "error"], args.format, out)
    return EXIT_OK


TERM_KEYS = ["identity", "hyperbolic", "elliptic", "parabolic", "continuous"]


def _report_row(level: int, rep) -> dict:
    d = rep.as_dict()
    row = {"level": level, **d["terms"], "lhs": d["lhs"], "rhs": d["rhs"],
           "residual": d["residual"], "relative_residual": d["relative_residual"],
           "budget": d["total_budget"], "within_budget": d["within_budget"]}
    for k, v in d["budget"].items():
        row[f"budget_{k}"] = v
    return row


def emit_report(rows, fmt, out) -> None:
    cols = list(rows[0].keys())
    emit(rows, cols, fmt, out)


INGESTED_NAME = "eigenvalues.csv"


def cmd_ingest(args, out) -> int:
    path = Path(args.path)
    if not path.exists():
        raise DomainError(f"{path} does not exist")
    table = traceformula.parse_eigenvalue_csv(path.read_text())
    for w in table.warnings:
        print(f"warning: {w}", file=sys.stderr)
    target = geodesics.cache_dir() / INGESTED_NAME
    target.parent.mkdir(parents=True, exist_ok=True)
    tmp = target.with_suffix(".tmp")
    tmp.write_text(table.to_csv())
    tmp.replace(target)
    rows = [{"level": lv, "rows": len(table.filter(lv)),
             "multiplicity": sum(e.multiplicity for e in table.filter(lv).rows),
             "stored": str(target)} for lv in table.levels]
    emit(rows, ["level", "rows", "multiplicity", "stored"], args.format, out)
    return EXIT_OK


def cmd_spectrum(args, out) -> int:
    spec = geodesics.length_spectrum(args.t_max, use_cache=not args.no_cache)
    rows = []
    for c in spec:
        a, b, cc = c.form
        rows.append({"trace": c.trace, "a": a, "b": b, "c": cc, "form_cycle_id": c.form_cycle_id,
                     "norm": c.norm, "length": c.length,
                     "error": 4 * math.ulp(c.norm)})
    emit(rows, ["trace", "a", "b", "c", "form_cycle_id", "norm", "length", "error"],
         args.format, out)
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="selbergzeta", description=__doc__.split("\n")[0])
    p.add_argument("--config", help="key=value file with defaults for the subcommand flags")
    p.add_argument("--format", choices=["csv", "json"], default="csv")
    p.add_argument("-v", "--verbose", action="store_true")
    # the shared options are also accepted after the subcommand name
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default=argparse.SUPPRESS)
    common.add_argument("--format", choices=["csv", "json"], default=argparse.SUPPRESS)
    common.add_argument("-v", "--verbose", action="store_true", default=argparse.SUPPRESS)
    sub = p.add_subparsers(dest="command", required=True)

    z = sub.add_parser("zeta", parents=[common], help="Selberg zeta values")
    z.add_argument("--m", type=int)
    z.add_argument("--newform", type=int)
    z.add_argument("--s", type=_complex, nargs="+", required=True)
    z.add_argument("--K", type=_order, default=24)
    z.add_argument("--backend", choices=["transfer", "euler", "both"], default="transfer")
    z.add_argument("--t-max", type=int, default=300)
    z.add_argument("--k-max", type=int, default=12)
    z.add_argument("--det-rhs", action="store_true",
                   help="with --newform: product of det(1 - L) instead of zeta values")
    z.add_argument("--quaternion", action="store_true",
                   help="require --newform to be an admissible reduced discriminant")
    z.set_defaults(func=cmd_zeta)

    r = sub.add_parser("zeros", parents=[common], help="zeros of Z_m on the critical line")
    r.add_argument("--m", type=int, default=1)
    r.add_argument("--r", type=float, nargs=2, required=True, metavar=("LO", "HI"))
    r.add_argument("--K", type=_order, default=24)
    r.add_argument("--height", type=_positive_float, default=0.05)
    r.add_argument("--half-width", type=_positive_float, default=0.05)
    r.set_defaults(func=cmd_zeros)

    t = sub.add_parser("trace", parents=[common], help="trace formula balance")
    t.add_argument("--t", type=_positive_float, default=0.01, help="Gaussian width")
    t.add_argument("--preset", help="group preset file (default: PSL(2,Z))")
    t.add_argument("--eigenvalues", default="builtin", help="path, 'builtin', 'cached' or 'none'")
    t.add_argument("--count", type=int, help="use only the first COUNT eigenvalues")
    t.add_argument("--level", type=int)
    t.add_argument("--t-max", type=int, default=1000)
    t.add_argument("--m-max", type=int, default=20)
    t.add_argument("--newform", type=int)
    t.add_argument("--phase", help="CSV r,value of (phi'/phi)(1/2+ir) for levels > 1")
    t.add_argument("--K0", type=float, default=0.0, help="K0 for levels > 1")
    t.add_argument("--k0-sign", type=int, choices=[1, -1], default=1)
    t.set_defaults(func=cmd_trace)

    g = sub.add_parser("ingest", parents=[common], help="validate and store an eigenvalue table")
    g.add_argument("path")
    g.set_defaults(func=cmd_ingest)

    s = sub.add_parser("spectrum", parents=[common], help="export the primitive length spectrum")
    s.add_argument("--t-max", type=int, default=50)
    s.add_argument("--no-cache", action="store_true")
    s.set_defaults(func=cmd_spectrum)
    return p


def _apply_config(parser: argparse.ArgumentParser, argv: list[str]) -> argparse.Namespace:
    """Parse argv with defaults taken from a key=value config file; flags win."""
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if known.config:
        values = traceformula.parse_preset(Path(known.config).read_text())
        choices = parser._subparsers._group_actions[0].choices  # noqa: SLF001
        command = next((a for a in argv if a in choices), None)
        if command is None:
            command = values.get("command")
            if command not in choices:
                raise DomainError("no subcommand given on the command line or in the config file")
            argv = [*argv, command]
        sub = choices[command]
        defaults = {}
        for action in sub._actions:  # noqa: SLF001
            key = next((k for k in (action.dest, action.dest.replace("_", "-")) if k in values), None)
            if key is None or action.dest in ("config", "help"):
                continue
            raw = values[key]
            if action.nargs in ("+", 2):
                val = [action.type(v) if action.type else v for v in raw.split()]
            elif isinstance(action, argparse._StoreTrueAction):  # noqa: SLF001
                val = raw.strip().lower() in ("1", "true", "yes")
            else:
                val = action.type(raw) if action.type else raw
            defaults[action.dest] = val
            action.required = False
        sub.set_defaults(**defaults)
    return parser.parse_args(argv)


def main(argv: list[str] | None = None, out=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    out = out or sys.stdout
    parser = build_parser()
    try:
        args = _apply_config(parser, argv)
    except SystemExit as exc:  # argparse usage errors
        return EXIT_INPUT if exc.code else EXIT_OK
    except (OSError, DomainError, ValueError, argparse.ArgumentTypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    buf = io.StringIO()
    try:
        code = args.func(args, buf)
    except IngestError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except BudgetExceededError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except ConvergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE
    except (DomainError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except SelbergError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE
    out.write(buf.getvalue())
    return code


if __name__ == "__main__":
    sys.exit(main())
