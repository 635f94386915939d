"""Command-line front end: ``capdispatch {solve,dual,check,sweep} CASE``.

Exit codes: 0 optimal, 1 usage or input error, 2 solve not optimal.
Tables print 6 significant digits; ``--json`` output keeps full precision.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from ._format import num
from .dualize import (
    build_dual_qp,
    describe_lp_dual,
    lp_dual,
    recover_primal,
)
from .errors import CapDispatchError, NotLinear, NotStrictlyConvex
from .model import CanonicalQp, DispatchCase, RowMap, compile_dispatch, load_case
from .pricecap import CapSpec, apply_caps, interpret, solve_capped
from .solver import Solution, SolverOptions, solve, solve_dual_qp
from .verify import compare_kkt, kkt_residuals, sensitivity_check

EXIT_OK, EXIT_USAGE, EXIT_NOT_OPTIMAL = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# ---------------------------------------------------------------------------
# problem setup
# ---------------------------------------------------------------------------

def parse_cap(text: str) -> tuple[str, float]:
    """``"bus1=3"`` -> ``("bus1", 3.0)``."""
    bus, sep, price = text.rpartition("=")
    if not sep or not bus:
        raise argparse.ArgumentTypeError(f"expected <bus>=<price>, got {text!r}")
    try:
        value = float(price)
    except ValueError:
        raise argparse.ArgumentTypeError(f"cap price {price!r} is not a number") from None
    if not math.isfinite(value):
        raise argparse.ArgumentTypeError(f"cap price {price!r} is not finite")
    return bus, value


def merged_caps(case: DispatchCase, flags) -> dict[str, float]:
    """File caps overridden per bus by ``--cap`` flags, in first-seen order."""
    caps = {cp.bus: cp.price for cp in case.caps}
    for bus, price in flags or ():
        caps[bus] = price
    return caps


@dataclass
class Problem:
    case: DispatchCase
    qp: CanonicalQp
    rowmap: RowMap
    caps: dict[str, float]
    spec: CapSpec
    capped: CanonicalQp
    capped_rowmap: RowMap

    def with_caps(self, caps: dict[str, float]) -> "Problem":
        spec = self._spec(self.rowmap, caps)
        capped, crm = apply_caps(self.qp, self.rowmap, spec)
        return Problem(self.case, self.qp, self.rowmap, caps, spec, capped, crm)

    @staticmethod
    def _spec(rowmap: RowMap, caps: dict[str, float]) -> CapSpec:
        known = {bus for bus, _ in rowmap.balance}
        for bus in caps:
            if bus not in known:
                raise UsageError(f"cap on unknown bus {bus!r}")
        return CapSpec.for_buses(rowmap, caps)


def load_problem(path: str, cap_flags) -> Problem:
    case = load_case(path)
    qp, rowmap = compile_dispatch(case)
    base = Problem(case, qp, rowmap, {}, CapSpec(), qp, rowmap)
    return base.with_caps(merged_caps(case, cap_flags))


def solver_options(args) -> SolverOptions:
    return SolverOptions(tol=args.tol, max_iter=args.max_iter)


def solve_problem(p: Problem, opts: SolverOptions) -> Solution:
    return solve_capped(p.capped, p.capped_rowmap, opts) if p.caps else solve(p.qp, opts)


# ---------------------------------------------------------------------------
# output record
# ---------------------------------------------------------------------------

@dataclass
class CapRecord:
    bus: str
    price: float
    alpha: float | None
    binding: bool | None


@dataclass
class OutputRecord:
    """Solve result in case terms; objective in the case's declared sense.

    ``objective`` includes the ``price * alpha`` terms of any caps (virtual
    welfare or cost); ``physical_objective`` leaves them out.
    """

    sense: str
    status: str
    iterations: int
    objective: float | None
    physical_objective: float | None
    lmp: dict[str, float | None]
    dispatch: dict[str, float | None]
    consumption: dict[str, float | None]
    caps: list[CapRecord] = field(default_factory=list)

    def to_dict(self) -> dict:
        return asdict(self)


def make_record(p: Problem, sol: Solution) -> OutputRecord:
    case, rm = p.case, p.capped_rowmap
    ok = sol.optimal

    def var(label):
        return float(sol.x[rm.var(label)]) if ok else None

    lmp = {bus: (float(sol.nu[idx]) if ok else None) for bus, idx in rm.balance}
    dispatch = {g.id: var(f"pg[{g.id}]") for g in case.generators}
    consumption = {ld.id: (ld.pmin if ld.fixed else var(f"pl[{ld.id}]")) for ld in case.loads}
    caps, objective, physical = [], None, None
    report = interpret(sol, rm, p.spec) if ok and p.caps else None
    for (row, price), (bus, _) in zip(p.spec.entries, p.caps.items()):
        out = report.by_row(row) if report else None
        caps.append(CapRecord(bus, price, out.alpha if out else None, out.binding if out else None))
    if ok:
        objective = p.capped.display_objective(sol.objective)
        relief = sum(c.price * c.alpha for c in caps)
        physical = objective + relief if case.sense == "max" else objective - relief
    return OutputRecord(case.sense, str(sol.status), sol.iterations, objective, physical,
                        lmp, dispatch, consumption, caps)


def _g(v) -> str:
    if v is None:
        return "-"
    if isinstance(v, bool):
        return "yes" if v else "no"
    v = float(v)
    if abs(v) < 1e-9:
        v = 0.0
    return f"{v:.6g}"


def _table(headers: list[str], rows: list[list]) -> list[str]:
    cells = [headers] + [[c if isinstance(c, str) else _g(c) for c in r] for r in rows]
    widths = [max(len(r[i]) for r in cells) for i in range(len(headers))]
    return ["  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip() for r in cells]


def render_record(rec: OutputRecord, path: str) -> str:
    word = "welfare" if rec.sense == "max" else "cost"
    head = [["case", path], ["status", f"{rec.status} ({rec.iterations} iterations)"]]
    if rec.caps:
        head += [[f"virtual {word}", _g(rec.objective)], [f"physical {word}", _g(rec.physical_objective)]]
    else:
        head.append([word, _g(rec.objective)])
    width = max(len(k) for k, _ in head)
    lines = [f"{k.ljust(width)}  {v}" for k, v in head]
    lines += [""] + _table(["bus", "lmp"], [[b, v] for b, v in rec.lmp.items()])
    if rec.dispatch:
        lines += [""] + _table(["generator", "dispatch"], [[g, v] for g, v in rec.dispatch.items()])
    if rec.consumption:
        lines += [""] + _table(["load", "consumption"], [[ld, v] for ld, v in rec.consumption.items()])
    if rec.caps:
        lines += [""] + _table(["cap bus", "price", "alpha", "binding"],
                               [[c.bus, c.price, c.alpha, c.binding] for c in rec.caps])
    return "\n".join(lines)


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, allow_nan=False, default=float)


def _clean(obj):
    """Replace non-finite floats by None so output stays valid JSON."""
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    return obj


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def cmd_solve(args, out) -> int:
    p = load_problem(args.case, args.cap)
    sol = solve_problem(p, solver_options(args))
    rec = make_record(p, sol)
    if args.json:
        print(_dump(_clean(dict(case=args.case, **rec.to_dict()))), file=out)
    else:
        print(render_record(rec, args.case), file=out)
    if not sol.optimal:
        print(f"solve ended with status {sol.status}", file=sys.stderr)
        return EXIT_NOT_OPTIMAL
    return EXIT_OK


def _matrix_lines(name: str, M: np.ndarray) -> list[str]:
    if M.ndim == 1:
        return [f"{name} = [" + ", ".join(_g(v) for v in M) + "]"]
    lines = [f"{name} ="]
    lines += ["  [" + ", ".join(_g(v) for v in row) + "]" for row in M]
    return lines


def cmd_dual(args, out) -> int:
    p = load_problem(args.case, args.cap)
    qp, rm = p.capped, p.capped_rowmap
    opts = solver_options(args)
    result: dict = {"case": args.case, "form": "lp" if args.lp else "explicit"}
    lines: list[str] = []
    status_ok = True
    if args.lp:
        try:
            ld = lp_dual(qp, rm)
        except NotLinear as exc:
            raise UsageError(f"{exc} Use --explicit for a strictly convex case.") from None
        rows = describe_lp_dual(ld)
        result["rows"] = rows
        lines += rows
        if args.solve:
            primal = solve(qp, opts)
            dual = solve(ld.qp, opts)
            status_ok = primal.optimal and dual.optimal
            bound = ld.bound(dual.objective) if dual.optimal else None
            result.update(primal_status=str(primal.status), dual_status=str(dual.status),
                          primal_optimum=primal.objective if primal.optimal else None,
                          dual_optimum=bound)
    else:
        try:
            dq = build_dual_qp(qp)
        except NotStrictlyConvex as exc:
            raise UsageError(str(exc)) from None
        result.update(P=dq.P.tolist(), t=dq.t.tolist(), constant=dq.constant, folded=dq.folded)
        lines += ["minimize 1/2 lam'P lam + t'lam - constant  subject to lam >= 0"]
        lines += _matrix_lines("P", dq.P) + _matrix_lines("t", dq.t)
        lines.append(f"constant = {_g(dq.constant)}")
        if dq.folded:
            lines.append("(equality rows folded into +/- inequality pairs)")
        if args.solve:
            primal = solve(qp, opts)
            dual = solve_dual_qp(dq, opts)
            status_ok = primal.optimal and dual.optimal
            bound = dq.bound(dual.objective) if dual.optimal else None
            result.update(primal_status=str(primal.status), dual_status=str(dual.status),
                          primal_optimum=primal.objective if primal.optimal else None,
                          dual_optimum=bound)
            if dual.optimal:
                result["recovered_x"] = dict(zip(rm.variables, recover_primal(qp, dual.x).tolist()))
    if args.solve:
        gap = None
        if status_ok:
            gap = result["primal_optimum"] - result["dual_optimum"]
        result["gap"] = gap
        lines += ["",
                  "values in minimize form:",
                  f"primal optimum  {_g(result['primal_optimum'])}  ({result['primal_status']})",
                  f"dual optimum    {_g(result['dual_optimum'])}  ({result['dual_status']})",
                  f"duality gap     {'-' if gap is None else f'{gap:.3g}'}"]
        if "recovered_x" in result:
            lines += [""] + _table(["variable", "recovered"], [[k, v] for k, v in result["recovered_x"].items()])
    if args.json:
        print(_dump(_clean(result)), file=out)
    else:
        print("\n".join(lines), file=out)
    if not status_ok:
        print("primal or dual solve not optimal", file=sys.stderr)
        return EXIT_NOT_OPTIMAL
    return EXIT_OK


def cmd_check(args, out) -> int:
    p = load_problem(args.case, args.cap)
    opts = solver_options(args)
    sol = solve_problem(p, opts)
    if not sol.optimal:
        if args.json:
            print(_dump({"case": args.case, "status": str(sol.status)}), file=out)
        else:
            print(f"status  {sol.status}", file=out)
        print(f"solve ended with status {sol.status}", file=sys.stderr)
        return EXIT_NOT_OPTIMAL
    qp, rm = p.capped, p.capped_rowmap
    kkt = kkt_residuals(qp, sol, rm, tol=max(args.tol, 1e-8))
    balance_rows = [rm.balance_row(bus).label for bus, _ in rm.balance]
    with ThreadPoolExecutor(max_workers=args.jobs) as pool:
        sens = list(pool.map(lambda r: sensitivity_check(qp, rm, r, opts=opts, base=sol), balance_rows))
    diff = None
    if p.caps:
        orig = solve(p.qp, opts)
        diff = compare_kkt(p.qp, qp, orig, sol, p.rowmap, rm)
    if args.json:
        doc = {"case": args.case, "status": str(sol.status), "kkt": kkt.to_dict(),
               "sensitivity": [s.to_dict() for s in sens],
               "kkt_diff": diff.to_dict() if diff else None}
        print(_dump(_clean(doc)), file=out)
        return EXIT_OK
    lines = [f"status  {sol.status}",
             f"KKT     {'pass' if kkt.passed else 'FAIL'} at tol {kkt.tol:g}"]
    lines += [f"  {name:<16}{_g(getattr(kkt, name)) if getattr(kkt, name) >= 1e-9 else '0'}"
              for name in ("stationarity", "primal", "dual", "complementarity")]
    if kkt.violated:
        lines.append("  violated: " + ", ".join(kkt.violated))
    lines += ["", "sensitivity (finite difference vs dual)"]
    rows = []
    for s in sens:
        verdict = "ok" if s.accepted else ("degenerate" if s.degenerate else
                                           ("mismatch" if s.status == "Optimal" else s.status))
        rows.append([s.row, s.analytic, s.estimate, f"{s.abs_error:.2g}" if math.isfinite(s.abs_error) else "-",
                     verdict])
    lines += _table(["row", "dual", "estimate", "error", "result"], rows)
    if diff is not None:
        lines += ["", "KKT conditions changed by caps", diff.render()]
    print("\n".join(lines), file=out)
    return EXIT_OK


SWEEP_HEADER = ("m", "lmp", "alpha", "objective", "status")


def sweep_rows(p: Problem, bus: str, prices, opts: SolverOptions, jobs: int = 1) -> list[tuple]:
    """One ``(m, lmp, alpha, objective, status)`` tuple per cap price, in input order."""
    idx = dict(p.rowmap.balance).get(bus)
    if idx is None:
        raise UsageError(f"unknown bus {bus!r}")

    def point(m):
        q = p.with_caps({**p.caps, bus: float(m)})
        sol = solve_problem(q, opts)
        if not sol.optimal:
            return (float(m), None, None, None, str(sol.status))
        alpha = float(sol.x[q.capped_rowmap.var(f"alpha[{q.rowmap.balance_row(bus).label}]")])
        return (float(m), float(sol.nu[idx]), alpha, q.capped.display_objective(sol.objective),
                str(sol.status))

    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(point, prices))


def _csv_cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return num(0.0 if abs(v) < 1e-12 else v)
    return str(v)


def cmd_sweep(args, out) -> int:
    if not args.start < args.stop:
        raise UsageError("--from must be below --to")
    if args.steps < 2:
        raise UsageError("--steps must be at least 2")
    p = load_problem(args.case, args.cap)
    prices = np.linspace(args.start, args.stop, args.steps)
    rows = sweep_rows(p, args.bus, prices, solver_options(args), args.jobs)
    if args.json:
        doc = [dict(zip(SWEEP_HEADER, r)) for r in rows]
        print(_dump(doc), file=out)
        return EXIT_OK
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(SWEEP_HEADER)
    for r in rows:
        writer.writerow([_csv_cell(v) for v in r])
    out.write(buf.getvalue())
    return EXIT_OK


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------

def _positive_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError("must be at least 1")
    return v


def _positive_float(text: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number, got {text!r}") from None
    if not (v > 0 and math.isfinite(v)):
        raise argparse.ArgumentTypeError("must be positive and finite")
    return v


def _add_common(parser, suppress: bool) -> None:
    def d(value):
        return argparse.SUPPRESS if suppress else value

    parser.add_argument("--json", action="store_true", default=d(False), help="machine-readable output")
    parser.add_argument("--tol", type=_positive_float, default=d(1e-8), help="solver tolerance (default 1e-8)")
    parser.add_argument("--max-iter", type=_positive_int, default=d(200), help="solver iteration limit")
    parser.add_argument("--jobs", type=_positive_int, default=d(1), help="parallel solves for sweep/check")
    parser.add_argument("--cap", type=parse_cap, action="append", metavar="BUS=PRICE",
                        default=d(None), help="cap the price at a bus; repeatable, overrides file caps")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="capdispatch", description="Dispatch with price caps: solve, dualize, verify, sweep.")
    _add_common(parser, suppress=False)
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    def command(name, help_text):
        sp = sub.add_parser(name, help=help_text, description=help_text)
        sp.add_argument("case", help="JSON case file")
        _add_common(sp, suppress=True)
        return sp

    command("solve", "solve a case and print prices, dispatch and caps").set_defaults(func=cmd_solve)

    sp = command("dual", "print (and optionally solve) the dual problem")
    form = sp.add_mutually_exclusive_group(required=True)
    form.add_argument("--lp", action="store_true", help="LP dual (linear cases)")
    form.add_argument("--explicit", action="store_true", help="closed-form QP dual (strictly convex cases)")
    sp.add_argument("--solve", action="store_true", help="solve both sides and report the gap")
    sp.set_defaults(func=cmd_dual)

    command("check", "KKT residuals, price sensitivity and cap diff").set_defaults(func=cmd_check)

    sp = command("sweep", "CSV of price, relief and objective over a range of caps")
    sp.add_argument("--bus", required=True, help="bus to cap")
    sp.add_argument("--from", dest="start", type=float, required=True, help="first cap price")
    sp.add_argument("--to", dest="stop", type=float, required=True, help="last cap price")
    sp.add_argument("--steps", type=int, required=True, help="number of prices (>= 2)")
    sp.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    args = build_parser().parse_args(argv)
    try:
        return args.func(args, out)
    except FileNotFoundError as exc:
        print(f"capdispatch: error: cannot read case file {exc.filename or args.case!r}", file=sys.stderr)
    except IsADirectoryError:
        print(f"capdispatch: error: {args.case!r} is a directory", file=sys.stderr)
    except (UsageError, CapDispatchError) as exc:
        print(f"capdispatch: error: {exc}", file=sys.stderr)
    return EXIT_USAGE
