"""Command-line front end.

Exit codes: 0 ok or FEASIBLE, 2 negative verdict, 3 undecided, 64 usage or
parse error, 65 inconsistent data (dimensions, domain, positivity).
"""

from __future__ import annotations

import argparse
import os
import sys
import warnings
from dataclasses import dataclass, field
from importlib import resources
from typing import Optional

import numpy as np

from . import __version__
from .agler_cone import ConeStatus, agler_feasibility, row_cone_check
from .errors import InfeasibleError, UCNormError
from .formats import (
    FactFile,
    ParseError,
    certificate_lines,
    colligation_body,
    fmt_complex,
    fmt_real,
    matrix_lines,
    read_cone,
    read_fact,
    read_pick,
    read_poly,
    read_tuple,
    render,
    tuple_body,
    write_atomic,
    write_fact,
    write_poly,
    write_tuple,
)
from .opspace import Base, Kind, OperatorSpaceSpec, is_cc, kv_tuple
from .pick import pick_solve
from .polyeval import SamplingPlan, eval_point, eval_tuple, kv_polynomial, sup_norm_lb, twozw_polynomial, uc_norm_lb
from .realization import (
    ConditioningWarning,
    build_colligation,
    sample_ball,
    twozw_f,
    twozw_sigma,
    verify_factorization,
)
from .tensor_core import op_norm

EXIT_OK = 0
EXIT_NEGATIVE = 2
EXIT_UNDECIDED = 3
EXIT_PARSE = 64
EXIT_DATA = 65


@dataclass
class RunConfig:
    seed: int = 0
    tolerances: dict = field(default_factory=dict)
    budgets: dict = field(default_factory=dict)
    output: Optional[str] = None

    @classmethod
    def from_args(cls, args: argparse.Namespace) -> "RunConfig":
        tol = {"tol": args.tol} if args.tol is not None else {}
        budgets = {k: getattr(args, k) for k in ("budget", "degree_cap", "max_iter") if getattr(args, k) is not None}
        return cls(args.seed, tol, budgets, args.out)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_PARSE, f"{self.prog}: error: {message}\n")


def _read(path: str) -> str:
    try:
        with open(path, encoding="utf-8") as fh:
            return fh.read()
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc.strerror}") from exc


def _emit(cfg: RunConfig, text: str) -> None:
    if cfg.output:
        write_atomic(cfg.output, text)
    sys.stdout.write(text)


def _report(command: str, lines: list[str]) -> str:
    return render("report", [f"command {command}"] + lines)


def _space(label: str, n: int) -> OperatorSpaceSpec:
    try:
        return OperatorSpaceSpec.parse(label, n)
    except (ValueError, UCNormError) as exc:
        raise ParseError(f"bad --space {label!r}: {exc}") from exc


# ---------------------------------------------------------------------------
# commands


def cmd_verify_factorization(args, cfg: RunConfig) -> int:
    fact = read_fact(_read(args.file))
    data = fact.data()
    tol = cfg.tolerances.get("tol", 1e-10)
    check = verify_factorization(data, tol)
    lines = [
        f"points {data.points.shape[0]}",
        f"n {data.points.shape[1]}",
        f"N {data.n_out}",
        f"k {data.k}",
        f"residual {fmt_real(check.residual)}",
        f"tol {fmt_real(tol)}",
        f"pass {'true' if check.passed else 'false'}",
    ]
    _emit(cfg, _report("verify-factorization", lines))
    return EXIT_OK if check.passed else EXIT_NEGATIVE


def cmd_realize(args, cfg: RunConfig) -> int:
    data = read_fact(_read(args.file)).data()
    tol = cfg.tolerances.get("tol", 1e-9)
    try:
        col = build_colligation(data, tol=tol)
    except InfeasibleError as exc:
        sys.stderr.write(f"realize: {exc}\n")
        return EXIT_NEGATIVE
    _emit(cfg, render("colligation", colligation_body(col)))
    return EXIT_OK


def _parse_point(text: str, n: int) -> np.ndarray:
    try:
        z = np.array([complex(part.strip().replace(" ", "")) for part in text.split(",")])
    except ValueError as exc:
        raise ParseError(f"bad point {text!r}; use e.g. '0.5,0.1+0.2j'") from exc
    if z.shape[0] != n:
        raise ParseError(f"point has {z.shape[0]} coordinates, polynomial has {n} variables")
    return z


def cmd_eval(args, cfg: RunConfig) -> int:
    p = read_poly(_read(args.file))
    if (args.at is None) == (args.tuple is None):
        raise ParseError("give exactly one of --at or --tuple")
    if args.at is not None:
        value = eval_point(p, _parse_point(args.at, p.n))
        where = ["at " + " ".join(fmt_complex(z) for z in _parse_point(args.at, p.n))]
    else:
        value = eval_tuple(p, read_tuple(_read(args.tuple)))
        where = [f"tuple {os.path.basename(args.tuple)}"]
    lines = where + [
        f"norm {fmt_real(op_norm(value))}",
        f"value {value.shape[0]} {value.shape[1]}",
    ] + matrix_lines(value)
    _emit(cfg, _report("eval", lines))
    return EXIT_OK


def cmd_vn_search(args, cfg: RunConfig) -> int:
    p = read_poly(_read(args.file))
    e = _space(args.space or "max-l1", p.n)
    budget = cfg.budgets.get("budget", 200)
    degree_cap = cfg.budgets.get("degree_cap", 6)
    dual = e.base.dual
    plan = SamplingPlan(points=max(budget, 64) * 16, grid=args.grid, seed=cfg.seed)
    families = ("normal", "nilpotent", "library") if args.include_library_tuples else ("normal", "nilpotent")
    bound = uc_norm_lb(
        p, e, budget=budget, seed=cfg.seed, plan=plan, families=families,
        da_degrees=range(1, degree_cap + 1),
    )
    sup = sup_norm_lb(p, dual, plan)
    tol = cfg.tolerances.get("tol", 1e-9)
    verdict = is_cc(e, bound.witness, tol=tol, seed=cfg.seed)
    lines = [
        f"space {e.label}",
        f"domain-ball {dual.value}",
        f"uc-lower-bound {fmt_real(bound.value)}",
        f"family {bound.family}",
        f"sup-norm-estimate {fmt_real(sup)}",
        f"gap {fmt_real(bound.value - sup)}",
        f"violation {'true' if bound.value > sup + tol else 'false'}",
        f"witness-verdict {verdict.status.value}",
        "section witness",
    ] + tuple_body(bound.witness)
    _emit(cfg, _report("vn-search", lines))
    return EXIT_OK


def cmd_pick(args, cfg: RunConfig) -> int:
    prob = read_pick(_read(args.file))
    res = pick_solve(
        prob,
        max_iter=cfg.budgets.get("max_iter", 10_000),
        tol=cfg.tolerances.get("tol", 1e-6),
    )
    lines = [f"space {prob.spec.label}", f"status {res.status.value}"]
    if res.min_eigenvalue is not None:
        lines.append(f"min-eigenvalue {fmt_real(res.min_eigenvalue)}")
    if res.certificate is not None and res.certificate.iterations:
        lines.append(f"iterations {res.certificate.iterations}")
        lines.append(f"cone-residual {fmt_real(res.certificate.residual)}")
    if res.feasible:
        lines.append(f"node-error {fmt_real(res.node_error)}")
        lines.append("section witness")
        lines += tuple_body(res.witness.T)
        lines.append(f"vectors {res.witness.v.shape[0]} {res.witness.v.shape[1]}")
        lines += matrix_lines(res.witness.v)
        lines.append("section interpolant")
        lines += colligation_body(res.interpolant)
    _emit(cfg, _report("pick", lines))
    return res.status.exit_code


def cmd_cone(args, cfg: RunConfig) -> int:
    prob = read_cone(_read(args.file))
    tol = cfg.tolerances.get("tol")
    if prob.spec.kind in (Kind.ROW, Kind.COLUMN):
        cert = row_cone_check(prob, tol=1e-9 if tol is None else tol)
    else:
        cert = agler_feasibility(
            prob, max_iter=cfg.budgets.get("max_iter", 10_000), tol=1e-6 if tol is None else tol
        )
    _emit(cfg, render("cone-certificate", [f"space {prob.spec.label}"] + certificate_lines(cert)))
    return EXIT_OK if cert.status is ConeStatus.FEASIBLE else EXIT_UNDECIDED


# ---------------------------------------------------------------------------
# bundled examples


def twozw_fact(count: int = 12, seed: int = 0) -> FactFile:
    points = sample_ball(Base.L2, count, 2, np.random.default_rng(seed), radius=0.95)
    return FactFile(points, twozw_sigma(), twozw_f(), twozw_polynomial())


def example_files(name: str) -> dict:
    if name == "kv":
        return {"kv.tuple": write_tuple(kv_tuple()), "kv.poly": write_poly(kv_polynomial())}
    if name == "twozw":
        return {"twozw.fact": write_fact(twozw_fact()), "twozw.poly": write_poly(twozw_polynomial())}
    raise ParseError(f"unknown example {name!r}; choose kv or twozw")


def bundled(name: str) -> str:
    """Text of a file shipped in ``ucnorm/data``."""
    return resources.files("ucnorm").joinpath("data", name).read_text(encoding="utf-8")


def cmd_examples(args, cfg: RunConfig) -> int:
    files = example_files(args.name)
    directory = cfg.output or "."
    os.makedirs(directory, exist_ok=True)
    for fname, text in files.items():
        path = os.path.join(directory, fname)
        write_atomic(path, text)
        sys.stdout.write(f"wrote {path}\n")
    return EXIT_OK


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="random seed (default 0)")
    common.add_argument("--tol", type=float, default=None, help="decision tolerance")
    common.add_argument("--budget", type=int, default=None, help="number of random candidates")
    common.add_argument("--space", default=None, help="operator space, e.g. max-l1, row, column, min-linf")
    common.add_argument("--degree-cap", type=int, default=None, help="largest truncation degree")
    common.add_argument("--max-iter", type=int, default=None, help="solver iteration cap")
    common.add_argument("--out", default=None, help="output file (directory for 'examples')")

    parser = _Parser(prog="ucnorm", description="Universal operator algebra norms, realizations and interpolation.")
    parser.add_argument("--version", action="version", version=f"ucnorm {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("verify-factorization", parents=[common], help="check a factorization file")
    p.add_argument("file")
    p.set_defaults(func=cmd_verify_factorization)

    p = sub.add_parser("realize", parents=[common], help="build a unitary colligation")
    p.add_argument("file")
    p.set_defaults(func=cmd_realize)

    p = sub.add_parser("eval", parents=[common], help="evaluate a polynomial at a point or tuple")
    p.add_argument("file")
    p.add_argument("--at", default=None, help="comma-separated coordinates, e.g. '0.5,0.1+0.2j'")
    p.add_argument("--tuple", default=None, help="tuple file")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("vn-search", parents=[common], help="search for von Neumann inequality violations")
    p.add_argument("file")
    p.add_argument("--grid", type=int, default=None, help="torus grid size per angle for polydisk domains")
    p.add_argument("--include-library-tuples", action="store_true", help="also try the built-in tuples")
    p.set_defaults(func=cmd_vn_search)

    p = sub.add_parser("pick", parents=[common], help="solve a Pick interpolation problem")
    p.add_argument("file")
    p.set_defaults(func=cmd_pick)

    p = sub.add_parser("cone", parents=[common], help="finite-set cone membership")
    p.add_argument("file")
    p.set_defaults(func=cmd_cone)

    p = sub.add_parser("examples", parents=[common], help="write bundled example files")
    p.add_argument("name", choices=["kv", "twozw"])
    p.set_defaults(func=cmd_examples)
    return parser


def main(argv: Optional[list] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    cfg = RunConfig.from_args(args)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", ConditioningWarning)
            return args.func(args, cfg)
    except ParseError as exc:
        sys.stderr.write(f"ucnorm {args.command}: {exc}\n")
        return EXIT_PARSE
    except UCNormError as exc:
        sys.stderr.write(f"ucnorm {args.command}: {type(exc).__name__}: {exc}\n")
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
