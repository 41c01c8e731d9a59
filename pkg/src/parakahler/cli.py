"""Command-line front-end: ``pk classify|construct|verify|rank|counterexample``.

Exit codes: 0 success, 1 usage error, 2 verification failed, 3 not finite-rank
within the cap (or no immersion exists).
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import tempfile
from fractions import Fraction

import numpy as np

from .builder import (NotFiniteRank, assemble_immersion, Immersion, cross_decompose,
                      pde_decompose, verify_immersion)
from .classification import (classify, counterexample_ranks, source_field, space_form_h,
                             veronese)
from .diastasis import DiastasisField, h_expression
from .dsl import DSLError, DomainError, infer_nvars, parse
from .separability import box_grid, build_index_set, sample_rank
from .spaceforms import SpaceFormModel

EXIT_OK, EXIT_USAGE, EXIT_FAILED, EXIT_NOT_FINITE = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def number(text: str):
    """``"3"`` -> int, ``"3/2"`` -> Fraction, anything else -> float."""
    text = text.strip()
    try:
        if "/" in text:
            return Fraction(text)
        return int(text)
    except (ValueError, ZeroDivisionError):
        pass
    try:
        return float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None


def positive(text: str) -> float:
    value = float(number(text))
    if not value > 0:
        raise argparse.ArgumentTypeError(f"must be positive: {text!r}")
    return value


def interval(text: str) -> tuple[float, float]:
    parts = text.split(",")
    if len(parts) != 2:
        raise argparse.ArgumentTypeError(f"expected 'lo,hi', got {text!r}")
    lo, hi = (float(number(p)) for p in parts)
    if not lo < hi:
        raise argparse.ArgumentTypeError(f"empty interval {text!r}")
    return lo, hi


def resolve_box(domains, n: int, default=(-0.4, 0.4)) -> np.ndarray:
    if not domains:
        return np.tile(np.asarray(default, dtype=float), (n, 1))
    if len(domains) == 1:
        return np.tile(np.asarray(domains[0], dtype=float), (n, 1))
    if len(domains) != n:
        raise UsageError(f"--domain given {len(domains)} times for {n} variables")
    return np.asarray(domains, dtype=float)


def _jsonable(value):
    if isinstance(value, Fraction):
        return str(value)
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, (np.floating, np.integer, np.bool_)):
        return value.item()
    return value


def _flatten(prefix: str, value, rows: list) -> None:
    if isinstance(value, dict):
        for k in sorted(value):
            _flatten(f"{prefix}.{k}" if prefix else str(k), value[k], rows)
    elif isinstance(value, list) and any(isinstance(v, (dict, list)) for v in value):
        for i, v in enumerate(value):
            _flatten(f"{prefix}.{i}", v, rows)
    else:
        rows.append((prefix, json.dumps(value) if isinstance(value, list) else value))


def render(report: dict, fmt: str) -> str:
    report = _jsonable(report)
    if fmt == "json":
        return json.dumps(report, sort_keys=True, indent=2) + "\n"
    rows: list = []
    _flatten("", report, rows)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["key", "value"])
    writer.writerows(rows)
    return buf.getvalue()


def write_atomic(path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".pk-", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


# --- commands -------------------------------------------------------------------

def _potential(args):
    n = args.n or infer_nvars(args.potential)
    expr = parse(args.potential, n)
    box = resolve_box(args.domain, n)
    return DiastasisField(expr, box), box


def cmd_classify(args) -> tuple[dict, int]:
    verdict = classify(args.c, args.b, args.n)
    return verdict.to_dict(), EXIT_OK


def _verify_report(imm: Immersion, field: DiastasisField, args) -> tuple[dict, int]:
    report = verify_immersion(imm, field, samples=args.samples, tol=args.tol,
                              holo_tol=args.holo_tol, seed=args.seed)
    return report.to_dict(), EXIT_OK if report.passed else EXIT_FAILED


def cmd_construct(args) -> tuple[dict, int]:
    if args.potential is None:
        if args.b is None or args.n is None:
            raise UsageError("construct needs --potential, or --c, --b and --n")
        verdict = classify(args.c, args.b, args.n)
        out = {"verdict": verdict.to_dict()}
        if not verdict.exists:
            out["error"] = f"no immersion exists: {verdict.reason}"
            return out, EXIT_NOT_FINITE
        c, b, n = float(args.c), float(args.b), args.n
        box = resolve_box(args.domain, n, (-0.3, 0.3))
        field = source_field(c, n, box)
        H = h_expression(field, b)
        method = args.method or ("veronese" if c != 0 else "cross")
    else:
        field, box = _potential(args)
        n, b = field.n, float(args.c)
        H = h_expression(field, b)
        method = args.method or "cross"
        out = {}
    if method == "veronese":
        if args.potential is not None or c == 0:
            raise UsageError("--method veronese needs --c, --b with b/c a positive integer")
        imm = veronese(n, int(round(b / c)), c, tuple(box[0]))
        dec = imm.decomposition
    else:
        try:
            if method == "cross":
                dec = cross_decompose(H, box, tol=args.tol, maxN=args.max_n, seed=args.seed)
            else:
                index = build_index_set(H, max_total_order=args.max_order, domain=box, seed=args.seed)
                out["index_set"] = index.to_dict()
                if not index.certified:
                    out["error"] = "index set did not stabilise: not finite-rank within the cap"
                    return out, EXIT_NOT_FINITE
                dec = pde_decompose(H, index, box, seed=args.seed)
        except NotFiniteRank as exc:
            out["error"] = str(exc)
            out["residual"] = exc.residual
            return out, EXIT_NOT_FINITE
        if dec.N == 0:
            out["error"] = "H vanishes identically"
            return out, EXIT_FAILED
        imm = assemble_immersion(dec, SpaceFormModel(b, dec.N))
    grid = box_grid(box, 8, n, args.seed + 7)
    out["N"] = dec.N
    out["decomposition"] = dec.to_dict()
    out["target"] = imm.target.to_dict()
    out["samples"] = {"xi": grid.tolist(), "u": dec.u(grid).tolist(), "v": dec.v(grid).tolist()}
    out["verification"], code = _verify_report(imm, field, args)
    return out, code


def cmd_verify(args) -> tuple[dict, int]:
    field, box = _potential(args)
    u = [parse(t, field.n) for t in args.u.split(";")]
    v = [parse(t, field.n) for t in args.v.split(";")]
    if len(u) != len(v):
        raise UsageError("--u and --v must list the same number of components")
    dim = args.dim or len(u)
    if dim < len(u):
        raise UsageError("--dim is smaller than the number of components")
    imm = Immersion.from_exprs(SpaceFormModel(float(args.c), dim), u, v)
    report, code = _verify_report(imm, field, args)
    return {"verification": report}, code


def cmd_rank(args) -> tuple[dict, int]:
    field, box = _potential(args)
    H = h_expression(field, float(args.c))
    xi = box_grid(box, args.count, field.n, args.seed)
    eta = box_grid(box, args.count, field.n, args.seed + 1)
    out = {"rank": sample_rank(H, xi, eta, args.tol), "grid": args.count}
    if args.index_set:
        out["index_set"] = build_index_set(H, max_total_order=args.max_order, domain=box,
                                           seed=args.seed).to_dict()
    return out, EXIT_OK


def cmd_counterexample(args) -> tuple[dict, int]:
    out = counterexample_ranks(args.i_max, args.count, tol=args.tol)
    ranks = out["nested_ranks"]
    out["unit_increments"] = all(b - a == 1 for a, b in zip(ranks, ranks[1:]))
    out["restriction_drops"] = out["restricted_rank"] < ranks[0]
    ok = out["unit_increments"] and out["restriction_drops"]
    return out, EXIT_OK if ok else EXIT_FAILED


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="pk", description="Para-Kaehler immersions into space forms.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p, tol=1e-9):
        p.add_argument("--tol", type=positive, default=tol)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--domain", type=interval, action="append",
                       help="'lo,hi'; once for all variables or once per variable")
        p.add_argument("--out", help="report path (stdout if omitted)")
        p.add_argument("--format", choices=("json", "csv"), default="json")

    p = sub.add_parser("classify", help="existence and minimal target dimension")
    common(p)
    p.add_argument("--c", type=number, required=True)
    p.add_argument("--b", type=number, required=True)
    p.add_argument("--n", type=int, required=True)
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("construct", help="build and verify an immersion")
    common(p)
    p.add_argument("--potential")
    p.add_argument("--c", type=number, required=True,
                   help="source curvature (with --b) or target curvature (with --potential)")
    p.add_argument("--b", type=number)
    p.add_argument("--n", type=int)
    p.add_argument("--method", choices=("cross", "pde", "veronese"))
    p.add_argument("--max-n", type=int, default=32)
    p.add_argument("--max-order", type=int, default=10)
    p.add_argument("--samples", type=int, default=100)
    p.add_argument("--holo-tol", type=positive, default=1e-7)
    p.set_defaults(func=cmd_construct)

    p = sub.add_parser("verify", help="check a user-supplied immersion")
    common(p)
    p.add_argument("--potential", required=True)
    p.add_argument("--c", type=number, required=True, help="target curvature")
    p.add_argument("--n", type=int)
    p.add_argument("--u", required=True, help="';'-separated xi-components")
    p.add_argument("--v", required=True, help="';'-separated eta-components")
    p.add_argument("--dim", type=int)
    p.add_argument("--samples", type=int, default=100)
    p.add_argument("--holo-tol", type=positive, default=1e-7)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("rank", help="sample rank of H_c for a potential")
    common(p, tol=1e-8)
    p.add_argument("--potential", required=True)
    p.add_argument("--c", type=number, default=0)
    p.add_argument("--n", type=int)
    p.add_argument("--count", type=int, default=16)
    p.add_argument("--index-set", action="store_true")
    p.add_argument("--max-order", type=int, default=10)
    p.set_defaults(func=cmd_rank)

    p = sub.add_parser("counterexample", help="nested-domain ranks of the bump potential")
    common(p, tol=1e-8)
    p.add_argument("--i-max", type=int, default=3)
    p.add_argument("--count", type=int, default=32)
    p.set_defaults(func=cmd_counterexample)
    return parser


def _config(args) -> dict:
    return {k: _jsonable(v) for k, v in sorted(vars(args).items()) if k not in ("func", "out")}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        report, code = args.func(args)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except (DSLError, DomainError, ValueError) as exc:
        print(f"pk: {exc}", file=sys.stderr)
        return EXIT_USAGE
    report = {"command": args.command, "config": _config(args), "exit_code": code, **report}
    text = render(report, args.format)
    if args.out:
        write_atomic(args.out, text)
    else:
        sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
