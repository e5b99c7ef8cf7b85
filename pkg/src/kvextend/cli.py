"""Command-line front end.

::

    kvextend validate FILE
    kvextend extend FILE --variant plain --at=0.5,1 [--at=...] [--verify]
    kvextend grid FILE --variant kv --bbox=-2..2 --resolution 5 [--output out.csv]

FILE is a JSON document ``{"dim": n, "kind": "monotone" | "firmly" |
"nonexpansive", "graph": [{"x": [...], "y": [...]}, ...]}``.

What gets printed depends on the kind of the input: for nonexpansive data
the extension ``T~(x)`` (or ``P_D T~(x)`` with ``--variant kv``), for firmly
nonexpansive data ``F~(x)``, and for monotone data the resolvent ``J(x)``
of the extended operator.

Exit codes: 0 ok, 1 validation failure, 2 parse or usage error, 3 numerical
failure, 4 I/O error.
"""

from __future__ import annotations

import argparse
import csv
import io
import itertools
import json
import sys
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import (
    ConsistencyError,
    ConvergenceError,
    FacetLimitError,
    GraphStructureError,
    SolverError,
)
from .extension import KVExtension, NonexpansiveExtension, ResolventResult, Variant, build
from .graph import Kind, OperatorGraph, firmly_to_monotone, validate
from .proximal import psi_solve, verify_certificate

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_PARSE = 2
EXIT_NUMERIC = 3
EXIT_IO = 4

MAX_GRID_DIM = 3
VARIANTS = ("plain", "constrained", "projected", "kv")

_NUMERIC_ERRORS = (SolverError, ConsistencyError, ConvergenceError, FacetLimitError)


class CliError(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


def load_document(path: str) -> OperatorGraph:
    try:
        with open(path, "rb") as fh:
            raw = fh.read()
    except OSError as exc:
        raise CliError(f"cannot read {path}: {exc.strerror}", EXIT_IO) from exc
    try:
        doc = json.loads(raw)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise CliError(f"{path}: not valid JSON ({exc})", EXIT_PARSE) from exc
    return parse_document(doc)


def parse_document(doc) -> OperatorGraph:
    if not isinstance(doc, dict):
        raise CliError("document must be a JSON object", EXIT_PARSE)
    missing = [k for k in ("dim", "kind", "graph") if k not in doc]
    if missing:
        raise CliError(f"missing field(s): {', '.join(missing)}", EXIT_PARSE)
    dim, kind, graph = doc["dim"], doc["kind"], doc["graph"]
    if not isinstance(dim, int) or isinstance(dim, bool) or dim < 1:
        raise CliError("dim must be a positive integer", EXIT_PARSE)
    if kind not in {k.value for k in Kind}:
        raise CliError(f"kind must be one of monotone, firmly, nonexpansive; got {kind!r}",
                       EXIT_PARSE)
    if not isinstance(graph, list) or not graph:
        raise CliError("graph must be a nonempty list", EXIT_PARSE)
    pairs = []
    for i, entry in enumerate(graph):
        if not isinstance(entry, dict) or "x" not in entry or "y" not in entry:
            raise CliError(f"graph[{i}] must be an object with x and y", EXIT_PARSE)
        x, y = _vector(entry["x"], dim, f"graph[{i}].x"), _vector(entry["y"], dim, f"graph[{i}].y")
        pairs.append((x, y))
    try:
        return OperatorGraph.from_pairs(kind, pairs, dim)
    except GraphStructureError as exc:
        raise CliError(str(exc), EXIT_PARSE) from exc


def _vector(v, dim: int, where: str) -> list[float]:
    ok = isinstance(v, list) and all(
        isinstance(c, (int, float)) and not isinstance(c, bool) for c in v)
    if not ok:
        raise CliError(f"{where} must be an array of numbers", EXIT_PARSE)
    if len(v) != dim:
        raise CliError(f"{where} has length {len(v)}, expected {dim}", EXIT_PARSE)
    return v


def _fmt(v: float) -> str:
    return repr(float(v))


def _row(values) -> str:
    return ",".join(_fmt(v) for v in values)


@dataclass
class Evaluation:
    value: np.ndarray
    resolvent: ResolventResult
    certificate: Callable[[], dict] | None


class Evaluator:
    """Maps a query point to the output appropriate for the input kind."""

    def __init__(self, g: OperatorGraph, variant: str):
        if variant not in VARIANTS:
            raise CliError(f"unknown variant {variant!r}", EXIT_PARSE)
        if variant == "kv" and g.kind is not Kind.NONEXPANSIVE:
            raise CliError("--variant kv needs nonexpansive input", EXIT_PARSE)
        self.graph = g
        if g.kind is Kind.NONEXPANSIVE:
            if variant == "kv":
                self.handle = KVExtension(g)
                self.operator = self.handle.base.operator
            else:
                self.handle = NonexpansiveExtension(g, variant)
                self.operator = self.handle.operator
        else:
            mono = g if g.kind is Kind.MONOTONE else firmly_to_monotone(g)
            self.handle = None
            self.operator = build(mono, Variant(variant))

    def __call__(self, x: np.ndarray) -> Evaluation:
        if self.handle is not None:
            value, res = self.handle.evaluate(x)
        else:
            res = self.operator.resolve(x)
            value = res.point
        return Evaluation(value, res, self._certificate(x, res))

    def _certificate(self, x, res: ResolventResult):
        prog = self.operator.prog
        if prog is None:
            return None

        def run():
            u = res.point
            out = psi_solve(prog, u, x - u)
            rep = verify_certificate(prog, out.certificate)
            return {"membership_gap": out.gap, **rep.details}

        return run


def _parse_point(text: str, dim: int) -> np.ndarray:
    try:
        vals = [float(t) for t in text.split(",")]
    except ValueError as exc:
        raise CliError(f"bad point {text!r}", EXIT_PARSE) from exc
    if len(vals) != dim or not all(np.isfinite(vals)):
        raise CliError(f"point {text!r} must have {dim} finite coordinates", EXIT_PARSE)
    return np.array(vals)


def _parse_bbox(specs: list[str], dim: int) -> list[tuple[float, float]]:
    out = []
    for text in specs:
        lo, sep, hi = text.partition("..")
        try:
            box = (float(lo), float(hi))
        except ValueError as exc:
            raise CliError(f"bad --bbox {text!r}; expected lo..hi", EXIT_PARSE) from exc
        if not sep or not all(np.isfinite(box)) or box[0] > box[1]:
            raise CliError(f"bad --bbox {text!r}; expected lo..hi with lo <= hi", EXIT_PARSE)
        out.append(box)
    if len(out) == 1:
        out = out * dim
    if len(out) != dim:
        raise CliError(f"--bbox given {len(out)} times; expected 1 or {dim}", EXIT_PARSE)
    return out


def _validated(g: OperatorGraph, out) -> OperatorGraph:
    report = validate(g)
    if not report.ok:
        _print_report(g, report, out)
        raise CliError("graph fails validation", EXIT_VALIDATION)
    return g


def _print_report(g: OperatorGraph, report, out) -> None:
    if report.ok:
        print(f"valid {g.kind.value} graph: {len(g)} pairs in dimension {g.dim}", file=out)
        return
    print(f"invalid {g.kind.value} graph: {len(report.violations)} violating ordered pairs",
          file=out)
    for i, j, s in report.violations:
        print(f"  pair ({i}, {j}) slack {_fmt(s)}", file=out)


def cmd_validate(args, out) -> int:
    g = load_document(args.file)
    report = validate(g)
    _print_report(g, report, out)
    return EXIT_OK if report.ok else EXIT_VALIDATION


def cmd_extend(args, out) -> int:
    g = _validated(load_document(args.file), out)
    points = [_parse_point(p, g.dim) for p in args.at]
    ev = Evaluator(g, args.variant)
    for x in points:
        e = ev(x)
        print(_row(e.value), file=out)
        if args.verify:
            fields = {"gap": e.resolvent.gap}
            if e.certificate is not None:
                fields.update(e.certificate())
            print("  " + " ".join(f"{k}={_fmt(v)}" for k, v in fields.items()), file=out)
    return EXIT_OK


def grid_rows(ev: Evaluator, boxes, resolution: int):
    """``(x, t, gap)`` for every grid point, last axis varying fastest."""
    axes = [np.linspace(lo, hi, resolution) for lo, hi in boxes]
    for x in itertools.product(*axes):
        x = np.array(x)
        e = ev(x)
        yield x, e.value, e.resolvent.gap


def render_grid(ev: Evaluator, boxes, resolution: int) -> str:
    n = len(boxes)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow([f"x{i + 1}" for i in range(n)] + [f"t{i + 1}" for i in range(n)] + ["gap"])
    for x, t, gap in grid_rows(ev, boxes, resolution):
        w.writerow([_fmt(v) for v in itertools.chain(x, t, [gap])])
    return buf.getvalue()


def cmd_grid(args, out) -> int:
    g = _validated(load_document(args.file), out)
    if g.dim > MAX_GRID_DIM:
        raise CliError(f"grid needs dim <= {MAX_GRID_DIM}, got {g.dim}", EXIT_PARSE)
    if args.resolution < 1:
        raise CliError("--resolution must be positive", EXIT_PARSE)
    boxes = _parse_bbox(args.bbox, g.dim)
    text = render_grid(Evaluator(g, args.variant), boxes, args.resolution)
    if args.output is None:
        out.write(text)
        return EXIT_OK
    try:
        with open(args.output, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise CliError(f"cannot write {args.output}: {exc.strerror}", EXIT_IO) from exc
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="kvextend",
        description="Extend monotone, firmly nonexpansive and nonexpansive maps given by finite data.",
    )
    sub = p.add_subparsers(dest="command", required=True)

    v = sub.add_parser("validate", help="check the kind-specific pairwise inequalities")
    v.add_argument("file")
    v.set_defaults(func=cmd_validate)

    e = sub.add_parser("extend", help="evaluate the extension at query points")
    e.add_argument("file")
    e.add_argument("--variant", choices=VARIANTS, default="plain")
    e.add_argument("--at", action="append", required=True, metavar="V1,V2,...",
                   help="query point; repeatable (write --at=-1,2 for negative leading values)")
    e.add_argument("--verify", action="store_true",
                   help="also print the resolvent gap and certificate residuals")
    e.set_defaults(func=cmd_extend)

    gr = sub.add_parser("grid", help="evaluate on a regular grid and write CSV")
    gr.add_argument("file")
    gr.add_argument("--variant", choices=VARIANTS, default="plain")
    gr.add_argument("--bbox", action="append", required=True, metavar="LO..HI",
                    help="axis range; give once for all axes or once per axis")
    gr.add_argument("--resolution", type=int, default=11, help="points per axis")
    gr.add_argument("--output", help="CSV path (default: stdout)")
    gr.set_defaults(func=cmd_grid)
    return p


def main(argv=None, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args, out)
    except CliError as exc:
        print(f"kvextend: {exc}", file=err)
        return exc.code
    except GraphStructureError as exc:
        # raised when converting between kinds, e.g. a non-injective F
        print(f"kvextend: {exc}", file=err)
        return EXIT_VALIDATION
    except _NUMERIC_ERRORS as exc:
        print(f"kvextend: numerical failure: {exc}", file=err)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
