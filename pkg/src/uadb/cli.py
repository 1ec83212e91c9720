"""Command-line interface.

    uadb label --model xdb ADDR=addr.csv -o addr.json
    uadb query --db addr.json '(select (= state 'NY') (rel ADDR))'
    uadb query --mode uaa --input food=food.csv --input preference=pref.csv QUERY
    uadb verify --model ti R=r.csv '(project (a) (rel R))'
    uadb rewrite --sql '(join (= R.b S.b) (rel R) (rel S))'
    uadb experiment fnr
    uadb experiment utility

Exit status is 0 on success, 2 when an invariant check fails (an unsound
label, a certain count above its best-guess count) and 1 for bad usage or
bad input.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from pathlib import Path
from typing import Any, Sequence

from . import uaa
from .experiments import (
    InvariantViolation,
    fnr_experiment,
    labeled_uadb,
    utility_experiment,
    verify,
)
from .conditions import ConditionError
from .expr import ExprError
from .kdb import KdbError, KRelation, format_cell, query_text, render_table, schema_of
from .models import Model, ModelError, load_model
from .rewriter import RewriteError, emit_labeling_sql, emit_sql, rewrite_ra
from .semirings import BY_NAME, as_count
from .sexpr import ParseError, parse_query
from .uadatabase import (
    UADB,
    SandwichViolation,
    eval_ua,
    from_json,
    relation_to_json,
    render_ua,
    to_json,
)
from .worlds import DEFAULT_BUDGET, WorldError

BUDGET_ENV = "UADB_WORLD_BUDGET"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # type: ignore[override]
        raise UsageError(f"{self.prog}: {message}")


def _budget(args: argparse.Namespace) -> int:
    if args.budget is not None:
        value = args.budget
    else:
        raw = os.environ.get(BUDGET_ENV)
        try:
            value = int(raw) if raw else DEFAULT_BUDGET
        except ValueError:
            raise UsageError(f"{BUDGET_ENV}={raw!r} is not an integer") from None
    if value < 1:
        raise UsageError("world budget must be at least 1")
    return value


def _split_input(spec: str) -> tuple[str | None, Path]:
    name, sep, path = spec.partition("=")
    if sep and name and "/" not in name:
        return name, Path(path)
    return None, Path(spec)


def _load_models(args: argparse.Namespace) -> dict[str, Model]:
    if args.input and not args.model:
        raise UsageError("--model is required to read uncertain inputs")
    extra: dict[str, Any] = {}
    if args.vars:
        extra["variables_spec"] = json.loads(Path(args.vars).read_text())
    models: dict[str, Model] = {}
    for spec in args.input:
        name, path = _split_input(spec)
        m = load_model(args.model, path, name, **extra)
        models[m.schema.name] = m
    for spec in args.certain:
        # a plain table is a TI-DB without optional rows
        name, path = _split_input(spec)
        m = load_model("ti", path, name)
        models[m.schema.name] = m
    if not models:
        raise UsageError("no inputs given")
    return models


def _load_uadb(args: argparse.Namespace) -> UADB:
    relations: dict[str, KRelation] = {}
    base = None
    for path in args.db or ():
        db = from_json(json.loads(Path(path).read_text()))
        if base is not None and db.base is not base:
            raise UsageError(f"{path}: semiring {db.base.name} differs from {base.name}")
        base = db.base
        relations.update(db.relations)
    if args.input or args.certain:
        db = labeled_uadb(_load_models(args), BY_NAME[args.semiring], args.seed)
        if base is not None and db.base is not base:
            raise UsageError("labeled inputs and --db files use different semirings")
        base = db.base
        relations.update(db.relations)
    if base is None:
        raise UsageError("give --db files or --input files with --model")
    return UADB(relations, base)


def _load_annotated(args: argparse.Namespace) -> dict[str, KRelation]:
    out: dict[str, KRelation] = {}
    for spec in args.input:
        name, path = _split_input(spec)
        if args.model:
            if args.model != "xdb":
                raise UsageError("attribute-level mode reads annotated CSV/JSON or x-DB inputs")
            m = load_model("xdb", path, name)
            out[m.schema.name] = uaa.annotate_xdb(m, args.seed)
        elif path.suffix == ".json":
            obj = json.loads(path.read_text())
            for rel_name, rel in obj.items():
                out[rel_name] = uaa.from_json(rel_name, rel)
        else:
            r = uaa.read_annotated_csv(path, name)
            out[r.schema.name] = r
    for spec in args.certain:
        name, path = _split_input(spec)
        m = load_model("ti", path, name)
        rows = [(tuple(uaa.certain(v) for v in r.values), uaa.CERTAIN_ROW) for r in m.rows]
        out[m.schema.name] = KRelation(m.schema, uaa.UA, rows)
    if not out:
        raise UsageError("no inputs given")
    return out


def _write(args: argparse.Namespace, text: str) -> None:
    if getattr(args, "output", None):
        Path(args.output).write_text(text if text.endswith("\n") else text + "\n")
    else:
        print(text.rstrip("\n"))


def _ua_csv(r: KRelation) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(r.schema.names() + ["u", "c"])
    base = r.semiring.base
    for t, p in r.items():
        d, c = as_count(base, p.d), as_count(base, p.c)
        w.writerow([format_cell(v) for v in t] + [d - c, c])
    return buf.getvalue()


# -- commands --------------------------------------------------------------------


def cmd_label(args: argparse.Namespace) -> int:
    db = labeled_uadb(_load_models(args), BY_NAME[args.semiring], args.seed)
    if args.format == "table":
        text = "\n\n".join(f"{n}\n{render_ua(r)}" for n, r in sorted(db.relations.items()))
    else:
        text = json.dumps(to_json(db), indent=2)
    _write(args, text)
    return 0


def cmd_query(args: argparse.Namespace) -> int:
    q = parse_query(args.query)
    if args.emit_sql:
        schemas = None
        if args.db or args.input or args.certain:
            schemas = {n: r.schema for n, r in _load_uadb(args).relations.items()}
        _write(args, emit_sql(q, schemas))
        return 0
    if args.mode == "uaa":
        result = uaa.eval_uaa(_load_annotated(args), q)
        if args.format == "json":
            text = json.dumps(uaa.to_json(result), indent=2)
        elif args.format == "csv":
            buf = io.StringIO()
            uaa.write_annotated_csv(result, buf)
            text = buf.getvalue()
        else:
            text = uaa.render(result)
        _write(args, text)
        return 0
    db = _load_uadb(args)
    result = eval_ua(db, q)
    if args.format == "json":
        text = json.dumps(relation_to_json(result), indent=2)
    elif args.format == "csv":
        text = _ua_csv(result)
    else:
        text = render_ua(result)
    _write(args, text)
    return 0


def cmd_verify(args: argparse.Namespace) -> int:
    q = parse_query(args.query)
    report = verify(_load_models(args), q, BY_NAME[args.semiring], args.seed, _budget(args))
    if args.format == "json":
        _write(args, json.dumps(report.as_dict(), indent=2))
    else:
        _write(
            args,
            "\n".join(f"{k}: {v}" for k, v in report.as_dict().items()),
        )
    return 0


def cmd_rewrite(args: argparse.Namespace) -> int:
    if args.labeling:
        if not args.table or not args.attrs:
            raise UsageError("--labeling needs --table and --attrs")
        _write(args, emit_labeling_sql(args.labeling, {"table": args.table, "attrs": args.attrs}))
        return 0
    if not args.query:
        raise UsageError("rewrite needs a query or --labeling")
    q = parse_query(args.query)
    schemas = None
    if args.db or args.input or args.certain:
        schemas = {n: r.schema for n, r in _load_uadb(args).relations.items()}
        schema_of(q, schemas)
    if args.sql:
        _write(args, emit_sql(q, schemas))
    else:
        _write(args, query_text(rewrite_ra(q, schemas)))
    return 0


def cmd_fnr(args: argparse.Namespace) -> int:
    res = fnr_experiment(args.rows, args.columns, args.rate, args.queries, args.seed)
    if args.format == "json":
        text = json.dumps({"by_width": res.by_width, "runs": res.runs}, indent=2)
    elif args.format == "csv":
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=list(res.runs[0]), lineterminator="\n")
        w.writeheader()
        w.writerows(res.runs)
        text = buf.getvalue()
    else:
        rows = [
            [str(wd)] + [f"{s[k]:.3f}" for k in ("q1", "median", "q3", "max")]
            for wd, s in sorted(res.by_width.items())
        ]
        text = render_table(["width", "q1", "median", "q3", "max"], rows)
        text += f"\nmedians non-increasing: {res.non_increasing()}"
        text += f"\nruntime: {res.runtime_s:.2f}s"
    _write(args, text)
    return 0


def cmd_utility(args: argparse.Namespace) -> int:
    try:
        rates = [float(x) for x in args.rates.split(",") if x]
    except ValueError:
        raise UsageError(f"--rates expects comma-separated numbers, got {args.rates!r}") from None
    res = utility_experiment(args.rows, rates, args.queries, args.seed)
    for rate, reports in res.items():
        if reports["ua"].recall < reports["certain"].recall:
            raise InvariantViolation(f"best-guess recall below certain-only recall at rate {rate}")
    flat = [
        {"rate": rate, "answers": kind, "precision": r.precision, "recall": r.recall}
        for rate, reports in res.items()
        for kind, r in reports.items()
    ]
    if args.format == "json":
        text = json.dumps(flat, indent=2)
    elif args.format == "csv":
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=list(flat[0]), lineterminator="\n")
        w.writeheader()
        w.writerows(flat)
        text = buf.getvalue()
    else:
        text = render_table(
            ["rate", "answers", "precision", "recall"],
            [[str(f["rate"]), f["answers"], f"{f['precision']:.4f}", f"{f['recall']:.4f}"] for f in flat],
        )
    _write(args, text)
    return 0


# -- argument parsing ------------------------------------------------------------


def _inputs(p: argparse.ArgumentParser, model_required: bool = False) -> None:
    p.add_argument("--model", choices=("ti", "xdb", "ctable"), required=model_required)
    p.add_argument(
        "--input", "-i", action="append", default=[], metavar="[NAME=]PATH",
        help="uncertain relation file; the name defaults to the file stem",
    )
    p.add_argument(
        "--certain", action="append", default=[], metavar="[NAME=]PATH",
        help="deterministic relation file (plain CSV)",
    )
    p.add_argument("--vars", help="JSON with C-table variable domains and global condition")
    p.add_argument("--semiring", choices=("B", "N"), default="N")
    p.add_argument("--seed", type=int, default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="uadb", description="Uncertainty-annotated databases")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("label", help="label uncertain inputs and write a UA-database")
    _inputs(p, model_required=True)
    p.add_argument("inputs", nargs="*", metavar="[NAME=]PATH")
    p.add_argument("--format", choices=("json", "table"), default="json")
    p.add_argument("--output", "-o")
    p.set_defaults(func=cmd_label)

    p = sub.add_parser("query", help="evaluate a query over a UA-database")
    _inputs(p)
    p.add_argument("query")
    p.add_argument("--db", action="append", default=[], help="UA-database JSON from 'label'")
    p.add_argument("--mode", choices=("ua", "uaa"), default="ua")
    p.add_argument("--emit-sql", action="store_true", help="print the rewritten SQL instead")
    p.add_argument("--format", choices=("table", "json", "csv"), default="table")
    p.add_argument("--output", "-o")
    p.set_defaults(func=cmd_query)

    p = sub.add_parser("verify", help="compare labeled answers with world enumeration")
    _inputs(p, model_required=True)
    p.add_argument("query")
    p.add_argument("--budget", type=int, default=None, help=f"world budget (env {BUDGET_ENV})")
    p.add_argument("--format", choices=("text", "json"), default="text")
    p.add_argument("--output", "-o")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("rewrite", help="print the query over the bag encoding")
    _inputs(p)
    p.add_argument("query", nargs="?")
    p.add_argument("--db", action="append", default=[])
    p.add_argument("--sql", action="store_true")
    p.add_argument("--labeling", choices=("ti", "xdb", "ctable"), help="labeling SQL for a stored table")
    p.add_argument("--table")
    p.add_argument("--attrs", nargs="+")
    p.add_argument("--output", "-o")
    p.set_defaults(func=cmd_rewrite)

    p = sub.add_parser("experiment", help="desk-scale experiments")
    exp = p.add_subparsers(dest="experiment", required=True, parser_class=_Parser)
    f = exp.add_parser("fnr", help="false negative rate by projection width")
    f.add_argument("--rows", type=int, default=1000)
    f.add_argument("--columns", type=int, default=8)
    f.add_argument("--rate", type=float, default=0.1)
    f.add_argument("--queries", type=int, default=9)
    f.add_argument("--seed", type=int, default=0)
    f.add_argument("--format", choices=("table", "json", "csv"), default="table")
    f.add_argument("--output", "-o")
    f.set_defaults(func=cmd_fnr)
    u = exp.add_parser("utility", help="precision/recall against a ground truth")
    u.add_argument("--rows", type=int, default=500)
    u.add_argument("--rates", default="0.1,0.3,0.5")
    u.add_argument("--queries", type=int, default=30)
    u.add_argument("--seed", type=int, default=0)
    u.add_argument("--format", choices=("table", "json", "csv"), default="table")
    u.add_argument("--output", "-o")
    u.set_defaults(func=cmd_utility)
    return parser


INPUT_ERRORS = (
    KdbError,
    ModelError,
    ConditionError,
    ExprError,
    ParseError,
    RewriteError,
    WorldError,
    OSError,
    KeyError,
    ValueError,
)


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if getattr(args, "inputs", None):
            args.input = list(args.input) + list(args.inputs)
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (InvariantViolation, SandwichViolation) as exc:
        print(f"invariant violated: {exc}", file=sys.stderr)
        return 2
    except INPUT_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
