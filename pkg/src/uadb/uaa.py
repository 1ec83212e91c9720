"""Attribute-level uncertainty: values tagged certain or uncertain, and how
those tags and the row-level ``[d, c]`` pairs move through queries."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Iterable, Mapping, NamedTuple

from .expr import (
    And,
    Arith,
    Attr,
    Compare,
    Concat,
    Const,
    Expr,
    ExprError,
    ExprTypeError,
    IfThenElse,
    Not,
    Or,
    arith,
    compare,
    concat,
    to_sexpr,
    truth,
)
from .kdb import (
    CrossProduct,
    Join,
    KRelation,
    Project,
    QueryError,
    RelRef,
    Schema,
    Select,
    Union,
    format_cell,
    parse_cell,
    render_table,
    tuple_key,
    value_key,
)
from .models import XDB, xdb_choices
from .semirings import N, PairSemiring, UAPair, render_uc

UA = PairSemiring(N)
CERTAIN_ROW = UAPair(1, 1)  # (u,c) = (0,1)
UNCERTAIN_ROW = UAPair(1, 0)  # (u,c) = (1,0)
NO_ROW = UAPair(0, 0)


@dataclass(frozen=True)
class AnnotatedValue:
    value: Any
    det: bool = True

    def sort_key(self) -> tuple:
        return (value_key(self.value), self.det)

    def __str__(self) -> str:
        return f"{format_cell(self.value)}^{'T' if self.det else 'F'}"


def certain(v: Any) -> AnnotatedValue:
    return AnnotatedValue(v, True)


def uncertain(v: Any) -> AnnotatedValue:
    return AnnotatedValue(v, False)


def val(v: AnnotatedValue) -> Any:
    return v.value


def det(v: AnnotatedValue) -> bool:
    return v.det


def strip(t: Iterable[AnnotatedValue]) -> tuple:
    return tuple(v.value for v in t)


class AnnotatedTuple(NamedTuple):
    values: tuple[AnnotatedValue, ...]
    row: UAPair


def annotated_rows(r: KRelation) -> list[AnnotatedTuple]:
    return [AnnotatedTuple(t, p) for t, p in r.items()]


# -- expressions -----------------------------------------------------------------


def _product_rule(op: str, a: AnnotatedValue, b: AnnotatedValue) -> AnnotatedValue:
    v = arith(op, a.value, b.value)
    if op == "*" and ((a.value == 0 and a.det) or (b.value == 0 and b.det)):
        return AnnotatedValue(v, True)
    return AnnotatedValue(v, a.det and b.det)


def _and_rule(a: AnnotatedValue, b: AnnotatedValue) -> AnnotatedValue:
    v1, v2 = truth(a.value), truth(b.value)
    d = (not v1 and a.det) or (not v2 and b.det) or (a.det and b.det)
    return AnnotatedValue(v1 and v2, d)


def _or_rule(a: AnnotatedValue, b: AnnotatedValue) -> AnnotatedValue:
    v1, v2 = truth(a.value), truth(b.value)
    d = (v1 and a.det) or (v2 and b.det) or (a.det and b.det)
    return AnnotatedValue(v1 or v2, d)


AnnotatedFn = Callable[[tuple], AnnotatedValue]


def compile_annotated(e: Expr, resolve: Callable[[str], int]) -> AnnotatedFn:
    if isinstance(e, Attr):
        i = resolve(e.ref)
        return lambda t: t[i]
    if isinstance(e, Const):
        c = e.value if isinstance(e.value, AnnotatedValue) else AnnotatedValue(e.value, True)
        return lambda t: c
    if isinstance(e, Compare):
        op = e.op
        l, r = compile_annotated(e.left, resolve), compile_annotated(e.right, resolve)

        def cmp(t: tuple) -> AnnotatedValue:
            a, b = l(t), r(t)
            return AnnotatedValue(compare(op, a.value, b.value), a.det and b.det)

        return cmp
    if isinstance(e, Arith):
        op = e.op
        l, r = compile_annotated(e.left, resolve), compile_annotated(e.right, resolve)
        return lambda t: _product_rule(op, l(t), r(t))
    if isinstance(e, Concat):
        l, r = compile_annotated(e.left, resolve), compile_annotated(e.right, resolve)

        def cat(t: tuple) -> AnnotatedValue:
            a, b = l(t), r(t)
            return AnnotatedValue(concat(a.value, b.value), a.det and b.det)

        return cat
    if isinstance(e, Not):
        a = compile_annotated(e.arg, resolve)

        def neg(t: tuple) -> AnnotatedValue:
            x = a(t)
            return AnnotatedValue(not truth(x.value), x.det)

        return neg
    if isinstance(e, And):
        l, r = compile_annotated(e.left, resolve), compile_annotated(e.right, resolve)
        return lambda t: _and_rule(l(t), r(t))
    if isinstance(e, Or):
        l, r = compile_annotated(e.left, resolve), compile_annotated(e.right, resolve)
        return lambda t: _or_rule(l(t), r(t))
    if isinstance(e, IfThenElse):
        c = compile_annotated(e.cond, resolve)
        a, b = compile_annotated(e.then, resolve), compile_annotated(e.orelse, resolve)

        def ite(t: tuple) -> AnnotatedValue:
            x, y, z = c(t), a(t), b(t)
            v1 = truth(x.value)
            d = (v1 and x.det and y.det) or (not v1 and x.det and z.det)
            return AnnotatedValue(y.value if v1 else z.value, d)

        return ite
    raise ExprError(f"not an expression: {e!r}")


def eval_expr(e: Expr, t: Iterable[AnnotatedValue], schema: Schema | None = None) -> AnnotatedValue:
    """Evaluate over annotated values. Without a schema, attributes must be
    positional (``#i``)."""
    t = tuple(t)
    if schema is not None:
        resolve = schema.resolve
    else:

        def resolve(ref: str) -> int:
            if not ref.startswith("#"):
                raise ExprError(f"attribute {ref!r} needs a schema")
            return int(ref[1:])

    return compile_annotated(e, resolve)(t)


def trans(res: AnnotatedValue) -> UAPair:
    """Row annotation of a predicate result: certainly true, possibly true, or dropped."""
    if not isinstance(res.value, bool):
        raise ExprTypeError(f"trans expects a boolean, got {res.value!r}")
    if res.value and res.det:
        return CERTAIN_ROW
    if res.value:
        return UNCERTAIN_ROW
    return NO_ROW


def unit(p: UAPair) -> UAPair:
    d, c = p
    if c > 0:
        return CERTAIN_ROW
    if d - c > 0:
        return UNCERTAIN_ROW
    return NO_ROW


# -- query nodes beyond RA+ ------------------------------------------------------


@dataclass(frozen=True)
class ExtendedProject:
    """Projection onto named expressions."""

    items: tuple[tuple[str, Expr], ...]
    child: Any

    def to_text(self, render: Callable[[Any], str]) -> str:
        parts = " ".join(
            name if isinstance(e, Attr) and e.ref == name else f"(as {name} {to_sexpr(e)})"
            for name, e in self.items
        )
        return f"(project ({parts}) {render(self.child)})"


@dataclass(frozen=True)
class Aggregate:
    group_attrs: tuple[str, ...]
    fn: str
    attr: str | None
    child: Any
    name: str | None = None

    def __post_init__(self) -> None:
        if self.fn not in AGGREGATES:
            raise QueryError(f"unknown aggregate {self.fn!r}")
        if self.fn != "count" and self.attr is None:
            raise QueryError(f"{self.fn} needs an attribute")

    def to_text(self, render: Callable[[Any], str]) -> str:
        target = self.fn if self.attr is None else f"({self.fn} {self.attr})"
        return f"(aggregate ({' '.join(self.group_attrs)}) {target} {render(self.child)})"


@dataclass(frozen=True)
class Difference:
    left: Any
    right: Any

    def to_text(self, render: Callable[[Any], str]) -> str:
        return f"(diff {render(self.left)} {render(self.right)})"


AGGREGATES = ("count", "sum", "min", "max")


# -- evaluation ------------------------------------------------------------------


def _ua_rel(schema: Schema, rows: Iterable[tuple[tuple, UAPair]]) -> KRelation:
    return KRelation(schema, UA, rows, check=False)


def eval_uaa(db: Mapping[str, KRelation], q: Any) -> KRelation:
    if isinstance(q, RelRef):
        if q.name not in db:
            raise QueryError(f"unknown relation {q.name!r}")
        return db[q.name]

    if isinstance(q, Select):
        r = eval_uaa(db, q.child)
        theta = compile_annotated(q.pred, r.schema.resolve)
        return _ua_rel(r.schema, ((t, UA.mul(p, trans(theta(t)))) for t, p in r.items()))

    if isinstance(q, (Join, CrossProduct)):
        left, right = eval_uaa(db, q.left), eval_uaa(db, q.right)
        schema = left.schema.concat(right.schema)
        theta = compile_annotated(q.pred, schema.resolve) if isinstance(q, Join) else None
        rows = []
        right_items = right.items()
        for t1, p1 in left.items():
            for t2, p2 in right_items:
                t = t1 + t2
                p = UA.mul(p1, p2)
                if theta is not None:
                    p = UA.mul(p, trans(theta(t)))
                rows.append((t, p))
        return _ua_rel(schema, rows)

    if isinstance(q, Project):
        r = eval_uaa(db, q.child)
        idx = [r.schema.resolve(a) for a in q.attrs]
        rows = [(tuple(t[i] for i in idx), p) for t, p in r.items()]
        return _ua_rel(r.schema.pick(idx), rows)

    if isinstance(q, ExtendedProject):
        r = eval_uaa(db, q.child)
        fns = [compile_annotated(e, r.schema.resolve) for _, e in q.items]
        schema = Schema(r.schema.name, tuple(name for name, _ in q.items))
        rows = [(tuple(f(t) for f in fns), p) for t, p in r.items()]
        return _ua_rel(schema, rows)

    if isinstance(q, Union):
        left, right = eval_uaa(db, q.left), eval_uaa(db, q.right)
        if not left.schema.same_attributes(right.schema):
            raise QueryError(f"union of {left.schema.names()} and {right.schema.names()}")
        return _ua_rel(left.schema, left.items() + right.items())

    if isinstance(q, Aggregate):
        r = eval_uaa(db, q.child)
        return eval_aggregate(r, q.group_attrs, q.fn, q.attr, q.name)

    if isinstance(q, Difference):
        return eval_difference(eval_uaa(db, q.left), eval_uaa(db, q.right))

    raise QueryError(f"not a query node: {q!r}")


def _aggregate_values(fn: str, members: list[tuple[Any, int]]) -> Any:
    """``members`` are (value, best-guess multiplicity) pairs."""
    if fn == "count":
        return sum(m for _, m in members)
    values = [v for v, _ in members if v is not None]
    for v in values:
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            if fn == "sum":
                raise ExprTypeError(f"cannot sum non-numeric value {v!r}")
    if fn == "sum":
        return sum(v * m for v, m in members if v is not None)
    if not values:
        return None
    try:
        return min(values) if fn == "min" else max(values)
    except TypeError:
        raise ExprTypeError(f"{fn} over incomparable values {values}") from None


def eval_aggregate(
    r: KRelation,
    group_attrs: Iterable[str],
    agg_fn: str,
    agg_attr: str | None = None,
    name: str | None = None,
) -> KRelation:
    """Group on stripped values and aggregate over the best-guess world.

    The row annotation is the unit form of the group's summed rows. Group
    labels come from a member whose own unit matches the group's; the
    aggregate column is always uncertain.
    """
    if agg_fn not in AGGREGATES:
        raise QueryError(f"unknown aggregate {agg_fn!r}")
    group_attrs = tuple(group_attrs)
    gidx = [r.schema.resolve(a) for a in group_attrs]
    aidx = r.schema.resolve(agg_attr) if agg_attr is not None else None
    if agg_fn != "count" and aidx is None:
        raise QueryError(f"{agg_fn} needs an attribute")
    out_name = name or (agg_fn if agg_attr is None else f"{agg_fn}_{agg_attr.split('.')[-1]}")
    schema = r.schema.pick(gidx)
    schema = Schema(r.schema.name, schema.attributes + (out_name,), schema.qualifiers + (None,))

    groups: dict[tuple, list[tuple[tuple, UAPair]]] = {}
    for t, p in r.items():
        key = tuple(t[i].value for i in gidx)
        groups.setdefault(key, []).append((t, p))

    rows = []
    for key, members in groups.items():
        total = UA.sum(p for _, p in members)
        row = unit(total)
        if row == NO_ROW:
            continue
        if len(gidx) > 1:
            labels = [False] * len(gidx)
        else:
            matching = [t for t, p in members if unit(p) == row]
            best = min(
                matching,
                key=lambda t: (-sum(t[i].det for i in gidx), tuple_key(t)),
            )
            labels = [best[i].det for i in gidx]
        src = [(t[aidx].value if aidx is not None else None, p.d) for t, p in members]
        agg = _aggregate_values(agg_fn, src)
        values = tuple(AnnotatedValue(v, b) for v, b in zip(key, labels))
        rows.append((values + (AnnotatedValue(agg, False),), row))
    return _ua_rel(schema, rows)


def eval_difference(left: KRelation, right: KRelation) -> KRelation:
    """Bag difference of best-guess multiplicities on stripped tuples.

    Nothing in the output is claimed certain: rows are ``(u,0)`` and every
    attribute is labeled uncertain.
    """
    if not left.schema.same_attributes(right.schema):
        raise QueryError(f"difference of {left.schema.names()} and {right.schema.names()}")
    counts: dict[tuple, int] = {}
    for t, p in left.items():
        k = strip(t)
        counts[k] = counts.get(k, 0) + p.d
    for t, p in right.items():
        k = strip(t)
        if k in counts:
            counts[k] -= p.d
    rows = [
        (tuple(AnnotatedValue(v, False) for v in k), UAPair(m, 0))
        for k, m in counts.items()
        if m > 0
    ]
    return _ua_rel(left.schema, rows)


# -- building and reading annotated relations ------------------------------------


def annotate(r: KRelation) -> KRelation:
    """Lift a plain pair-annotated relation: every value certain."""
    return _ua_rel(r.schema, ((tuple(certain(v) for v in t), p) for t, p in r.items()))


def strip_relation(r: KRelation) -> KRelation:
    """Drop attribute labels, summing rows that become identical."""
    return KRelation(r.schema, UA, ((strip(t), p) for t, p in r.items()), check=False)


def annotate_xdb(db: XDB, seed: int | None = None) -> KRelation:
    """One annotated row per x-tuple present in the best-guess world.

    Attributes on which all alternatives agree are certain. The row is
    certain when the x-tuple is not optional.
    """
    rows = []
    for x, i in zip(db.xtuples, xdb_choices(db, seed)):
        if i is None:
            continue
        pick = x.alternatives[i]
        labels = [len({a[j] for a in x.alternatives}) == 1 for j in range(db.schema.arity)]
        values = tuple(AnnotatedValue(v, b) for v, b in zip(pick, labels))
        rows.append((values, UNCERTAIN_ROW if x.optional else CERTAIN_ROW))
    return _ua_rel(db.schema, rows)


def parse_uc(u: str, c: str) -> UAPair:
    """``(u,c)`` display numbers to a canonical ``[d,c]`` pair."""
    uu, cc = int(u), int(c)
    if uu < 0 or cc < 0:
        raise ValueError(f"negative multiplicity in ({u},{c})")
    return UAPair(uu + cc, cc)


def read_annotated_csv(path: str | Path, name: str | None = None) -> KRelation:
    """Cells ending in ``!u`` are uncertain. Optional ``_u`` and ``_c``
    columns give the row annotation in ``(u,c)`` form; the default is a
    single certain row."""
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise ValueError(f"{path}: empty file") from None
        attrs = [h for h in header if h not in ("_u", "_c")]
        schema = Schema.base(name or path.stem, attrs)
        pos = {h: i for i, h in enumerate(header)}
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise ValueError(f"{path}:{lineno}: expected {len(header)} cells, got {len(row)}")
            values = []
            for a in attrs:
                cell = row[pos[a]]
                if cell.endswith("!u"):
                    values.append(AnnotatedValue(parse_cell(cell[:-2]), False))
                else:
                    values.append(AnnotatedValue(parse_cell(cell), True))
            try:
                p = parse_uc(
                    row[pos["_u"]] if "_u" in pos else "0",
                    row[pos["_c"]] if "_c" in pos else "1",
                )
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: {exc}") from None
            rows.append((tuple(values), p))
    return _ua_rel(schema, rows)


def write_annotated_csv(r: KRelation, fh: Any) -> None:
    w = csv.writer(fh)
    w.writerow(list(r.schema.names()) + ["_u", "_c"])
    for t, (d, c) in r.items():
        cells = [format_cell(v.value) + ("" if v.det else "!u") for v in t]
        w.writerow(cells + [d - c, c])


def to_json(r: KRelation) -> dict:
    return {
        "schema": list(r.schema.attributes),
        "rows": [
            {
                "values": [{"value": v.value, "det": v.det} for v in t],
                "u": p.d - p.c,
                "c": p.c,
            }
            for t, p in r.items()
        ],
    }


def from_json(name: str, obj: Mapping[str, Any]) -> KRelation:
    schema = Schema.base(name, obj["schema"])
    rows = []
    for row in obj["rows"]:
        values = tuple(AnnotatedValue(v["value"], bool(v["det"])) for v in row["values"])
        rows.append((values, parse_uc(row["u"], row["c"])))
    return KRelation(schema, UA, rows)


def render(r: KRelation) -> str:
    rows = [[str(v) for v in t] + [render_uc(N, p)] for t, p in r.items()]
    return render_table(r.schema.names() + ["(u,c)"], rows)
