"""Bag encoding of UA-relations and the rewriting that lets a plain bag
engine (or a SQL database) evaluate queries over them."""

from __future__ import annotations

import itertools
from typing import Any, Mapping

from .expr import Expr, attrs_of, map_attrs, to_sql
from .kdb import (
    CrossProduct,
    FlagMinProject,
    Join,
    KRelation,
    Project,
    RA_PLUS,
    RelRef,
    Schema,
    Select,
    Union,
    relations_of,
    schema_of,
)
from .semirings import N, PairSemiring, UAPair

FLAG = "C"


class RewriteError(ValueError):
    pass


def _check_flags_agree() -> None:
    # min on the RA side and product on the SQL side must agree on 0/1 flags
    for a, b in itertools.product((0, 1), repeat=2):
        assert min(a, b) == a * b


_check_flags_agree()


# -- encoding --------------------------------------------------------------------


def enc(r: KRelation) -> KRelation:
    """``[d, c]`` becomes ``(t, 1)`` with count ``c`` and ``(t, 0)`` with ``d - c``."""
    if r.semiring != PairSemiring(N):
        raise RewriteError(f"enc expects pairs over N, got {r.semiring.name}")
    if FLAG in r.schema.attributes:
        raise RewriteError(f"{r.schema.name} already has an attribute named {FLAG}")
    schema = Schema(
        r.schema.name, r.schema.attributes + (FLAG,), r.schema.qualifiers + (r.schema.name,)
    )
    rows = []
    for t, (d, c) in r.items():
        assert d >= c, f"{t}: certain count {c} exceeds best-guess count {d}"
        rows.append((t + (1,), c))
        rows.append((t + (0,), d - c))
    return KRelation(schema, N, rows, check=False)


def dec(r: KRelation) -> KRelation:
    """Inverse of :func:`enc`: ``d`` sums both flags, ``c`` is the flag-1 count."""
    if r.semiring is not N:
        raise RewriteError(f"dec expects an N-relation, got {r.semiring.name}")
    attrs = r.schema.attributes
    if not attrs or attrs[-1] != FLAG:
        raise RewriteError(f"last attribute must be {FLAG}, got {r.schema.names()}")
    out: dict[tuple, list[int]] = {}
    for t, k in r.items():
        flag = t[-1]
        if flag not in (0, 1) or isinstance(flag, bool):
            raise RewriteError(f"flag column holds {flag!r}, expected 0 or 1")
        pair = out.setdefault(t[:-1], [0, 0])
        pair[0] += k
        if flag == 1:
            pair[1] += k
    schema = r.schema.pick(range(len(attrs) - 1))
    return KRelation(
        schema, PairSemiring(N), ((t, UAPair(d, c)) for t, (d, c) in out.items()), check=False
    )


def enc_db(db: Mapping[str, KRelation]) -> dict[str, KRelation]:
    return {n: enc(r) for n, r in db.items()}


# -- relational algebra rewriting ------------------------------------------------


def _shift_positions(pred: Expr, split: int) -> Expr:
    """Positional references into the right join input move past the left flag."""

    def shift(ref: str) -> str:
        if ref.startswith("#") and int(ref[1:]) >= split:
            return f"#{int(ref[1:]) + 1}"
        return ref

    return map_attrs(pred, shift)


def _has_positional(pred: Expr) -> bool:
    return any(ref.startswith("#") for ref in attrs_of(pred))


def rewrite_ra(q: Any, schemas: Mapping[str, Schema] | None = None) -> Any:
    """Translate a query over UA-relations into one over their encodings.

    Selections and unions pass through, projections keep the flag, joins
    keep the smaller of the two flags. ``schemas`` is only needed when a
    join predicate refers to attributes by position.
    """
    if not isinstance(q, RA_PLUS):
        raise RewriteError(f"cannot rewrite {type(q).__name__}; only RA+ is supported")
    if isinstance(q, RelRef):
        return q
    if isinstance(q, Select):
        return Select(q.pred, rewrite_ra(q.child, schemas))
    if isinstance(q, Project):
        if FLAG in q.attrs:
            raise RewriteError(f"attribute name {FLAG} is reserved for the certainty flag")
        return Project(q.attrs + (FLAG,), rewrite_ra(q.child, schemas))
    if isinstance(q, Union):
        return Union(rewrite_ra(q.left, schemas), rewrite_ra(q.right, schemas))
    left, right = rewrite_ra(q.left, schemas), rewrite_ra(q.right, schemas)
    if isinstance(q, CrossProduct):
        return FlagMinProject(CrossProduct(left, right), FLAG)
    pred = q.pred
    if _has_positional(pred):
        if schemas is None:
            raise RewriteError("positional references in a join need the input schemas")
        pred = _shift_positions(pred, schema_of(q.left, schemas).arity)
    return FlagMinProject(Join(pred, left, right), FLAG)


# -- SQL -------------------------------------------------------------------------


class _Aliases:
    def __init__(self) -> None:
        self.counter = itertools.count(1)

    def next(self) -> str:
        return f"Q{next(self.counter)}"


def _sql_attr(
    ref: str,
    sides: list[tuple[str, set[str]]] | None,
    schema: Schema | None = None,
) -> str:
    if ref.startswith("#"):
        if schema is None:
            raise RewriteError("positional references need input schemas to emit SQL")
        i = int(ref[1:])
        return schema.attributes[i]
    if "." in ref and sides:
        qual, attr = ref.split(".", 1)
        for alias, rels in sides:
            if qual in rels:
                return f"{alias}.{attr}"
    return ref


def _columns(q: Any, schemas: Mapping[str, Schema] | None) -> list[str] | None:
    if schemas is None:
        return None
    return list(schema_of(q, schemas).attributes)


def emit_sql(q: Any, schemas: Mapping[str, Schema] | None = None) -> str:
    """SQL over encoded tables (each with a trailing 0/1 column ``C``).

    With ``schemas`` the join lists its columns explicitly; without them
    it selects ``Q1.*, Q2.*`` as the rewrite templates do.
    """
    if not isinstance(q, RA_PLUS):
        raise RewriteError(f"cannot emit SQL for {type(q).__name__}")
    return _sql(q, _Aliases(), schemas)


def _from_item(q: Any, aliases: _Aliases, schemas: Mapping[str, Schema] | None) -> tuple[str, str]:
    alias = aliases.next()
    if isinstance(q, RelRef):
        return f"{q.name} {alias}", alias
    return f"({_sql(q, aliases, schemas)}) {alias}", alias


def _sql(q: Any, aliases: _Aliases, schemas: Mapping[str, Schema] | None) -> str:
    if isinstance(q, RelRef):
        return f"SELECT * FROM {q.name}"
    if isinstance(q, Select):
        src, alias = _from_item(q.child, aliases, schemas)
        schema = schema_of(q.child, schemas) if schemas else None
        cond = to_sql(q.pred, lambda r: _sql_attr(r, [(alias, set(relations_of(q.child)))], schema))
        return f"SELECT * FROM {src} WHERE {cond}"
    if isinstance(q, Project):
        src, alias = _from_item(q.child, aliases, schemas)
        schema = schema_of(q.child, schemas) if schemas else None
        sides = [(alias, set(relations_of(q.child)))]
        cols = ", ".join(_sql_attr(a, sides, schema) for a in q.attrs)
        return f"SELECT {cols}, {FLAG} FROM {src}"
    if isinstance(q, Union):
        return f"{_sql(q.left, aliases, schemas)} UNION ALL {_sql(q.right, aliases, schemas)}"
    # join or cross product
    left_src, a1 = _from_item(q.left, aliases, schemas)
    right_src, a2 = _from_item(q.right, aliases, schemas)
    lcols, rcols = _columns(q.left, schemas), _columns(q.right, schemas)
    if lcols is not None and rcols is not None:
        cols = [f"{a1}.{c}" for c in lcols] + [f"{a2}.{c}" for c in rcols]
        select = ", ".join(cols)
    else:
        select = f"{a1}.*, {a2}.*"
    sql = f"SELECT {select}, {a1}.{FLAG}*{a2}.{FLAG} AS {FLAG} FROM {left_src}, {right_src}"
    if isinstance(q, Join):
        sides = [(a1, set(relations_of(q.left))), (a2, set(relations_of(q.right)))]

        def attr(ref: str) -> str:
            if not ref.startswith("#"):
                return _sql_attr(ref, sides)
            if lcols is None or rcols is None:
                raise RewriteError("positional references need input schemas to emit SQL")
            i = int(ref[1:])
            if i < len(lcols):
                return f"{a1}.{lcols[i]}"
            return f"{a2}.{rcols[i - len(lcols)]}"

        sql += " WHERE " + to_sql(q.pred, attr)
    return sql


def emit_labeling_sql(model: str, names: Mapping[str, Any]) -> str:
    """SQL that computes the encoded UA-relation straight from a stored
    uncertain table.

    ``names`` holds ``table`` and ``attrs`` plus, per model, ``P``; ``Xid``,
    ``Aid`` and ``P``; or ``vars`` and ``LC``.
    """
    table = names["table"]
    attrs = list(names["attrs"])
    cols = ", ".join(attrs)
    kind = model.lower()
    if kind == "ti":
        p = names.get("P", "P")
        return (
            f"SELECT {cols}, CASE WHEN {p} = 1 THEN 1 ELSE 0 END AS {FLAG}\n"
            f"FROM {table}\n"
            f"WHERE {p} >= 0.5"
        )
    if kind == "xdb":
        p, xid, aid = names.get("P", "P"), names.get("Xid", "Xid"), names.get("Aid", "Aid")
        return (
            f"SELECT {cols}, CASE WHEN {p} = 1 THEN 1 ELSE 0 END AS {FLAG}\n"
            f"FROM (SELECT {table}.*,\n"
            f"             FIRST_VALUE({aid}) OVER w1 AS best_alt,\n"
            f"             SUM({p}) OVER w2 AS present,\n"
            f"             MAX({p}) OVER w2 AS top\n"
            f"      FROM {table}\n"
            f"      WINDOW w1 AS (PARTITION BY {xid} ORDER BY {p} DESC, {aid} ASC),\n"
            f"             w2 AS (PARTITION BY {xid})) ranked\n"
            f"WHERE {aid} = best_alt AND top >= 1 - present"
        )
    if kind == "ctable":
        lc = names.get("LC", "LC")
        vars_ = list(names.get("vars", [f"V{i}" for i in range(1, len(attrs) + 1)]))
        guard = " AND ".join(f"{v} IS NULL" for v in vars_) or "TRUE"
        return (
            f"SELECT {cols}, CASE WHEN isTautology({lc}) THEN 1 ELSE 0 END AS {FLAG}\n"
            f"FROM {table}\n"
            f"WHERE {guard}"
        )
    raise RewriteError(f"unknown model kind {model!r}")

