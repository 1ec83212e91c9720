"""Seeded generators for tiny uncertain instances and RA+ queries.

Instances stay small (a handful of tuples, tens of worlds) so the
world-enumeration oracle is exact and fast.
"""

from __future__ import annotations

import itertools
import math
import random
from typing import Any

from uadb.conditions import TRUE, AndC, Atom, NotC, OrC, Var, holds
from uadb.expr import NEGATED, And, Arith, Attr, Compare, Concat, Const, IfThenElse, Not, Or
from uadb.kdb import CrossProduct, Join, KRelation, Project, RelRef, Schema, Select, Union, schema_of
from uadb.models import CRow, CTable, TIDB, TIRow, XDB, XTuple, Variable
from uadb.semirings import N, PairSemiring, UAPair

DOMAIN = (0, 1, 2)
SCHEMAS = {
    "R": Schema.base("R", ["a", "b"]),
    "S": Schema.base("S", ["b", "c"]),
}
MAX_WORLDS = 64


def _distinct_tuples(rng: random.Random, arity: int, k: int) -> list[tuple]:
    pool = list(itertools.product(DOMAIN, repeat=arity))
    return rng.sample(pool, min(k, len(pool)))


def random_ti(rng: random.Random, schema: Schema, probabilities: bool | None = None) -> TIDB:
    if probabilities is None:
        probabilities = rng.random() < 0.5
    rows = []
    for t in _distinct_tuples(rng, schema.arity, rng.randint(0, 6)):
        optional = rng.random() < 0.5
        if probabilities:
            p = 1.0 if not optional else rng.choice((0.2, 0.5, 0.7, 0.9))
            rows.append(TIRow(t, optional, p))
        else:
            rows.append(TIRow(t, optional))
    return TIDB(schema, tuple(rows))


def random_xdb(rng: random.Random, schema: Schema, probabilities: bool | None = None) -> XDB:
    """At most six alternatives in total and at most 64 worlds."""
    if probabilities is None:
        probabilities = rng.random() < 0.5
    while True:
        budget = 6
        xtuples = []
        for _ in range(rng.randint(0, 4)):
            if budget == 0:
                break
            k = rng.randint(1, min(3, budget))
            budget -= k
            alts = tuple(_distinct_tuples(rng, schema.arity, k))
            optional = rng.random() < 0.3
            probs = None
            if probabilities:
                mass = rng.choice((0.6, 0.9)) if optional else 1.0
                weights = [rng.randint(1, 4) for _ in alts]
                probs = [mass * w / sum(weights) for w in weights]
                probs[-1] = mass - sum(probs[:-1])
                probs = tuple(probs)
            xtuples.append(XTuple(alts, optional, probs))
        db = XDB(schema, tuple(xtuples))
        if math.prod(len(x.alternatives) + x.optional for x in db.xtuples) <= MAX_WORLDS:
            return db


def _random_atom(rng: random.Random, names: list[str]) -> Atom:
    op = rng.choice(("=", "<>", "<", "<=", ">", ">="))
    left: Any = Var(rng.choice(names))
    right: Any = rng.choice(DOMAIN) if rng.random() < 0.8 else Var(rng.choice(names))
    return Atom(op, left, right)


def random_condition(rng: random.Random, names: list[str], depth: int = 2) -> Any:
    r = rng.random()
    if depth == 0 or r < 0.3:
        return TRUE if rng.random() < 0.15 else _random_atom(rng, names)
    if r < 0.45:
        # a clause that is a tautology by a complementary pair
        a = _random_atom(rng, names)
        return OrC((a, Atom(NEGATED[a.op], a.left, a.right)))
    if r < 0.6:
        return NotC(random_condition(rng, names, depth - 1))
    parts = tuple(random_condition(rng, names, depth - 1) for _ in range(rng.randint(2, 3)))
    return AndC(parts) if rng.random() < 0.5 else OrC(parts)


def random_ctable(rng: random.Random, schema: Schema, probabilities: bool | None = None) -> CTable:
    if probabilities is None:
        probabilities = rng.random() < 0.5
    names = ["X", "Y"][: rng.randint(1, 2)]
    variables = []
    for n in names:
        dom = tuple(rng.sample(DOMAIN, rng.randint(1, 3)))
        probs = None
        if probabilities:
            weights = [rng.randint(1, 4) for _ in dom]
            probs = [w / sum(weights) for w in weights]
            probs[-1] = 1.0 - sum(probs[:-1])
            probs = tuple(probs)
        variables.append(Variable(n, dom, probs))
    rows = []
    for _ in range(rng.randint(0, 5)):
        values = tuple(
            Var(rng.choice(names)) if rng.random() < 0.25 else rng.choice(DOMAIN)
            for _ in range(schema.arity)
        )
        cond = random_condition(rng, names) if rng.random() < 0.7 else TRUE
        rows.append(CRow(values, cond))
    global_cond = TRUE
    if rng.random() < 0.2:
        global_cond = _random_atom(rng, names)
    return CTable(schema, tuple(rows), tuple(variables), global_cond)


def random_model(rng: random.Random, schema: Schema, kind: str | None = None) -> Any:
    kind = kind or rng.choice(("ti", "xdb", "ctable"))
    if kind == "ti":
        return random_ti(rng, schema)
    if kind == "xdb":
        return random_xdb(rng, schema)
    return random_ctable(rng, schema)


def random_models(rng: random.Random, kind: str | None = None) -> dict[str, Any]:
    """Both relations; a C-table whose global condition admits no valuation
    is replaced."""
    out = {}
    for name, schema in SCHEMAS.items():
        while True:
            m = random_model(rng, schema, kind)
            if isinstance(m, CTable) and not any(
                holds(m.global_condition, v) for v, _ in m.valuations()
            ):
                continue
            out[name] = m
            break
    return out


# -- queries -------------------------------------------------------------------


def _refs(schema: Schema, rng: random.Random) -> list[str]:
    """An unambiguous reference for every position, sometimes positional."""
    out = []
    for i, (a, q) in enumerate(zip(schema.attributes, schema.qualifiers)):
        candidates = [f"#{i}"]
        if schema.attributes.count(a) == 1:
            candidates.append(a)
        if q is not None and sum(
            1 for a2, q2 in zip(schema.attributes, schema.qualifiers) if a2 == a and q2 == q
        ) == 1:
            candidates.append(f"{q}.{a}")
        named = [c for c in candidates if not c.startswith("#")]
        out.append(rng.choice(named) if named and rng.random() < 0.8 else rng.choice(candidates))
    return out


def random_predicate(rng: random.Random, schema: Schema) -> Any:
    refs = _refs(schema, rng)

    def atom() -> Any:
        op = rng.choice(("=", "<>", "<", "<=", ">", ">="))
        left = Attr(rng.choice(refs))
        right = Attr(rng.choice(refs)) if rng.random() < 0.4 else Const(rng.choice(DOMAIN))
        return Compare(op, left, right)

    p = atom()
    r = rng.random()
    if r < 0.2:
        p = And(p, atom())
    elif r < 0.35:
        p = Or(p, atom())
    elif r < 0.45:
        p = Not(p)
    return p


def random_query(rng: random.Random, depth: int = 3, schemas: dict[str, Schema] = SCHEMAS) -> Any:
    """A random RA+ query of depth at most ``depth`` over ``schemas``."""
    if depth == 0 or rng.random() < 0.2:
        return RelRef(rng.choice(sorted(schemas)))
    op = rng.choice(("select", "project", "join", "cross", "union"))
    if op in ("join", "cross") and depth >= 1:
        left = random_query(rng, depth - 1 if rng.random() < 0.5 else 0, schemas)
        right = random_query(rng, depth - 1 if rng.random() < 0.5 else 0, schemas)
        if op == "cross":
            return CrossProduct(left, right)
        s = schema_of(left, schemas).concat(schema_of(right, schemas))
        return Join(random_predicate(rng, s), left, right)
    if op == "union":
        # both sides projected onto one attribute name they share
        left = random_query_over(rng, rng.choice(sorted(schemas)), depth - 1, schemas)
        right = random_query_over(rng, rng.choice(sorted(schemas)), depth - 1, schemas)
        return Union(Project(("b",), left), Project(("b",), right))
    child = random_query(rng, depth - 1, schemas)
    s = schema_of(child, schemas)
    if op == "select":
        return Select(random_predicate(rng, s), child)
    refs = _refs(s, rng)
    k = rng.randint(1, len(refs))
    return Project(tuple(rng.sample(refs, k)), child)


def random_query_over(rng: random.Random, name: str, depth: int, schemas: dict[str, Schema]) -> Any:
    """Selections over a single relation, keeping its attribute names; one
    level of ``depth`` is left for the projection above it."""
    q: Any = RelRef(name)
    for _ in range(rng.randint(0, max(0, depth - 1))):
        q = Select(random_predicate(rng, schema_of(q, schemas)), q)
    return q


def random_ua_relation(rng: random.Random, schema: Schema) -> KRelation:
    rows = []
    for t in _distinct_tuples(rng, schema.arity, rng.randint(0, 6)):
        d = rng.randint(1, 3)
        rows.append((t, UAPair(d, rng.randint(0, d))))
    return KRelation(schema, PairSemiring(N), rows)


# -- expressions -----------------------------------------------------------------


def random_typed_expr(rng: random.Random, kind: str, refs: dict[str, list[str]], depth: int = 3) -> Any:
    """A type-correct expression of ``kind`` (num, bool or str)."""
    leaf = depth == 0 or rng.random() < 0.3
    if kind == "num":
        if leaf:
            if refs["num"] and rng.random() < 0.6:
                return Attr(rng.choice(refs["num"]))
            return Const(rng.randint(-3, 3))
        if rng.random() < 0.8:
            return Arith(
                rng.choice("+-*"),
                random_typed_expr(rng, "num", refs, depth - 1),
                random_typed_expr(rng, "num", refs, depth - 1),
            )
        return IfThenElse(
            random_typed_expr(rng, "bool", refs, depth - 1),
            random_typed_expr(rng, "num", refs, depth - 1),
            random_typed_expr(rng, "num", refs, depth - 1),
        )
    if kind == "str":
        if leaf:
            if refs["str"] and rng.random() < 0.6:
                return Attr(rng.choice(refs["str"]))
            return Const(rng.choice(("x", "red", " ")))
        return Concat(
            random_typed_expr(rng, "str", refs, depth - 1),
            random_typed_expr(rng, "str", refs, depth - 1),
        )
    if leaf:
        return Const(rng.random() < 0.5)
    r = rng.random()
    if r < 0.4:
        k = rng.choice(("num", "str"))
        return Compare(
            rng.choice(("=", "<>", "<", "<=", ">", ">=")),
            random_typed_expr(rng, k, refs, depth - 1),
            random_typed_expr(rng, k, refs, depth - 1),
        )
    if r < 0.6:
        return And(random_typed_expr(rng, "bool", refs, depth - 1), random_typed_expr(rng, "bool", refs, depth - 1))
    if r < 0.8:
        return Or(random_typed_expr(rng, "bool", refs, depth - 1), random_typed_expr(rng, "bool", refs, depth - 1))
    return Not(random_typed_expr(rng, "bool", refs, depth - 1))
