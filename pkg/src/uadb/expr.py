"""Scalar expressions over tuples: comparisons, boolean connectives,
arithmetic, string concatenation and conditionals.

Selection and join predicates in :mod:`uadb.kdb` are expressions that must
evaluate to a boolean. :mod:`uadb.uaa` evaluates the same trees over
certainty-tagged values.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Callable, Union


class ExprError(ValueError):
    pass


class ExprTypeError(ExprError):
    pass


@dataclass(frozen=True)
class Attr:
    ref: str  # "a", "rel.a" or "#i" (0-based position)


@dataclass(frozen=True)
class Const:
    value: Any


@dataclass(frozen=True)
class Compare:
    op: str
    left: "Expr"
    right: "Expr"

    def __post_init__(self) -> None:
        if self.op not in COMPARISONS:
            raise ExprError(f"unknown comparison {self.op!r}")


@dataclass(frozen=True)
class And:
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Or:
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Not:
    arg: "Expr"


@dataclass(frozen=True)
class Arith:
    op: str
    left: "Expr"
    right: "Expr"

    def __post_init__(self) -> None:
        if self.op not in ("+", "-", "*"):
            raise ExprError(f"unknown arithmetic operator {self.op!r}")


@dataclass(frozen=True)
class Concat:
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class IfThenElse:
    cond: "Expr"
    then: "Expr"
    orelse: "Expr"


Expr = Union[Attr, Const, Compare, And, Or, Not, Arith, Concat, IfThenElse]

COMPARISONS = ("=", "<>", "<", "<=", ">", ">=")
NEGATED = {"=": "<>", "<>": "=", "<": ">=", ">=": "<", ">": "<=", "<=": ">"}
FLIPPED = {"=": "=", "<>": "<>", "<": ">", ">": "<", "<=": ">=", ">=": "<="}


def conj(*parts: Expr) -> Expr:
    if not parts:
        return Const(True)
    out = parts[0]
    for p in parts[1:]:
        out = And(out, p)
    return out


def attrs_of(e: Expr) -> list[str]:
    """Attribute references in left-to-right order."""
    if isinstance(e, Attr):
        return [e.ref]
    if isinstance(e, Const):
        return []
    if isinstance(e, Not):
        return attrs_of(e.arg)
    if isinstance(e, IfThenElse):
        return attrs_of(e.cond) + attrs_of(e.then) + attrs_of(e.orelse)
    return attrs_of(e.left) + attrs_of(e.right)


def map_attrs(e: Expr, f: Callable[[str], str]) -> Expr:
    if isinstance(e, Attr):
        return Attr(f(e.ref))
    if isinstance(e, Const):
        return e
    if isinstance(e, Not):
        return Not(map_attrs(e.arg, f))
    if isinstance(e, IfThenElse):
        return IfThenElse(map_attrs(e.cond, f), map_attrs(e.then, f), map_attrs(e.orelse, f))
    if isinstance(e, (Compare, Arith)):
        return type(e)(e.op, map_attrs(e.left, f), map_attrs(e.right, f))
    return type(e)(map_attrs(e.left, f), map_attrs(e.right, f))


# -- plain value semantics ---------------------------------------------------


def _is_number(v: Any) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool)


def _kind(v: Any) -> str:
    if isinstance(v, bool):
        return "bool"
    if _is_number(v):
        return "number"
    if isinstance(v, str):
        return "string"
    raise ExprTypeError(f"unsupported value {v!r}")


def compare(op: str, a: Any, b: Any) -> bool:
    """Nulls equal only themselves and never satisfy a strict ordering."""
    if a is None or b is None:
        same = a is None and b is None
        if op in ("=", "<=", ">="):
            return same
        if op == "<>":
            return not same
        return False
    if _kind(a) != _kind(b):
        raise ExprTypeError(f"cannot compare {a!r} with {b!r}")
    if op == "=":
        return a == b
    if op == "<>":
        return a != b
    if op == "<":
        return a < b
    if op == "<=":
        return a <= b
    if op == ">":
        return a > b
    return a >= b


def arith(op: str, a: Any, b: Any) -> Any:
    # no null propagation: a certain 0 factor must fix the product
    if not (_is_number(a) and _is_number(b)):
        raise ExprTypeError(f"arithmetic on non-numbers {a!r} {op} {b!r}")
    if op == "+":
        return a + b
    if op == "-":
        return a - b
    return a * b


def concat(a: Any, b: Any) -> Any:
    if a is None or b is None:
        return None
    if isinstance(a, bool) or isinstance(b, bool):
        raise ExprTypeError("cannot concatenate booleans")
    return f"{a}{b}"


def truth(v: Any) -> bool:
    if not isinstance(v, bool):
        raise ExprTypeError(f"expected a boolean, got {v!r}")
    return v


Resolver = Callable[[str], int]


def compile_expr(e: Expr, resolve: Resolver) -> Callable[[tuple], Any]:
    """Bind attribute references once; the result maps a tuple to a value.

    Unknown attributes fail here, before any row is seen.
    """
    if isinstance(e, Attr):
        i = resolve(e.ref)
        return lambda t: t[i]
    if isinstance(e, Const):
        v = e.value
        return lambda t: v
    if isinstance(e, Compare):
        op, l, r = e.op, compile_expr(e.left, resolve), compile_expr(e.right, resolve)
        return lambda t: compare(op, l(t), r(t))
    if isinstance(e, And):
        l, r = compile_expr(e.left, resolve), compile_expr(e.right, resolve)
        return lambda t: truth(l(t)) & truth(r(t))
    if isinstance(e, Or):
        l, r = compile_expr(e.left, resolve), compile_expr(e.right, resolve)
        return lambda t: truth(l(t)) | truth(r(t))
    if isinstance(e, Not):
        a = compile_expr(e.arg, resolve)
        return lambda t: not truth(a(t))
    if isinstance(e, Arith):
        op, l, r = e.op, compile_expr(e.left, resolve), compile_expr(e.right, resolve)
        return lambda t: arith(op, l(t), r(t))
    if isinstance(e, Concat):
        l, r = compile_expr(e.left, resolve), compile_expr(e.right, resolve)
        return lambda t: concat(l(t), r(t))
    if isinstance(e, IfThenElse):
        c = compile_expr(e.cond, resolve)
        a, b = compile_expr(e.then, resolve), compile_expr(e.orelse, resolve)
        return lambda t: a(t) if truth(c(t)) else b(t)
    raise ExprError(f"not an expression: {e!r}")


def evaluate(e: Expr, t: tuple, resolve: Resolver) -> Any:
    return compile_expr(e, resolve)(t)


# -- text ----------------------------------------------------------------------


def render_value(v: Any) -> str:
    if v is None:
        return "null"
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, str):
        return "'" + v.replace("'", "''") + "'"
    return repr(v) if isinstance(v, float) else str(v)


def to_sexpr(e: Expr) -> str:
    if isinstance(e, Attr):
        return e.ref
    if isinstance(e, Const):
        return render_value(e.value)
    if isinstance(e, Compare):
        return f"({e.op} {to_sexpr(e.left)} {to_sexpr(e.right)})"
    if isinstance(e, And):
        return f"(and {to_sexpr(e.left)} {to_sexpr(e.right)})"
    if isinstance(e, Or):
        return f"(or {to_sexpr(e.left)} {to_sexpr(e.right)})"
    if isinstance(e, Not):
        return f"(not {to_sexpr(e.arg)})"
    if isinstance(e, Arith):
        return f"({e.op} {to_sexpr(e.left)} {to_sexpr(e.right)})"
    if isinstance(e, Concat):
        return f"(|| {to_sexpr(e.left)} {to_sexpr(e.right)})"
    return f"(if {to_sexpr(e.cond)} {to_sexpr(e.then)} {to_sexpr(e.orelse)})"


def to_sql(e: Expr, attr: Callable[[str], str] = lambda r: r) -> str:
    if isinstance(e, Attr):
        return attr(e.ref)
    if isinstance(e, Const):
        v = e.value
        if v is None:
            return "NULL"
        if isinstance(v, bool):
            return "TRUE" if v else "FALSE"
        return render_value(v)
    if isinstance(e, Compare):
        return f"{to_sql(e.left, attr)} {e.op} {to_sql(e.right, attr)}"
    if isinstance(e, And):
        return f"({to_sql(e.left, attr)} AND {to_sql(e.right, attr)})"
    if isinstance(e, Or):
        return f"({to_sql(e.left, attr)} OR {to_sql(e.right, attr)})"
    if isinstance(e, Not):
        return f"NOT ({to_sql(e.arg, attr)})"
    if isinstance(e, Arith):
        return f"({to_sql(e.left, attr)} {e.op} {to_sql(e.right, attr)})"
    if isinstance(e, Concat):
        return f"({to_sql(e.left, attr)} || {to_sql(e.right, attr)})"
    return (
        f"CASE WHEN {to_sql(e.cond, attr)} THEN {to_sql(e.then, attr)} "
        f"ELSE {to_sql(e.orelse, attr)} END"
    )
