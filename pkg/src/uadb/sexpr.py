"""Parser for the parenthesized query language used on the command line.

    (project (color) (select (= color 'red') (join (= category pref) (rel food) (rel preference))))

Relational forms are ``rel``, ``select``, ``project``, ``join``, ``cross``,
``union``, ``aggregate``, ``diff`` and ``flagmin``. Inside ``project`` an
item is either an attribute or ``(as name expr)``. Aggregates are written
``(aggregate (g1 g2) count Q)`` or ``(aggregate (g) (sum a) Q)``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Any

from .expr import (
    COMPARISONS,
    And,
    Arith,
    Attr,
    Compare,
    Concat,
    Const,
    Expr,
    IfThenElse,
    Not,
    Or,
)
from .kdb import CrossProduct, FlagMinProject, Join, Project, RelRef, Select, Union
from .uaa import AGGREGATES, Aggregate, Difference, ExtendedProject


class ParseError(ValueError):
    pass


@dataclass(frozen=True)
class _Str:
    text: str


_TOKEN = re.compile(r"\s*(?:(\()|(\))|'((?:[^']|'')*)'|([^\s()']+))")


def _tokens(text: str) -> list[Any]:
    out: list[Any] = []
    pos = 0
    text = text.rstrip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None or m.end() == pos:
            raise ParseError(f"unexpected character at offset {pos}: {text[pos:pos + 10]!r}")
        lpar, rpar, string, atom = m.groups()
        if lpar:
            out.append("(")
        elif rpar:
            out.append(")")
        elif string is not None:
            out.append(_Str(string.replace("''", "'")))
        else:
            out.append(atom)
        pos = m.end()
    return out


def read_sexpr(text: str) -> Any:
    """Nested lists of atoms; quoted strings come back as ``_Str``."""
    toks = _tokens(text)
    if not toks:
        raise ParseError("empty input")
    stack: list[list[Any]] = [[]]
    for tok in toks:
        if tok == "(":
            stack.append([])
        elif tok == ")":
            if len(stack) == 1:
                raise ParseError("unbalanced ')'")
            done = stack.pop()
            stack[-1].append(done)
        else:
            stack[-1].append(tok)
    if len(stack) != 1:
        raise ParseError("missing ')'")
    if len(stack[0]) != 1:
        raise ParseError("expected a single expression")
    return stack[0][0]


_NUMBER = re.compile(r"[+-]?(\d+(\.\d*)?|\.\d+)([eE][+-]?\d+)?$")


def _atom_expr(a: Any) -> Expr:
    if isinstance(a, _Str):
        return Const(a.text)
    low = a.lower()
    if low == "true":
        return Const(True)
    if low == "false":
        return Const(False)
    if low == "null":
        return Const(None)
    if _NUMBER.match(a):
        return Const(int(a) if re.fullmatch(r"[+-]?\d+", a) else float(a))
    return Attr(a)


def _fold(cls: Any, parts: list[Expr], *op: str) -> Expr:
    out = parts[0]
    for p in parts[1:]:
        out = cls(*op, out, p)
    return out


def to_expr(x: Any) -> Expr:
    if not isinstance(x, list):
        return _atom_expr(x)
    if not x or isinstance(x[0], (list, _Str)):
        raise ParseError(f"expected an operator in {x!r}")
    head, args = x[0].lower(), x[1:]
    if head == "!=":
        head = "<>"

    def arity(n: int) -> None:
        if len(args) != n:
            raise ParseError(f"{head} takes {n} arguments, got {len(args)}")

    if head in COMPARISONS:
        arity(2)
        return Compare(head, to_expr(args[0]), to_expr(args[1]))
    if head in ("and", "or", "+", "-", "*", "||"):
        if len(args) < 2:
            raise ParseError(f"{head} takes at least 2 arguments")
        parts = [to_expr(a) for a in args]
        if head == "and":
            return _fold(And, parts)
        if head == "or":
            return _fold(Or, parts)
        if head == "||":
            return _fold(Concat, parts)
        return _fold(Arith, parts, head)
    if head == "not":
        arity(1)
        return Not(to_expr(args[0]))
    if head == "if":
        arity(3)
        return IfThenElse(*(to_expr(a) for a in args))
    raise ParseError(f"unknown operator {x[0]!r}")


def _name(x: Any, what: str) -> str:
    if isinstance(x, list) or isinstance(x, _Str):
        raise ParseError(f"expected {what}, got {x!r}")
    return x


def _names(x: Any, what: str) -> tuple[str, ...]:
    if not isinstance(x, list):
        raise ParseError(f"expected a parenthesized list of {what}")
    return tuple(_name(a, what) for a in x)


def to_query(x: Any) -> Any:
    if not isinstance(x, list) or not x or isinstance(x[0], (list, _Str)):
        raise ParseError(f"expected a query form, got {x!r}")
    head, args = x[0].lower(), x[1:]

    def arity(n: int) -> None:
        if len(args) != n:
            raise ParseError(f"{head} takes {n} arguments, got {len(args)}")

    if head == "rel":
        arity(1)
        return RelRef(_name(args[0], "a relation name"))
    if head == "select":
        arity(2)
        return Select(to_expr(args[0]), to_query(args[1]))
    if head == "project":
        arity(2)
        if not isinstance(args[0], list) or not args[0]:
            raise ParseError("project needs a non-empty attribute list")
        items = []
        for item in args[0]:
            if isinstance(item, list):
                if len(item) != 3 or item[0] != "as":
                    raise ParseError(f"projection item must be a name or (as name expr): {item!r}")
                items.append((_name(item[1], "an output name"), to_expr(item[2])))
            else:
                items.append((_name(item, "an attribute"), Attr(item)))
        child = to_query(args[1])
        if all(isinstance(e, Attr) and e.ref == n for n, e in items):
            return Project(tuple(n for n, _ in items), child)
        return ExtendedProject(tuple(items), child)
    if head == "join":
        arity(3)
        return Join(to_expr(args[0]), to_query(args[1]), to_query(args[2]))
    if head in ("cross", "union"):
        if len(args) < 2:
            raise ParseError(f"{head} takes at least 2 queries")
        cls = CrossProduct if head == "cross" else Union
        out = to_query(args[0])
        for a in args[1:]:
            out = cls(out, to_query(a))
        return out
    if head == "diff":
        arity(2)
        return Difference(to_query(args[0]), to_query(args[1]))
    if head == "flagmin":
        arity(1)
        return FlagMinProject(to_query(args[0]))
    if head == "aggregate":
        arity(3)
        groups = _names(args[0], "group-by attributes")
        target = args[1]
        if isinstance(target, list):
            if len(target) != 2:
                raise ParseError(f"aggregate target must be (fn attr): {target!r}")
            fn, attr = _name(target[0], "an aggregate").lower(), _name(target[1], "an attribute")
        else:
            fn, attr = _name(target, "an aggregate").lower(), None
        if fn not in AGGREGATES:
            raise ParseError(f"unknown aggregate {fn!r}")
        return Aggregate(groups, fn, attr, to_query(args[2]))
    raise ParseError(f"unknown query form {x[0]!r}")


def parse_query(text: str) -> Any:
    return to_query(read_sexpr(text))


def parse_expr(text: str) -> Expr:
    return to_expr(read_sexpr(text))
