"""Boolean conditions over C-table variables and constants.

Text grammar::

    cond  := disj
    disj  := conj ("OR" conj)*
    conj  := unary ("AND" unary)*
    unary := "NOT" unary | "(" cond ")" | "TRUE" | "FALSE" | term op term
    term  := VARIABLE | NUMBER | 'string' | NULL
    op    := = | <> | != | < | <= | > | >=

Identifiers are variables; quoted strings and numbers are constants.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Any, Iterable, Mapping, Union

from .expr import COMPARISONS, FLIPPED, NEGATED, compare, render_value


class ConditionError(ValueError):
    pass


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Atom:
    op: str
    left: Any  # Var or constant
    right: Any


@dataclass(frozen=True)
class AndC:
    parts: tuple["Condition", ...]


@dataclass(frozen=True)
class OrC:
    parts: tuple["Condition", ...]


@dataclass(frozen=True)
class NotC:
    arg: "Condition"


@dataclass(frozen=True)
class Truth:
    value: bool


Condition = Union[Atom, AndC, OrC, NotC, Truth]
TRUE = Truth(True)


def variables(c: Condition) -> set[str]:
    if isinstance(c, Atom):
        return {x.name for x in (c.left, c.right) if isinstance(x, Var)}
    if isinstance(c, Truth):
        return set()
    if isinstance(c, NotC):
        return variables(c.arg)
    out: set[str] = set()
    for p in c.parts:
        out |= variables(p)
    return out


def _term_value(x: Any, valuation: Mapping[str, Any]) -> Any:
    if isinstance(x, Var):
        try:
            return valuation[x.name]
        except KeyError:
            raise ConditionError(f"variable {x.name} is unbound") from None
    return x


def holds(c: Condition, valuation: Mapping[str, Any]) -> bool:
    if isinstance(c, Truth):
        return c.value
    if isinstance(c, Atom):
        return compare(c.op, _term_value(c.left, valuation), _term_value(c.right, valuation))
    if isinstance(c, NotC):
        return not holds(c.arg, valuation)
    if isinstance(c, AndC):
        return all(holds(p, valuation) for p in c.parts)
    return any(holds(p, valuation) for p in c.parts)


# -- CNF tautology check -------------------------------------------------------


def _literal(c: Condition) -> Atom | Truth | None:
    """A literal with negation pushed into the comparison, or None."""
    if isinstance(c, (Atom, Truth)):
        return c
    if isinstance(c, NotC):
        inner = c.arg
        if isinstance(inner, Atom):
            return Atom(NEGATED[inner.op], inner.left, inner.right)
        if isinstance(inner, Truth):
            return Truth(not inner.value)
    return None


def _clauses(c: Condition) -> list[list[Atom | Truth]] | None:
    """Split a CNF formula into clauses of literals; None if not CNF."""
    conjuncts = c.parts if isinstance(c, AndC) else (c,)
    out = []
    for part in conjuncts:
        disjuncts = part.parts if isinstance(part, OrC) else (part,)
        lits = [_literal(d) for d in disjuncts]
        if any(lit is None for lit in lits):
            return None
        out.append(lits)
    return out


def is_cnf(c: Condition) -> bool:
    return _clauses(c) is not None


def _oriented(a: Atom) -> tuple[str, Any, Any]:
    """Put a variable on the left so ``1 = X`` and ``X = 1`` compare alike."""
    if not isinstance(a.left, Var) and isinstance(a.right, Var):
        return FLIPPED[a.op], a.right, a.left
    return a.op, a.left, a.right


def _ground_true(lit: Atom | Truth) -> bool:
    if isinstance(lit, Truth):
        return lit.value
    if isinstance(lit.left, Var) or isinstance(lit.right, Var):
        return False
    try:
        return compare(lit.op, lit.left, lit.right)
    except Exception:
        return False


def _clause_is_tautology(lits: list[Atom | Truth]) -> bool:
    if any(_ground_true(lit) for lit in lits):
        return True
    seen = {_oriented(lit) for lit in lits if isinstance(lit, Atom)}
    for op, l, r in seen:
        # a null fails both x<c and x>=c, so only = / <> pairs survive nulls
        if op not in ("=", "<>") and (l is None or r is None):
            continue
        if (NEGATED[op], l, r) in seen:
            return True
    return False


def is_cnf_tautology(c: Condition) -> bool:
    """Syntactic check: CNF and every clause holds a complementary pair or a
    ground atom that is true. Sound, deliberately incomplete."""
    clauses = _clauses(c)
    if clauses is None:
        return False
    return all(_clause_is_tautology(lits) for lits in clauses)


# -- text ----------------------------------------------------------------------

_TOKEN = re.compile(
    r"\s*(?:(?P<num>-?\d+(?:\.\d+)?)|(?P<str>'(?:[^']|'')*')|(?P<op><>|!=|<=|>=|=|<|>)"
    r"|(?P<paren>[()])|(?P<word>[A-Za-z_][A-Za-z_0-9]*))"
)
_KEYWORDS = {"AND", "OR", "NOT", "TRUE", "FALSE", "NULL"}


def _tokens(text: str) -> list[tuple[str, str]]:
    pos, out = 0, []
    text = text.rstrip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            raise ConditionError(f"cannot parse condition at {text[pos:]!r}")
        kind = m.lastgroup
        tok = m.group(kind)
        if kind == "word" and tok.upper() in _KEYWORDS:
            kind, tok = "kw", tok.upper()
        out.append((kind, tok))
        pos = m.end()
    return out


class _Parser:
    def __init__(self, text: str):
        self.toks = _tokens(text)
        self.i = 0

    def peek(self) -> tuple[str, str] | None:
        return self.toks[self.i] if self.i < len(self.toks) else None

    def take(self) -> tuple[str, str]:
        tok = self.peek()
        if tok is None:
            raise ConditionError("unexpected end of condition")
        self.i += 1
        return tok

    def disj(self) -> Condition:
        parts = [self.conj()]
        while self.peek() == ("kw", "OR"):
            self.take()
            parts.append(self.conj())
        return parts[0] if len(parts) == 1 else OrC(tuple(parts))

    def conj(self) -> Condition:
        parts = [self.unary()]
        while self.peek() == ("kw", "AND"):
            self.take()
            parts.append(self.unary())
        return parts[0] if len(parts) == 1 else AndC(tuple(parts))

    def unary(self) -> Condition:
        kind, tok = self.take()
        if (kind, tok) == ("kw", "NOT"):
            return NotC(self.unary())
        if kind == "paren" and tok == "(":
            inner = self.disj()
            if self.take() != ("paren", ")"):
                raise ConditionError("missing closing parenthesis")
            return inner
        if (kind, tok) in (("kw", "TRUE"), ("kw", "FALSE")):
            return Truth(tok == "TRUE")
        self.i -= 1
        left = self.term()
        kind, op = self.take()
        if kind != "op":
            raise ConditionError(f"expected a comparison, got {op!r}")
        op = "<>" if op == "!=" else op
        return Atom(op, left, self.term())

    def term(self) -> Any:
        kind, tok = self.take()
        if kind == "num":
            return float(tok) if "." in tok else int(tok)
        if kind == "str":
            return tok[1:-1].replace("''", "'")
        if kind == "word":
            return Var(tok)
        if (kind, tok) == ("kw", "NULL"):
            return None
        raise ConditionError(f"expected a variable or constant, got {tok!r}")


def parse_condition(text: str | None) -> Condition:
    if text is None or not text.strip():
        return TRUE
    p = _Parser(text)
    out = p.disj()
    if p.peek() is not None:
        raise ConditionError(f"trailing input in condition {text!r}")
    return out


def _term_text(x: Any) -> str:
    if isinstance(x, Var):
        return x.name
    return "NULL" if x is None else render_value(x)


def condition_text(c: Condition) -> str:
    if isinstance(c, Truth):
        return "TRUE" if c.value else "FALSE"
    if isinstance(c, Atom):
        return f"{_term_text(c.left)}{c.op}{_term_text(c.right)}"
    if isinstance(c, NotC):
        return f"NOT ({condition_text(c.arg)})"
    sep = " AND " if isinstance(c, AndC) else " OR "
    return "(" + sep.join(condition_text(p) for p in c.parts) + ")"


def conjunction(parts: Iterable[Condition]) -> Condition:
    parts = tuple(parts)
    if not parts:
        return TRUE
    return parts[0] if len(parts) == 1 else AndC(parts)


assert set(NEGATED) == set(COMPARISONS)
