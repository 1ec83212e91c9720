"""K-relations and the positive relational algebra over any semiring."""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Iterable, Iterator, Mapping
from typing import Union as OneOf

from .expr import Expr, attrs_of, compile_expr, to_sexpr
from .semirings import Semiring


class KdbError(ValueError):
    pass


class SchemaError(KdbError):
    pass


class QueryError(KdbError):
    pass


# -- values and ordering -------------------------------------------------------


def value_key(v: Any) -> tuple:
    """Total order over mixed domain values: null < bool < number < string."""
    if v is None:
        return (0, 0)
    if isinstance(v, bool):
        return (1, v)
    if isinstance(v, (int, float)):
        return (2, v)
    if isinstance(v, str):
        return (3, v)
    key = getattr(v, "sort_key", None)
    if key is not None:
        return (4, key())
    return (5, repr(v))


def tuple_key(t: tuple) -> tuple:
    return tuple(value_key(v) for v in t)


def parse_cell(text: str) -> Any:
    """CSV cells: empty is null, then int, then float, else the raw string."""
    if text == "":
        return None
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        return text


def format_cell(v: Any) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    return str(v)


# -- schemas -------------------------------------------------------------------


@dataclass(frozen=True)
class Schema:
    """Relation name plus ordered attributes.

    Every attribute remembers the relation it came from, so after a join
    ``rel.attr`` still resolves. ``#i`` resolves by 0-based position.
    """

    name: str
    attributes: tuple[str, ...]
    qualifiers: tuple[str | None, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "attributes", tuple(self.attributes))
        if not self.qualifiers:
            object.__setattr__(self, "qualifiers", (self.name,) * len(self.attributes))
        if len(self.qualifiers) != len(self.attributes):
            raise SchemaError("one qualifier per attribute")

    @classmethod
    def base(cls, name: str, attributes: Iterable[str]) -> "Schema":
        """A stored relation: at least one attribute, names unique."""
        attributes = tuple(attributes)
        if not attributes:
            raise SchemaError(f"relation {name} needs at least one attribute")
        if len(set(attributes)) != len(attributes):
            raise SchemaError(f"duplicate attribute names in {name}: {attributes}")
        for a in attributes:
            if not a or "." in a or a.startswith("#"):
                raise SchemaError(f"invalid attribute name {a!r}")
        return cls(name, attributes)

    @property
    def arity(self) -> int:
        return len(self.attributes)

    def resolve(self, ref: str) -> int:
        if ref.startswith("#"):
            try:
                i = int(ref[1:])
            except ValueError:
                raise SchemaError(f"bad positional reference {ref!r}") from None
            if not 0 <= i < self.arity:
                raise SchemaError(f"position {ref} out of range for {self.names()}")
            return i
        if "." in ref:
            qual, attr = ref.split(".", 1)
            hits = [
                i
                for i, (q, a) in enumerate(zip(self.qualifiers, self.attributes))
                if q == qual and a == attr
            ]
        else:
            hits = [i for i, a in enumerate(self.attributes) if a == ref]
        if not hits:
            raise SchemaError(f"unknown attribute {ref!r} in {self.names()}")
        if len(hits) > 1:
            raise SchemaError(f"ambiguous attribute {ref!r} in {self.names()}")
        return hits[0]

    def names(self) -> list[str]:
        """Display names: bare where unique, ``rel.attr`` where not."""
        out = []
        for q, a in zip(self.qualifiers, self.attributes):
            if self.attributes.count(a) > 1 and q is not None:
                out.append(f"{q}.{a}")
            else:
                out.append(a)
        return out

    def concat(self, other: "Schema") -> "Schema":
        return Schema(
            f"{self.name}_{other.name}",
            self.attributes + other.attributes,
            self.qualifiers + other.qualifiers,
        )

    def pick(self, indexes: Iterable[int], name: str | None = None) -> "Schema":
        indexes = list(indexes)
        return Schema(
            name or self.name,
            tuple(self.attributes[i] for i in indexes),
            tuple(self.qualifiers[i] for i in indexes),
        )

    def same_attributes(self, other: "Schema") -> bool:
        return self.attributes == other.attributes


# -- relations -----------------------------------------------------------------


class KRelation:
    """Finite map from tuples to semiring elements; zeros are never stored."""

    __slots__ = ("schema", "semiring", "_data", "_sorted")

    def __init__(
        self,
        schema: Schema,
        semiring: Semiring,
        entries: Mapping[tuple, Any] | Iterable[tuple[tuple, Any]] = (),
        *,
        check: bool = True,
    ):
        self.schema = schema
        self.semiring = semiring
        items = entries.items() if isinstance(entries, Mapping) else entries
        data: dict[tuple, Any] = {}
        add = semiring.add
        for t, k in items:
            t = tuple(t)
            if check:
                if len(t) != schema.arity:
                    raise SchemaError(
                        f"tuple {t} has arity {len(t)}, {schema.name} expects {schema.arity}"
                    )
                if not semiring.contains(k):
                    raise KdbError(f"{k!r} is not an element of {semiring.name}")
            data[t] = add(data[t], k) if t in data else k
        self._data = {t: k for t, k in data.items() if not semiring.is_zero(k)}
        self._sorted: list[tuple] | None = None

    def tuples(self) -> list[tuple]:
        if self._sorted is None:
            self._sorted = sorted(self._data, key=tuple_key)
        return self._sorted

    def items(self) -> list[tuple[tuple, Any]]:
        return [(t, self._data[t]) for t in self.tuples()]

    def __getitem__(self, t: tuple) -> Any:
        return self._data.get(tuple(t), self.semiring.zero)

    def __contains__(self, t: object) -> bool:
        return t in self._data

    def __iter__(self) -> Iterator[tuple]:
        return iter(self.tuples())

    def __len__(self) -> int:
        return len(self._data)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, KRelation):
            return NotImplemented
        return (
            self.semiring == other.semiring
            and self.schema.attributes == other.schema.attributes
            and self._data == other._data
        )

    def __repr__(self) -> str:
        body = ", ".join(f"{t}: {self.semiring.render(k)}" for t, k in self.items())
        return f"KRelation({self.schema.name}{list(self.schema.attributes)}, {{{body}}})"

    def as_dict(self) -> dict[tuple, Any]:
        return dict(self._data)

    def renamed(self, name: str) -> "KRelation":
        schema = Schema(name, self.schema.attributes)
        return KRelation(schema, self.semiring, self._data, check=False)


def map_annotations(r: KRelation, h: Callable[[Any], Any], target: Semiring) -> KRelation:
    """Lift an annotation homomorphism to a relation."""
    return KRelation(r.schema, target, ((t, h(k)) for t, k in r.items()))


def support(k: int) -> bool:
    """The homomorphism from bags to sets."""
    return k > 0


# -- queries -------------------------------------------------------------------


@dataclass(frozen=True)
class RelRef:
    name: str


@dataclass(frozen=True)
class Select:
    pred: Expr
    child: "Query"


@dataclass(frozen=True)
class Project:
    attrs: tuple[str, ...]
    child: "Query"

    def __post_init__(self) -> None:
        object.__setattr__(self, "attrs", tuple(self.attrs))
        if not self.attrs:
            raise QueryError("projection needs at least one attribute")


@dataclass(frozen=True)
class Join:
    pred: Expr
    left: "Query"
    right: "Query"


@dataclass(frozen=True)
class CrossProduct:
    left: "Query"
    right: "Query"


@dataclass(frozen=True)
class Union:
    left: "Query"
    right: "Query"


@dataclass(frozen=True)
class FlagMinProject:
    """Drop the two ``C`` flag columns of a join and append their minimum.

    This is the one generalized projection the bag rewriting needs.
    """

    child: "Query"
    flag: str = "C"


Query = OneOf[RelRef, Select, Project, Join, CrossProduct, Union, FlagMinProject]
RA_PLUS = (RelRef, Select, Project, Join, CrossProduct, Union)


def relations_of(q: Any) -> list[str]:
    """Relation names in left-to-right leaf order (repeats kept)."""
    if isinstance(q, RelRef):
        return [q.name]
    out: list[str] = []
    for child in children(q):
        out += relations_of(child)
    return out


def children(q: Any) -> list[Any]:
    if isinstance(q, RelRef):
        return []
    if isinstance(q, (Select, Project, FlagMinProject)):
        return [q.child]
    if hasattr(q, "left") and hasattr(q, "right"):
        return [q.left, q.right]
    if hasattr(q, "child"):
        return [q.child]
    raise QueryError(f"not a query node: {q!r}")


def depth(q: Any) -> int:
    kids = children(q)
    return 0 if not kids else 1 + max(depth(c) for c in kids)


def flag_positions(schema: Schema, flag: str = "C") -> list[int]:
    return [i for i, a in enumerate(schema.attributes) if a == flag]


def schema_of(q: Any, schemas: Mapping[str, Schema]) -> Schema:
    """Static output schema; raises on every well-formedness violation."""
    if isinstance(q, RelRef):
        if q.name not in schemas:
            raise QueryError(f"unknown relation {q.name!r}")
        return schemas[q.name]
    if isinstance(q, Select):
        s = schema_of(q.child, schemas)
        for ref in attrs_of(q.pred):
            s.resolve(ref)
        return s
    if isinstance(q, Project):
        s = schema_of(q.child, schemas)
        return s.pick(s.resolve(a) for a in q.attrs)
    if isinstance(q, (Join, CrossProduct)):
        s = schema_of(q.left, schemas).concat(schema_of(q.right, schemas))
        if isinstance(q, Join):
            for ref in attrs_of(q.pred):
                s.resolve(ref)
        return s
    if isinstance(q, Union):
        l, r = schema_of(q.left, schemas), schema_of(q.right, schemas)
        if not l.same_attributes(r):
            raise SchemaError(f"union of {l.names()} and {r.names()}")
        return l
    if isinstance(q, FlagMinProject):
        s = schema_of(q.child, schemas)
        flags = flag_positions(s, q.flag)
        if len(flags) != 2:
            raise SchemaError(f"expected two {q.flag} columns in {s.names()}")
        keep = [i for i in range(s.arity) if i not in flags]
        out = s.pick(keep)
        return Schema(out.name, out.attributes + (q.flag,), out.qualifiers + (None,))
    raise QueryError(f"not a query node: {q!r}")


def eval_query(
    db: Mapping[str, KRelation], q: Any, semiring: Semiring | None = None
) -> KRelation:
    """Evaluate an RA+ query; every operator is a semiring sum or product."""
    if semiring is None:
        rings = {r.semiring for r in db.values()}
        if len(rings) > 1:
            raise KdbError("relations of one database must share a semiring")
        if not rings:
            raise KdbError("cannot infer the semiring of an empty database")
        semiring = rings.pop()
    schemas = {name: r.schema for name, r in db.items()}
    schema_of(q, schemas)
    return _eval(db, q, semiring)


def _eval(db: Mapping[str, KRelation], q: Any, s: Semiring) -> KRelation:
    if isinstance(q, RelRef):
        r = db[q.name]
        if r.semiring != s:
            raise KdbError(f"relation {q.name} is over {r.semiring.name}, not {s.name}")
        return r

    if isinstance(q, Select):
        r = _eval(db, q.child, s)
        keep = compile_expr(q.pred, r.schema.resolve)
        return KRelation(r.schema, s, ((t, k) for t, k in r.items() if keep(t)), check=False)

    if isinstance(q, Project):
        r = _eval(db, q.child, s)
        idx = [r.schema.resolve(a) for a in q.attrs]
        out: dict[tuple, Any] = {}
        for t, k in r.items():
            key = tuple(t[i] for i in idx)
            out[key] = s.add(out[key], k) if key in out else k
        return KRelation(r.schema.pick(idx), s, out, check=False)

    if isinstance(q, (Join, CrossProduct)):
        left, right = _eval(db, q.left, s), _eval(db, q.right, s)
        schema = left.schema.concat(right.schema)
        keep = compile_expr(q.pred, schema.resolve) if isinstance(q, Join) else None
        rows = []
        mul = s.mul
        right_items = right.items()
        for t1, k1 in left.items():
            for t2, k2 in right_items:
                t = t1 + t2
                if keep is None or keep(t):
                    rows.append((t, mul(k1, k2)))
        return KRelation(schema, s, rows, check=False)

    if isinstance(q, Union):
        left, right = _eval(db, q.left, s), _eval(db, q.right, s)
        return KRelation(left.schema, s, left.items() + right.items(), check=False)

    if isinstance(q, FlagMinProject):
        r = _eval(db, q.child, s)
        flags = flag_positions(r.schema, q.flag)
        keep = [i for i in range(r.schema.arity) if i not in flags]
        picked = r.schema.pick(keep)
        schema = Schema(picked.name, picked.attributes + (q.flag,), picked.qualifiers + (None,))
        a, b = flags
        rows = [(tuple(t[i] for i in keep) + (min(t[a], t[b]),), k) for t, k in r.items()]
        return KRelation(schema, s, rows, check=False)

    raise QueryError(f"not a query node: {q!r}")


# -- serialization -------------------------------------------------------------


def read_csv(
    path: str | Path,
    semiring: Semiring,
    name: str | None = None,
    annotation: str | None = None,
) -> KRelation:
    """Header row names the attributes. Without an annotation column every
    row counts as ``one`` and repeated rows are summed."""
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise KdbError(f"{path}: empty file") from None
        ann_idx = header.index(annotation) if annotation in header else None
        attrs = [h for i, h in enumerate(header) if i != ann_idx]
        schema = Schema.base(name or path.stem, attrs)
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise KdbError(f"{path}:{lineno}: expected {len(header)} cells, got {len(row)}")
            k = semiring.one
            if ann_idx is not None:
                try:
                    k = semiring.from_json(parse_cell(row[ann_idx]))
                except Exception as exc:
                    raise KdbError(f"{path}:{lineno}: {exc}") from None
            values = tuple(parse_cell(c) for i, c in enumerate(row) if i != ann_idx)
            rows.append((values, k))
    return KRelation(schema, semiring, rows)


def to_json(r: KRelation) -> dict:
    return {
        "schema": {"name": r.schema.name, "attributes": list(r.schema.attributes)},
        "rows": [
            {"values": list(t), "annotation": r.semiring.to_json(k)} for t, k in r.items()
        ],
    }


def from_json(obj: Mapping[str, Any], semiring: Semiring) -> KRelation:
    schema = Schema.base(obj["schema"]["name"], obj["schema"]["attributes"])
    rows = [(tuple(row["values"]), semiring.from_json(row["annotation"])) for row in obj["rows"]]
    return KRelation(schema, semiring, rows)


def dumps(r: KRelation) -> str:
    return json.dumps(to_json(r), indent=2)


def render_table(headers: list[str], rows: list[list[str]]) -> str:
    widths = [len(h) for h in headers]
    for row in rows:
        for i, cell in enumerate(row):
            widths[i] = max(widths[i], len(cell))
    lines = [" | ".join(h.ljust(w) for h, w in zip(headers, widths)).rstrip()]
    lines.append("-+-".join("-" * w for w in widths))
    for row in rows:
        lines.append(" | ".join(c.ljust(w) for c, w in zip(row, widths)).rstrip())
    return "\n".join(lines)


def pretty(r: KRelation) -> str:
    rows = [[format_cell(v) for v in t] + [r.semiring.render(k)] for t, k in r.items()]
    return render_table(r.schema.names() + ["K"], rows)


def query_text(q: Any) -> str:
    """S-expression rendering of a query, the inverse of the CLI parser."""
    if isinstance(q, RelRef):
        return f"(rel {q.name})"
    if isinstance(q, Select):
        return f"(select {to_sexpr(q.pred)} {query_text(q.child)})"
    if isinstance(q, Project):
        return f"(project ({' '.join(q.attrs)}) {query_text(q.child)})"
    if isinstance(q, Join):
        return f"(join {to_sexpr(q.pred)} {query_text(q.left)} {query_text(q.right)})"
    if isinstance(q, CrossProduct):
        return f"(cross {query_text(q.left)} {query_text(q.right)})"
    if isinstance(q, Union):
        return f"(union {query_text(q.left)} {query_text(q.right)})"
    if isinstance(q, FlagMinProject):
        return f"(flagmin {query_text(q.child)})"
    render = getattr(q, "to_text", None)
    if render is not None:
        return render(query_text)
    raise QueryError(f"not a query node: {q!r}")
