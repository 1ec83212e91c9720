"""UA-databases: a best-guess world and a c-sound labeling carried together
as pair annotations ``[d, c]``."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Iterable, Mapping

from .kdb import (
    CrossProduct,
    Join,
    KRelation,
    Project,
    RelRef,
    Schema,
    Select,
    format_cell,
    relations_of,
    render_table,
    eval_query,
    schema_of,
)
from .models import TIDB, XDB, Model
from .semirings import BY_NAME, PairSemiring, Semiring, UAPair, render_uc


class SandwichViolation(ValueError):
    """A certain annotation exceeds its best-guess annotation."""


@dataclass(frozen=True)
class UADB:
    relations: Mapping[str, KRelation]
    base: Semiring

    def __post_init__(self) -> None:
        ring = PairSemiring(self.base)
        for name, r in self.relations.items():
            if r.semiring != ring:
                raise ValueError(f"relation {name} is over {r.semiring.name}, expected {ring.name}")
            for t, (d, c) in r.items():
                if not self.base.leq(c, d):
                    raise SandwichViolation(f"{name}{t}: certain {c} exceeds best guess {d}")

    @property
    def semiring(self) -> PairSemiring:
        return PairSemiring(self.base)

    def __getitem__(self, name: str) -> KRelation:
        return self.relations[name]


def make_uadb(
    world: Mapping[str, KRelation], labeling: Mapping[str, KRelation]
) -> UADB:
    """Pair every tuple of the best-guess world with its label."""
    bases = {r.semiring for r in world.values()} | {r.semiring for r in labeling.values()}
    if len(bases) != 1:
        raise ValueError("world and labeling must share one semiring")
    base = bases.pop()
    ring = PairSemiring(base)
    out = {}
    for name in set(world) | set(labeling):
        if name not in world or name not in labeling:
            raise ValueError(f"relation {name} needs both a world and a labeling")
        w, lab = world[name], labeling[name]
        if w.schema.attributes != lab.schema.attributes:
            raise ValueError(f"{name}: labeling schema {lab.schema.names()} != {w.schema.names()}")
        rows = []
        for t in set(w.tuples()) | set(lab.tuples()):
            d, c = w[t], lab[t]
            if not base.leq(c, d):
                raise SandwichViolation(
                    f"{name}{t}: label {base.render(c)} is not below best guess {base.render(d)}"
                )
            rows.append((t, UAPair(d, c)))
        out[name] = KRelation(w.schema, ring, rows, check=False)
    return UADB(out, base)


def h_det(db: UADB) -> dict[str, KRelation]:
    return {n: KRelation(r.schema, db.base, ((t, p.d) for t, p in r.items())) for n, r in db.relations.items()}


def h_cert(db: UADB) -> dict[str, KRelation]:
    return {n: KRelation(r.schema, db.base, ((t, p.c) for t, p in r.items())) for n, r in db.relations.items()}


def eval_ua(db: UADB, q: Any) -> KRelation:
    """The query evaluated over pair annotations. The result's first
    component is the query over the best-guess world and its second the
    query over the labeling."""
    return eval_query(db.relations, q, db.semiring)


def pair_relation(r: KRelation, which: str) -> KRelation:
    """``d`` or ``c`` component of a pair-annotated relation."""
    base = r.semiring.base
    i = 0 if which == "d" else 1
    return KRelation(r.schema, base, ((t, p[i]) for t, p in r.items()))


# -- c-completeness conditions ---------------------------------------------------


def is_xkey(r: XDB, attrs: Iterable[str]) -> bool:
    """Every non-optional x-tuple with several alternatives has two that
    differ on ``attrs``."""
    idx = [r.schema.resolve(a) for a in attrs]
    for x in r.xtuples:
        if x.optional or len(x.alternatives) == 1:
            continue
        projected = {tuple(alt[i] for i in idx) for alt in x.alternatives}
        if len(projected) == 1:
            return False
    return True


@dataclass(frozen=True)
class CompletenessCheck:
    applicable: bool
    preserved: bool
    reason: str

    def __bool__(self) -> bool:
        return self.applicable and self.preserved


def _canonical_parts(q: Any) -> tuple[tuple[str, ...] | None, list[str]] | None:
    """``(projected attrs or None, relation names)`` for queries shaped like
    a projection over selections over products/joins of base relations."""
    attrs = None
    if isinstance(q, Project):
        attrs, q = q.attrs, q.child
    while isinstance(q, Select):
        q = q.child

    def leaves(node: Any) -> list[str] | None:
        if isinstance(node, RelRef):
            return [node.name]
        if isinstance(node, (CrossProduct, Join)):
            left, right = leaves(node.left), leaves(node.right)
            return None if left is None or right is None else left + right
        if isinstance(node, Select):
            return leaves(node.child)
        return None

    names = leaves(q)
    return None if names is None else (attrs, names)


def preserves_ccompleteness(q: Any, dbs: Mapping[str, Model]) -> CompletenessCheck:
    """Sufficient condition for the x-DB/TI labelings to stay c-complete
    under ``q``. Only checks the syntactic canonical form; never rewrites."""
    used = set(relations_of(q))
    missing = used - set(dbs)
    if missing:
        raise ValueError(f"unknown relations {sorted(missing)}")
    if all(isinstance(dbs[n], TIDB) for n in used):
        return CompletenessCheck(True, True, "all inputs are tuple-independent")
    parts = _canonical_parts(q)
    if parts is None:
        return CompletenessCheck(False, False, "query is not a projection over selections of a product")
    attrs, names = parts
    if len(set(names)) != len(names):
        return CompletenessCheck(False, False, "query contains a self-join")
    schemas = {n: dbs[n].schema for n in names}
    product_q: Any = RelRef(names[0])
    for n in names[1:]:
        product_q = CrossProduct(product_q, RelRef(n))
    full: Schema = schema_of(product_q, schemas)
    kept = range(full.arity) if attrs is None else [full.resolve(a) for a in attrs]
    offsets = {}
    pos = 0
    for n in names:
        offsets[n] = (pos, pos + schemas[n].arity)
        pos += schemas[n].arity
    for n in names:
        m = dbs[n]
        if isinstance(m, TIDB):
            continue
        if not isinstance(m, XDB):
            return CompletenessCheck(False, False, f"{n} is neither an x-relation nor tuple-independent")
        lo, hi = offsets[n]
        mine = [schemas[n].attributes[i - lo] for i in kept if lo <= i < hi]
        if not is_xkey(m, mine):
            return CompletenessCheck(True, False, f"projection keeps no x-key of {n}")
    return CompletenessCheck(True, True, "projection keeps an x-key of every relation")


# -- rendering and serialization -------------------------------------------------


def render_ua(r: KRelation) -> str:
    """Aligned table with a trailing ``(u,c)`` column."""
    base = r.semiring.base
    rows = [[format_cell(v) for v in t] + [render_uc(base, p)] for t, p in r.items()]
    return render_table(r.schema.names() + ["(u,c)"], rows)


def relation_to_json(r: KRelation) -> dict:
    base = r.semiring.base
    return {
        "schema": list(r.schema.attributes),
        "rows": [
            {"values": list(t), "d": base.to_json(p.d), "c": base.to_json(p.c)} for t, p in r.items()
        ],
    }


def relation_from_json(name: str, obj: Mapping[str, Any], base: Semiring) -> KRelation:
    schema = Schema.base(name, obj["schema"])
    rows = [
        (tuple(row["values"]), UAPair(base.from_json(row["d"]), base.from_json(row["c"])))
        for row in obj["rows"]
    ]
    return KRelation(schema, PairSemiring(base), rows)


def to_json(db: UADB) -> dict:
    return {
        "semiring": db.base.name,
        "relations": {n: relation_to_json(r) for n, r in db.relations.items()},
    }


def from_json(obj: Mapping[str, Any]) -> UADB:
    base = BY_NAME[obj.get("semiring", "N")]
    return UADB(
        {n: relation_from_json(n, rel, base) for n, rel in obj["relations"].items()}, base
    )
