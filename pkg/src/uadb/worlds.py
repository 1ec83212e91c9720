"""Incomplete K-databases as relations over per-world annotation vectors,
plus the brute-force certain-answer oracle."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Any, Iterable, Mapping, Sequence

from .conditions import holds
from .kdb import KRelation, Schema, eval_query, schema_of
from .models import CTable, Model, TIDB, XDB
from .semirings import BY_NAME, B, N, Semiring, VectorSemiring, glb_fold, lub_fold

DEFAULT_BUDGET = 10**6


class WorldError(ValueError):
    pass


class BudgetExceeded(WorldError):
    pass


Database = Mapping[str, KRelation]


@dataclass(frozen=True)
class WorldDB:
    """Relations over ``VectorSemiring(base, world_count)``; world ids are 1-based."""

    relations: Mapping[str, KRelation]
    world_count: int
    base: Semiring
    probabilities: tuple[float, ...] | None = None

    def __post_init__(self) -> None:
        if self.world_count < 1:
            raise WorldError("an incomplete database has at least one world")
        ring = VectorSemiring(self.base, self.world_count)
        for name, r in self.relations.items():
            if r.semiring != ring:
                raise WorldError(f"relation {name} is over {r.semiring.name}, expected {ring.name}")
        if self.probabilities is not None:
            ps = tuple(self.probabilities)
            object.__setattr__(self, "probabilities", ps)
            if len(ps) != self.world_count or any(p < 0 for p in ps):
                raise WorldError("one nonnegative probability per world")
            if abs(sum(ps) - 1) > 1e-9:
                raise WorldError(f"world probabilities sum to {sum(ps)}")

    @property
    def semiring(self) -> VectorSemiring:
        return VectorSemiring(self.base, self.world_count)

    @property
    def schemas(self) -> dict[str, Schema]:
        return {n: r.schema for n, r in self.relations.items()}

    def tuple_count(self) -> int:
        return sum(len(r) for r in self.relations.values())


def from_worlds(
    worlds: Sequence[Database],
    schemas: Mapping[str, Schema],
    base: Semiring,
    probabilities: Sequence[float] | None = None,
) -> WorldDB:
    """Stack explicit worlds into one vector-annotated database. Worlds are
    kept as given, duplicates included."""
    n = len(worlds)
    if n == 0:
        raise WorldError("need at least one world")
    ring = VectorSemiring(base, n)
    relations = {}
    for name, schema in schemas.items():
        vectors: dict[tuple, list] = {}
        for i, w in enumerate(worlds):
            r = w.get(name)
            if r is None:
                continue
            for t, k in r.items():
                vectors.setdefault(t, [base.zero] * n)[i] = k
        relations[name] = KRelation(
            schema, ring, ((t, tuple(v)) for t, v in vectors.items()), check=False
        )
    return WorldDB(relations, n, base, None if probabilities is None else tuple(probabilities))


def world(db: WorldDB, i: int) -> dict[str, KRelation]:
    if not 1 <= i <= db.world_count:
        raise WorldError(f"world id {i} outside 1..{db.world_count}")
    return {
        name: KRelation(r.schema, db.base, ((t, k[i - 1]) for t, k in r.items()), check=False)
        for name, r in db.relations.items()
    }


def worlds(db: WorldDB) -> list[dict[str, KRelation]]:
    return [world(db, i) for i in range(1, db.world_count + 1)]


def _vector(db: WorldDB, t: tuple, rel: str) -> tuple:
    if rel not in db.relations:
        raise WorldError(f"unknown relation {rel!r}")
    return db.relations[rel][tuple(t)]


def certain_annotation(db: WorldDB, t: tuple, rel: str) -> Any:
    return glb_fold(db.base, _vector(db, t, rel))


def possible_annotation(db: WorldDB, t: tuple, rel: str) -> Any:
    return lub_fold(db.base, _vector(db, t, rel))


def eval_worlds(db: WorldDB, q: Any) -> WorldDB:
    """Evaluate once over annotation vectors; world i of the result is the
    query over world i."""
    out = eval_query(db.relations, q, db.semiring)
    return WorldDB({"result": out}, db.world_count, db.base, db.probabilities)


def oracle_certain(db: WorldDB, q: Any, budget: int = DEFAULT_BUDGET) -> KRelation:
    """Certain annotations by running the query in every world separately
    and taking the greatest lower bound per tuple."""
    cost = db.world_count * max(1, db.tuple_count())
    if cost > budget:
        raise BudgetExceeded(f"{db.world_count} worlds x {db.tuple_count()} tuples exceeds budget {budget}")
    schema = schema_of(q, db.schemas)
    results = [eval_query(w, q, db.base) for w in worlds(db)]
    candidates = set()
    for r in results:
        candidates.update(r.tuples())
    base = db.base
    return KRelation(
        schema, base, ((t, glb_fold(base, [r[t] for r in results])) for t in candidates), check=False
    )


def oracle_possible(db: WorldDB, q: Any, budget: int = DEFAULT_BUDGET) -> KRelation:
    """Least upper bound per tuple across the per-world results."""
    cost = db.world_count * max(1, db.tuple_count())
    if cost > budget:
        raise BudgetExceeded(f"{db.world_count} worlds x {db.tuple_count()} tuples exceeds budget {budget}")
    schema = schema_of(q, db.schemas)
    results = [eval_query(w, q, db.base) for w in worlds(db)]
    base = db.base
    out: dict[tuple, Any] = {}
    for r in results:
        for t, k in r.items():
            out[t] = base.lub(out[t], k) if t in out else k
    return KRelation(schema, base, out, check=False)


# -- expanding compact models ----------------------------------------------------


def _world_count(m: Model) -> int:
    if isinstance(m, TIDB):
        return 2 ** sum(1 for r in m.rows if r.optional)
    if isinstance(m, XDB):
        return math.prod(len(x.alternatives) + x.optional for x in m.xtuples)
    if isinstance(m, CTable):
        return m.valuation_count()
    raise WorldError(f"not an uncertain relation: {m!r}")


def _model_worlds(m: Model) -> Iterable[tuple[list[tuple], float | None]]:
    """Each world as the list of tuple occurrences, with its probability."""
    if isinstance(m, TIDB):
        fixed = [r.values for r in m.rows if not r.optional]
        opt = [r for r in m.rows if r.optional]
        for mask in itertools.product((False, True), repeat=len(opt)):
            tuples = fixed + [r.values for r, on in zip(opt, mask) if on]
            p = None
            if m.has_probabilities:
                p = math.prod(r.probability if on else 1 - r.probability for r, on in zip(opt, mask))
            yield tuples, p
    elif isinstance(m, XDB):
        options = [
            list(range(len(x.alternatives))) + ([None] if x.optional else []) for x in m.xtuples
        ]
        for picks in itertools.product(*options):
            tuples = [x.alternatives[i] for x, i in zip(m.xtuples, picks) if i is not None]
            p = None
            if m.has_probabilities:
                p = math.prod(
                    x.probabilities[i] if i is not None else 1 - x.mass
                    for x, i in zip(m.xtuples, picks)
                )
            yield tuples, p
    elif isinstance(m, CTable):
        allowed = [(val, w) for val, w in m.valuations() if holds(m.global_condition, val)]
        if not allowed:
            raise WorldError(f"{m.schema.name}: no valuation satisfies the global condition")
        total = sum(w for _, w in allowed) if m.has_probabilities else None
        for val, w in allowed:
            p = None if total is None else (w / total if total > 0 else 0.0)
            yield m.instantiate(val), p
    else:
        raise WorldError(f"not an uncertain relation: {m!r}")


def expand_model_to_worlds(
    models: Model | Mapping[str, Model],
    semiring: Semiring = B,
    budget: int = DEFAULT_BUDGET,
) -> WorldDB:
    """Enumerate every possible world. Relations are independent, so the
    worlds of a database are the product of per-relation worlds."""
    if not isinstance(models, Mapping):
        models = {models.schema.name: models}
    if semiring is not B and semiring is not N:
        raise WorldError("models expand over B or N")
    names = list(models)
    total = math.prod(_world_count(models[n]) for n in names)
    if total > budget:
        raise BudgetExceeded(f"{total} possible worlds exceed the budget of {budget}")
    per_rel = [list(_model_worlds(models[n])) for n in names]
    dbs = []
    probs: list[float] | None = []
    for combo in itertools.product(*per_rel):
        w = {}
        p = 1.0
        for name, (tuples, pr) in zip(names, combo):
            rows = [(t, semiring.one) for t in tuples]
            w[name] = KRelation(models[name].schema, semiring, rows, check=False)
            if pr is None:
                p = None
            elif p is not None:
                p *= pr
        dbs.append(w)
        if p is None:
            probs = None
        elif probs is not None:
            probs.append(p)
    if probs is not None:
        s = sum(probs)
        probs = [p / s for p in probs] if s > 0 else None
    schemas = {n: models[n].schema for n in names}
    return from_worlds(dbs, schemas, semiring, probs)


# -- serialization ---------------------------------------------------------------


def to_json(db: WorldDB) -> dict:
    ring = db.semiring
    out: dict[str, Any] = {
        "world_count": db.world_count,
        "semiring": db.base.name,
        "relations": {
            name: {
                "schema": list(r.schema.attributes),
                "rows": [{"values": list(t), "vector": ring.to_json(k)} for t, k in r.items()],
            }
            for name, r in db.relations.items()
        },
    }
    if db.probabilities is not None:
        out["probabilities"] = list(db.probabilities)
    return out


def from_json(obj: Mapping[str, Any], base: Semiring | None = None) -> WorldDB:
    if base is None:
        base = BY_NAME[obj.get("semiring", "B")]
    n = int(obj["world_count"])
    ring = VectorSemiring(base, n)
    relations = {}
    for name, rel in obj["relations"].items():
        schema = Schema.base(name, rel["schema"])
        rows = [(tuple(row["values"]), ring.from_json(row["vector"])) for row in rel["rows"]]
        relations[name] = KRelation(schema, ring, rows)
    return WorldDB(relations, n, base, obj.get("probabilities"))
