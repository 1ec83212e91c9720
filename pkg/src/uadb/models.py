"""Tuple-independent databases, x-relations and C-tables: their labelings
and best-guess worlds."""

from __future__ import annotations

import csv
import itertools
import json
import math
import random
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Iterable, Mapping, Union

from .conditions import (
    TRUE,
    Condition,
    Var,
    holds,
    is_cnf_tautology,
    parse_condition,
    variables,
)
from .kdb import KRelation, Schema, parse_cell
from .semirings import B, N, Semiring

PROB_TOLERANCE = 1e-9


class ModelError(ValueError):
    pass


def _check_semiring(s: Semiring) -> None:
    if s is not B and s is not N:
        raise ModelError(f"labelings are defined over B or N, not {s.name}")


# -- tuple-independent ---------------------------------------------------------


@dataclass(frozen=True)
class TIRow:
    values: tuple
    optional: bool = False
    probability: float | None = None


@dataclass(frozen=True)
class TIDB:
    schema: Schema
    rows: tuple[TIRow, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "rows", tuple(self.rows))
        seen = set()
        with_p = {r.probability is not None for r in self.rows}
        if len(with_p) > 1:
            raise ModelError(f"{self.schema.name}: give a probability for every row or none")
        for r in self.rows:
            if len(r.values) != self.schema.arity:
                raise ModelError(f"{self.schema.name}: row {r.values} has the wrong arity")
            if r.values in seen:
                raise ModelError(f"{self.schema.name}: duplicate tuple {r.values}")
            seen.add(r.values)
            p = r.probability
            if p is not None:
                if not 0 < p <= 1:
                    raise ModelError(f"{self.schema.name}: probability {p} outside (0,1]")
                if r.optional != (p < 1):
                    raise ModelError(
                        f"{self.schema.name}: row {r.values} must be optional exactly when P < 1"
                    )

    @property
    def has_probabilities(self) -> bool:
        return bool(self.rows) and self.rows[0].probability is not None


def ti_rows(rows: Iterable[tuple[tuple, float]]) -> list[TIRow]:
    """Rows from ``(values, P)`` pairs; optionality follows from P."""
    return [TIRow(tuple(v), p < 1, p) for v, p in rows]


def label_ti(db: TIDB, semiring: Semiring = B) -> KRelation:
    _check_semiring(semiring)
    return KRelation(
        db.schema, semiring, [(r.values, semiring.one) for r in db.rows if not r.optional]
    )


def bgw_ti(
    db: TIDB, semiring: Semiring = B, include: Iterable[tuple] = ()
) -> KRelation:
    """Tuples with P >= 0.5. Without probabilities: the non-optional tuples
    plus whichever optional tuples ``include`` names."""
    _check_semiring(semiring)
    if db.has_probabilities:
        chosen = [r.values for r in db.rows if r.probability >= 0.5]
    else:
        extra = {tuple(t) for t in include}
        chosen = [r.values for r in db.rows if not r.optional or r.values in extra]
    return KRelation(db.schema, semiring, [(t, semiring.one) for t in chosen])


# -- x-relations -----------------------------------------------------------------


@dataclass(frozen=True)
class XTuple:
    alternatives: tuple[tuple, ...]
    optional: bool = False
    probabilities: tuple[float, ...] | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "alternatives", tuple(tuple(a) for a in self.alternatives))
        if self.probabilities is not None:
            object.__setattr__(self, "probabilities", tuple(self.probabilities))
        if not self.alternatives:
            raise ModelError("an x-tuple needs at least one alternative")
        if len(set(self.alternatives)) != len(self.alternatives):
            raise ModelError(f"alternatives of an x-tuple must differ: {self.alternatives}")
        ps = self.probabilities
        if ps is not None:
            if len(ps) != len(self.alternatives):
                raise ModelError("one probability per alternative")
            if any(not 0 < p <= 1 for p in ps):
                raise ModelError(f"alternative probabilities {ps} outside (0,1]")
            total = sum(ps)
            if total > 1 + PROB_TOLERANCE:
                raise ModelError(f"alternative probabilities sum to {total} > 1")
            if self.optional != (total < 1 - PROB_TOLERANCE):
                raise ModelError("an x-tuple is optional exactly when its probabilities sum below 1")

    @property
    def mass(self) -> float:
        """P(tau): the probability that some alternative is present."""
        return 1.0 if self.probabilities is None else sum(self.probabilities)


@dataclass(frozen=True)
class XDB:
    schema: Schema
    xtuples: tuple[XTuple, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "xtuples", tuple(self.xtuples))
        with_p = {x.probabilities is not None for x in self.xtuples}
        if len(with_p) > 1:
            raise ModelError(f"{self.schema.name}: give probabilities for every x-tuple or none")
        for x in self.xtuples:
            for alt in x.alternatives:
                if len(alt) != self.schema.arity:
                    raise ModelError(f"{self.schema.name}: alternative {alt} has the wrong arity")

    @property
    def has_probabilities(self) -> bool:
        return bool(self.xtuples) and self.xtuples[0].probabilities is not None


def label_xdb(db: XDB, semiring: Semiring = B) -> KRelation:
    """Certain exactly when some non-optional x-tuple has a single alternative."""
    _check_semiring(semiring)
    return KRelation(
        db.schema,
        semiring,
        [
            (x.alternatives[0], semiring.one)
            for x in db.xtuples
            if len(x.alternatives) == 1 and not x.optional
        ],
    )


def xdb_choices(db: XDB, seed: int | None = None) -> list[int | None]:
    """Index of the best-guess alternative per x-tuple, ``None`` when omitted.

    Ties go to the lowest alternative index. Without probabilities each
    non-optional x-tuple contributes its first alternative, or a seeded
    random one when ``seed`` is given; optional x-tuples are left out.
    """
    rng = random.Random(seed) if seed is not None else None
    out: list[int | None] = []
    for x in db.xtuples:
        if x.probabilities is not None:
            best = max(range(len(x.alternatives)), key=lambda i: (x.probabilities[i], -i))
            out.append(best if x.probabilities[best] >= 1 - x.mass else None)
        elif not x.optional:
            out.append(rng.randrange(len(x.alternatives)) if rng else 0)
        else:
            out.append(None)
    return out


def bgw_xdb(db: XDB, semiring: Semiring = B, seed: int | None = None) -> KRelation:
    """Most likely alternative per x-tuple, or nothing when absence is likelier."""
    _check_semiring(semiring)
    chosen = [
        x.alternatives[i] for x, i in zip(db.xtuples, xdb_choices(db, seed)) if i is not None
    ]
    return KRelation(db.schema, semiring, [(t, semiring.one) for t in chosen])


# -- C-tables --------------------------------------------------------------------


@dataclass(frozen=True)
class CRow:
    values: tuple  # constants or Var
    condition: Condition = TRUE

    @property
    def is_ground(self) -> bool:
        return not any(isinstance(v, Var) for v in self.values)

    def variables(self) -> set[str]:
        return {v.name for v in self.values if isinstance(v, Var)} | variables(self.condition)


@dataclass(frozen=True)
class Variable:
    """A finite candidate domain, optionally with a distribution over it."""

    name: str
    domain: tuple
    probabilities: tuple[float, ...] | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "domain", tuple(self.domain))
        if not self.domain:
            raise ModelError(f"variable {self.name} has an empty candidate domain")
        if len(set(self.domain)) != len(self.domain):
            raise ModelError(f"variable {self.name} repeats a candidate value")
        if any(v is None for v in self.domain):
            raise ModelError(f"variable {self.name}: null is not a candidate value")
        if self.probabilities is not None:
            ps = tuple(self.probabilities)
            object.__setattr__(self, "probabilities", ps)
            if len(ps) != len(self.domain) or any(p < 0 for p in ps):
                raise ModelError(f"variable {self.name}: bad distribution {ps}")
            if abs(sum(ps) - 1) > PROB_TOLERANCE:
                raise ModelError(f"variable {self.name}: probabilities sum to {sum(ps)}")


@dataclass(frozen=True)
class CTable:
    schema: Schema
    rows: tuple[CRow, ...]
    variables: tuple[Variable, ...] = ()
    global_condition: Condition = TRUE

    def __post_init__(self) -> None:
        object.__setattr__(self, "rows", tuple(self.rows))
        object.__setattr__(self, "variables", tuple(self.variables))
        names = [v.name for v in self.variables]
        if len(set(names)) != len(names):
            raise ModelError(f"{self.schema.name}: variable declared twice")
        used = set(variables(self.global_condition))
        for r in self.rows:
            if len(r.values) != self.schema.arity:
                raise ModelError(f"{self.schema.name}: row {r.values} has the wrong arity")
            used |= r.variables()
        missing = used - set(names)
        if missing:
            raise ModelError(
                f"{self.schema.name}: no candidate domain for {', '.join(sorted(missing))}"
            )
        with_p = {v.probabilities is not None for v in self.variables}
        if len(with_p) > 1:
            raise ModelError(f"{self.schema.name}: give distributions for every variable or none")

    @property
    def has_probabilities(self) -> bool:
        return bool(self.variables) and self.variables[0].probabilities is not None

    def valuation_count(self) -> int:
        return math.prod(len(v.domain) for v in self.variables)

    def valuations(self) -> Iterable[tuple[dict[str, Any], float | None]]:
        """Every assignment in domain order, with its independent-product weight."""
        names = [v.name for v in self.variables]
        domains = [range(len(v.domain)) for v in self.variables]
        for picks in itertools.product(*domains):
            val = {n: v.domain[i] for n, v, i in zip(names, self.variables, picks)}
            if self.has_probabilities:
                w = math.prod(v.probabilities[i] for v, i in zip(self.variables, picks))
            else:
                w = None
            yield val, w

    def instantiate(self, valuation: Mapping[str, Any]) -> list[tuple]:
        """Tuples of the world a valuation picks, one entry per producing row."""
        out = []
        for r in self.rows:
            if holds(r.condition, valuation):
                out.append(
                    tuple(valuation[v.name] if isinstance(v, Var) else v for v in r.values)
                )
        return out


def label_ctable(db: CTable, semiring: Semiring = B) -> KRelation:
    """Certain for all-constant rows whose condition is a CNF tautology."""
    _check_semiring(semiring)
    return KRelation(
        db.schema,
        semiring,
        [
            (r.values, semiring.one)
            for r in db.rows
            if r.is_ground and is_cnf_tautology(r.condition)
        ],
    )


def pick_valuation(db: CTable, seed: int = 0, budget: int = 1_000_000) -> dict[str, Any]:
    """Per-variable argmax (first listed on ties) or a seeded random choice.

    When the global condition rejects that guess, fall back to the first
    valuation that satisfies it, likeliest first.
    """
    rng = random.Random(seed)
    guess: dict[str, Any] = {}
    for v in db.variables:
        if v.probabilities is not None:
            i = max(range(len(v.domain)), key=lambda j: (v.probabilities[j], -j))
            guess[v.name] = v.domain[i]
        else:
            guess[v.name] = rng.choice(v.domain)
    if holds(db.global_condition, guess):
        return guess
    if db.valuation_count() > budget:
        raise ModelError(f"{db.schema.name}: too many valuations to search for the global condition")
    candidates = list(db.valuations())
    if db.has_probabilities:
        candidates.sort(key=lambda vw: -vw[1])
    else:
        rng.shuffle(candidates)
    for val, _ in candidates:
        if holds(db.global_condition, val):
            return val
    raise ModelError(f"{db.schema.name}: no valuation satisfies the global condition")


def bgw_ctable(db: CTable, seed: int = 0, semiring: Semiring = B) -> KRelation:
    _check_semiring(semiring)
    val = pick_valuation(db, seed)
    return KRelation(db.schema, semiring, [(t, semiring.one) for t in db.instantiate(val)])


# -- dispatch --------------------------------------------------------------------

Model = Union[TIDB, XDB, CTable]


def label(m: Model, semiring: Semiring = B) -> KRelation:
    if isinstance(m, TIDB):
        return label_ti(m, semiring)
    if isinstance(m, XDB):
        return label_xdb(m, semiring)
    if isinstance(m, CTable):
        return label_ctable(m, semiring)
    raise ModelError(f"not an uncertain relation: {m!r}")


def best_guess(m: Model, semiring: Semiring = B, seed: int | None = None) -> KRelation:
    if isinstance(m, TIDB):
        return bgw_ti(m, semiring)
    if isinstance(m, XDB):
        return bgw_xdb(m, semiring, seed)
    if isinstance(m, CTable):
        return bgw_ctable(m, 0 if seed is None else seed, semiring)
    raise ModelError(f"not an uncertain relation: {m!r}")


# -- files -----------------------------------------------------------------------


def _truthy(text: str) -> bool:
    return text.strip().lower() in ("1", "true", "t", "yes", "y")


def _read(path: Path) -> tuple[list[str], list[tuple[int, list[str]]]]:
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise ModelError(f"{path}: empty file") from None
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise ModelError(f"{path}:{lineno}: expected {len(header)} cells, got {len(row)}")
            rows.append((lineno, row))
    return header, rows


def _probability(path: Path, lineno: int, text: str) -> float:
    try:
        p = float(text)
    except ValueError:
        raise ModelError(f"{path}:{lineno}: probability {text!r} is not a number") from None
    if not 0 < p <= 1:
        raise ModelError(f"{path}:{lineno}: probability {p} outside (0,1]")
    return p


def read_ti_csv(path: str | Path, name: str | None = None) -> TIDB:
    """Attribute columns plus an optional ``P`` column (or an ``optional`` flag)."""
    path = Path(path)
    header, rows = _read(path)
    special = {"P", "optional"}
    attrs = [h for h in header if h not in special]
    schema = Schema.base(name or path.stem, attrs)
    pos = {h: i for i, h in enumerate(header)}
    out = []
    for lineno, row in rows:
        values = tuple(parse_cell(row[pos[a]]) for a in attrs)
        if "P" in pos:
            p = _probability(path, lineno, row[pos["P"]])
            out.append(TIRow(values, p < 1, p))
        else:
            optional = "optional" in pos and _truthy(row[pos["optional"]])
            out.append(TIRow(values, optional))
    try:
        return TIDB(schema, tuple(out))
    except ModelError as exc:
        raise ModelError(f"{path}: {exc}") from None


def read_xdb_csv(path: str | Path, name: str | None = None) -> XDB:
    """``Xid``, ``Altid`` (or ``Aid``), attribute columns, then ``P`` or an
    ``optional`` flag."""
    path = Path(path)
    header, rows = _read(path)
    alt = "Altid" if "Altid" in header else "Aid"
    for col in ("Xid", alt):
        if col not in header:
            raise ModelError(f"{path}: missing column {col}")
    special = {"Xid", alt, "P", "optional"}
    attrs = [h for h in header if h not in special]
    schema = Schema.base(name or path.stem, attrs)
    pos = {h: i for i, h in enumerate(header)}
    groups: dict[str, list[tuple[Any, tuple, float | None, bool]]] = {}
    for lineno, row in rows:
        values = tuple(parse_cell(row[pos[a]]) for a in attrs)
        p = _probability(path, lineno, row[pos["P"]]) if "P" in pos else None
        opt = "optional" in pos and _truthy(row[pos["optional"]])
        groups.setdefault(row[pos["Xid"]], []).append(
            (parse_cell(row[pos[alt]]), values, p, opt)
        )
    xtuples = []
    for xid, alts in groups.items():
        alts.sort(key=lambda a: (str(type(a[0])), a[0]))
        ps = tuple(a[2] for a in alts) if "P" in pos else None
        if ps is not None:
            optional = sum(ps) < 1 - PROB_TOLERANCE
        else:
            optional = any(a[3] for a in alts)
        try:
            xtuples.append(XTuple(tuple(a[1] for a in alts), optional, ps))
        except ModelError as exc:
            raise ModelError(f"{path}: x-tuple {xid}: {exc}") from None
    return XDB(schema, tuple(xtuples))


def read_ctable_csv(
    path: str | Path,
    name: str | None = None,
    variables_spec: Mapping[str, Any] | None = None,
) -> CTable:
    """Attribute columns ``A1..An``, variable columns ``V1..Vn`` and ``LC``.

    ``Vi`` names a variable when attribute i holds one and is empty otherwise.
    ``variables_spec`` carries the candidate domains (see :func:`ctable_variables`).
    """
    path = Path(path)
    header, rows = _read(path)
    if "LC" not in header:
        raise ModelError(f"{path}: missing column LC")
    vcols = [h for h in header if len(h) > 1 and h[0] == "V" and h[1:].isdigit()]
    attrs = [h for h in header if h not in vcols and h != "LC"]
    if vcols and len(vcols) != len(attrs):
        raise ModelError(f"{path}: expected V1..V{len(attrs)}, found {vcols}")
    schema = Schema.base(name or path.stem, attrs)
    pos = {h: i for i, h in enumerate(header)}
    out = []
    for lineno, row in rows:
        values = []
        for i, a in enumerate(attrs, start=1):
            var = row[pos[f"V{i}"]].strip() if vcols else ""
            values.append(Var(var) if var else parse_cell(row[pos[a]]))
        try:
            cond = parse_condition(row[pos["LC"]])
        except ValueError as exc:
            raise ModelError(f"{path}:{lineno}: {exc}") from None
        out.append(CRow(tuple(values), cond))
    spec = dict(variables_spec or {})
    try:
        return CTable(
            schema,
            tuple(out),
            ctable_variables(spec.get("variables", {})),
            parse_condition(spec.get("global")),
        )
    except ModelError as exc:
        raise ModelError(f"{path}: {exc}") from None


def ctable_variables(spec: Mapping[str, Any]) -> tuple[Variable, ...]:
    """``{"X": [1, 2]}`` or ``{"X": {"fruit": 0.6, "vegetable": 0.4}}``."""
    out = []
    for name in sorted(spec):
        d = spec[name]
        if isinstance(d, Mapping):
            out.append(Variable(name, tuple(d), tuple(float(p) for p in d.values())))
        else:
            out.append(Variable(name, tuple(d)))
    return tuple(out)


def load_model(kind: str, path: str | Path, name: str | None = None, **extra: Any) -> Model:
    kind = kind.lower()
    if kind == "ti":
        return read_ti_csv(path, name)
    if kind == "xdb":
        return read_xdb_csv(path, name)
    if kind == "ctable":
        spec = extra.get("variables_spec")
        if isinstance(spec, (str, Path)):
            spec = json.loads(Path(spec).read_text())
        return read_ctable_csv(path, name, spec)
    raise ModelError(f"unknown model kind {kind!r}")

