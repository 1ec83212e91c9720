"""Desk-scale measurements: how many certain answers the labeling misses
(false negatives), that it never invents any (false positives), and how
certain-only answers compare with best-guess answers against a known truth.
"""

from __future__ import annotations

import itertools
import random
import statistics
import time
from dataclasses import dataclass, field
from typing import Any, Iterable, Mapping

from .expr import Attr, Compare, Const
from .kdb import KRelation, Project, RelRef, Schema, Select, eval_query
from .models import XDB, XTuple, Model, best_guess, label
from .semirings import B, Semiring
from .uadatabase import eval_ua, is_xkey, make_uadb
from .worlds import DEFAULT_BUDGET, expand_model_to_worlds, oracle_certain


class InvariantViolation(AssertionError):
    """A labeled answer claimed certainty the oracle does not support."""


@dataclass
class MetricsReport:
    false_negative_rate: float
    false_positive_rate: float
    certain: int = 0
    labeled: int = 0
    missed: int = 0
    precision: float | None = None
    recall: float | None = None
    runtime_s: float = 0.0
    details: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        for name in ("false_negative_rate", "false_positive_rate"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name}={v} outside [0, 1]")

    def as_dict(self) -> dict[str, Any]:
        out = {
            "false_negative_rate": self.false_negative_rate,
            "false_positive_rate": self.false_positive_rate,
            "certain": self.certain,
            "labeled": self.labeled,
            "missed": self.missed,
            "runtime_s": round(self.runtime_s, 4),
        }
        if self.precision is not None:
            out["precision"] = self.precision
            out["recall"] = self.recall
        out.update(self.details)
        return out


def labeled_uadb(models: Mapping[str, Model], semiring: Semiring = B, seed: int | None = None):
    world = {n: best_guess(m, semiring, seed) for n, m in models.items()}
    labels = {n: label(m, semiring) for n, m in models.items()}
    return make_uadb(world, labels)


def compare_to_oracle(labeled: KRelation, oracle: KRelation, semiring: Semiring) -> MetricsReport:
    """``labeled`` is the certain component of a query result; ``oracle``
    the exact certain annotations."""
    certain = set(oracle.tuples())
    claimed = set(labeled.tuples())
    unsound = [t for t in claimed if not semiring.leq(labeled[t], oracle[t])]
    missed = [t for t in certain if t not in claimed]
    fnr = len(missed) / len(certain) if certain else 0.0
    fpr = len(unsound) / len(claimed) if claimed else 0.0
    return MetricsReport(fnr, fpr, len(certain), len(claimed), len(missed))


def verify(
    models: Mapping[str, Model],
    q: Any,
    semiring: Semiring = B,
    seed: int | None = None,
    budget: int = DEFAULT_BUDGET,
) -> MetricsReport:
    """Label, run ``q`` over the UA-database and compare with world enumeration.

    Raises :class:`InvariantViolation` when any labeled answer is unsound.
    """
    start = time.perf_counter()
    db = labeled_uadb(models, semiring, seed)
    result = eval_ua(db, q)
    labeled = KRelation(
        result.schema, semiring, ((t, p.c) for t, p in result.items()), check=False
    )
    oracle = oracle_certain(expand_model_to_worlds(models, semiring, budget), q, budget)
    report = compare_to_oracle(labeled, oracle, semiring)
    report.runtime_s = time.perf_counter() - start
    if report.false_positive_rate > 0:
        raise InvariantViolation(
            f"{report.false_positive_rate:.3f} of labeled answers are not certain"
        )
    return report


# -- false negative rate vs projection width --------------------------------------


def synthetic_xdb(
    rows: int = 1000,
    columns: int = 8,
    uncertain_rate: float = 0.1,
    seed: int = 0,
    domain_sizes: Iterable[int] | None = None,
) -> XDB:
    """Each uncertain cell has two candidate values; a row's alternatives are
    every combination of its cells' candidates. Rows are never optional.

    Values default to a domain of 10**6 per column, so projections rarely
    collide by accident.
    """
    rng = random.Random(seed)
    if domain_sizes is None:
        domain_sizes = [10**6] * columns
    sizes = list(domain_sizes)
    if len(sizes) != columns:
        raise ValueError("one domain size per column")
    schema = Schema.base("R", [f"A{j + 1}" for j in range(columns)])
    xtuples = []
    for _ in range(rows):
        cells = []
        for size in sizes:
            v = rng.randrange(size)
            if rng.random() < uncertain_rate:
                other = (v + 1 + rng.randrange(size - 1)) % size
                cells.append((v, other))
            else:
                cells.append((v,))
        xtuples.append(XTuple(tuple(itertools.product(*cells)), False))
    return XDB(schema, tuple(xtuples))


def certain_projection(db: XDB, idx: list[int]) -> set[tuple]:
    """Exact certain answers of a set-semantics projection over an x-DB.

    A projected tuple is certain iff some non-optional x-tuple yields it
    under every alternative: x-tuples choose independently, so otherwise a
    world exists in which each x-tuple avoids it.
    """
    out = set()
    for x in db.xtuples:
        if x.optional:
            continue
        proj = {tuple(a[i] for i in idx) for a in x.alternatives}
        if len(proj) == 1:
            out.add(proj.pop())
    return out


def _quartiles(xs: list[float]) -> tuple[float, float, float]:
    if len(xs) == 1:
        return xs[0], xs[0], xs[0]
    q = statistics.quantiles(xs, n=4, method="inclusive")
    return q[0], q[1], q[2]


@dataclass
class FnrResult:
    runs: list[dict[str, Any]]
    by_width: dict[int, dict[str, float]]
    runtime_s: float

    def medians(self) -> dict[int, float]:
        return {w: s["median"] for w, s in self.by_width.items()}

    def non_increasing(self) -> bool:
        m = [self.by_width[w]["median"] for w in sorted(self.by_width)]
        return all(a >= b for a, b in zip(m, m[1:]))


def fnr_experiment(
    rows: int = 1000,
    columns: int = 8,
    uncertain_rate: float = 0.1,
    queries_per_width: int = 9,
    seed: int = 0,
) -> FnrResult:
    """Random projections of every width over one synthetic x-DB.

    Labeled answers come from evaluating the projection over the
    UA-database; certain answers from :func:`certain_projection`.
    """
    start = time.perf_counter()
    db = synthetic_xdb(rows, columns, uncertain_rate, seed)
    uadb = labeled_uadb({"R": db}, B)
    rng = random.Random(seed + 1)
    attrs = list(db.schema.attributes)
    runs = []
    for width in range(1, columns + 1):
        for k in range(queries_per_width):
            picked = sorted(rng.sample(range(columns), width))
            names = tuple(attrs[i] for i in picked)
            result = eval_ua(uadb, Project(names, RelRef("R")))
            labeled = {t for t, p in result.items() if p.c}
            certain = certain_projection(db, picked)
            unsound = labeled - certain
            missed = certain - labeled
            fnr = len(missed) / len(certain) if certain else 0.0
            fpr = len(unsound) / len(labeled) if labeled else 0.0
            xkey = is_xkey(db, names)
            if fpr > 0:
                raise InvariantViolation(f"width {width} query {k}: {len(unsound)} unsound answers")
            if xkey and fnr > 0:
                raise InvariantViolation(f"width {width} query {k}: x-key kept but FNR={fnr}")
            runs.append(
                {
                    "width": width,
                    "query": k,
                    "attrs": " ".join(names),
                    "certain": len(certain),
                    "labeled": len(labeled),
                    "fnr": fnr,
                    "fpr": fpr,
                    "xkey": xkey,
                }
            )
    by_width = {}
    for width in range(1, columns + 1):
        xs = [r["fnr"] for r in runs if r["width"] == width]
        q1, med, q3 = _quartiles(xs)
        by_width[width] = {"q1": q1, "median": med, "q3": q3, "max": max(xs)}
    return FnrResult(runs, by_width, time.perf_counter() - start)


# -- utility against a ground truth -----------------------------------------------

UTILITY_DOMAINS = (("city", 40), ("state", 12), ("category", 6), ("grade", 5))


def ground_truth(rows: int = 500, seed: int = 0) -> KRelation:
    rng = random.Random(seed)
    attrs = ["id"] + [a for a, _ in UTILITY_DOMAINS]
    data = [(i,) + tuple(rng.randrange(n) for _, n in UTILITY_DOMAINS) for i in range(rows)]
    return KRelation(Schema.base("R", attrs), B, [(t, True) for t in data])


def corrupt(truth: KRelation, rate: float, seed: int = 0) -> XDB:
    """Each row is corrupted with probability ``rate``: one non-key cell gets
    one or two wrong candidates next to the true value, with random
    probabilities, so the most likely alternative is often wrong."""
    rng = random.Random(seed)
    xtuples = []
    for t in truth.tuples():
        if rng.random() >= rate:
            xtuples.append(XTuple((t,), False, (1.0,)))
            continue
        col = 1 + rng.randrange(len(UTILITY_DOMAINS))
        size = UTILITY_DOMAINS[col - 1][1]
        wrong = rng.sample([v for v in range(size) if v != t[col]], rng.choice((1, 2)))
        alts = [t] + [t[:col] + (v,) + t[col + 1 :] for v in wrong]
        rng.shuffle(alts)
        weights = [rng.random() + 0.05 for _ in alts]
        total = sum(weights)
        probs = [w / total for w in weights]
        probs[-1] = 1.0 - sum(probs[:-1])
        xtuples.append(XTuple(tuple(alts), False, tuple(probs)))
    return XDB(truth.schema, tuple(xtuples))


def _random_query(rng: random.Random, schema: Schema) -> Any:
    col, size = rng.choice(UTILITY_DOMAINS)
    q: Any = Select(Compare("=", Attr(col), Const(rng.randrange(size))), RelRef("R"))
    others = [a for a in schema.attributes if a != col]
    width = rng.randint(1, len(others))
    return Project(tuple(sorted(rng.sample(others, width), key=schema.attributes.index)), q)


def _ratio(num: int, den: int) -> float:
    return num / den if den else 1.0


def utility_experiment(
    rows: int = 500,
    rates: Iterable[float] = (0.1, 0.3, 0.5),
    queries: int = 30,
    seed: int = 0,
) -> dict[float, dict[str, MetricsReport]]:
    """Micro-averaged precision and recall of certain-only answers and of
    best-guess answers, each measured against the ground-truth answers."""
    truth = ground_truth(rows, seed)
    out = {}
    for rate in rates:
        start = time.perf_counter()
        xdb = corrupt(truth, rate, seed + 1)
        uadb = labeled_uadb({"R": xdb}, B)
        rng = random.Random(seed + 2)
        hits = {"certain": 0, "ua": 0}
        sizes = {"certain": 0, "ua": 0}
        relevant = 0
        for _ in range(queries):
            q = _random_query(rng, truth.schema)
            gold = set(eval_query({"R": truth}, q).tuples())
            result = eval_ua(uadb, q)
            answers = {
                "certain": {t for t, p in result.items() if p.c},
                "ua": {t for t, p in result.items() if p.d},
            }
            relevant += len(gold)
            for kind, ans in answers.items():
                hits[kind] += len(ans & gold)
                sizes[kind] += len(ans)
        elapsed = time.perf_counter() - start
        reports = {}
        for kind in ("certain", "ua"):
            reports[kind] = MetricsReport(
                0.0,
                0.0,
                precision=_ratio(hits[kind], sizes[kind]),
                recall=_ratio(hits[kind], relevant),
                runtime_s=elapsed,
                details={"answers": sizes[kind], "relevant": relevant, "rate": rate},
            )
        if reports["certain"].precision != 1.0:
            raise InvariantViolation(f"certain-only precision {reports['certain'].precision} at rate {rate}")
        out[rate] = reports
    return out

