"""Acceptance gate: one PASS/FAIL line per criterion.

Run under pytest (lines appear in the terminal summary) or directly with
``python tests/test_acceptance.py``.
"""

from __future__ import annotations

import itertools
import json
import sys
import time
from pathlib import Path
from typing import Callable

import pytest

import theorems
from uadb.experiments import fnr_experiment, labeled_uadb, utility_experiment
from uadb.kdb import KRelation, RelRef, Schema, eval_query, map_annotations, read_csv, support
from uadb.models import load_model
from uadb.semirings import A, B, N, VectorSemiring
from uadb.sexpr import parse_query
from uadb.uaa import eval_uaa, read_annotated_csv, strip
from uadb.uadatabase import eval_ua, pair_relation
from uadb.worlds import WorldDB, expand_model_to_worlds, oracle_certain

DATA = Path(__file__).parent / "data"
RESULTS: list[str] = []

Check = Callable[[], tuple[bool, str]]


def _record(label: str, ok: bool, detail: str, elapsed: float) -> None:
    RESULTS.append(f"{'PASS' if ok else 'FAIL'}  {label}  ({elapsed:.2f}s) {detail}".rstrip())


def _timed(fn: Check) -> tuple[bool, str, float]:
    start = time.perf_counter()
    ok, detail = fn()
    return ok, detail, time.perf_counter() - start


# -- 1. worked examples ------------------------------------------------------------


def _kwlabels() -> bool:
    s = Schema.base("R", ["t"])
    rel = KRelation(s, VectorSemiring(N, 2), [((1,), (3, 2)), ((2,), (2, 1)), ((3,), (0, 5))])
    cert = oracle_certain(WorldDB({"R": rel}, 2, N), RelRef("R"))
    return [cert[(i,)] for i in (1, 2, 3)] == [2, 1, 0]


def _address_bags() -> bool:
    db = {
        "address": read_csv(DATA / "address.csv", N),
        "neighborhood": read_csv(DATA / "neighborhood.csv", N),
    }
    q = parse_query("(project (state) (join (= address.l neighborhood.l) (rel address) (rel neighborhood)))")
    res = eval_query(db, q)
    sets = eval_query({n: map_annotations(r, support, B) for n, r in db.items()}, q)
    return res.as_dict() == {("NY",): 2, ("AZ",): 1} and ("IL",) not in sets


ADDRESS_QUERY = (
    "(project (id locale state) (join (and (>= lat lat_lo) (<= lat lat_hi) (>= lon lon_lo) (<= lon lon_hi))"
    " (rel ADDR) (rel LOC)))"
)


def _address_labels() -> bool:
    models = {
        "ADDR": load_model("xdb", DATA / "addr.csv", "ADDR"),
        "LOC": load_model("ti", DATA / "loc.csv", "LOC"),
    }
    q = parse_query(ADDRESS_QUERY)
    res = eval_ua(labeled_uadb(models, B), q)
    flags = {t[0]: p.c for t, p in res.items()}
    oracle = {t[0] for t in oracle_certain(expand_model_to_worlds(models, B), q).tuples()}
    # id 3 is certain in every world but its x-tuple has two alternatives
    return flags == {1: True, 2: False, 3: False, 4: True} and 3 in oracle and 2 not in oracle


def _food_pipeline() -> bool:
    db = {
        "food": read_annotated_csv(DATA / "food.csv"),
        "preference": read_annotated_csv(DATA / "preference.csv"),
    }

    def uc(q: str) -> list[tuple[int, int]]:
        return sorted((p.d - p.c, p.c) for _, p in eval_uaa(db, parse_query(q)).items())

    join = "(join (= category pref) (rel food) (rel preference))"
    select = f"(select (= color 'red') {join})"
    final = {str(t[0]): (p.d - p.c, p.c) for t, p in eval_uaa(db, parse_query(f"(project (color) {select})")).items()}
    selected = {strip(t)[0]: (p.d - p.c, p.c) for t, p in eval_uaa(db, parse_query(select)).items()}
    return (
        uc(join) == [(2, 6), (4, 0), (4, 2)]
        and selected["tomato"] == (6, 0)
        and final == {"red^T": (2, 6), "red^F": (10, 0)}
    )


def _describe() -> bool:
    db = {"describe": read_annotated_csv(DATA / "describe.csv")}
    q = parse_query("(project (name (as description (|| color ' ' category))) (rel describe))")
    got = {strip(t)[0]: str(t[1]) for t in eval_uaa(db, q).tuples()}
    return got == {"apple": "red fruit^T", "carrot": "red vegetable^F", "tomato": "red fruit^F"}


def _ctable() -> bool:
    spec = json.loads((DATA / "ctable_vars.json").read_text())
    m = load_model("ctable", DATA / "ctable.csv", variables_spec=spec)
    res = eval_ua(labeled_uadb({"ctable": m}, B), RelRef("ctable"))
    oracle = oracle_certain(expand_model_to_worlds({"ctable": m}, B), RelRef("ctable"))
    return pair_relation(res, "c")[(1, 1)] is False and oracle[(1, 1)] is True


GOLDENS = {
    "certain multiplicities 2,1,0": _kwlabels,
    "address query NY=2 AZ=1": _address_bags,
    "address labels 1,4 certain; 3 missed": _address_labels,
    "food pipeline (2,6),(4,0),(4,2) -> (6,0) -> (2,6),(10,0)": _food_pipeline,
    "description labels T,F,F": _describe,
    "C-table (1,1) labeled F though certain": _ctable,
}


def criterion_goldens() -> tuple[bool, str]:
    failed = [name for name, fn in GOLDENS.items() if not fn()]
    return not failed, "failed: " + "; ".join(failed) if failed else f"{len(GOLDENS)} examples"


# -- 2. theorem suites ----------------------------------------------------------------

CASES = 500


def criterion_theorems() -> tuple[bool, str]:
    failures = []
    for name, suite in theorems.SUITES.items():
        bad = suite(CASES, 0)
        if bad:
            failures.append(f"{name}: {len(bad)} failures, first {bad[0]}")
    return not failures, "; ".join(failures) if failures else f"{len(theorems.SUITES)} suites x {CASES} cases"


# -- 3. false negative rate by projection width --------------------------------------


def criterion_fnr() -> tuple[bool, str]:
    res = fnr_experiment(rows=1000, columns=8, uncertain_rate=0.1, queries_per_width=9, seed=0)
    med = res.medians()
    ok = med[8] <= med[1] and all(r["fpr"] == 0 for r in res.runs)
    ok = ok and all(r["fnr"] == 0 for r in res.runs if r["xkey"])
    shown = " ".join(f"{w}:{m:.3f}" for w, m in sorted(med.items()))
    return ok, f"median FNR by width {shown}"


# -- 4. utility against a ground truth -----------------------------------------------


def criterion_utility() -> tuple[bool, str]:
    res = utility_experiment(rows=500, rates=(0.1, 0.3, 0.5), queries=30, seed=0)
    ok = all(
        r["certain"].precision == 1.0 and r["ua"].recall >= r["certain"].recall for r in res.values()
    )
    shown = " ".join(
        f"{rate}: recall {r['certain'].recall:.3f}/{r['ua'].recall:.3f}" for rate, r in res.items()
    )
    return ok, f"certain/best-guess {shown}"


# -- 5. access control semiring ------------------------------------------------------


def _access_laws() -> bool:
    elems = A.elements()
    for a, b, c in itertools.product(elems, repeat=3):
        if A.add(a, A.add(b, c)) != A.add(A.add(a, b), c) or A.mul(a, A.mul(b, c)) != A.mul(A.mul(a, b), c):
            return False
        if A.mul(a, A.add(b, c)) != A.add(A.mul(a, b), A.mul(a, c)):
            return False
    for a, b in itertools.product(elems, repeat=2):
        if A.add(a, b) != A.add(b, a) or A.mul(a, b) != A.mul(b, a):
            return False
        if A.add(a, A.zero) != a or A.mul(a, A.one) != a or A.mul(a, A.zero) != A.zero:
            return False
        g, l = A.glb(a, b), A.lub(a, b)
        if not (A.leq(g, a) and A.leq(g, b) and A.leq(a, l) and A.leq(b, l)):
            return False
        if A.leq(a, b) != any(A.add(a, x) == b for x in elems):
            return False
    return True


def criterion_access() -> tuple[bool, str]:
    laws = _access_laws()
    bad = theorems.access_soundness(CASES, 0)
    detail = f"axioms over 5 elements {'ok' if laws else 'FAILED'}; {CASES} projection cases, {len(bad)} unsound"
    return laws and not bad, detail


CRITERIA: list[tuple[str, Check, float]] = [
    ("1 worked examples", criterion_goldens, 1.0),
    ("2 theorem property suites", criterion_theorems, 60.0),
    ("3 FNR by projection width", criterion_fnr, 120.0),
    ("4 utility vs ground truth", criterion_utility, 60.0),
    ("5 access control semiring", criterion_access, 60.0),
]


@pytest.mark.parametrize("label,check,limit", CRITERIA, ids=[c[0] for c in CRITERIA])
def test_criterion(label, check, limit):
    ok, detail, elapsed = _timed(check)
    in_time = elapsed < limit
    if not in_time:
        detail += f" over the {limit:.0f}s limit"
    _record(label, ok and in_time, detail, elapsed)
    assert ok, detail
    assert in_time, detail


def main() -> int:
    status = 0
    for label, check, limit in CRITERIA:
        ok, detail, elapsed = _timed(check)
        if elapsed >= limit:
            ok, detail = False, detail + f" over the {limit:.0f}s limit"
        _record(label, ok, detail, elapsed)
        print(RESULTS[-1])
        status |= not ok
    return status


if __name__ == "__main__":
    sys.exit(main())
