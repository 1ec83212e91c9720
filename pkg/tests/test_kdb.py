import json

import pytest

from uadb.expr import Attr, Compare, Const
from uadb.kdb import (
    CrossProduct,
    FlagMinProject,
    Join,
    KdbError,
    KRelation,
    Project,
    QueryError,
    RelRef,
    Schema,
    SchemaError,
    Select,
    Union,
    depth,
    eval_query,
    from_json,
    map_annotations,
    parse_cell,
    pretty,
    read_csv,
    relations_of,
    schema_of,
    support,
    to_json,
)
from uadb.semirings import B, N

R = Schema.base("R", ["a", "b"])
S = Schema.base("S", ["b", "c"])


def test_zeros_are_dropped_and_duplicates_summed():
    r = KRelation(R, N, [((1, 2), 2), ((1, 2), 3), ((2, 2), 0)])
    assert r.as_dict() == {(1, 2): 5}
    assert r[(2, 2)] == 0
    assert len(r) == 1


def test_tuples_are_sorted_across_types():
    r = KRelation(Schema.base("T", ["x"]), B, [(("b",), True), ((2,), True), ((None,), True)])
    assert r.tuples() == [(None,), (2,), ("b",)]


def test_arity_and_membership_checked():
    with pytest.raises(SchemaError):
        KRelation(R, N, [((1,), 1)])
    with pytest.raises(KdbError):
        KRelation(R, N, [((1, 2), -1)])


def test_schema_references():
    s = R.concat(S)
    assert s.resolve("a") == 0
    assert s.resolve("S.b") == 2
    assert s.resolve("#3") == 3
    assert s.names() == ["a", "R.b", "S.b", "c"]
    with pytest.raises(SchemaError, match="ambiguous"):
        s.resolve("b")
    with pytest.raises(SchemaError):
        s.resolve("#4")
    with pytest.raises(SchemaError):
        Schema.base("T", ["x", "x"])


def test_address_query_over_bags(data_dir):
    address = read_csv(data_dir / "address.csv", N)
    neighborhood = read_csv(data_dir / "neighborhood.csv", N)
    q = Project(
        ("state",),
        Join(Compare("=", Attr("address.l"), Attr("neighborhood.l")), RelRef("address"), RelRef("neighborhood")),
    )
    res = eval_query({"address": address, "neighborhood": neighborhood}, q)
    assert res.as_dict() == {("AZ",): 1, ("NY",): 2}
    # same query over sets
    to_b = {n: map_annotations(r, support, B) for n, r in {"address": address, "neighborhood": neighborhood}.items()}
    assert eval_query(to_b, q).as_dict() == {("AZ",): True, ("NY",): True}


def test_operators_follow_semiring_arithmetic():
    db = {
        "R": KRelation(R, N, [((1, 1), 2), ((2, 1), 3)]),
        "S": KRelation(S, N, [((1, 5), 4)]),
    }
    join = eval_query(db, Join(Compare("=", Attr("R.b"), Attr("S.b")), RelRef("R"), RelRef("S")))
    assert join.as_dict() == {(1, 1, 1, 5): 8, (2, 1, 1, 5): 12}
    proj = eval_query(db, Project(("b",), RelRef("R")))
    assert proj.as_dict() == {(1,): 5}
    union = eval_query(db, Union(Project(("b",), RelRef("R")), Project(("b",), RelRef("S"))))
    assert union.as_dict() == {(1,): 9}
    sel = eval_query(db, Select(Compare(">", Attr("a"), Const(1)), RelRef("R")))
    assert sel.as_dict() == {(2, 1): 3}
    cross = eval_query(db, CrossProduct(RelRef("R"), RelRef("S")))
    assert len(cross) == 2 and cross[(1, 1, 1, 5)] == 8


def test_flagmin_takes_the_smaller_flag():
    schema = {"T": Schema.base("T", ["x", "C"]), "U": Schema.base("U", ["y", "C"])}
    db = {
        "T": KRelation(schema["T"], N, [((1, 1), 1)]),
        "U": KRelation(schema["U"], N, [((2, 0), 1)]),
    }
    res = eval_query(db, FlagMinProject(CrossProduct(RelRef("T"), RelRef("U"))))
    assert res.schema.attributes == ("x", "y", "C")
    assert res.as_dict() == {(1, 2, 0): 1}


def test_static_errors():
    schemas = {"R": R, "S": S}
    with pytest.raises(QueryError):
        schema_of(RelRef("Z"), schemas)
    with pytest.raises(SchemaError):
        schema_of(Union(RelRef("R"), RelRef("S")), schemas)
    with pytest.raises(SchemaError):
        schema_of(Select(Compare("=", Attr("zz"), Const(1)), RelRef("R")), schemas)
    with pytest.raises(QueryError):
        Project((), RelRef("R"))
    with pytest.raises(SchemaError):
        schema_of(FlagMinProject(RelRef("R")), schemas)


def test_mixed_semirings_rejected():
    db = {"R": KRelation(R, N, []), "S": KRelation(S, B, [])}
    with pytest.raises(KdbError):
        eval_query(db, RelRef("R"))


def test_query_shape_helpers():
    q = Join(Const(True), Project(("a",), RelRef("R")), RelRef("R"))
    assert relations_of(q) == ["R", "R"]
    assert depth(q) == 2
    assert depth(RelRef("R")) == 0


def test_cells_and_json(tmp_path):
    assert parse_cell("") is None
    assert parse_cell("3") == 3
    assert parse_cell("3.5") == 3.5
    assert parse_cell("x") == "x"
    r = KRelation(R, N, [((1, "x"), 2), ((None, 2.5), 1)])
    back = from_json(json.loads(json.dumps(to_json(r))), N)
    assert back == r
    assert "K" in pretty(r).splitlines()[0]


def test_read_csv_annotation_column(tmp_path):
    p = tmp_path / "t.csv"
    p.write_text("a,b,k\n1,2,3\n1,2,1\n")
    r = read_csv(p, N, annotation="k")
    assert r.as_dict() == {(1, 2): 4}
    p.write_text("a,b\n1\n")
    with pytest.raises(KdbError):
        read_csv(p, N)
