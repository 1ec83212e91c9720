import json

import pytest

from uadb.cli import BUDGET_ENV, main

FIG_QUERY = (
    "(project (id locale state) (join (and (>= lat lat_lo) (<= lat lat_hi) (>= lon lon_lo) (<= lon lon_hi))"
    " (rel ADDR) (rel LOC)))"
)
FOOD_QUERY = "(project (color) (select (= color 'red') (join (= category pref) (rel food) (rel preference))))"


@pytest.fixture
def run(capsys):
    def go(*argv):
        code = main([str(a) for a in argv])
        out, err = capsys.readouterr()
        return code, out, err

    return go


def address_inputs(data_dir):
    return ["--model", "xdb", "-i", f"ADDR={data_dir / 'addr.csv'}", "--certain", f"LOC={data_dir / 'loc.csv'}"]


def test_label_address_xdb(run, data_dir):
    code, out, _ = run("label", "--model", "xdb", data_dir / "addr.csv", "--semiring", "B")
    assert code == 0
    doc = json.loads(out)
    rows = doc["relations"]["addr"]["rows"]
    assert [(r["values"][0], r["c"]) for r in rows] == [(1, True), (2, False), (3, False), (4, True)]


def test_label_certain_ti_is_all_certain(run, data_dir, tmp_path):
    out_path = tmp_path / "ua.json"
    code, _, _ = run("label", "--model", "ti", data_dir / "address.csv", "-o", out_path)
    assert code == 0
    rows = json.loads(out_path.read_text())["relations"]["address"]["rows"]
    assert all(r["d"] == 1 and r["c"] == 1 for r in rows)


def test_address_query_flags(run, data_dir):
    code, out, _ = run("query", *address_inputs(data_dir), "--format", "json", FIG_QUERY)
    assert code == 0
    rows = json.loads(out)["rows"]
    got = {r["values"][0]: (r["values"][1], r["d"] - r["c"], r["c"]) for r in rows}
    assert got == {
        1: ("Lasalle", 0, 1),
        2: ("Grant Ferry", 1, 0),
        3: ("Kingsley", 1, 0),
        4: ("Kensington", 0, 1),
    }


def test_address_query_table_and_csv(run, data_dir):
    code, out, _ = run("query", *address_inputs(data_dir), FIG_QUERY)
    assert code == 0 and "(u,c)" in out.splitlines()[0]
    code, out, _ = run("query", *address_inputs(data_dir), "--format", "csv", FIG_QUERY)
    assert out.splitlines()[1] == "1,Lasalle,NY,0,1"


def test_verify_address(run, data_dir):
    code, out, _ = run("verify", *address_inputs(data_dir), "--format", "json", FIG_QUERY)
    assert code == 0
    rep = json.loads(out)
    assert (rep["certain"], rep["labeled"], rep["false_positive_rate"]) == (3, 2, 0.0)
    assert rep["false_negative_rate"] == pytest.approx(1 / 3)


def test_verify_ctable(run, data_dir):
    code, out, _ = run(
        "verify", "--model", "ctable", "--vars", data_dir / "ctable_vars.json", "-i", data_dir / "ctable.csv",
        "--format", "json", "(rel ctable)",
    )
    assert code == 0
    rep = json.loads(out)
    assert (rep["certain"], rep["labeled"], rep["false_negative_rate"]) == (1, 0, 1.0)


def test_verify_ti_has_no_false_negatives(run, data_dir):
    code, out, _ = run("verify", "--model", "ti", "-i", data_dir / "produce.csv", "(project (color) (rel produce))")
    assert code == 0
    assert "false_negative_rate: 0.0" in out


def test_bag_query_over_certain_tables(run, data_dir):
    code, out, _ = run(
        "query", "--model", "ti", "--certain", data_dir / "address.csv", "--certain", data_dir / "neighborhood.csv",
        "--format", "csv", "(project (state) (join (= address.l neighborhood.l) (rel address) (rel neighborhood)))",
    )
    assert code == 0
    assert out.splitlines() == ["state,u,c", "AZ,0,1", "NY,0,2"]


def test_attribute_level_query(run, data_dir):
    code, out, _ = run(
        "query", "--mode", "uaa", "-i", data_dir / "food.csv", "-i", data_dir / "preference.csv",
        "--format", "json", FOOD_QUERY,
    )
    assert code == 0
    rows = json.loads(out)["rows"]
    got = {(r["values"][0]["value"], r["values"][0]["det"]): (r["u"], r["c"]) for r in rows}
    assert got == {("red", True): (2, 6), ("red", False): (10, 0)}


def test_attribute_level_over_xdb(run, data_dir):
    code, out, _ = run("query", "--mode", "uaa", "--model", "xdb", "-i", data_dir / "addr.csv", "--format", "csv",
                       "(project (id lat) (rel addr))")
    assert code == 0
    assert out.splitlines()[1:3] == ["1,42.93,0,1", "2,42.91!u,0,1"]


def test_emit_sql(run):
    code, out, _ = run("query", "--emit-sql", "(join (= R.b S.b) (rel R) (rel S))")
    assert code == 0
    assert out.strip() == "SELECT Q1.*, Q2.*, Q1.C*Q2.C AS C FROM R Q1, S Q2 WHERE Q1.b = Q2.b"


def test_rewrite(run):
    code, out, _ = run("rewrite", "(project (a) (join (= R.b S.b) (rel R) (rel S)))")
    assert code == 0
    assert out.strip() == "(project (a C) (flagmin (join (= R.b S.b) (rel R) (rel S))))"
    code, out, _ = run("rewrite", "--labeling", "xdb", "--table", "ADDR", "--attrs", "id", "lat")
    assert code == 0 and "PARTITION BY Xid ORDER BY P DESC, Aid ASC" in out


def test_db_round_trip(run, data_dir, tmp_path):
    db = tmp_path / "addr.json"
    assert run("label", "--model", "xdb", data_dir / "addr.csv", "-o", db)[0] == 0
    code, out, _ = run("query", "--db", db, "--format", "csv", "(project (id) (rel addr))")
    assert code == 0
    assert out.splitlines() == ["id,u,c", "1,0,1", "2,1,0", "3,1,0", "4,0,1"]


def test_experiments(run):
    code, out, _ = run("experiment", "fnr", "--rows", "100", "--columns", "3", "--queries", "2", "--format", "json")
    assert code == 0
    assert set(json.loads(out)["by_width"]) == {"1", "2", "3"}
    code, out, _ = run("experiment", "utility", "--rows", "100", "--rates", "0.3", "--queries", "5")
    assert code == 0 and "certain" in out


@pytest.mark.parametrize(
    "argv",
    [
        [],
        ["query"],
        ["query", "(rel R"],
        ["verify", "(rel R)"],
        ["query", "--model", "ti", "-i", "missing.csv", "(rel missing)"],
        ["rewrite"],
        ["rewrite", "--labeling", "ti"],
        ["experiment", "utility", "--rates", "x"],
    ],
)
def test_usage_and_input_errors_exit_1(run, argv):
    code, _, err = run(*argv)
    assert code == 1
    assert "error" in err


def test_bad_probability_exits_1(run, tmp_path):
    p = tmp_path / "t.csv"
    p.write_text("a,P\n1,1.5\n")
    code, _, err = run("label", "--model", "ti", p)
    assert code == 1 and "t.csv:2" in err


def test_budget(run, data_dir, monkeypatch):
    monkeypatch.setenv(BUDGET_ENV, "1")
    code, _, err = run("verify", *address_inputs(data_dir), FIG_QUERY)
    assert code == 1 and "budget" in err
    monkeypatch.setenv(BUDGET_ENV, "lots")
    assert run("verify", *address_inputs(data_dir), FIG_QUERY)[0] == 1


def test_sandwich_violation_exits_2(run, tmp_path):
    db = tmp_path / "bad.json"
    db.write_text(json.dumps({"semiring": "N", "relations": {"R": {"schema": ["a"], "rows": [{"values": [1], "d": 1, "c": 2}]}}}))
    code, _, err = run("query", "--db", db, "(rel R)")
    assert code == 2 and "invariant" in err
