"""Smoke tests for the python bindings: generation, execution, verification."""

import math
import sys

import varq


def test_generate_and_counts():
    db = varq.generate(0.001, seed=7)
    assert sorted(db.table_names()) == [
        "customer", "lineitem", "nation", "orders", "part", "partsupp", "region", "supplier",
    ]
    assert db.row_count("lineitem") == 6000
    assert db.row_count("nation") == 25


def test_run_query_backends_agree():
    db = varq.generate(0.001, seed=7)
    sql = "SELECT count(*) AS n, sum(l_quantity) AS q FROM lineitem WHERE l_quantity < 10"
    a = varq.run_query(db, sql, backend="pipeline")
    b = varq.run_query(db, sql, backend="imperative")
    assert a["rows"] == b["rows"]
    assert a["schema"] == [("n", "int64"), ("q", "float64")]


def test_parallel_strategies_verify():
    db = varq.generate(0.001, seed=7)
    q06 = next(e for e in varq.registry() if e["id"] == "q06")
    for strategy in ("seq", "p", "pu", "cg", "cgcc"):
        tol = 1e-9 if strategy == "seq" else 1e-6
        ok, detail = varq.verify_query(db, q06["sql"], strategy=strategy, tol=tol)
        assert ok, f"{strategy}: {detail}"


def test_micro_group_count():
    db = varq.make_micro_db("onefield", n=1000, m=7)
    sql = varq.micro_sql("onefield", m=7)
    rows = varq.run_query(db, sql)["rows"]
    assert len(rows) == 7


def test_explain_mentions_variants():
    text = varq.explain("SELECT count(*) AS n FROM lineitem WHERE l_tax >= 0 AND l_quantity >= 0", fuse=True)
    assert ".filter(" in text and "&&" in text


def test_bench_stats():
    mean, moe = varq.bench_stats([9.0, 10.0, 11.0, 10.0, 10.0])
    assert math.isclose(mean, 10.0)
    assert abs(moe - 0.878) < 1e-3
    assert math.isclose(varq.speedup(186.0, 120.0), 1.55)


def main():
    tests = [v for k, v in sorted(globals().items()) if k.startswith("test_")]
    for test in tests:
        test()
        print(f"ok {test.__name__}")
    print(f"{len(tests)} python smoke tests passed")


if __name__ == "__main__":
    sys.exit(main())
