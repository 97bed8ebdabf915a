#include <doctest.h>

#include "varq/oracle.hpp"

using namespace varq;

namespace {

Database ids_db(int64_t n, int64_t p_value) {
    Database db;
    TableData t("orders", Schema({{"id", ValueType::Int64}, {"p", ValueType::Int64}}));
    for (int64_t i = 0; i < n; ++i) t.append({Value(i), Value(p_value)});
    db.put(std::move(t));
    return db;
}

Catalog cat_of(const Database& db) { return Catalog(db); }

}  // namespace

TEST_CASE("grouped modulo sums match the hand-derived values for ids 0..9") {
    // groups of id mod 3 over 0..9: {0,3,6,9} {1,4,7} {2,5,8}; p = 1 everywhere
    Database db = ids_db(10, 1);
    auto plan = Plan::scan("orders")
                    .group_by({{mod(col("id"), lit(3)), "g"}},
                              {{AggFunc::Sum, col("p"), "sum_p"}, {AggFunc::Count, nullptr, "n"}})
                    .node();
    ResultSet rs = oracle::evaluate(validate(plan, cat_of(db)), db);
    REQUIRE(rs.rows.size() == 3);
    std::map<int64_t, std::pair<int64_t, int64_t>> got;
    for (const Record& r : rs.rows) got[r[0].as_int()] = {r[1].as_int(), r[2].as_int()};
    CHECK(got[0] == std::pair<int64_t, int64_t>{4, 4});
    CHECK(got[1] == std::pair<int64_t, int64_t>{3, 3});
    CHECK(got[2] == std::pair<int64_t, int64_t>{3, 3});
}

TEST_CASE("anti join with all probe keys matching is empty") {
    Database db;
    TableData build("b", Schema({{"k", ValueType::Int64}}));
    TableData probe("p", Schema({{"k", ValueType::Int64}}));
    for (int64_t i = 0; i < 5; ++i) {
        build.append({Value(i)});
        probe.append({Value(i % 3)});
    }
    db.put(std::move(build));
    db.put(std::move(probe));
    auto plan =
        Plan::join(JoinKind::Anti, Plan::scan("b"), Plan::scan("p"), {col("k")}, {col("k")}).node();
    ResultSet rs = oracle::evaluate(validate(plan, cat_of(db)), db);
    CHECK(rs.rows.empty());
}

TEST_CASE("left join with an empty build side pads every probe row with nulls") {
    Database db;
    TableData build("b", Schema({{"k", ValueType::Int64}, {"v", ValueType::Text}}));
    TableData probe("p", Schema({{"k", ValueType::Int64}}));
    probe.append({Value(int64_t{1})});
    probe.append({Value(int64_t{2})});
    db.put(std::move(build));
    db.put(std::move(probe));
    auto plan =
        Plan::join(JoinKind::Left, Plan::scan("b"), Plan::scan("p"), {col("k")}, {col("k")}).node();
    ResultSet rs = oracle::evaluate(validate(plan, cat_of(db)), db);
    REQUIRE(rs.rows.size() == 2);
    for (const Record& r : rs.rows) {
        REQUIRE(r.size() == 3);
        CHECK(r[0].is_null());
        CHECK(r[1].is_null());
        CHECK_FALSE(r[2].is_null());
    }
}

TEST_CASE("scalar aggregates over empty input finalize to count 0 and null extremes") {
    Database db;
    db.put(TableData("t", Schema({{"x", ValueType::Float64}})));
    auto plan = Plan::scan("t")
                    .group_by({}, {{AggFunc::Count, nullptr, "n"},
                                   {AggFunc::Sum, col("x"), "s"},
                                   {AggFunc::Avg, col("x"), "a"},
                                   {AggFunc::Min, col("x"), "lo"},
                                   {AggFunc::Max, col("x"), "hi"}})
                    .node();
    ResultSet rs = oracle::evaluate(validate(plan, cat_of(db)), db);
    REQUIRE(rs.rows.size() == 1);
    CHECK(rs.rows[0][0] == Value(int64_t{0}));
    CHECK(rs.rows[0][1].is_null());
    CHECK(rs.rows[0][2].is_null());
    CHECK(rs.rows[0][3].is_null());
    CHECK(rs.rows[0][4].is_null());
}

TEST_CASE("keyed groups exist only once at least one row arrived") {
    Database db;
    db.put(TableData("t", Schema({{"x", ValueType::Int64}})));
    auto plan = Plan::scan("t").group_by({{col("x"), "x"}}, {{AggFunc::Count, nullptr, "n"}}).node();
    ResultSet rs = oracle::evaluate(validate(plan, cat_of(db)), db);
    CHECK(rs.rows.empty());
}

namespace {

ResultSet make_rs(Schema schema, std::vector<Record> rows, Ordering ordering = {}) {
    return ResultSet{std::move(schema), std::move(rows), ordering};
}

const Schema kIF = Schema({{"k", ValueType::Int64}, {"v", ValueType::Float64}});

}  // namespace

TEST_CASE("compare: identical unordered multisets in different row order are equal") {
    ResultSet a = make_rs(kIF, {{Value(1), Value(1.0)}, {Value(2), Value(2.0)}});
    ResultSet b = make_rs(kIF, {{Value(2), Value(2.0)}, {Value(1), Value(1.0)}});
    CHECK(compare(a, b, 1e-9).equal);
    CHECK(compare(b, a, 1e-9).equal);  // symmetric
    CHECK(compare(a, a, 1e-9).equal);  // reflexive
}

TEST_CASE("compare: float fields match within relative tolerance") {
    ResultSet a = make_rs(kIF, {{Value(1), Value(100.0)}});
    ResultSet b = make_rs(kIF, {{Value(1), Value(100.0 * (1 + 1e-12))}});
    CHECK(compare(a, b, 1e-6).equal);
    ResultSet c = make_rs(kIF, {{Value(1), Value(100.1)}});
    CompareReport rep = compare(a, c, 1e-6);
    CHECK_FALSE(rep.equal);
    CHECK(rep.missing.size() == 1);
    CHECK(rep.extra.size() == 1);
}

TEST_CASE("compare: missing and extra rows are reported") {
    ResultSet a = make_rs(kIF, {{Value(1), Value(1.0)}});
    ResultSet b = make_rs(kIF, {{Value(1), Value(1.0)}, {Value(2), Value(2.0)}});
    CompareReport rep = compare(a, b, 1e-9);
    CHECK_FALSE(rep.equal);
    CHECK(rep.missing.size() == 1);
    CHECK(rep.extra.empty());
}

TEST_CASE("compare: ordered results check sortedness") {
    Ordering desc_k;
    desc_k.keys = {{0, true}};
    ResultSet expected = make_rs(kIF, {{Value(2), Value(2.0)}, {Value(1), Value(1.0)}}, desc_k);
    ResultSet sorted = make_rs(kIF, {{Value(2), Value(2.0)}, {Value(1), Value(1.0)}}, desc_k);
    CHECK(compare(sorted, expected, 1e-9).equal);
    ResultSet unsorted = make_rs(kIF, {{Value(1), Value(1.0)}, {Value(2), Value(2.0)}}, desc_k);
    CompareReport rep = compare(unsorted, expected, 1e-9);
    CHECK_FALSE(rep.equal);
    CHECK_FALSE(rep.order_violations.empty());
}

TEST_CASE("compare: boundary ties in a truncated ordered result may differ") {
    // top-2 by k desc of rows with keys [5, 5, 3]: either 5-row is acceptable
    Ordering o;
    o.keys = {{0, true}};
    o.truncated = true;
    ResultSet expected = make_rs(kIF, {{Value(5), Value(1.0)}, {Value(5), Value(2.0)}}, o);
    ResultSet actual = make_rs(kIF, {{Value(5), Value(2.0)}, {Value(5), Value(7.0)}}, o);
    CHECK(compare(actual, expected, 1e-9).equal);
    // but the key multiset must match: a 3 instead of a 5 is a mismatch
    ResultSet wrong = make_rs(kIF, {{Value(5), Value(1.0)}, {Value(3), Value(9.0)}}, o);
    CHECK_FALSE(compare(wrong, expected, 1e-9).equal);
    // and non-boundary rows must match fully
    ResultSet expected2 = make_rs(kIF, {{Value(7), Value(1.0)}, {Value(5), Value(2.0)}}, o);
    ResultSet actual2 = make_rs(kIF, {{Value(7), Value(999.0)}, {Value(5), Value(2.0)}}, o);
    CHECK_FALSE(compare(actual2, expected2, 1e-9).equal);
}

TEST_CASE("compare: schema mismatch throws") {
    ResultSet a = make_rs(kIF, {});
    ResultSet b = make_rs(Schema({{"k", ValueType::Int64}}), {});
    CHECK_THROWS_AS(compare(a, b, 1e-9), ValidateError);
}
