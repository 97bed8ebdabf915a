#include <doctest.h>

#include <map>
#include <set>

#include "varq/oracle.hpp"
#include "varq/suite.hpp"

using namespace varq;

TEST_CASE("registry ships the documented ten entries") {
    std::vector<std::string> ids;
    for (const QueryEntry& e : registry()) ids.push_back(e.id);
    std::vector<std::string> expected = {"q01",     "q03",   "q06",      "q09",      "q18",
                                         "example", "pred7", "distinct", "onefield", "manyfields"};
    CHECK(ids == expected);

    CHECK(find_query("q01")->description.find("low-cardinality grouped aggregation") != std::string::npos);
    CHECK(find_query("q06")->description.find("scalar aggregate") != std::string::npos);
    CHECK(find_query("q06")->description.find("predicate") != std::string::npos);
    CHECK(find_query("q18")->description.find("high-cardinality grouped aggregation") != std::string::npos);
    CHECK(find_query("missing") == nullptr);
}

TEST_CASE("every registry entry parses and validates against its catalog") {
    for (const QueryEntry& e : registry()) {
        CAPTURE(e.id);
        PlanPtr plan = plan_for(e);
        PlanPtr validated = validate(plan, catalog_for(e));
        CHECK(validated->validated);
        CHECK(output_schema(validated).size() >= 1);
    }
}

TEST_CASE("micro databases honor their cardinality contracts") {
    MicrobenchSpec d;
    d.kind = MicrobenchSpec::Distinct;
    d.element_count = 10;
    d.distinct_values = 3;
    Database db = make_micro_db(d);
    const TableData& t = db.table("orders");
    REQUIRE(t.row_count() == 10);
    // first occurrences in deterministic order 0,1,2
    CHECK(t.row(0)[0] == Value(int64_t{0}));
    CHECK(t.row(1)[0] == Value(int64_t{1}));
    CHECK(t.row(2)[0] == Value(int64_t{2}));
    std::set<int64_t> values;
    for (size_t i = 0; i < t.row_count(); ++i) values.insert(t.row(i)[0].as_int());
    CHECK(values.size() == 3);
}

TEST_CASE("onefield over ten ids groups as 4/3/3, modulo one gives a single group") {
    MicrobenchSpec spec;
    spec.kind = MicrobenchSpec::OneField;
    spec.element_count = 10;
    spec.modulo = 3;
    Database db = make_micro_db(spec);
    auto plan = validate(Plan::scan("orders")
                             .group_by({{mod(col("id"), lit(int64_t{3})), "g"}},
                                       {{AggFunc::Count, nullptr, "n"}})
                             .node(),
                         Catalog(db));
    ResultSet rs = oracle::evaluate(plan, db);
    REQUIRE(rs.rows.size() == 3);
    std::map<int64_t, int64_t> counts;
    for (const Record& r : rs.rows) counts[r[0].as_int()] = r[1].as_int();
    CHECK(counts[0] == 4);
    CHECK(counts[1] == 3);
    CHECK(counts[2] == 3);

    spec.modulo = 1;
    Database db1 = make_micro_db(spec);
    PlanPtr m1 = validate(parse(micro_query_sql(spec), Catalog(db1)), Catalog(db1));
    ResultSet one = run_plan(m1, db1, GenOptions{});
    REQUIRE(one.rows.size() == 1);
}

TEST_CASE("micro spec invariants are enforced") {
    MicrobenchSpec bad;
    bad.kind = MicrobenchSpec::Distinct;
    bad.element_count = 10;
    bad.distinct_values = 11;  // D > N
    CHECK_THROWS_AS(make_micro_db(bad), ConfigError);
    bad.distinct_values = 0;
    CHECK_THROWS_AS(make_micro_db(bad), ConfigError);
    MicrobenchSpec m;
    m.kind = MicrobenchSpec::OneField;
    m.modulo = 0;
    CHECK_THROWS_AS(make_micro_db(m), ConfigError);
    MicrobenchSpec p;
    p.kind = MicrobenchSpec::Pred7;
    CHECK_THROWS_AS(make_micro_db(p), ConfigError);
}

TEST_CASE("render_plan shows one fused filter with seven conjuncts or seven filter stages") {
    const QueryEntry* pred7 = find_query("pred7");
    PlanPtr plan = validate(plan_for(*pred7), tpch_catalog());

    GenOptions fused;
    fused.fuse_filters = true;
    std::string fused_text = render_plan(plan, fused);
    size_t filter_lines = 0, and_count = 0;
    for (size_t pos = 0; (pos = fused_text.find(".filter(", pos)) != std::string::npos; ++pos) ++filter_lines;
    for (size_t pos = 0; (pos = fused_text.find("&&", pos)) != std::string::npos; ++pos) ++and_count;
    CHECK(filter_lines == 1);
    CHECK(and_count == 6);  // 7 predicates joined by 6 &&

    std::string chained = render_plan(plan, GenOptions{});
    filter_lines = 0;
    for (size_t pos = 0; (pos = chained.find(".filter(", pos)) != std::string::npos; ++pos) ++filter_lines;
    CHECK(filter_lines == 7);
    CHECK(chained.find("&&") == std::string::npos);
}

TEST_CASE("render_plan labels multi-emit join probes") {
    const QueryEntry* example = find_query("example");
    PlanPtr plan = validate(plan_for(*example), tpch_catalog());
    GenOptions multi;
    multi.multi_emit_join = true;
    std::string text = render_plan(plan, multi);
    CHECK(text.find("multi-emit") != std::string::npos);
    CHECK(text.find(".mapMulti(") != std::string::npos);
    std::string flat = render_plan(plan, GenOptions{});
    CHECK(flat.find("multi-emit") == std::string::npos);
    CHECK(flat.find(".flatMap(") != std::string::npos);
}

TEST_CASE("render_plan is deterministic") {
    const QueryEntry* q03 = find_query("q03");
    PlanPtr plan = validate(plan_for(*q03), tpch_catalog());
    CHECK(render_plan(plan, GenOptions{}) == render_plan(plan, GenOptions{}));
}
