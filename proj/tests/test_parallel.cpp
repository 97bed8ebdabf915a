#include <doctest.h>

#include <random>

#include "varq/fused.hpp"
#include "varq/oracle.hpp"
#include "varq/suite.hpp"

using namespace varq;

namespace {

const Strategy kAll[] = {Strategy::Seq, Strategy::P, Strategy::PU, Strategy::CG, Strategy::CGCC};

GenOptions with(Strategy s, size_t chunk = 512, unsigned workers = 4) {
    GenOptions o;
    o.strategy = s;
    o.chunk_size = chunk;
    o.workers = workers;
    return o;
}

/// Closed-form per-group sum for ids 0..n-1 grouped by id % m with p = id.
void expected_mod_groups(int64_t n, int64_t m, std::vector<Record>& out) {
    for (int64_t g = 0; g < std::min(m, n); ++g) {
        int64_t c = (n - 1 - g) / m + 1;  // members: g, g+m, ..., arithmetic series
        int64_t sum = c * g + m * c * (c - 1) / 2;
        out.push_back({Value(g), Value(sum)});
    }
}

}  // namespace

TEST_CASE("group-count law: id mod m yields min(m, n) groups with closed-form sums") {
    const int64_t n = 10000;
    MicrobenchSpec spec;
    spec.kind = MicrobenchSpec::OneField;
    spec.element_count = n;
    Database db = make_micro_db(spec);

    for (int64_t m : {int64_t{1}, int64_t{7}, int64_t{100}, int64_t{10000}, int64_t{50000}}) {
        auto plan = validate(Plan::scan("orders")
                                 .group_by({{mod(col("id"), lit(m)), "g"}},
                                           {{AggFunc::Sum, col("p"), "sum_p"}})
                                 .node(),
                             Catalog(db));
        std::vector<Record> expected;
        expected_mod_groups(n, m, expected);
        ResultSet want{output_schema(plan), expected, {}};
        for (Strategy s : kAll) {
            CAPTURE(m);
            CAPTURE(strategy_name(s));
            ResultSet got = run_plan(plan, db, with(s));
            CHECK(got.rows.size() == static_cast<size_t>(std::min(m, n)));
            CHECK(compare(got, want, 0.0).equal);  // Int64 sums compare exactly
        }
    }
}

TEST_CASE("distinct cardinality is exact under every strategy") {
    MicrobenchSpec spec;
    spec.kind = MicrobenchSpec::Distinct;
    spec.element_count = 50000;
    for (int64_t d : {int64_t{1}, int64_t{10}, int64_t{1000}}) {
        spec.distinct_values = d;
        Database db = make_micro_db(spec);
        auto plan = validate(parse("SELECT DISTINCT x FROM orders", Catalog(db)), Catalog(db));
        for (Strategy s : kAll) {
            CAPTURE(d);
            CAPTURE(strategy_name(s));
            ResultSet got = run_plan(plan, db, with(s));
            CHECK(got.rows.size() == static_cast<size_t>(d));
        }
        // Seq and P agree element-wise on first-encounter order (identity here)
        ResultSet seq = run_plan(plan, db, with(Strategy::Seq));
        ResultSet p = run_plan(plan, db, with(Strategy::P));
        REQUIRE(seq.rows.size() == p.rows.size());
        for (size_t i = 0; i < seq.rows.size(); ++i) {
            CHECK(seq.rows[i] == p.rows[i]);
            CHECK(seq.rows[i][0] == Value(static_cast<int64_t>(i)));
        }
    }
}

TEST_CASE("accumulator merge is associative and commutative on the exact fields") {
    AggLayout layout;
    layout.specs = {{AggFunc::Count, nullptr, "n"},
                    {AggFunc::Sum, resolve_expr(col("x"), Schema({{"x", ValueType::Int64}})), "s"},
                    {AggFunc::Min, resolve_expr(col("x"), Schema({{"x", ValueType::Int64}})), "lo"},
                    {AggFunc::Max, resolve_expr(col("x"), Schema({{"x", ValueType::Int64}})), "hi"}};

    std::mt19937_64 rng(7);
    auto random_acc = [&] {
        GroupAccumulator acc(layout);
        size_t rows = rng() % 5;
        for (size_t i = 0; i < rows; ++i) {
            Record rec{Value(static_cast<int64_t>(rng() % 1000) - 500)};
            acc.accumulate(layout, rec);
        }
        return acc;
    };
    auto finalized = [&](const GroupAccumulator& acc) {
        Record out;
        acc.finalize(layout, out);
        return out;
    };

    for (int trial = 0; trial < 200; ++trial) {
        GroupAccumulator a = random_acc(), b = random_acc(), c = random_acc();

        GroupAccumulator ab_c(layout);
        ab_c.merge(layout, a);
        ab_c.merge(layout, b);
        ab_c.merge(layout, c);

        GroupAccumulator bc(layout);
        bc.merge(layout, b);
        bc.merge(layout, c);
        GroupAccumulator a_bc(layout);
        a_bc.merge(layout, a);
        a_bc.merge(layout, bc);

        CHECK(finalized(ab_c) == finalized(a_bc));  // associative

        GroupAccumulator ab(layout), ba(layout);
        ab.merge(layout, a);
        ab.merge(layout, b);
        ba.merge(layout, b);
        ba.merge(layout, a);
        CHECK(finalized(ab) == finalized(ba));  // commutative
    }
}

TEST_CASE("ordered parallel float sums are deterministic, unordered stay within tolerance") {
    Database db = generate({0.001, 42});
    const QueryEntry* q06 = find_query("q06");
    PlanPtr plan = validate(plan_for(*q06), Catalog(db));
    ResultSet expected = oracle::evaluate(plan, db);

    ResultSet p1 = run_plan(plan, db, with(Strategy::P, 256));
    ResultSet p2 = run_plan(plan, db, with(Strategy::P, 256));
    REQUIRE(p1.rows.size() == 1);
    CHECK(p1.rows[0][0] == p2.rows[0][0]);  // chunk-order merge: bit-identical reruns

    for (Strategy s : {Strategy::PU, Strategy::CG, Strategy::CGCC}) {
        CAPTURE(strategy_name(s));
        ResultSet got = run_plan(plan, db, with(s, 256));
        CHECK(compare(got, expected, kParFloatTol).equal);
    }
}

TEST_CASE("cg and cgcc degrade to pu with a notice when nothing is grouped or distinct") {
    Database db = generate({0.001, 42});
    auto plan = validate(Plan::scan("nation").filter(ge(col("n_nationkey"), lit(0))).node(), Catalog(db));
    for (Strategy s : {Strategy::CG, Strategy::CGCC}) {
        Pipeline p = compile(plan, with(s));
        CHECK(p.strategy == Strategy::PU);
        CHECK_FALSE(p.notice.empty());
        ResultSet rs = run(p, db);  // still executes correctly
        CHECK(rs.rows.size() == 25);
    }
    // with a grouping present the strategy is honored
    auto grouped = validate(
        Plan::scan("nation").group_by({{col("n_regionkey"), "r"}}, {{AggFunc::Count, nullptr, "n"}}).node(),
        Catalog(db));
    Pipeline p = compile(grouped, with(Strategy::CG));
    CHECK(p.strategy == Strategy::CG);
    CHECK(p.notice.empty());
}

TEST_CASE("empty inputs produce sane results under every strategy") {
    Database db;
    db.put(TableData("t", Schema({{"x", ValueType::Int64}})));
    Catalog cat(db);
    auto scalar = validate(Plan::scan("t").group_by({}, {{AggFunc::Count, nullptr, "n"},
                                                         {AggFunc::Max, col("x"), "m"}})
                               .node(),
                           cat);
    auto keyed = validate(
        Plan::scan("t").group_by({{col("x"), "x"}}, {{AggFunc::Count, nullptr, "n"}}).node(), cat);
    auto plain = validate(Plan::scan("t").distinct().node(), cat);
    for (Strategy s : kAll) {
        CAPTURE(strategy_name(s));
        ResultSet sc = run_plan(scalar, db, with(s));
        REQUIRE(sc.rows.size() == 1);
        CHECK(sc.rows[0][0] == Value(int64_t{0}));
        CHECK(sc.rows[0][1].is_null());
        CHECK(run_plan(keyed, db, with(s)).rows.empty());
        CHECK(run_plan(plain, db, with(s)).rows.empty());
    }
}

TEST_CASE("tiny chunks and many workers still match the oracle") {
    Database db = generate({0.0005, 9});
    const QueryEntry* example = find_query("example");
    PlanPtr plan = validate(plan_for(*example), Catalog(db));
    ResultSet expected = oracle::evaluate(plan, db);
    for (Strategy s : {Strategy::P, Strategy::PU, Strategy::CG, Strategy::CGCC}) {
        CAPTURE(strategy_name(s));
        ResultSet got = run_plan(plan, db, with(s, 16, 8));
        CHECK(compare(got, expected, kParFloatTol).equal);
    }
}

TEST_CASE("left, semi, and anti joins match the oracle under every strategy") {
    Database db;
    TableData build("dims", Schema({{"k", ValueType::Int64}, {"label", ValueType::Text}}));
    for (int64_t i = 0; i < 40; i += 2) build.append({Value(i), Value("d" + std::to_string(i))});
    TableData probe("facts", Schema({{"fk", ValueType::Int64}, {"v", ValueType::Int64}}));
    for (int64_t i = 0; i < 5000; ++i) probe.append({Value(i % 60), Value(i)});
    db.put(std::move(build));
    db.put(std::move(probe));
    Catalog cat(db);

    for (JoinKind kind : {JoinKind::Left, JoinKind::Semi, JoinKind::Anti, JoinKind::Inner}) {
        CAPTURE(join_kind_name(kind));
        Plan joined = Plan::join(kind, Plan::scan("dims"), Plan::scan("facts"), {col("k")}, {col("fk")});
        // aggregate so grouped terminals (and CG/CGCC) are exercised too
        auto plan = validate(
            joined.group_by({{col("fk"), "fk"}}, {{AggFunc::Count, nullptr, "n"}}).node(), cat);
        ResultSet expected = oracle::evaluate(plan, db);
        for (Strategy s : kAll) {
            CAPTURE(strategy_name(s));
            ResultSet got = run_plan(plan, db, with(s, 256));
            CHECK(compare(got, expected, kParFloatTol).equal);
        }
        ResultSet fused = run_plan_fused(plan, db);
        CHECK(compare(fused, expected, kSeqFloatTol).equal);
    }
}

TEST_CASE("join builds can be forced sequential while the query stays parallel") {
    Database db = generate({0.001, 42});
    const QueryEntry* example = find_query("example");
    PlanPtr plan = validate(plan_for(*example), Catalog(db));

    GenOptions opt = with(Strategy::CGCC, 128);
    opt.sequential_build = true;
    Pipeline p = compile(plan, opt);
    size_t builds = 0;
    for (const PipelineUnit& u : p.units) {
        if (u.terminal.kind == TerminalKind::BuildJoinMap) {
            ++builds;
            CHECK(u.strategy == Strategy::Seq);
        } else {
            CHECK(u.strategy == Strategy::CGCC);
        }
    }
    CHECK(builds >= 1);

    ResultSet expected = oracle::evaluate(plan, db);
    CHECK(compare(run(p, db), expected, kParFloatTol).equal);
}

TEST_CASE("standalone limits behave under parallel strategies") {
    Database db;
    TableData t("t", Schema({{"x", ValueType::Int64}}));
    for (int64_t x = 0; x < 1000; ++x) t.append({Value(x)});
    db.put(std::move(t));
    auto plan = validate(Plan::scan("t").limit(7).node(), Catalog(db));
    // ordered parallel: exactly the first 7 in encounter order
    ResultSet p = run_plan(plan, db, with(Strategy::P, 64));
    REQUIRE(p.rows.size() == 7);
    for (int64_t i = 0; i < 7; ++i) CHECK(p.rows[i][0] == Value(i));
    // unordered: any 7 distinct source elements
    ResultSet pu = run_plan(plan, db, with(Strategy::PU, 64));
    CHECK(pu.rows.size() == 7);
}

TEST_CASE("sort ties break by source order under every strategy") {
    Database db;
    TableData t("t", Schema({{"k", ValueType::Int64}, {"tag", ValueType::Int64}}));
    for (int64_t i = 0; i < 1000; ++i) t.append({Value(i % 3), Value(i)});
    db.put(std::move(t));
    auto plan = validate(Plan::scan("t").sort({{col("k"), false}}).node(), Catalog(db));
    ResultSet seq = run_plan(plan, db, with(Strategy::Seq));
    for (Strategy s : {Strategy::P, Strategy::PU}) {
        CAPTURE(strategy_name(s));
        ResultSet got = run_plan(plan, db, with(s, 64));
        REQUIRE(got.rows.size() == seq.rows.size());
        for (size_t i = 0; i < got.rows.size(); ++i) CHECK(got.rows[i] == seq.rows[i]);
    }
}
