// Acceptance suite: one pass/fail line per criterion, nonzero exit on failure.
// The trend criterion is opt-in (--assert-trends) because it is hardware-
// sensitive and needs at least 8 hardware threads.

#include <chrono>
#include <cmath>
#include <cstring>
#include <iostream>

#include "varq/bench.hpp"

using namespace varq;

namespace {

int failures = 0;

void report(const std::string& name, bool pass, const std::string& detail) {
    std::cout << (pass ? "PASS" : "FAIL") << "  " << name;
    if (!detail.empty()) std::cout << "  (" << detail << ")";
    std::cout << std::endl;
    if (!pass) ++failures;
}

void skip(const std::string& name, const std::string& why) {
    std::cout << "SKIP  " << name << "  (" << why << ")" << std::endl;
}

template <typename F>
void criterion(const std::string& name, F&& body) {
    try {
        body();
    } catch (const std::exception& e) {
        report(name, false, std::string("exception: ") + e.what());
    }
}

GenOptions with(Strategy s) {
    GenOptions o;
    o.strategy = s;
    return o;
}

const Strategy kAll[] = {Strategy::Seq, Strategy::P, Strategy::PU, Strategy::CG, Strategy::CGCC};

// --- criterion 1: differential matrix ---------------------------------------

void differential_matrix() {
    auto start = std::chrono::steady_clock::now();
    std::vector<VerifyOutcome> outcomes = verify_matrix(0.01, 42, nullptr);
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    size_t bad = 0;
    std::string first_detail;
    for (const VerifyOutcome& o : outcomes) {
        if (!o.equal) {
            if (bad == 0) first_detail = o.query + " " + o.backend + " " + o.options.describe() + ": " + o.detail;
            ++bad;
        }
    }
    std::string detail = std::to_string(outcomes.size()) + " variants, " + std::to_string(secs) + "s";
    if (bad) detail += "; first failure: " + first_detail;
    report("criterion 1: differential matrix (sf=0.01, all variants vs oracle)", bad == 0 && secs < 300.0,
           detail);
}

// --- criterion 2: group-count law --------------------------------------------

void group_count_law() {
    const int64_t n = 100000;
    MicrobenchSpec spec;
    spec.kind = MicrobenchSpec::OneField;
    spec.element_count = n;
    Database db = make_micro_db(spec);
    Catalog cat(db);

    bool ok = true;
    std::string detail;
    for (int64_t m : {int64_t{1}, int64_t{2}, int64_t{10}, int64_t{500}, int64_t{100000}, int64_t{500000}}) {
        auto plan = validate(Plan::scan("orders")
                                 .group_by({{mod(col("id"), lit(m)), "g"}},
                                           {{AggFunc::Sum, col("p"), "sum_p"}})
                                 .node(),
                             cat);
        // closed-form oracle: group g holds the arithmetic series g, g+m, ...
        std::vector<Record> rows;
        for (int64_t g = 0; g < std::min(m, n); ++g) {
            int64_t c = (n - 1 - g) / m + 1;
            rows.push_back({Value(g), Value(c * g + m * c * (c - 1) / 2)});
        }
        ResultSet expected{output_schema(plan), std::move(rows), {}};
        for (Strategy s : kAll) {
            ResultSet got = run_plan(plan, db, with(s));
            if (got.rows.size() != static_cast<size_t>(std::min(m, n)) ||
                !compare(got, expected, 0.0).equal) {
                ok = false;
                detail = "m=" + std::to_string(m) + " strategy=" + strategy_name(s);
                break;
            }
        }
        if (!ok) break;
    }
    report("criterion 2: group-count law, closed-form sums (n=100000)", ok, detail);
}

// --- criterion 3: distinct laws ----------------------------------------------

void distinct_laws() {
    const int64_t n = 1000000;
    bool ok = true;
    std::string detail;
    for (int64_t d : {int64_t{1}, int64_t{10}, int64_t{1000}, int64_t{100000}}) {
        MicrobenchSpec spec;
        spec.kind = MicrobenchSpec::Distinct;
        spec.element_count = n;
        spec.distinct_values = d;
        Database db = make_micro_db(spec);
        Catalog cat(db);
        PlanPtr plan = validate(parse("SELECT DISTINCT x FROM orders", cat), cat);

        std::vector<Record> seq_rows;
        for (Strategy s : kAll) {
            ResultSet got = run_plan(plan, db, with(s));
            if (got.rows.size() != static_cast<size_t>(d)) {
                ok = false;
                detail = "cardinality d=" + std::to_string(d) + " strategy=" + strategy_name(s) + " got " +
                         std::to_string(got.rows.size());
                break;
            }
            if (s == Strategy::Seq) seq_rows = got.rows;
            if (s == Strategy::P && got.rows != seq_rows) {
                ok = false;
                detail = "first-encounter order diverged at d=" + std::to_string(d);
                break;
            }
        }
        if (!ok) break;
    }
    report("criterion 3: distinct cardinality and ordered first-encounter law (n=1e6)", ok, detail);
}

// --- criterion 4: O1/O2 semantics ---------------------------------------------

void o1_o2_semantics() {
    Database db = generate({0.01, 42});
    Catalog cat(db);

    // 4a: instrumented predicate counts, chained vs fused, selective predicates
    std::vector<std::shared_ptr<std::atomic<int64_t>>> counters;
    std::vector<ExprPtr> preds;
    auto counted_pred = [&](ExprPtr e) {
        counters.push_back(std::make_shared<std::atomic<int64_t>>(0));
        preds.push_back(counted(std::move(e), counters.back()));
    };
    counted_pred(ge(col("l_quantity"), lit(10.0)));
    counted_pred(ge(col("l_discount"), lit(0.02)));
    counted_pred(ge(col("l_tax"), lit(0.02)));
    counted_pred(ge(col("l_partkey"), lit(50)));
    counted_pred(ge(col("l_extendedprice"), lit(2000.0)));
    counted_pred(ge(col("l_suppkey"), lit(3)));
    counted_pred(ge(col("l_orderkey"), lit(100)));
    PlanPtr plan = validate(
        Plan::scan("lineitem").filter(preds).group_by({}, {{AggFunc::Count, nullptr, "n"}}).node(), cat);

    auto snapshot = [&] {
        std::vector<int64_t> out;
        for (auto& c : counters) {
            out.push_back(c->load());
            c->store(0);
        }
        return out;
    };
    ResultSet chained_rs = run_plan(plan, db, GenOptions{});
    std::vector<int64_t> chained_counts = snapshot();
    GenOptions fused_opt;
    fused_opt.fuse_filters = true;
    ResultSet fused_rs = run_plan(plan, db, fused_opt);
    std::vector<int64_t> fused_counts = snapshot();

    bool counts_ok = chained_counts == fused_counts && chained_rs.rows == fused_rs.rows;
    // sanity: the predicates are genuinely selective, later ones run less often
    counts_ok = counts_ok && chained_counts.front() == int64_t(db.table("lineitem").row_count()) &&
                chained_counts.back() < chained_counts.front();

    // 4b: flat-emit vs multi-emit element-wise identical under Seq
    PlanPtr example = validate(plan_for(*find_query("example")), cat);
    ResultSet flat = run_plan(example, db, GenOptions{});
    GenOptions multi;
    multi.multi_emit_join = true;
    ResultSet multi_rs = run_plan(example, db, multi);
    bool emit_ok = flat.rows == multi_rs.rows && !flat.rows.empty();

    std::string detail = "counts[0]=" + std::to_string(chained_counts.empty() ? 0 : chained_counts[0]) +
                         " counts[6]=" + std::to_string(chained_counts.size() < 7 ? 0 : chained_counts[6]) +
                         ", example rows=" + std::to_string(flat.rows.size());
    report("criterion 4: O1 evaluation-count identity and O2 emission identity", counts_ok && emit_ok, detail);
}

// --- criterion 5: exact Seq-vs-fused equality ---------------------------------

void seq_fused_exact() {
    Database tpch = generate({0.01, 42});
    bool ok = true;
    std::string detail;
    for (const QueryEntry& e : registry()) {
        Database micro_db;
        const Database* db = &tpch;
        if (e.micro) {
            micro_db = database_for(e, 0.01, 42);
            db = &micro_db;
        }
        PlanPtr plan = validate(plan_for(e), Catalog(*db));
        ResultSet seq = run_plan(plan, *db, GenOptions{});
        ResultSet fused = run_fused(compile_fused(plan), *db);
        if (seq.rows != fused.rows) {  // element-wise, Float64 bit-for-bit
            ok = false;
            detail = e.id;
            break;
        }
    }
    report("criterion 5: Seq pipeline and imperative backend agree byte-for-byte", ok, detail);
}

// --- criterion 6: harness statistics ------------------------------------------

void harness_statistics() {
    std::vector<double> xs = {9, 10, 11, 10, 10};
    double mean = mean_of(xs);
    double moe = margin_of_error(xs);
    bool stats_ok = std::fabs(mean - 10.0) < 1e-12 && std::fabs(moe - 0.878) < 1e-3;
    double ratio = speedup(186.0, 120.0);
    bool speedup_ok = std::fabs(ratio - 1.55) <= 0.005;
    report("criterion 6: harness statistics (t-interval and speedup)", stats_ok && speedup_ok,
           "mean=" + std::to_string(mean) + " moe=" + std::to_string(moe) + " speedup=" + std::to_string(ratio));
}

// --- criterion 7: opt-in trend assertions --------------------------------------

double best_of_3_ms(const QueryEntry& entry, const Database& db, Strategy s) {
    GenOptions opt = with(s);
    BenchConfig config{1, 1, 1.0};
    double best = std::numeric_limits<double>::infinity();
    for (int i = 0; i < 3; ++i) {
        BenchResult r = run_bench(entry, "pipeline", opt, db, config, "trend");
        best = std::min(best, r.mean_ms);
    }
    return best;
}

void trend_assertions(bool enabled) {
    const char* name = "criterion 7: contention trends (opt-in)";
    if (!enabled) {
        skip(name, "pass --assert-trends to enable; hardware-sensitive");
        return;
    }
    unsigned hw = std::thread::hardware_concurrency();
    if (hw < 8) {
        skip(name, "requires >= 8 hardware threads, have " + std::to_string(hw));
        return;
    }
    const int64_t n = 10000000;
    bool ok = true;
    std::string detail;

    {
        MicrobenchSpec spec;
        spec.kind = MicrobenchSpec::ManyFields;
        spec.element_count = n;
        spec.modulo = 2;
        Database db = make_micro_db(spec);
        QueryEntry entry = *find_query("manyfields");
        entry.sql = micro_query_sql(spec);
        entry.verify_spec = spec;
        double pu = best_of_3_ms(entry, db, Strategy::PU);
        double cg = best_of_3_ms(entry, db, Strategy::CG);
        detail += "manyfields m=2: pu=" + std::to_string(pu) + " cg=" + std::to_string(cg);
        ok = ok && pu < cg;  // heavy per-entry lock contention at 2 groups

        spec.modulo = 500000;
        Database db2 = make_micro_db(spec);
        entry.sql = micro_query_sql(spec);
        entry.verify_spec = spec;
        double pu2 = best_of_3_ms(entry, db2, Strategy::PU);
        double cg2 = best_of_3_ms(entry, db2, Strategy::CG);
        detail += "; m=500000: pu=" + std::to_string(pu2) + " cg=" + std::to_string(cg2);
        ok = ok && cg2 < pu2;  // merge costs dominate, the trends invert
    }
    {
        MicrobenchSpec spec;
        spec.kind = MicrobenchSpec::Distinct;
        spec.element_count = n;
        spec.distinct_values = 10;
        Database db = make_micro_db(spec);
        QueryEntry entry = *find_query("distinct");
        entry.verify_spec = spec;
        double p = best_of_3_ms(entry, db, Strategy::P);
        double pu = best_of_3_ms(entry, db, Strategy::PU);
        detail += "; distinct d=10: p=" + std::to_string(p) + " pu=" + std::to_string(pu);
        ok = ok && p < pu;  // ordered wins at low cardinality

        spec.distinct_values = 100000;
        Database db2 = make_micro_db(spec);
        entry.verify_spec = spec;
        double p2 = best_of_3_ms(entry, db2, Strategy::P);
        double pu2 = best_of_3_ms(entry, db2, Strategy::PU);
        detail += "; d=100000: p=" + std::to_string(p2) + " pu=" + std::to_string(pu2);
        ok = ok && pu2 < p2;  // unordered wins at high cardinality
    }
    report(name, ok, detail);
}

}  // namespace

int main(int argc, char** argv) {
    bool assert_trends = false;
    for (int i = 1; i < argc; ++i) {
        if (std::strcmp(argv[i], "--assert-trends") == 0) assert_trends = true;
    }

    criterion("criterion 1", differential_matrix);
    criterion("criterion 2", group_count_law);
    criterion("criterion 3", distinct_laws);
    criterion("criterion 4", o1_o2_semantics);
    criterion("criterion 5", seq_fused_exact);
    criterion("criterion 6", harness_statistics);
    criterion("criterion 7", [&] { trend_assertions(assert_trends); });

    std::cout << (failures == 0 ? "acceptance: all criteria passed" : "acceptance: FAILURES") << std::endl;
    return failures == 0 ? 0 : 1;
}
