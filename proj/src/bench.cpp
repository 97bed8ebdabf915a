#include "varq/bench.hpp"

#include <chrono>
#include <cmath>
#include <ctime>
#include <iostream>
#include <optional>
#include <sstream>

namespace varq {

double mean_of(std::span<const double> xs) {
    if (xs.empty()) return 0.0;
    double sum = 0.0;
    for (double x : xs) sum += x;
    return sum / static_cast<double>(xs.size());
}

double sample_stddev(std::span<const double> xs) {
    if (xs.size() < 2) return 0.0;
    double m = mean_of(xs);
    double ss = 0.0;
    for (double x : xs) ss += (x - m) * (x - m);
    return std::sqrt(ss / static_cast<double>(xs.size() - 1));
}

double t_critical_975(int df) {
    // two-tailed 95% Student-t critical values, df = n - 1
    static const double table[] = {
        0.0,          12.7062047364, 4.3026527297, 3.1824463053, 2.7764451052, 2.5705818366,
        2.4469118511, 2.3646242510,  2.3060041350, 2.2621571628, 2.2281388520, 2.2009851601,
        2.1788128297, 2.1603686565,  2.1447866879, 2.1314495456, 2.1199052992, 2.1098155778,
        2.1009220402, 2.0930240544,  2.0859634473, 2.0796138447, 2.0738730679, 2.0686576104,
        2.0638985616, 2.0595385528,  2.0555294386, 2.0518305165, 2.0484071418, 2.0452296421,
        2.0422724563};
    if (df <= 0) return 0.0;
    if (df <= 30) return table[df];
    if (df <= 40) return 2.0211;
    if (df <= 60) return 2.0003;
    if (df <= 120) return 1.9799;
    return 1.9600;
}

double margin_of_error(std::span<const double> xs) {
    if (xs.size() < 2) return 0.0;  // single-sample convention
    double s = sample_stddev(xs);
    return t_critical_975(static_cast<int>(xs.size()) - 1) * s / std::sqrt(static_cast<double>(xs.size()));
}

void summarize(BenchResult& r) {
    r.mean_ms = mean_of(r.iter_means_ms);
    r.moe_ms = margin_of_error(r.iter_means_ms);
}

double speedup(double baseline_mean, double variant_mean) {
    if (variant_mean == 0.0) throw ConfigError("speedup: variant mean is zero");
    return baseline_mean / variant_mean;
}

double geo_mean(std::span<const double> xs) {
    if (xs.empty()) return 0.0;
    double log_sum = 0.0;
    for (double x : xs) log_sum += std::log(x);
    return std::exp(log_sum / static_cast<double>(xs.size()));
}

namespace {

using Clock = std::chrono::steady_clock;

double tolerance_for(const std::string& backend, const GenOptions& options) {
    bool sequential = backend == "imperative" || options.strategy == Strategy::Seq;
    return sequential ? kSeqFloatTol : kParFloatTol;
}

/// Closed-form expected results for the parameterized micro queries. The
/// interpreter oracle stays the reference for the SQL suite, but its
/// association-list grouping is quadratic and unusable at large micro
/// parameters (1e7 elements, 5e5 groups).
ResultSet micro_expected(const MicrobenchSpec& spec, const PlanPtr& plan) {
    ResultSet rs;
    rs.schema = output_schema(plan);
    rs.ordering = ordering_of(plan);
    int64_t n = spec.element_count;
    switch (spec.kind) {
        case MicrobenchSpec::Distinct:
            for (int64_t x = 0; x < spec.distinct_values; ++x) rs.rows.push_back({Value(x)});
            break;
        case MicrobenchSpec::OneField:
        case MicrobenchSpec::ManyFields: {
            int64_t m = spec.modulo;
            for (int64_t g = 0; g < std::min(m, n); ++g) {
                // members are the arithmetic series g, g+m, ... and p = id
                int64_t c = (n - 1 - g) / m + 1;
                int64_t sum = c * g + m * c * (c - 1) / 2;
                if (spec.kind == MicrobenchSpec::OneField) {
                    rs.rows.push_back({Value(sum)});
                } else {
                    rs.rows.push_back({Value(c), Value(sum),
                                       Value(static_cast<double>(sum) / static_cast<double>(c)), Value(g),
                                       Value(g + (c - 1) * m)});
                }
            }
            break;
        }
        case MicrobenchSpec::Pred7:
            throw ConfigError("pred7 verifies against the interpreter oracle");
    }
    return rs;
}

struct Runner {
    std::function<ResultSet()> once;
};

Runner make_runner(const PlanPtr& validated, const std::string& backend, const GenOptions& options,
                   const Database& db) {
    if (backend == "imperative") {
        auto program = std::make_shared<FusedProgram>(compile_fused(validated));
        return {[program, &db] { return run_fused(*program, db); }};
    }
    if (backend != "pipeline") throw ConfigError("unknown backend: " + backend + " (want pipeline|imperative)");
    auto pipeline = std::make_shared<Pipeline>(compile(validated, options));
    return {[pipeline, &db] { return run(*pipeline, db); }};
}

}  // namespace

BenchResult run_bench(const QueryEntry& query, const std::string& backend, const GenOptions& options,
                      const Database& db, const BenchConfig& config, std::string param, std::ostream* log,
                      std::optional<double> verify_tol) {
    config.check();
    PlanPtr plan = validate(plan_for(query), Catalog(db));

    // refuse to benchmark an incorrect variant
    ResultSet expected =
        query.micro ? micro_expected(query.verify_spec, plan) : oracle::evaluate(plan, db);
    Runner runner = make_runner(plan, backend, options, db);
    ResultSet first = runner.once();
    CompareReport rep = compare(first, expected, verify_tol.value_or(tolerance_for(backend, options)));
    if (!rep.equal) {
        throw ConfigError("verification failed for " + query.id + " [" + backend + " " + options.describe() +
                          "]: " + rep.summary());
    }

    BenchResult result;
    result.query_id = query.id;
    result.backend = backend;
    result.options = options;
    result.param = std::move(param);
    result.checksum = result_checksum(first);

    int total_iters = config.warmup_iters + config.measure_iters;
    for (int iter = 0; iter < total_iters; ++iter) {
        auto start = Clock::now();
        auto deadline = start + std::chrono::duration_cast<Clock::duration>(
                                    std::chrono::duration<double>(config.iter_duration_s));
        int64_t ops = 0;
        Clock::time_point now;
        do {
            ResultSet rs = runner.once();
            // FNV-style chain: every executed op feeds the printed sink value
            result.checksum = (result.checksum * 1099511628211ull) ^ result_checksum(rs);
            ++ops;
            now = Clock::now();
        } while (now < deadline);
        double elapsed_ms = std::chrono::duration<double, std::milli>(now - start).count();
        double mean_ms = elapsed_ms / static_cast<double>(ops);
        bool measured = iter >= config.warmup_iters;
        if (measured) {
            result.iter_means_ms.push_back(mean_ms);
            result.total_ops += ops;
        }
        if (log) {
            *log << (measured ? "  iter " : "  warmup ") << iter + 1 << ": " << mean_ms << " ms/op (" << ops
                 << " ops)\n";
        }
    }
    summarize(result);
    return result;
}

namespace {

std::string csv_escape(const std::string& s) {
    if (s.find(',') == std::string::npos && s.find('"') == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

const BenchResult* baseline_of(const std::vector<BenchResult>& results, const std::string& query_id) {
    for (const BenchResult& r : results) {
        if (r.query_id == query_id && r.backend == "pipeline" && !r.options.fuse_filters &&
            !r.options.multi_emit_join && r.options.strategy == Strategy::Seq) {
            return &r;
        }
    }
    return nullptr;
}

std::string timestamp_utc() {
    std::time_t now = std::time(nullptr);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
    return buf;
}

}  // namespace

std::string report_csv(const std::vector<BenchResult>& results) {
    std::ostringstream out;
    out << "# generated: " << timestamp_utc() << "\n";
    out << "# hardware_threads: " << std::thread::hardware_concurrency() << "\n";
    out << "query,backend,fuse,multi_emit,strategy,workers,sf_or_param,mean_ms,moe_ms,speedup_vs_baseline\n";
    for (const BenchResult& r : results) {
        const BenchResult* base = baseline_of(results, r.query_id);
        out << csv_escape(r.query_id) << ',' << r.backend << ',' << (r.options.fuse_filters ? 1 : 0) << ','
            << (r.options.multi_emit_join ? 1 : 0) << ',' << strategy_name(r.options.strategy) << ','
            << (r.options.strategy == Strategy::Seq ? 1 : r.options.effective_workers()) << ','
            << csv_escape(r.param) << ',' << r.mean_ms << ',' << r.moe_ms << ',';
        if (base && base != &r) out << speedup(*base, r);
        else if (base) out << "1";
        out << "\n";
    }
    return out.str();
}

std::string report_markdown(const std::vector<BenchResult>& results) {
    std::ostringstream out;
    out << "| query | backend | variant | param | mean [ms] | +/- moe | speedup |\n";
    out << "|---|---|---|---|---|---|---|\n";
    std::vector<double> speedups;  // per non-baseline row, for the geo-mean line
    for (const BenchResult& r : results) {
        const BenchResult* base = baseline_of(results, r.query_id);
        out << "| " << r.query_id << " | " << r.backend << " | " << r.options.describe() << " | " << r.param
            << " | " << r.mean_ms << " | " << r.moe_ms << " | ";
        if (base) {
            double s = speedup(*base, r);
            out << s << "x";
            if (base != &r) speedups.push_back(s);
        }
        out << " |\n";
    }
    if (speedups.size() > 1) {
        out << "| geo mean |  |  |  |  |  | " << geo_mean(speedups) << "x |\n";
    }
    return out.str();
}

std::vector<VerifyOutcome> verify_matrix(double sf, uint64_t seed, std::ostream* progress) {
    std::vector<VerifyOutcome> outcomes;
    Database tpch;
    bool tpch_built = false;

    for (const QueryEntry& entry : registry()) {
        Database micro_db;
        const Database* db;
        if (entry.micro) {
            micro_db = database_for(entry, sf, seed);
            db = &micro_db;
        } else {
            if (!tpch_built) {
                if (progress) *progress << "generating TPC-H data (sf=" << sf << ", seed=" << seed << ")\n";
                tpch = generate({sf, seed});
                tpch_built = true;
            }
            db = &tpch;
        }
        PlanPtr plan = validate(plan_for(entry), Catalog(*db));
        if (progress) *progress << entry.id << ": oracle..." << std::flush;
        ResultSet expected = oracle::evaluate(plan, *db);
        if (progress) *progress << " " << expected.rows.size() << " rows\n";

        auto check = [&](const std::string& backend, const GenOptions& options) {
            VerifyOutcome o;
            o.query = entry.id;
            o.backend = backend;
            o.options = options;
            try {
                ResultSet actual = backend == "imperative" ? run_plan_fused(plan, *db)
                                                           : run_plan(plan, *db, options);
                CompareReport rep = compare(actual, expected, tolerance_for(backend, options));
                o.equal = rep.equal;
                if (!rep.equal) o.detail = rep.summary();
            } catch (const std::exception& e) {
                o.equal = false;
                o.detail = e.what();
            }
            if (progress && !o.equal) {
                *progress << "  FAIL " << entry.id << " " << backend << " " << options.describe() << ": "
                          << o.detail << "\n";
            }
            outcomes.push_back(std::move(o));
        };

        for (bool fuse : {false, true}) {
            for (bool multi : {false, true}) {
                for (Strategy strategy :
                     {Strategy::Seq, Strategy::P, Strategy::PU, Strategy::CG, Strategy::CGCC}) {
                    GenOptions opt;
                    opt.fuse_filters = fuse;
                    opt.multi_emit_join = multi;
                    opt.strategy = strategy;
                    check("pipeline", opt);
                }
                GenOptions fused_opt;
                fused_opt.fuse_filters = fuse;
                fused_opt.multi_emit_join = multi;
                check("imperative", fused_opt);
            }
        }
    }
    return outcomes;
}

bool all_equal(const std::vector<VerifyOutcome>& outcomes) {
    for (const VerifyOutcome& o : outcomes) {
        if (!o.equal) return false;
    }
    return true;
}

}  // namespace varq
