#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "varq/bench.hpp"
#include "varq/tbl_io.hpp"

using namespace varq;

namespace {

struct VariantArgs {
    bool fuse = false;
    bool multi = false;
    std::string strategy = "seq";
    unsigned workers = 0;
    bool seq_build = false;
    std::string backend = "pipeline";

    GenOptions options() const {
        GenOptions opt;
        opt.fuse_filters = fuse;
        opt.multi_emit_join = multi;
        opt.strategy = parse_strategy(strategy);
        opt.workers = workers;
        opt.sequential_build = seq_build;
        return opt;
    }
};

void add_variant_flags(CLI::App* cmd, VariantArgs& v, bool with_backend) {
    cmd->add_flag("--fuse", v.fuse, "fuse filter conjunctions into one stage (O1)");
    cmd->add_flag("--multi", v.multi, "multi-emit join probes instead of flattening (O2)");
    cmd->add_option("--strategy", v.strategy, "seq|p|pu|cg|cgcc (O3)")->capture_default_str();
    cmd->add_option("--workers", v.workers, "worker threads (0 = hardware)");
    cmd->add_flag("--seq-build", v.seq_build, "run join build phases sequentially");
    if (with_backend) {
        cmd->add_option("--backend", v.backend, "pipeline|imperative")->capture_default_str();
    }
}

int cmd_gen_data(double sf, uint64_t seed, const std::string& out_dir) {
    std::filesystem::create_directories(out_dir);
    Database db = generate({sf, seed});
    for (const auto& [name, table] : db.tables()) {
        std::string path = out_dir + "/" + name + ".tbl";
        write_tbl(table, path);
        std::cout << path << ": " << table.row_count() << " rows\n";
    }
    return 0;
}

int cmd_load(const std::string& dir) {
    for (const std::string& name : tpch_table_names()) {
        TableData t = load_tbl(dir + "/" + name + ".tbl", name, tpch_schema(name));
        std::cout << name << ": " << t.row_count() << " rows, " << t.schema().size() << " columns\n";
    }
    return 0;
}

int cmd_list() {
    for (const QueryEntry& e : registry()) {
        std::cout << e.id << (e.micro ? "  [micro]" : "         ") << "  " << e.description << "\n";
    }
    return 0;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

int cmd_explain(const std::string& query, const VariantArgs& v) {
    std::string sql;
    Catalog catalog = tpch_catalog();
    if (const QueryEntry* entry = find_query(query)) {
        sql = entry->sql;
        catalog = catalog_for(*entry);
    } else if (std::filesystem::exists(query)) {
        sql = read_file(query);
    } else {
        std::cerr << "not a registry query or file: " << query << "\n";
        return 2;
    }
    try {
        PlanPtr plan = validate(parse(sql, catalog), catalog);
        std::cout << "-- logical plan\n" << print_plan(plan);
        std::cout << "-- pipeline (" << v.options().describe() << ")\n" << render_plan(plan, v.options());
    } catch (const ParseError& e) {
        std::cerr << e.diag.to_string() << "\n";
        return 2;
    }
    return 0;
}

int cmd_verify(double sf, uint64_t seed) {
    auto outcomes = verify_matrix(sf, seed, &std::cerr);
    size_t failed = 0;
    for (const auto& o : outcomes) {
        if (!o.equal) {
            ++failed;
            std::cout << "MISMATCH " << o.query << " " << o.backend << " " << o.options.describe() << ": "
                      << o.detail << "\n";
        }
    }
    std::cout << outcomes.size() - failed << "/" << outcomes.size() << " variants equal to the oracle\n";
    return failed == 0 ? 0 : 1;
}

void emit_report(const std::vector<BenchResult>& results, const std::string& out_path) {
    std::cout << report_markdown(results);
    if (!out_path.empty()) {
        std::ofstream out(out_path);
        if (!out) throw IoError("cannot open " + out_path);
        out << report_csv(results);
        std::cout << "wrote " << out_path << "\n";
    }
}

int cmd_bench(const std::string& query, const VariantArgs& v, double sf, uint64_t seed,
              const BenchConfig& config, const std::string& out_path, bool with_baseline) {
    const QueryEntry* entry = find_query(query);
    if (!entry) {
        std::cerr << "unknown query: " << query << " (see `varq list`)\n";
        return 2;
    }
    Database db = database_for(*entry, sf, seed);
    std::string param = entry->micro ? entry->verify_spec.describe() : "sf=" + std::to_string(sf);

    std::vector<BenchResult> results;
    if (with_baseline) {
        GenOptions base;
        std::cout << entry->id << " [pipeline seq] (baseline)\n";
        results.push_back(run_bench(*entry, "pipeline", base, db, config, param, &std::cout));
    }
    std::cout << entry->id << " [" << v.backend << " " << v.options().describe() << "]\n";
    results.push_back(run_bench(*entry, v.backend, v.options(), db, config, param, &std::cout));
    emit_report(results, out_path);
    std::cout << "result checksum: " << results.back().checksum << "\n";
    return 0;
}

int cmd_micro(const std::string& kind, VariantArgs& v, int64_t n, int64_t d, int64_t m, double sf,
              uint64_t seed, const BenchConfig& config, const std::string& out_path, bool sweep) {
    const QueryEntry* entry = find_query(kind);
    if (!entry || (!entry->micro && entry->id != "pred7")) {
        std::cerr << "micro expects distinct|onefield|manyfields|pred7\n";
        return 2;
    }
    std::vector<BenchResult> results;
    // sweep points mirror the figure ranges (1..500 and 500..500k)
    const std::vector<int64_t> points = {1, 2, 10, 100, 500, 10000, 100000, 500000};

    auto run_point = [&](const MicrobenchSpec& spec) {
        Database db = entry->id == "pred7" ? generate({sf, seed}) : make_micro_db(spec);
        QueryEntry point_entry = *entry;
        point_entry.sql = micro_query_sql(spec);
        point_entry.verify_spec = spec;
        std::string param = entry->id == "pred7" ? "sf=" + std::to_string(sf) : spec.describe();
        std::cout << point_entry.id << " [" << v.backend << " " << v.options().describe() << "] " << param
                  << "\n";
        results.push_back(run_bench(point_entry, v.backend, v.options(), db, config, param, &std::cout));
    };

    MicrobenchSpec spec = entry->verify_spec;
    if (entry->id == "pred7") spec.kind = MicrobenchSpec::Pred7;
    spec.element_count = n;
    spec.distinct_values = d;
    spec.modulo = m;
    spec.seed = seed;

    if (sweep && entry->id != "pred7") {
        for (int64_t point : points) {
            if (spec.kind == MicrobenchSpec::Distinct) {
                if (point > spec.element_count) continue;
                spec.distinct_values = point;
            } else {
                spec.modulo = point;
            }
            run_point(spec);
        }
    } else {
        run_point(spec);
    }
    emit_report(results, out_path);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"relational query engine and variant benchmark harness"};
    app.require_subcommand(1);

    double sf = 0.01;
    uint64_t seed = 42;
    std::string dir, out_path, query;
    VariantArgs variant;
    BenchConfig config;
    bool with_baseline = false;
    bool sweep = false;
    int64_t micro_n = 10'000'000, micro_d = 1000, micro_m = 100;

    auto* gen = app.add_subcommand("gen-data", "generate TPC-H style .tbl files");
    gen->add_option("--sf", sf, "scale factor")->capture_default_str();
    gen->add_option("--seed", seed, "generator seed")->capture_default_str();
    gen->add_option("--out", dir, "output directory")->required();

    auto* load = app.add_subcommand("load", "load .tbl files and print table stats");
    load->add_option("--dir", dir, "directory with <table>.tbl files")->required();

    app.add_subcommand("list", "list the shipped queries");

    auto* explain = app.add_subcommand("explain", "print the lowered plan and pipeline stages");
    explain->add_option("query", query, "registry id or .sql file")->required();
    add_variant_flags(explain, variant, false);

    auto* verify = app.add_subcommand("verify", "differential test of every variant against the oracle");
    verify->add_option("--sf", sf, "scale factor")->capture_default_str();
    verify->add_option("--seed", seed, "generator seed")->capture_default_str();

    auto* bench = app.add_subcommand("bench", "steady-state benchmark of one query variant");
    bench->add_option("query", query, "registry id")->required();
    add_variant_flags(bench, variant, true);
    bench->add_option("--sf", sf, "scale factor")->capture_default_str();
    bench->add_option("--seed", seed, "generator seed")->capture_default_str();
    bench->add_option("--warmup", config.warmup_iters, "warmup iterations")->capture_default_str();
    bench->add_option("--measure", config.measure_iters, "measured iterations")->capture_default_str();
    bench->add_option("--iter-time", config.iter_duration_s, "seconds per iteration")->capture_default_str();
    bench->add_option("--out", out_path, "CSV output file");
    bench->add_flag("--baseline", with_baseline, "also run the sequential pipeline baseline");

    auto* micro = app.add_subcommand("micro", "parameterized microbenchmarks");
    micro->add_option("kind", query, "distinct|onefield|manyfields|pred7")->required();
    add_variant_flags(micro, variant, true);
    micro->add_option("--n", micro_n, "element count")->capture_default_str();
    micro->add_option("--d", micro_d, "distinct values (distinct)")->capture_default_str();
    micro->add_option("--m", micro_m, "modulo divisor (onefield/manyfields)")->capture_default_str();
    micro->add_option("--sf", sf, "scale factor (pred7)")->capture_default_str();
    micro->add_option("--seed", seed, "data seed")->capture_default_str();
    micro->add_option("--warmup", config.warmup_iters)->capture_default_str();
    micro->add_option("--measure", config.measure_iters)->capture_default_str();
    micro->add_option("--iter-time", config.iter_duration_s)->capture_default_str();
    micro->add_option("--out", out_path, "CSV output file");
    micro->add_flag("--sweep", sweep, "sweep the figure parameter ranges");

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed()) return cmd_gen_data(sf, seed, dir);
        if (load->parsed()) return cmd_load(dir);
        if (app.get_subcommand("list")->parsed()) return cmd_list();
        if (explain->parsed()) return cmd_explain(query, variant);
        if (verify->parsed()) return cmd_verify(sf, seed);
        if (bench->parsed()) return cmd_bench(query, variant, sf, seed, config, out_path, with_baseline);
        if (micro->parsed())
            return cmd_micro(query, variant, micro_n, micro_d, micro_m, sf, seed, config, out_path, sweep);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
