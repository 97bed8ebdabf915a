#pragma once

#include <span>

#include "varq/fused.hpp"
#include "varq/oracle.hpp"
#include "varq/suite.hpp"

namespace varq {

/// Steady-state protocol parameters: warmup iterations are discarded, each
/// iteration repeats the query until `iter_duration_s` wall-clock has passed.
struct BenchConfig {
    int warmup_iters = 5;
    int measure_iters = 5;
    double iter_duration_s = 10.0;

    void check() const {
        if (warmup_iters < 0 || measure_iters < 1 || !(iter_duration_s > 0)) {
            throw ConfigError("bench config: warmup >= 0, measure >= 1, iter duration > 0");
        }
    }
};

struct BenchResult {
    std::string query_id;
    std::string backend;  // "pipeline" | "imperative"
    GenOptions options;
    std::string param;                  // sf or micro parameter description
    std::vector<double> iter_means_ms;  // measured iterations only
    double mean_ms = 0.0;
    double moe_ms = 0.0;  // half-width of the 95% confidence interval
    int64_t total_ops = 0;
    uint64_t checksum = 0;  // opaque result sink, defeats dead-code elimination
};

// --- statistics (unit-testable via injected samples) ---
double mean_of(std::span<const double> xs);
double sample_stddev(std::span<const double> xs);
/// Two-tailed 95% Student-t critical value for `df` degrees of freedom.
double t_critical_975(int df);
/// t * s / sqrt(n); defined as 0 for a single sample.
double margin_of_error(std::span<const double> xs);
/// Fills mean_ms / moe_ms from iter_means_ms.
void summarize(BenchResult& r);

double speedup(double baseline_mean, double variant_mean);
inline double speedup(const BenchResult& baseline, const BenchResult& variant) {
    return speedup(baseline.mean_ms, variant.mean_ms);
}
double geo_mean(std::span<const double> xs);

/// Runs the steady-state protocol for one query variant. The variant is first
/// verified against the oracle; a mismatch aborts without producing a result.
/// `verify_tol` overrides the default float tolerance of that check.
BenchResult run_bench(const QueryEntry& query, const std::string& backend, const GenOptions& options,
                      const Database& db, const BenchConfig& config, std::string param,
                      std::ostream* log = nullptr, std::optional<double> verify_tol = std::nullopt);

/// CSV report: query, backend, fuse, multi_emit, strategy, workers,
/// sf_or_param, mean_ms, moe_ms, speedup_vs_baseline. Environment captured in
/// leading `#` comments. The per-query baseline is the sequential pipeline
/// with no options.
std::string report_csv(const std::vector<BenchResult>& results);
std::string report_markdown(const std::vector<BenchResult>& results);

// --- differential verification driver ---
struct VerifyOutcome {
    std::string query;
    std::string backend;
    GenOptions options;
    bool equal = false;
    std::string detail;
};

/// Runs every registry entry through the full variant matrix (pipeline:
/// O1 x O2 x all strategies; imperative: O1 x O2, sequential) and compares
/// each result against the oracle.
std::vector<VerifyOutcome> verify_matrix(double sf, uint64_t seed, std::ostream* progress = nullptr);

bool all_equal(const std::vector<VerifyOutcome>& outcomes);

}  // namespace varq
