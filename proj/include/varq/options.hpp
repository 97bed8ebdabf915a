#pragma once

#include <cstdint>
#include <string>
#include <thread>

namespace varq {

/// Parallel evaluation strategy for the pipeline backend.
///   Seq  - single thread
///   P    - chunked parallel, ordered merge of task-local results
///   PU   - chunked parallel, unordered (completion-order) merge
///   CG   - shared concurrent map, per-entry locking
///   CGCC - shared concurrent map, lock-free atomic accumulators
enum class Strategy : uint8_t { Seq, P, PU, CG, CGCC };

const char* strategy_name(Strategy s);
/// Parses "seq" / "p" / "pu" / "cg" / "cgcc" (case-insensitive); throws ConfigError.
Strategy parse_strategy(const std::string& text);

/// Code-generation variant selector for the pipeline backend.
struct GenOptions {
    bool fuse_filters = false;    // O1: conjunction in a single filter stage
    bool multi_emit_join = false; // O2: callback-style join emission instead of flattening
    Strategy strategy = Strategy::Seq;
    unsigned workers = 0;         // 0 = hardware concurrency (parallel strategies only)
    size_t chunk_size = 8192;     // rows per parallel task
    bool sequential_build = false;  // force join build phases to run sequentially

    unsigned effective_workers() const {
        if (workers) return workers;
        unsigned hw = std::thread::hardware_concurrency();
        return hw ? hw : 2;
    }

    std::string describe() const;
};

}  // namespace varq
