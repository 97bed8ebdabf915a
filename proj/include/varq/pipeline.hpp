#pragma once

#include "varq/options.hpp"
#include "varq/resultset.hpp"
#include "varq/runtime.hpp"

namespace varq {

enum class StageKind : uint8_t {
    Filter,       // one predicate
    FusedFilter,  // predicate list evaluated as one short-circuit conjunction (O1)
    Map,
    ProbeJoin,
    SortBuffer,
    Limit,
    Skip,
    Distinct,
};

/// Immutable stage descriptor. Per-run sink state is instantiated separately,
/// so descriptors can be shared across tasks and runs.
struct StageDesc {
    StageKind kind;
    std::vector<ExprPtr> predicates;  // Filter / FusedFilter
    std::vector<ExprPtr> exprs;       // Map
    // ProbeJoin
    int slot = -1;
    JoinKind join_kind{};
    std::vector<ExprPtr> probe_keys;
    bool multi_emit = false;
    size_t build_width = 0;
    // SortBuffer, with directly following Limit/Skip folded in
    std::vector<SortKey> sort_keys;
    int64_t sort_skip = 0;
    int64_t sort_limit = -1;  // -1 = none
    // Limit / Skip
    int64_t count = 0;
};

enum class TerminalKind : uint8_t { Collect, BuildJoinMap, GroupBy };

struct Terminal {
    TerminalKind kind = TerminalKind::Collect;
    int out_slot = -1;  // -1 = query result
    std::vector<ExprPtr> build_keys;
    std::vector<ExprPtr> group_keys;  // empty = scalar aggregate
    AggLayout aggs;
};

/// A contiguous stage range executed between barriers (sort, parallel distinct,
/// standalone limit/skip under parallel strategies).
struct Segment {
    size_t begin = 0;
    size_t end = 0;      // exclusive; the barrier stage index == end when barriered
    bool has_barrier = false;
    bool ordered = true; // encounter order respected in this segment
};

struct PipelineUnit {
    bool table_source = false;
    std::string table;
    int src_slot = -1;
    std::vector<StageDesc> stages;
    std::vector<Segment> segments;
    Terminal terminal;
    Schema out_schema;
    Strategy strategy = Strategy::Seq;  // join builds may run sequentially (GenOptions::sequential_build)
};

/// Compiled form of a plan under one GenOptions variant: a chain of pipeline
/// units (join builds and group stages materialize intermediate slots) executed
/// in order, the last one producing the query result.
struct Pipeline {
    std::vector<PipelineUnit> units;
    size_t slot_count = 0;
    Schema result_schema;
    Ordering result_ordering;
    GenOptions options;
    Strategy strategy = Strategy::Seq;  // effective strategy
    std::string notice;  // set when CG/CGCC degrade to PU (no grouping/distinct in plan)
};

/// Translates a validated plan into a pipeline under the given options.
Pipeline compile(const PlanPtr& validated, const GenOptions& options);

/// Executes the pipeline against a database.
ResultSet run(const Pipeline& pipeline, const Database& db);

ResultSet run_plan(const PlanPtr& validated, const Database& db, const GenOptions& options);

/// Join probe emission, shared by the flat-emit and multi-emit stages: both
/// produce identical records in identical per-probe order (build list order).
/// mode_multi=false materializes the match list first (flatMap-style), true
/// invokes the emitter once per match (mapMulti-style).
void probe_emit(const Record& probe_rec, const Record& key, const JoinMap& map, JoinKind kind,
                bool mode_multi, size_t build_width, const std::function<void(Record&&)>& emitter);

/// Pseudo-source rendering of the pipeline's stage structure (one stage per line).
std::string render_pipeline(const Pipeline& pipeline);

}  // namespace varq
