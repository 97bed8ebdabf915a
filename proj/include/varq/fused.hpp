#pragma once

#include "varq/pipeline.hpp"

namespace varq {

/// Imperative baseline program: the same unit/stage structure as the pipeline
/// backend (same operation order, same JoinMap/GroupAccumulator types, same
/// prepared expression objects), executed as push-based loop nests with no
/// per-element stage dispatch. Filters always evaluate as one short-circuit
/// conjunction and join probes are direct inner loops over the match list.
struct FusedProgram {
    std::vector<PipelineUnit> units;
    size_t slot_count = 0;
    Schema result_schema;
    Ordering result_ordering;
};

FusedProgram compile_fused(const PlanPtr& validated);

/// Deterministic single-threaded execution.
ResultSet run_fused(const FusedProgram& program, const Database& db);

ResultSet run_plan_fused(const PlanPtr& validated, const Database& db);

}  // namespace varq
