#pragma once

#include "varq/plan.hpp"

namespace varq {

/// Rows produced by an engine or the oracle, with the plan's ordering contract
/// attached so results can be compared fairly.
struct ResultSet {
    Schema schema;
    std::vector<Record> rows;
    Ordering ordering;

    size_t size() const { return rows.size(); }
};

std::string format_result(const ResultSet& rs, size_t max_rows = 20);

/// Order-insensitive content fingerprint; used by the benchmark result sink.
uint64_t result_checksum(const ResultSet& rs);

}  // namespace varq
