#pragma once

#include <cstdint>
#include <vector>

#include "varq/table.hpp"

namespace varq {

/// Data generation parameters. Equal configs produce bit-identical databases.
struct GenConfig {
    double sf = 1.0;
    uint64_t seed = 42;
};

/// Names of the eight TPC-H tables, in build order.
const std::vector<std::string>& tpch_table_names();

/// Schema of one TPC-H table; throws DataError for unknown names.
const Schema& tpch_schema(std::string_view table);

/// Row count of a table at a given scale factor: round(base * sf) for the six
/// variable-size tables, 25 for nation, 5 for region.
int64_t tpch_row_count(std::string_view table, double sf);

/// Generates the eight TPC-H tables. Schema- and cardinality-faithful but not
/// distribution-exact with respect to the official dbgen tool. Deterministic:
/// values are derived per (seed, table, row) with splitmix64.
Database generate(const GenConfig& config);

}  // namespace varq
