#pragma once

#include "varq/datagen.hpp"
#include "varq/pipeline.hpp"
#include "varq/sql.hpp"

namespace varq {

/// Parameterized microbenchmark data source.
///   Distinct    - one column x with exactly D distinct values over N rows
///   OneField    - orders(id, p): GROUP BY MOD(id, M), SUM(p)
///   ManyFields  - same grouping with COUNT/SUM/AVG/MIN/MAX
///   Pred7       - the 7-predicate count over TPC-H lineitem (no micro table)
struct MicrobenchSpec {
    enum Kind { Pred7, Distinct, OneField, ManyFields };
    Kind kind = OneField;
    int64_t element_count = 10'000'000;
    int64_t distinct_values = 1000;  // D, Distinct only
    int64_t modulo = 100;            // M, OneField/ManyFields only
    uint64_t seed = 42;

    std::string describe() const;
};

/// Builds the single-table micro database (table name `orders`).
/// Distinct: column x, first occurrences 0..D-1 in order, remainder drawn
/// uniformly from [0, D). OneField/ManyFields: id = 0..N-1 consecutive, p = id
/// (consecutive values keep every per-group sum in closed form).
Database make_micro_db(const MicrobenchSpec& spec);

/// SQL text of the micro query for a spec (modulo inlined).
std::string micro_query_sql(const MicrobenchSpec& spec);

/// Catalog covering the micro table of a spec kind.
Catalog micro_catalog(MicrobenchSpec::Kind kind);

struct QueryEntry {
    std::string id;
    std::string sql;
    double default_sf = 0.01;
    std::string description;
    bool micro = false;              // data comes from make_micro_db, not the TPC-H generator
    MicrobenchSpec verify_spec;      // verify-sized parameters for micro entries
};

/// The shipped queries: q01, q03, q06, q09, q18, the running example, and the
/// four microbenchmarks (pred7, distinct, onefield, manyfields).
const std::vector<QueryEntry>& registry();

const QueryEntry* find_query(const std::string& id);

/// Parses and returns the entry's plan (unvalidated) plus the catalog it
/// resolves against.
PlanPtr plan_for(const QueryEntry& entry);
Catalog catalog_for(const QueryEntry& entry);

/// Builds the database an entry runs against (TPC-H generated at `sf`, or the
/// verify-sized micro database).
Database database_for(const QueryEntry& entry, double sf, uint64_t seed);

/// Pseudo-source text showing the compiled stage structure of a plan under the
/// given options (one stage per line; fused filters render as one `.filter`
/// with `&&`, multi-emit joins are labeled).
std::string render_plan(const PlanPtr& validated, const GenOptions& options);

}  // namespace varq
