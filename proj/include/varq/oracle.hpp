#pragma once

#include "varq/resultset.hpp"

namespace varq {
namespace oracle {

/// Naive reference interpreter: row-at-a-time, joins by nested loops (no hash
/// maps), grouping and distinct by association list, stable sort. Shares no
/// data structures with the engines and may be orders of magnitude slower.
ResultSet evaluate(const PlanPtr& validated, const Database& db);

}  // namespace oracle

struct CompareReport {
    bool equal = true;
    std::vector<std::string> missing;  // expected rows absent from actual
    std::vector<std::string> extra;    // actual rows absent from expected
    std::vector<std::string> order_violations;
    double worst_float_dev = 0.0;

    std::string summary() const;
};

/// Multiset comparison with relative tolerance on Float64 fields. When the
/// expected result carries an ordering contract, sortedness of `actual` is
/// verified too; when a Limit truncated an ordered result, `actual` must be a
/// valid top-N (equal sort-key multiset; rows tied at the boundary may differ).
/// Throws ValidateError when the schemas differ.
CompareReport compare(const ResultSet& actual, const ResultSet& expected, double float_tol);

/// Default tolerances: sequential backends are expected to agree to 1e-9,
/// parallel merges reorder float additions and get 1e-6.
inline constexpr double kSeqFloatTol = 1e-9;
inline constexpr double kParFloatTol = 1e-6;

}  // namespace varq
