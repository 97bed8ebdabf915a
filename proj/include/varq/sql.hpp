#pragma once

#include "varq/plan.hpp"

namespace varq {

struct ParseDiag {
    size_t line = 0;
    size_t column = 0;
    std::string message;
    enum Category { Syntax, Unsupported } category = Syntax;

    std::string to_string() const;
};

struct ParseError : Error {
    ParseDiag diag;
    explicit ParseError(ParseDiag d) : Error(d.to_string()), diag(std::move(d)) {}
};

/// Parses one SELECT statement (optionally introduced by non-recursive WITH)
/// and lowers it to an unvalidated LogicalPlan:
///   - comma joins and explicit [INNER|LEFT] JOIN ... ON, folded in textual
///     order with the accumulated left side as the build side,
///   - WHERE equality conjuncts linking two tables become join keys; remaining
///     single-table conjuncts are pushed beneath the join on their table,
///   - uncorrelated `x IN (SELECT ...)` becomes a semi join (NOT IN -> anti),
///   - GROUP BY / HAVING / ORDER BY / LIMIT / OFFSET / DISTINCT.
/// Unsupported constructs (correlated or scalar subqueries, OUTER joins other
/// than LEFT, window functions, set operations) raise ParseError with an
/// Unsupported diagnostic naming the construct.
PlanPtr parse(const std::string& sql, const Catalog& catalog);

/// Parses against the TPC-H catalog.
PlanPtr parse(const std::string& sql);

/// Renders a parser-shaped plan back to SQL text. parse(to_sql(parse(q))) is
/// plan-equal to parse(q) on the supported subset.
std::string to_sql(const PlanPtr& plan);

}  // namespace varq
