#pragma once

#include <functional>
#include <map>
#include <optional>

#include "varq/expr.hpp"
#include "varq/table.hpp"

namespace varq {

enum class PlanKind : uint8_t { Scan, Filter, Project, Join, Sort, Limit, Skip, GroupAggregate, Distinct };
enum class JoinKind : uint8_t { Inner, Left, Semi, Anti };
enum class AggFunc : uint8_t { Count, Sum, Avg, Min, Max };

const char* join_kind_name(JoinKind k);
const char* agg_func_name(AggFunc f);

struct NamedExpr {
    ExprPtr expr;
    std::string name;
};

struct SortKey {
    ExprPtr expr;
    bool desc = false;
};

/// One aggregate of a GroupAggregate node. arg == nullptr means COUNT(*).
struct AggSpec {
    AggFunc func;
    ExprPtr arg;
    std::string name;
};

struct PlanNode;
using PlanPtr = std::shared_ptr<const PlanNode>;

/// Immutable relational operator node. `schema` is set on validated trees.
struct PlanNode {
    PlanKind kind;
    std::vector<PlanPtr> children;  // Join: children[0] = build side, children[1] = probe side

    std::string table;                // Scan
    std::vector<ExprPtr> predicates;  // Filter: list semantics = conjunction
    std::vector<NamedExpr> projections;
    JoinKind join_kind{};
    std::vector<ExprPtr> build_keys;  // resolved against build child schema
    std::vector<ExprPtr> probe_keys;  // resolved against probe child schema
    std::vector<SortKey> sort_keys;
    int64_t count = 0;  // Limit / Skip
    std::vector<NamedExpr> group_keys;
    std::vector<AggSpec> aggs;

    Schema schema;  // output schema (validated trees only)
    bool validated = false;
};

/// Table name -> schema mapping used for validation and parsing.
class Catalog {
public:
    Catalog() = default;
    explicit Catalog(const Database& db);

    void put(std::string name, Schema schema);
    const Schema* find(std::string_view name) const;

private:
    std::map<std::string, Schema> schemas_;
};

/// Catalog of the eight TPC-H tables.
const Catalog& tpch_catalog();

/// Type-checks the plan, resolves every column reference, and computes each
/// node's output schema. Returns a new, validated tree. Idempotent.
PlanPtr validate(const PlanPtr& plan, const Catalog& catalog);
inline PlanPtr validate(const PlanPtr& plan, const Database& db) { return validate(plan, Catalog(db)); }

const Schema& output_schema(const PlanPtr& validated);

/// One node per line, children indented.
std::string print_plan(const PlanPtr& plan);

/// Ordering contract of a plan's result, expressed over output column ordinals.
struct Ordering {
    struct Key {
        int ordinal;
        bool desc;
    };
    std::vector<Key> keys;  // empty = unordered
    bool truncated = false; // a Limit was applied after the ordering was established

    bool ordered() const { return !keys.empty(); }
};

/// Derives the ordering contract from a validated plan (used to compare results).
Ordering ordering_of(const PlanPtr& validated);

/// Fluent immutable builder over PlanNode trees.
class Plan {
public:
    explicit Plan(PlanPtr node) : node_(std::move(node)) {}

    static Plan scan(std::string table);

    Plan filter(ExprPtr predicate) const { return filter(std::vector<ExprPtr>{std::move(predicate)}); }
    Plan filter(std::vector<ExprPtr> predicates) const;
    Plan project(std::vector<NamedExpr> projections) const;
    Plan sort(std::vector<SortKey> keys) const;
    Plan limit(int64_t n) const;
    Plan skip(int64_t n) const;
    Plan group_by(std::vector<NamedExpr> keys, std::vector<AggSpec> aggs) const;
    Plan distinct() const;
    /// Filter over the aggregate output; plain sugar for filter().
    Plan having(ExprPtr predicate) const { return filter(std::move(predicate)); }

    static Plan join(JoinKind kind, Plan build, Plan probe, std::vector<ExprPtr> build_keys,
                     std::vector<ExprPtr> probe_keys);

    const PlanPtr& node() const { return node_; }

private:
    PlanPtr node_;
};

}  // namespace varq
