#include <sstream>

#include "varq/sql.hpp"

namespace varq {

namespace {

constexpr const char* kAggPrefix = "$agg";

struct Unparser {
    std::vector<std::pair<std::string, std::string>> ctes;
    int cte_counter = 0;

    /// Renders an expression over a GroupAggregate output, inlining aggregate
    /// placeholders back to their defining calls and key names back to their
    /// key expressions. ColumnRef names print verbatim, so the substitution
    /// can carry rendered call text.
    static ExprPtr inline_group_refs(const ExprPtr& e, const PlanNode& group) {
        if (e->kind == ExprKind::ColumnRef) {
            if (e->name.rfind(kAggPrefix, 0) == 0) {
                for (const AggSpec& a : group.aggs) {
                    if (a.name == e->name) {
                        return col(std::string(agg_func_name(a.func)) + "(" +
                                   (a.arg ? expr_to_string(*a.arg) : "*") + ")");
                    }
                }
            }
            for (const NamedExpr& k : group.group_keys) {
                if (to_lower(k.name) == to_lower(e->name)) return col(expr_to_string(*k.expr));
            }
            return e;
        }
        auto out = std::make_shared<Expr>(*e);
        for (auto& arg : out->args) arg = inline_group_refs(arg, group);
        return out;
    }

    std::string post_group_sql(const Expr& e, const PlanNode& group) {
        return expr_to_string(*inline_group_refs(std::make_shared<Expr>(e), group));
    }

    /// A key prints as its select alias when the projection re-exports it under
    /// that name (so a reparse reconstructs the same key name), else as its
    /// defining expression.
    static std::string group_key_sql(const NamedExpr& key, const std::vector<NamedExpr>& projections,
                                     bool has_project) {
        if (key.expr->kind == ExprKind::ColumnRef && to_lower(key.expr->name) == to_lower(key.name)) {
            return key.name;  // plain column key: name and expr coincide
        }
        if (has_project) {
            for (const NamedExpr& item : projections) {
                if (to_lower(item.name) == to_lower(key.name) && item.expr->kind == ExprKind::ColumnRef &&
                    to_lower(item.expr->name) == to_lower(key.name)) {
                    return key.name;  // alias-defined key, reparse restores the name
                }
            }
        }
        return expr_to_string(*key.expr);
    }

    std::string item_sql(PlanPtr n, std::vector<std::string>& where) {
        // peel item-level semi/anti joins (probe side is the item chain)
        if (n->kind == PlanKind::Join && (n->join_kind == JoinKind::Semi || n->join_kind == JoinKind::Anti)) {
            std::string sub = query_sql(n->children[0]);
            std::string conjunct = expr_to_string(*n->probe_keys[0]) +
                                   (n->join_kind == JoinKind::Anti ? " NOT IN (" : " IN (") + sub + ")";
            std::string item = item_sql(n->children[1], where);
            where.push_back(std::move(conjunct));
            return item;
        }
        if (n->kind == PlanKind::Filter) {
            std::string item = item_sql(n->children[0], where);
            for (const ExprPtr& p : n->predicates) where.push_back(expr_to_string(*p));
            return item;
        }
        if (n->kind == PlanKind::Scan) return n->table;
        // anything else becomes a named CTE
        std::string name = "sub" + std::to_string(cte_counter++);
        ctes.emplace_back(name, query_sql(n));
        return name;
    }

    void flatten_join(PlanPtr n, std::vector<std::string>& from, std::vector<std::string>& where) {
        if (n->kind == PlanKind::Join && n->join_kind == JoinKind::Inner) {
            flatten_join(n->children[0], from, where);
            std::string item = item_sql(n->children[1], where);
            from.push_back(", " + item);
            for (size_t i = 0; i < n->build_keys.size(); ++i) {
                where.push_back(expr_to_string(*n->build_keys[i]) + " = " + expr_to_string(*n->probe_keys[i]));
            }
            return;
        }
        if (n->kind == PlanKind::Join && n->join_kind == JoinKind::Left) {
            // preserved side is the probe child
            flatten_join(n->children[1], from, where);
            std::vector<std::string> inner_where;
            std::string item = item_sql(n->children[0], inner_where);
            std::string on;
            for (size_t i = 0; i < n->build_keys.size(); ++i) {
                if (i) on += " AND ";
                on += expr_to_string(*n->probe_keys[i]) + " = " + expr_to_string(*n->build_keys[i]);
            }
            for (const std::string& w : inner_where) on += " AND " + w;
            from.push_back(" LEFT JOIN " + item + " ON " + on);
            return;
        }
        if (n->kind == PlanKind::Join && (n->join_kind == JoinKind::Semi || n->join_kind == JoinKind::Anti)) {
            std::string sub = query_sql(n->children[0]);
            std::string conjunct = expr_to_string(*n->probe_keys[0]) +
                                   (n->join_kind == JoinKind::Anti ? " NOT IN (" : " IN (") + sub + ")";
            flatten_join(n->children[1], from, where);
            where.push_back(std::move(conjunct));
            return;
        }
        if (n->kind == PlanKind::Filter) {
            flatten_join(n->children[0], from, where);
            for (const ExprPtr& p : n->predicates) where.push_back(expr_to_string(*p));
            return;
        }
        std::string item = item_sql(n, where);
        from.push_back(from.empty() ? item : ", " + item);
    }

    std::string query_sql(PlanPtr n) {
        std::ostringstream out;
        std::optional<int64_t> limit, offset;
        if (n->kind == PlanKind::Limit) {
            limit = n->count;
            n = n->children[0];
        }
        if (n->kind == PlanKind::Skip) {
            offset = n->count;
            n = n->children[0];
        }
        std::vector<SortKey> order;
        if (n->kind == PlanKind::Sort) {
            order = n->sort_keys;
            n = n->children[0];
        }
        bool distinct = false;
        if (n->kind == PlanKind::Distinct) {
            distinct = true;
            n = n->children[0];
        }
        std::vector<NamedExpr> projections;
        bool has_project = false;
        if (n->kind == PlanKind::Project) {
            projections = n->projections;
            has_project = true;
            n = n->children[0];
        }
        std::vector<ExprPtr> upper_filters;
        while (n->kind == PlanKind::Filter) {
            for (const ExprPtr& p : n->predicates) upper_filters.push_back(p);
            n = n->children[0];
        }
        const PlanNode* group = nullptr;
        PlanPtr group_node;
        if (n->kind == PlanKind::GroupAggregate) {
            group_node = n;
            group = n.get();
            n = n->children[0];
        }

        std::vector<std::string> from, where;
        flatten_join(n, from, where);
        if (!group) {
            for (const ExprPtr& p : upper_filters) where.push_back(expr_to_string(*p));
        }

        out << "SELECT ";
        if (distinct) out << "DISTINCT ";
        if (group) {
            if (has_project) {
                for (size_t i = 0; i < projections.size(); ++i) {
                    if (i) out << ", ";
                    out << post_group_sql(*projections[i].expr, *group) << " AS " << projections[i].name;
                }
            } else {
                bool first = true;
                for (const NamedExpr& k : group->group_keys) {
                    if (!first) out << ", ";
                    first = false;
                    out << expr_to_string(*k.expr) << " AS " << k.name;
                }
                for (const AggSpec& a : group->aggs) {
                    if (!first) out << ", ";
                    first = false;
                    out << agg_func_name(a.func) << "(" << (a.arg ? expr_to_string(*a.arg) : "*") << ") AS "
                        << a.name;
                }
            }
        } else if (has_project) {
            for (size_t i = 0; i < projections.size(); ++i) {
                if (i) out << ", ";
                out << expr_to_string(*projections[i].expr) << " AS " << projections[i].name;
            }
        } else {
            out << "*";
        }

        out << " FROM ";
        for (const std::string& f : from) out << f;
        if (!where.empty()) {
            out << " WHERE ";
            for (size_t i = 0; i < where.size(); ++i) {
                if (i) out << " AND ";
                out << where[i];
            }
        }
        if (group && !group->group_keys.empty()) {
            out << " GROUP BY ";
            for (size_t i = 0; i < group->group_keys.size(); ++i) {
                if (i) out << ", ";
                out << group_key_sql(group->group_keys[i], projections, has_project);
            }
        }
        if (group && !upper_filters.empty()) {
            out << " HAVING ";
            for (size_t i = 0; i < upper_filters.size(); ++i) {
                if (i) out << " AND ";
                out << post_group_sql(*upper_filters[i], *group);
            }
        }
        if (!order.empty()) {
            out << " ORDER BY ";
            for (size_t i = 0; i < order.size(); ++i) {
                if (i) out << ", ";
                out << expr_to_string(*order[i].expr) << (order[i].desc ? " DESC" : " ASC");
            }
        }
        if (limit) out << " LIMIT " << *limit;
        if (offset) out << " OFFSET " << *offset;
        return out.str();
    }
};

}  // namespace

std::string to_sql(const PlanPtr& plan) {
    Unparser u;
    std::string body = u.query_sql(plan);
    if (u.ctes.empty()) return body;
    std::string out = "WITH ";
    for (size_t i = 0; i < u.ctes.size(); ++i) {
        if (i) out += ", ";
        out += u.ctes[i].first + " AS (" + u.ctes[i].second + ")";
    }
    return out + " " + body;
}

}  // namespace varq
