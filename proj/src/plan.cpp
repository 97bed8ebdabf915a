#include "varq/plan.hpp"

#include <sstream>

#include "varq/datagen.hpp"

namespace varq {

const char* join_kind_name(JoinKind k) {
    switch (k) {
        case JoinKind::Inner: return "inner";
        case JoinKind::Left: return "left";
        case JoinKind::Semi: return "semi";
        case JoinKind::Anti: return "anti";
    }
    return "?";
}

const char* agg_func_name(AggFunc f) {
    switch (f) {
        case AggFunc::Count: return "count";
        case AggFunc::Sum: return "sum";
        case AggFunc::Avg: return "avg";
        case AggFunc::Min: return "min";
        case AggFunc::Max: return "max";
    }
    return "?";
}

Catalog::Catalog(const Database& db) {
    for (const auto& [name, table] : db.tables()) schemas_.emplace(name, table.schema());
}

void Catalog::put(std::string name, Schema schema) {
    schemas_.insert_or_assign(to_lower(name), std::move(schema));
}

const Schema* Catalog::find(std::string_view name) const {
    auto it = schemas_.find(to_lower(name));
    return it == schemas_.end() ? nullptr : &it->second;
}

const Catalog& tpch_catalog() {
    static const Catalog cat = [] {
        Catalog c;
        for (const auto& name : tpch_table_names()) c.put(name, tpch_schema(name));
        return c;
    }();
    return cat;
}

namespace {

bool is_numeric(ValueType t) { return t == ValueType::Int64 || t == ValueType::Float64; }

ValueType agg_output_type(const AggSpec& spec, ValueType arg_type) {
    switch (spec.func) {
        case AggFunc::Count: return ValueType::Int64;
        case AggFunc::Sum: return arg_type == ValueType::Int64 ? ValueType::Int64 : ValueType::Float64;
        case AggFunc::Avg: return ValueType::Float64;
        case AggFunc::Min:
        case AggFunc::Max: return arg_type;
    }
    return ValueType::Null;
}

PlanPtr validate_node(const PlanPtr& plan, const Catalog& catalog) {
    auto out = std::make_shared<PlanNode>(*plan);
    out->children.clear();
    for (const auto& c : plan->children) out->children.push_back(validate_node(c, catalog));

    switch (plan->kind) {
        case PlanKind::Scan: {
            const Schema* s = catalog.find(plan->table);
            if (!s) throw ValidateError("unknown table: " + plan->table);
            out->schema = *s;
            break;
        }
        case PlanKind::Filter: {
            const Schema& in = out->children[0]->schema;
            if (out->predicates.empty()) throw ValidateError("filter requires at least one predicate");
            for (auto& p : out->predicates) {
                p = resolve_expr(p, in);
                if (p->out_type != ValueType::Bool) {
                    throw ValidateError("filter predicate must be boolean, got " +
                                        std::string(type_name(p->out_type)) + ": " + expr_to_string(*p));
                }
            }
            out->schema = in;
            break;
        }
        case PlanKind::Project: {
            const Schema& in = out->children[0]->schema;
            Schema s;
            for (auto& ne : out->projections) {
                ne.expr = resolve_expr(ne.expr, in);
                s.add(ne.name, ne.expr->out_type);
            }
            out->schema = s;
            break;
        }
        case PlanKind::Join: {
            const Schema& build = out->children[0]->schema;
            const Schema& probe = out->children[1]->schema;
            if (out->build_keys.size() != out->probe_keys.size()) {
                throw ValidateError("join key arity mismatch: " + std::to_string(out->build_keys.size()) +
                                    " vs " + std::to_string(out->probe_keys.size()));
            }
            if (out->build_keys.empty()) throw ValidateError("join requires at least one key pair");
            for (size_t i = 0; i < out->build_keys.size(); ++i) {
                out->build_keys[i] = resolve_expr(out->build_keys[i], build);
                out->probe_keys[i] = resolve_expr(out->probe_keys[i], probe);
                ValueType b = out->build_keys[i]->out_type;
                ValueType p = out->probe_keys[i]->out_type;
                // exact type match: keys are compared structurally by the hash map
                if (b != p) {
                    throw ValidateError(std::string("join key type mismatch: ") + type_name(b) + " vs " +
                                        type_name(p));
                }
            }
            Schema s;
            switch (out->join_kind) {
                case JoinKind::Inner:
                case JoinKind::Left: {
                    for (const auto& c : build.columns()) s.add(c.name, c.type);
                    for (const auto& c : probe.columns()) {
                        // disambiguate collisions; references by the shared name
                        // keep binding to the build side
                        std::string name = c.name;
                        int suffix = 2;
                        while (s.find(name) >= 0) name = c.name + "_" + std::to_string(suffix++);
                        s.add(name, c.type);
                    }
                    break;
                }
                case JoinKind::Semi:
                case JoinKind::Anti:
                    s = probe;
                    break;
            }
            out->schema = s;
            break;
        }
        case PlanKind::Sort: {
            const Schema& in = out->children[0]->schema;
            if (out->sort_keys.empty()) throw ValidateError("sort requires at least one key");
            for (auto& k : out->sort_keys) k.expr = resolve_expr(k.expr, in);
            out->schema = in;
            break;
        }
        case PlanKind::Limit:
        case PlanKind::Skip:
            if (out->count < 0) throw ValidateError("limit/skip count must be >= 0");
            out->schema = out->children[0]->schema;
            break;
        case PlanKind::GroupAggregate: {
            const Schema& in = out->children[0]->schema;
            Schema s;
            for (auto& k : out->group_keys) {
                k.expr = resolve_expr(k.expr, in);
                s.add(k.name, k.expr->out_type);
            }
            for (auto& a : out->aggs) {
                ValueType arg_type = ValueType::Null;
                if (a.arg) {
                    a.arg = resolve_expr(a.arg, in);
                    arg_type = a.arg->out_type;
                } else if (a.func != AggFunc::Count) {
                    throw ValidateError(std::string(agg_func_name(a.func)) + " requires an argument");
                }
                if ((a.func == AggFunc::Sum || a.func == AggFunc::Avg) && !is_numeric(arg_type)) {
                    throw ValidateError(std::string(agg_func_name(a.func)) + " requires a numeric argument");
                }
                if ((a.func == AggFunc::Min || a.func == AggFunc::Max) &&
                    !(is_numeric(arg_type) || arg_type == ValueType::Text || arg_type == ValueType::Date)) {
                    throw ValidateError("min/max argument must be numeric, text, or date");
                }
                s.add(a.name, agg_output_type(a, arg_type));
            }
            out->schema = s;
            break;
        }
        case PlanKind::Distinct:
            out->schema = out->children[0]->schema;
            break;
    }
    out->validated = true;
    return out;
}

}  // namespace

PlanPtr validate(const PlanPtr& plan, const Catalog& catalog) {
    return validate_node(plan, catalog);
}

const Schema& output_schema(const PlanPtr& validated) {
    if (!validated->validated) throw ValidateError("plan is not validated");
    return validated->schema;
}

namespace {

void print_node(const PlanNode& n, int depth, std::ostringstream& out) {
    for (int i = 0; i < depth; ++i) out << "  ";
    switch (n.kind) {
        case PlanKind::Scan:
            out << "scan " << n.table;
            break;
        case PlanKind::Filter: {
            out << "filter ";
            for (size_t i = 0; i < n.predicates.size(); ++i) {
                if (i) out << " AND ";
                out << expr_to_string(*n.predicates[i]);
            }
            break;
        }
        case PlanKind::Project: {
            out << "project ";
            for (size_t i = 0; i < n.projections.size(); ++i) {
                if (i) out << ", ";
                out << expr_to_string(*n.projections[i].expr) << " AS " << n.projections[i].name;
            }
            break;
        }
        case PlanKind::Join: {
            out << join_kind_name(n.join_kind) << "-join on ";
            for (size_t i = 0; i < n.build_keys.size(); ++i) {
                if (i) out << ", ";
                out << expr_to_string(*n.build_keys[i]) << " = " << expr_to_string(*n.probe_keys[i]);
            }
            out << " (build = first child)";
            break;
        }
        case PlanKind::Sort: {
            out << "sort ";
            for (size_t i = 0; i < n.sort_keys.size(); ++i) {
                if (i) out << ", ";
                out << expr_to_string(*n.sort_keys[i].expr) << (n.sort_keys[i].desc ? " DESC" : " ASC");
            }
            break;
        }
        case PlanKind::Limit:
            out << "limit " << n.count;
            break;
        case PlanKind::Skip:
            out << "skip " << n.count;
            break;
        case PlanKind::GroupAggregate: {
            out << "group-aggregate keys(";
            for (size_t i = 0; i < n.group_keys.size(); ++i) {
                if (i) out << ", ";
                out << expr_to_string(*n.group_keys[i].expr) << " AS " << n.group_keys[i].name;
            }
            out << ") aggs(";
            for (size_t i = 0; i < n.aggs.size(); ++i) {
                if (i) out << ", ";
                out << agg_func_name(n.aggs[i].func) << "(" << (n.aggs[i].arg ? expr_to_string(*n.aggs[i].arg) : "*")
                    << ") AS " << n.aggs[i].name;
            }
            out << ")";
            break;
        }
        case PlanKind::Distinct:
            out << "distinct";
            break;
    }
    out << "\n";
    for (const auto& c : n.children) print_node(*c, depth + 1, out);
}

}  // namespace

std::string print_plan(const PlanPtr& plan) {
    std::ostringstream out;
    print_node(*plan, 0, out);
    return out.str();
}

Ordering ordering_of(const PlanPtr& plan) {
    if (!plan->validated) throw ValidateError("ordering_of requires a validated plan");
    switch (plan->kind) {
        case PlanKind::Sort: {
            Ordering o;
            for (const auto& k : plan->sort_keys) {
                if (k.expr->kind != ExprKind::ColumnRef) return {};  // not checkable on output columns
                o.keys.push_back({k.expr->ordinal, k.desc});
            }
            return o;
        }
        case PlanKind::Limit: {
            Ordering o = ordering_of(plan->children[0]);
            if (o.ordered()) o.truncated = true;
            return o;
        }
        case PlanKind::Skip:
        case PlanKind::Filter:
        case PlanKind::Distinct:
            return ordering_of(plan->children[0]);
        case PlanKind::Project: {
            Ordering in = ordering_of(plan->children[0]);
            if (!in.ordered()) return {};
            Ordering o;
            o.truncated = in.truncated;
            for (const auto& k : in.keys) {
                int found = -1;
                for (size_t j = 0; j < plan->projections.size(); ++j) {
                    const Expr& e = *plan->projections[j].expr;
                    if (e.kind == ExprKind::ColumnRef && e.ordinal == k.ordinal) {
                        found = static_cast<int>(j);
                        break;
                    }
                }
                if (found < 0) return {};  // ordering key projected away
                o.keys.push_back({found, k.desc});
            }
            return o;
        }
        default:
            return {};
    }
}

Plan Plan::scan(std::string table) {
    auto n = std::make_shared<PlanNode>();
    n->kind = PlanKind::Scan;
    n->table = std::move(table);
    return Plan(n);
}

Plan Plan::filter(std::vector<ExprPtr> predicates) const {
    auto n = std::make_shared<PlanNode>();
    n->kind = PlanKind::Filter;
    n->children = {node_};
    n->predicates = std::move(predicates);
    return Plan(n);
}

Plan Plan::project(std::vector<NamedExpr> projections) const {
    auto n = std::make_shared<PlanNode>();
    n->kind = PlanKind::Project;
    n->children = {node_};
    n->projections = std::move(projections);
    return Plan(n);
}

Plan Plan::sort(std::vector<SortKey> keys) const {
    auto n = std::make_shared<PlanNode>();
    n->kind = PlanKind::Sort;
    n->children = {node_};
    n->sort_keys = std::move(keys);
    return Plan(n);
}

Plan Plan::limit(int64_t count) const {
    auto n = std::make_shared<PlanNode>();
    n->kind = PlanKind::Limit;
    n->children = {node_};
    n->count = count;
    return Plan(n);
}

Plan Plan::skip(int64_t count) const {
    auto n = std::make_shared<PlanNode>();
    n->kind = PlanKind::Skip;
    n->children = {node_};
    n->count = count;
    return Plan(n);
}

Plan Plan::group_by(std::vector<NamedExpr> keys, std::vector<AggSpec> aggs) const {
    auto n = std::make_shared<PlanNode>();
    n->kind = PlanKind::GroupAggregate;
    n->children = {node_};
    n->group_keys = std::move(keys);
    n->aggs = std::move(aggs);
    return Plan(n);
}

Plan Plan::distinct() const {
    auto n = std::make_shared<PlanNode>();
    n->kind = PlanKind::Distinct;
    n->children = {node_};
    return Plan(n);
}

Plan Plan::join(JoinKind kind, Plan build, Plan probe, std::vector<ExprPtr> build_keys,
                std::vector<ExprPtr> probe_keys) {
    auto n = std::make_shared<PlanNode>();
    n->kind = PlanKind::Join;
    n->join_kind = kind;
    n->children = {build.node(), probe.node()};
    n->build_keys = std::move(build_keys);
    n->probe_keys = std::move(probe_keys);
    return Plan(n);
}

}  // namespace varq
