#include "varq/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace varq {
namespace oracle {

namespace {

Record eval_keys(const std::vector<ExprPtr>& keys, RowView rec) {
    Record out;
    out.reserve(keys.size());
    for (const ExprPtr& e : keys) out.push_back(eval(*e, rec));
    return out;
}

std::vector<Record> rows_of(const PlanPtr& n, const Database& db) {
    switch (n->kind) {
        case PlanKind::Scan: {
            const TableData& t = db.table(n->table);
            std::vector<Record> out;
            out.reserve(t.row_count());
            for (size_t i = 0; i < t.row_count(); ++i) {
                RowView r = t.row(i);
                out.emplace_back(r.begin(), r.end());
            }
            return out;
        }
        case PlanKind::Filter: {
            std::vector<Record> in = rows_of(n->children[0], db);
            std::vector<Record> out;
            for (Record& r : in) {
                bool pass = true;
                for (const ExprPtr& p : n->predicates) {
                    Value v = eval(*p, r);
                    if (v.is_null() || !v.as_bool()) {
                        pass = false;
                        break;
                    }
                }
                if (pass) out.push_back(std::move(r));
            }
            return out;
        }
        case PlanKind::Project: {
            std::vector<Record> in = rows_of(n->children[0], db);
            std::vector<Record> out;
            out.reserve(in.size());
            for (const Record& r : in) {
                Record p;
                p.reserve(n->projections.size());
                for (const auto& ne : n->projections) p.push_back(eval(*ne.expr, r));
                out.push_back(std::move(p));
            }
            return out;
        }
        case PlanKind::Join: {
            std::vector<Record> build = rows_of(n->children[0], db);
            std::vector<Record> probe = rows_of(n->children[1], db);
            // precompute key tuples once; matching stays nested-loop
            std::vector<Record> build_keys;
            build_keys.reserve(build.size());
            for (const Record& b : build) build_keys.push_back(eval_keys(n->build_keys, b));
            size_t build_width = n->children[0]->schema.size();

            std::vector<Record> out;
            for (const Record& p : probe) {
                Record pk = eval_keys(n->probe_keys, p);
                bool any = false;
                for (size_t b = 0; b < build.size(); ++b) {
                    if (build_keys[b] != pk) continue;
                    any = true;
                    if (n->join_kind == JoinKind::Semi || n->join_kind == JoinKind::Anti) break;
                    if (n->join_kind == JoinKind::Inner || n->join_kind == JoinKind::Left) {
                        Record j;
                        j.reserve(build[b].size() + p.size());
                        for (const Value& v : build[b]) j.push_back(v);
                        for (const Value& v : p) j.push_back(v);
                        out.push_back(std::move(j));
                    }
                }
                switch (n->join_kind) {
                    case JoinKind::Semi:
                        if (any) out.push_back(p);
                        break;
                    case JoinKind::Anti:
                        if (!any) out.push_back(p);
                        break;
                    case JoinKind::Left:
                        if (!any) {
                            Record j;
                            j.reserve(build_width + p.size());
                            for (size_t i = 0; i < build_width; ++i) j.push_back(Value::null());
                            for (const Value& v : p) j.push_back(v);
                            out.push_back(std::move(j));
                        }
                        break;
                    case JoinKind::Inner:
                        break;
                }
            }
            return out;
        }
        case PlanKind::Sort: {
            std::vector<Record> in = rows_of(n->children[0], db);
            std::vector<size_t> idx(in.size());
            for (size_t i = 0; i < idx.size(); ++i) idx[i] = i;
            std::vector<Record> keys;
            keys.reserve(in.size());
            for (const Record& r : in) {
                Record kv;
                for (const SortKey& k : n->sort_keys) kv.push_back(eval(*k.expr, r));
                keys.push_back(std::move(kv));
            }
            std::stable_sort(idx.begin(), idx.end(), [&](size_t a, size_t b) {
                for (size_t k = 0; k < n->sort_keys.size(); ++k) {
                    int c = compare_values(keys[a][k], keys[b][k]);
                    if (c != 0) return n->sort_keys[k].desc ? c > 0 : c < 0;
                }
                return false;
            });
            std::vector<Record> out;
            out.reserve(in.size());
            for (size_t i : idx) out.push_back(std::move(in[i]));
            return out;
        }
        case PlanKind::Limit: {
            std::vector<Record> in = rows_of(n->children[0], db);
            if (in.size() > static_cast<size_t>(n->count)) in.resize(n->count);
            return in;
        }
        case PlanKind::Skip: {
            std::vector<Record> in = rows_of(n->children[0], db);
            size_t k = std::min(in.size(), static_cast<size_t>(n->count));
            return std::vector<Record>(std::make_move_iterator(in.begin() + k),
                                       std::make_move_iterator(in.end()));
        }
        case PlanKind::Distinct: {
            std::vector<Record> in = rows_of(n->children[0], db);
            std::vector<Record> out;  // association-list membership scan
            for (Record& r : in) {
                bool seen = false;
                for (const Record& s : out) {
                    if (s == r) {
                        seen = true;
                        break;
                    }
                }
                if (!seen) out.push_back(std::move(r));
            }
            return out;
        }
        case PlanKind::GroupAggregate: {
            std::vector<Record> in = rows_of(n->children[0], db);
            // association list of (key, member rows), first-encounter order
            std::vector<std::pair<Record, std::vector<Record>>> groups;
            bool keyless = n->group_keys.empty();
            if (keyless) groups.emplace_back(Record{}, std::vector<Record>{});
            for (Record& r : in) {
                Record key;
                for (const auto& k : n->group_keys) key.push_back(eval(*k.expr, r));
                std::vector<Record>* members = nullptr;
                for (auto& [gk, gm] : groups) {
                    if (gk == key) {  // Null keys group together here
                        members = &gm;
                        break;
                    }
                }
                if (!members) {
                    groups.emplace_back(std::move(key), std::vector<Record>{});
                    members = &groups.back().second;
                }
                members->push_back(std::move(r));
            }
            std::vector<Record> out;
            out.reserve(groups.size());
            for (auto& [key, members] : groups) {
                Record rec = key;
                for (const AggSpec& a : n->aggs) {
                    int64_t cnt = 0;
                    int64_t isum = 0;
                    double fsum = 0.0;
                    Value extreme;
                    for (const Record& m : members) {
                        if (!a.arg) continue;
                        Value v = eval(*a.arg, m);
                        if (v.is_null()) continue;
                        ++cnt;
                        if (v.type() == ValueType::Int64) isum += v.as_int();
                        else if (v.type() == ValueType::Float64) fsum += v.as_double();
                        if (extreme.is_null()) {
                            extreme = v;
                        } else if (a.func == AggFunc::Min && compare_values(v, extreme) < 0) {
                            extreme = v;
                        } else if (a.func == AggFunc::Max && compare_values(v, extreme) > 0) {
                            extreme = v;
                        }
                    }
                    bool int_arg = a.arg && a.arg->out_type == ValueType::Int64;
                    switch (a.func) {
                        case AggFunc::Count:
                            rec.push_back(Value(a.arg ? cnt : static_cast<int64_t>(members.size())));
                            break;
                        case AggFunc::Sum:
                            if (cnt == 0) rec.push_back(Value::null());
                            else rec.push_back(int_arg ? Value(isum) : Value(fsum));
                            break;
                        case AggFunc::Avg:
                            if (cnt == 0) rec.push_back(Value::null());
                            else rec.push_back(Value((int_arg ? static_cast<double>(isum) : fsum) /
                                                     static_cast<double>(cnt)));
                            break;
                        case AggFunc::Min:
                        case AggFunc::Max:
                            rec.push_back(extreme);
                            break;
                    }
                }
                out.push_back(std::move(rec));
            }
            return out;
        }
    }
    throw Error("unreachable plan kind");
}

}  // namespace

ResultSet evaluate(const PlanPtr& plan, const Database& db) {
    if (!plan->validated) throw ValidateError("oracle requires a validated plan");
    return ResultSet{plan->schema, rows_of(plan, db), ordering_of(plan)};
}

}  // namespace oracle

namespace {

bool float_close(double a, double b, double tol) {
    if (a == b) return true;
    double diff = std::fabs(a - b);
    return diff <= tol * std::max({1.0, std::fabs(a), std::fabs(b)});
}

/// Tolerant row equality; returns the worst relative deviation seen via `dev`.
bool rows_close(const Record& a, const Record& b, const Schema& schema, double tol, double& dev) {
    for (size_t i = 0; i < a.size(); ++i) {
        if (schema.at(i).type == ValueType::Float64 && !a[i].is_null() && !b[i].is_null()) {
            double x = a[i].as_double(), y = b[i].as_double();
            if (!float_close(x, y, tol)) return false;
            double d = std::fabs(x - y) / std::max({1.0, std::fabs(x), std::fabs(y)});
            dev = std::max(dev, d);
        } else if (!(a[i] == b[i])) {
            return false;
        }
    }
    return true;
}

std::string row_to_string(const Record& r) {
    std::string out = "(";
    for (size_t i = 0; i < r.size(); ++i) {
        if (i) out += ", ";
        out += r[i].to_string();
    }
    return out + ")";
}

/// Exact-part bucket key: every non-float field, with floats blanked out.
Record exact_part(const Record& r, const Schema& schema) {
    Record out;
    out.reserve(r.size());
    for (size_t i = 0; i < r.size(); ++i) {
        out.push_back(schema.at(i).type == ValueType::Float64 ? Value::null() : r[i]);
    }
    return out;
}

struct MultisetDiff {
    std::vector<const Record*> missing;
    std::vector<const Record*> extra;
    double worst_dev = 0.0;
};

MultisetDiff match_multiset(const std::vector<const Record*>& actual, const std::vector<const Record*>& expected,
                            const Schema& schema, double tol) {
    MultisetDiff diff;
    std::unordered_map<Record, std::vector<const Record*>, RecordHash, RecordEq> buckets;
    for (const Record* e : expected) buckets[exact_part(*e, schema)].push_back(e);
    for (const Record* a : actual) {
        auto it = buckets.find(exact_part(*a, schema));
        bool matched = false;
        if (it != buckets.end()) {
            auto& list = it->second;
            for (size_t i = 0; i < list.size(); ++i) {
                double dev = 0.0;
                if (rows_close(*a, *list[i], schema, tol, dev)) {
                    diff.worst_dev = std::max(diff.worst_dev, dev);
                    list.erase(list.begin() + i);
                    matched = true;
                    break;
                }
            }
        }
        if (!matched) diff.extra.push_back(a);
    }
    for (auto& [k, list] : buckets) {
        for (const Record* e : list) diff.missing.push_back(e);
    }
    return diff;
}

}  // namespace

std::string CompareReport::summary() const {
    if (equal) return "equal (worst float dev " + std::to_string(worst_float_dev) + ")";
    std::ostringstream out;
    out << "MISMATCH:";
    if (!missing.empty()) out << " missing=" << missing.size();
    if (!extra.empty()) out << " extra=" << extra.size();
    if (!order_violations.empty()) out << " order_violations=" << order_violations.size();
    size_t shown = 0;
    for (const auto& m : missing) {
        if (shown++ >= 3) break;
        out << "\n  missing " << m;
    }
    shown = 0;
    for (const auto& e : extra) {
        if (shown++ >= 3) break;
        out << "\n  extra " << e;
    }
    shown = 0;
    for (const auto& v : order_violations) {
        if (shown++ >= 3) break;
        out << "\n  " << v;
    }
    return out.str();
}

CompareReport compare(const ResultSet& actual, const ResultSet& expected, double float_tol) {
    if (!(actual.schema == expected.schema)) {
        throw ValidateError("compare: schema mismatch");
    }
    CompareReport report;
    const Schema& schema = expected.schema;
    const Ordering& ord = expected.ordering;

    if (ord.ordered()) {
        // verify actual is sorted per keys
        for (size_t i = 1; i < actual.rows.size(); ++i) {
            for (const auto& k : ord.keys) {
                int c = compare_values(actual.rows[i - 1][k.ordinal], actual.rows[i][k.ordinal]);
                if (k.desc) c = -c;
                if (c < 0) break;  // strictly ordered on this key
                if (c > 0) {
                    report.order_violations.push_back("rows " + std::to_string(i - 1) + ".." + std::to_string(i) +
                                                      " out of order: " + row_to_string(actual.rows[i - 1]) +
                                                      " then " + row_to_string(actual.rows[i]));
                    break;
                }
            }
        }
    }

    auto key_of = [&](const Record& r) {
        Record k;
        for (const auto& kk : ord.keys) k.push_back(r[kk.ordinal]);
        return k;
    };
    Schema key_schema;
    if (ord.ordered()) {
        for (size_t i = 0; i < ord.keys.size(); ++i) {
            key_schema.add("k" + std::to_string(i), schema.at(ord.keys[i].ordinal).type);
        }
    }

    if (ord.ordered() && ord.truncated && !expected.rows.empty()) {
        // valid top-N: sort-key multisets agree; rows tied with the boundary
        // key may differ in their non-key fields
        std::vector<Record> akeys, ekeys;
        for (const Record& r : actual.rows) akeys.push_back(key_of(r));
        for (const Record& r : expected.rows) ekeys.push_back(key_of(r));
        std::vector<const Record*> ak, ek;
        for (const Record& k : akeys) ak.push_back(&k);
        for (const Record& k : ekeys) ek.push_back(&k);
        MultisetDiff kd = match_multiset(ak, ek, key_schema, float_tol);
        report.worst_float_dev = std::max(report.worst_float_dev, kd.worst_dev);
        for (const Record* m : kd.missing) report.missing.push_back("top-N key " + row_to_string(*m));
        for (const Record* e : kd.extra) report.extra.push_back("top-N key " + row_to_string(*e));

        const Record& boundary = ekeys.back();
        double dummy = 0.0;
        std::vector<const Record*> a_rows, e_rows;
        for (size_t i = 0; i < actual.rows.size(); ++i) {
            if (!rows_close(akeys[i], boundary, key_schema, float_tol, dummy)) a_rows.push_back(&actual.rows[i]);
        }
        for (size_t i = 0; i < expected.rows.size(); ++i) {
            if (!rows_close(ekeys[i], boundary, key_schema, float_tol, dummy)) e_rows.push_back(&expected.rows[i]);
        }
        MultisetDiff rd = match_multiset(a_rows, e_rows, schema, float_tol);
        report.worst_float_dev = std::max(report.worst_float_dev, rd.worst_dev);
        for (const Record* m : rd.missing) report.missing.push_back(row_to_string(*m));
        for (const Record* e : rd.extra) report.extra.push_back(row_to_string(*e));
    } else {
        std::vector<const Record*> a_rows, e_rows;
        for (const Record& r : actual.rows) a_rows.push_back(&r);
        for (const Record& r : expected.rows) e_rows.push_back(&r);
        MultisetDiff rd = match_multiset(a_rows, e_rows, schema, float_tol);
        report.worst_float_dev = std::max(report.worst_float_dev, rd.worst_dev);
        for (const Record* m : rd.missing) report.missing.push_back(row_to_string(*m));
        for (const Record* e : rd.extra) report.extra.push_back(row_to_string(*e));
    }

    report.equal = report.missing.empty() && report.extra.empty() && report.order_violations.empty();
    return report;
}

}  // namespace varq
