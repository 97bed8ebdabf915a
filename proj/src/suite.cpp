#include "varq/suite.hpp"

namespace varq {

namespace {

uint64_t mix64(uint64_t z) {
    z += 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

constexpr const char* kQ01 = R"sql(
SELECT l_returnflag, l_linestatus,
       sum(l_quantity) AS sum_qty,
       sum(l_extendedprice) AS sum_base_price,
       sum(l_extendedprice * (1 - l_discount)) AS sum_disc_price,
       sum(l_extendedprice * (1 - l_discount) * (1 + l_tax)) AS sum_charge,
       avg(l_quantity) AS avg_qty,
       avg(l_extendedprice) AS avg_price,
       avg(l_discount) AS avg_disc,
       count(*) AS count_order
FROM lineitem
WHERE l_shipdate <= DATE '1998-09-02'
GROUP BY l_returnflag, l_linestatus
ORDER BY l_returnflag, l_linestatus
)sql";

constexpr const char* kQ03 = R"sql(
SELECT l_orderkey,
       sum(l_extendedprice * (1 - l_discount)) AS revenue,
       o_orderdate, o_shippriority
FROM customer, orders, lineitem
WHERE c_mktsegment = 'BUILDING'
  AND c_custkey = o_custkey
  AND l_orderkey = o_orderkey
  AND o_orderdate < DATE '1995-03-15'
  AND l_shipdate > DATE '1995-03-15'
GROUP BY l_orderkey, o_orderdate, o_shippriority
ORDER BY revenue DESC, o_orderdate
LIMIT 10
)sql";

constexpr const char* kQ06 = R"sql(
SELECT sum(l_extendedprice * l_discount) AS revenue
FROM lineitem
WHERE l_shipdate >= DATE '1994-01-01'
  AND l_shipdate < DATE '1995-01-01'
  AND l_discount BETWEEN 0.05 AND 0.07
  AND l_quantity < 24
)sql";

// Flattened form of the classic profit query; the FROM order is chosen so
// every comma-join step is linked by an equality predicate.
constexpr const char* kQ09 = R"sql(
SELECT n_name AS nation,
       EXTRACT(YEAR FROM o_orderdate) AS o_year,
       sum(l_extendedprice * (1 - l_discount) - ps_supplycost * l_quantity) AS sum_profit
FROM part, lineitem, supplier, partsupp, orders, nation
WHERE p_name LIKE '%green%'
  AND p_partkey = l_partkey
  AND s_suppkey = l_suppkey
  AND ps_partkey = l_partkey
  AND ps_suppkey = l_suppkey
  AND o_orderkey = l_orderkey
  AND n_nationkey = s_nationkey
GROUP BY nation, o_year
ORDER BY nation, o_year DESC
)sql";

// Quantity threshold lowered from 300 to 150: the synthetic generator caps
// each order at 4 lineitems, so the classic threshold would select nothing.
constexpr const char* kQ18 = R"sql(
SELECT c_name, c_custkey, o_orderkey, o_orderdate, o_totalprice,
       sum(l_quantity) AS total_qty
FROM customer, orders, lineitem
WHERE o_orderkey IN (
        SELECT l_orderkey FROM lineitem
        GROUP BY l_orderkey
        HAVING sum(l_quantity) > 150)
  AND c_custkey = o_custkey
  AND o_orderkey = l_orderkey
GROUP BY c_name, c_custkey, o_orderkey, o_orderdate, o_totalprice
ORDER BY o_totalprice DESC, o_orderdate
LIMIT 100
)sql";

constexpr const char* kExample = R"sql(
WITH high_value_purchases AS (
    SELECT * FROM orders
    WHERE EXTRACT(YEAR FROM o_orderdate) >= 1997
      AND o_orderpriority = '1-URGENT'
    ORDER BY o_totalprice DESC
    LIMIT 100
)
SELECT C.c_name, SUM(P.o_totalprice * 0.9) AS amount
FROM customer C, high_value_purchases P
WHERE C.c_custkey = P.o_custkey
GROUP BY C.c_name
)sql";

constexpr const char* kPred7 = R"sql(
SELECT COUNT(*) AS counter FROM lineitem
WHERE l_orderkey >= 0 AND l_linenumber >= 0
  AND l_quantity >= 0 AND l_extendedprice >= 0
  AND l_suppkey >= 0 AND l_partkey >= 0 AND l_tax >= 0
)sql";

MicrobenchSpec verify_sized(MicrobenchSpec::Kind kind) {
    MicrobenchSpec s;
    s.kind = kind;
    s.element_count = 100'000;
    s.distinct_values = 1000;
    s.modulo = 100;
    return s;
}

}  // namespace

std::string MicrobenchSpec::describe() const {
    switch (kind) {
        case Pred7: return "pred7";
        case Distinct:
            return "distinct n=" + std::to_string(element_count) + " d=" + std::to_string(distinct_values);
        case OneField:
            return "onefield n=" + std::to_string(element_count) + " m=" + std::to_string(modulo);
        case ManyFields:
            return "manyfields n=" + std::to_string(element_count) + " m=" + std::to_string(modulo);
    }
    return "?";
}

Database make_micro_db(const MicrobenchSpec& spec) {
    if (spec.kind == MicrobenchSpec::Pred7) {
        throw ConfigError("pred7 runs against the TPC-H lineitem table, not a micro table");
    }
    if (spec.element_count < 1) throw ConfigError("element_count must be >= 1");
    Database db;
    if (spec.kind == MicrobenchSpec::Distinct) {
        if (spec.distinct_values < 1 || spec.distinct_values > spec.element_count) {
            throw ConfigError("need 1 <= distinct_values <= element_count");
        }
        TableData t("orders", Schema({{"x", ValueType::Int64}}));
        for (int64_t i = 0; i < spec.element_count; ++i) {
            // first occurrences are 0..D-1 in order, the rest repeat them
            int64_t x = i < spec.distinct_values
                            ? i
                            : static_cast<int64_t>(mix64(spec.seed ^ static_cast<uint64_t>(i)) %
                                                   static_cast<uint64_t>(spec.distinct_values));
            t.append({Value(x)});
        }
        db.put(std::move(t));
        return db;
    }
    if (spec.modulo < 1) throw ConfigError("modulo must be >= 1");
    TableData t("orders", Schema({{"id", ValueType::Int64}, {"p", ValueType::Int64}}));
    for (int64_t i = 0; i < spec.element_count; ++i) {
        t.append({Value(i), Value(i)});
    }
    db.put(std::move(t));
    return db;
}

std::string micro_query_sql(const MicrobenchSpec& spec) {
    switch (spec.kind) {
        case MicrobenchSpec::Pred7:
            return kPred7;
        case MicrobenchSpec::Distinct:
            return "SELECT DISTINCT x FROM orders";
        case MicrobenchSpec::OneField:
            return "SELECT SUM(p) AS sum_p FROM orders GROUP BY MOD(id, " + std::to_string(spec.modulo) + ")";
        case MicrobenchSpec::ManyFields:
            return "SELECT COUNT(*) AS cnt, SUM(p) AS sum_p, AVG(p) AS avg_p, MIN(p) AS min_p, "
                   "MAX(p) AS max_p FROM orders GROUP BY MOD(id, " +
                   std::to_string(spec.modulo) + ")";
    }
    throw ConfigError("bad micro kind");
}

Catalog micro_catalog(MicrobenchSpec::Kind kind) {
    Catalog cat;
    if (kind == MicrobenchSpec::Pred7) return tpch_catalog();
    if (kind == MicrobenchSpec::Distinct) {
        cat.put("orders", Schema({{"x", ValueType::Int64}}));
    } else {
        cat.put("orders", Schema({{"id", ValueType::Int64}, {"p", ValueType::Int64}}));
    }
    return cat;
}

const std::vector<QueryEntry>& registry() {
    static const std::vector<QueryEntry> entries = [] {
        auto tpch = [](const char* id, const char* sql, const char* description) {
            QueryEntry e;
            e.id = id;
            e.sql = sql;
            e.description = description;
            return e;
        };
        auto micro = [](const char* id, MicrobenchSpec::Kind kind, const char* description) {
            QueryEntry e;
            e.id = id;
            e.micro = true;
            e.verify_spec = verify_sized(kind);
            e.sql = micro_query_sql(e.verify_spec);
            e.description = description;
            return e;
        };
        std::vector<QueryEntry> r;
        r.push_back(tpch("q01", kQ01,
                         "pricing summary: low-cardinality grouped aggregation (4 groups) with many "
                         "arithmetic aggregates per group"));
        r.push_back(tpch("q03", kQ03, "shipping priority: join-intensive, grouped revenue with top-10 ordering"));
        r.push_back(tpch("q06", kQ06,
                         "forecasting revenue change: scalar aggregate dominated by predicate execution"));
        r.push_back(tpch("q09", kQ09,
                         "product type profit: five-way join with LIKE filter and grouped aggregation"));
        r.push_back(tpch("q18", kQ18,
                         "large volume customer: high-cardinality grouped aggregation feeding a semi join"));
        r.push_back(tpch("example", kExample,
                         "running example: filtered top-100 CTE joined to customers, grouped sum"));
        r.push_back(tpch("pred7", kPred7, "microbenchmark: 7 conjuncted always-true predicates with COUNT(*)"));
        r.push_back(micro("distinct", MicrobenchSpec::Distinct,
                          "microbenchmark: distinct over a controlled number of distinct elements"));
        r.push_back(micro("onefield", MicrobenchSpec::OneField,
                          "microbenchmark: single-field grouped sum, group count = MOD divisor"));
        r.push_back(micro("manyfields", MicrobenchSpec::ManyFields,
                          "microbenchmark: five-aggregate grouped reduction, group count = MOD divisor"));
        return r;
    }();
    return entries;
}

const QueryEntry* find_query(const std::string& id) {
    for (const QueryEntry& e : registry()) {
        if (e.id == to_lower(id)) return &e;
    }
    return nullptr;
}

Catalog catalog_for(const QueryEntry& entry) {
    if (entry.micro) return micro_catalog(entry.verify_spec.kind);
    return tpch_catalog();
}

PlanPtr plan_for(const QueryEntry& entry) {
    return parse(entry.sql, catalog_for(entry));
}

Database database_for(const QueryEntry& entry, double sf, uint64_t seed) {
    if (entry.micro) {
        MicrobenchSpec spec = entry.verify_spec;
        spec.seed = seed;
        return make_micro_db(spec);
    }
    return generate({sf, seed});
}

std::string render_plan(const PlanPtr& validated, const GenOptions& options) {
    return render_pipeline(compile(validated, options));
}

}  // namespace varq
