#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "varq/bench.hpp"
#include "varq/tbl_io.hpp"

namespace py = pybind11;
using namespace varq;

namespace {

py::object value_to_py(const Value& v) {
    switch (v.type()) {
        case ValueType::Null: return py::none();
        case ValueType::Bool: return py::bool_(v.as_bool());
        case ValueType::Int64: return py::int_(v.as_int());
        case ValueType::Float64: return py::float_(v.as_double());
        case ValueType::Text: return py::str(v.as_text());
        case ValueType::Date: return py::str(format_date(v.as_date()));
    }
    return py::none();
}

py::dict result_to_py(const ResultSet& rs) {
    py::list cols;
    for (const Column& c : rs.schema.columns()) {
        cols.append(py::make_tuple(c.name, type_name(c.type)));
    }
    py::list rows;
    for (const Record& r : rs.rows) {
        py::list row;
        for (const Value& v : r) row.append(value_to_py(v));
        rows.append(std::move(row));
    }
    py::dict out;
    out["schema"] = std::move(cols);
    out["rows"] = std::move(rows);
    return out;
}

GenOptions options_from(bool fuse, bool multi, const std::string& strategy, unsigned workers) {
    GenOptions opt;
    opt.fuse_filters = fuse;
    opt.multi_emit_join = multi;
    opt.strategy = parse_strategy(strategy);
    opt.workers = workers;
    return opt;
}

MicrobenchSpec spec_from(const std::string& kind, int64_t n, int64_t d, int64_t m, uint64_t seed) {
    MicrobenchSpec spec;
    std::string k = to_lower(kind);
    if (k == "distinct") spec.kind = MicrobenchSpec::Distinct;
    else if (k == "onefield") spec.kind = MicrobenchSpec::OneField;
    else if (k == "manyfields") spec.kind = MicrobenchSpec::ManyFields;
    else if (k == "pred7") spec.kind = MicrobenchSpec::Pred7;
    else throw ConfigError("unknown micro kind: " + kind);
    spec.element_count = n;
    spec.distinct_values = d;
    spec.modulo = m;
    spec.seed = seed;
    return spec;
}

}  // namespace

PYBIND11_MODULE(_varq, m) {
    m.doc() = "In-memory relational query engine with pipeline and fused-loop backends";

    py::class_<Database>(m, "Database")
        .def("table_names",
             [](const Database& db) {
                 std::vector<std::string> names;
                 for (const auto& [name, t] : db.tables()) names.push_back(name);
                 return names;
             })
        .def("row_count", [](const Database& db, const std::string& t) { return db.table(t).row_count(); });

    m.def(
        "generate",
        [](double sf, uint64_t seed) { return generate({sf, seed}); },
        py::arg("sf"), py::arg("seed") = 42, "Generate the eight TPC-H style tables.");

    m.def(
        "load_dir",
        [](const std::string& dir) {
            Database db;
            for (const std::string& name : tpch_table_names()) {
                db.put(load_tbl(dir + "/" + name + ".tbl", name, tpch_schema(name)));
            }
            return db;
        },
        py::arg("dir"), "Load the eight .tbl files from a directory.");

    m.def(
        "write_dir",
        [](const Database& db, const std::string& dir) {
            for (const auto& [name, table] : db.tables()) write_tbl(table, dir + "/" + name + ".tbl");
        },
        py::arg("db"), py::arg("dir"));

    m.def(
        "make_micro_db",
        [](const std::string& kind, int64_t n, int64_t d, int64_t m_param, uint64_t seed) {
            return make_micro_db(spec_from(kind, n, d, m_param, seed));
        },
        py::arg("kind"), py::arg("n") = 1000000, py::arg("d") = 1000, py::arg("m") = 100,
        py::arg("seed") = 42);

    m.def("registry", [] {
        py::list out;
        for (const QueryEntry& e : registry()) {
            py::dict d;
            d["id"] = e.id;
            d["sql"] = e.sql;
            d["description"] = e.description;
            d["micro"] = e.micro;
            out.append(std::move(d));
        }
        return out;
    });

    m.def(
        "run_query",
        [](const Database& db, const std::string& sql, const std::string& backend, bool fuse, bool multi,
           const std::string& strategy, unsigned workers) {
            PlanPtr plan = validate(parse(sql, Catalog(db)), Catalog(db));
            ResultSet rs = backend == "imperative"
                               ? run_plan_fused(plan, db)
                               : run_plan(plan, db, options_from(fuse, multi, strategy, workers));
            return result_to_py(rs);
        },
        py::arg("db"), py::arg("sql"), py::arg("backend") = "pipeline", py::arg("fuse") = false,
        py::arg("multi") = false, py::arg("strategy") = "seq", py::arg("workers") = 0,
        "Parse and execute a SQL query on one backend variant.");

    m.def(
        "oracle",
        [](const Database& db, const std::string& sql) {
            PlanPtr plan = validate(parse(sql, Catalog(db)), Catalog(db));
            return result_to_py(oracle::evaluate(plan, db));
        },
        py::arg("db"), py::arg("sql"), "Reference-interpreter result for a SQL query.");

    m.def(
        "verify_query",
        [](const Database& db, const std::string& sql, const std::string& backend, bool fuse, bool multi,
           const std::string& strategy, double tol) {
            PlanPtr plan = validate(parse(sql, Catalog(db)), Catalog(db));
            ResultSet expected = oracle::evaluate(plan, db);
            ResultSet actual = backend == "imperative"
                                   ? run_plan_fused(plan, db)
                                   : run_plan(plan, db, options_from(fuse, multi, strategy, 0));
            CompareReport rep = compare(actual, expected, tol);
            return py::make_tuple(rep.equal, rep.summary());
        },
        py::arg("db"), py::arg("sql"), py::arg("backend") = "pipeline", py::arg("fuse") = false,
        py::arg("multi") = false, py::arg("strategy") = "seq", py::arg("tol") = kSeqFloatTol);

    m.def(
        "explain",
        [](const std::string& sql, bool fuse, bool multi, const std::string& strategy) {
            PlanPtr plan = validate(parse(sql), tpch_catalog());
            return print_plan(plan) + "\n" + render_plan(plan, options_from(fuse, multi, strategy, 0));
        },
        py::arg("sql"), py::arg("fuse") = false, py::arg("multi") = false, py::arg("strategy") = "seq");

    m.def("micro_sql", [](const std::string& kind, int64_t n, int64_t d, int64_t m_param) {
        return micro_query_sql(spec_from(kind, n, d, m_param, 42));
    }, py::arg("kind"), py::arg("n") = 1000000, py::arg("d") = 1000, py::arg("m") = 100);

    m.def(
        "bench_stats",
        [](const std::vector<double>& samples) {
            return py::make_tuple(mean_of(samples), margin_of_error(samples));
        },
        py::arg("samples"), "Mean and 95% CI half-width of injected samples.");

    m.def("speedup", [](double base, double variant) { return speedup(base, variant); });
}
