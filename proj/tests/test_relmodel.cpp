#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <unordered_set>

#include "varq/datagen.hpp"
#include "varq/tbl_io.hpp"

using namespace varq;

namespace {

std::string temp_path(const std::string& name) {
    return (std::filesystem::temp_directory_path() / name).string();
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << text;
}

}  // namespace

TEST_CASE("dates parse, format, and expose the year") {
    Date d = parse_date("2024-03-05");
    CHECK(format_date(d) == "2024-03-05");
    CHECK(year_of(d) == 2024);
    CHECK(parse_date("1970-01-01").days == 0);
    CHECK(parse_date("1969-12-31").days == -1);
    CHECK_THROWS(parse_date("2024/03/05"));
    CHECK_THROWS(parse_date("2024-13-05"));
    // round-trip across a wide range, including leap days
    for (int32_t days : {-100000, -1, 0, 1, 10957, 11016, 50000}) {
        CHECK(parse_date(format_date(Date{days})).days == days);
    }
}

TEST_CASE("value equality and ordering are structural") {
    CHECK(Value::null() == Value::null());
    CHECK(Value(int64_t{5}) == Value(int64_t{5}));
    CHECK_FALSE(Value(int64_t{5}) == Value(5.0));  // no cross-type promotion here
    CHECK(Value("abc") < Value("abd"));
    CHECK(hash_record(Record{Value(1), Value("x")}) == hash_record(Record{Value(1), Value("x")}));
}

TEST_CASE("load_tbl parses records per schema") {
    Schema schema({{"id", ValueType::Int64}, {"name", ValueType::Text}, {"day", ValueType::Date}});
    std::string path = temp_path("varq_load.tbl");
    write_text(path, "1|Alice|2024-03-05|\n");
    TableData t = load_tbl(path, "t", schema);
    REQUIRE(t.row_count() == 1);
    CHECK(t.row(0)[0] == Value(int64_t{1}));
    CHECK(t.row(0)[1] == Value("Alice"));
    CHECK(t.row(0)[2] == Value(parse_date("2024-03-05")));
}

TEST_CASE("load_tbl of an empty file yields an empty table") {
    std::string path = temp_path("varq_empty.tbl");
    write_text(path, "");
    TableData t = load_tbl(path, "t", Schema({{"id", ValueType::Int64}}));
    CHECK(t.row_count() == 0);
}

TEST_CASE("load_tbl reports arity mismatches with the line number") {
    Schema schema({{"a", ValueType::Int64}, {"b", ValueType::Text}, {"c", ValueType::Text}});
    std::string path = temp_path("varq_arity.tbl");
    write_text(path, "1|x|\n");
    try {
        load_tbl(path, "t", schema);
        FAIL("expected DataError");
    } catch (const DataError& e) {
        CHECK(std::string(e.what()).find("line 1") != std::string::npos);
        CHECK(std::string(e.what()).find("arity") != std::string::npos);
    }
}

TEST_CASE("load_tbl reports unparsable fields with line and column") {
    Schema schema({{"a", ValueType::Int64}});
    std::string path = temp_path("varq_field.tbl");
    write_text(path, "7|\nbogus|\n");
    try {
        load_tbl(path, "t", schema);
        FAIL("expected DataError");
    } catch (const DataError& e) {
        std::string msg = e.what();
        CHECK(msg.find("line 2") != std::string::npos);
        CHECK(msg.find("bogus") != std::string::npos);
    }
}

TEST_CASE("load_tbl requires the trailing pipe") {
    std::string path = temp_path("varq_trail.tbl");
    write_text(path, "1\n");
    try {
        load_tbl(path, "t", Schema({{"a", ValueType::Int64}}));
        FAIL("expected DataError");
    } catch (const DataError& e) {
        CHECK(std::string(e.what()).find("trailing") != std::string::npos);
    }
}

TEST_CASE("table lookups are case-insensitive") {
    Database db = generate({0.001, 1});
    CHECK(db.table("LINEITEM").row_count() == db.table("lineitem").row_count());
    CHECK(db.has("LineItem"));
    CHECK_THROWS_AS(db.table("no_such"), DataError);
}

TEST_CASE("write_tbl rejects delimiter collisions") {
    TableData t("t", Schema({{"s", ValueType::Text}}));
    t.append({Value("has|pipe")});
    CHECK_THROWS_AS(write_tbl(t, temp_path("varq_bad.tbl")), DataError);
}

TEST_CASE("write_tbl of an empty table produces an empty file") {
    TableData t("t", Schema({{"s", ValueType::Text}}));
    std::string path = temp_path("varq_zero.tbl");
    write_tbl(t, path);
    CHECK(std::filesystem::file_size(path) == 0);
}

TEST_CASE("generated databases are deterministic and scale-law sized") {
    GenConfig config{0.001, 7};
    Database a = generate(config);
    Database b = generate(config);
    CHECK(a == b);
    CHECK(a.table("lineitem").row_count() == 6000);  // round(6,000,000 * 0.001)
    CHECK(a.table("orders").row_count() == 1500);
    CHECK(a.table("customer").row_count() == 150);
    CHECK(a.table("part").row_count() == 200);
    CHECK(a.table("partsupp").row_count() == 800);
    CHECK(a.table("supplier").row_count() == 10);
    CHECK(a.table("nation").row_count() == 25);
    CHECK(a.table("region").row_count() == 5);

    Database c = generate({0.001, 8});
    CHECK_FALSE(a == c);  // seed changes content
}

TEST_CASE("scale law holds for awkward scale factors") {
    for (double sf : {0.0004, 0.00077, 0.0013}) {
        for (const std::string& name : {"lineitem", "orders", "customer", "part", "partsupp", "supplier"}) {
            double base = name == "lineitem" ? 6000000
                          : name == "orders" ? 1500000
                          : name == "customer" ? 150000
                          : name == "part" ? 200000
                          : name == "partsupp" ? 800000
                                               : 10000;
            CHECK(tpch_row_count(name, sf) == std::llround(base * sf));
        }
        Database db = generate({sf, 3});
        CHECK(db.table("lineitem").row_count() == static_cast<size_t>(tpch_row_count("lineitem", sf)));
    }
}

TEST_CASE("generator rejects configurations that empty a table") {
    CHECK_THROWS_AS(generate({0.0, 1}), ConfigError);
    CHECK_THROWS_AS(generate({1e-9, 1}), ConfigError);
    CHECK_THROWS_AS(generate({-1.0, 1}), ConfigError);
}

TEST_CASE("generated data has referential integrity and sane dates") {
    Database db = generate({0.001, 42});
    const TableData& lineitem = db.table("lineitem");
    const TableData& orders = db.table("orders");
    const TableData& partsupp = db.table("partsupp");

    std::unordered_set<int64_t> orderkeys, custkeys, partkeys, suppkeys;
    std::set<std::pair<int64_t, int64_t>> ps_pairs;
    for (size_t i = 0; i < orders.row_count(); ++i) orderkeys.insert(orders.row(i)[0].as_int());
    for (size_t i = 0; i < db.table("customer").row_count(); ++i)
        custkeys.insert(db.table("customer").row(i)[0].as_int());
    for (size_t i = 0; i < db.table("part").row_count(); ++i) partkeys.insert(db.table("part").row(i)[0].as_int());
    for (size_t i = 0; i < db.table("supplier").row_count(); ++i)
        suppkeys.insert(db.table("supplier").row(i)[0].as_int());
    for (size_t i = 0; i < partsupp.row_count(); ++i) {
        ps_pairs.emplace(partsupp.row(i)[0].as_int(), partsupp.row(i)[1].as_int());
        CHECK(partkeys.count(partsupp.row(i)[0].as_int()));
        CHECK(suppkeys.count(partsupp.row(i)[1].as_int()));
    }

    int32_t lo = days_from_civil(1992, 1, 1);
    int32_t hi = days_from_civil(1998, 12, 31);
    const Schema& ls = lineitem.schema();
    int c_ok = ls.find("l_orderkey"), c_pk = ls.find("l_partkey"), c_sk = ls.find("l_suppkey");
    int c_ship = ls.find("l_shipdate"), c_commit = ls.find("l_commitdate"), c_receipt = ls.find("l_receiptdate");
    for (size_t i = 0; i < lineitem.row_count(); ++i) {
        RowView r = lineitem.row(i);
        CHECK(orderkeys.count(r[c_ok].as_int()));
        CHECK(ps_pairs.count({r[c_pk].as_int(), r[c_sk].as_int()}));
        for (int c : {c_ship, c_commit, c_receipt}) {
            CHECK(r[c].as_date().days >= lo);
            CHECK(r[c].as_date().days <= hi);
        }
    }
    int o_cust = orders.schema().find("o_custkey"), o_date = orders.schema().find("o_orderdate");
    for (size_t i = 0; i < orders.row_count(); ++i) {
        CHECK(custkeys.count(orders.row(i)[o_cust].as_int()));
        CHECK(orders.row(i)[o_date].as_date().days >= lo);
        CHECK(orders.row(i)[o_date].as_date().days <= hi);
    }
}

TEST_CASE("returnflag and linestatus form exactly four combinations") {
    Database db = generate({0.01, 42});
    const TableData& lineitem = db.table("lineitem");
    int c_rf = lineitem.schema().find("l_returnflag");
    int c_st = lineitem.schema().find("l_linestatus");
    std::set<std::pair<std::string, std::string>> combos;
    for (size_t i = 0; i < lineitem.row_count(); ++i) {
        combos.emplace(lineitem.row(i)[c_rf].as_text(), lineitem.row(i)[c_st].as_text());
    }
    CHECK(combos.size() == 4);
    CHECK(combos.count({"A", "F"}));
    CHECK(combos.count({"R", "F"}));
    CHECK(combos.count({"N", "O"}));
    CHECK(combos.count({"N", "F"}));
}

TEST_CASE("tbl round-trip reproduces every generated table") {
    Database db = generate({0.0005, 11});
    for (const auto& [name, table] : db.tables()) {
        std::string path = temp_path("varq_rt_" + name + ".tbl");
        write_tbl(table, path);
        TableData back = load_tbl(path, name, table.schema());
        CHECK(back == table);
    }
}
