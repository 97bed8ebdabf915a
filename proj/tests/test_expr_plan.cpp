#include <doctest.h>

#include "varq/datagen.hpp"
#include "varq/plan.hpp"

using namespace varq;

namespace {

Schema two_ints() { return Schema({{"a", ValueType::Int64}, {"b", ValueType::Int64}}); }

Value eval_on(const ExprPtr& e, const Schema& schema, Record rec) {
    return eval(*resolve_expr(e, schema), rec);
}

}  // namespace

TEST_CASE("extract year") {
    Schema s({{"d", ValueType::Date}});
    CHECK(eval_on(extract_year(col("d")), s, {Value(parse_date("2024-03-05"))}) == Value(int64_t{2024}));
    CHECK(eval_on(extract_year(col("d")), s, {Value::null()}).is_null());
}

TEST_CASE("like wildcard semantics") {
    CHECK_FALSE(like_match("PROMO BURNISHED", "%green%"));
    CHECK(like_match("dim green tin", "%green%"));
    CHECK(like_match("green tin", "green%"));
    CHECK_FALSE(like_match("lime green", "green%"));
    CHECK(like_match("lime green", "%green"));
    CHECK(like_match("abc", "abc"));
    CHECK(like_match("abc", "a%c"));
    CHECK(like_match("ac", "a%c"));
    CHECK_FALSE(like_match("ab", "a%bc"));
    CHECK(like_match("anything", "%"));
    CHECK(like_match("", "%"));
    CHECK_FALSE(like_match("", "a%"));
    CHECK(like_match("a..b", "a%.%b"));
}

TEST_CASE("and/or short-circuit left to right") {
    auto counter = std::make_shared<std::atomic<int64_t>>(0);
    Schema s = two_ints();
    // AND(false, X): X never evaluated
    ExprPtr e = and_(lt(col("a"), lit(0)), counted(gt(col("b"), lit(0)), counter));
    CHECK(eval_on(e, s, {Value(1), Value(1)}) == Value(false));
    CHECK(counter->load() == 0);
    // AND(true, X): X evaluated once
    CHECK(eval_on(e, s, {Value(-1), Value(1)}) == Value(true));
    CHECK(counter->load() == 1);

    counter->store(0);
    ExprPtr o = or_(gt(col("a"), lit(0)), counted(gt(col("b"), lit(0)), counter));
    CHECK(eval_on(o, s, {Value(1), Value(0)}) == Value(true));
    CHECK(counter->load() == 0);
    CHECK(eval_on(o, s, {Value(0), Value(1)}) == Value(true));
    CHECK(counter->load() == 1);
}

TEST_CASE("arithmetic typing, promotion, and division by zero") {
    Schema s({{"i", ValueType::Int64}, {"f", ValueType::Float64}});
    CHECK(eval_on(div(col("i"), lit(2)), s, {Value(7), Value(0.0)}) == Value(int64_t{3}));  // int division
    CHECK(eval_on(add(col("i"), col("f")), s, {Value(1), Value(0.5)}) == Value(1.5));
    CHECK_THROWS_AS(eval_on(div(col("i"), lit(0)), s, {Value(7), Value(0.0)}), EvalError);
    CHECK_THROWS_AS(eval_on(div(col("f"), lit(0.0)), s, {Value(7), Value(1.0)}), EvalError);
    // Null operands propagate
    CHECK(eval_on(add(col("i"), lit(1)), s, {Value::null(), Value(0.0)}).is_null());
    // comparisons with Null evaluate to Null
    CHECK(eval_on(lt(col("i"), lit(1)), s, {Value::null(), Value(0.0)}).is_null());
}

TEST_CASE("mod as arithmetic composition") {
    Schema s = two_ints();
    CHECK(eval_on(mod(col("a"), col("b")), s, {Value(7), Value(3)}) == Value(int64_t{1}));
    CHECK(eval_on(mod(col("a"), col("b")), s, {Value(9), Value(3)}) == Value(int64_t{0}));
    CHECK(eval_on(mod(col("a"), col("b")), s, {Value(3), Value(7)}) == Value(int64_t{3}));
}

TEST_CASE("between evaluates its operand once") {
    auto counter = std::make_shared<std::atomic<int64_t>>(0);
    Schema s = two_ints();
    ExprPtr e = between(counted(col("a"), counter), lit(1), lit(5));
    CHECK(eval_on(e, s, {Value(3), Value(0)}) == Value(true));
    CHECK(counter->load() == 1);
    CHECK(eval_on(e, s, {Value(9), Value(0)}) == Value(false));
    // boundaries are inclusive
    CHECK(eval_on(e, s, {Value(1), Value(0)}) == Value(true));
    CHECK(eval_on(e, s, {Value(5), Value(0)}) == Value(true));
}

TEST_CASE("in list with promotion") {
    Schema s({{"f", ValueType::Float64}});
    CHECK(eval_on(in_list(col("f"), {Value(1), Value(2)}), s, {Value(2.0)}) == Value(true));
    CHECK(eval_on(in_list(col("f"), {Value(1), Value(2)}), s, {Value(2.5)}) == Value(false));
}

TEST_CASE("compare_values promotes numerics and sorts nulls first") {
    CHECK(compare_values(Value(1), Value(1.5)) < 0);
    CHECK(compare_values(Value(2.0), Value(int64_t{2})) == 0);
    CHECK(compare_values(Value::null(), Value(int64_t{0})) < 0);
    CHECK(compare_values(Value("a"), Value("b")) < 0);
}

TEST_CASE("validate resolves a scan to the table schema") {
    PlanPtr p = validate(Plan::scan("lineitem").node(), tpch_catalog());
    CHECK(output_schema(p) == tpch_schema("lineitem"));
}

TEST_CASE("validate rejects non-boolean filter predicates") {
    auto plan = Plan::scan("lineitem").filter(add(col("l_quantity"), col("l_tax"))).node();
    CHECK_THROWS_AS(validate(plan, tpch_catalog()), ValidateError);
}

TEST_CASE("validate rejects unknown tables, columns, and key arity mismatches") {
    CHECK_THROWS_AS(validate(Plan::scan("no_such_table").node(), tpch_catalog()), ValidateError);
    CHECK_THROWS_AS(validate(Plan::scan("lineitem").filter(gt(col("nope"), lit(1))).node(), tpch_catalog()),
                    ValidateError);
    auto bad_join = Plan::join(JoinKind::Inner, Plan::scan("customer"), Plan::scan("orders"),
                               {col("c_custkey")}, {col("o_custkey"), col("o_orderkey")});
    CHECK_THROWS_AS(validate(bad_join.node(), tpch_catalog()), ValidateError);
}

TEST_CASE("running example plan validates to (name, sum) schema") {
    // filtered top-100 orders joined to customers, grouped sum of a product
    Plan cte = Plan::scan("orders")
                   .filter(ge(extract_year(col("o_orderdate")), lit(1997)))
                   .filter(eq(col("o_orderpriority"), lit("1-URGENT")))
                   .sort({{col("o_totalprice"), true}})
                   .limit(100)
                   .project({{col("o_custkey"), "o_custkey"},
                             {mul(col("o_totalprice"), lit(0.9)), "amount"}});
    Plan joined = Plan::join(JoinKind::Inner, Plan::scan("customer"), cte, {col("c_custkey")},
                             {col("o_custkey")});
    Plan grouped = joined.group_by({{col("c_name"), "name"}},
                                   {{AggFunc::Sum, col("amount"), "sum"}});
    PlanPtr p = validate(grouped.node(), tpch_catalog());
    REQUIRE(output_schema(p).size() == 2);
    CHECK(output_schema(p).at(0).name == "name");
    CHECK(output_schema(p).at(0).type == ValueType::Text);
    CHECK(output_schema(p).at(1).name == "sum");
    CHECK(output_schema(p).at(1).type == ValueType::Float64);
}

TEST_CASE("validate is idempotent") {
    auto plan = Plan::scan("lineitem").filter(lt(col("l_quantity"), lit(24))).node();
    PlanPtr once = validate(plan, tpch_catalog());
    PlanPtr twice = validate(once, tpch_catalog());
    CHECK(print_plan(once) == print_plan(twice));
    CHECK(output_schema(once) == output_schema(twice));
}

TEST_CASE("group aggregate schema is keys then aggregates") {
    auto plan = Plan::scan("orders")
                    .group_by({{col("o_custkey"), "k"}},
                              {{AggFunc::Count, nullptr, "n"},
                               {AggFunc::Sum, col("o_totalprice"), "total"},
                               {AggFunc::Min, col("o_orderdate"), "first_day"}})
                    .node();
    Schema s = output_schema(validate(plan, tpch_catalog()));
    REQUIRE(s.size() == 4);
    CHECK(s.at(0).name == "k");
    CHECK(s.at(1).type == ValueType::Int64);    // count
    CHECK(s.at(2).type == ValueType::Float64);  // sum of float
    CHECK(s.at(3).type == ValueType::Date);     // min of date
}

TEST_CASE("aggregate arguments are type-checked") {
    auto sum_text =
        Plan::scan("customer").group_by({}, {{AggFunc::Sum, col("c_name"), "s"}}).node();
    CHECK_THROWS_AS(validate(sum_text, tpch_catalog()), ValidateError);
    auto count_needs_no_arg = Plan::scan("customer").group_by({}, {{AggFunc::Min, nullptr, "m"}}).node();
    CHECK_THROWS_AS(validate(count_needs_no_arg, tpch_catalog()), ValidateError);
}

TEST_CASE("ordering contract tracks sort through limit and project") {
    Plan p = Plan::scan("orders")
                 .sort({{col("o_totalprice"), true}})
                 .limit(10)
                 .project({{col("o_orderkey"), "k"}, {col("o_totalprice"), "price"}});
    Ordering o = ordering_of(validate(p.node(), tpch_catalog()));
    REQUIRE(o.ordered());
    CHECK(o.truncated);
    REQUIRE(o.keys.size() == 1);
    CHECK(o.keys[0].ordinal == 1);  // remapped through the projection
    CHECK(o.keys[0].desc);

    // projecting the key away loses the checkable contract
    Plan gone = Plan::scan("orders").sort({{col("o_totalprice"), true}}).project({{col("o_orderkey"), "k"}});
    CHECK_FALSE(ordering_of(validate(gone.node(), tpch_catalog())).ordered());
}

TEST_CASE("plan printer emits one node per line, indented") {
    Plan p = Plan::scan("lineitem").filter(lt(col("l_quantity"), lit(24))).limit(5);
    std::string text = print_plan(validate(p.node(), tpch_catalog()));
    CHECK(text.find("limit 5\n") != std::string::npos);
    CHECK(text.find("  filter l_quantity < 24\n") != std::string::npos);
    CHECK(text.find("    scan lineitem\n") != std::string::npos);
}
