#pragma once

#include <atomic>
#include <memory>

#include "varq/errors.hpp"
#include "varq/value.hpp"

namespace varq {

enum class ExprKind : uint8_t {
    ColumnRef,
    Literal,
    Arith,
    Compare,
    BoolOp,
    ExtractYear,
    Like,
    Between,
    InList,
    CounterProbe,  // test instrumentation: counts evaluations of its child
};

enum class ArithOp : uint8_t { Add, Sub, Mul, Div };
enum class CompareOp : uint8_t { Lt, Le, Eq, Ge, Gt, Ne };
enum class LogicOp : uint8_t { And, Or, Not };

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

/// Immutable expression node. Column ordinals are resolved by plan validation,
/// which rebuilds trees rather than mutating shared nodes.
struct Expr {
    ExprKind kind;

    std::string name;   // ColumnRef: column name as written (possibly alias-qualified)
    int ordinal = -1;   // ColumnRef: position in the input record, -1 = unresolved
    Value literal;      // Literal
    std::vector<ExprPtr> args;
    ArithOp arith{};
    CompareOp cmp{};
    LogicOp boolop{};
    std::string pattern;       // Like
    std::vector<Value> list;   // InList
    std::shared_ptr<std::atomic<int64_t>> counter;  // CounterProbe
    ValueType out_type = ValueType::Null;           // set when resolved

    bool resolved() const { return out_type != ValueType::Null || kind == ExprKind::Literal; }
};

/// Strict evaluation over one record. AND/OR short-circuit left to right;
/// Null operands propagate to Null except where short-circuiting decides first.
Value eval(const Expr& e, RowView rec);

/// Three-way comparison with Int64/Float64 promotion; Null sorts before everything.
int compare_values(const Value& a, const Value& b);

bool like_match(std::string_view text, std::string_view pattern);

/// Resolves column ordinals and deduces output types against a schema.
/// Returns a new tree; throws ValidateError on unknown names or type errors.
ExprPtr resolve_expr(const ExprPtr& e, const Schema& schema);

std::string expr_to_string(const Expr& e);

// --- construction helpers ---
ExprPtr col(std::string name);
ExprPtr lit(Value v);
ExprPtr arith(ArithOp op, ExprPtr l, ExprPtr r);
ExprPtr cmp(CompareOp op, ExprPtr l, ExprPtr r);
ExprPtr and_(ExprPtr l, ExprPtr r);
ExprPtr or_(ExprPtr l, ExprPtr r);
ExprPtr not_(ExprPtr e);
ExprPtr extract_year(ExprPtr e);
ExprPtr like(ExprPtr e, std::string pattern);
ExprPtr between(ExprPtr e, ExprPtr lo, ExprPtr hi);
ExprPtr in_list(ExprPtr e, std::vector<Value> values);
/// a - (a / b) * b over Int64; how MOD is spelled in this plan algebra.
ExprPtr mod(ExprPtr a, ExprPtr b);
/// Wraps e so every evaluation bumps the counter (tests only).
ExprPtr counted(ExprPtr e, std::shared_ptr<std::atomic<int64_t>> counter);

inline ExprPtr add(ExprPtr l, ExprPtr r) { return arith(ArithOp::Add, std::move(l), std::move(r)); }
inline ExprPtr sub(ExprPtr l, ExprPtr r) { return arith(ArithOp::Sub, std::move(l), std::move(r)); }
inline ExprPtr mul(ExprPtr l, ExprPtr r) { return arith(ArithOp::Mul, std::move(l), std::move(r)); }
inline ExprPtr div(ExprPtr l, ExprPtr r) { return arith(ArithOp::Div, std::move(l), std::move(r)); }
inline ExprPtr lt(ExprPtr l, ExprPtr r) { return cmp(CompareOp::Lt, std::move(l), std::move(r)); }
inline ExprPtr le(ExprPtr l, ExprPtr r) { return cmp(CompareOp::Le, std::move(l), std::move(r)); }
inline ExprPtr eq(ExprPtr l, ExprPtr r) { return cmp(CompareOp::Eq, std::move(l), std::move(r)); }
inline ExprPtr ge(ExprPtr l, ExprPtr r) { return cmp(CompareOp::Ge, std::move(l), std::move(r)); }
inline ExprPtr gt(ExprPtr l, ExprPtr r) { return cmp(CompareOp::Gt, std::move(l), std::move(r)); }
inline ExprPtr ne(ExprPtr l, ExprPtr r) { return cmp(CompareOp::Ne, std::move(l), std::move(r)); }

}  // namespace varq
