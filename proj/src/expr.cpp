#include "varq/expr.hpp"

namespace varq {

namespace {

bool is_numeric(ValueType t) { return t == ValueType::Int64 || t == ValueType::Float64; }

ValueType require_resolved(const Expr& e) {
    if (e.out_type == ValueType::Null) throw ValidateError("expression used before resolution");
    return e.out_type;
}

Value arith_eval(const Expr& e, RowView rec) {
    Value l = eval(*e.args[0], rec);
    Value r = eval(*e.args[1], rec);
    if (l.is_null() || r.is_null()) return Value::null();
    if (l.type() == ValueType::Int64 && r.type() == ValueType::Int64) {
        int64_t a = l.as_int(), b = r.as_int();
        switch (e.arith) {
            case ArithOp::Add: return Value(a + b);
            case ArithOp::Sub: return Value(a - b);
            case ArithOp::Mul: return Value(a * b);
            case ArithOp::Div:
                if (b == 0) throw EvalError("division by zero");
                return Value(a / b);
        }
    }
    double a = l.as_number(), b = r.as_number();
    switch (e.arith) {
        case ArithOp::Add: return Value(a + b);
        case ArithOp::Sub: return Value(a - b);
        case ArithOp::Mul: return Value(a * b);
        case ArithOp::Div:
            if (b == 0.0) throw EvalError("division by zero");
            return Value(a / b);
    }
    return Value::null();
}

}  // namespace

int compare_values(const Value& a, const Value& b) {
    if (a.is_null() || b.is_null()) {
        if (a.is_null() && b.is_null()) return 0;
        return a.is_null() ? -1 : 1;
    }
    if (a.type() != b.type()) {
        // only numeric cross-type comparisons are validated in
        double x = a.as_number(), y = b.as_number();
        return x < y ? -1 : (x > y ? 1 : 0);
    }
    switch (a.type()) {
        case ValueType::Bool: return a.as_bool() == b.as_bool() ? 0 : (a.as_bool() ? 1 : -1);
        case ValueType::Int64: {
            int64_t x = a.as_int(), y = b.as_int();
            return x < y ? -1 : (x > y ? 1 : 0);
        }
        case ValueType::Float64: {
            double x = a.as_double(), y = b.as_double();
            return x < y ? -1 : (x > y ? 1 : 0);
        }
        case ValueType::Text: return a.as_text().compare(b.as_text()) < 0 ? -1 : (a.as_text() == b.as_text() ? 0 : 1);
        case ValueType::Date: {
            int32_t x = a.as_date().days, y = b.as_date().days;
            return x < y ? -1 : (x > y ? 1 : 0);
        }
        default: return 0;
    }
}

bool like_match(std::string_view text, std::string_view pattern) {
    std::vector<std::string_view> parts;
    size_t i = 0;
    while (true) {
        size_t j = pattern.find('%', i);
        if (j == std::string_view::npos) {
            parts.push_back(pattern.substr(i));
            break;
        }
        parts.push_back(pattern.substr(i, j - i));
        i = j + 1;
    }
    if (parts.size() == 1) return text == parts[0];

    size_t pos = 0;
    if (!parts.front().empty()) {
        if (text.substr(0, parts.front().size()) != parts.front()) return false;
        pos = parts.front().size();
    }
    for (size_t k = 1; k + 1 < parts.size(); ++k) {
        if (parts[k].empty()) continue;
        size_t f = text.find(parts[k], pos);
        if (f == std::string_view::npos) return false;
        pos = f + parts[k].size();
    }
    if (!parts.back().empty()) {
        if (text.size() < pos + parts.back().size()) return false;
        if (text.substr(text.size() - parts.back().size()) != parts.back()) return false;
    }
    return true;
}

Value eval(const Expr& e, RowView rec) {
    switch (e.kind) {
        case ExprKind::ColumnRef:
            return rec[static_cast<size_t>(e.ordinal)];
        case ExprKind::Literal:
            return e.literal;
        case ExprKind::Arith:
            return arith_eval(e, rec);
        case ExprKind::Compare: {
            Value l = eval(*e.args[0], rec);
            Value r = eval(*e.args[1], rec);
            if (l.is_null() || r.is_null()) return Value::null();
            int c = compare_values(l, r);
            switch (e.cmp) {
                case CompareOp::Lt: return Value(c < 0);
                case CompareOp::Le: return Value(c <= 0);
                case CompareOp::Eq: return Value(c == 0);
                case CompareOp::Ge: return Value(c >= 0);
                case CompareOp::Gt: return Value(c > 0);
                case CompareOp::Ne: return Value(c != 0);
            }
            return Value::null();
        }
        case ExprKind::BoolOp: {
            if (e.boolop == LogicOp::Not) {
                Value v = eval(*e.args[0], rec);
                return v.is_null() ? Value::null() : Value(!v.as_bool());
            }
            Value l = eval(*e.args[0], rec);
            if (e.boolop == LogicOp::And) {
                if (!l.is_null() && !l.as_bool()) return Value(false);
                Value r = eval(*e.args[1], rec);
                if (l.is_null() || r.is_null()) return Value::null();
                return Value(r.as_bool());
            }
            if (!l.is_null() && l.as_bool()) return Value(true);
            Value r = eval(*e.args[1], rec);
            if (l.is_null() || r.is_null()) return Value::null();
            return Value(r.as_bool());
        }
        case ExprKind::ExtractYear: {
            Value v = eval(*e.args[0], rec);
            if (v.is_null()) return Value::null();
            return Value(static_cast<int64_t>(year_of(v.as_date())));
        }
        case ExprKind::Like: {
            Value v = eval(*e.args[0], rec);
            if (v.is_null()) return Value::null();
            return Value(like_match(v.as_text(), e.pattern));
        }
        case ExprKind::Between: {
            Value v = eval(*e.args[0], rec);
            Value lo = eval(*e.args[1], rec);
            Value hi = eval(*e.args[2], rec);
            if (v.is_null() || lo.is_null() || hi.is_null()) return Value::null();
            return Value(compare_values(lo, v) <= 0 && compare_values(v, hi) <= 0);
        }
        case ExprKind::InList: {
            Value v = eval(*e.args[0], rec);
            if (v.is_null()) return Value::null();
            for (const Value& item : e.list) {
                if (compare_values(v, item) == 0) return Value(true);
            }
            return Value(false);
        }
        case ExprKind::CounterProbe:
            e.counter->fetch_add(1, std::memory_order_relaxed);
            return eval(*e.args[0], rec);
    }
    return Value::null();
}

ExprPtr resolve_expr(const ExprPtr& e, const Schema& schema) {
    auto out = std::make_shared<Expr>(*e);
    for (auto& a : out->args) a = resolve_expr(a, schema);
    switch (e->kind) {
        case ExprKind::ColumnRef: {
            int ord = schema.find(e->name);
            if (ord < 0) throw ValidateError("unknown column: " + e->name);
            out->ordinal = ord;
            out->out_type = schema.at(ord).type;
            break;
        }
        case ExprKind::Literal:
            out->out_type = e->literal.type();
            break;
        case ExprKind::Arith: {
            ValueType l = require_resolved(*out->args[0]);
            ValueType r = require_resolved(*out->args[1]);
            if (!is_numeric(l) || !is_numeric(r)) {
                throw ValidateError("arithmetic requires numeric operands, got " + std::string(type_name(l)) +
                                    " and " + type_name(r));
            }
            out->out_type = (l == ValueType::Int64 && r == ValueType::Int64) ? ValueType::Int64 : ValueType::Float64;
            break;
        }
        case ExprKind::Compare: {
            ValueType l = require_resolved(*out->args[0]);
            ValueType r = require_resolved(*out->args[1]);
            bool ok = l == r || (is_numeric(l) && is_numeric(r));
            if (!ok) {
                throw ValidateError("cannot compare " + std::string(type_name(l)) + " with " + type_name(r));
            }
            out->out_type = ValueType::Bool;
            break;
        }
        case ExprKind::BoolOp: {
            for (const auto& a : out->args) {
                if (require_resolved(*a) != ValueType::Bool) {
                    throw ValidateError("boolean operator over non-bool operand");
                }
            }
            out->out_type = ValueType::Bool;
            break;
        }
        case ExprKind::ExtractYear:
            if (require_resolved(*out->args[0]) != ValueType::Date) {
                throw ValidateError("EXTRACT(YEAR ...) requires a date operand");
            }
            out->out_type = ValueType::Int64;
            break;
        case ExprKind::Like:
            if (require_resolved(*out->args[0]) != ValueType::Text) {
                throw ValidateError("LIKE requires a text operand");
            }
            out->out_type = ValueType::Bool;
            break;
        case ExprKind::Between: {
            ValueType v = require_resolved(*out->args[0]);
            for (size_t i = 1; i < 3; ++i) {
                ValueType b = require_resolved(*out->args[i]);
                if (!(v == b || (is_numeric(v) && is_numeric(b)))) {
                    throw ValidateError("BETWEEN bounds incompatible with operand type");
                }
            }
            out->out_type = ValueType::Bool;
            break;
        }
        case ExprKind::InList: {
            ValueType v = require_resolved(*out->args[0]);
            for (const Value& item : e->list) {
                if (!(item.type() == v || (is_numeric(item.type()) && is_numeric(v)))) {
                    throw ValidateError("IN list item type incompatible with operand");
                }
            }
            out->out_type = ValueType::Bool;
            break;
        }
        case ExprKind::CounterProbe:
            out->out_type = require_resolved(*out->args[0]);
            break;
    }
    return out;
}

namespace {
const char* arith_sym(ArithOp op) {
    switch (op) {
        case ArithOp::Add: return "+";
        case ArithOp::Sub: return "-";
        case ArithOp::Mul: return "*";
        case ArithOp::Div: return "/";
    }
    return "?";
}
const char* cmp_sym(CompareOp op) {
    switch (op) {
        case CompareOp::Lt: return "<";
        case CompareOp::Le: return "<=";
        case CompareOp::Eq: return "=";
        case CompareOp::Ge: return ">=";
        case CompareOp::Gt: return ">";
        case CompareOp::Ne: return "<>";
    }
    return "?";
}
}  // namespace

namespace {
std::string literal_to_string(const Value& v) {
    switch (v.type()) {
        case ValueType::Text: return "'" + v.to_string() + "'";
        case ValueType::Date: return "DATE '" + v.to_string() + "'";
        default: return v.to_string();
    }
}
}  // namespace

std::string expr_to_string(const Expr& e) {
    switch (e.kind) {
        case ExprKind::ColumnRef: return e.name;
        case ExprKind::Literal:
            return literal_to_string(e.literal);
        case ExprKind::Arith:
            return "(" + expr_to_string(*e.args[0]) + " " + arith_sym(e.arith) + " " + expr_to_string(*e.args[1]) + ")";
        case ExprKind::Compare:
            return expr_to_string(*e.args[0]) + " " + cmp_sym(e.cmp) + " " + expr_to_string(*e.args[1]);
        case ExprKind::BoolOp:
            if (e.boolop == LogicOp::Not) return "NOT (" + expr_to_string(*e.args[0]) + ")";
            return "(" + expr_to_string(*e.args[0]) + (e.boolop == LogicOp::And ? " AND " : " OR ") +
                   expr_to_string(*e.args[1]) + ")";
        case ExprKind::ExtractYear: return "EXTRACT(YEAR FROM " + expr_to_string(*e.args[0]) + ")";
        case ExprKind::Like: return expr_to_string(*e.args[0]) + " LIKE '" + e.pattern + "'";
        case ExprKind::Between:
            return expr_to_string(*e.args[0]) + " BETWEEN " + expr_to_string(*e.args[1]) + " AND " +
                   expr_to_string(*e.args[2]);
        case ExprKind::InList: {
            std::string out = expr_to_string(*e.args[0]) + " IN (";
            for (size_t i = 0; i < e.list.size(); ++i) {
                if (i) out += ", ";
                out += literal_to_string(e.list[i]);
            }
            return out + ")";
        }
        case ExprKind::CounterProbe: return "probe(" + expr_to_string(*e.args[0]) + ")";
    }
    return "?";
}

ExprPtr col(std::string name) {
    auto e = std::make_shared<Expr>();
    e->kind = ExprKind::ColumnRef;
    e->name = std::move(name);
    return e;
}

ExprPtr lit(Value v) {
    auto e = std::make_shared<Expr>();
    e->kind = ExprKind::Literal;
    e->literal = std::move(v);
    e->out_type = e->literal.type();
    return e;
}

ExprPtr arith(ArithOp op, ExprPtr l, ExprPtr r) {
    auto e = std::make_shared<Expr>();
    e->kind = ExprKind::Arith;
    e->arith = op;
    e->args = {std::move(l), std::move(r)};
    return e;
}

ExprPtr cmp(CompareOp op, ExprPtr l, ExprPtr r) {
    auto e = std::make_shared<Expr>();
    e->kind = ExprKind::Compare;
    e->cmp = op;
    e->args = {std::move(l), std::move(r)};
    return e;
}

ExprPtr and_(ExprPtr l, ExprPtr r) {
    auto e = std::make_shared<Expr>();
    e->kind = ExprKind::BoolOp;
    e->boolop = LogicOp::And;
    e->args = {std::move(l), std::move(r)};
    return e;
}

ExprPtr or_(ExprPtr l, ExprPtr r) {
    auto e = std::make_shared<Expr>();
    e->kind = ExprKind::BoolOp;
    e->boolop = LogicOp::Or;
    e->args = {std::move(l), std::move(r)};
    return e;
}

ExprPtr not_(ExprPtr x) {
    auto e = std::make_shared<Expr>();
    e->kind = ExprKind::BoolOp;
    e->boolop = LogicOp::Not;
    e->args = {std::move(x)};
    return e;
}

ExprPtr extract_year(ExprPtr x) {
    auto e = std::make_shared<Expr>();
    e->kind = ExprKind::ExtractYear;
    e->args = {std::move(x)};
    return e;
}

ExprPtr like(ExprPtr x, std::string pattern) {
    auto e = std::make_shared<Expr>();
    e->kind = ExprKind::Like;
    e->pattern = std::move(pattern);
    e->args = {std::move(x)};
    return e;
}

ExprPtr between(ExprPtr x, ExprPtr lo, ExprPtr hi) {
    auto e = std::make_shared<Expr>();
    e->kind = ExprKind::Between;
    e->args = {std::move(x), std::move(lo), std::move(hi)};
    return e;
}

ExprPtr in_list(ExprPtr x, std::vector<Value> values) {
    auto e = std::make_shared<Expr>();
    e->kind = ExprKind::InList;
    e->list = std::move(values);
    e->args = {std::move(x)};
    return e;
}

ExprPtr mod(ExprPtr a, ExprPtr b) {
    return sub(a, mul(div(a, b), b));
}

ExprPtr counted(ExprPtr x, std::shared_ptr<std::atomic<int64_t>> counter) {
    auto e = std::make_shared<Expr>();
    e->kind = ExprKind::CounterProbe;
    e->counter = std::move(counter);
    e->args = {std::move(x)};
    return e;
}

}  // namespace varq
