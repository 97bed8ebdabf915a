#include "varq/sql.hpp"

#include <cctype>
#include <charconv>
#include <optional>
#include <sstream>
#include <unordered_set>

namespace varq {

std::string ParseDiag::to_string() const {
    std::string out = (category == Unsupported ? "unsupported" : "syntax error");
    out += " at " + std::to_string(line) + ":" + std::to_string(column) + ": " + message;
    return out;
}

namespace {

// ---------------------------------------------------------------------------
// lexer
// ---------------------------------------------------------------------------

enum class Tok : uint8_t { Ident, Number, String, Op, End };

struct Token {
    Tok kind = Tok::End;
    std::string text;  // idents lower-cased; strings unquoted; floats keep an 'f' marker
    size_t line = 1;
    size_t col = 1;
};

std::vector<Token> lex(const std::string& src) {
    std::vector<Token> tokens;
    size_t pos = 0, line = 1, col = 1;
    auto advance = [&](size_t n = 1) {
        for (size_t i = 0; i < n && pos < src.size(); ++i) {
            if (src[pos] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
            ++pos;
        }
    };
    while (pos < src.size()) {
        char c = src[pos];
        if (std::isspace(static_cast<unsigned char>(c))) {
            advance();
            continue;
        }
        if (c == '-' && pos + 1 < src.size() && src[pos + 1] == '-') {
            while (pos < src.size() && src[pos] != '\n') advance();
            continue;
        }
        Token t;
        t.line = line;
        t.col = col;
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            size_t start = pos;
            while (pos < src.size() && (std::isalnum(static_cast<unsigned char>(src[pos])) || src[pos] == '_')) {
                advance();
            }
            t.kind = Tok::Ident;
            t.text = to_lower(std::string_view(src).substr(start, pos - start));
        } else if (std::isdigit(static_cast<unsigned char>(c))) {
            size_t start = pos;
            bool is_float = false;
            while (pos < src.size()) {
                char d = src[pos];
                if (std::isdigit(static_cast<unsigned char>(d))) {
                    advance();
                } else if (d == '.' && pos + 1 < src.size() &&
                           std::isdigit(static_cast<unsigned char>(src[pos + 1]))) {
                    is_float = true;
                    advance();
                } else if ((d == 'e' || d == 'E') && pos + 1 < src.size() &&
                           (std::isdigit(static_cast<unsigned char>(src[pos + 1])) || src[pos + 1] == '-' ||
                            src[pos + 1] == '+')) {
                    is_float = true;
                    advance(2);
                } else {
                    break;
                }
            }
            t.kind = Tok::Number;
            t.text = src.substr(start, pos - start);
            if (is_float) t.text += 'f';
        } else if (c == '\'' || c == '"') {
            char quote = c;
            advance();
            std::string text;
            while (pos < src.size() && src[pos] != quote) {
                text += src[pos];
                advance();
            }
            if (pos >= src.size()) {
                throw ParseError({t.line, t.col, "unterminated string literal", ParseDiag::Syntax});
            }
            advance();
            t.kind = Tok::String;
            t.text = std::move(text);
        } else if (c == ';') {
            advance();
            continue;
        } else {
            std::string op(1, c);
            if (pos + 1 < src.size()) {
                std::string pair = src.substr(pos, 2);
                if (pair == "<=" || pair == ">=" || pair == "<>" || pair == "!=") op = pair;
            }
            if (std::string("(),.*+-/<>=").find(c) == std::string::npos && op.size() == 1) {
                throw ParseError({line, col, std::string("unexpected character '") + c + "'", ParseDiag::Syntax});
            }
            advance(op.size());
            t.kind = Tok::Op;
            t.text = op;
        }
        tokens.push_back(std::move(t));
    }
    tokens.push_back(Token{});
    return tokens;
}

// ---------------------------------------------------------------------------
// statement AST
// ---------------------------------------------------------------------------

struct SelectStmt;
using SelectPtr = std::shared_ptr<SelectStmt>;

struct TableRef {
    std::string name;
    std::string alias;
    bool left_join = false;
    bool inner_join = false;
    ExprPtr on;
    size_t line = 0, col = 0;
};

struct OrderItem {
    ExprPtr expr;
    bool desc = false;
};

struct InSubquery {
    ExprPtr needle;
    SelectPtr select;
    bool negated = false;
    size_t line = 0, col = 0;
};

struct SelectStmt {
    bool distinct = false;
    bool select_star = false;
    std::vector<NamedExpr> items;
    std::vector<AggSpec> agg_specs;  // aggregates collected from SELECT and HAVING
    std::vector<TableRef> from;
    ExprPtr where;                       // may contain $insubN placeholders
    std::vector<InSubquery> subqueries;  // indexed by placeholder number
    std::vector<ExprPtr> group_by;
    ExprPtr having;
    std::vector<OrderItem> order_by;
    std::optional<int64_t> limit;
    std::optional<int64_t> offset;
    std::vector<std::pair<std::string, SelectPtr>> ctes;
};

constexpr const char* kSubPrefix = "$insub";
constexpr const char* kAggPrefix = "$agg";

// ---------------------------------------------------------------------------
// parser
// ---------------------------------------------------------------------------

struct Parser {
    std::vector<Token> tokens;
    size_t at = 0;

    explicit Parser(const std::string& sql) : tokens(lex(sql)) {}

    const Token& peek(size_t ahead = 0) const { return tokens[std::min(at + ahead, tokens.size() - 1)]; }
    Token next() { return tokens[std::min(at++, tokens.size() - 1)]; }

    [[noreturn]] void fail(const std::string& msg, ParseDiag::Category cat = ParseDiag::Syntax) const {
        const Token& t = peek();
        throw ParseError({t.line, t.col, msg, cat});
    }

    bool is_kw(const char* kw, size_t ahead = 0) const {
        const Token& t = peek(ahead);
        return t.kind == Tok::Ident && t.text == kw;
    }
    bool eat_kw(const char* kw) {
        if (is_kw(kw)) {
            ++at;
            return true;
        }
        return false;
    }
    void expect_kw(const char* kw) {
        if (!eat_kw(kw)) fail(std::string("expected ") + kw + ", got '" + peek().text + "'");
    }
    bool is_op(const char* op, size_t ahead = 0) const {
        const Token& t = peek(ahead);
        return t.kind == Tok::Op && t.text == op;
    }
    bool eat_op(const char* op) {
        if (is_op(op)) {
            ++at;
            return true;
        }
        return false;
    }
    void expect_op(const char* op) {
        if (!eat_op(op)) fail(std::string("expected '") + op + "', got '" + peek().text + "'");
    }
    std::string expect_ident(const char* what) {
        if (peek().kind != Tok::Ident) fail(std::string("expected ") + what);
        return next().text;
    }

    static bool is_keyword_text(const std::string& t) {
        static const std::unordered_set<std::string> kw = {
            "select", "from",   "where",     "group",  "by",     "having", "order", "limit",
            "offset", "and",    "or",        "not",    "in",     "like",   "between", "as",
            "on",     "join",   "inner",     "left",   "right",  "full",   "outer", "distinct",
            "with",   "asc",    "desc",      "union",  "intersect", "except", "exists", "case",
            "over",   "window"};
        return kw.count(t) > 0;
    }
    bool ident_is_keyword(size_t ahead = 0) const {
        return peek(ahead).kind == Tok::Ident && is_keyword_text(peek(ahead).text);
    }

    // --- expression context ---
    struct Ctx {
        std::vector<AggSpec>* aggs = nullptr;       // aggregates allowed iff set
        SelectStmt* subquery_host = nullptr;        // IN (SELECT ...) allowed iff set
    };

    ExprPtr parse_expr(Ctx& ctx) { return parse_or(ctx); }

    ExprPtr parse_or(Ctx& ctx) {
        ExprPtr e = parse_and(ctx);
        while (eat_kw("or")) e = or_(e, parse_and(ctx));
        return e;
    }
    ExprPtr parse_and(Ctx& ctx) {
        ExprPtr e = parse_not(ctx);
        while (eat_kw("and")) e = and_(e, parse_not(ctx));
        return e;
    }
    ExprPtr parse_not(Ctx& ctx) {
        if (eat_kw("not")) return not_(parse_not(ctx));
        return parse_predicate(ctx);
    }

    ExprPtr parse_predicate(Ctx& ctx) {
        ExprPtr e = parse_additive(ctx);
        bool negated = eat_kw("not");
        if (eat_kw("between")) {
            ExprPtr lo = parse_additive(ctx);
            expect_kw("and");
            ExprPtr hi = parse_additive(ctx);
            ExprPtr b = between(e, lo, hi);
            return negated ? not_(b) : b;
        }
        if (eat_kw("like")) {
            if (peek().kind != Tok::String) fail("LIKE requires a string pattern");
            ExprPtr l = like(e, next().text);
            return negated ? not_(l) : l;
        }
        if (eat_kw("in")) {
            expect_op("(");
            if (is_kw("select") || is_kw("with")) {
                if (!ctx.subquery_host) fail("IN (SELECT ...) is only supported in WHERE", ParseDiag::Unsupported);
                InSubquery sub;
                sub.needle = e;
                sub.negated = negated;
                sub.line = peek().line;
                sub.col = peek().col;
                sub.select = parse_select();
                expect_op(")");
                std::string placeholder = kSubPrefix + std::to_string(ctx.subquery_host->subqueries.size());
                ctx.subquery_host->subqueries.push_back(std::move(sub));
                return col(placeholder);
            }
            std::vector<Value> values;
            while (true) {
                values.push_back(parse_literal_value());
                if (!eat_op(",")) break;
            }
            expect_op(")");
            ExprPtr i = in_list(e, std::move(values));
            return negated ? not_(i) : i;
        }
        if (negated) fail("expected BETWEEN, LIKE, or IN after NOT");
        static const std::pair<const char*, CompareOp> ops[] = {
            {"<=", CompareOp::Le}, {">=", CompareOp::Ge}, {"<>", CompareOp::Ne},
            {"!=", CompareOp::Ne}, {"<", CompareOp::Lt},  {">", CompareOp::Gt},
            {"=", CompareOp::Eq},
        };
        for (const auto& [sym, op] : ops) {
            if (eat_op(sym)) return cmp(op, e, parse_additive(ctx));
        }
        return e;
    }

    Value parse_literal_value() {
        if (peek().kind == Tok::String) return Value(next().text);
        if (is_kw("date")) {
            ++at;
            if (peek().kind != Tok::String) fail("DATE requires a 'YYYY-MM-DD' string");
            return Value(parse_date(next().text));
        }
        bool neg = eat_op("-");
        if (peek().kind != Tok::Number) fail("expected literal");
        Value v = number_value(next().text);
        if (!neg) return v;
        return v.type() == ValueType::Int64 ? Value(-v.as_int()) : Value(-v.as_double());
    }

    static Value number_value(std::string text) {
        if (!text.empty() && text.back() == 'f') {
            text.pop_back();
            return Value(std::stod(text));
        }
        int64_t v = 0;
        auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
        if (ec != std::errc{} || p != text.data() + text.size()) return Value(std::stod(text));
        return Value(v);
    }

    ExprPtr parse_additive(Ctx& ctx) {
        ExprPtr e = parse_multiplicative(ctx);
        while (true) {
            if (eat_op("+")) e = add(e, parse_multiplicative(ctx));
            else if (eat_op("-")) e = sub(e, parse_multiplicative(ctx));
            else return e;
        }
    }

    ExprPtr parse_multiplicative(Ctx& ctx) {
        ExprPtr e = parse_primary(ctx);
        while (true) {
            if (eat_op("*")) e = mul(e, parse_primary(ctx));
            else if (eat_op("/")) e = div(e, parse_primary(ctx));
            else return e;
        }
    }

    static std::optional<AggFunc> agg_func_of(const std::string& name) {
        if (name == "count") return AggFunc::Count;
        if (name == "sum") return AggFunc::Sum;
        if (name == "avg") return AggFunc::Avg;
        if (name == "min") return AggFunc::Min;
        if (name == "max") return AggFunc::Max;
        return std::nullopt;
    }

    ExprPtr parse_primary(Ctx& ctx) {
        const Token& t = peek();
        if (t.kind == Tok::Number) return lit(number_value(next().text));
        if (t.kind == Tok::String) return lit(Value(next().text));
        if (eat_op("(")) {
            if (is_kw("select")) fail("scalar subquery", ParseDiag::Unsupported);
            ExprPtr e = parse_expr(ctx);
            expect_op(")");
            return e;
        }
        if (t.kind != Tok::Ident) fail("expected expression, got '" + t.text + "'");

        if (is_kw("date")) {
            ++at;
            if (peek().kind != Tok::String) fail("DATE requires a 'YYYY-MM-DD' string");
            return lit(Value(parse_date(next().text)));
        }
        if (is_kw("case")) fail("CASE expression", ParseDiag::Unsupported);
        if (is_kw("exists")) fail("EXISTS subquery", ParseDiag::Unsupported);
        if (is_kw("extract")) {
            ++at;
            expect_op("(");
            std::string field = expect_ident("field after EXTRACT(");
            if (field != "year") fail("EXTRACT supports only YEAR");
            expect_kw("from");
            ExprPtr e = parse_expr(ctx);
            expect_op(")");
            return extract_year(e);
        }
        if (is_kw("mod") && is_op("(", 1)) {
            ++at;
            expect_op("(");
            ExprPtr a = parse_expr(ctx);
            expect_op(",");
            ExprPtr b = parse_expr(ctx);
            expect_op(")");
            return mod(a, b);
        }
        if (auto func = agg_func_of(t.text); func && is_op("(", 1)) {
            if (!ctx.aggs) fail("aggregate function not allowed here");
            ++at;
            expect_op("(");
            if (eat_kw("distinct")) fail("aggregate DISTINCT", ParseDiag::Unsupported);
            ExprPtr arg;
            if (eat_op("*")) {
                if (*func != AggFunc::Count) fail("only COUNT accepts *");
            } else {
                Ctx none;
                none.subquery_host = nullptr;
                arg = parse_expr(none);
            }
            expect_op(")");
            if (is_kw("over")) fail("window function", ParseDiag::Unsupported);
            std::string fingerprint =
                std::string(agg_func_name(*func)) + "|" + (arg ? expr_to_string(*arg) : "*");
            for (const AggSpec& s : *ctx.aggs) {
                std::string existing =
                    std::string(agg_func_name(s.func)) + "|" + (s.arg ? expr_to_string(*s.arg) : "*");
                if (existing == fingerprint) return col(s.name);
            }
            std::string name = kAggPrefix + std::to_string(ctx.aggs->size());
            ctx.aggs->push_back({*func, arg, name});
            return col(name);
        }
        if (is_op("(", 1)) fail("unknown function '" + t.text + "'");
        if (ident_is_keyword()) fail("unexpected keyword '" + t.text + "'");
        std::string name = next().text;
        if (is_kw("over")) fail("window function", ParseDiag::Unsupported);
        if (eat_op(".")) {
            std::string column = expect_ident("column name after '.'");
            return col(name + "." + column);
        }
        return col(name);
    }

    // --- statements ---

    SelectPtr parse_query() {
        std::vector<std::pair<std::string, SelectPtr>> ctes;
        if (eat_kw("with")) {
            if (is_kw("recursive")) fail("recursive WITH", ParseDiag::Unsupported);
            while (true) {
                std::string name = expect_ident("CTE name");
                expect_kw("as");
                expect_op("(");
                ctes.emplace_back(name, parse_select());
                expect_op(")");
                if (!eat_op(",")) break;
            }
        }
        SelectPtr s = parse_select();
        s->ctes = std::move(ctes);
        if (is_kw("union") || is_kw("intersect") || is_kw("except")) {
            fail("set operation (" + peek().text + ")", ParseDiag::Unsupported);
        }
        if (peek().kind != Tok::End) fail("unexpected trailing input '" + peek().text + "'");
        return s;
    }

    SelectPtr parse_select() {
        auto s = std::make_shared<SelectStmt>();
        expect_kw("select");
        s->distinct = eat_kw("distinct");

        Ctx item_ctx;
        item_ctx.aggs = &s->agg_specs;

        if (eat_op("*")) {
            s->select_star = true;
        } else {
            while (true) {
                ExprPtr e = parse_expr(item_ctx);
                std::string alias;
                if (eat_kw("as")) alias = expect_ident("alias after AS");
                else if (peek().kind == Tok::Ident && !ident_is_keyword()) alias = next().text;
                if (alias.empty()) {
                    if (e->kind == ExprKind::ColumnRef && e->name.rfind(kAggPrefix, 0) != 0) {
                        alias = e->name;
                        size_t dot = alias.find('.');
                        if (dot != std::string::npos) alias = alias.substr(dot + 1);
                    } else {
                        alias = "_col" + std::to_string(s->items.size() + 1);
                    }
                }
                s->items.push_back({std::move(e), std::move(alias)});
                if (!eat_op(",")) break;
            }
        }

        expect_kw("from");
        if (is_op("(")) fail("derived table (subquery in FROM)", ParseDiag::Unsupported);
        s->from.push_back(parse_table_ref());
        while (true) {
            if (eat_op(",")) {
                if (is_op("(")) fail("derived table (subquery in FROM)", ParseDiag::Unsupported);
                s->from.push_back(parse_table_ref());
                continue;
            }
            if (is_kw("right") || is_kw("full")) fail(peek().text + " outer join", ParseDiag::Unsupported);
            bool left = false, inner = false;
            if (eat_kw("left")) {
                eat_kw("outer");
                left = true;
            } else if (is_kw("inner") || is_kw("join")) {
                eat_kw("inner");
                inner = true;
            } else {
                break;
            }
            expect_kw("join");
            if (is_op("(")) fail("derived table (subquery in FROM)", ParseDiag::Unsupported);
            TableRef joined = parse_table_ref();
            joined.left_join = left;
            joined.inner_join = inner;
            expect_kw("on");
            Ctx none;
            joined.on = parse_expr(none);
            s->from.push_back(std::move(joined));
        }

        if (eat_kw("where")) {
            Ctx where_ctx;
            where_ctx.subquery_host = s.get();
            s->where = parse_expr(where_ctx);
        }
        if (eat_kw("group")) {
            expect_kw("by");
            Ctx none;
            while (true) {
                s->group_by.push_back(parse_expr(none));
                if (!eat_op(",")) break;
            }
        }
        if (eat_kw("having")) {
            Ctx having_ctx;
            having_ctx.aggs = &s->agg_specs;
            s->having = parse_expr(having_ctx);
        }
        if (eat_kw("order")) {
            expect_kw("by");
            Ctx none;
            while (true) {
                OrderItem item;
                item.expr = parse_expr(none);
                if (eat_kw("desc")) item.desc = true;
                else eat_kw("asc");
                s->order_by.push_back(std::move(item));
                if (!eat_op(",")) break;
            }
        }
        if (eat_kw("limit")) {
            if (peek().kind != Tok::Number) fail("LIMIT requires a number");
            s->limit = number_value(next().text).as_int();
        }
        if (eat_kw("offset")) {
            if (peek().kind != Tok::Number) fail("OFFSET requires a number");
            s->offset = number_value(next().text).as_int();
        }
        return s;
    }

    TableRef parse_table_ref() {
        TableRef ref;
        ref.line = peek().line;
        ref.col = peek().col;
        ref.name = expect_ident("table name");
        if (eat_kw("as")) ref.alias = expect_ident("table alias");
        else if (peek().kind == Tok::Ident && !ident_is_keyword()) ref.alias = next().text;
        else ref.alias = ref.name;
        return ref;
    }
};

// ---------------------------------------------------------------------------
// lowering
// ---------------------------------------------------------------------------

struct CteScope {
    std::vector<std::pair<std::string, std::pair<PlanPtr, Schema>>> entries;  // name -> (plan, schema)

    const std::pair<PlanPtr, Schema>* find(const std::string& name) const {
        for (const auto& [n, v] : entries) {
            if (n == name) return &v;
        }
        return nullptr;
    }
};

struct Lowerer {
    const Catalog& catalog;

    struct Item {
        std::string alias;
        std::string table;  // empty for CTE items
        PlanPtr plan;       // unvalidated
        Schema schema;
        std::vector<ExprPtr> filters;
        std::vector<std::pair<PlanPtr, std::pair<ExprPtr, bool>>> semis;  // (build plan+key), anti flag
    };

    [[noreturn]] static void fail(size_t line, size_t col, const std::string& msg,
                                  ParseDiag::Category cat = ParseDiag::Syntax) {
        throw ParseError({line, col, msg, cat});
    }

    PlanPtr lower_query(const SelectStmt& s, const CteScope& outer) {
        CteScope scope = outer;
        for (const auto& [name, sub] : s.ctes) {
            PlanPtr plan = lower_query(*sub, scope);
            Schema schema = cte_schema(plan);
            scope.entries.emplace_back(name, std::make_pair(plan, std::move(schema)));
        }
        return lower_select(s, scope);
    }

    Schema cte_schema(const PlanPtr& plan) {
        return validate(plan, catalog)->schema;
    }

    // --- column resolution over the FROM items ---

    static std::pair<std::string, std::string> split_qualified(const std::string& name) {
        size_t dot = name.find('.');
        if (dot == std::string::npos) return {"", name};
        return {name.substr(0, dot), name.substr(dot + 1)};
    }

    /// Rewrites qualified names to plain column names; records referenced items.
    ExprPtr resolve_refs(const ExprPtr& e, const std::vector<Item>& items, std::vector<bool>& used) const {
        if (e->kind == ExprKind::ColumnRef) {
            if (e->name.rfind(kSubPrefix, 0) == 0 || e->name.rfind(kAggPrefix, 0) == 0) return e;
            auto [qual, column] = split_qualified(e->name);
            int found = -1;
            for (size_t i = 0; i < items.size(); ++i) {
                if (!qual.empty() && to_lower(items[i].alias) != to_lower(qual)) continue;
                if (items[i].schema.find(column) >= 0) {
                    if (found >= 0) {
                        throw ParseError({0, 0, "ambiguous column: " + e->name, ParseDiag::Syntax});
                    }
                    found = static_cast<int>(i);
                } else if (!qual.empty()) {
                    throw ParseError(
                        {0, 0, "unknown column " + column + " in table " + qual, ParseDiag::Syntax});
                }
            }
            if (found < 0) throw ParseError({0, 0, "unknown column: " + e->name, ParseDiag::Syntax});
            used[found] = true;
            return column == e->name ? e : col(column);
        }
        auto out = std::make_shared<Expr>(*e);
        for (auto& a : out->args) a = resolve_refs(a, items, used);
        return out;
    }

    static void split_conjuncts(const ExprPtr& e, std::vector<ExprPtr>& out) {
        if (e->kind == ExprKind::BoolOp && e->boolop == LogicOp::And) {
            split_conjuncts(e->args[0], out);
            split_conjuncts(e->args[1], out);
        } else {
            out.push_back(e);
        }
    }

    static bool contains_placeholder(const ExprPtr& e, const char* prefix) {
        if (e->kind == ExprKind::ColumnRef && e->name.rfind(prefix, 0) == 0) return true;
        for (const auto& a : e->args) {
            if (contains_placeholder(a, prefix)) return true;
        }
        return false;
    }

    PlanPtr lower_select(const SelectStmt& s, const CteScope& scope) {
        // FROM items
        std::vector<Item> items;
        for (const TableRef& ref : s.from) {
            Item item;
            item.alias = ref.alias;
            if (const auto* cte = scope.find(ref.name)) {
                item.plan = cte->first;
                item.schema = cte->second;
            } else if (const Schema* schema = catalog.find(ref.name)) {
                item.table = ref.name;
                item.plan = Plan::scan(ref.name).node();
                item.schema = *schema;
            } else {
                fail(ref.line, ref.col, "unknown table: " + ref.name);
            }
            for (const Item& other : items) {
                if (to_lower(other.alias) == to_lower(item.alias)) {
                    fail(ref.line, ref.col, "duplicate table alias: " + item.alias);
                }
            }
            items.push_back(std::move(item));
        }

        // WHERE decomposition
        struct JoinEdge {
            size_t a, b;       // item indices, a < b
            ExprPtr a_key, b_key;
        };
        std::vector<JoinEdge> edges;
        std::vector<ExprPtr> post_filters;
        std::vector<std::pair<PlanPtr, std::pair<ExprPtr, bool>>> post_semis;

        std::vector<ExprPtr> conjuncts;
        if (s.where) split_conjuncts(s.where, conjuncts);
        for (const ExprPtr& raw : conjuncts) {
            // IN-subquery conjunct?
            if (raw->kind == ExprKind::ColumnRef && raw->name.rfind(kSubPrefix, 0) == 0) {
                size_t idx = std::stoul(raw->name.substr(std::string(kSubPrefix).size()));
                const InSubquery& sub = s.subqueries[idx];
                PlanPtr sub_plan = lower_subquery(sub, scope, items);
                std::vector<bool> used(items.size(), false);
                ExprPtr needle = resolve_refs(sub.needle, items, used);
                size_t nused = 0, target = 0;
                for (size_t i = 0; i < items.size(); ++i) {
                    if (used[i]) {
                        ++nused;
                        target = i;
                    }
                }
                if (nused == 1) {
                    items[target].semis.emplace_back(sub_plan, std::make_pair(needle, sub.negated));
                } else {
                    post_semis.emplace_back(sub_plan, std::make_pair(needle, sub.negated));
                }
                continue;
            }
            if (contains_placeholder(raw, kSubPrefix)) {
                fail(0, 0, "IN (SELECT ...) must be a top-level WHERE conjunct", ParseDiag::Unsupported);
            }
            std::vector<bool> used(items.size(), false);
            ExprPtr e = resolve_refs(raw, items, used);
            size_t nused = 0;
            for (bool u : used) nused += u;
            if (nused <= 1) {
                size_t target = 0;
                for (size_t i = 0; i < items.size(); ++i) {
                    if (used[i]) target = i;
                }
                items[target].filters.push_back(e);
                continue;
            }
            // two-item equality -> join key pair
            if (nused == 2 && e->kind == ExprKind::Compare && e->cmp == CompareOp::Eq) {
                std::vector<bool> lu(items.size(), false), ru(items.size(), false);
                ExprPtr l = resolve_refs(raw->args[0], items, lu);
                ExprPtr r = resolve_refs(raw->args[1], items, ru);
                size_t ln = 0, rn = 0, li = 0, ri = 0;
                for (size_t i = 0; i < items.size(); ++i) {
                    if (lu[i]) {
                        ++ln;
                        li = i;
                    }
                    if (ru[i]) {
                        ++rn;
                        ri = i;
                    }
                }
                if (ln == 1 && rn == 1 && li != ri) {
                    JoinEdge edge;
                    if (li < ri) edge = {li, ri, l, r};
                    else edge = {ri, li, r, l};
                    edges.push_back(std::move(edge));
                    continue;
                }
            }
            post_filters.push_back(e);
        }

        // explicit JOIN ... ON keys
        struct OnKeys {
            std::vector<ExprPtr> acc_keys, item_keys;
            std::vector<ExprPtr> residual;
        };
        auto on_keys_for = [&](const TableRef& ref, size_t item_idx) {
            OnKeys keys;
            std::vector<ExprPtr> ons;
            split_conjuncts(ref.on, ons);
            for (const ExprPtr& raw : ons) {
                std::vector<bool> used(items.size(), false);
                ExprPtr e = resolve_refs(raw, items, used);
                bool uses_item = used[item_idx];
                size_t prior = 0;
                for (size_t i = 0; i < item_idx; ++i) prior += used[i];
                if (e->kind == ExprKind::Compare && e->cmp == CompareOp::Eq && uses_item && prior >= 1) {
                    std::vector<bool> lu(items.size(), false), ru(items.size(), false);
                    ExprPtr l = resolve_refs(raw->args[0], items, lu);
                    ExprPtr r = resolve_refs(raw->args[1], items, ru);
                    bool l_item = lu[item_idx], r_item = ru[item_idx];
                    if (l_item != r_item) {
                        keys.acc_keys.push_back(l_item ? r : l);
                        keys.item_keys.push_back(l_item ? l : r);
                        continue;
                    }
                }
                keys.residual.push_back(e);
            }
            return keys;
        };

        // fold FROM items left to right; accumulated side is the build side
        auto finished_item = [&](Item& item) {
            Plan p(item.plan);
            if (!item.filters.empty()) p = p.filter(item.filters);
            for (auto& [sub_plan, needle] : item.semis) {
                p = Plan::join(needle.second ? JoinKind::Anti : JoinKind::Semi, Plan(sub_plan), p,
                               {col(output_column(sub_plan))}, {needle.first});
            }
            return p;
        };

        Plan acc = finished_item(items[0]);
        for (size_t i = 1; i < items.size(); ++i) {
            const TableRef& ref = s.from[i];
            Plan rhs = finished_item(items[i]);
            std::vector<ExprPtr> acc_keys, item_keys;
            std::vector<ExprPtr> residual;
            if (ref.on) {
                OnKeys keys = on_keys_for(ref, i);
                acc_keys = std::move(keys.acc_keys);
                item_keys = std::move(keys.item_keys);
                residual = std::move(keys.residual);
            } else {
                for (const JoinEdge& e : edges) {
                    if (e.b == i) {
                        acc_keys.push_back(e.a_key);
                        item_keys.push_back(e.b_key);
                    }
                }
            }
            if (acc_keys.empty()) {
                fail(ref.line, ref.col,
                     "cross join: no equality predicate links table " + ref.alias +
                         " to the preceding tables",
                     ParseDiag::Unsupported);
            }
            if (ref.left_join) {
                // preserved side streams as the probe; the new table is built
                acc = Plan::join(JoinKind::Left, rhs, acc, item_keys, acc_keys);
            } else {
                acc = Plan::join(JoinKind::Inner, acc, rhs, acc_keys, item_keys);
            }
            for (const ExprPtr& e : residual) acc = acc.filter(e);
        }

        if (!post_filters.empty()) acc = acc.filter(post_filters);
        for (auto& [sub_plan, needle] : post_semis) {
            acc = Plan::join(needle.second ? JoinKind::Anti : JoinKind::Semi, Plan(sub_plan), acc,
                             {col(output_column(sub_plan))}, {needle.first});
        }

        // aggregation
        bool has_aggs = !s.agg_specs.empty() || !s.group_by.empty();
        std::vector<NamedExpr> final_items;
        if (has_aggs) {
            if (s.select_star) fail(0, 0, "SELECT * cannot be combined with GROUP BY");
            std::vector<NamedExpr> keys;
            std::vector<bool> used(items.size(), false);
            for (size_t g = 0; g < s.group_by.size(); ++g) {
                ExprPtr raw = s.group_by[g];
                std::string name;
                ExprPtr expr;
                if (raw->kind == ExprKind::ColumnRef) {
                    // select-alias reference?
                    auto [qual, column] = split_qualified(raw->name);
                    for (const NamedExpr& item : s.items) {
                        if (qual.empty() && to_lower(item.name) == to_lower(column) &&
                            !contains_placeholder(item.expr, kAggPrefix)) {
                            std::vector<bool> u2(items.size(), false);
                            expr = resolve_refs(item.expr, items, u2);
                            name = item.name;
                            break;
                        }
                    }
                }
                if (!expr) {
                    expr = resolve_refs(raw, items, used);
                    name = expr->kind == ExprKind::ColumnRef ? expr->name : "$key" + std::to_string(g);
                }
                keys.push_back({expr, name});
            }
            std::vector<AggSpec> aggs = s.agg_specs;
            for (AggSpec& a : aggs) {
                if (a.arg) {
                    std::vector<bool> u(items.size(), false);
                    a.arg = resolve_refs(a.arg, items, u);
                }
            }
            acc = acc.group_by(keys, aggs);

            // HAVING over the aggregate output
            if (s.having) {
                ExprPtr having = substitute_aliases(s.having, s, keys);
                acc = acc.filter(having);
            }

            // SELECT shape above the group
            bool identity = s.items.size() == keys.size() + s.agg_specs.size();
            for (size_t i = 0; i < s.items.size(); ++i) {
                ExprPtr rewritten = rewrite_post_group(s.items[i].expr, s, keys, items);
                final_items.push_back({rewritten, s.items[i].name});
                if (identity) {
                    bool matches;
                    if (i < keys.size()) {
                        matches = rewritten->kind == ExprKind::ColumnRef &&
                                  to_lower(rewritten->name) == to_lower(keys[i].name) &&
                                  to_lower(s.items[i].name) == to_lower(keys[i].name);
                    } else {
                        const AggSpec& a = s.agg_specs[i - keys.size()];
                        matches = rewritten->kind == ExprKind::ColumnRef && rewritten->name == a.name &&
                                  to_lower(s.items[i].name) == to_lower(a.name);
                    }
                    identity = matches;
                }
            }
            if (!identity) acc = acc.project(final_items);
        } else {
            if (s.having) fail(0, 0, "HAVING without GROUP BY or aggregates");
            if (!s.select_star) {
                std::vector<bool> used(items.size(), false);
                for (const NamedExpr& item : s.items) {
                    final_items.push_back({resolve_refs(item.expr, items, used), item.name});
                }
                acc = acc.project(final_items);
            }
        }

        if (s.distinct) acc = acc.distinct();

        if (!s.order_by.empty()) {
            Schema out_schema = validate(acc.node(), catalog)->schema;
            std::vector<SortKey> sort_keys;
            for (const OrderItem& o : s.order_by) {
                sort_keys.push_back({resolve_order_expr(o.expr, s, out_schema, items), o.desc});
            }
            acc = acc.sort(sort_keys);
        }
        if (s.offset) acc = acc.skip(*s.offset);
        if (s.limit) acc = acc.limit(*s.limit);
        return acc.node();
    }

    /// Output column name of a single-column subquery plan.
    std::string output_column(const PlanPtr& plan) {
        Schema schema = validate(plan, catalog)->schema;
        if (schema.size() != 1) {
            throw ParseError({0, 0, "IN subquery must produce exactly one column", ParseDiag::Syntax});
        }
        return schema.at(0).name;
    }

    PlanPtr lower_subquery(const InSubquery& sub, const CteScope& scope, const std::vector<Item>& outer_items) {
        try {
            return lower_query(*sub.select, scope);
        } catch (const ParseError& e) {
            // name that resolves in the outer scope = correlation
            const std::string& msg = e.diag.message;
            std::string prefix = "unknown column: ";
            if (e.diag.message.rfind(prefix, 0) == 0) {
                std::string column = msg.substr(prefix.size());
                std::vector<bool> used(outer_items.size(), false);
                try {
                    resolve_refs(col(column), outer_items, used);
                    throw ParseError({sub.line, sub.col,
                                      "correlated subquery (references outer column " + column + ")",
                                      ParseDiag::Unsupported});
                } catch (const ParseError& inner) {
                    if (inner.diag.category == ParseDiag::Unsupported) throw;
                }
            }
            throw;
        }
    }

    /// Replaces select-alias references in HAVING with the aliased expressions.
    ExprPtr substitute_aliases(const ExprPtr& e, const SelectStmt& s, const std::vector<NamedExpr>& keys) {
        if (e->kind == ExprKind::ColumnRef) {
            if (e->name.rfind(kAggPrefix, 0) == 0) return e;
            auto [qual, column] = split_qualified(e->name);
            for (const NamedExpr& key : keys) {
                if (to_lower(key.name) == to_lower(column)) return col(key.name);
            }
            for (const NamedExpr& item : s.items) {
                if (to_lower(item.name) == to_lower(column)) return item.expr;  // $agg refs and key exprs
            }
            throw ParseError({0, 0, "HAVING references column " + e->name + " outside the group", ParseDiag::Syntax});
        }
        auto out = std::make_shared<Expr>(*e);
        for (auto& a : out->args) a = substitute_aliases(a, s, keys);
        return out;
    }

    /// Rewrites a select item to reference the GroupAggregate output schema.
    ExprPtr rewrite_post_group(const ExprPtr& e, const SelectStmt& s, const std::vector<NamedExpr>& keys,
                               const std::vector<Item>& items) {
        if (e->kind == ExprKind::ColumnRef && e->name.rfind(kAggPrefix, 0) == 0) return e;
        std::vector<bool> used(items.size(), false);
        ExprPtr resolved;
        try {
            resolved = resolve_refs(e, items, used);
        } catch (const ParseError&) {
            resolved = e;
        }
        std::string printed = expr_to_string(*resolved);
        for (const NamedExpr& key : keys) {
            if (expr_to_string(*key.expr) == printed) return col(key.name);
        }
        if (e->kind == ExprKind::ColumnRef) {
            throw ParseError({0, 0, "column " + e->name + " must appear in GROUP BY or an aggregate",
                              ParseDiag::Syntax});
        }
        auto out = std::make_shared<Expr>(*e);
        for (auto& a : out->args) a = rewrite_post_group(a, s, keys, items);
        return out;
    }

    ExprPtr resolve_order_expr(const ExprPtr& e, const SelectStmt& s, const Schema& out_schema,
                               const std::vector<Item>& items) {
        if (e->kind == ExprKind::ColumnRef) {
            auto [qual, column] = split_qualified(e->name);
            if (out_schema.find(column) >= 0) return col(column);
            throw ParseError({0, 0, "ORDER BY references " + e->name + ", which is not in the result",
                              ParseDiag::Syntax});
        }
        // expression: match a select item structurally
        std::vector<bool> used(items.size(), false);
        ExprPtr resolved;
        try {
            resolved = resolve_refs(e, items, used);
        } catch (const ParseError&) {
            resolved = e;
        }
        std::string printed = expr_to_string(*resolved);
        for (const NamedExpr& item : s.items) {
            std::vector<bool> u2(items.size(), false);
            ExprPtr item_resolved;
            try {
                item_resolved = resolve_refs(item.expr, items, u2);
            } catch (const ParseError&) {
                item_resolved = item.expr;
            }
            if (expr_to_string(*item_resolved) == printed) return col(item.name);
        }
        throw ParseError({0, 0, "ORDER BY expression is not in the select list", ParseDiag::Syntax});
    }
};

}  // namespace

PlanPtr parse(const std::string& sql, const Catalog& catalog) {
    Parser parser(sql);
    SelectPtr stmt = parser.parse_query();
    Lowerer lowerer{catalog};
    return lowerer.lower_query(*stmt, CteScope{});
}

PlanPtr parse(const std::string& sql) { return parse(sql, tpch_catalog()); }

}  // namespace varq
