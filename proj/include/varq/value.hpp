#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace varq {

/// Calendar date stored as days since 1970-01-01 (negative = before).
struct Date {
    int32_t days = 0;

    friend auto operator<=>(const Date&, const Date&) = default;
};

/// Converts a civil date to days since 1970-01-01. Valid over the full int32 range.
int32_t days_from_civil(int year, int month, int day);
/// Inverse of days_from_civil.
void civil_from_days(int32_t days, int& year, int& month, int& day);
int year_of(Date d);

/// Parses `YYYY-MM-DD`. Throws std::invalid_argument on malformed input.
Date parse_date(std::string_view text);
std::string format_date(Date d);

enum class ValueType : uint8_t { Null, Bool, Int64, Float64, Text, Date };

const char* type_name(ValueType t);

/// One cell of a row. Null is the monostate alternative.
class Value {
public:
    Value() = default;
    Value(bool b) : v_(b) {}
    Value(int64_t i) : v_(i) {}
    Value(int i) : v_(static_cast<int64_t>(i)) {}
    Value(double d) : v_(d) {}
    Value(Date d) : v_(d) {}
    Value(std::string s) : v_(std::move(s)) {}
    Value(const char* s) : v_(std::string(s)) {}

    static Value null() { return Value(); }

    ValueType type() const { return static_cast<ValueType>(v_.index()); }
    bool is_null() const { return v_.index() == 0; }

    bool as_bool() const { return std::get<bool>(v_); }
    int64_t as_int() const { return std::get<int64_t>(v_); }
    double as_double() const { return std::get<double>(v_); }
    Date as_date() const { return std::get<Date>(v_); }
    const std::string& as_text() const { return std::get<std::string>(v_); }

    /// Numeric accessor with Int64 -> Float64 promotion.
    double as_number() const {
        return type() == ValueType::Int64 ? static_cast<double>(as_int()) : as_double();
    }

    /// Structural equality: Null == Null, no numeric cross-type promotion.
    bool operator==(const Value& o) const { return v_ == o.v_; }
    /// Structural total order (tag first, then payload); used by sort and grouping.
    bool operator<(const Value& o) const { return v_ < o.v_; }

    size_t hash() const;
    std::string to_string() const;

private:
    std::variant<std::monostate, bool, int64_t, double, std::string, Date> v_;
};

using Record = std::vector<Value>;
using RowView = std::span<const Value>;

size_t hash_record(RowView rec);
bool record_eq(RowView a, RowView b);

struct RecordHash {
    size_t operator()(const Record& r) const { return hash_record(r); }
};
struct RecordEq {
    bool operator()(const Record& a, const Record& b) const { return a == b; }
};

struct Column {
    std::string name;
    ValueType type;
};

/// Ordered list of named, typed columns. Names are unique (case-insensitive).
class Schema {
public:
    Schema() = default;
    Schema(std::vector<Column> cols);

    size_t size() const { return cols_.size(); }
    const Column& at(size_t i) const { return cols_[i]; }
    const std::vector<Column>& columns() const { return cols_; }

    /// Case-insensitive lookup; returns -1 when absent.
    int find(std::string_view name) const;

    void add(std::string name, ValueType type);

    bool operator==(const Schema& o) const;

private:
    std::vector<Column> cols_;
};

std::string to_lower(std::string_view s);

}  // namespace varq
