#include "varq/value.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdio>
#include <stdexcept>

namespace varq {

// Howard Hinnant's civil date algorithms.
int32_t days_from_civil(int y, int m, int d) {
    y -= m <= 2;
    const int era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153u * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<int>(doe) - 719468;
}

void civil_from_days(int32_t z, int& year, int& month, int& day) {
    z += 719468;
    const int era = (z >= 0 ? z : z - 146096) / 146097;
    const unsigned doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    const int y = static_cast<int>(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    day = static_cast<int>(doy - (153 * mp + 2) / 5 + 1);
    month = static_cast<int>(mp + (mp < 10 ? 3 : -9));
    year = y + (month <= 2);
}

int year_of(Date d) {
    int y, m, dd;
    civil_from_days(d.days, y, m, dd);
    return y;
}

Date parse_date(std::string_view text) {
    int y = 0, m = 0, d = 0;
    if (text.size() != 10 || text[4] != '-' || text[7] != '-' ||
        std::from_chars(text.data(), text.data() + 4, y).ec != std::errc{} ||
        std::from_chars(text.data() + 5, text.data() + 7, m).ec != std::errc{} ||
        std::from_chars(text.data() + 8, text.data() + 10, d).ec != std::errc{} ||
        m < 1 || m > 12 || d < 1 || d > 31) {
        throw std::invalid_argument("bad date literal: '" + std::string(text) + "' (want YYYY-MM-DD)");
    }
    return Date{days_from_civil(y, m, d)};
}

std::string format_date(Date d) {
    int y, m, dd;
    civil_from_days(d.days, y, m, dd);
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d", y, m, dd);
    return buf;
}

const char* type_name(ValueType t) {
    switch (t) {
        case ValueType::Null: return "null";
        case ValueType::Bool: return "bool";
        case ValueType::Int64: return "int64";
        case ValueType::Float64: return "float64";
        case ValueType::Text: return "text";
        case ValueType::Date: return "date";
    }
    return "?";
}

namespace {
inline size_t mix(size_t h, size_t v) {
    // splitmix64 finalizer as the combiner
    v += 0x9e3779b97f4a7c15ull + h;
    v = (v ^ (v >> 30)) * 0xbf58476d1ce4e5b9ull;
    v = (v ^ (v >> 27)) * 0x94d049bb133111ebull;
    return v ^ (v >> 31);
}
}  // namespace

size_t Value::hash() const {
    switch (type()) {
        case ValueType::Null: return 0x6e756c6cull;
        case ValueType::Bool: return mix(1, as_bool());
        case ValueType::Int64: return mix(2, static_cast<size_t>(as_int()));
        case ValueType::Float64: {
            double d = as_double();
            if (d == 0.0) d = 0.0;  // collapse -0.0
            uint64_t bits;
            static_assert(sizeof(bits) == sizeof(d));
            __builtin_memcpy(&bits, &d, sizeof(bits));
            return mix(3, bits);
        }
        case ValueType::Text: return mix(4, std::hash<std::string>{}(as_text()));
        case ValueType::Date: return mix(5, static_cast<size_t>(as_date().days));
    }
    return 0;
}

std::string Value::to_string() const {
    switch (type()) {
        case ValueType::Null: return "NULL";
        case ValueType::Bool: return as_bool() ? "true" : "false";
        case ValueType::Int64: return std::to_string(as_int());
        case ValueType::Float64: {
            char buf[32];
            auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), as_double());
            return std::string(buf, p);
        }
        case ValueType::Text: return as_text();
        case ValueType::Date: return format_date(as_date());
    }
    return "?";
}

size_t hash_record(RowView rec) {
    size_t h = 0x52454353ull;
    for (const Value& v : rec) h = mix(h, v.hash());
    return h;
}

bool record_eq(RowView a, RowView b) {
    return std::equal(a.begin(), a.end(), b.begin(), b.end());
}

std::string to_lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

Schema::Schema(std::vector<Column> cols) : cols_(std::move(cols)) {
    for (size_t i = 0; i < cols_.size(); ++i) {
        for (size_t j = i + 1; j < cols_.size(); ++j) {
            if (to_lower(cols_[i].name) == to_lower(cols_[j].name)) {
                throw std::invalid_argument("duplicate column name: " + cols_[i].name);
            }
        }
    }
}

int Schema::find(std::string_view name) const {
    std::string lo = to_lower(name);
    for (size_t i = 0; i < cols_.size(); ++i) {
        if (to_lower(cols_[i].name) == lo) return static_cast<int>(i);
    }
    return -1;
}

void Schema::add(std::string name, ValueType type) {
    if (find(name) >= 0) throw std::invalid_argument("duplicate column name: " + name);
    cols_.push_back({std::move(name), type});
}

bool Schema::operator==(const Schema& o) const {
    if (cols_.size() != o.cols_.size()) return false;
    for (size_t i = 0; i < cols_.size(); ++i) {
        if (cols_[i].type != o.cols_[i].type || to_lower(cols_[i].name) != to_lower(o.cols_[i].name))
            return false;
    }
    return true;
}

}  // namespace varq
