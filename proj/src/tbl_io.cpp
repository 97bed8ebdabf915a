#include "varq/tbl_io.hpp"

#include <charconv>
#include <fstream>

namespace varq {

namespace {

Value parse_field(std::string_view text, ValueType type, size_t line_no, size_t col_no) {
    auto fail = [&](const char* what) -> Value {
        throw DataError("line " + std::to_string(line_no) + ", column " + std::to_string(col_no + 1) +
                        ": cannot parse '" + std::string(text) + "' as " + what);
    };
    if (text.empty() && type != ValueType::Text) return Value::null();
    switch (type) {
        case ValueType::Int64: {
            int64_t v = 0;
            auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
            if (ec != std::errc{} || p != text.data() + text.size()) return fail("int64");
            return Value(v);
        }
        case ValueType::Float64: {
            double v = 0;
            auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
            if (ec != std::errc{} || p != text.data() + text.size()) return fail("float64");
            return Value(v);
        }
        case ValueType::Bool:
            if (text == "true") return Value(true);
            if (text == "false") return Value(false);
            return fail("bool");
        case ValueType::Date:
            try {
                return Value(parse_date(text));
            } catch (const std::invalid_argument&) {
                return fail("date");
            }
        case ValueType::Text:
            return Value(std::string(text));
        case ValueType::Null:
            return fail("null-typed column");
    }
    return fail("value");
}

}  // namespace

TableData load_tbl(const std::string& path, std::string table_name, const Schema& schema) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);

    TableData table(std::move(table_name), schema);
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line.back() != '|') {
            throw DataError("line " + std::to_string(line_no) + ": missing trailing '|'");
        }
        std::string_view rest(line.data(), line.size() - 1);
        Record rec;
        rec.reserve(schema.size());
        size_t col = 0;
        size_t pos = 0;
        while (true) {
            size_t bar = rest.find('|', pos);
            std::string_view field = bar == std::string_view::npos ? rest.substr(pos) : rest.substr(pos, bar - pos);
            if (col >= schema.size()) {
                throw DataError("line " + std::to_string(line_no) + ": arity mismatch, expected " +
                                std::to_string(schema.size()) + " fields");
            }
            rec.push_back(parse_field(field, schema.at(col).type, line_no, col));
            ++col;
            if (bar == std::string_view::npos) break;
            pos = bar + 1;
        }
        if (col != schema.size()) {
            throw DataError("line " + std::to_string(line_no) + ": arity mismatch, expected " +
                            std::to_string(schema.size()) + " fields, got " + std::to_string(col));
        }
        table.append(std::move(rec));
    }
    return table;
}

void write_tbl(const TableData& table, const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path + " for writing");

    std::string line;
    for (size_t r = 0; r < table.row_count(); ++r) {
        line.clear();
        for (const Value& v : table.row(r)) {
            if (v.type() == ValueType::Text) {
                const std::string& t = v.as_text();
                if (t.find('|') != std::string::npos || t.find('\n') != std::string::npos) {
                    throw DataError("cannot encode text containing '|' or newline in .tbl format (row " +
                                    std::to_string(r + 1) + ")");
                }
                line += t;
            } else if (!v.is_null()) {
                line += v.to_string();
            }
            line += '|';
        }
        line += '\n';
        out << line;
    }
    if (!out) throw IoError("write failed: " + path);
}

}  // namespace varq
