#pragma once

#include <map>
#include <string>

#include "varq/errors.hpp"
#include "varq/value.hpp"

namespace varq {

/// Row-oriented in-memory table. Cells are stored densely, row-major,
/// and are immutable once the table has been built.
class TableData {
public:
    TableData() = default;
    TableData(std::string name, Schema schema) : name_(std::move(name)), schema_(std::move(schema)) {}

    const std::string& name() const { return name_; }
    const Schema& schema() const { return schema_; }
    size_t row_count() const { return schema_.size() ? cells_.size() / schema_.size() : 0; }

    RowView row(size_t i) const {
        return RowView(cells_.data() + i * schema_.size(), schema_.size());
    }

    /// Appends one record; arity and types must match the schema.
    void append(Record rec);

    bool operator==(const TableData& o) const {
        return schema_ == o.schema_ && cells_ == o.cells_;
    }

private:
    std::string name_;
    Schema schema_;
    std::vector<Value> cells_;
};

/// Named tables, looked up case-insensitively. Immutable during query execution.
class Database {
public:
    void put(TableData table);

    bool has(std::string_view name) const { return tables_.count(to_lower(name)) > 0; }

    const TableData& table(std::string_view name) const;

    const std::map<std::string, TableData>& tables() const { return tables_; }

    bool operator==(const Database& o) const { return tables_ == o.tables_; }

private:
    std::map<std::string, TableData> tables_;  // key: lower-cased name
};

}  // namespace varq
