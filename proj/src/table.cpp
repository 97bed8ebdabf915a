#include "varq/table.hpp"

namespace varq {

void TableData::append(Record rec) {
    if (rec.size() != schema_.size()) {
        throw DataError("record arity " + std::to_string(rec.size()) + " does not match schema arity " +
                        std::to_string(schema_.size()) + " for table " + name_);
    }
    for (size_t i = 0; i < rec.size(); ++i) {
        if (!rec[i].is_null() && rec[i].type() != schema_.at(i).type) {
            throw DataError("type mismatch in column " + schema_.at(i).name + ": expected " +
                            type_name(schema_.at(i).type) + ", got " + type_name(rec[i].type()));
        }
    }
    for (Value& v : rec) cells_.push_back(std::move(v));
}

void Database::put(TableData table) {
    tables_.insert_or_assign(to_lower(table.name()), std::move(table));
}

const TableData& Database::table(std::string_view name) const {
    auto it = tables_.find(to_lower(name));
    if (it == tables_.end()) throw DataError("unknown table: " + std::string(name));
    return it->second;
}

}  // namespace varq
