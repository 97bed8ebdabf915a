#pragma once

#include <string>

#include "varq/table.hpp"

namespace varq {

/// Loads a pipe-delimited `.tbl` file (TPC-H dump format): one record per line,
/// fields separated by `|`, each line terminated by a trailing `|`, no header.
/// Dates are `YYYY-MM-DD`. Errors report the offending line (and column).
TableData load_tbl(const std::string& path, std::string table_name, const Schema& schema);

/// Writes a table in `.tbl` format. load_tbl(write_tbl(t)) == t.
/// Text cells containing `|` or newlines are rejected (delimiter collision).
void write_tbl(const TableData& table, const std::string& path);

}  // namespace varq
