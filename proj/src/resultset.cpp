#include "varq/resultset.hpp"

#include <sstream>

namespace varq {

std::string format_result(const ResultSet& rs, size_t max_rows) {
    std::ostringstream out;
    for (size_t i = 0; i < rs.schema.size(); ++i) {
        if (i) out << " | ";
        out << rs.schema.at(i).name;
    }
    out << "\n";
    size_t shown = std::min(max_rows, rs.rows.size());
    for (size_t r = 0; r < shown; ++r) {
        for (size_t i = 0; i < rs.rows[r].size(); ++i) {
            if (i) out << " | ";
            out << rs.rows[r][i].to_string();
        }
        out << "\n";
    }
    if (shown < rs.rows.size()) out << "... (" << rs.rows.size() << " rows total)\n";
    return out.str();
}

uint64_t result_checksum(const ResultSet& rs) {
    // XOR of row hashes: order-insensitive so every backend agrees
    uint64_t sum = 0x9e3779b97f4a7c15ull ^ rs.rows.size();
    for (const Record& r : rs.rows) sum ^= hash_record(r);
    return sum;
}

}  // namespace varq
