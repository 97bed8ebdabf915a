#include "varq/options.hpp"

#include "varq/errors.hpp"
#include "varq/value.hpp"

namespace varq {

const char* strategy_name(Strategy s) {
    switch (s) {
        case Strategy::Seq: return "seq";
        case Strategy::P: return "p";
        case Strategy::PU: return "pu";
        case Strategy::CG: return "cg";
        case Strategy::CGCC: return "cgcc";
    }
    return "?";
}

Strategy parse_strategy(const std::string& text) {
    std::string t = to_lower(text);
    if (t == "seq") return Strategy::Seq;
    if (t == "p") return Strategy::P;
    if (t == "pu") return Strategy::PU;
    if (t == "cg") return Strategy::CG;
    if (t == "cgcc") return Strategy::CGCC;
    throw ConfigError("unknown strategy: " + text + " (want seq|p|pu|cg|cgcc)");
}

std::string GenOptions::describe() const {
    std::string out = strategy_name(strategy);
    if (fuse_filters) out += "+fuse";
    if (multi_emit_join) out += "+multi";
    return out;
}

}  // namespace varq
