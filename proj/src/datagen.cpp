#include "varq/datagen.hpp"

#include <cmath>
#include <cstdio>

namespace varq {

namespace {

constexpr uint64_t kGolden = 0x9e3779b97f4a7c15ull;

uint64_t mix64(uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

/// splitmix64 stream, seeded per (seed, table tag, row key).
class Rng {
public:
    Rng(uint64_t seed, uint64_t tag, uint64_t key) : state_(mix64(seed + kGolden * tag) ^ mix64(key + kGolden)) {}

    uint64_t next() {
        uint64_t z = (state_ += kGolden);
        return mix64(z);
    }
    /// Uniform in [0, n).
    uint64_t below(uint64_t n) { return next() % n; }

private:
    uint64_t state_;
};

enum Tag : uint64_t {
    kRegion = 1,
    kNation,
    kSupplier,
    kCustomer,
    kPart,
    kPartsupp,
    kOrders,
    kLineitem,
};

constexpr const char* kSegments[] = {"AUTOMOBILE", "BUILDING", "FURNITURE", "MACHINERY", "HOUSEHOLD"};
constexpr const char* kPriorities[] = {"1-URGENT", "2-HIGH", "3-MEDIUM", "4-NOT SPECIFIED", "5-LOW"};
constexpr const char* kInstructs[] = {"DELIVER IN PERSON", "COLLECT COD", "NONE", "TAKE BACK RETURN"};
constexpr const char* kModes[] = {"REG AIR", "AIR", "RAIL", "SHIP", "TRUCK", "MAIL", "FOB"};
constexpr const char* kTypes1[] = {"STANDARD", "SMALL", "MEDIUM", "LARGE", "ECONOMY", "PROMO"};
constexpr const char* kTypes2[] = {"ANODIZED", "BURNISHED", "PLATED", "POLISHED", "BRUSHED"};
constexpr const char* kTypes3[] = {"TIN", "NICKEL", "BRASS", "STEEL", "COPPER"};
constexpr const char* kContainers1[] = {"SM", "LG", "MED", "JUMBO", "WRAP"};
constexpr const char* kContainers2[] = {"CASE", "BOX", "BAG", "JAR", "PKG", "PACK", "CAN", "DRUM"};

constexpr const char* kColors[] = {
    "almond", "antique", "aquamarine", "azure", "beige", "bisque", "black", "blanched", "blue",
    "blush", "brown", "burlywood", "chartreuse", "chocolate", "coral", "cornsilk", "cream", "cyan",
    "dark", "deep", "dodger", "firebrick", "forest", "frosted", "goldenrod", "green", "honeydew",
    "hot", "indian", "ivory", "khaki", "lavender", "lemon", "light", "lime", "linen", "magenta",
    "maroon", "medium", "metallic", "midnight", "mint", "misty", "navy", "olive", "orchid", "pale",
    "peach", "pink", "plum", "powder", "purple", "red", "rose", "royal", "saddle", "salmon",
    "sandy", "seashell", "sienna", "sky", "slate", "smoke", "snow", "spring", "steel", "tan",
    "thistle", "tomato", "turquoise", "violet", "wheat", "white", "yellow"};

constexpr const char* kWords[] = {
    "furiously", "quickly", "carefully", "slyly", "blithely", "ironic", "final", "pending",
    "regular", "express", "special", "bold", "even", "silent", "quiet", "ruthless", "accounts",
    "deposits", "requests", "packages", "instructions", "foxes", "pinto", "beans", "theodolites",
    "platelets", "ideas", "dependencies", "excuses", "sentiments"};

struct NationDef {
    const char* name;
    int64_t region;
};
constexpr NationDef kNations[25] = {
    {"ALGERIA", 0},  {"ARGENTINA", 1}, {"BRAZIL", 1},      {"CANADA", 1},         {"EGYPT", 4},
    {"ETHIOPIA", 0}, {"FRANCE", 3},    {"GERMANY", 3},     {"INDIA", 2},          {"INDONESIA", 2},
    {"IRAN", 4},     {"IRAQ", 4},      {"JAPAN", 2},       {"JORDAN", 4},         {"KENYA", 0},
    {"MOROCCO", 0},  {"MOZAMBIQUE", 0},{"PERU", 1},        {"CHINA", 2},          {"ROMANIA", 3},
    {"SAUDI ARABIA", 4}, {"UNITED KINGDOM", 3}, {"RUSSIA", 3}, {"UNITED STATES", 1}, {"VIETNAM", 2}};
constexpr const char* kRegions[5] = {"AFRICA", "AMERICA", "ASIA", "EUROPE", "MIDDLE EAST"};

template <size_t N>
const char* pick(Rng& rng, const char* const (&arr)[N]) {
    return arr[rng.below(N)];
}

std::string comment(Rng& rng) {
    std::string out = pick(rng, kWords);
    size_t extra = 1 + rng.below(3);
    for (size_t i = 0; i < extra; ++i) {
        out += ' ';
        out += pick(rng, kWords);
    }
    return out;
}

std::string padded(const char* prefix, int64_t n) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%s%09lld", prefix, static_cast<long long>(n));
    return buf;
}

std::string phone(Rng& rng, int64_t nationkey) {
    char buf[24];
    std::snprintf(buf, sizeof(buf), "%02lld-%03llu-%03llu-%04llu", static_cast<long long>(10 + nationkey),
                  static_cast<unsigned long long>(100 + rng.below(900)),
                  static_cast<unsigned long long>(100 + rng.below(900)),
                  static_cast<unsigned long long>(1000 + rng.below(9000)));
    return buf;
}

double cents(int64_t c) { return static_cast<double>(c) / 100.0; }

// Base cardinalities from the TPC-H specification.
struct Counts {
    int64_t part, supplier, customer, orders, lineitem, partsupp;
};

Counts counts_for(double sf) {
    Counts c;
    c.part = std::llround(200000.0 * sf);
    c.supplier = std::llround(10000.0 * sf);
    c.customer = std::llround(150000.0 * sf);
    c.orders = std::llround(1500000.0 * sf);
    c.lineitem = std::llround(6000000.0 * sf);
    c.partsupp = std::llround(800000.0 * sf);
    return c;
}

const int32_t kDateLo = days_from_civil(1992, 1, 1);
const int32_t kOrderDateSpan = days_from_civil(1998, 8, 2) - days_from_civil(1992, 1, 1) + 1;
const int32_t kStatusCutoff = days_from_civil(1995, 6, 17);

// Pure per-key derivations shared between tables (lineitem recomputes order
// dates and partsupp pairs without looking the rows up).
int32_t order_date(uint64_t seed, int64_t orderkey) {
    Rng rng(seed, kOrders, static_cast<uint64_t>(orderkey));
    return kDateLo + static_cast<int32_t>(rng.below(kOrderDateSpan));
}

double part_retailprice(int64_t partkey) {
    return cents(90000 + (partkey / 10) % 20001 + 100 * (partkey % 1000));
}

void ps_pair(int64_t j, int64_t nparts, int64_t nsuppliers, int64_t& partkey, int64_t& suppkey) {
    partkey = j % nparts + 1;
    int64_t round = j / nparts;
    int64_t step = nsuppliers >= 4 ? nsuppliers / 4 : 1;
    suppkey = ((j % nparts) + (round + 1) * step) % nsuppliers + 1;
}

}  // namespace

const std::vector<std::string>& tpch_table_names() {
    static const std::vector<std::string> names = {"region",   "nation", "supplier", "customer",
                                                   "part",     "partsupp", "orders",   "lineitem"};
    return names;
}

const Schema& tpch_schema(std::string_view table) {
    using VT = ValueType;
    static const std::map<std::string, Schema> schemas = {
        {"region", Schema({{"r_regionkey", VT::Int64}, {"r_name", VT::Text}, {"r_comment", VT::Text}})},
        {"nation", Schema({{"n_nationkey", VT::Int64},
                           {"n_name", VT::Text},
                           {"n_regionkey", VT::Int64},
                           {"n_comment", VT::Text}})},
        {"supplier", Schema({{"s_suppkey", VT::Int64},
                             {"s_name", VT::Text},
                             {"s_address", VT::Text},
                             {"s_nationkey", VT::Int64},
                             {"s_phone", VT::Text},
                             {"s_acctbal", VT::Float64},
                             {"s_comment", VT::Text}})},
        {"customer", Schema({{"c_custkey", VT::Int64},
                             {"c_name", VT::Text},
                             {"c_address", VT::Text},
                             {"c_nationkey", VT::Int64},
                             {"c_phone", VT::Text},
                             {"c_acctbal", VT::Float64},
                             {"c_mktsegment", VT::Text},
                             {"c_comment", VT::Text}})},
        {"part", Schema({{"p_partkey", VT::Int64},
                         {"p_name", VT::Text},
                         {"p_mfgr", VT::Text},
                         {"p_brand", VT::Text},
                         {"p_type", VT::Text},
                         {"p_size", VT::Int64},
                         {"p_container", VT::Text},
                         {"p_retailprice", VT::Float64},
                         {"p_comment", VT::Text}})},
        {"partsupp", Schema({{"ps_partkey", VT::Int64},
                             {"ps_suppkey", VT::Int64},
                             {"ps_availqty", VT::Int64},
                             {"ps_supplycost", VT::Float64},
                             {"ps_comment", VT::Text}})},
        {"orders", Schema({{"o_orderkey", VT::Int64},
                           {"o_custkey", VT::Int64},
                           {"o_orderstatus", VT::Text},
                           {"o_totalprice", VT::Float64},
                           {"o_orderdate", VT::Date},
                           {"o_orderpriority", VT::Text},
                           {"o_clerk", VT::Text},
                           {"o_shippriority", VT::Int64},
                           {"o_comment", VT::Text}})},
        {"lineitem", Schema({{"l_orderkey", VT::Int64},
                             {"l_partkey", VT::Int64},
                             {"l_suppkey", VT::Int64},
                             {"l_linenumber", VT::Int64},
                             {"l_quantity", VT::Float64},
                             {"l_extendedprice", VT::Float64},
                             {"l_discount", VT::Float64},
                             {"l_tax", VT::Float64},
                             {"l_returnflag", VT::Text},
                             {"l_linestatus", VT::Text},
                             {"l_shipdate", VT::Date},
                             {"l_commitdate", VT::Date},
                             {"l_receiptdate", VT::Date},
                             {"l_shipinstruct", VT::Text},
                             {"l_shipmode", VT::Text},
                             {"l_comment", VT::Text}})},
    };
    auto it = schemas.find(std::string(table));
    if (it == schemas.end()) throw DataError("unknown TPC-H table: " + std::string(table));
    return it->second;
}

int64_t tpch_row_count(std::string_view table, double sf) {
    Counts c = counts_for(sf);
    if (table == "region") return 5;
    if (table == "nation") return 25;
    if (table == "supplier") return c.supplier;
    if (table == "customer") return c.customer;
    if (table == "part") return c.part;
    if (table == "partsupp") return c.partsupp;
    if (table == "orders") return c.orders;
    if (table == "lineitem") return c.lineitem;
    throw DataError("unknown TPC-H table: " + std::string(table));
}

Database generate(const GenConfig& config) {
    if (!(config.sf > 0)) throw ConfigError("scale factor must be > 0");
    Counts n = counts_for(config.sf);
    if (n.part == 0 || n.supplier == 0 || n.customer == 0 || n.orders == 0 || n.lineitem == 0 ||
        n.partsupp == 0) {
        throw ConfigError("scale factor too small: a variable-size table would have zero rows");
    }
    uint64_t seed = config.seed;
    Database db;

    {
        TableData t("region", tpch_schema("region"));
        for (int64_t r = 0; r < 5; ++r) {
            Rng rng(seed, kRegion, r);
            t.append({Value(r), Value(kRegions[r]), Value(comment(rng))});
        }
        db.put(std::move(t));
    }
    {
        TableData t("nation", tpch_schema("nation"));
        for (int64_t k = 0; k < 25; ++k) {
            Rng rng(seed, kNation, k);
            t.append({Value(k), Value(kNations[k].name), Value(kNations[k].region), Value(comment(rng))});
        }
        db.put(std::move(t));
    }
    {
        TableData t("supplier", tpch_schema("supplier"));
        for (int64_t s = 1; s <= n.supplier; ++s) {
            Rng rng(seed, kSupplier, s);
            int64_t nation = rng.below(25);
            t.append({Value(s), Value(padded("Supplier#", s)),
                      Value(std::string(pick(rng, kWords)) + " " + std::to_string(rng.below(10000))),
                      Value(nation), Value(phone(rng, nation)),
                      Value(cents(static_cast<int64_t>(rng.below(1099800)) - 99980)), Value(comment(rng))});
        }
        db.put(std::move(t));
    }
    {
        TableData t("customer", tpch_schema("customer"));
        for (int64_t c = 1; c <= n.customer; ++c) {
            Rng rng(seed, kCustomer, c);
            int64_t nation = rng.below(25);
            t.append({Value(c), Value(padded("Customer#", c)),
                      Value(std::string(pick(rng, kWords)) + " " + std::to_string(rng.below(10000))),
                      Value(nation), Value(phone(rng, nation)),
                      Value(cents(static_cast<int64_t>(rng.below(1099800)) - 99980)),
                      Value(pick(rng, kSegments)), Value(comment(rng))});
        }
        db.put(std::move(t));
    }
    {
        TableData t("part", tpch_schema("part"));
        for (int64_t p = 1; p <= n.part; ++p) {
            Rng rng(seed, kPart, p);
            std::string name = pick(rng, kColors);
            name += ' ';
            name += pick(rng, kColors);
            name += ' ';
            name += pick(rng, kColors);
            int64_t mfgr = 1 + rng.below(5);
            std::string type = std::string(pick(rng, kTypes1)) + " " + pick(rng, kTypes2) + " " + pick(rng, kTypes3);
            std::string container = std::string(pick(rng, kContainers1)) + " " + pick(rng, kContainers2);
            t.append({Value(p), Value(std::move(name)), Value("Manufacturer#" + std::to_string(mfgr)),
                      Value("Brand#" + std::to_string(mfgr) + std::to_string(1 + rng.below(5))),
                      Value(std::move(type)), Value(static_cast<int64_t>(1 + rng.below(50))),
                      Value(std::move(container)), Value(part_retailprice(p)), Value(comment(rng))});
        }
        db.put(std::move(t));
    }
    {
        TableData t("partsupp", tpch_schema("partsupp"));
        for (int64_t j = 0; j < n.partsupp; ++j) {
            Rng rng(seed, kPartsupp, j);
            int64_t partkey, suppkey;
            ps_pair(j, n.part, n.supplier, partkey, suppkey);
            t.append({Value(partkey), Value(suppkey), Value(static_cast<int64_t>(1 + rng.below(9999))),
                      Value(cents(100 + rng.below(99901))), Value(comment(rng))});
        }
        db.put(std::move(t));
    }
    {
        TableData t("orders", tpch_schema("orders"));
        for (int64_t o = 1; o <= n.orders; ++o) {
            Rng rng(seed, kOrders, o);
            int32_t odate = kDateLo + static_cast<int32_t>(rng.below(kOrderDateSpan));
            // The first draw fixes the date so order_date(seed, o) agrees.
            const char* status = odate + 60 < kStatusCutoff ? "F" : (rng.below(8) == 0 ? "P" : "O");
            t.append({Value(o), Value(static_cast<int64_t>(1 + rng.below(n.customer))), Value(status),
                      Value(cents(100000 + rng.below(49900001))), Value(Date{odate}),
                      Value(kPriorities[rng.below(5)]), Value(padded("Clerk#", 1 + rng.below(1000))),
                      Value(static_cast<int64_t>(0)), Value(comment(rng))});
        }
        db.put(std::move(t));
    }
    {
        TableData t("lineitem", tpch_schema("lineitem"));
        int64_t prev_orderkey = 0;
        int64_t linenumber = 0;
        for (int64_t i = 0; i < n.lineitem; ++i) {
            Rng rng(seed, kLineitem, i);
            int64_t orderkey = (i * n.orders) / n.lineitem + 1;
            linenumber = orderkey == prev_orderkey ? linenumber + 1 : 1;
            prev_orderkey = orderkey;
            int64_t partkey, suppkey;
            ps_pair(static_cast<int64_t>(rng.below(n.partsupp)), n.part, n.supplier, partkey, suppkey);
            double quantity = static_cast<double>(1 + rng.below(50));
            int32_t odate = order_date(seed, orderkey);
            int32_t shipdate = odate + 1 + static_cast<int32_t>(rng.below(121));
            int32_t commitdate = odate + 30 + static_cast<int32_t>(rng.below(61));
            int32_t receiptdate = shipdate + 1 + static_cast<int32_t>(rng.below(30));
            const char* returnflag = receiptdate <= kStatusCutoff ? (rng.below(2) ? "R" : "A") : "N";
            const char* linestatus = shipdate > kStatusCutoff ? "O" : "F";
            t.append({Value(orderkey), Value(partkey), Value(suppkey), Value(linenumber), Value(quantity),
                      Value(quantity * part_retailprice(partkey)), Value(cents(rng.below(11)) ),
                      Value(cents(rng.below(9))), Value(returnflag), Value(linestatus), Value(Date{shipdate}),
                      Value(Date{commitdate}), Value(Date{receiptdate}), Value(pick(rng, kInstructs)),
                      Value(pick(rng, kModes)), Value(comment(rng))});
        }
        db.put(std::move(t));
    }
    return db;
}

}  // namespace varq
