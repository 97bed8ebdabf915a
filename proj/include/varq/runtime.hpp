#pragma once

#include <atomic>
#include <cassert>
#include <cstring>
#include <limits>
#include <mutex>
#include <unordered_map>
#include <unordered_set>

#include "varq/plan.hpp"

namespace varq {

/// Hash multimap from composite key to the list of build-side records.
/// Sealed before probing; probes assert the seal, inserts assert its absence.
class JoinMap {
public:
    void add(Record key, Record rec) {
        check_unsealed();
        map_[std::move(key)].push_back(std::move(rec));
    }

    /// Appends `recs` to the key's list (bulk variant used by merge phases).
    void add_all(const Record& key, std::vector<Record>&& recs) {
        check_unsealed();
        auto& list = map_[key];
        if (list.empty()) {
            list = std::move(recs);
        } else {
            for (auto& r : recs) list.push_back(std::move(r));
        }
    }

    void seal() { sealed_ = true; }
    bool sealed() const { return sealed_; }

    const std::vector<Record>* find(const Record& key) const {
        if (!sealed_) throw Error("JoinMap probed before seal");
        auto it = map_.find(key);
        return it == map_.end() ? nullptr : &it->second;
    }

    size_t key_count() const { return map_.size(); }

    template <typename F>
    void for_each(F&& f) const {
        for (const auto& [k, v] : map_) f(k, v);
    }

    using Map = std::unordered_map<Record, std::vector<Record>, RecordHash, RecordEq>;
    Map& raw() { return map_; }

private:
    void check_unsealed() const {
        if (sealed_) throw Error("JoinMap mutated after seal");
    }

    Map map_;
    bool sealed_ = false;
};

/// Shared JoinMap with striped entry locking, used when the build phase runs
/// under the CG/CGCC strategies.
class ConcurrentJoinMap {
public:
    explicit ConcurrentJoinMap(size_t shard_count = 64) : shards_(shard_count) {}

    void add(Record key, Record rec) {
        Shard& s = shard_for(key);
        std::lock_guard<std::mutex> g(s.m);
        s.map[std::move(key)].push_back(std::move(rec));
    }

    /// Moves all contents into a plain JoinMap (called once workers quiesce).
    JoinMap drain() {
        JoinMap out;
        for (Shard& s : shards_) {
            for (auto& [k, v] : s.map) out.add_all(k, std::move(v));
            s.map.clear();
        }
        return out;
    }

private:
    struct Shard {
        std::mutex m;
        JoinMap::Map map;
    };
    Shard& shard_for(const Record& key) { return shards_[hash_record(key) % shards_.size()]; }
    std::vector<Shard> shards_;
};

// ---------------------------------------------------------------------------
// Grouped aggregation state
// ---------------------------------------------------------------------------

/// Resolved aggregate descriptors shared by every accumulator of one query.
struct AggLayout {
    std::vector<AggSpec> specs;  // args resolved against the input schema
};

/// Per-group running state for one AggSpec.
struct AggCell {
    int64_t n = 0;   // non-null argument values seen
    int64_t isum = 0;
    double fsum = 0.0;
    Value extreme;   // current min/max, Null until first value
};

/// Per-group accumulator used by Seq, P, PU, CG (under the entry lock), and the
/// fused backend. Accumulation order is row arrival order.
struct GroupAccumulator {
    int64_t rows = 0;
    std::vector<AggCell> cells;

    explicit GroupAccumulator(const AggLayout& layout) : cells(layout.specs.size()) {}

    void accumulate(const AggLayout& layout, RowView rec);
    /// Key-wise combination; exact for Count/Sum(Int)/Min/Max, order-sensitive for float sums.
    void merge(const AggLayout& layout, const GroupAccumulator& other);
    /// Appends finalized aggregate values (Avg = sum/count; empty Min/Max/Sum = Null).
    void finalize(const AggLayout& layout, Record& out) const;
};

class SpinLock {
public:
    void lock() {
        while (flag_.test_and_set(std::memory_order_acquire)) {}
    }
    void unlock() { flag_.clear(std::memory_order_release); }

private:
    std::atomic_flag flag_ = ATOMIC_FLAG_INIT;
};

inline uint64_t double_bits(double d) {
    uint64_t b;
    std::memcpy(&b, &d, sizeof(b));
    return b;
}
inline double bits_double(uint64_t b) {
    double d;
    std::memcpy(&d, &b, sizeof(d));
    return d;
}

/// Lock-free accumulator for the CGCC strategy: integer counts and sums use
/// fetch-add, float sums and numeric extremes use compare-and-swap retry loops.
/// Text extremes fall back to a tiny spin lock (no atomic cell fits a string).
struct AtomicAggCell {
    std::atomic<int64_t> n{0};
    std::atomic<int64_t> isum{0};
    std::atomic<uint64_t> fsum_bits{double_bits(0.0)};
    std::atomic<int64_t> ext_i{0};
    std::atomic<uint64_t> ext_f{double_bits(0.0)};
    SpinLock text_lock;
    std::string ext_text;
    bool ext_text_set = false;

    void add_float(double v) {
        uint64_t cur = fsum_bits.load(std::memory_order_relaxed);
        while (!fsum_bits.compare_exchange_weak(cur, double_bits(bits_double(cur) + v),
                                                std::memory_order_relaxed)) {
        }
    }
    void min_int(int64_t v) {
        int64_t cur = ext_i.load(std::memory_order_relaxed);
        while (v < cur && !ext_i.compare_exchange_weak(cur, v, std::memory_order_relaxed)) {}
    }
    void max_int(int64_t v) {
        int64_t cur = ext_i.load(std::memory_order_relaxed);
        while (v > cur && !ext_i.compare_exchange_weak(cur, v, std::memory_order_relaxed)) {}
    }
    void min_float(double v) {
        uint64_t cur = ext_f.load(std::memory_order_relaxed);
        while (v < bits_double(cur) &&
               !ext_f.compare_exchange_weak(cur, double_bits(v), std::memory_order_relaxed)) {
        }
    }
    void max_float(double v) {
        uint64_t cur = ext_f.load(std::memory_order_relaxed);
        while (v > bits_double(cur) &&
               !ext_f.compare_exchange_weak(cur, double_bits(v), std::memory_order_relaxed)) {
        }
    }
};

struct AtomicGroupAccumulator {
    std::atomic<int64_t> rows{0};
    std::vector<AtomicAggCell> cells;

    explicit AtomicGroupAccumulator(const AggLayout& layout);

    void accumulate(const AggLayout& layout, RowView rec);
    /// Snapshot into finalized values; callers run this after all workers quiesce.
    void finalize(const AggLayout& layout, Record& out) const;
};

// ---------------------------------------------------------------------------
// Shared concurrent maps (CG / CGCC terminals, shared distinct sets)
// ---------------------------------------------------------------------------

/// Striped hash map from key record to Entry. Lookup/insert holds a shard lock
/// briefly; returned entry pointers stay valid for the map's lifetime.
template <typename Entry>
class ConcurrentKeyMap {
public:
    explicit ConcurrentKeyMap(size_t shard_count = 64) : shards_(shard_count) {}

    template <typename Make>
    Entry& get_or_create(const Record& key, Make&& make) {
        Shard& s = shards_[hash_record(key) % shards_.size()];
        std::lock_guard<std::mutex> g(s.m);
        auto it = s.map.find(key);
        if (it == s.map.end()) it = s.map.emplace(key, make()).first;
        return *it->second;
    }

    /// Single-threaded iteration once workers quiesce.
    template <typename F>
    void for_each(F&& f) {
        for (Shard& s : shards_) {
            for (auto& [k, e] : s.map) f(k, *e);
        }
    }

    size_t size() const {
        size_t n = 0;
        for (const Shard& s : shards_) n += s.map.size();
        return n;
    }

private:
    struct Shard {
        std::mutex m;
        std::unordered_map<Record, std::unique_ptr<Entry>, RecordHash, RecordEq> map;
    };
    std::vector<Shard> shards_;
};

/// Concurrent set of records; insert returns true on first insertion.
class SharedRecordSet {
public:
    explicit SharedRecordSet(size_t shard_count = 64) : shards_(shard_count) {}

    bool insert(const Record& r) {
        Shard& s = shards_[hash_record(r) % shards_.size()];
        std::lock_guard<std::mutex> g(s.m);
        return s.set.insert(r).second;
    }

private:
    struct Shard {
        std::mutex m;
        std::unordered_set<Record, RecordHash, RecordEq> set;
    };
    std::vector<Shard> shards_;
};

// ---------------------------------------------------------------------------
// Parallel chunk runner
// ---------------------------------------------------------------------------

/// Runs fn(chunk_index, begin, end) over [0, n) split into chunk_size pieces,
/// on `workers` threads pulling chunks from a shared counter. Rethrows the
/// first worker exception after all threads quiesce.
void parallel_chunks(size_t n, size_t chunk_size, unsigned workers,
                     const std::function<void(size_t, size_t, size_t)>& fn);

size_t chunk_count(size_t n, size_t chunk_size);

}  // namespace varq
