#include "varq/runtime.hpp"

#include <thread>

namespace varq {

void GroupAccumulator::accumulate(const AggLayout& layout, RowView rec) {
    ++rows;
    for (size_t i = 0; i < layout.specs.size(); ++i) {
        const AggSpec& spec = layout.specs[i];
        if (!spec.arg) continue;  // COUNT(*) needs only `rows`
        Value v = eval(*spec.arg, rec);
        if (v.is_null()) continue;
        AggCell& c = cells[i];
        ++c.n;
        switch (spec.func) {
            case AggFunc::Count:
                break;
            case AggFunc::Sum:
            case AggFunc::Avg:
                if (v.type() == ValueType::Int64) c.isum += v.as_int();
                else c.fsum += v.as_double();
                break;
            case AggFunc::Min:
                if (c.extreme.is_null() || compare_values(v, c.extreme) < 0) c.extreme = std::move(v);
                break;
            case AggFunc::Max:
                if (c.extreme.is_null() || compare_values(v, c.extreme) > 0) c.extreme = std::move(v);
                break;
        }
    }
}

void GroupAccumulator::merge(const AggLayout& layout, const GroupAccumulator& other) {
    rows += other.rows;
    for (size_t i = 0; i < cells.size(); ++i) {
        AggCell& a = cells[i];
        const AggCell& b = other.cells[i];
        a.n += b.n;
        a.isum += b.isum;
        a.fsum += b.fsum;
        if (!b.extreme.is_null()) {
            const AggSpec& spec = layout.specs[i];
            if (a.extreme.is_null() ||
                (spec.func == AggFunc::Min ? compare_values(b.extreme, a.extreme) < 0
                                           : compare_values(b.extreme, a.extreme) > 0)) {
                a.extreme = b.extreme;
            }
        }
    }
}

void GroupAccumulator::finalize(const AggLayout& layout, Record& out) const {
    for (size_t i = 0; i < layout.specs.size(); ++i) {
        const AggSpec& spec = layout.specs[i];
        const AggCell& c = cells[i];
        bool int_arg = spec.arg && spec.arg->out_type == ValueType::Int64;
        switch (spec.func) {
            case AggFunc::Count:
                out.push_back(Value(spec.arg ? c.n : rows));
                break;
            case AggFunc::Sum:
                if (c.n == 0) out.push_back(Value::null());
                else if (int_arg) out.push_back(Value(c.isum));
                else out.push_back(Value(c.fsum));
                break;
            case AggFunc::Avg:
                if (c.n == 0) out.push_back(Value::null());
                else {
                    double sum = int_arg ? static_cast<double>(c.isum) : c.fsum;
                    out.push_back(Value(sum / static_cast<double>(c.n)));
                }
                break;
            case AggFunc::Min:
            case AggFunc::Max:
                out.push_back(c.extreme);
                break;
        }
    }
}

AtomicGroupAccumulator::AtomicGroupAccumulator(const AggLayout& layout) : cells(layout.specs.size()) {
    for (size_t i = 0; i < layout.specs.size(); ++i) {
        const AggSpec& spec = layout.specs[i];
        if (spec.func == AggFunc::Min) {
            cells[i].ext_i.store(std::numeric_limits<int64_t>::max(), std::memory_order_relaxed);
            cells[i].ext_f.store(double_bits(std::numeric_limits<double>::infinity()), std::memory_order_relaxed);
        } else if (spec.func == AggFunc::Max) {
            cells[i].ext_i.store(std::numeric_limits<int64_t>::min(), std::memory_order_relaxed);
            cells[i].ext_f.store(double_bits(-std::numeric_limits<double>::infinity()), std::memory_order_relaxed);
        }
    }
}

void AtomicGroupAccumulator::accumulate(const AggLayout& layout, RowView rec) {
    rows.fetch_add(1, std::memory_order_relaxed);
    for (size_t i = 0; i < layout.specs.size(); ++i) {
        const AggSpec& spec = layout.specs[i];
        if (!spec.arg) continue;
        Value v = eval(*spec.arg, rec);
        if (v.is_null()) continue;
        AtomicAggCell& c = cells[i];
        c.n.fetch_add(1, std::memory_order_relaxed);
        switch (spec.func) {
            case AggFunc::Count:
                break;
            case AggFunc::Sum:
            case AggFunc::Avg:
                if (v.type() == ValueType::Int64) c.isum.fetch_add(v.as_int(), std::memory_order_relaxed);
                else c.add_float(v.as_double());
                break;
            case AggFunc::Min:
                switch (v.type()) {
                    case ValueType::Int64: c.min_int(v.as_int()); break;
                    case ValueType::Float64: c.min_float(v.as_double()); break;
                    case ValueType::Date: c.min_int(v.as_date().days); break;
                    default: {
                        std::lock_guard<SpinLock> g(c.text_lock);
                        if (!c.ext_text_set || v.as_text() < c.ext_text) {
                            c.ext_text = v.as_text();
                            c.ext_text_set = true;
                        }
                    }
                }
                break;
            case AggFunc::Max:
                switch (v.type()) {
                    case ValueType::Int64: c.max_int(v.as_int()); break;
                    case ValueType::Float64: c.max_float(v.as_double()); break;
                    case ValueType::Date: c.max_int(v.as_date().days); break;
                    default: {
                        std::lock_guard<SpinLock> g(c.text_lock);
                        if (!c.ext_text_set || v.as_text() > c.ext_text) {
                            c.ext_text = v.as_text();
                            c.ext_text_set = true;
                        }
                    }
                }
                break;
        }
    }
}

void AtomicGroupAccumulator::finalize(const AggLayout& layout, Record& out) const {
    for (size_t i = 0; i < layout.specs.size(); ++i) {
        const AggSpec& spec = layout.specs[i];
        const AtomicAggCell& c = cells[i];
        int64_t n = c.n.load(std::memory_order_relaxed);
        bool int_arg = spec.arg && spec.arg->out_type == ValueType::Int64;
        ValueType arg_type = spec.arg ? spec.arg->out_type : ValueType::Null;
        switch (spec.func) {
            case AggFunc::Count:
                out.push_back(Value(spec.arg ? n : rows.load(std::memory_order_relaxed)));
                break;
            case AggFunc::Sum:
                if (n == 0) out.push_back(Value::null());
                else if (int_arg) out.push_back(Value(c.isum.load(std::memory_order_relaxed)));
                else out.push_back(Value(bits_double(c.fsum_bits.load(std::memory_order_relaxed))));
                break;
            case AggFunc::Avg:
                if (n == 0) out.push_back(Value::null());
                else {
                    double sum = int_arg ? static_cast<double>(c.isum.load(std::memory_order_relaxed))
                                         : bits_double(c.fsum_bits.load(std::memory_order_relaxed));
                    out.push_back(Value(sum / static_cast<double>(n)));
                }
                break;
            case AggFunc::Min:
            case AggFunc::Max:
                if (n == 0) {
                    out.push_back(Value::null());
                } else if (arg_type == ValueType::Int64) {
                    out.push_back(Value(c.ext_i.load(std::memory_order_relaxed)));
                } else if (arg_type == ValueType::Float64) {
                    out.push_back(Value(bits_double(c.ext_f.load(std::memory_order_relaxed))));
                } else if (arg_type == ValueType::Date) {
                    out.push_back(Value(Date{static_cast<int32_t>(c.ext_i.load(std::memory_order_relaxed))}));
                } else {
                    out.push_back(Value(c.ext_text));
                }
                break;
        }
    }
}

size_t chunk_count(size_t n, size_t chunk_size) {
    return n == 0 ? 0 : (n + chunk_size - 1) / chunk_size;
}

void parallel_chunks(size_t n, size_t chunk_size, unsigned workers,
                     const std::function<void(size_t, size_t, size_t)>& fn) {
    size_t chunks = chunk_count(n, chunk_size);
    if (chunks == 0) return;
    if (workers <= 1 || chunks == 1) {
        for (size_t c = 0; c < chunks; ++c) {
            fn(c, c * chunk_size, std::min(n, (c + 1) * chunk_size));
        }
        return;
    }
    std::atomic<size_t> next{0};
    std::atomic<bool> failed{false};
    std::mutex err_mutex;
    std::exception_ptr first_error;
    auto work = [&] {
        while (true) {
            if (failed.load(std::memory_order_relaxed)) return;  // stop early once a task failed
            size_t c = next.fetch_add(1, std::memory_order_relaxed);
            if (c >= chunks) return;
            try {
                fn(c, c * chunk_size, std::min(n, (c + 1) * chunk_size));
            } catch (...) {
                std::lock_guard<std::mutex> g(err_mutex);
                if (!first_error) first_error = std::current_exception();
                failed.store(true, std::memory_order_relaxed);
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    unsigned spawn = std::min<size_t>(workers, chunks);
    pool.reserve(spawn);
    for (unsigned w = 0; w < spawn; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

}  // namespace varq
