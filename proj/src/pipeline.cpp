#include "varq/pipeline.hpp"

#include <algorithm>
#include <sstream>

namespace varq {

// ---------------------------------------------------------------------------
// compile
// ---------------------------------------------------------------------------

namespace {

struct StreamHead {
    bool table_source = false;
    std::string table;
    int src_slot = -1;
    std::vector<StageDesc> stages;
};

struct Compiler {
    explicit Compiler(const GenOptions& options) : opt(options) {}

    const GenOptions& opt;
    std::vector<PipelineUnit> units;
    size_t slots = 0;

    StreamHead stream(const PlanPtr& n) {
        switch (n->kind) {
            case PlanKind::Scan: {
                StreamHead h;
                h.table_source = true;
                h.table = n->table;
                return h;
            }
            case PlanKind::Filter: {
                StreamHead h = stream(n->children[0]);
                if (opt.fuse_filters) {
                    // adjacent Filter nodes fuse into one stage as well
                    if (!h.stages.empty() && h.stages.back().kind == StageKind::FusedFilter) {
                        for (const auto& p : n->predicates) h.stages.back().predicates.push_back(p);
                    } else {
                        StageDesc s;
                        s.kind = StageKind::FusedFilter;
                        s.predicates = n->predicates;
                        h.stages.push_back(std::move(s));
                    }
                } else {
                    for (const auto& p : n->predicates) {
                        StageDesc s;
                        s.kind = StageKind::Filter;
                        s.predicates = {p};
                        h.stages.push_back(std::move(s));
                    }
                }
                return h;
            }
            case PlanKind::Project: {
                StreamHead h = stream(n->children[0]);
                StageDesc s;
                s.kind = StageKind::Map;
                for (const auto& ne : n->projections) s.exprs.push_back(ne.expr);
                h.stages.push_back(std::move(s));
                return h;
            }
            case PlanKind::Join: {
                int slot = static_cast<int>(slots++);
                StreamHead bh = stream(n->children[0]);
                PipelineUnit bu;
                bu.table_source = bh.table_source;
                bu.table = bh.table;
                bu.src_slot = bh.src_slot;
                bu.stages = std::move(bh.stages);
                bu.terminal.kind = TerminalKind::BuildJoinMap;
                bu.terminal.out_slot = slot;
                bu.terminal.build_keys = n->build_keys;
                bu.out_schema = n->children[0]->schema;
                units.push_back(std::move(bu));

                StreamHead h = stream(n->children[1]);
                StageDesc s;
                s.kind = StageKind::ProbeJoin;
                s.slot = slot;
                s.join_kind = n->join_kind;
                s.probe_keys = n->probe_keys;
                s.multi_emit = opt.multi_emit_join;
                s.build_width = n->children[0]->schema.size();
                h.stages.push_back(std::move(s));
                return h;
            }
            case PlanKind::Sort: {
                StreamHead h = stream(n->children[0]);
                StageDesc s;
                s.kind = StageKind::SortBuffer;
                s.sort_keys = n->sort_keys;
                h.stages.push_back(std::move(s));
                return h;
            }
            case PlanKind::Limit: {
                StreamHead h = stream(n->children[0]);
                if (!h.stages.empty() && h.stages.back().kind == StageKind::SortBuffer &&
                    h.stages.back().sort_limit < 0) {
                    h.stages.back().sort_limit = n->count;  // ordered semantics after sort
                } else {
                    StageDesc s;
                    s.kind = StageKind::Limit;
                    s.count = n->count;
                    h.stages.push_back(std::move(s));
                }
                return h;
            }
            case PlanKind::Skip: {
                StreamHead h = stream(n->children[0]);
                if (!h.stages.empty() && h.stages.back().kind == StageKind::SortBuffer &&
                    h.stages.back().sort_limit < 0 && h.stages.back().sort_skip == 0) {
                    h.stages.back().sort_skip = n->count;
                } else {
                    StageDesc s;
                    s.kind = StageKind::Skip;
                    s.count = n->count;
                    h.stages.push_back(std::move(s));
                }
                return h;
            }
            case PlanKind::Distinct: {
                StreamHead h = stream(n->children[0]);
                StageDesc s;
                s.kind = StageKind::Distinct;
                h.stages.push_back(std::move(s));
                return h;
            }
            case PlanKind::GroupAggregate: {
                StreamHead h = stream(n->children[0]);
                int slot = static_cast<int>(slots++);
                PipelineUnit gu;
                gu.table_source = h.table_source;
                gu.table = h.table;
                gu.src_slot = h.src_slot;
                gu.stages = std::move(h.stages);
                gu.terminal.kind = TerminalKind::GroupBy;
                gu.terminal.out_slot = slot;
                for (const auto& k : n->group_keys) gu.terminal.group_keys.push_back(k.expr);
                gu.terminal.aggs.specs = n->aggs;
                gu.out_schema = n->schema;
                units.push_back(std::move(gu));

                StreamHead next;
                next.src_slot = slot;
                return next;
            }
        }
        throw Error("unreachable plan kind");
    }
};

void compute_segments(PipelineUnit& u, Strategy strategy) {
    bool parallel = strategy != Strategy::Seq;
    bool ordered = strategy == Strategy::Seq || strategy == Strategy::P;
    u.segments.clear();
    size_t begin = 0;
    for (size_t i = 0; i < u.stages.size(); ++i) {
        StageKind k = u.stages[i].kind;
        bool barrier = false;
        if (k == StageKind::SortBuffer) barrier = true;
        else if (k == StageKind::Distinct && parallel && ordered) barrier = true;
        else if ((k == StageKind::Limit || k == StageKind::Skip) && parallel) barrier = true;
        if (barrier) {
            u.segments.push_back({begin, i, true, ordered});
            begin = i + 1;
            if (k == StageKind::SortBuffer) ordered = true;  // sort re-imposes encounter order
        }
    }
    u.segments.push_back({begin, u.stages.size(), false, ordered});
}

bool plan_has_group_or_distinct(const PipelineUnit& u) {
    if (u.terminal.kind == TerminalKind::GroupBy) return true;
    for (const auto& s : u.stages) {
        if (s.kind == StageKind::Distinct) return true;
    }
    return false;
}

}  // namespace

Pipeline compile(const PlanPtr& plan, const GenOptions& options) {
    if (!plan->validated) throw ValidateError("compile requires a validated plan");
    if (options.chunk_size == 0) throw ConfigError("chunk_size must be positive");
    Pipeline p;
    p.options = options;
    p.strategy = options.strategy;
    p.result_schema = plan->schema;
    p.result_ordering = ordering_of(plan);

    Compiler c{options};
    StreamHead root = c.stream(plan);
    PipelineUnit final_unit;
    final_unit.table_source = root.table_source;
    final_unit.table = root.table;
    final_unit.src_slot = root.src_slot;
    final_unit.stages = std::move(root.stages);
    final_unit.terminal.kind = TerminalKind::Collect;
    final_unit.terminal.out_slot = -1;
    final_unit.out_schema = plan->schema;
    c.units.push_back(std::move(final_unit));

    p.units = std::move(c.units);
    p.slot_count = c.slots;

    if (options.strategy == Strategy::CG || options.strategy == Strategy::CGCC) {
        bool has = false;
        for (const auto& u : p.units) has = has || plan_has_group_or_distinct(u);
        if (!has) {
            p.strategy = Strategy::PU;
            p.notice = std::string(strategy_name(options.strategy)) +
                       " requires a grouped aggregation or distinct; running as pu";
        }
    }
    for (auto& u : p.units) {
        bool build_seq = options.sequential_build && u.terminal.kind == TerminalKind::BuildJoinMap;
        u.strategy = build_seq ? Strategy::Seq : p.strategy;
        compute_segments(u, u.strategy);
    }
    return p;
}

// ---------------------------------------------------------------------------
// probe emission (shared by flat-emit and multi-emit stages)
// ---------------------------------------------------------------------------

namespace {

Record concat_build_probe(const Record& build, const Record& probe) {
    Record out;
    out.reserve(build.size() + probe.size());
    for (const Value& v : build) out.push_back(v);
    for (const Value& v : probe) out.push_back(v);
    return out;
}

}  // namespace

void probe_emit(const Record& probe_rec, const Record& key, const JoinMap& map, JoinKind kind,
                bool mode_multi, size_t build_width, const std::function<void(Record&&)>& emitter) {
    const std::vector<Record>* matches = map.find(key);
    switch (kind) {
        case JoinKind::Semi:
            if (matches) emitter(Record(probe_rec));
            return;
        case JoinKind::Anti:
            if (!matches) emitter(Record(probe_rec));
            return;
        case JoinKind::Left:
            if (!matches) {
                Record out;
                out.reserve(build_width + probe_rec.size());
                for (size_t i = 0; i < build_width; ++i) out.push_back(Value::null());
                for (const Value& v : probe_rec) out.push_back(v);
                emitter(std::move(out));
                return;
            }
            break;
        case JoinKind::Inner:
            if (!matches) return;
            break;
    }
    if (mode_multi) {
        // mapMulti style: hand each joined record to the emitter as it is formed
        for (const Record& b : *matches) emitter(concat_build_probe(b, probe_rec));
    } else {
        // flatMap style: materialize the nested sequence, then flatten it
        std::vector<Record> nested;
        nested.reserve(matches->size());
        for (const Record& b : *matches) nested.push_back(concat_build_probe(b, probe_rec));
        for (Record& r : nested) emitter(std::move(r));
    }
}

// ---------------------------------------------------------------------------
// execution
// ---------------------------------------------------------------------------

namespace {

struct Elem {
    Record rec;
    uint64_t ord;
};

struct SortElem {
    Record rec;
    uint64_t ord;
    Record keys;
};

/// Push-based consumer; stages forward to their downstream sink, giving one
/// indirect call per element per stage.
struct RowSink {
    virtual ~RowSink() = default;
    virtual void accept(Record&& rec, uint64_t ord) = 0;
    virtual bool full() const { return false; }
};

struct FilterSink final : RowSink {
    const Expr* pred;
    RowSink* down;
    FilterSink(const Expr* p, RowSink* d) : pred(p), down(d) {}
    void accept(Record&& rec, uint64_t ord) override {
        Value v = eval(*pred, rec);
        if (!v.is_null() && v.as_bool()) down->accept(std::move(rec), ord);
    }
    bool full() const override { return down->full(); }
};

struct FusedFilterSink final : RowSink {
    const std::vector<ExprPtr>* preds;
    RowSink* down;
    FusedFilterSink(const std::vector<ExprPtr>* p, RowSink* d) : preds(p), down(d) {}
    void accept(Record&& rec, uint64_t ord) override {
        // left-to-right short-circuit conjunction in a single stage
        for (const ExprPtr& p : *preds) {
            Value v = eval(*p, rec);
            if (v.is_null() || !v.as_bool()) return;
        }
        down->accept(std::move(rec), ord);
    }
    bool full() const override { return down->full(); }
};

struct MapSink final : RowSink {
    const std::vector<ExprPtr>* exprs;
    RowSink* down;
    MapSink(const std::vector<ExprPtr>* e, RowSink* d) : exprs(e), down(d) {}
    void accept(Record&& rec, uint64_t ord) override {
        Record out;
        out.reserve(exprs->size());
        for (const ExprPtr& e : *exprs) out.push_back(eval(*e, rec));
        down->accept(std::move(out), ord);
    }
    bool full() const override { return down->full(); }
};

struct ProbeSink final : RowSink {
    const StageDesc* desc;
    const JoinMap* map;
    RowSink* down;
    ProbeSink(const StageDesc* s, const JoinMap* m, RowSink* d) : desc(s), map(m), down(d) {}
    void accept(Record&& rec, uint64_t ord) override {
        Record key;
        key.reserve(desc->probe_keys.size());
        for (const ExprPtr& e : desc->probe_keys) key.push_back(eval(*e, rec));
        probe_emit(rec, key, *map, desc->join_kind, desc->multi_emit, desc->build_width,
                   [&](Record&& out) { down->accept(std::move(out), ord); });
    }
    bool full() const override { return down->full(); }
};

struct DistinctLocalSink final : RowSink {
    std::unordered_set<Record, RecordHash, RecordEq> seen;
    RowSink* down;
    explicit DistinctLocalSink(RowSink* d) : down(d) {}
    void accept(Record&& rec, uint64_t ord) override {
        if (seen.insert(rec).second) down->accept(std::move(rec), ord);
    }
    bool full() const override { return down->full(); }
};

struct DistinctSharedSink final : RowSink {
    SharedRecordSet* set;
    RowSink* down;
    DistinctSharedSink(SharedRecordSet* s, RowSink* d) : set(s), down(d) {}
    void accept(Record&& rec, uint64_t ord) override {
        if (set->insert(rec)) down->accept(std::move(rec), ord);
    }
    bool full() const override { return down->full(); }
};

struct LimitSink final : RowSink {
    int64_t remaining;
    RowSink* down;
    LimitSink(int64_t n, RowSink* d) : remaining(n), down(d) {}
    void accept(Record&& rec, uint64_t ord) override {
        if (remaining > 0) {
            --remaining;
            down->accept(std::move(rec), ord);
        }
    }
    bool full() const override { return remaining <= 0 || down->full(); }
};

struct SkipSink final : RowSink {
    int64_t to_skip;
    RowSink* down;
    SkipSink(int64_t n, RowSink* d) : to_skip(n), down(d) {}
    void accept(Record&& rec, uint64_t ord) override {
        if (to_skip > 0) {
            --to_skip;
            return;
        }
        down->accept(std::move(rec), ord);
    }
    bool full() const override { return down->full(); }
};

// --- local collectors (per task or per sequential run) ---

struct CollectSink final : RowSink {
    std::vector<Elem> out;
    void accept(Record&& rec, uint64_t ord) override { out.push_back({std::move(rec), ord}); }
};

struct SortCollectSink final : RowSink {
    const std::vector<SortKey>* keys;
    std::vector<SortElem> out;
    explicit SortCollectSink(const std::vector<SortKey>* k) : keys(k) {}
    void accept(Record&& rec, uint64_t ord) override {
        Record kv;
        kv.reserve(keys->size());
        for (const SortKey& k : *keys) kv.push_back(eval(*k.expr, rec));
        out.push_back({std::move(rec), ord, std::move(kv)});
    }
};

struct OrderedDistinctSink final : RowSink {
    std::unordered_set<Record, RecordHash, RecordEq> seen;  // insertion-ordered via `out`
    std::vector<Elem> out;
    void accept(Record&& rec, uint64_t ord) override {
        if (seen.insert(rec).second) out.push_back({std::move(rec), ord});
    }
};

/// Insertion-ordered grouped accumulation (Seq, and the task-local maps of P/PU).
struct LocalGroups {
    const Terminal* term;
    std::unordered_map<Record, size_t, RecordHash, RecordEq> index;
    std::vector<std::pair<Record, GroupAccumulator>> entries;

    explicit LocalGroups(const Terminal* t) : term(t) {
        if (t->group_keys.empty()) {
            // scalar aggregate: the single group exists even for empty input
            index.emplace(Record{}, 0);
            entries.emplace_back(Record{}, GroupAccumulator(t->aggs));
        }
    }

    GroupAccumulator& at(Record&& key) {
        auto it = index.find(key);
        if (it == index.end()) {
            entries.emplace_back(key, GroupAccumulator(term->aggs));
            it = index.emplace(std::move(key), entries.size() - 1).first;
        }
        return entries[it->second].second;
    }

    void merge(LocalGroups&& other) {
        for (auto& [key, acc] : other.entries) {
            auto it = index.find(key);
            if (it == index.end()) {
                entries.emplace_back(key, std::move(acc));
                index.emplace(std::move(key), entries.size() - 1);
            } else {
                entries[it->second].second.merge(term->aggs, acc);
            }
        }
    }
};

struct GroupLocalSink final : RowSink {
    LocalGroups groups;
    explicit GroupLocalSink(const Terminal* t) : groups(t) {}
    void accept(Record&& rec, uint64_t) override {
        Record key;
        key.reserve(groups.term->group_keys.size());
        for (const ExprPtr& e : groups.term->group_keys) key.push_back(eval(*e, rec));
        groups.at(std::move(key)).accumulate(groups.term->aggs, rec);
    }
};

struct CGEntry {
    std::mutex m;
    GroupAccumulator acc;
    explicit CGEntry(const AggLayout& layout) : acc(layout) {}
};

struct GroupCGSink final : RowSink {
    const Terminal* term;
    ConcurrentKeyMap<CGEntry>* map;
    GroupCGSink(const Terminal* t, ConcurrentKeyMap<CGEntry>* m) : term(t), map(m) {}
    void accept(Record&& rec, uint64_t) override {
        Record key;
        key.reserve(term->group_keys.size());
        for (const ExprPtr& e : term->group_keys) key.push_back(eval(*e, rec));
        CGEntry& entry = map->get_or_create(key, [&] { return std::make_unique<CGEntry>(term->aggs); });
        // per-entry mutual exclusion around the non-thread-safe accumulator
        std::lock_guard<std::mutex> g(entry.m);
        entry.acc.accumulate(term->aggs, rec);
    }
};

struct GroupCGCCSink final : RowSink {
    const Terminal* term;
    ConcurrentKeyMap<AtomicGroupAccumulator>* map;
    GroupCGCCSink(const Terminal* t, ConcurrentKeyMap<AtomicGroupAccumulator>* m) : term(t), map(m) {}
    void accept(Record&& rec, uint64_t) override {
        Record key;
        key.reserve(term->group_keys.size());
        for (const ExprPtr& e : term->group_keys) key.push_back(eval(*e, rec));
        AtomicGroupAccumulator& acc =
            map->get_or_create(key, [&] { return std::make_unique<AtomicGroupAccumulator>(term->aggs); });
        acc.accumulate(term->aggs, rec);
    }
};

struct BuildLocalSink final : RowSink {
    const Terminal* term;
    JoinMap map;
    explicit BuildLocalSink(const Terminal* t) : term(t) {}
    void accept(Record&& rec, uint64_t) override {
        Record key;
        key.reserve(term->build_keys.size());
        for (const ExprPtr& e : term->build_keys) key.push_back(eval(*e, rec));
        map.add(std::move(key), std::move(rec));
    }
};

struct BuildSharedSink final : RowSink {
    const Terminal* term;
    ConcurrentJoinMap* map;
    BuildSharedSink(const Terminal* t, ConcurrentJoinMap* m) : term(t), map(m) {}
    void accept(Record&& rec, uint64_t) override {
        Record key;
        key.reserve(term->build_keys.size());
        for (const ExprPtr& e : term->build_keys) key.push_back(eval(*e, rec));
        map->add(std::move(key), std::move(rec));
    }
};

// --- chain construction ---

struct SegmentShared {
    // shared state for in-chain stateful stages under unordered parallel runs
    std::map<size_t, std::unique_ptr<SharedRecordSet>> distinct_sets;
    std::string source_label;  // for row provenance in sequential error reports
};

struct Chain {
    std::vector<std::unique_ptr<RowSink>> nodes;
    RowSink* head = nullptr;
};

Chain build_chain(std::span<const StageDesc> stages, size_t stage_base, RowSink* terminal,
                  const std::vector<JoinMap>& joinmaps, Strategy strategy, SegmentShared& shared) {
    Chain chain;
    RowSink* down = terminal;
    for (size_t i = stages.size(); i-- > 0;) {
        const StageDesc& s = stages[i];
        std::unique_ptr<RowSink> node;
        switch (s.kind) {
            case StageKind::Filter:
                node = std::make_unique<FilterSink>(s.predicates[0].get(), down);
                break;
            case StageKind::FusedFilter:
                node = std::make_unique<FusedFilterSink>(&s.predicates, down);
                break;
            case StageKind::Map:
                node = std::make_unique<MapSink>(&s.exprs, down);
                break;
            case StageKind::ProbeJoin:
                node = std::make_unique<ProbeSink>(&s, &joinmaps[s.slot], down);
                break;
            case StageKind::Distinct:
                if (strategy == Strategy::Seq) {
                    node = std::make_unique<DistinctLocalSink>(down);
                } else {
                    node = std::make_unique<DistinctSharedSink>(shared.distinct_sets.at(stage_base + i).get(), down);
                }
                break;
            case StageKind::Limit:
                node = std::make_unique<LimitSink>(s.count, down);
                break;
            case StageKind::Skip:
                node = std::make_unique<SkipSink>(s.count, down);
                break;
            case StageKind::SortBuffer:
                throw Error("sort stage inside a segment chain");
        }
        chain.nodes.push_back(std::move(node));
        down = chain.nodes.back().get();
    }
    chain.head = down;
    return chain;
}

// --- segment execution ---

struct RunCtx {
    const Pipeline& pipeline;
    const Database& db;
    std::vector<std::vector<Record>> buffers;
    std::vector<JoinMap> joinmaps;
};

using Fetch = std::function<Elem(size_t)>;

/// Runs one segment over n source elements into per-task sinks created by
/// `make_sink`; completed task sinks are combined with `merge` (in chunk order
/// when `ordered`, in completion order otherwise). Returns the surviving sink.
template <typename SinkT>
SinkT execute_into(const RunCtx& ctx, Strategy strategy, size_t n, const Fetch& fetch,
                   std::span<const StageDesc> stages, size_t stage_base, SegmentShared& shared, bool ordered,
                   const std::function<SinkT()>& make_sink,
                   const std::function<void(SinkT&, SinkT&&)>& merge) {
    if (strategy == Strategy::Seq) {
        SinkT sink = make_sink();
        Chain chain = build_chain(stages, stage_base, &sink, ctx.joinmaps, strategy, shared);
        for (size_t i = 0; i < n; ++i) {
            if (chain.head->full()) break;
            Elem e = fetch(i);
            try {
                chain.head->accept(std::move(e.rec), e.ord);
            } catch (const EvalError& err) {
                throw EvalError(std::string(err.what()) + " (row " + std::to_string(i) + " of " +
                                shared.source_label + ")");
            }
        }
        return sink;
    }

    const GenOptions& opt = ctx.pipeline.options;
    size_t chunks = chunk_count(n, opt.chunk_size);
    if (ordered) {
        // task results merged pairwise in chunk order
        std::vector<std::unique_ptr<SinkT>> results(chunks);
        parallel_chunks(n, opt.chunk_size, opt.effective_workers(), [&](size_t c, size_t b, size_t e) {
            auto sink = std::make_unique<SinkT>(make_sink());
            Chain chain = build_chain(stages, stage_base, sink.get(), ctx.joinmaps, strategy, shared);
            for (size_t i = b; i < e; ++i) {
                Elem el = fetch(i);
                chain.head->accept(std::move(el.rec), el.ord);
            }
            results[c] = std::move(sink);
        });
        SinkT out = make_sink();
        for (auto& r : results) merge(out, std::move(*r));
        return out;
    }
    // unordered: merge into the shared result as tasks complete
    SinkT out = make_sink();
    std::mutex merge_mutex;
    parallel_chunks(n, opt.chunk_size, opt.effective_workers(), [&](size_t, size_t b, size_t e) {
        SinkT sink = make_sink();
        Chain chain = build_chain(stages, stage_base, &sink, ctx.joinmaps, strategy, shared);
        for (size_t i = b; i < e; ++i) {
            Elem el = fetch(i);
            chain.head->accept(std::move(el.rec), el.ord);
        }
        std::lock_guard<std::mutex> g(merge_mutex);
        merge(out, std::move(sink));
    });
    return out;
}

std::vector<Elem> collect_segment(const RunCtx& ctx, Strategy strategy, size_t n, const Fetch& fetch,
                                  std::span<const StageDesc> stages, size_t stage_base,
                                  SegmentShared& shared, bool ordered) {
    CollectSink sink = execute_into<CollectSink>(
        ctx, strategy, n, fetch, stages, stage_base, shared, ordered, [] { return CollectSink(); },
        [](CollectSink& a, CollectSink&& b) {
            for (auto& e : b.out) a.out.push_back(std::move(e));
        });
    return std::move(sink.out);
}

void parallel_sort(std::vector<SortElem>& buf, const std::vector<SortKey>& keys, unsigned workers) {
    auto less = [&keys](const SortElem& a, const SortElem& b) {
        for (size_t i = 0; i < keys.size(); ++i) {
            int c = compare_values(a.keys[i], b.keys[i]);
            if (c != 0) return keys[i].desc ? c > 0 : c < 0;
        }
        return a.ord < b.ord;  // ties broken by source encounter order
    };
    size_t n = buf.size();
    if (workers <= 1 || n < 4096) {
        std::sort(buf.begin(), buf.end(), less);
        return;
    }
    // sort ranges in parallel, then merge pairwise
    size_t ranges = workers;
    std::vector<size_t> bounds;
    for (size_t r = 0; r <= ranges; ++r) bounds.push_back(n * r / ranges);
    parallel_chunks(ranges, 1, workers, [&](size_t, size_t b, size_t) {
        std::sort(buf.begin() + bounds[b], buf.begin() + bounds[b + 1], less);
    });
    for (size_t width = 1; width < ranges; width *= 2) {
        for (size_t r = 0; r + width <= ranges; r += 2 * width) {
            size_t mid = bounds[r + width];
            size_t end = bounds[std::min(ranges, r + 2 * width)];
            std::inplace_merge(buf.begin() + bounds[r], buf.begin() + mid, buf.begin() + end, less);
        }
    }
}

std::vector<Record> emit_local_groups(LocalGroups&& groups) {
    std::vector<Record> out;
    out.reserve(groups.entries.size());
    for (auto& [key, acc] : groups.entries) {
        Record rec;
        rec.reserve(key.size() + groups.term->aggs.specs.size());
        for (const Value& v : key) rec.push_back(v);
        acc.finalize(groups.term->aggs, rec);
        out.push_back(std::move(rec));
    }
    return out;
}

void run_unit(const PipelineUnit& u, RunCtx& ctx, std::vector<Record>& result) {
    const TableData* table = u.table_source ? &ctx.db.table(u.table) : nullptr;
    std::vector<Record>* src_buffer = u.table_source ? nullptr : &ctx.buffers[u.src_slot];
    std::vector<Elem> cur;
    bool use_cur = false;

    Strategy strategy = u.strategy;
    // shared distinct sets for unordered in-chain distinct stages
    SegmentShared shared;
    shared.source_label = u.table_source ? u.table : "intermediate result";
    if (strategy != Strategy::Seq) {
        for (size_t i = 0; i < u.stages.size(); ++i) {
            if (u.stages[i].kind == StageKind::Distinct) {
                bool is_barrier = false;
                for (const auto& seg : u.segments) is_barrier = is_barrier || (seg.has_barrier && seg.end == i);
                if (!is_barrier) shared.distinct_sets.emplace(i, std::make_unique<SharedRecordSet>());
            }
        }
    }

    for (size_t si = 0; si < u.segments.size(); ++si) {
        const Segment& seg = u.segments[si];
        std::span<const StageDesc> stages(u.stages.data() + seg.begin, seg.end - seg.begin);
        size_t n = use_cur ? cur.size() : (u.table_source ? table->row_count() : src_buffer->size());
        Fetch fetch;
        if (use_cur) {
            fetch = [&cur](size_t i) { return Elem{std::move(cur[i].rec), cur[i].ord}; };
        } else if (u.table_source) {
            fetch = [table](size_t i) {
                RowView row = table->row(i);
                return Elem{Record(row.begin(), row.end()), i};
            };
        } else {
            fetch = [src_buffer](size_t i) { return Elem{std::move((*src_buffer)[i]), i}; };
        }

        if (seg.has_barrier) {
            const StageDesc& barrier = u.stages[seg.end];
            std::vector<Elem> next;
            switch (barrier.kind) {
                case StageKind::SortBuffer: {
                    SortCollectSink sink = execute_into<SortCollectSink>(
                        ctx, strategy, n, fetch, stages, seg.begin, shared, seg.ordered,
                        [&] { return SortCollectSink(&barrier.sort_keys); },
                        [](SortCollectSink& a, SortCollectSink&& b) {
                            for (auto& e : b.out) a.out.push_back(std::move(e));
                        });
                    std::vector<SortElem> buf = std::move(sink.out);
                    parallel_sort(buf, barrier.sort_keys,
                                  strategy == Strategy::Seq ? 1 : ctx.pipeline.options.effective_workers());
                    // sequential skip/limit over the sorted buffer
                    size_t from = std::min<size_t>(buf.size(), static_cast<size_t>(barrier.sort_skip));
                    size_t to = barrier.sort_limit < 0
                                    ? buf.size()
                                    : std::min<size_t>(buf.size(), from + static_cast<size_t>(barrier.sort_limit));
                    next.reserve(to - from);
                    for (size_t i = from; i < to; ++i) next.push_back({std::move(buf[i].rec), i - from});
                    break;
                }
                case StageKind::Distinct: {
                    // ordered parallel distinct: insertion-ordered per-task sets
                    // merged pairwise in chunk order -> first-encounter order
                    OrderedDistinctSink sink = execute_into<OrderedDistinctSink>(
                        ctx, strategy, n, fetch, stages, seg.begin, shared, seg.ordered,
                        [] { return OrderedDistinctSink(); },
                        [](OrderedDistinctSink& a, OrderedDistinctSink&& b) {
                            for (auto& e : b.out) {
                                if (a.seen.insert(e.rec).second) a.out.push_back(std::move(e));
                            }
                        });
                    next = std::move(sink.out);
                    for (size_t i = 0; i < next.size(); ++i) next[i].ord = i;
                    break;
                }
                case StageKind::Limit:
                case StageKind::Skip: {
                    std::vector<Elem> all =
                        collect_segment(ctx, strategy, n, fetch, stages, seg.begin, shared, seg.ordered);
                    size_t from = 0, to = all.size();
                    if (barrier.kind == StageKind::Skip) from = std::min<size_t>(to, static_cast<size_t>(barrier.count));
                    else to = std::min<size_t>(to, static_cast<size_t>(barrier.count));
                    next.reserve(to - from);
                    for (size_t i = from; i < to; ++i) next.push_back({std::move(all[i].rec), i - from});
                    break;
                }
                default:
                    throw Error("unexpected barrier stage");
            }
            cur = std::move(next);
            use_cur = true;
            continue;
        }

        // final segment: feed the unit terminal
        switch (u.terminal.kind) {
            case TerminalKind::Collect: {
                std::vector<Elem> out =
                    collect_segment(ctx, strategy, n, fetch, stages, seg.begin, shared, seg.ordered);
                std::vector<Record>& dest =
                    u.terminal.out_slot < 0 ? result : ctx.buffers[u.terminal.out_slot];
                dest.clear();
                dest.reserve(out.size());
                for (auto& e : out) dest.push_back(std::move(e.rec));
                break;
            }
            case TerminalKind::BuildJoinMap: {
                JoinMap& dest = ctx.joinmaps[u.terminal.out_slot];
                if (strategy == Strategy::CG || strategy == Strategy::CGCC) {
                    // build runs under the shared-map mechanics of the strategy
                    ConcurrentJoinMap cmap;
                    execute_into<BuildSharedSink>(
                        ctx, strategy, n, fetch, stages, seg.begin, shared, /*ordered=*/false,
                        [&] { return BuildSharedSink(&u.terminal, &cmap); },
                        [](BuildSharedSink&, BuildSharedSink&&) {});
                    dest = cmap.drain();
                } else {
                    BuildLocalSink sink = execute_into<BuildLocalSink>(
                        ctx, strategy, n, fetch, stages, seg.begin, shared, seg.ordered,
                        [&] { return BuildLocalSink(&u.terminal); },
                        [](BuildLocalSink& a, BuildLocalSink&& b) {
                            for (auto& [k, v] : b.map.raw()) a.map.add_all(k, std::move(v));
                        });
                    dest = std::move(sink.map);
                }
                dest.seal();  // no mutation once probing starts
                break;
            }
            case TerminalKind::GroupBy: {
                std::vector<Record> emitted;
                if (strategy == Strategy::CG) {
                    ConcurrentKeyMap<CGEntry> map;
                    if (u.terminal.group_keys.empty()) {
                        map.get_or_create(Record{}, [&] { return std::make_unique<CGEntry>(u.terminal.aggs); });
                    }
                    execute_into<GroupCGSink>(
                        ctx, strategy, n, fetch, stages, seg.begin, shared, /*ordered=*/false,
                        [&] { return GroupCGSink(&u.terminal, &map); }, [](GroupCGSink&, GroupCGSink&&) {});
                    map.for_each([&](const Record& key, CGEntry& e) {
                        Record rec;
                        rec.reserve(key.size() + u.terminal.aggs.specs.size());
                        for (const Value& v : key) rec.push_back(v);
                        e.acc.finalize(u.terminal.aggs, rec);
                        emitted.push_back(std::move(rec));
                    });
                } else if (strategy == Strategy::CGCC) {
                    ConcurrentKeyMap<AtomicGroupAccumulator> map;
                    if (u.terminal.group_keys.empty()) {
                        map.get_or_create(Record{},
                                          [&] { return std::make_unique<AtomicGroupAccumulator>(u.terminal.aggs); });
                    }
                    execute_into<GroupCGCCSink>(
                        ctx, strategy, n, fetch, stages, seg.begin, shared, /*ordered=*/false,
                        [&] { return GroupCGCCSink(&u.terminal, &map); }, [](GroupCGCCSink&, GroupCGCCSink&&) {});
                    map.for_each([&](const Record& key, AtomicGroupAccumulator& acc) {
                        Record rec;
                        rec.reserve(key.size() + u.terminal.aggs.specs.size());
                        for (const Value& v : key) rec.push_back(v);
                        acc.finalize(u.terminal.aggs, rec);
                        emitted.push_back(std::move(rec));
                    });
                } else {
                    GroupLocalSink sink = execute_into<GroupLocalSink>(
                        ctx, strategy, n, fetch, stages, seg.begin, shared, seg.ordered,
                        [&] { return GroupLocalSink(&u.terminal); },
                        [](GroupLocalSink& a, GroupLocalSink&& b) { a.groups.merge(std::move(b.groups)); });
                    emitted = emit_local_groups(std::move(sink.groups));
                }
                std::vector<Record>& dest =
                    u.terminal.out_slot < 0 ? result : ctx.buffers[u.terminal.out_slot];
                dest = std::move(emitted);
                break;
            }
        }
    }
}

}  // namespace

ResultSet run(const Pipeline& pipeline, const Database& db) {
    RunCtx ctx{pipeline, db, {}, {}};
    ctx.buffers.resize(pipeline.slot_count);
    ctx.joinmaps.resize(pipeline.slot_count);
    std::vector<Record> result;
    for (const PipelineUnit& u : pipeline.units) run_unit(u, ctx, result);
    return ResultSet{pipeline.result_schema, std::move(result), pipeline.result_ordering};
}

ResultSet run_plan(const PlanPtr& validated, const Database& db, const GenOptions& options) {
    return run(compile(validated, options), db);
}

// ---------------------------------------------------------------------------
// rendering
// ---------------------------------------------------------------------------

namespace {

std::string exprs_to_string(const std::vector<ExprPtr>& exprs) {
    std::string out = "[";
    for (size_t i = 0; i < exprs.size(); ++i) {
        if (i) out += ", ";
        out += expr_to_string(*exprs[i]);
    }
    return out + "]";
}

void render_stage(const StageDesc& s, std::ostringstream& out) {
    switch (s.kind) {
        case StageKind::Filter:
            out << "    .filter(" << expr_to_string(*s.predicates[0]) << ")\n";
            break;
        case StageKind::FusedFilter: {
            out << "    .filter(";
            for (size_t i = 0; i < s.predicates.size(); ++i) {
                if (i) out << " && ";
                out << expr_to_string(*s.predicates[i]);
            }
            out << ")  // fused\n";
            break;
        }
        case StageKind::Map: {
            out << "    .map(";
            for (size_t i = 0; i < s.exprs.size(); ++i) {
                if (i) out << ", ";
                out << expr_to_string(*s.exprs[i]);
            }
            out << ")\n";
            break;
        }
        case StageKind::ProbeJoin:
            if (s.multi_emit) {
                out << "    .mapMulti(" << join_kind_name(s.join_kind) << "-probe build[" << s.slot << "] on "
                    << exprs_to_string(s.probe_keys) << ")  // multi-emit\n";
            } else {
                out << "    .flatMap(" << join_kind_name(s.join_kind) << "-probe build[" << s.slot << "] on "
                    << exprs_to_string(s.probe_keys) << ")\n";
            }
            break;
        case StageKind::SortBuffer: {
            out << "    .sorted(";
            for (size_t i = 0; i < s.sort_keys.size(); ++i) {
                if (i) out << ", ";
                out << expr_to_string(*s.sort_keys[i].expr) << (s.sort_keys[i].desc ? " DESC" : " ASC");
            }
            out << ")";
            if (s.sort_skip > 0) out << ".skip(" << s.sort_skip << ")";
            if (s.sort_limit >= 0) out << ".limit(" << s.sort_limit << ")";
            out << "\n";
            break;
        }
        case StageKind::Limit:
            out << "    .limit(" << s.count << ")\n";
            break;
        case StageKind::Skip:
            out << "    .skip(" << s.count << ")\n";
            break;
        case StageKind::Distinct:
            out << "    .distinct()\n";
            break;
    }
}

const char* group_mechanics(Strategy s) {
    switch (s) {
        case Strategy::Seq: return "single map";
        case Strategy::P: return "thread-local maps, ordered merge";
        case Strategy::PU: return "thread-local maps, unordered merge";
        case Strategy::CG: return "concurrent map, per-entry locking";
        case Strategy::CGCC: return "concurrent map, atomic accumulators";
    }
    return "?";
}

}  // namespace

std::string render_pipeline(const Pipeline& p) {
    std::ostringstream out;
    out << "// variant: strategy=" << strategy_name(p.strategy) << " fuse_filters="
        << (p.options.fuse_filters ? "on" : "off") << " multi_emit_join="
        << (p.options.multi_emit_join ? "on" : "off") << "\n";
    if (!p.notice.empty()) out << "// notice: " << p.notice << "\n";
    for (const PipelineUnit& u : p.units) {
        std::string src = u.table_source ? u.table + ".stream()" : "slot[" + std::to_string(u.src_slot) + "].stream()";
        std::string dest = u.terminal.out_slot < 0
                               ? "result"
                               : (u.terminal.kind == TerminalKind::BuildJoinMap
                                      ? "build[" + std::to_string(u.terminal.out_slot) + "]"
                                      : "slot[" + std::to_string(u.terminal.out_slot) + "]");
        out << dest << " = " << src;
        if (p.strategy != Strategy::Seq) {
            out << ".parallel()";
            if (p.strategy != Strategy::P) out << ".unordered()";
        }
        out << "\n";
        for (size_t i = 0; i < u.stages.size(); ++i) {
            render_stage(u.stages[i], out);
            for (const auto& seg : u.segments) {
                if (seg.has_barrier && seg.end == i && u.stages[i].kind == StageKind::SortBuffer) {
                    out << "    // segment boundary: ordered from here\n";
                }
            }
        }
        switch (u.terminal.kind) {
            case TerminalKind::Collect:
                out << "    .collect(toList())\n";
                break;
            case TerminalKind::BuildJoinMap:
                out << "    .collect(toJoinMap(keys = " << exprs_to_string(u.terminal.build_keys) << "))\n";
                break;
            case TerminalKind::GroupBy:
                if (u.terminal.group_keys.empty()) {
                    out << "    .collect(aggregate(";
                } else {
                    out << "    .collect(groupingBy(keys = " << exprs_to_string(u.terminal.group_keys) << ", ";
                }
                for (size_t i = 0; i < u.terminal.aggs.specs.size(); ++i) {
                    const AggSpec& a = u.terminal.aggs.specs[i];
                    if (i) out << ", ";
                    out << agg_func_name(a.func) << "(" << (a.arg ? expr_to_string(*a.arg) : "*") << ")";
                }
                out << "))  // " << group_mechanics(p.strategy) << "\n";
                break;
        }
    }
    return out.str();
}

}  // namespace varq
