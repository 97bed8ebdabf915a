#include "varq/fused.hpp"

#include <algorithm>
#include <unordered_set>

namespace varq {

FusedProgram compile_fused(const PlanPtr& validated) {
    // Reuse the pipeline translation with filter fusion on (inherent to loops);
    // flat vs multi emission does not exist here, the probe is a direct loop.
    GenOptions opt;
    opt.fuse_filters = true;
    opt.multi_emit_join = false;
    opt.strategy = Strategy::Seq;
    Pipeline p = compile(validated, opt);
    FusedProgram f;
    f.units = std::move(p.units);
    f.slot_count = p.slot_count;
    f.result_schema = std::move(p.result_schema);
    f.result_ordering = p.result_ordering;
    return f;
}

namespace {

struct SortElem {
    Record rec;
    uint64_t ord;
    Record keys;
};

/// Per-run state for the stateful operations of one unit.
struct UnitState {
    const PipelineUnit* unit;
    const std::vector<JoinMap>* joinmaps;
    // indexed by stage position
    std::vector<std::unique_ptr<std::unordered_set<Record, RecordHash, RecordEq>>> distinct;
    std::vector<int64_t> counters;  // limit remaining / skip remaining
    // terminal state
    std::vector<std::pair<Record, GroupAccumulator>> group_entries;
    std::unordered_map<Record, size_t, RecordHash, RecordEq> group_index;
    JoinMap build;
    std::vector<Record> out;
    std::vector<Record>* collect_override = nullptr;  // set while filling a sort buffer
    bool done = false;  // set when a limit is exhausted

    explicit UnitState(const PipelineUnit& u, const std::vector<JoinMap>& jm) : unit(&u), joinmaps(&jm) {
        distinct.resize(u.stages.size());
        counters.resize(u.stages.size(), 0);
        for (size_t i = 0; i < u.stages.size(); ++i) {
            const StageDesc& s = u.stages[i];
            if (s.kind == StageKind::Distinct) {
                distinct[i] = std::make_unique<std::unordered_set<Record, RecordHash, RecordEq>>();
            } else if (s.kind == StageKind::Limit || s.kind == StageKind::Skip) {
                counters[i] = s.count;
            }
        }
        if (u.terminal.kind == TerminalKind::GroupBy && u.terminal.group_keys.empty()) {
            group_index.emplace(Record{}, 0);
            group_entries.emplace_back(Record{}, GroupAccumulator(u.terminal.aggs));
        }
    }

    void terminal_accept(Record&& rec) {
        if (collect_override) {
            collect_override->push_back(std::move(rec));
            return;
        }
        const Terminal& t = unit->terminal;
        switch (t.kind) {
            case TerminalKind::Collect:
                out.push_back(std::move(rec));
                break;
            case TerminalKind::BuildJoinMap: {
                Record key;
                key.reserve(t.build_keys.size());
                for (const ExprPtr& e : t.build_keys) key.push_back(eval(*e, rec));
                build.add(std::move(key), std::move(rec));
                break;
            }
            case TerminalKind::GroupBy: {
                Record key;
                key.reserve(t.group_keys.size());
                for (const ExprPtr& e : t.group_keys) key.push_back(eval(*e, rec));
                auto it = group_index.find(key);
                if (it == group_index.end()) {
                    group_entries.emplace_back(key, GroupAccumulator(t.aggs));
                    it = group_index.emplace(std::move(key), group_entries.size() - 1).first;
                }
                group_entries[it->second].second.accumulate(t.aggs, rec);
                break;
            }
        }
    }

    /// Pushes one record through stages [i, end) and into the terminal when
    /// `end` is the last stage. Direct calls only: the per-element work of the
    /// whole segment lives in this one call tree.
    void push(size_t i, size_t end, Record&& rec) {
        while (i < end) {
            const StageDesc& s = unit->stages[i];
            switch (s.kind) {
                case StageKind::Filter:
                case StageKind::FusedFilter: {
                    for (const ExprPtr& p : s.predicates) {
                        Value v = eval(*p, rec);
                        if (v.is_null() || !v.as_bool()) return;
                    }
                    ++i;
                    continue;
                }
                case StageKind::Map: {
                    Record mapped;
                    mapped.reserve(s.exprs.size());
                    for (const ExprPtr& e : s.exprs) mapped.push_back(eval(*e, rec));
                    rec = std::move(mapped);
                    ++i;
                    continue;
                }
                case StageKind::ProbeJoin: {
                    Record key;
                    key.reserve(s.probe_keys.size());
                    for (const ExprPtr& e : s.probe_keys) key.push_back(eval(*e, rec));
                    const JoinMap& map = (*joinmaps)[s.slot];
                    const std::vector<Record>* matches = map.find(key);
                    switch (s.join_kind) {
                        case JoinKind::Semi:
                            if (!matches) return;
                            ++i;
                            continue;
                        case JoinKind::Anti:
                            if (matches) return;
                            ++i;
                            continue;
                        case JoinKind::Left:
                            if (!matches) {
                                Record padded;
                                padded.reserve(s.build_width + rec.size());
                                for (size_t k = 0; k < s.build_width; ++k) padded.push_back(Value::null());
                                for (Value& v : rec) padded.push_back(std::move(v));
                                push(i + 1, end, std::move(padded));
                                return;
                            }
                            break;
                        case JoinKind::Inner:
                            if (!matches) return;
                            break;
                    }
                    // direct inner loop over the match list
                    for (const Record& b : *matches) {
                        if (done) return;
                        Record joined;
                        joined.reserve(b.size() + rec.size());
                        for (const Value& v : b) joined.push_back(v);
                        for (const Value& v : rec) joined.push_back(v);
                        push(i + 1, end, std::move(joined));
                    }
                    return;
                }
                case StageKind::Distinct:
                    if (!distinct[i]->insert(rec).second) return;
                    ++i;
                    continue;
                case StageKind::Limit:
                    if (counters[i] <= 0) {
                        done = true;
                        return;
                    }
                    --counters[i];
                    if (counters[i] == 0) done = true;  // stop the source loop after this row
                    ++i;
                    continue;
                case StageKind::Skip:
                    if (counters[i] > 0) {
                        --counters[i];
                        return;
                    }
                    ++i;
                    continue;
                case StageKind::SortBuffer:
                    throw Error("sort stage inside a fused segment");
            }
        }
        terminal_accept(std::move(rec));
    }
};

}  // namespace

ResultSet run_fused(const FusedProgram& program, const Database& db) {
    std::vector<std::vector<Record>> buffers(program.slot_count);
    std::vector<JoinMap> joinmaps(program.slot_count);
    std::vector<Record> result;

    for (const PipelineUnit& u : program.units) {
        UnitState st(u, joinmaps);
        const TableData* table = u.table_source ? &db.table(u.table) : nullptr;
        std::vector<Record>* src = u.table_source ? nullptr : &buffers[u.src_slot];

        std::vector<Record> cur;
        bool use_cur = false;
        for (size_t si = 0; si < u.segments.size(); ++si) {
            const Segment& seg = u.segments[si];
            size_t n = use_cur ? cur.size() : (u.table_source ? table->row_count() : src->size());
            bool last = !seg.has_barrier;

            if (last) {
                // driving loop feeding the terminal
                for (size_t r = 0; r < n && !st.done; ++r) {
                    Record rec = use_cur ? std::move(cur[r])
                                         : (u.table_source ? Record(table->row(r).begin(), table->row(r).end())
                                                           : std::move((*src)[r]));
                    try {
                        st.push(seg.begin, seg.end, std::move(rec));
                    } catch (const EvalError& e) {
                        throw EvalError(std::string(e.what()) + " (row " + std::to_string(r) + " of " +
                                        (u.table_source ? u.table : "intermediate result") + ")");
                    }
                }
                break;
            }

            // barrier phase: materialize a sorted (and limited) buffer
            const StageDesc& barrier = u.stages[seg.end];
            if (barrier.kind != StageKind::SortBuffer) {
                throw Error("unexpected fused barrier stage");  // limit/skip stay inline when sequential
            }
            std::vector<Record> collected;
            st.collect_override = &collected;
            for (size_t r = 0; r < n && !st.done; ++r) {
                Record rec = use_cur ? std::move(cur[r])
                                     : (u.table_source ? Record(table->row(r).begin(), table->row(r).end())
                                                       : std::move((*src)[r]));
                st.push(seg.begin, seg.end, std::move(rec));
            }
            st.collect_override = nullptr;
            std::vector<SortElem> buf;
            buf.reserve(collected.size());
            for (size_t r = 0; r < collected.size(); ++r) {
                Record kv;
                kv.reserve(barrier.sort_keys.size());
                for (const SortKey& k : barrier.sort_keys) kv.push_back(eval(*k.expr, collected[r]));
                buf.push_back({std::move(collected[r]), r, std::move(kv)});
            }
            auto less = [&](const SortElem& a, const SortElem& b) {
                for (size_t k = 0; k < barrier.sort_keys.size(); ++k) {
                    int c = compare_values(a.keys[k], b.keys[k]);
                    if (c != 0) return barrier.sort_keys[k].desc ? c > 0 : c < 0;
                }
                return a.ord < b.ord;
            };
            std::sort(buf.begin(), buf.end(), less);
            size_t from = std::min<size_t>(buf.size(), static_cast<size_t>(barrier.sort_skip));
            size_t to = barrier.sort_limit < 0
                            ? buf.size()
                            : std::min<size_t>(buf.size(), from + static_cast<size_t>(barrier.sort_limit));
            cur.clear();
            cur.reserve(to - from);
            for (size_t r = from; r < to; ++r) cur.push_back(std::move(buf[r].rec));
            use_cur = true;
            st.done = false;  // counters downstream of the barrier start fresh
        }

        // deliver terminal output
        std::vector<Record>* dest = u.terminal.out_slot < 0 ? &result : &buffers[u.terminal.out_slot];
        switch (u.terminal.kind) {
            case TerminalKind::Collect:
                *dest = std::move(st.out);
                break;
            case TerminalKind::BuildJoinMap:
                st.build.seal();
                joinmaps[u.terminal.out_slot] = std::move(st.build);
                break;
            case TerminalKind::GroupBy: {
                dest->clear();
                dest->reserve(st.group_entries.size());
                for (auto& [key, acc] : st.group_entries) {
                    Record rec;
                    rec.reserve(key.size() + u.terminal.aggs.specs.size());
                    for (const Value& v : key) rec.push_back(v);
                    acc.finalize(u.terminal.aggs, rec);
                    dest->push_back(std::move(rec));
                }
                break;
            }
        }
    }
    return ResultSet{program.result_schema, std::move(result), program.result_ordering};
}

ResultSet run_plan_fused(const PlanPtr& validated, const Database& db) {
    return run_fused(compile_fused(validated), db);
}

}  // namespace varq
