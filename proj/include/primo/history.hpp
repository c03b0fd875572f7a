#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <queue>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "primo/assert.hpp"
#include "primo/ids.hpp"
#include "primo/record.hpp"
#include "primo/time.hpp"

namespace primo {

enum class AbortReason : std::uint8_t {
    None = 0,
    LockConflict,          // NO_WAIT conflict
    Die,                   // WAIT_DIE
    ReadValidationFailed,  // OCC validation
    KeyNotFound,
    CrashRollback,
    EpochAbort,
};

inline const char* abort_reason_name(AbortReason r) {
    switch (r) {
        case AbortReason::None: return "none";
        case AbortReason::LockConflict: return "lock_conflict";
        case AbortReason::Die: return "die";
        case AbortReason::ReadValidationFailed: return "read_validation_failed";
        case AbortReason::KeyNotFound: return "key_not_found";
        case AbortReason::CrashRollback: return "crash_rollback";
        case AbortReason::EpochAbort: return "epoch_abort";
    }
    return "?";
}

// One observed read: the version tag identifies the write (or the initial
// version) whose value the transaction saw.
struct ReadObs {
    Key key;
    LogicalTimestamp version;
    friend bool operator==(const ReadObs&, const ReadObs&) = default;
};

struct WriteObs {
    Key key;
    Value value;
    friend bool operator==(const WriteObs&, const WriteObs&) = default;
};

// One transaction attempt, as recorded by the run. Committed means the
// engine decided commit; released means the result reached the client (a
// crash can roll back committed-but-unreleased attempts).
struct TraceTxn {
    std::uint64_t client_id = 0;
    TransactionId tid;
    PartitionId coordinator = 0;
    bool distributed = false;
    bool committed = false;
    bool released = false;
    AbortReason abort_reason = AbortReason::None;
    LogicalTimestamp commit_ts;
    std::vector<ReadObs> reads;
    std::vector<WriteObs> writes;
    std::vector<PartitionId> partitions;
    std::uint32_t read_roundtrips = 0;    // awaited request/reply pairs for reads
    std::uint32_t dummy_roundtrips = 0;   // standalone dummy-read roundtrips
    std::uint32_t prepare_roundtrips = 0; // 2PC prepare/vote pairs
    std::uint32_t install_oneways = 0;    // fire-and-forget installs
    std::uint32_t decision_oneways = 0;   // 2PC decisions
    SimTime submit = 0;
    SimTime finish = 0;   // commit decision / abort time
    SimTime release = 0;  // result returned to the client
};

struct HistoryTrace {
    std::vector<TraceTxn> txns;

    std::vector<const TraceTxn*> released_committed() const {
        std::vector<const TraceTxn*> out;
        for (const TraceTxn& t : txns)
            if (t.committed && t.released) out.push_back(&t);
        return out;
    }
};

// ---------------------------------------------------------------------------
// Serializability checking. Two independent routes, both of which must pass:
//
//  (a) timestamp replay: committed transactions are replayed in commit-
//      timestamp order against the initial state; every read must observe
//      the version produced by the latest preceding write, and the end state
//      must equal the actual final state. Transactions sharing a timestamp
//      value are replayed as a group in an order consistent with their
//      read-from relations (a reader may share its timestamp value with the
//      writer it read from; the writer must replay first).
//
//  (b) dependency graph: wr/ww/rw edges from the version observations must
//      form an acyclic graph.
// ---------------------------------------------------------------------------

struct CheckResult {
    bool ok = true;
    std::string detail;

    static CheckResult fail(std::string why) { return CheckResult{false, std::move(why)}; }
};

namespace checker_detail {

struct StateCell {
    LogicalTimestamp version;
    Value value;
};

inline std::map<Key, StateCell> state_from_store(const Store& s) {
    std::map<Key, StateCell> out;
    for (const auto& [k, rec] : s.all()) out[k] = StateCell{rec.version, rec.value};
    return out;
}

}  // namespace checker_detail

inline CheckResult check_replay(const Store& initial, const Store& final_state,
                                std::vector<const TraceTxn*> committed) {
    using checker_detail::StateCell;
    auto state = checker_detail::state_from_store(initial);

    std::sort(committed.begin(), committed.end(), [](const TraceTxn* a, const TraceTxn* b) {
        if (a->commit_ts != b->commit_ts) return a->commit_ts < b->commit_ts;
        return a->tid < b->tid;
    });

    std::size_t i = 0;
    while (i < committed.size()) {
        std::size_t j = i;
        while (j < committed.size() && committed[j]->commit_ts.value == committed[i]->commit_ts.value) ++j;

        // group [i, j): same timestamp value
        std::map<Key, std::size_t> group_writer;
        for (std::size_t g = i; g < j; ++g)
            for (const WriteObs& w : committed[g]->writes) {
                auto [it, fresh] = group_writer.emplace(w.key, g);
                if (!fresh)
                    return CheckResult::fail("two writers of " + w.key.str() + " share timestamp value " +
                                             std::to_string(committed[g]->commit_ts.value));
            }

        // order within the group: writer before the readers of its version,
        // reader of the pre-group version before the group writer of that key
        std::vector<std::vector<std::size_t>> succ(j - i);
        std::vector<int> indeg(j - i, 0);
        auto add_edge = [&](std::size_t from, std::size_t to) {
            succ[from - i].push_back(to - i);
            ++indeg[to - i];
        };
        for (std::size_t g = i; g < j; ++g) {
            for (const ReadObs& r : committed[g]->reads) {
                auto st = state.find(r.key);
                if (st == state.end()) return CheckResult::fail("read of unknown key " + r.key.str());
                auto gw = group_writer.find(r.key);
                if (gw != group_writer.end() && gw->second != g) {
                    if (r.version == committed[gw->second]->commit_ts)
                        add_edge(gw->second, g);
                    else if (r.version == st->second.version)
                        add_edge(g, gw->second);
                    else
                        return CheckResult::fail(committed[g]->tid.str() + " read " + r.key.str() +
                                                 " version " + r.version.str() +
                                                 " which is neither the preceding nor the same-timestamp write");
                } else if (r.version != st->second.version) {
                    return CheckResult::fail(committed[g]->tid.str() + " read " + r.key.str() + " version " +
                                             r.version.str() + " but the latest preceding write is " +
                                             st->second.version.str());
                }
            }
        }
        // Kahn with a deterministic head choice
        std::priority_queue<std::pair<LogicalTimestamp, std::size_t>,
                            std::vector<std::pair<LogicalTimestamp, std::size_t>>, std::greater<>>
            ready;
        for (std::size_t g = i; g < j; ++g)
            if (indeg[g - i] == 0) ready.emplace(committed[g]->commit_ts, g);
        std::size_t done = 0;
        while (!ready.empty()) {
            std::size_t g = ready.top().second;
            ready.pop();
            ++done;
            for (const WriteObs& w : committed[g]->writes)
                state[w.key] = StateCell{committed[g]->commit_ts, w.value};
            for (std::size_t s : succ[g - i])
                if (--indeg[s] == 0) ready.emplace(committed[s + i]->commit_ts, s + i);
        }
        if (done != j - i)
            return CheckResult::fail("read-from relations among transactions at timestamp value " +
                                     std::to_string(committed[i]->commit_ts.value) + " form a cycle");
        i = j;
    }

    for (const auto& [k, rec] : final_state.all()) {
        auto it = state.find(k);
        if (it == state.end()) return CheckResult::fail("final state has unknown key " + k.str());
        if (it->second.version != rec.version || it->second.value != rec.value)
            return CheckResult::fail("replayed state diverges at " + k.str() + ": replay has version " +
                                     it->second.version.str() + " value '" + it->second.value +
                                     "', final state has " + rec.version.str() + " '" + rec.value + "'");
    }
    return {};
}

inline CheckResult check_dependency_graph(const Store& initial, std::vector<const TraceTxn*> committed) {
    std::sort(committed.begin(), committed.end(), [](const TraceTxn* a, const TraceTxn* b) {
        if (a->commit_ts != b->commit_ts) return a->commit_ts < b->commit_ts;
        return a->tid < b->tid;
    });

    // version chains per key: initial version, then writers in ts order
    struct ChainEntry {
        LogicalTimestamp version;
        std::int64_t writer;  // -1 for the initial version
    };
    std::map<Key, std::vector<ChainEntry>> chains;
    for (const auto& [k, rec] : initial.all()) chains[k].push_back({rec.version, -1});
    for (std::size_t t = 0; t < committed.size(); ++t)
        for (const WriteObs& w : committed[t]->writes) {
            auto& chain = chains[w.key];
            if (!chain.empty() && chain.back().version == committed[t]->commit_ts)
                return CheckResult::fail("duplicate version " + committed[t]->commit_ts.str() + " of " +
                                         w.key.str());
            chain.push_back({committed[t]->commit_ts, static_cast<std::int64_t>(t)});
        }

    std::vector<std::set<std::size_t>> succ(committed.size());
    auto add_edge = [&](std::int64_t from, std::int64_t to) {
        if (from < 0 || from == to) return;
        succ[static_cast<std::size_t>(from)].insert(static_cast<std::size_t>(to));
    };
    // ww edges along each chain
    for (const auto& [k, chain] : chains)
        for (std::size_t v = 1; v + 1 < chain.size(); ++v) add_edge(chain[v].writer, chain[v + 1].writer);
    // wr and rw edges from observations
    for (std::size_t t = 0; t < committed.size(); ++t) {
        for (const ReadObs& r : committed[t]->reads) {
            auto ch = chains.find(r.key);
            if (ch == chains.end()) return CheckResult::fail("read of unknown key " + r.key.str());
            const auto& chain = ch->second;
            std::size_t pos = chain.size();
            for (std::size_t v = 0; v < chain.size(); ++v)
                if (chain[v].version == r.version) {
                    pos = v;
                    break;
                }
            if (pos == chain.size())
                return CheckResult::fail(committed[t]->tid.str() + " observed version " + r.version.str() +
                                         " of " + r.key.str() + " which no committed write produced");
            add_edge(chain[pos].writer, static_cast<std::int64_t>(t));                     // wr
            if (pos + 1 < chain.size()) add_edge(static_cast<std::int64_t>(t), chain[pos + 1].writer);  // rw
        }
    }

    // cycle detection: iterative three-color DFS
    enum : std::uint8_t { White, Grey, Black };
    std::vector<std::uint8_t> color(committed.size(), White);
    std::vector<std::size_t> parent(committed.size(), SIZE_MAX);
    for (std::size_t root = 0; root < committed.size(); ++root) {
        if (color[root] != White) continue;
        std::vector<std::pair<std::size_t, std::set<std::size_t>::iterator>> stack;
        color[root] = Grey;
        stack.emplace_back(root, succ[root].begin());
        while (!stack.empty()) {
            auto& [node, it] = stack.back();
            if (it == succ[node].end()) {
                color[node] = Black;
                stack.pop_back();
                continue;
            }
            std::size_t next = *it;
            ++it;
            if (color[next] == White) {
                color[next] = Grey;
                parent[next] = node;
                stack.emplace_back(next, succ[next].begin());
            } else if (color[next] == Grey) {
                std::ostringstream os;
                os << "dependency cycle: " << committed[next]->tid.str();
                for (std::size_t n = node; n != next && n != SIZE_MAX; n = parent[n])
                    os << " <- " << committed[n]->tid.str();
                os << " <- " << committed[next]->tid.str();
                return CheckResult::fail(os.str());
            }
        }
    }
    return {};
}

inline CheckResult check_serializable(const Store& initial, const Store& final_state,
                                      const HistoryTrace& trace) {
    auto committed = trace.released_committed();
    CheckResult a = check_replay(initial, final_state, committed);
    if (!a.ok) return CheckResult::fail("replay: " + a.detail);
    CheckResult b = check_dependency_graph(initial, committed);
    if (!b.ok) return CheckResult::fail("dependency-graph: " + b.detail);
    return {};
}

}  // namespace primo
