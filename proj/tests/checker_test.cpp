#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <vector>

#include "primo/history.hpp"
#include "primo/rng.hpp"

using namespace primo;

namespace {

Key kx{0, 0}, ky{0, 1}, kz{1, 0};

Store initial_store() {
    Store s;
    s.put_initial(kx, "0");
    s.put_initial(ky, "0");
    s.put_initial(kz, "0");
    return s;
}

LogicalTimestamp init_v() { return LogicalTimestamp{}; }

TraceTxn txn(std::uint64_t counter, std::uint64_t ts_value,
             std::vector<ReadObs> reads, std::vector<WriteObs> writes) {
    TraceTxn t;
    t.tid = TransactionId{0, counter};
    t.commit_ts = LogicalTimestamp{ts_value, t.tid};
    t.committed = true;
    t.released = true;
    t.reads = std::move(reads);
    t.writes = std::move(writes);
    return t;
}

Store apply_all(Store s, const std::vector<TraceTxn>& txns) {
    for (const TraceTxn& t : txns)
        for (const WriteObs& w : t.writes) s.install(w.key, w.value, t.commit_ts);
    return s;
}

CheckResult run_check(const std::vector<TraceTxn>& txns, const Store& final_state) {
    HistoryTrace trace;
    trace.txns = txns;
    return check_serializable(initial_store(), final_state, trace);
}

}  // namespace

TEST_CASE("empty history is serializable") {
    CHECK(run_check({}, initial_store()).ok);
}

TEST_CASE("serial chain of rmws is accepted") {
    std::vector<TraceTxn> txns;
    LogicalTimestamp prev = init_v();
    for (std::uint64_t i = 1; i <= 5; ++i) {
        TraceTxn t = txn(i, 10 * i, {{kx, prev}}, {{kx, "v" + std::to_string(i)}});
        prev = t.commit_ts;
        txns.push_back(t);
    }
    CHECK(run_check(txns, apply_all(initial_store(), txns)).ok);
}

TEST_CASE("write skew is rejected") {
    // both read x and y, one writes x, the other writes y, both observe initial
    std::vector<TraceTxn> txns = {
        txn(1, 5, {{kx, init_v()}, {ky, init_v()}}, {{kx, "a"}}),
        txn(2, 6, {{kx, init_v()}, {ky, init_v()}}, {{ky, "b"}}),
    };
    CheckResult r = run_check(txns, apply_all(initial_store(), txns));
    CHECK_FALSE(r.ok);
}

TEST_CASE("write skew at equal timestamp values is rejected") {
    std::vector<TraceTxn> txns = {
        txn(1, 5, {{kx, init_v()}, {ky, init_v()}}, {{kx, "a"}}),
        txn(2, 5, {{kx, init_v()}, {ky, init_v()}}, {{ky, "b"}}),
    };
    CheckResult r = run_check(txns, apply_all(initial_store(), txns));
    CHECK_FALSE(r.ok);
}

TEST_CASE("lost update is rejected") {
    TraceTxn t1 = txn(1, 5, {{kx, init_v()}}, {{kx, "a"}});
    TraceTxn t2 = txn(2, 6, {{kx, init_v()}}, {{kx, "b"}});  // read initial, not t1's write
    std::vector<TraceTxn> txns = {t1, t2};
    CheckResult r = run_check(txns, apply_all(initial_store(), txns));
    CHECK_FALSE(r.ok);
}

TEST_CASE("three-transaction dependency cycle is rejected") {
    // T1 reads x0 writes y; T2 reads y0 writes z; T3 reads z0 writes x.
    // rw edges: T1->T... each read observed the initial version while another
    // transaction wrote the next one: T2 -> T1 (y), T3 -> T2 (z), T1 -> T3 (x)
    std::vector<TraceTxn> txns = {
        txn(1, 5, {{kx, init_v()}}, {{ky, "a"}}),
        txn(2, 6, {{ky, init_v()}}, {{kz, "b"}}),
        txn(3, 7, {{kz, init_v()}}, {{kx, "c"}}),
    };
    CheckResult r = run_check(txns, apply_all(initial_store(), txns));
    CHECK_FALSE(r.ok);

    // the dependency-graph route reports the rw cycle explicitly
    std::vector<const TraceTxn*> ptrs;
    for (const TraceTxn& t : txns) ptrs.push_back(&t);
    CheckResult g = check_dependency_graph(initial_store(), ptrs);
    CHECK_FALSE(g.ok);
    CHECK(g.detail.find("cycle") != std::string::npos);
}

TEST_CASE("reader sharing the writer's timestamp value is accepted") {
    // the reader's tiebreak sorts before the writer: the replay must still
    // order the writer first inside the equal-value group
    TraceTxn w = txn(9, 5, {}, {{kx, "w"}});
    TraceTxn r = txn(1, 5, {{kx, w.commit_ts}}, {{ky, "r"}});
    std::vector<TraceTxn> txns = {r, w};
    CHECK(run_check(txns, apply_all(initial_store(), {w, r})).ok);
}

TEST_CASE("rmw observes the version it overwrites") {
    TraceTxn t1 = txn(1, 5, {{kx, init_v()}}, {{kx, "a"}});
    TraceTxn t2 = txn(2, 8, {{kx, t1.commit_ts}}, {{kx, "b"}});
    std::vector<TraceTxn> txns = {t1, t2};
    CHECK(run_check(txns, apply_all(initial_store(), txns)).ok);
}

TEST_CASE("observation of a version nobody committed is rejected") {
    TraceTxn ghost = txn(7, 4, {}, {{kx, "ghost"}});  // never part of the trace
    TraceTxn t = txn(1, 5, {{kx, ghost.commit_ts}}, {});
    CheckResult r = run_check({t}, initial_store());
    CHECK_FALSE(r.ok);
}

TEST_CASE("final state divergence is rejected") {
    TraceTxn t1 = txn(1, 5, {{kx, init_v()}}, {{kx, "a"}});
    Store final_state = initial_store();  // write missing from the final state
    CheckResult r = run_check({t1}, final_state);
    CHECK_FALSE(r.ok);
    CHECK(r.detail.find("diverges") != std::string::npos);
}

TEST_CASE("random serial histories are accepted") {
    Rng rng(99);
    for (int round = 0; round < 50; ++round) {
        Store state = initial_store();
        std::vector<Key> keys = {kx, ky, kz};
        std::vector<TraceTxn> txns;
        std::uint64_t ts = 1;
        for (int i = 0; i < 30; ++i) {
            TraceTxn t;
            t.tid = TransactionId{0, static_cast<std::uint64_t>(i + 1)};
            // occasional ties in the timestamp value, never on writers of one key
            ts += rng.next_below(3);
            t.commit_ts = LogicalTimestamp{ts, t.tid};
            t.committed = t.released = true;
            std::set<std::uint64_t> touched;
            for (std::uint64_t n = 1 + rng.next_below(3); n > 0; --n) {
                Key k = keys[rng.next_below(keys.size())];
                if (!touched.insert(k.id * 7 + k.partition).second) continue;
                t.reads.push_back({k, state.find(k)->version});
                if (rng.next_bool(0.5)) t.writes.push_back({k, "v" + std::to_string(i)});
            }
            // serial execution: install immediately (skip same-value writer collisions)
            bool ok = true;
            for (const WriteObs& w : t.writes)
                if (state.find(w.key)->version.value == t.commit_ts.value) ok = false;
            if (!ok) continue;
            for (const WriteObs& w : t.writes) state.install(w.key, w.value, t.commit_ts);
            txns.push_back(t);
        }
        CheckResult r = run_check(txns, state);
        INFO(r.detail);
        CHECK(r.ok);
    }
}
