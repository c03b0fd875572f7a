#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "primo/cluster.hpp"

using namespace primo;

namespace {

RunConfig cluster_config(std::uint16_t partitions) {
    RunConfig cfg;
    cfg.partitions = partitions;
    cfg.workers = 2;
    cfg.duration = 0;  // scripted
    cfg.workload.keys_per_partition = 64;
    // keep watermarks quiet while the scripted scenario runs, so timestamp
    // assertions see only the transaction's own constraints
    cfg.t_m = sim_units(500);
    return cfg;
}

Key k(PartitionId p, std::uint64_t id) { return Key{p, id}; }

}  // namespace

TEST_CASE("distributed commit: the three-partition worked example") {
    // T reads x(P0), y(P1), z(P2) and updates y=10, z=20. x has wts=1 rts=3;
    // the write targets force ts=5; x.rts extends to 5 and both participants
    // install (10,5,5) / (20,5,5) with one roundtrip + one install each.
    Cluster cl(cluster_config(3));
    cl.seed_record(k(0, 1), "x", 1, 3);
    cl.seed_record(k(1, 1), "y", 2, 4);
    cl.seed_record(k(2, 1), "z", 1, 2);

    Program prog;
    prog.home = 0;
    prog.cmds.push_back(OpRead{k(0, 1)});
    prog.cmds.push_back(OpRead{k(1, 1)});
    prog.cmds.push_back(OpRead{k(2, 1)});
    prog.cmds.push_back(OpWrite{k(1, 1), "10"});
    prog.cmds.push_back(OpWrite{k(2, 1), "20"});
    cl.enqueue_script(0, 0, prog);
    REQUIRE(cl.drain());

    REQUIRE(cl.trace().txns.size() == 1);
    const TraceTxn& t = cl.trace().txns[0];
    REQUIRE(t.committed);
    CHECK(t.released);
    CHECK(t.commit_ts.value == 5);
    CHECK(t.distributed);
    CHECK(t.read_roundtrips == 2);
    CHECK(t.install_oneways == 2);
    CHECK(t.dummy_roundtrips == 0);
    CHECK(t.prepare_roundtrips == 0);

    const VersionedRecord* x = cl.part(0).store.find(k(0, 1));
    CHECK(x->rts.value == 5);
    CHECK(x->wts.value == 1);
    const VersionedRecord* y = cl.part(1).store.find(k(1, 1));
    CHECK(y->value == "10");
    CHECK(y->wts.value == 5);
    CHECK(y->rts.value == 5);
    const VersionedRecord* z = cl.part(2).store.find(k(2, 1));
    CHECK(z->value == "20");
    CHECK(z->wts.value == 5);
    CHECK(z->rts.value == 5);

    // everything unlocked, sessions drained
    for (PartitionId p = 0; p < 3; ++p) {
        CHECK(cl.part(p).locks.empty());
        CHECK(cl.part(p).sessions.empty());
    }
    CHECK(check_serializable(cl.merged_initial(), cl.merged_final(), cl.trace()).ok);
}

TEST_CASE("mode switch verifies prior local reads") {
    // no prior reads: the switch takes no local locks
    Cluster cl(cluster_config(2));
    Program remote_only;
    remote_only.home = 0;
    remote_only.cmds.push_back(OpRead{k(1, 3)});
    cl.enqueue_script(0, 0, remote_only);
    REQUIRE(cl.drain());
    CHECK(cl.trace().txns[0].committed);
    CHECK(cl.part(0).locks.completed_holds() == 0);  // nothing ever locked at home
}

TEST_CASE("mode switch retries directly in distributed mode when a read changed") {
    // worker 1 on P0 overwrites x while worker 0's transaction dawdles before
    // its first remote access; the switch sees the change and restarts
    // distributed, which then succeeds
    Cluster cl(cluster_config(2));
    cl.seed_record(k(0, 1), "x", 1, 1);

    Program slow;
    slow.home = 0;
    slow.cmds.push_back(OpRead{k(0, 1)});
    for (std::uint64_t i = 10; i < 14; ++i) slow.cmds.push_back(OpRead{k(0, i)});
    slow.cmds.push_back(OpRead{k(1, 1)});  // first remote access triggers the switch

    Program fast;
    fast.home = 0;
    fast.cmds.push_back(OpRead{k(0, 1)});
    fast.cmds.push_back(OpWrite{k(0, 1), "x2"});

    cl.enqueue_script(0, 0, slow);
    cl.enqueue_script(0, 1, fast);
    REQUIRE(cl.drain());

    // both clients commit; the slow one needed a second, distributed attempt
    int committed = 0;
    bool retried_distributed = false;
    for (const TraceTxn& t : cl.trace().txns) {
        if (t.committed) ++committed;
        if (!t.committed && t.abort_reason == AbortReason::ReadValidationFailed)
            retried_distributed = true;
    }
    CHECK(committed == 2);
    CHECK(retried_distributed);
    CHECK(cl.counters().attempts == 3);
    CHECK(check_serializable(cl.merged_initial(), cl.merged_final(), cl.trace()).ok);
}

TEST_CASE("watermark adjustment lifts cold remote reads above W_p") {
    Cluster cl(cluster_config(2));
    cl.seed_record(k(1, 1), "v", 3, 3);
    cl.part(1).last_wp = 4;  // participant watermark already at 4

    Program prog;
    prog.home = 0;
    prog.cmds.push_back(OpRead{k(0, 1)});
    prog.cmds.push_back(OpRead{k(1, 1)});
    cl.enqueue_script(0, 0, prog);
    REQUIRE(cl.drain());

    const TraceTxn& t = cl.trace().txns[0];
    REQUIRE(t.committed);
    // the record was lifted to W_p+1 = 5 before the reply, so the reader's
    // timestamp landed above the participant's watermark
    CHECK(t.commit_ts.value == 5);
    const VersionedRecord* y = cl.part(1).store.find(k(1, 1));
    CHECK(y->value == "v");
    CHECK(y->wts.value == 5);
    CHECK(y->rts.value == 5);
    CHECK(y->version.value == 3);  // version identity survives the lift
}

TEST_CASE("watermark adjustment never shrinks an extended interval") {
    // rts may already sit above W_p+1 (a committed reader extended it);
    // the lift raises wts but must leave rts alone, otherwise a later
    // writer could commit under that reader
    Cluster cl(cluster_config(2));
    cl.seed_record(k(1, 1), "v", 3, 6);
    cl.part(1).last_wp = 4;

    Program prog;
    prog.home = 0;
    prog.cmds.push_back(OpRead{k(0, 1)});
    prog.cmds.push_back(OpRead{k(1, 1)});
    cl.enqueue_script(0, 0, prog);
    REQUIRE(cl.drain());
    REQUIRE(cl.trace().txns[0].committed);
    const VersionedRecord* y = cl.part(1).store.find(k(1, 1));
    CHECK(y->wts.value == 5);
    CHECK(y->rts.value == 6);
}

TEST_CASE("hot remote reads are returned unchanged") {
    Cluster cl(cluster_config(2));
    cl.seed_record(k(1, 1), "v", 9, 12);
    cl.part(1).last_wp = 4;
    Program prog;
    prog.home = 0;
    prog.cmds.push_back(OpRead{k(0, 1)});
    prog.cmds.push_back(OpRead{k(1, 1)});
    cl.enqueue_script(0, 0, prog);
    REQUIRE(cl.drain());
    CHECK(cl.part(1).store.find(k(1, 1))->wts.value == 9);
    CHECK(cl.part(1).store.find(k(1, 1))->rts.value == 12);
}

TEST_CASE("junior remote read dies and the abort reaches every participant") {
    Cluster cl(cluster_config(3));

    // blocker from P1 exclusively locks y=k(1,5) and stays busy with a remote
    // read; the victim acquires a higher counter first, reads on P2, then
    // dies at P1 and must fan its abort out to both participants
    Program blocker;
    blocker.home = 1;
    blocker.cmds.push_back(OpRead{k(1, 5)});
    blocker.cmds.push_back(OpRead{k(0, 9)});   // switch: locks k(1,5), long roundtrip
    blocker.cmds.push_back(OpRead{k(0, 10)});  // second roundtrip keeps the lock held

    Program filler;  // burns a tid so the victim is junior to the blocker
    filler.home = 0;
    filler.cmds.push_back(OpRead{k(0, 1)});

    Program victim;
    victim.home = 0;
    victim.cmds.push_back(OpRead{k(0, 2)});
    victim.cmds.push_back(OpRead{k(2, 3)});  // participant P2 first
    victim.cmds.push_back(OpRead{k(1, 5)});  // then the contested key at P1

    cl.enqueue_script(1, 0, blocker);
    cl.enqueue_script(0, 0, filler);
    cl.enqueue_script(0, 0, victim);
    REQUIRE(cl.drain());

    CHECK(cl.counters().aborts[static_cast<std::size_t>(AbortReason::Die)] >= 1);
    // all clients eventually commit (the victim retries after backoff)
    std::map<std::uint64_t, bool> done;
    for (const TraceTxn& t : cl.trace().txns)
        if (t.committed) done[t.client_id] = true;
    CHECK(done.size() == 3);
    for (PartitionId p = 0; p < 3; ++p) {
        CHECK(cl.part(p).locks.empty());
        CHECK(cl.part(p).sessions.empty());
    }
    CHECK(check_serializable(cl.merged_initial(), cl.merged_final(), cl.trace()).ok);
}

TEST_CASE("local blind write locks without reading") {
    Cluster cl(cluster_config(2));
    Program prog;
    prog.home = 0;
    prog.cmds.push_back(OpRead{k(1, 1)});        // remote: distributed mode
    prog.cmds.push_back(OpWrite{k(0, 7), "w"});  // local blind write
    cl.enqueue_script(0, 0, prog);
    REQUIRE(cl.drain());
    const TraceTxn& t = cl.trace().txns[0];
    REQUIRE(t.committed);
    CHECK(t.reads.size() == 1);  // no read observation for the blind target
    CHECK(t.dummy_roundtrips == 0);
    CHECK(cl.part(0).store.find(k(0, 7))->value == "w");
}

TEST_CASE("remote blind write batches with a pending remote read") {
    Cluster cl(cluster_config(2));
    Program prog;
    prog.home = 0;
    prog.cmds.push_back(OpRead{k(0, 1)});
    prog.cmds.push_back(OpWrite{k(1, 7), "w"});  // blind write to P1, deferred
    prog.cmds.push_back(OpRead{k(1, 2)});        // normal read to P1 carries the dummy
    cl.enqueue_script(0, 0, prog);
    REQUIRE(cl.drain());
    const TraceTxn& t = cl.trace().txns[0];
    REQUIRE(t.committed);
    CHECK(t.read_roundtrips == 1);
    CHECK(t.dummy_roundtrips == 0);  // no extra roundtrip
    CHECK(t.install_oneways == 1);
    CHECK(cl.part(1).store.find(k(1, 7))->value == "w");
}

TEST_CASE("remote blind write without a read costs one extra roundtrip") {
    Cluster cl(cluster_config(2));
    Program prog;
    prog.home = 0;
    prog.cmds.push_back(OpRead{k(0, 1)});
    prog.cmds.push_back(OpWrite{k(1, 7), "w"});
    cl.enqueue_script(0, 0, prog);
    REQUIRE(cl.drain());
    const TraceTxn& t = cl.trace().txns[0];
    REQUIRE(t.committed);
    CHECK(t.read_roundtrips == 0);
    CHECK(t.dummy_roundtrips == 1);
    CHECK(t.install_oneways == 1);
    CHECK(cl.part(1).store.find(k(1, 7))->value == "w");
}

TEST_CASE("read-only distributed transaction leaves no state change") {
    Cluster cl(cluster_config(2));
    cl.seed_record(k(1, 1), "v", 2, 2);
    Program prog;
    prog.home = 0;
    prog.cmds.push_back(OpRead{k(0, 1)});
    prog.cmds.push_back(OpRead{k(1, 1)});
    cl.enqueue_script(0, 0, prog);
    REQUIRE(cl.drain());
    const TraceTxn& t = cl.trace().txns[0];
    REQUIRE(t.committed);
    CHECK(t.released);
    CHECK(t.install_oneways == 1);  // empty install is the unlock signal
    CHECK(cl.part(1).store.find(k(1, 1))->value == "v");
    CHECK(cl.part(1).store.find(k(1, 1))->version.value == 2);
    CHECK(cl.part(1).sessions.empty());
    CHECK(cl.part(1).locks.empty());
}

TEST_CASE("abort racing an in-flight reply discards the reply") {
    Cluster cl(cluster_config(3));

    Program blocker;  // holds k(1,5) exclusively for a while
    blocker.home = 1;
    blocker.cmds.push_back(OpRead{k(1, 5)});
    blocker.cmds.push_back(OpRead{k(0, 9)});
    blocker.cmds.push_back(OpRead{k(0, 10)});

    Program filler;
    filler.home = 0;
    filler.cmds.push_back(OpRead{k(0, 1)});

    Program victim;  // two parallel dummy batches: P1 dies, P2 answers ok
    victim.home = 0;
    victim.cmds.push_back(OpRead{k(0, 2)});
    victim.cmds.push_back(OpWrite{k(1, 5), "a"});
    victim.cmds.push_back(OpWrite{k(2, 3), "b"});

    cl.enqueue_script(1, 0, blocker);
    cl.enqueue_script(0, 0, filler);
    cl.enqueue_script(0, 0, victim);
    REQUIRE(cl.drain());
    CHECK(cl.counters().stale_replies >= 1);
    CHECK(check_serializable(cl.merged_initial(), cl.merged_final(), cl.trace()).ok);
}

TEST_CASE("write install for an unknown transaction is a protocol bug") {
    Cluster cl(cluster_config(2));
    MsgWriteInstall bogus;
    bogus.tid = TransactionId{0, 99};
    bogus.ts = LogicalTimestamp{4, bogus.tid};
    cl.net().send(0, 1, bogus);
    CHECK_THROWS_AS(cl.drain(), ProtocolViolation);
}

TEST_CASE("commit phase is conflict-free under contention") {
    RunConfig cfg;
    cfg.partitions = 4;
    cfg.workers = 4;
    cfg.seed = 77;
    cfg.duration = sim_units(600);
    cfg.workload.keys_per_partition = 24;
    cfg.workload.ops_per_txn = 6;
    cfg.workload.read_ratio = 0.5;
    cfg.workload.distributed_ratio = 0.4;
    cfg.workload.zipf_theta = 0.9;
    Cluster cl(cfg);
    cl.run();

    RunMetrics m = cl.metrics();
    CHECK(m.conserved());
    CHECK(m.committed > 50);
    CHECK(m.commit_phase_lock_waits == 0);
    CHECK(m.commit_phase_aborts == 0);
    CHECK(check_serializable(cl.merged_initial(), cl.merged_final(), cl.trace()).ok);

    // message economy: a committed distributed transaction with one read per
    // remote partition costs exactly one roundtrip and one install per
    // participant, and nothing else
    for (const TraceTxn& t : cl.trace().txns) {
        if (!t.committed || !t.distributed || t.dummy_roundtrips > 0) continue;
        std::uint32_t remote = static_cast<std::uint32_t>(t.partitions.size()) - 1;
        CHECK(t.read_roundtrips == remote);
        CHECK(t.install_oneways == remote);
        CHECK(t.prepare_roundtrips == 0);
        CHECK(t.decision_oneways == 0);
    }
}

TEST_CASE("blind-write workload stays conflict-free in the commit phase") {
    RunConfig cfg;
    cfg.partitions = 3;
    cfg.workers = 3;
    cfg.seed = 3;
    cfg.duration = sim_units(400);
    cfg.workload.keys_per_partition = 32;
    cfg.workload.ops_per_txn = 5;
    cfg.workload.read_ratio = 0.4;
    cfg.workload.distributed_ratio = 0.5;
    cfg.workload.blind_write_ratio = 0.5;
    cfg.workload.zipf_theta = 0.8;
    Cluster cl(cfg);
    cl.run();
    RunMetrics m = cl.metrics();
    CHECK(m.conserved());
    CHECK(m.committed > 20);
    CHECK(m.commit_phase_lock_waits == 0);
    CHECK(m.commit_phase_aborts == 0);
    CHECK(check_serializable(cl.merged_initial(), cl.merged_final(), cl.trace()).ok);
}
