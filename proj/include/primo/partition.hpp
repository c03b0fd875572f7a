#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <set>
#include <vector>

#include "primo/ids.hpp"
#include "primo/lock_table.hpp"
#include "primo/log.hpp"
#include "primo/messages.hpp"
#include "primo/metrics.hpp"
#include "primo/record.hpp"
#include "primo/txn.hpp"
#include "primo/watermark.hpp"

namespace primo {

// Server-side state a partition keeps for a transaction coordinated
// elsewhere: which records it locked here, which were normal reads (their
// rts is extended at install), and the progress of a lock phase that may
// park on a waiter queue.
struct ParticipantSession {
    enum class Stage : std::uint8_t { Idle, RemoteRead, DummyBatch, SharedRead, Prepare };

    std::set<Key> locked;          // locks held for the tid here
    std::vector<Key> read_keys;    // normal remote reads served here (exclusive)
    std::vector<Key> shared_keys;  // 2PL shared reads served here

    Stage stage = Stage::Idle;
    PartitionId reply_to = 0;
    Key pending_key;                    // remote-read target
    std::vector<Key> pending_dummies;   // dummy batch being acquired
    std::size_t phase_idx = 0;
    std::vector<DummyAck> acks;

    // 2PC prepare state
    std::vector<KeyValue> prepare_writes;
    std::vector<std::pair<Key, VersionedRecord>> tentative_undo;
    bool installed = false;  // tentative installs applied (pure 2PL)
};

// Pre-image of an installed write, kept until the write can no longer be
// rolled back (its timestamp passes under the released watermark / its epoch
// group-commits).
struct UndoEntry {
    Key key;
    LogicalTimestamp ts;
    VersionedRecord before;
    TransactionId tid;
    std::uint64_t epoch = 0;
};

// A committed-but-unreleased transaction coordinated by this partition.
struct CommittingTxn {
    std::uint64_t client_id = 0;
    TransactionId tid;
    LogicalTimestamp ts;
    SimTime commit_time = 0;
    SimTime submit_time = 0;
    std::uint64_t epoch = 0;
    PartitionId worker_partition = 0;
    std::size_t trace_idx = 0;
    std::vector<PartitionId> write_partitions;  // partitions holding redo entries
};

struct PartitionState {
    PartitionId id = 0;
    std::uint32_t incarnation = 0;
    SimTime crashed_at = 0;

    Store store;
    LockTable locks;
    DurableLog log;
    std::map<std::uint64_t, Store> snapshots;
    std::uint64_t next_snapshot = 0;

    ActiveTxnIndex active;
    WatermarkTable table;
    std::uint64_t last_wp = 0;
    std::uint64_t last_wg = 0;        // monotonicity shadow
    std::uint64_t ts_floor = 0;       // last_wp plus the force-advance offset
    std::uint64_t max_assigned = 0;   // largest commit ts installed/assigned here
    bool tick_armed = false;

    std::deque<UndoEntry> undo;
    std::map<TransactionId, std::int64_t> redo_index;  // durability shadow
    std::map<TransactionId, ParticipantSession> sessions;
    std::map<std::pair<std::uint64_t, TransactionId>, CommittingTxn> committing;

    std::vector<WorkerState> workers;
    std::uint64_t tid_counter = 0;
    bool paused = false;  // epoch barrier or recovery admission pause

    // epoch group commit
    std::uint64_t epoch_now = 1;

    std::vector<WpSample> wp_samples;

    std::uint64_t effective_floor() const { return std::max(last_wp, ts_floor); }
};

}  // namespace primo
