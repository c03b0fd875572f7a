#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <vector>

#include "primo/history.hpp"
#include "primo/ids.hpp"
#include "primo/program.hpp"
#include "primo/record.hpp"
#include "primo/rng.hpp"
#include "primo/time.hpp"
#include "primo/workload.hpp"

namespace primo {

enum class TxnMode : std::uint8_t { Local, Distributed };
enum class TxnStatus : std::uint8_t { Running, Committing, Committed, Aborted };

// Observed snapshot of one read: the record's TicToc interval, version tag
// and value at read time.
struct ReadEntry {
    Key key;
    LogicalTimestamp wts, rts, version;
    Value value;
    bool local = true;
};

// What a parked attempt is waiting for; the resume point dispatches on this.
enum class Await : std::uint8_t {
    None,
    LockDistRead,       // local exclusive lock during a distributed read
    LockSwitch,         // lock acquisition during the local->distributed switch
    LockLocalValidate,  // TicToc write-set lock
    LockBlindLocal,     // local dummy lock taken when a blind write is buffered
    LockSharedRead,     // 2PL local shared lock
    LockUpgrade,        // 2PC commit-phase upgrade/acquire
    RemoteRead,         // ReadReply (either protocol family)
    DummyReplies,       // standalone dummy-read batches before commit
    Votes,              // 2PC votes
    CommitFlush,        // synchronous-logging commit flush
    Backoff,
};

struct PendingWrite {
    Key key;
    Value value;
};

// Per-attempt transaction context at the coordinator.
struct Attempt {
    TransactionId tid;
    std::uint64_t client_id = 0;
    PartitionId home = 0;
    std::uint16_t worker = 0;
    std::uint64_t guard = 0;  // worker attempt epoch; stale events are ignored

    TxnMode mode = TxnMode::Local;
    TxnStatus status = TxnStatus::Running;
    std::size_t pc = 0;
    Value last_read;

    std::vector<ReadEntry> read_set;
    std::map<Key, std::size_t> read_index;
    std::vector<PendingWrite> write_set;
    std::map<Key, std::size_t> write_index;

    std::set<Key> local_locked;                          // exclusive locks held at home
    std::map<PartitionId, std::vector<Key>> pending_dummies;
    std::map<Key, std::uint64_t> blind_rts;              // rts material for blind writes
    std::set<PartitionId> participants;                  // remote partitions contacted

    std::uint64_t lts_value = 0;
    bool registered = false;  // present in the home's active index
    std::optional<LogicalTimestamp> commit_ts;

    Await await = Await::None;
    Key await_key;
    std::size_t phase_idx = 0;      // progress through a multi-key lock phase
    std::vector<Key> phase_keys;    // keys of that phase (switch, validate, upgrade)
    std::uint32_t outstanding = 0;  // replies still expected
    bool vote_no = false;
    std::uint64_t vote_max_rts = 0;  // timestamp material carried by yes votes
    std::vector<std::pair<Key, VersionedRecord>> tentative_undo;  // 2PC local pre-images

    // trace material
    std::vector<ReadObs> obs_reads;
    std::uint32_t read_roundtrips = 0;
    std::uint32_t dummy_roundtrips = 0;
    std::uint32_t prepare_roundtrips = 0;
    std::uint32_t install_oneways = 0;
    std::uint32_t decision_oneways = 0;

    bool is_distributed() const { return !participants.empty() || mode == TxnMode::Distributed; }

    bool has_write(const Key& k) const { return write_index.count(k) != 0; }

    void set_commit_ts(const LogicalTimestamp& ts) {
        PRIMO_ASSERT_MSG(!commit_ts.has_value(), "commit timestamp assigned twice");
        PRIMO_ASSERT_MSG(ts.value >= lts_value, "commit timestamp below its lower bound");
        commit_ts = ts;
    }
};

// One client transaction: a program plus retry state. Attempts get fresh
// transaction ids; the submit time of the first attempt anchors latency.
struct ClientTxn {
    std::uint64_t id = 0;
    Program prog;
    SimTime submit = 0;
    std::uint32_t attempts = 0;
    bool retry_distributed = false;  // restart directly in distributed mode
};

struct WorkerState {
    PartitionId partition = 0;
    std::uint16_t index = 0;
    Rng rng{0};
    std::unique_ptr<WorkloadGenerator> gen;
    std::vector<Program> script;  // scripted programs run before generated load
    std::size_t script_pos = 0;
    std::optional<ClientTxn> client;
    std::unique_ptr<Attempt> attempt;
    std::uint64_t guard = 0;       // bumped whenever the current attempt changes
    std::uint64_t client_seq = 0;
    bool wants_retry = false;      // retry deferred by an epoch barrier or recovery
};

}  // namespace primo
