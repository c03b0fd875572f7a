#pragma once

#include <array>
#include <deque>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "primo/assert.hpp"
#include "primo/config.hpp"
#include "primo/history.hpp"
#include "primo/ids.hpp"
#include "primo/messages.hpp"
#include "primo/metrics.hpp"
#include "primo/partition.hpp"
#include "primo/program.hpp"
#include "primo/simnet.hpp"
#include "primo/time.hpp"
#include "primo/txn.hpp"
#include "primo/workload.hpp"

namespace primo {

// The simulated cluster: n partitions, each with h closed-loop workers,
// driven entirely by the deterministic event network. All protocol engines
// (the write-conflict-free path with TicToc locals, the 2PL+2PC baselines,
// watermark and epoch group commit, crash recovery) run inside this class;
// per-partition state lives in PartitionState, and handlers only touch the
// state of the partition an event is addressed to. Methods prefixed
// `shadow_` are omniscient run-time checks, not protocol steps.
class Cluster {
public:
    explicit Cluster(RunConfig cfg);

    // Runs the configured workload for the generation horizon, then drains:
    // workers stop starting transactions and the run continues until every
    // outcome is released and the event queue empties.
    void run();

    // Drains to quiescence (used directly by tests that enqueue scripts).
    bool drain();

    // Enqueues a scripted program on a worker; scripted programs run before
    // (and instead of) generated load.
    void enqueue_script(PartitionId p, std::uint16_t worker, Program prog);

    RunMetrics metrics() const;
    const HistoryTrace& trace() const { return trace_; }
    HistoryTrace& trace() { return trace_; }

    Store merged_initial() const { return merge(initial_); }
    Store merged_final() const {
        std::vector<const Store*> v;
        for (const auto& p : parts_) v.push_back(&p.store);
        return merge(v);
    }

    void set_event_trace(std::string* sink) { event_trace_ = sink; }
    void set_msg_trace(std::string* sink) { msg_trace_ = sink; }

    // test/debug observer, invoked after every handled event
    std::function<void(const SimEvent&)> after_event;

    // introspection (tests, tools)
    Net& net() { return net_; }
    SimTime now() const { return net_.now(); }
    const RunConfig& config() const { return cfg_; }
    PartitionState& part(PartitionId p) { return parts_.at(p); }
    const PartitionState& part(PartitionId p) const { return parts_.at(p); }
    std::uint16_t partitions() const { return cfg_.partitions; }

    // Test hook: overwrite a record's content and timestamps everywhere it
    // matters (store + initial snapshot), before any traffic runs.
    void seed_record(const Key& k, Value v, std::uint64_t wts, std::uint64_t rts);

    struct Counters {
        std::uint64_t attempts = 0;
        std::uint64_t committed = 0;
        std::uint64_t retries = 0;
        std::array<std::uint64_t, 7> aborts{};  // indexed by AbortReason
        std::uint64_t read_roundtrips = 0;
        std::uint64_t dummy_roundtrips = 0;
        std::uint64_t prepare_roundtrips = 0;
        std::uint64_t install_oneways = 0;
        std::uint64_t decision_oneways = 0;
        std::uint64_t watermark_broadcasts = 0;
        std::uint64_t epoch_prepare_rounds = 0;
        std::uint64_t epoch_ready_msgs = 0;
        std::uint64_t epoch_commit_rounds = 0;
        std::uint64_t epoch_abort_rounds = 0;
        std::uint64_t commit_phase_lock_waits = 0;
        std::uint64_t commit_phase_aborts = 0;
        std::uint64_t prepare_phase_conflicts = 0;
        std::uint64_t local_attempts = 0;
        std::uint64_t local_aborts = 0;
        std::uint64_t extra_xlock_local_aborts = 0;
        std::uint64_t reads_total = 0;
        std::uint64_t rts_extensions = 0;
        std::uint64_t crash_aborts = 0;
        std::uint64_t recoveries = 0;
        std::uint64_t stale_replies = 0;
        SimTime recovery_ticks = 0;
    };
    const Counters& counters() const { return c_; }
    std::uint64_t inflight_attempts() const { return inflight_attempts_; }
    std::uint64_t outstanding_effects() const { return outstanding_effects_; }
    bool epoch_closing() const { return epoch_closing_; }

private:
    // --- dispatch -----------------------------------------------------------
    void handle(const SimEvent& ev);
    void trace_line(const SimEvent& ev);

    // --- workers (engine/workers.hpp) ---------------------------------------
    void init_partitions();
    void schedule_step(PartitionId p, std::uint16_t w, SimTime delay);
    void on_worker_step(const EvWorkerStep& ev);
    void on_client_retry(const EvClientRetry& ev);
    void worker_next(PartitionId p, std::uint16_t w);
    void start_attempt(PartitionId p, std::uint16_t w);
    void exec_command(PartitionId p, std::uint16_t w);
    void finish_command(PartitionId p, std::uint16_t w);
    void reach_commit(PartitionId p, std::uint16_t w);
    std::size_t record_attempt_trace(Attempt& att, bool committed, AbortReason reason);
    void abort_attempt(PartitionId p, std::uint16_t w, AbortReason reason, bool immediate_distributed);
    void retire_attempt(PartitionId p, std::uint16_t w);
    bool admission_open() const { return !recovering_ && !epoch_closing_; }
    bool work_pending() const;
    bool generation_open() const;
    void kick_idle_workers();
    Attempt* attempt_by_tid(const TransactionId& tid);
    WorkerState& worker(PartitionId p, std::uint16_t w) { return parts_[p].workers[w]; }

    // --- lock grant routing -------------------------------------------------
    void on_lock_grant(const EvLockGrant& ev);
    void resume_attempt_lock(PartitionId p, std::uint16_t w);

    // --- local OCC (engine/local_occ.hpp) ------------------------------------
    void tictoc_read(PartitionId p, std::uint16_t w, const Key& k);
    void local_commit_begin(PartitionId p, std::uint16_t w);
    void local_commit_locks(PartitionId p, std::uint16_t w);
    void local_commit_finish(PartitionId p, std::uint16_t w);
    void note_local_abort_blocker(PartitionId p, const Key& k);

    // --- WCF distributed path (engine/wcf.hpp) -------------------------------
    void begin_switch(PartitionId p, std::uint16_t w);
    void continue_switch(PartitionId p, std::uint16_t w);
    void dist_read(PartitionId p, std::uint16_t w, const Key& k);
    void dist_read_local_locked(PartitionId p, std::uint16_t w);
    void buffer_write(PartitionId p, std::uint16_t w, const Key& k, Value v);
    void wcf_commit_begin(PartitionId p, std::uint16_t w);
    void wcf_commit_finish(PartitionId p, std::uint16_t w);
    void on_remote_read(const SimEvent& ev, const MsgRemoteRead& m);
    void on_dummy_read(const SimEvent& ev, const MsgDummyRead& m);
    void participant_locks_continue(PartitionId p, const TransactionId& tid);
    void participant_read_served(PartitionId p, const TransactionId& tid);
    void on_read_reply(const SimEvent& ev, const MsgReadReply& m);
    void on_dummy_reply(const SimEvent& ev, const MsgDummyReply& m);
    void on_write_install(const SimEvent& ev, const MsgWriteInstall& m);
    void on_txn_abort(const SimEvent& ev, const MsgTxnAbort& m);
    std::uint64_t apply_r2(PartitionState& part, const Key& k);
    void register_active(PartitionState& part, const TransactionId& tid, std::uint64_t lts);

    // --- 2PL+2PC baselines (engine/twopc.hpp) --------------------------------
    LockPolicy lock_policy() const;
    bool is_wcf_protocol() const { return uses_wcf(cfg_.protocol); }
    bool is_wm_only_ts() const;
    bool pure_2pl() const {
        return cfg_.protocol == Protocol::TwoPlNoWait2pc || cfg_.protocol == Protocol::TwoPlWaitDie2pc;
    }
    void twopl_read(PartitionId p, std::uint16_t w, const Key& k);
    void twopl_read_locked(PartitionId p, std::uint16_t w);
    void on_read_shared(const SimEvent& ev, const MsgReadShared& m);
    void on_read_shared_reply(const SimEvent& ev, const MsgReadSharedReply& m);
    void twopc_commit_begin(PartitionId p, std::uint16_t w);
    void twopc_upgrade_continue(PartitionId p, std::uint16_t w);
    void twopc_local_install_and_prepare(PartitionId p, std::uint16_t w);
    void on_prepare(const SimEvent& ev, const MsgPrepare& m);
    void participant_prepare_continue(PartitionId p, const TransactionId& tid);
    void participant_prepare_done(PartitionId p, const TransactionId& tid);
    void participant_vote(PartitionId p, const TransactionId& tid, bool yes, std::uint64_t max_rts = 0);
    void on_vote(const SimEvent& ev, const MsgVote& m);
    void twopc_decide(PartitionId p, std::uint16_t w);
    void twopc_commit_final(PartitionId p, std::uint16_t w);
    void on_decision(const SimEvent& ev, const MsgDecision& m);
    void twopc_abort(PartitionId p, std::uint16_t w, AbortReason reason);
    LogicalTimestamp next_2pl_commit_ts(Attempt& att);

    // --- group commit (engine/group_commit.hpp) ------------------------------
    void arm_watermark_tick(PartitionId p);
    void on_watermark_tick(const EvWatermarkTick& ev);
    void on_flush_done(const EvFlushDone& ev);
    void on_watermark_msg(const SimEvent& ev, const MsgWatermark& m);
    void merge_watermark(PartitionId p, PartitionId from, std::uint64_t wp);
    void release_ready(PartitionId p);
    void release_one(PartitionId p, const CommittingTxn& c);
    void enqueue_committing(PartitionId p, Attempt& att, std::vector<PartitionId> write_partitions,
                            std::size_t trace_idx);
    void shadow_check_release(const CommittingTxn& c);
    void prune_history(PartitionState& part);
    void arm_epoch_tick(SimTime delay);
    void on_epoch_tick(const EvEpochTick& ev);
    void maybe_start_barrier();
    void on_group_prepare(const SimEvent& ev, const MsgGroupPrepare& m);
    void on_group_ready(const SimEvent& ev, const MsgGroupReady& m);
    void on_group_commit(const SimEvent& ev, const MsgGroupCommit& m);
    void on_group_abort(const SimEvent& ev, const MsgGroupAbort& m);
    void on_epoch_timeout(const EvEpochTimeout& ev);
    void sync_commit_release(PartitionId p, const EvFlushDone& ev);

    // --- recovery (engine/recovery.hpp) --------------------------------------
    void on_crash(const EvCrash& ev);
    void on_recovery_done(const EvRecoveryDone& ev);
    void recover_watermark_cluster();
    void recover_epoch_cluster();
    void rollback_above(PartitionState& part, std::uint64_t agreed);
    void revert_epoch(PartitionState& part, std::uint64_t epoch);
    void abort_committing_at_or_above(PartitionState& part, std::uint64_t agreed);
    void abort_all_inflight(AbortReason reason);
    void resume_all_workers();

    // --- shared helpers -------------------------------------------------------
    void install_committed(PartitionState& part, const Key& k, Value v, const LogicalTimestamp& ts,
                           const TransactionId& tid, std::uint64_t epoch);
    std::int64_t append_redo(PartitionState& part, const TransactionId& tid, const LogicalTimestamp& ts,
                             std::vector<RedoWrite> writes);
    // Captures before-images from the current store; call before installing.
    static std::vector<RedoWrite> capture_redo(const PartitionState& part,
                                               const std::vector<PendingWrite>& writes) {
        std::vector<RedoWrite> out;
        out.reserve(writes.size());
        for (const PendingWrite& pw : writes) {
            const VersionedRecord* rec = part.store.find(pw.key);
            out.push_back(RedoWrite{pw.key, pw.value, rec ? rec->value : Value{}});
        }
        return out;
    }
    std::uint64_t effective_wp(const PartitionState& part) const { return part.effective_floor(); }
    void shadow_check_r2(const Attempt& att, const LogicalTimestamp& ts) const;
    void bump_abort(AbortReason r) { ++c_.aborts[static_cast<std::size_t>(r)]; }
    void emit(const std::string& line);
    void emit_msg(const Payload& p);
    static Store merge(const std::vector<const Store*>& stores) {
        Store out;
        for (const Store* s : stores)
            for (const auto& [k, rec] : s->all()) {
                out.put_initial(k, rec.value);
                out.restore(k, rec);
            }
        return out;
    }
    static Store merge(const std::vector<Store>& stores) {
        std::vector<const Store*> v;
        for (const Store& s : stores) v.push_back(&s);
        return merge(v);
    }

    RunConfig cfg_;
    Net net_;
    std::deque<PartitionState> parts_;
    std::vector<Store> initial_;
    std::map<TransactionId, std::pair<PartitionId, std::uint16_t>> routes_;
    HistoryTrace trace_;
    Counters c_;
    std::vector<SimTime> latencies_;
    std::string* event_trace_ = nullptr;
    std::string* msg_trace_ = nullptr;

    std::uint64_t client_counter_ = 0;
    std::uint64_t inflight_attempts_ = 0;
    std::uint64_t outstanding_effects_ = 0;  // installs / decisions in flight

    // recovery
    bool recovering_ = false;
    SimTime crash_time_ = 0;
    std::vector<PartitionId> crashed_;

    // epoch group commit (partition 0 coordinates)
    bool epoch_closing_ = false;
    bool barrier_sent_ = false;
    std::uint64_t barrier_epoch_ = 0;
    std::set<PartitionId> epoch_ready_;
    SimTime closing_since_ = 0;
    bool epoch_tick_armed_ = false;
};

}  // namespace primo

#include "primo/engine/workers.hpp"      // IWYU pragma: keep
#include "primo/engine/local_occ.hpp"    // IWYU pragma: keep
#include "primo/engine/wcf.hpp"          // IWYU pragma: keep
#include "primo/engine/twopc.hpp"        // IWYU pragma: keep
#include "primo/engine/group_commit.hpp" // IWYU pragma: keep
#include "primo/engine/recovery.hpp"     // IWYU pragma: keep
