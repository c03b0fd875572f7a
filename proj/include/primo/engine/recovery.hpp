#pragma once

// Crash handling. The membership service is a consensus oracle: it detects
// the crash, bumps the term (in-flight messages of the old term are dropped
// by the network) and drives a stop-the-world recovery.
//
// Watermark mode: each surviving leader publishes its durable view of the
// global watermark, the crashed leader publishes the last partition-
// watermark in its durable log, and everyone adopts the maximum as the
// agreed rollback point: installs at or above it are reverted from before-
// images (the crashed partition replays its log with a timestamp filter),
// transactions below it are committed cluster-wide, and every released
// result stays released.
//
// Epoch mode: the barrier times out, the whole epoch aborts everywhere and
// the crashed partition recovers to the previous epoch boundary.

#include <algorithm>

namespace primo {

inline void Cluster::on_crash(const EvCrash& ev) {
    PartitionState& part = parts_[ev.p];
    PRIMO_ASSERT_MSG(net_.alive(ev.p), "partition crashed twice without recovering");
    emit("crash " + std::to_string(ev.p));

    net_.set_alive(ev.p, false);
    part.incarnation++;  // in-flight flushes of the old incarnation are void
    part.crashed_at = net_.now();
    part.log.truncate_to_flushed();  // the volatile tail is gone
    crashed_.push_back(ev.p);
    crash_time_ = net_.now();

    if (cfg_.logging() == LoggingMode::Epoch) {
        // detected by the barrier timeout; nothing else to do yet
        return;
    }
    // stop the world: drop old-term traffic, halt ticks and admissions
    net_.set_term(net_.term() + 1);
    recovering_ = true;
    net_.schedule(ev.p, cfg_.membership_latency, EvRecoveryDone{net_.term()});
}

inline void Cluster::on_recovery_done(const EvRecoveryDone& ev) {
    if (ev.term != net_.term()) return;  // superseded by a later crash
    if (cfg_.logging() == LoggingMode::Epoch) {
        recover_epoch_cluster();
        return;
    }
    PRIMO_ASSERT(recovering_);
    recover_watermark_cluster();
}

inline void Cluster::recover_watermark_cluster() {
    ++c_.recoveries;

    // 1. the crashed partitions recover their durable watermark from the
    //    log; surviving leaders force-flush theirs, so everything the agreed
    //    point will declare committed is durable even against a second crash
    std::map<PartitionId, RecoveredState> recovered;
    for (PartitionState& part : parts_) {
        bool is_crashed = std::find(crashed_.begin(), crashed_.end(), part.id) != crashed_.end();
        if (is_crashed) {
            auto snapshot_of = [&](std::uint64_t id) { return part.snapshots.at(id); };
            recovered[part.id] = replay_log(part.log, snapshot_of, part.log.flushed_upto());
        } else if (part.log.size() > 0) {
            part.log.flush(part.log.size() - 1);
        }
    }

    // 2. publication: survivors publish their durable global-watermark view,
    //    crashed leaders the last partition-watermark in their durable log;
    //    everyone adopts the maximum, bounded by what the crashed logs can
    //    actually cover (the consensus oracle makes it identical everywhere)
    std::uint64_t agreed = 0;
    for (PartitionState& part : parts_) {
        bool is_crashed = std::find(crashed_.begin(), crashed_.end(), part.id) != crashed_.end();
        std::uint64_t published = is_crashed ? recovered[part.id].wp : part.table.global();
        agreed = std::max(agreed, published);
    }
    for (PartitionId p : crashed_) agreed = std::min(agreed, recovered[p].wp);
    emit("agreed_wg " + std::to_string(agreed));

    // 3. rollback everywhere: crashed partitions re-replay with ts < agreed,
    //    survivors revert installed writes at or above it
    for (PartitionId p : crashed_) {
        PartitionState& part = parts_[p];
        auto snapshot_of = [&](std::uint64_t id) { return part.snapshots.at(id); };
        RecoveredState filtered =
            replay_log(part.log, snapshot_of, part.log.flushed_upto(),
                       [&](const LogicalTimestamp& ts) { return ts.value < agreed; });
        part.store = std::move(filtered.store);
        part.undo.clear();
        part.redo_index.clear();
        // rebuild the redo index of the surviving entries
        for (std::int64_t i = 0; i <= part.log.flushed_upto(); ++i)
            if (const auto* r = std::get_if<TxnRedo>(&part.log.entry(i)))
                if (r->ts.value < agreed) part.redo_index[r->tid] = i;
    }
    for (PartitionState& part : parts_) {
        bool is_crashed = std::find(crashed_.begin(), crashed_.end(), part.id) != crashed_.end();
        if (!is_crashed) rollback_above(part, agreed);
        abort_committing_at_or_above(part, agreed);
        part.locks.clear();
        part.sessions.clear();
        part.active.clear();
        part.table.floor_all(agreed);
        part.last_wp = std::max(part.last_wp, agreed);
        part.last_wg = std::max(part.last_wg, agreed);
        part.ts_floor = std::max(part.ts_floor, part.last_wp);
        part.max_assigned = std::max(agreed, std::min(part.max_assigned, agreed));

        // recovery checkpoint: rolled-back redo entries are still physically
        // present in the logs; fencing them behind a checkpoint of the
        // post-rollback state keeps them out of any future replay
        std::uint64_t snap = part.next_snapshot++;
        part.snapshots[snap] = part.store;
        std::int64_t idx = part.log.append(CheckpointRef{snap});
        part.log.flush(idx);
        part.log.append(WatermarkMark{part.last_wp});
        part.log.flush(idx + 1);
    }

    // 4. every in-flight attempt aborts; surviving workers requeue their
    //    client transactions, workers of crashed partitions lost them
    abort_all_inflight(AbortReason::CrashRollback);

    // 5. resume
    for (PartitionId p : crashed_) net_.set_alive(p, true);
    crashed_.clear();
    outstanding_effects_ = 0;
    recovering_ = false;
    c_.recovery_ticks += net_.now() - crash_time_;
    for (PartitionState& part : parts_) {
        release_ready(part.id);  // entries below the agreed watermark release now
        prune_history(part);
        if (cfg_.logging() == LoggingMode::Watermark) arm_watermark_tick(part.id);
    }
    resume_all_workers();
    emit("recovered term=" + std::to_string(net_.term()));
}

// Reverts installed writes with ts >= agreed using before-images, newest
// first. Per key, installs happen in timestamp order, so the rolled-back
// entries form a suffix of each key's install sequence and the reverse walk
// lands on the newest surviving version.
inline void Cluster::rollback_above(PartitionState& part, std::uint64_t agreed) {
    for (auto it = part.undo.rbegin(); it != part.undo.rend(); ++it) {
        if (it->ts.value < agreed) continue;
        part.store.restore(it->key, it->before);
        part.redo_index.erase(it->tid);
    }
    std::erase_if(part.undo, [&](const UndoEntry& u) { return u.ts.value >= agreed; });
}

inline void Cluster::abort_committing_at_or_above(PartitionState& part, std::uint64_t agreed) {
    for (auto it = part.committing.begin(); it != part.committing.end();) {
        if (it->first.first >= agreed) {
            TraceTxn& row = trace_.txns.at(it->second.trace_idx);
            row.committed = false;
            row.abort_reason = AbortReason::CrashRollback;
            bump_abort(AbortReason::CrashRollback);
            ++c_.crash_aborts;
            it = part.committing.erase(it);
        } else {
            ++it;
        }
    }
}

inline void Cluster::abort_all_inflight(AbortReason reason) {
    for (PartitionState& part : parts_) {
        bool partition_crashed = std::find(crashed_.begin(), crashed_.end(), part.id) != crashed_.end();
        for (WorkerState& ws : part.workers) {
            if (!ws.attempt) continue;
            Attempt& att = *ws.attempt;
            att.status = TxnStatus::Aborted;
            record_attempt_trace(att, false, reason);
            bump_abort(reason);
            if (reason == AbortReason::CrashRollback) ++c_.crash_aborts;
            if (ws.client && !ws.client->prog.touches_remote()) ++c_.local_aborts;
            routes_.erase(att.tid);
            ws.attempt.reset();
            ws.guard++;
            PRIMO_ASSERT(inflight_attempts_ > 0);
            --inflight_attempts_;
            if (partition_crashed) ws.client.reset();  // the client context is gone
            ws.wants_retry = true;
        }
    }
}

inline void Cluster::resume_all_workers() {
    for (PartitionState& part : parts_) part.paused = false;
    kick_idle_workers();
}

// --- epoch-mode crash recovery ---------------------------------------------------

// Runs after the GROUP-ABORT fan-out has landed: survivors have already
// reverted the epoch; here the crashed partitions rebuild from their durable
// logs (the previous epoch boundary) and the cluster resumes.
inline void Cluster::recover_epoch_cluster() {
    ++c_.recoveries;
    net_.set_term(net_.term() + 1);

    std::uint64_t epoch = barrier_epoch_;
    emit("group_abort epoch=" + std::to_string(epoch));
    for (PartitionState& part : parts_) {
        bool is_crashed = std::find(crashed_.begin(), crashed_.end(), part.id) != crashed_.end();
        if (is_crashed) {
            auto snapshot_of = [&](std::uint64_t id) { return part.snapshots.at(id); };
            RecoveredState rec = replay_log(part.log, snapshot_of, part.log.flushed_upto());
            part.store = std::move(rec.store);
            part.undo.clear();
            part.redo_index.clear();
            revert_epoch(part, epoch);  // flip any of its committing entries
        }
        part.locks.clear();
        part.sessions.clear();
        part.active.clear();
        part.epoch_now = epoch + 1;
    }

    for (PartitionId p : crashed_) net_.set_alive(p, true);
    crashed_.clear();
    outstanding_effects_ = 0;
    recovering_ = false;
    epoch_closing_ = false;
    barrier_sent_ = false;
    c_.recovery_ticks += net_.now() - crash_time_;
    resume_all_workers();
    arm_epoch_tick(cfg_.epoch_len);
}

// Aborts one epoch on one partition: committed-but-unreleased results flip
// to epoch aborts and their installs unwind from before-images.
inline void Cluster::revert_epoch(PartitionState& part, std::uint64_t epoch) {
    while (!part.undo.empty() && part.undo.back().epoch >= epoch) {
        const UndoEntry& u = part.undo.back();
        part.store.restore(u.key, u.before);
        part.redo_index.erase(u.tid);
        part.undo.pop_back();
    }
    for (auto it = part.committing.begin(); it != part.committing.end();) {
        if (it->second.epoch >= epoch) {
            TraceTxn& row = trace_.txns.at(it->second.trace_idx);
            row.committed = false;
            row.abort_reason = AbortReason::EpochAbort;
            bump_abort(AbortReason::EpochAbort);
            ++c_.crash_aborts;
            it = part.committing.erase(it);
        } else {
            ++it;
        }
    }
}

}  // namespace primo
