#pragma once

// Result release machinery. Three modes:
//
//  - Watermark: each partition periodically generates a partition-watermark
//    below the minimum timestamp of its active transactions, persists a mark
//    record, and broadcasts it; the minimum over the latest received marks is
//    the global watermark, and results release once it passes their ts.
//    Lagging partitions force-advance toward the average of the others.
//
//  - Epoch: partition 0 runs a synchronous GROUP-PREPARE / GROUP-READY /
//    GROUP-COMMIT barrier every epoch; admissions pause while the barrier is
//    open and the whole epoch aborts if a partition cannot answer.
//
//  - Sync: per-transaction flushes; results release when the commit record
//    is durable.

#include <algorithm>

namespace primo {

// --- shared install/redo helpers ---------------------------------------------------

inline void Cluster::install_committed(PartitionState& part, const Key& k, Value v,
                                       const LogicalTimestamp& ts, const TransactionId& tid,
                                       std::uint64_t epoch) {
    UndoEntry u;
    u.key = k;
    u.ts = ts;
    u.before = *part.store.find(k);
    u.tid = tid;
    u.epoch = epoch;
    part.undo.push_back(std::move(u));
    part.store.install(k, std::move(v), ts);
    part.max_assigned = std::max(part.max_assigned, ts.value);
}

inline std::int64_t Cluster::append_redo(PartitionState& part, const TransactionId& tid,
                                         const LogicalTimestamp& ts, std::vector<RedoWrite> writes) {
    TxnRedo redo;
    redo.tid = tid;
    redo.ts = ts;
    redo.writes = std::move(writes);
    std::int64_t idx = part.log.append(std::move(redo));
    part.redo_index[tid] = idx;
    return idx;
}

// No transaction may commit with a timestamp at or below a watermark any of
// its partitions had already generated (omniscient check of the R2 rule).
inline void Cluster::shadow_check_r2(const Attempt& att, const LogicalTimestamp& ts) const {
    if (cfg_.logging() != LoggingMode::Watermark) return;
    PRIMO_ASSERT_MSG(ts.value > parts_[att.home].last_wp,
                     "commit timestamp under the home partition-watermark");
    for (PartitionId q : att.participants)
        PRIMO_ASSERT_MSG(ts.value > parts_[q].last_wp,
                         "commit timestamp under a participant's partition-watermark");
}

// --- release bookkeeping -----------------------------------------------------------

inline void Cluster::enqueue_committing(PartitionId p, Attempt& att,
                                        std::vector<PartitionId> write_partitions,
                                        std::size_t trace_idx) {
    PartitionState& part = parts_[p];
    CommittingTxn ct;
    ct.client_id = att.client_id;
    ct.tid = att.tid;
    ct.ts = *att.commit_ts;
    ct.commit_time = net_.now();
    ct.submit_time = worker(p, att.worker).client->submit;
    ct.epoch = part.epoch_now;
    ct.worker_partition = p;
    ct.trace_idx = trace_idx;
    ct.write_partitions = std::move(write_partitions);

    switch (cfg_.logging()) {
        case LoggingMode::Watermark:
        case LoggingMode::Epoch:
            part.committing[{ct.ts.value, ct.tid}] = std::move(ct);
            break;
        case LoggingMode::Sync: {
            bool local_redo = std::find(ct.write_partitions.begin(), ct.write_partitions.end(), p) !=
                              ct.write_partitions.end();
            if (is_wcf_protocol() && local_redo) {
                // the WCF ablation flushes its commit record now and releases
                // when it is durable
                EvFlushDone f;
                f.p = p;
                f.upto = part.redo_index.at(ct.tid);
                f.purpose = static_cast<std::uint8_t>(FlushPurpose::SyncCommit);
                f.aux = ct.ts.value;
                f.incarnation = part.incarnation;
                f.tid = ct.tid;
                net_.schedule(p, cfg_.flush_latency, f);
                part.committing[{ct.ts.value, ct.tid}] = std::move(ct);
            } else {
                // 2PC coordinators reach this point after their commit-record
                // flush; read-only transactions have nothing to make durable
                release_one(p, ct);
            }
            break;
        }
    }
}

inline void Cluster::release_one(PartitionId p, const CommittingTxn& c) {
    shadow_check_release(c);
    ++c_.committed;
    latencies_.push_back(net_.now() - c.submit_time);
    TraceTxn& row = trace_.txns.at(c.trace_idx);
    PRIMO_ASSERT(row.tid == c.tid && row.committed);
    row.released = true;
    row.release = net_.now();
    emit("release " + c.tid.str() + " ts=" + std::to_string(c.ts.value));
}

// Durability at release: every partition holding one of the transaction's
// redo entries must have flushed past it. Watermark and epoch releases
// guarantee it cluster-wide; synchronous logging guarantees it wherever a
// flush was actually awaited (the 2PC vote covers participants, the
// WCF-without-watermark ablation only covers the coordinator).
inline void Cluster::shadow_check_release(const CommittingTxn& c) {
    for (PartitionId q : c.write_partitions) {
        if (cfg_.logging() == LoggingMode::Sync && is_wcf_protocol() && q != c.worker_partition)
            continue;
        const PartitionState& part = parts_[q];
        auto it = part.redo_index.find(c.tid);
        PRIMO_ASSERT_MSG(it != part.redo_index.end(),
                         "released transaction has no redo entry on partition " + std::to_string(q));
        PRIMO_ASSERT_MSG(it->second <= part.log.flushed_upto(),
                         "released transaction not durable on partition " + std::to_string(q));
    }
}

// Drops undo entries that can never be needed again: once the released
// watermark passes an install's timestamp, no rollback can touch it.
inline void Cluster::prune_history(PartitionState& part) {
    std::uint64_t wg = part.table.global();
    while (!part.undo.empty() && part.undo.front().ts.value < wg) part.undo.pop_front();
}

// --- watermark generation -----------------------------------------------------------

inline void Cluster::arm_watermark_tick(PartitionId p) {
    if (parts_[p].tick_armed) return;
    parts_[p].tick_armed = true;
    net_.schedule(p, cfg_.t_m, EvWatermarkTick{p});
}

inline void Cluster::on_watermark_tick(const EvWatermarkTick& ev) {
    PartitionState& part = parts_[ev.p];
    part.tick_armed = false;
    if (!net_.alive(ev.p) || recovering_) return;

    // force-advance bookkeeping: a partition lagging behind the average of
    // the others raises the floor its new timestamps must clear, and an idle
    // one simply jumps its watermark forward
    double avg_others = part.table.average_others();
    std::uint64_t delta = 0;
    if (cfg_.force_advance && static_cast<double>(part.last_wp) < avg_others)
        delta = static_cast<std::uint64_t>(avg_others - static_cast<double>(part.last_wp));

    std::uint64_t candidate;
    auto head = part.active.min_head();
    if (head.has_value()) {
        candidate = *head > 0 ? *head - 1 : 0;  // strictly below the minimum active ts
        part.ts_floor = part.last_wp + delta;
    } else {
        candidate = std::max(part.max_assigned, part.last_wp + 1);
        if (delta > 0) candidate = std::max(candidate, part.last_wp + delta);
        part.ts_floor = std::max(part.ts_floor, candidate);
    }

    if (candidate > part.last_wp) {
        part.last_wp = candidate;
        part.wp_samples.push_back(WpSample{to_units(net_.now()), candidate});
        std::int64_t idx = part.log.append(WatermarkMark{candidate});
        EvFlushDone f;
        f.p = ev.p;
        f.upto = idx;
        f.purpose = static_cast<std::uint8_t>(FlushPurpose::WatermarkMark);
        f.aux = candidate;
        f.incarnation = part.incarnation;
        net_.schedule(ev.p, cfg_.flush_latency, f);
    }
    if (work_pending()) arm_watermark_tick(ev.p);
}

inline void Cluster::on_flush_done(const EvFlushDone& ev) {
    PartitionState& part = parts_[ev.p];
    if (ev.incarnation != part.incarnation || !net_.alive(ev.p)) return;  // lost with the crash
    if (ev.upto >= 0) part.log.flush(ev.upto);

    switch (static_cast<FlushPurpose>(ev.purpose)) {
        case FlushPurpose::WatermarkMark: {
            if (recovering_) return;
            // the mark is durable: broadcast it and update the own entry
            for (PartitionId q = 0; q < cfg_.partitions; ++q) {
                if (q == ev.p) continue;
                ++c_.watermark_broadcasts;
                net_.send(ev.p, q, MsgWatermark{net_.term(), ev.p, ev.aux, TransactionId{ev.p, 0}});
            }
            merge_watermark(ev.p, ev.p, ev.aux);
            return;
        }
        case FlushPurpose::EpochBarrier: {
            if (recovering_) return;
            net_.send(ev.p, 0, MsgGroupReady{ev.aux, ev.p});
            ++c_.epoch_ready_msgs;
            return;
        }
        case FlushPurpose::SyncVote: {
            participant_vote(ev.p, ev.tid, true, ev.aux);
            return;
        }
        case FlushPurpose::SyncCommit: {
            // a 2PC coordinator parks before this flush and only then
            // installs, sends decisions and releases
            auto rt = routes_.find(ev.tid);
            if (rt != routes_.end()) {
                Attempt* att = worker(rt->second.first, rt->second.second).attempt.get();
                if (att && att->await == Await::CommitFlush) {
                    twopc_commit_final(rt->second.first, rt->second.second);
                    return;
                }
            }
            // the WCF ablation releases its parked result
            auto it = part.committing.find({ev.aux, ev.tid});
            if (it == part.committing.end()) return;  // rolled back meanwhile
            release_one(ev.p, it->second);
            part.committing.erase(it);
            return;
        }
        case FlushPurpose::Background: return;
    }
}

inline void Cluster::on_watermark_msg(const SimEvent& ev, const MsgWatermark& m) {
    merge_watermark(ev.dst, m.partition, m.wp);
}

inline void Cluster::merge_watermark(PartitionId p, PartitionId from, std::uint64_t wp) {
    PartitionState& part = parts_[p];
    std::uint64_t before = part.table.global();
    if (!part.table.merge(from, wp)) return;
    std::uint64_t after = part.table.global();
    PRIMO_ASSERT_MSG(after >= before, "global watermark regressed");
    PRIMO_ASSERT_MSG(after >= part.last_wg, "observer watermark regressed");
    if (after > part.last_wg) {
        part.last_wg = after;
        emit("wg " + std::to_string(p) + " " + std::to_string(after));
        release_ready(p);
        prune_history(part);
    }
}

inline void Cluster::release_ready(PartitionId p) {
    PartitionState& part = parts_[p];
    std::uint64_t wg = part.table.global();
    // strict: a transaction with ts equal to the watermark waits
    while (!part.committing.empty()) {
        auto it = part.committing.begin();
        if (it->first.first >= wg) break;
        release_one(p, it->second);
        part.committing.erase(it);
    }
}

// --- epoch barrier (partition 0 coordinates) ------------------------------------------

inline void Cluster::arm_epoch_tick(SimTime delay) {
    if (epoch_tick_armed_) return;
    epoch_tick_armed_ = true;
    net_.schedule(0, delay, EvEpochTick{});
}

inline void Cluster::on_epoch_tick(const EvEpochTick&) {
    epoch_tick_armed_ = false;
    if (recovering_ || epoch_closing_) return;
    if (!work_pending() && !generation_open()) return;  // run is over
    epoch_closing_ = true;
    barrier_sent_ = false;
    barrier_epoch_ = parts_[0].epoch_now;
    closing_since_ = net_.now();
    epoch_ready_.clear();
    for (PartitionState& part : parts_) part.paused = true;
    net_.schedule(0, cfg_.epoch_timeout, EvEpochTimeout{barrier_epoch_});
    maybe_start_barrier();
}

// The barrier starts once every in-flight transaction and every one-way
// effect has drained, so each partition's log holds the complete epoch.
inline void Cluster::maybe_start_barrier() {
    if (!epoch_closing_ || barrier_sent_ || recovering_) return;
    if (inflight_attempts_ > 0 || outstanding_effects_ > 0) return;
    barrier_sent_ = true;
    ++c_.epoch_prepare_rounds;
    for (PartitionId q = 0; q < cfg_.partitions; ++q)
        net_.send(0, q, MsgGroupPrepare{barrier_epoch_}, q == 0 ? 0 : -1);
}

inline void Cluster::on_group_prepare(const SimEvent& ev, const MsgGroupPrepare& m) {
    PartitionState& part = parts_[ev.dst];
    part.paused = true;
    EvFlushDone f;
    f.p = ev.dst;
    f.upto = part.log.size() - 1;
    f.purpose = static_cast<std::uint8_t>(FlushPurpose::EpochBarrier);
    f.aux = m.epoch;
    f.incarnation = part.incarnation;
    net_.schedule(ev.dst, cfg_.flush_latency, f);
}

inline void Cluster::on_group_ready(const SimEvent& ev, const MsgGroupReady& m) {
    if (m.epoch != barrier_epoch_ || !epoch_closing_) return;
    epoch_ready_.insert(m.partition);
    if (epoch_ready_.size() < cfg_.partitions) return;
    ++c_.epoch_commit_rounds;
    for (PartitionId q = 0; q < cfg_.partitions; ++q)
        net_.send(0, q, MsgGroupCommit{barrier_epoch_}, q == 0 ? 0 : -1);
}

inline void Cluster::on_group_commit(const SimEvent& ev, const MsgGroupCommit& m) {
    PartitionState& part = parts_[ev.dst];
    // release everything this partition coordinated in epochs <= m.epoch
    // (timestamps and epochs need not be aligned)
    for (auto it = part.committing.begin(); it != part.committing.end();) {
        if (it->second.epoch <= m.epoch) {
            release_one(ev.dst, it->second);
            it = part.committing.erase(it);
        } else {
            ++it;
        }
    }
    part.epoch_now = m.epoch + 1;
    part.paused = false;
    if (ev.dst == 0) {
        epoch_closing_ = false;
        barrier_sent_ = false;
        arm_epoch_tick(cfg_.epoch_len);
    }
    kick_idle_workers();
}

// A partition learning of the epoch abort unwinds its share of the epoch:
// installs revert from before-images and unflushed log records are void.
inline void Cluster::on_group_abort(const SimEvent& ev, const MsgGroupAbort& m) {
    PartitionState& part = parts_[ev.dst];
    revert_epoch(part, m.epoch);
    part.log.truncate_to_flushed();
}

inline void Cluster::on_epoch_timeout(const EvEpochTimeout& ev) {
    if (!epoch_closing_ || ev.epoch != barrier_epoch_) return;  // barrier completed
    if (epoch_ready_.size() >= cfg_.partitions) return;
    if (crashed_.empty()) {
        // everyone is alive per the membership oracle: the barrier is slow,
        // not failed; keep waiting
        net_.schedule(0, cfg_.epoch_timeout, EvEpochTimeout{barrier_epoch_});
        return;
    }
    // a partition cannot answer: the whole epoch aborts
    ++c_.epoch_abort_rounds;
    recovering_ = true;  // one-way effects still in flight must not land
    for (PartitionId q = 0; q < cfg_.partitions; ++q)
        net_.send(0, q, MsgGroupAbort{barrier_epoch_}, q == 0 ? 0 : -1);
    abort_all_inflight(AbortReason::EpochAbort);
    // membership recovery runs after the abort fan-out lands
    net_.schedule(0, cfg_.remote_delay + cfg_.remote_delay_jitter + 1, EvRecoveryDone{net_.term()});
}

}  // namespace primo
