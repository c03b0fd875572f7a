#pragma once

// 2PL + two-phase-commit baselines with Presumed-Abort (abort decisions are
// never logged) and Unsolicited-Vote (the prepare message carries the
// writes). Reads take shared locks during execution; the commit phase
// upgrades to exclusive locks, where — unlike the write-conflict-free path —
// conflicts and deadlock deaths are still possible. Also hosts the
// distributed path of the watermark ablation, which assigns TicToc-style
// commit timestamps over the same 2PC skeleton, with values installed at the
// decision so that lock-free local readers never observe uncommitted data.

#include <algorithm>

namespace primo {

inline LockPolicy Cluster::lock_policy() const {
    return cfg_.protocol == Protocol::TwoPlNoWait2pc ? LockPolicy::NoWait : LockPolicy::WaitDie;
}

inline bool Cluster::is_wm_only_ts() const { return cfg_.protocol == Protocol::AblationWmOnly; }

// --- execution phase: shared reads ------------------------------------------------

inline void Cluster::twopl_read(PartitionId p, std::uint16_t w, const Key& k) {
    Attempt& att = *worker(p, w).attempt;
    if (k.partition == p) {
        switch (parts_[p].locks.acquire(att.tid, k, LockMode::Shared, lock_policy(), net_.now())) {
            case LockResult::Granted:
                att.await_key = k;
                twopl_read_locked(p, w);
                return;
            case LockResult::MustWait:
                att.await = Await::LockSharedRead;
                att.await_key = k;
                return;
            case LockResult::Conflict:
                abort_attempt(p, w, AbortReason::LockConflict, false);
                return;
            default:
                abort_attempt(p, w, AbortReason::Die, false);
                return;
        }
    }
    att.participants.insert(k.partition);
    att.await = Await::RemoteRead;
    att.await_key = k;
    net_.send(p, k.partition, MsgReadShared{att.tid, k});
}

inline void Cluster::twopl_read_locked(PartitionId p, std::uint16_t w) {
    Attempt& att = *worker(p, w).attempt;
    PartitionState& part = parts_[p];
    const Key& k = att.await_key;
    const VersionedRecord* rec = part.store.find(k);
    if (!rec) {
        abort_attempt(p, w, AbortReason::KeyNotFound, false);
        return;
    }
    if (is_wm_only_ts()) {
        apply_r2(part, k);
        rec = part.store.find(k);
        if (!att.registered) {
            att.lts_value = rec->wts.value;
            register_active(part, att.tid, att.lts_value);
            att.registered = true;
        }
    }
    ReadEntry e;
    e.key = k;
    e.wts = rec->wts;
    e.rts = rec->rts;
    e.version = rec->version;
    e.value = rec->value;
    e.local = true;
    att.read_index[k] = att.read_set.size();
    att.read_set.push_back(e);
    att.obs_reads.push_back(ReadObs{k, rec->version});
    att.last_read = rec->value;
    ++c_.reads_total;
    finish_command(p, w);
}

inline void Cluster::on_read_shared(const SimEvent& ev, const MsgReadShared& m) {
    PartitionState& part = parts_[ev.dst];
    ParticipantSession& s = part.sessions[m.tid];
    s.stage = ParticipantSession::Stage::SharedRead;
    s.reply_to = ev.src;
    s.pending_key = m.key;
    switch (part.locks.acquire(m.tid, m.key, LockMode::Shared, lock_policy(), net_.now())) {
        case LockResult::Granted:
            s.locked.insert(m.key);
            participant_read_served(ev.dst, m.tid);
            return;
        case LockResult::MustWait:
            return;  // grant callback resumes
        case LockResult::Conflict: {
            MsgReadSharedReply reply;
            reply.tid = m.tid;
            reply.key = m.key;
            reply.status = ReplyStatus::Conflict;
            net_.send(ev.dst, ev.src, std::move(reply));
            s.stage = ParticipantSession::Stage::Idle;
            return;
        }
        default: {
            MsgReadSharedReply reply;
            reply.tid = m.tid;
            reply.key = m.key;
            reply.status = ReplyStatus::Die;
            net_.send(ev.dst, ev.src, std::move(reply));
            s.stage = ParticipantSession::Stage::Idle;
            return;
        }
    }
}

inline void Cluster::on_read_shared_reply(const SimEvent& ev, const MsgReadSharedReply& m) {
    Attempt* att = attempt_by_tid(m.tid);
    if (!att || att->await != Await::RemoteRead || att->await_key != m.key) {
        ++c_.stale_replies;
        return;
    }
    PartitionId p = ev.dst;
    std::uint16_t w = att->worker;
    if (m.status == ReplyStatus::Die) {
        abort_attempt(p, w, AbortReason::Die, false);
        return;
    }
    if (m.status == ReplyStatus::Conflict) {
        abort_attempt(p, w, AbortReason::LockConflict, false);
        return;
    }
    if (m.status == ReplyStatus::Missing) {
        abort_attempt(p, w, AbortReason::KeyNotFound, false);
        return;
    }
    ++att->read_roundtrips;
    ++c_.read_roundtrips;
    ReadEntry e;
    e.key = m.key;
    e.wts = m.wts;
    e.rts = m.rts;
    e.version = m.version;
    e.value = m.value;
    e.local = false;
    att->read_index[m.key] = att->read_set.size();
    att->read_set.push_back(e);
    att->obs_reads.push_back(ReadObs{m.key, m.version});
    att->last_read = m.value;
    ++c_.reads_total;
    finish_command(p, w);
}

// --- commit phase ------------------------------------------------------------------

inline void Cluster::twopc_commit_begin(PartitionId p, std::uint16_t w) {
    Attempt& att = *worker(p, w).attempt;

    if (att.write_set.empty()) {
        // read-only: no prepare round; decisions release the shared locks
        twopc_decide(p, w);
        return;
    }
    att.phase_keys.clear();
    for (const PendingWrite& pw : att.write_set)
        if (pw.key.partition == p) att.phase_keys.push_back(pw.key);
    std::sort(att.phase_keys.begin(), att.phase_keys.end());
    att.phase_idx = 0;
    twopc_upgrade_continue(p, w);
}

inline void Cluster::twopc_upgrade_continue(PartitionId p, std::uint16_t w) {
    Attempt& att = *worker(p, w).attempt;
    PartitionState& part = parts_[p];
    while (att.phase_idx < att.phase_keys.size()) {
        const Key& k = att.phase_keys[att.phase_idx];
        switch (part.locks.acquire(att.tid, k, LockMode::Exclusive, lock_policy(), net_.now())) {
            case LockResult::Granted:
                att.local_locked.insert(k);
                ++att.phase_idx;
                continue;
            case LockResult::MustWait:
                ++c_.commit_phase_lock_waits;
                att.await = Await::LockUpgrade;
                att.await_key = k;
                return;
            case LockResult::Conflict:
                ++c_.commit_phase_aborts;
                ++c_.prepare_phase_conflicts;
                twopc_abort(p, w, AbortReason::LockConflict);
                return;
            default:
                ++c_.commit_phase_aborts;
                ++c_.prepare_phase_conflicts;
                twopc_abort(p, w, AbortReason::Die);
                return;
        }
    }
    ++att.phase_idx;
    twopc_local_install_and_prepare(p, w);
}

inline void Cluster::twopc_local_install_and_prepare(PartitionId p, std::uint16_t w) {
    Attempt& att = *worker(p, w).attempt;
    PartitionState& part = parts_[p];

    if (!is_wm_only_ts()) {
        // tentative local install, pre-images kept for the abort path
        for (const PendingWrite& pw : att.write_set) {
            if (pw.key.partition != p) continue;
            att.tentative_undo.emplace_back(pw.key, *part.store.find(pw.key));
            VersionedRecord rec = *part.store.find(pw.key);
            rec.value = pw.value;
            part.store.restore(pw.key, rec);
        }
    } else if (!att.registered) {
        att.lts_value = effective_wp(part) + 1;
        register_active(part, att.tid, att.lts_value);
        att.registered = true;
    }

    std::map<PartitionId, std::vector<KeyValue>> remote;
    for (const PendingWrite& pw : att.write_set)
        if (pw.key.partition != p) remote[pw.key.partition].push_back(KeyValue{pw.key, pw.value});
    for (const auto& [q, writes] : remote)
        PRIMO_ASSERT_MSG(att.participants.count(q) || (att.participants.insert(q), true),
                         "remote blind write registers its partition as a participant");

    if (att.participants.empty()) {
        twopc_decide(p, w);
        return;
    }
    att.await = Await::Votes;
    att.outstanding = static_cast<std::uint32_t>(att.participants.size());
    for (PartitionId q : att.participants) {
        MsgPrepare m;
        m.tid = att.tid;
        auto it = remote.find(q);
        if (it != remote.end()) m.writes = it->second;
        net_.send(p, q, std::move(m));
    }
}

inline void Cluster::on_prepare(const SimEvent& ev, const MsgPrepare& m) {
    PartitionState& part = parts_[ev.dst];
    ParticipantSession& s = part.sessions[m.tid];
    s.stage = ParticipantSession::Stage::Prepare;
    s.reply_to = ev.src;
    s.prepare_writes = m.writes;
    s.phase_idx = 0;
    participant_prepare_continue(ev.dst, m.tid);
}

inline void Cluster::participant_prepare_continue(PartitionId p, const TransactionId& tid) {
    PartitionState& part = parts_[p];
    auto st = part.sessions.find(tid);
    if (st == part.sessions.end()) return;
    ParticipantSession& s = st->second;
    while (s.phase_idx < s.prepare_writes.size()) {
        const Key& k = s.prepare_writes[s.phase_idx].key;
        if (!part.locks.holds_exclusive(tid, k)) {
            switch (part.locks.acquire(tid, k, LockMode::Exclusive, lock_policy(), net_.now())) {
                case LockResult::Granted: s.locked.insert(k); break;
                case LockResult::MustWait: ++c_.commit_phase_lock_waits; return;
                default:
                    ++c_.commit_phase_aborts;
                    ++c_.prepare_phase_conflicts;
                    participant_vote(p, tid, false);
                    return;
            }
        }
        ++s.phase_idx;
    }
    participant_prepare_done(p, tid);
}

inline void Cluster::participant_prepare_done(PartitionId p, const TransactionId& tid) {
    PartitionState& part = parts_[p];
    ParticipantSession& s = part.sessions.at(tid);

    std::uint64_t max_rts = 0;
    if (is_wm_only_ts()) {
        // timestamp material for the coordinator; records stay unchanged
        // until the decision carries the final timestamp
        for (const KeyValue& kv : s.prepare_writes) {
            apply_r2(part, kv.key);
            max_rts = std::max(max_rts, part.store.find(kv.key)->rts.value);
        }
        if (!part.active.contains(tid) && !s.prepare_writes.empty())
            register_active(part, tid, effective_wp(part) + 1);
    } else {
        // classic 2PC: tentative install under the exclusive locks
        for (const KeyValue& kv : s.prepare_writes) {
            s.tentative_undo.emplace_back(kv.key, *part.store.find(kv.key));
            VersionedRecord rec = *part.store.find(kv.key);
            rec.value = kv.value;
            part.store.restore(kv.key, rec);
        }
        s.installed = true;
    }

    if (cfg_.logging() == LoggingMode::Sync && !s.prepare_writes.empty()) {
        // durability before the yes vote: flush the prepare record. Its
        // timestamp is a placeholder; this log is never replayed by a
        // timestamp filter (baseline recovery is epoch/undo based).
        std::vector<RedoWrite> redo;
        for (const KeyValue& kv : s.prepare_writes) {
            Value before;
            for (const auto& [uk, urec] : s.tentative_undo)
                if (uk == kv.key) before = urec.value;
            redo.push_back(RedoWrite{kv.key, kv.value, before});
        }
        std::int64_t idx = append_redo(part, tid, LogicalTimestamp{0, tid}, std::move(redo));
        EvFlushDone f;
        f.p = p;
        f.upto = idx;
        f.purpose = static_cast<std::uint8_t>(FlushPurpose::SyncVote);
        f.aux = max_rts;
        f.incarnation = part.incarnation;
        f.tid = tid;
        net_.schedule(p, cfg_.flush_latency, f);
        return;
    }
    participant_vote(p, tid, true, max_rts);
}

inline void Cluster::participant_vote(PartitionId p, const TransactionId& tid, bool yes,
                                      std::uint64_t max_rts) {
    PartitionState& part = parts_[p];
    auto st = part.sessions.find(tid);
    if (st == part.sessions.end()) return;
    MsgVote v;
    v.tid = tid;
    v.yes = yes;
    v.max_rts = max_rts;
    net_.send(p, st->second.reply_to, std::move(v));
    st->second.stage = ParticipantSession::Stage::Idle;
}

inline void Cluster::on_vote(const SimEvent& ev, const MsgVote& m) {
    Attempt* att = attempt_by_tid(m.tid);
    if (!att || att->await != Await::Votes) {
        ++c_.stale_replies;
        return;
    }
    ++att->prepare_roundtrips;
    ++c_.prepare_roundtrips;
    if (!m.yes) att->vote_no = true;
    att->vote_max_rts = std::max(att->vote_max_rts, m.max_rts);
    PRIMO_ASSERT(att->outstanding > 0);
    if (--att->outstanding == 0) twopc_decide(ev.dst, att->worker);
}

inline LogicalTimestamp Cluster::next_2pl_commit_ts(Attempt& att) {
    if (is_wm_only_ts()) {
        PartitionState& part = parts_[att.home];
        std::uint64_t v = effective_wp(part) + 1;
        for (const ReadEntry& e : att.read_set) v = std::max(v, e.wts.value);
        for (const PendingWrite& pw : att.write_set) {
            if (pw.key.partition == att.home)
                v = std::max(v, part.store.find(pw.key)->rts.value + 1);
        }
        v = std::max(v, att.vote_max_rts + 1);
        return LogicalTimestamp{v, att.tid};
    }
    // strict 2PL: the decision order is a valid serial order, so the virtual
    // decision time works as the commit timestamp
    return LogicalTimestamp{static_cast<std::uint64_t>(net_.now()), att.tid};
}

inline void Cluster::twopc_decide(PartitionId p, std::uint16_t w) {
    Attempt& att = *worker(p, w).attempt;
    if (att.vote_no) {
        twopc_abort(p, w, lock_policy() == LockPolicy::NoWait ? AbortReason::LockConflict
                                                              : AbortReason::Die);
        return;
    }
    LogicalTimestamp ts = next_2pl_commit_ts(att);
    att.set_commit_ts(ts);
    PartitionState& part = parts_[p];
    if (is_wm_only_ts() && att.registered) part.active.update_ts(att.tid, ts.value);

    bool has_local_writes = false;
    for (const PendingWrite& pw : att.write_set)
        if (pw.key.partition == p) has_local_writes = true;

    if (cfg_.logging() == LoggingMode::Sync && has_local_writes) {
        // Presumed-Abort: the commit record is forced before any decision
        // message leaves; before-images predate the tentative installs
        std::vector<RedoWrite> redo;
        for (const PendingWrite& pw : att.write_set) {
            if (pw.key.partition != p) continue;
            Value before;
            for (const auto& [uk, urec] : att.tentative_undo)
                if (uk == pw.key) before = urec.value;
            redo.push_back(RedoWrite{pw.key, pw.value, before});
        }
        std::int64_t idx = append_redo(part, att.tid, ts, std::move(redo));
        EvFlushDone f;
        f.p = p;
        f.upto = idx;
        f.purpose = static_cast<std::uint8_t>(FlushPurpose::SyncCommit);
        f.aux = ts.value;
        f.incarnation = part.incarnation;
        f.tid = att.tid;
        net_.schedule(p, cfg_.flush_latency, f);
        att.await = Await::CommitFlush;
        return;
    }
    twopc_commit_final(p, w);
}

inline void Cluster::twopc_commit_final(PartitionId p, std::uint16_t w) {
    Attempt& att = *worker(p, w).attempt;
    PartitionState& part = parts_[p];
    const LogicalTimestamp ts = *att.commit_ts;

    std::vector<PendingWrite> local;
    for (const PendingWrite& pw : att.write_set)
        if (pw.key.partition == p) local.push_back(pw);
    std::vector<RedoWrite> redo;
    for (const PendingWrite& pw : local) {
        Value before = part.store.find(pw.key)->value;
        for (const auto& [uk, urec] : att.tentative_undo)  // pre-tentative image
            if (uk == pw.key) before = urec.value;
        redo.push_back(RedoWrite{pw.key, pw.value, before});
    }
    for (const PendingWrite& pw : local)
        install_committed(part, pw.key, pw.value, ts, att.tid, part.epoch_now);
    att.tentative_undo.clear();
    if (!local.empty() && cfg_.logging() != LoggingMode::Sync)
        append_redo(part, att.tid, ts, std::move(redo));
    if (is_wm_only_ts()) {
        for (const ReadEntry& e : att.read_set) {
            if (!e.local) continue;
            if (part.store.find(e.key)->rts < ts) {
                part.store.extend_rts(e.key, ts);
                ++c_.rts_extensions;
            }
        }
    }

    part.locks.release_all(att.tid, net_.now());
    att.local_locked.clear();
    part.active.erase(att.tid);

    std::vector<PartitionId> write_parts;
    if (!local.empty()) write_parts.push_back(p);
    std::set<PartitionId> remote_writers;
    for (const PendingWrite& pw : att.write_set)
        if (pw.key.partition != p) remote_writers.insert(pw.key.partition);
    for (PartitionId q : remote_writers) write_parts.push_back(q);

    for (PartitionId q : att.participants) {
        MsgDecision d;
        d.tid = att.tid;
        d.commit = true;
        d.ts = ts;
        ++att.decision_oneways;
        ++c_.decision_oneways;
        ++outstanding_effects_;
        net_.send(p, q, std::move(d));
    }

    att.status = TxnStatus::Committing;
    std::size_t trace_idx = record_attempt_trace(att, true, AbortReason::None);
    enqueue_committing(p, att, std::move(write_parts), trace_idx);
    retire_attempt(p, w);
}

inline void Cluster::on_decision(const SimEvent& ev, const MsgDecision& m) {
    if (recovering_) {  // rolled back cluster-wide
        if (outstanding_effects_ > 0) --outstanding_effects_;
        return;
    }
    PartitionState& part = parts_[ev.dst];
    auto st = part.sessions.find(m.tid);
    PRIMO_ASSERT(outstanding_effects_ > 0);
    --outstanding_effects_;
    if (st == part.sessions.end()) {
        if (epoch_closing_) maybe_start_barrier();
        return;  // session cleaned up by an earlier abort in the same term
    }
    ParticipantSession& s = st->second;
    if (m.commit) {
        if (is_wm_only_ts()) {
            std::vector<RedoWrite> redo;
            for (const KeyValue& kv : s.prepare_writes) {
                redo.push_back(RedoWrite{kv.key, kv.value, part.store.find(kv.key)->value});
                install_committed(part, kv.key, kv.value, m.ts, m.tid, part.epoch_now);
            }
            if (!redo.empty()) append_redo(part, m.tid, m.ts, std::move(redo));
            for (const Key& k : s.shared_keys) {
                if (part.store.find(k)->rts < m.ts) {
                    part.store.extend_rts(k, m.ts);
                    ++c_.rts_extensions;
                }
            }
        } else {
            std::vector<RedoWrite> redo;
            for (const KeyValue& kv : s.prepare_writes) {
                Value before = part.store.find(kv.key)->value;
                for (const auto& [uk, urec] : s.tentative_undo)
                    if (uk == kv.key) before = urec.value;
                redo.push_back(RedoWrite{kv.key, kv.value, before});
                install_committed(part, kv.key, kv.value, m.ts, m.tid, part.epoch_now);
            }
            s.tentative_undo.clear();
            if (!redo.empty() && cfg_.logging() != LoggingMode::Sync)
                append_redo(part, m.tid, m.ts, std::move(redo));
        }
    } else {
        // Presumed-Abort: revert tentative installs, nothing is logged
        for (auto it = s.tentative_undo.rbegin(); it != s.tentative_undo.rend(); ++it)
            part.store.restore(it->first, it->second);
        s.tentative_undo.clear();
    }
    part.locks.cancel_wait(m.tid, net_.now());
    part.locks.release_all(m.tid, net_.now());
    part.active.erase(m.tid);
    part.sessions.erase(st);
    if (epoch_closing_) maybe_start_barrier();
}

inline void Cluster::twopc_abort(PartitionId p, std::uint16_t w, AbortReason reason) {
    Attempt& att = *worker(p, w).attempt;
    PartitionState& part = parts_[p];
    for (auto it = att.tentative_undo.rbegin(); it != att.tentative_undo.rend(); ++it)
        part.store.restore(it->first, it->second);
    att.tentative_undo.clear();
    abort_attempt(p, w, reason, false);
}

}  // namespace primo
