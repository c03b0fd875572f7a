#pragma once

// The write-conflict-free distributed path: exclusive locks are taken for
// reads during execution (remote reads lock at the participant), writes are
// buffered, blind writes lock via dummy reads, and the commit phase installs
// everywhere without prepare/vote/decision rounds — by construction no
// conflict is possible once commit starts.

#include <algorithm>

namespace primo {

// --- local -> distributed mode switch ----------------------------------------

// Locks every record read so far in local mode and verifies it has not
// changed; a changed record aborts the attempt, which restarts directly in
// distributed mode. Local blind-write targets buffered in local mode are
// locked as well so the write-set stays lock-covered.
inline void Cluster::begin_switch(PartitionId p, std::uint16_t w) {
    Attempt& att = *worker(p, w).attempt;
    PRIMO_ASSERT(att.mode == TxnMode::Local);
    att.phase_keys.clear();
    for (const ReadEntry& e : att.read_set) att.phase_keys.push_back(e.key);
    for (const PendingWrite& pw : att.write_set)
        if (pw.key.partition == p && !att.read_index.count(pw.key)) att.phase_keys.push_back(pw.key);
    att.phase_idx = 0;
    continue_switch(p, w);
}

inline void Cluster::continue_switch(PartitionId p, std::uint16_t w) {
    Attempt& att = *worker(p, w).attempt;
    PartitionState& part = parts_[p];
    while (att.phase_idx < att.phase_keys.size()) {
        const Key& k = att.phase_keys[att.phase_idx];
        if (!att.local_locked.count(k)) {
            switch (part.locks.acquire(att.tid, k, LockMode::Exclusive, LockPolicy::WaitDie, net_.now())) {
                case LockResult::Granted: att.local_locked.insert(k); break;
                case LockResult::MustWait:
                    att.await = Await::LockSwitch;
                    att.await_key = k;
                    return;
                default:
                    abort_attempt(p, w, AbortReason::Die, false);
                    return;
            }
        }
        auto rd = att.read_index.find(k);
        if (rd != att.read_index.end()) {
            const ReadEntry& e = att.read_set[rd->second];
            const VersionedRecord* rec = part.store.find(k);
            if (rec->wts != e.wts || rec->value != e.value) {
                // the record changed while it was read without a lock:
                // retry immediately, starting in distributed mode
                abort_attempt(p, w, AbortReason::ReadValidationFailed, true);
                return;
            }
        }
        ++att.phase_idx;
    }
    att.mode = TxnMode::Distributed;
    exec_command(p, w);  // re-run the remote access that triggered the switch
}

// --- distributed reads ---------------------------------------------------------

inline void Cluster::dist_read(PartitionId p, std::uint16_t w, const Key& k) {
    Attempt& att = *worker(p, w).attempt;
    if (k.partition == p) {
        switch (parts_[p].locks.acquire(att.tid, k, LockMode::Exclusive, LockPolicy::WaitDie, net_.now())) {
            case LockResult::Granted:
                att.local_locked.insert(k);
                att.await_key = k;
                dist_read_local_locked(p, w);
                return;
            case LockResult::MustWait:
                att.await = Await::LockDistRead;
                att.await_key = k;
                return;
            default:
                abort_attempt(p, w, AbortReason::Die, false);
                return;
        }
    }
    // remote read; piggyback any pending dummy reads for that partition
    MsgRemoteRead m;
    m.tid = att.tid;
    m.key = k;
    auto pd = att.pending_dummies.find(k.partition);
    if (pd != att.pending_dummies.end()) {
        m.dummies = std::move(pd->second);
        att.pending_dummies.erase(pd);
    }
    att.participants.insert(k.partition);
    att.await = Await::RemoteRead;
    att.await_key = k;
    net_.send(p, k.partition, std::move(m));
}

inline void Cluster::dist_read_local_locked(PartitionId p, std::uint16_t w) {
    Attempt& att = *worker(p, w).attempt;
    PartitionState& part = parts_[p];
    const Key& k = att.await_key;
    const VersionedRecord* rec = part.store.find(k);
    if (!rec) {
        abort_attempt(p, w, AbortReason::KeyNotFound, false);
        return;
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
    if (!att.registered) {
        att.lts_value = rec->wts.value;
        register_active(part, att.tid, att.lts_value);
        att.registered = true;
    }
    finish_command(p, w);
}

// --- buffered writes and dummy reads -------------------------------------------

inline void Cluster::buffer_write(PartitionId p, std::uint16_t w, const Key& k, Value v) {
    Attempt& att = *worker(p, w).attempt;
    if (att.has_write(k)) {
        att.write_set[att.write_index[k]].value = std::move(v);
        finish_command(p, w);
        return;
    }
    att.write_index[k] = att.write_set.size();
    att.write_set.push_back(PendingWrite{k, std::move(v)});

    bool covered = att.read_index.count(k) != 0;
    if (!is_wcf_protocol() || att.mode == TxnMode::Local || covered) {
        // local mode buffers without locks (validation or the mode switch
        // locks later); 2PL acquires write locks in the commit phase
        finish_command(p, w);
        return;
    }
    // blind write in distributed mode: dummy read acquires the lock
    if (k.partition == p) {
        switch (parts_[p].locks.acquire(att.tid, k, LockMode::Exclusive, LockPolicy::WaitDie, net_.now())) {
            case LockResult::Granted:
                att.local_locked.insert(k);
                finish_command(p, w);
                return;
            case LockResult::MustWait:
                att.await = Await::LockBlindLocal;
                att.await_key = k;
                return;
            default:
                abort_attempt(p, w, AbortReason::Die, false);
                return;
        }
    }
    // deferred: batched with the next remote read to that partition, or sent
    // as a standalone roundtrip when the commit phase begins
    att.pending_dummies[k.partition].push_back(k);
    att.participants.insert(k.partition);
    finish_command(p, w);
}

// --- commit -----------------------------------------------------------------------

inline void Cluster::wcf_commit_begin(PartitionId p, std::uint16_t w) {
    Attempt& att = *worker(p, w).attempt;
    if (!att.pending_dummies.empty()) {
        att.await = Await::DummyReplies;
        att.outstanding = 0;
        for (auto& [q, keys] : att.pending_dummies) {
            MsgDummyRead m;
            m.tid = att.tid;
            m.keys = keys;
            ++att.outstanding;
            ++att.dummy_roundtrips;
            ++c_.dummy_roundtrips;
            net_.send(p, q, std::move(m));
        }
        att.pending_dummies.clear();
        return;
    }
    wcf_commit_finish(p, w);
}

inline void Cluster::wcf_commit_finish(PartitionId p, std::uint16_t w) {
    Attempt& att = *worker(p, w).attempt;
    PartitionState& part = parts_[p];

    if (!att.registered) {
        att.lts_value = effective_wp(part) + 1;
        register_active(part, att.tid, att.lts_value);
        att.registered = true;
    }

    // commit timestamp: above every read's wts, every write's rts and the
    // current partition-watermark
    std::uint64_t v = effective_wp(part) + 1;
    for (const ReadEntry& e : att.read_set) v = std::max(v, e.wts.value);
    for (const PendingWrite& pw : att.write_set) {
        std::uint64_t rts;
        auto rd = att.read_index.find(pw.key);
        if (pw.key.partition == p) {
            PRIMO_ASSERT_MSG(part.locks.holds_exclusive(att.tid, pw.key),
                             "write-set key not lock-covered at commit");
            rts = part.store.find(pw.key)->rts.value;
        } else if (rd != att.read_index.end()) {
            rts = att.read_set[rd->second].rts.value;
        } else {
            auto br = att.blind_rts.find(pw.key);
            PRIMO_ASSERT_MSG(br != att.blind_rts.end(), "blind write without dummy read");
            rts = br->second;
        }
        v = std::max(v, rts + 1);
    }
    LogicalTimestamp ts{v, att.tid};
    att.set_commit_ts(ts);
    part.active.update_ts(att.tid, ts.value);

    // no validation needed: the exclusive locks make interval extension
    // always possible
    for (const ReadEntry& e : att.read_set) {
        if (!e.local) continue;
        PRIMO_ASSERT_MSG(part.locks.holds_exclusive(att.tid, e.key),
                         "local read entry not lock-covered at commit: " + e.key.str());
        const VersionedRecord* rec = part.store.find(e.key);
        if (rec->rts < ts) {
            part.store.extend_rts(e.key, ts);
            ++c_.rts_extensions;
        }
    }
    std::vector<PendingWrite> local_writes;
    std::map<PartitionId, std::vector<KeyValue>> remote_writes;
    for (const PendingWrite& pw : att.write_set) {
        if (pw.key.partition == p)
            local_writes.push_back(pw);
        else
            remote_writes[pw.key.partition].push_back(KeyValue{pw.key, pw.value});
    }
    std::vector<PartitionId> write_parts;
    std::vector<RedoWrite> redo = capture_redo(part, local_writes);
    for (const PendingWrite& pw : local_writes)
        install_committed(part, pw.key, pw.value, ts, att.tid, part.epoch_now);
    if (!local_writes.empty()) {
        append_redo(part, att.tid, ts, std::move(redo));
        write_parts.push_back(p);
    }
    part.locks.release_all(att.tid, net_.now());
    att.local_locked.clear();
    part.active.erase(att.tid);
    shadow_check_r2(att, ts);

    // one-way installs; participants with reads but no writes get an empty
    // install as their unlock signal
    for (PartitionId q : att.participants) {
        MsgWriteInstall m;
        m.tid = att.tid;
        m.ts = ts;
        auto rw = remote_writes.find(q);
        if (rw != remote_writes.end()) {
            m.writes = std::move(rw->second);
            write_parts.push_back(q);
        }
        ++att.install_oneways;
        ++outstanding_effects_;
        net_.send(p, q, std::move(m));
    }
    PRIMO_ASSERT_MSG(remote_writes.size() <= att.participants.size(),
                     "remote write to a partition that was never contacted");

    att.status = TxnStatus::Committing;
    std::size_t trace_idx = record_attempt_trace(att, true, AbortReason::None);
    enqueue_committing(p, att, std::move(write_parts), trace_idx);
    retire_attempt(p, w);
}

// --- participant side -----------------------------------------------------------

inline void Cluster::on_remote_read(const SimEvent& ev, const MsgRemoteRead& m) {
    PartitionState& part = parts_[ev.dst];
    ParticipantSession& s = part.sessions[m.tid];
    s.stage = ParticipantSession::Stage::RemoteRead;
    s.reply_to = ev.src;
    s.pending_key = m.key;
    s.pending_dummies = m.dummies;
    s.phase_idx = 0;
    s.acks.clear();
    participant_locks_continue(ev.dst, m.tid);
}

inline void Cluster::on_dummy_read(const SimEvent& ev, const MsgDummyRead& m) {
    PartitionState& part = parts_[ev.dst];
    ParticipantSession& s = part.sessions[m.tid];
    s.stage = ParticipantSession::Stage::DummyBatch;
    s.reply_to = ev.src;
    s.pending_key = Key{};
    s.pending_dummies = m.keys;
    s.phase_idx = 0;
    s.acks.clear();
    participant_locks_continue(ev.dst, m.tid);
}

// Sequentially locks the requested key and any batched dummy targets. A
// WAIT_DIE death is reported back to the coordinator, which aborts the
// transaction everywhere.
inline void Cluster::participant_locks_continue(PartitionId p, const TransactionId& tid) {
    PartitionState& part = parts_[p];
    auto st = part.sessions.find(tid);
    if (st == part.sessions.end()) return;  // aborted while a grant was in flight
    ParticipantSession& s = st->second;

    bool has_normal = s.stage == ParticipantSession::Stage::RemoteRead;
    std::size_t total = (has_normal ? 1 : 0) + s.pending_dummies.size();
    while (s.phase_idx < total) {
        const Key& k = (has_normal && s.phase_idx == 0) ? s.pending_key
                                                        : s.pending_dummies[s.phase_idx - (has_normal ? 1 : 0)];
        if (!s.locked.count(k)) {
            switch (part.locks.acquire(tid, k, LockMode::Exclusive, LockPolicy::WaitDie, net_.now())) {
                case LockResult::Granted: s.locked.insert(k); break;
                case LockResult::MustWait: return;  // resumed by the grant callback
                default: {
                    if (has_normal) {
                        MsgReadReply reply;
                        reply.tid = tid;
                        reply.key = s.pending_key;
                        reply.status = ReplyStatus::Die;
                        net_.send(p, s.reply_to, std::move(reply));
                    } else {
                        MsgDummyReply reply;
                        reply.tid = tid;
                        reply.status = ReplyStatus::Die;
                        net_.send(p, s.reply_to, std::move(reply));
                    }
                    s.stage = ParticipantSession::Stage::Idle;
                    return;  // locks stay until the coordinator's abort arrives
                }
            }
        }
        ++s.phase_idx;
    }
    participant_read_served(p, tid);
}

inline void Cluster::participant_read_served(PartitionId p, const TransactionId& tid) {
    PartitionState& part = parts_[p];
    ParticipantSession& s = part.sessions.at(tid);

    if (s.stage == ParticipantSession::Stage::SharedRead) {
        // 2PL shared read
        if (!part.store.contains(s.pending_key)) {
            MsgReadSharedReply reply;
            reply.tid = tid;
            reply.key = s.pending_key;
            reply.status = ReplyStatus::Missing;
            net_.send(p, s.reply_to, std::move(reply));
            s.stage = ParticipantSession::Stage::Idle;
            return;
        }
        if (is_wm_only_ts()) {
            apply_r2(part, s.pending_key);
            if (!part.active.contains(tid))
                register_active(part, tid, part.store.find(s.pending_key)->wts.value);
        }
        s.shared_keys.push_back(s.pending_key);
        const VersionedRecord* rec = part.store.find(s.pending_key);
        MsgReadSharedReply reply;
        reply.tid = tid;
        reply.key = s.pending_key;
        reply.status = ReplyStatus::Ok;
        reply.value = rec->value;
        reply.wts = rec->wts;
        reply.rts = rec->rts;
        reply.version = rec->version;
        net_.send(p, s.reply_to, std::move(reply));
        s.stage = ParticipantSession::Stage::Idle;
        return;
    }

    bool has_normal = s.stage == ParticipantSession::Stage::RemoteRead;

    std::uint64_t first_wts = 0;
    bool first = true;
    if (has_normal) {
        if (!part.store.contains(s.pending_key)) {
            MsgReadReply reply;
            reply.tid = tid;
            reply.key = s.pending_key;
            reply.status = ReplyStatus::Missing;
            net_.send(p, s.reply_to, std::move(reply));
            s.stage = ParticipantSession::Stage::Idle;
            return;
        }
        first_wts = apply_r2(part, s.pending_key);
        first = false;
        s.read_keys.push_back(s.pending_key);
    }
    for (const Key& k : s.pending_dummies) {
        std::uint64_t wts = apply_r2(part, k);
        if (first) {
            first_wts = wts;
            first = false;
        }
        s.acks.push_back(DummyAck{k, part.store.find(k)->rts.value});
    }
    if (!part.active.contains(tid)) register_active(part, tid, first_wts);

    if (has_normal) {
        const VersionedRecord* rec = part.store.find(s.pending_key);
        MsgReadReply reply;
        reply.tid = tid;
        reply.key = s.pending_key;
        reply.status = ReplyStatus::Ok;
        reply.value = rec->value;
        reply.wts = rec->wts;
        reply.rts = rec->rts;
        reply.version = rec->version;
        reply.dummy_acks = std::move(s.acks);
        net_.send(p, s.reply_to, std::move(reply));
    } else {
        MsgDummyReply reply;
        reply.tid = tid;
        reply.status = ReplyStatus::Ok;
        reply.acks = std::move(s.acks);
        net_.send(p, s.reply_to, std::move(reply));
    }
    s.acks.clear();
    s.pending_dummies.clear();
    s.stage = ParticipantSession::Stage::Idle;
}

// Watermark monotonicity adjustment: a record colder than the current
// partition-watermark is lifted above it before the snapshot is returned, so
// the reader's final timestamp always lands above this partition's W_p.
inline std::uint64_t Cluster::apply_r2(PartitionState& part, const Key& k) {
    const VersionedRecord* rec = part.store.find(k);
    PRIMO_ASSERT_MSG(rec != nullptr, "dummy/remote read of unknown key " + k.str());
    std::uint64_t floor = effective_wp(part);
    if (rec->wts.value <= floor) {
        part.store.inflate(k, LogicalTimestamp{floor + 1, rec->wts.tiebreak});
        return floor + 1;
    }
    return rec->wts.value;
}

inline void Cluster::register_active(PartitionState& part, const TransactionId& tid, std::uint64_t lts) {
    part.active.insert(tid, lts);
}

// --- coordinator reply handling ----------------------------------------------------

inline void Cluster::on_read_reply(const SimEvent& ev, const MsgReadReply& m) {
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
    for (const DummyAck& a : m.dummy_acks) att->blind_rts[a.key] = a.rts;
    finish_command(p, w);
}

inline void Cluster::on_dummy_reply(const SimEvent& ev, const MsgDummyReply& m) {
    Attempt* att = attempt_by_tid(m.tid);
    if (!att || att->await != Await::DummyReplies) {
        ++c_.stale_replies;
        return;
    }
    PartitionId p = ev.dst;
    std::uint16_t w = att->worker;
    if (m.status != ReplyStatus::Ok) {
        abort_attempt(p, w, AbortReason::Die, false);
        return;
    }
    for (const DummyAck& a : m.acks) att->blind_rts[a.key] = a.rts;
    PRIMO_ASSERT(att->outstanding > 0);
    if (--att->outstanding == 0) wcf_commit_finish(p, w);
}

// --- participant install / abort ----------------------------------------------------

inline void Cluster::on_write_install(const SimEvent& ev, const MsgWriteInstall& m) {
    if (recovering_) {  // the transaction is being rolled back cluster-wide
        if (outstanding_effects_ > 0) --outstanding_effects_;
        return;
    }
    PartitionState& part = parts_[ev.dst];
    auto st = part.sessions.find(m.tid);
    PRIMO_ASSERT_MSG(st != part.sessions.end(),
                     "write install for unknown transaction " + m.tid.str());
    ParticipantSession& s = st->second;

    for (const Key& k : s.read_keys) {
        const VersionedRecord* rec = part.store.find(k);
        if (rec->rts < m.ts) {
            part.store.extend_rts(k, m.ts);
            ++c_.rts_extensions;
        }
    }
    std::vector<RedoWrite> redo;
    for (const KeyValue& kv : m.writes) {
        PRIMO_ASSERT_MSG(part.locks.holds_exclusive(m.tid, kv.key),
                         "commit-phase install without the exclusive lock");
        redo.push_back(RedoWrite{kv.key, kv.value, part.store.find(kv.key)->value});
        install_committed(part, kv.key, kv.value, m.ts, m.tid, part.epoch_now);
    }
    if (!redo.empty()) append_redo(part, m.tid, m.ts, std::move(redo));

    part.locks.release_all(m.tid, net_.now());
    part.active.erase(m.tid);
    part.sessions.erase(st);
    PRIMO_ASSERT(outstanding_effects_ > 0);
    --outstanding_effects_;
    if (epoch_closing_) maybe_start_barrier();
}

inline void Cluster::on_txn_abort(const SimEvent& ev, const MsgTxnAbort& m) {
    PartitionState& part = parts_[ev.dst];
    auto st = part.sessions.find(m.tid);
    if (st == part.sessions.end()) return;
    part.locks.cancel_wait(m.tid, net_.now());
    part.locks.release_all(m.tid, net_.now());
    part.active.erase(m.tid);
    part.sessions.erase(st);
}

}  // namespace primo
