#pragma once

// TicToc path for transactions that stay on one partition: lock-free reads
// during execution, then a validation phase that locks the write-set,
// computes the commit timestamp, extends read intervals where possible and
// installs. Exclusive locks held by other transactions only hurt when an
// rts extension is needed.

#include <algorithm>

namespace primo {

inline void Cluster::tictoc_read(PartitionId p, std::uint16_t w, const Key& k) {
    Attempt& att = *worker(p, w).attempt;
    PartitionState& part = parts_[p];
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

inline void Cluster::local_commit_begin(PartitionId p, std::uint16_t w) {
    Attempt& att = *worker(p, w).attempt;
    att.phase_keys.clear();
    for (const PendingWrite& pw : att.write_set) att.phase_keys.push_back(pw.key);
    std::sort(att.phase_keys.begin(), att.phase_keys.end());
    att.phase_idx = 0;
    local_commit_locks(p, w);
}

inline void Cluster::local_commit_locks(PartitionId p, std::uint16_t w) {
    Attempt& att = *worker(p, w).attempt;
    PartitionState& part = parts_[p];
    while (att.phase_idx < att.phase_keys.size()) {
        const Key& k = att.phase_keys[att.phase_idx];
        switch (part.locks.acquire(att.tid, k, LockMode::Exclusive, LockPolicy::WaitDie, net_.now())) {
            case LockResult::Granted:
                att.local_locked.insert(k);
                ++att.phase_idx;
                continue;
            case LockResult::MustWait:
                att.await = Await::LockLocalValidate;
                att.await_key = k;
                return;
            default:
                note_local_abort_blocker(p, k);
                abort_attempt(p, w, AbortReason::Die, false);
                return;
        }
    }
    ++att.phase_idx;  // not resumed again
    local_commit_finish(p, w);
}

inline void Cluster::local_commit_finish(PartitionId p, std::uint16_t w) {
    Attempt& att = *worker(p, w).attempt;
    PartitionState& part = parts_[p];

    if (!att.registered) {
        // write-only transaction: first local effect is the validation itself
        att.lts_value = effective_wp(part) + 1;
        register_active(part, att.tid, att.lts_value);
        att.registered = true;
    }

    // minimal timestamp satisfying reads (>= wts), writes (> rts) and the
    // partition-watermark constraint (> W_p)
    std::uint64_t v = effective_wp(part) + 1;
    for (const ReadEntry& e : att.read_set) v = std::max(v, e.wts.value);
    for (const PendingWrite& pw : att.write_set)
        v = std::max(v, part.store.find(pw.key)->rts.value + 1);
    LogicalTimestamp ts{v, att.tid};

    // validation: every read entry must fit in its interval at ts; checks
    // first, extensions after, so a failed attempt leaves records untouched
    std::vector<const Key*> extensions;
    for (const ReadEntry& e : att.read_set) {
        if (ts.value <= e.rts.value) continue;  // still inside the observed interval
        const VersionedRecord* rec = part.store.find(e.key);
        if (rec->wts != e.wts) {
            abort_attempt(p, w, AbortReason::ReadValidationFailed, false);
            return;
        }
        auto holder = part.locks.exclusive_holder(e.key);
        if (holder && *holder != att.tid && !att.has_write(e.key)) {
            // extending rts under someone else's exclusive lock is the one
            // case where the extra locks can abort a local transaction
            note_local_abort_blocker(p, e.key);
            abort_attempt(p, w, AbortReason::ReadValidationFailed, false);
            return;
        }
        if (rec->rts < ts) extensions.push_back(&e.key);
    }
    for (const Key* k : extensions) {
        part.store.extend_rts(*k, ts);
        ++c_.rts_extensions;
    }

    att.set_commit_ts(ts);
    part.active.update_ts(att.tid, ts.value);

    std::vector<RedoWrite> redo = capture_redo(part, att.write_set);
    for (const PendingWrite& pw : att.write_set)
        install_committed(part, pw.key, pw.value, ts, att.tid, part.epoch_now);
    std::vector<PartitionId> write_parts;
    if (!att.write_set.empty()) {
        append_redo(part, att.tid, ts, std::move(redo));
        write_parts.push_back(p);
    }
    part.locks.release_all(att.tid, net_.now());
    att.local_locked.clear();
    part.active.erase(att.tid);
    shadow_check_r2(att, ts);

    att.status = TxnStatus::Committing;
    std::size_t trace_idx = record_attempt_trace(att, true, AbortReason::None);
    enqueue_committing(p, att, std::move(write_parts), trace_idx);
    retire_attempt(p, w);
}

// Classifies the lock blocking a local transaction: when the holder is a
// distributed transaction that only read the record (took the exclusive lock
// without writing it), the abort is attributable to the extra read locks.
inline void Cluster::note_local_abort_blocker(PartitionId p, const Key& k) {
    auto holder = parts_[p].locks.exclusive_holder(k);
    if (!holder) return;
    // coordinator-side holder on its home partition
    if (Attempt* other = attempt_by_tid(*holder)) {
        if (other->is_distributed() && !other->has_write(k)) ++c_.extra_xlock_local_aborts;
        return;
    }
    // participant-side holder: a remote transaction's session
    auto st = parts_[p].sessions.find(*holder);
    if (st != parts_[p].sessions.end()) {
        const ParticipantSession& s = st->second;
        bool is_read = std::find(s.read_keys.begin(), s.read_keys.end(), k) != s.read_keys.end();
        bool is_write = false;
        for (const KeyValue& kv : s.prepare_writes)
            if (kv.key == k) is_write = true;
        if (is_read && !is_write) ++c_.extra_xlock_local_aborts;
    }
}

}  // namespace primo
