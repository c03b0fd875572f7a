#pragma once

// Cluster construction, the event dispatch loop, the closed-loop worker
// state machines and the attempt lifecycle. Protocol-specific flows live in
// the sibling headers.

#include <algorithm>

namespace primo {

inline Cluster::Cluster(RunConfig cfg)
    : cfg_(std::move(cfg)), net_(cfg_, cfg_.seed ^ 0x5eed5eed5eedULL) {
    PRIMO_ASSERT_MSG(cfg_.partitions >= 1, "need at least one partition");
    init_partitions();
}

inline void Cluster::init_partitions() {
    // deque: partitions are constructed in place and never relocated
    for (PartitionId p = 0; p < cfg_.partitions; ++p) {
        PartitionState& part = parts_.emplace_back();
        part.id = p;
        part.store = build_initial_store(cfg_.workload, p);
        part.table = WatermarkTable(cfg_.partitions, p);
        part.locks.set_grant_callback([this, p](const TransactionId& tid, const Key& key) {
            net_.schedule(p, 0, EvLockGrant{p, tid, key});
        });
        // startup checkpoint: snapshot 0 is durable before any traffic
        part.snapshots[0] = part.store;
        part.next_snapshot = 1;
        part.log.append(CheckpointRef{0});
        part.log.flush(0);

        std::uint16_t h = cfg_.workers_at(p);
        part.workers.resize(h);
        for (std::uint16_t w = 0; w < h; ++w) {
            WorkerState& ws = part.workers[w];
            ws.partition = p;
            ws.index = w;
            ws.rng = Rng(cfg_.seed).fork((static_cast<std::uint64_t>(p) << 20) | w);
            ws.gen = std::make_unique<WorkloadGenerator>(cfg_.workload, cfg_.partitions, p);
        }
        initial_.push_back(part.store);
        if (cfg_.logging() == LoggingMode::Watermark) arm_watermark_tick(p);
    }
    if (cfg_.logging() == LoggingMode::Epoch) arm_epoch_tick(cfg_.epoch_len);
    for (const CrashPlan& c : cfg_.crashes) {
        PRIMO_ASSERT_MSG(c.partition < cfg_.partitions, "crash partition out of range");
        PRIMO_ASSERT_MSG(cfg_.logging() != LoggingMode::Epoch || c.partition != 0,
                         "the epoch coordinator partition cannot be crashed");
        net_.inject_crash(c.partition, c.at);
    }
}

inline void Cluster::seed_record(const Key& k, Value v, std::uint64_t wts, std::uint64_t rts) {
    PRIMO_ASSERT(rts >= wts);
    VersionedRecord rec;
    rec.value = std::move(v);
    rec.wts = LogicalTimestamp{wts, {}};
    rec.rts = LogicalTimestamp{rts, {}};
    rec.version = rec.wts;
    PartitionState& part = parts_.at(k.partition);
    if (!part.store.contains(k)) part.store.put_initial(k, rec.value);
    part.store.restore(k, rec);
    part.max_assigned = std::max(part.max_assigned, wts);
    if (!initial_[k.partition].contains(k)) initial_[k.partition].put_initial(k, rec.value);
    initial_[k.partition].restore(k, rec);
    part.snapshots[0] = part.store;
}

inline void Cluster::run() {
    for (PartitionId p = 0; p < cfg_.partitions; ++p)
        for (std::uint16_t w = 0; w < parts_[p].workers.size(); ++w) schedule_step(p, w, 0);
    bool finished = drain();
    PRIMO_ASSERT_MSG(finished, "run did not quiesce before max_time");
}

inline bool Cluster::drain() {
    return net_.run_until(cfg_.max_time, [this](const SimEvent& ev) {
        handle(ev);
        if (after_event) after_event(ev);
    });
}

inline void Cluster::enqueue_script(PartitionId p, std::uint16_t w, Program prog) {
    worker(p, w).script.push_back(std::move(prog));
    schedule_step(p, w, 0);
}

// --- dispatch ---------------------------------------------------------------

inline void Cluster::handle(const SimEvent& ev) {
    if (event_trace_) trace_line(ev);
    if (ev.is_message && msg_trace_) emit_msg(ev.payload);

    std::visit(
        [&](const auto& m) {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, EvWorkerStep>) on_worker_step(m);
            else if constexpr (std::is_same_v<T, EvClientRetry>) on_client_retry(m);
            else if constexpr (std::is_same_v<T, EvLockGrant>) on_lock_grant(m);
            else if constexpr (std::is_same_v<T, EvFlushDone>) on_flush_done(m);
            else if constexpr (std::is_same_v<T, EvWatermarkTick>) on_watermark_tick(m);
            else if constexpr (std::is_same_v<T, EvEpochTick>) on_epoch_tick(m);
            else if constexpr (std::is_same_v<T, EvEpochTimeout>) on_epoch_timeout(m);
            else if constexpr (std::is_same_v<T, EvCrash>) on_crash(m);
            else if constexpr (std::is_same_v<T, EvRecoveryDone>) on_recovery_done(m);
            else if constexpr (std::is_same_v<T, MsgRemoteRead>) on_remote_read(ev, m);
            else if constexpr (std::is_same_v<T, MsgReadReply>) on_read_reply(ev, m);
            else if constexpr (std::is_same_v<T, MsgDummyRead>) on_dummy_read(ev, m);
            else if constexpr (std::is_same_v<T, MsgDummyReply>) on_dummy_reply(ev, m);
            else if constexpr (std::is_same_v<T, MsgWriteInstall>) on_write_install(ev, m);
            else if constexpr (std::is_same_v<T, MsgTxnAbort>) on_txn_abort(ev, m);
            else if constexpr (std::is_same_v<T, MsgReadShared>) on_read_shared(ev, m);
            else if constexpr (std::is_same_v<T, MsgReadSharedReply>) on_read_shared_reply(ev, m);
            else if constexpr (std::is_same_v<T, MsgPrepare>) on_prepare(ev, m);
            else if constexpr (std::is_same_v<T, MsgVote>) on_vote(ev, m);
            else if constexpr (std::is_same_v<T, MsgDecision>) on_decision(ev, m);
            else if constexpr (std::is_same_v<T, MsgWatermark>) on_watermark_msg(ev, m);
            else if constexpr (std::is_same_v<T, MsgGroupPrepare>) on_group_prepare(ev, m);
            else if constexpr (std::is_same_v<T, MsgGroupReady>) on_group_ready(ev, m);
            else if constexpr (std::is_same_v<T, MsgGroupCommit>) on_group_commit(ev, m);
            else if constexpr (std::is_same_v<T, MsgGroupAbort>) on_group_abort(ev, m);
        },
        ev.payload);
}

inline void Cluster::trace_line(const SimEvent& ev) {
    std::string line = format_time(ev.at);
    line += " ";
    line += std::to_string(ev.dst);
    line += " ";
    line += payload_name(ev.payload);
    if (ev.is_message) line += " from=" + std::to_string(ev.src);
    emit(line);
}

inline void Cluster::emit(const std::string& line) {
    if (event_trace_) {
        *event_trace_ += line;
        *event_trace_ += "\n";
    }
}

inline void Cluster::emit_msg(const Payload& p) {
    if (!msg_trace_) return;
    std::string blob = encode_message(p);
    if (blob.empty()) return;
    wire::Writer framed;
    framed.u32(static_cast<std::uint32_t>(blob.size()));
    *msg_trace_ += framed.take() + blob;
}

// --- worker loop --------------------------------------------------------------

inline void Cluster::schedule_step(PartitionId p, std::uint16_t w, SimTime delay) {
    net_.schedule(p, delay, EvWorkerStep{p, w, worker(p, w).guard});
}

inline bool Cluster::generation_open() const {
    if (net_.now() >= cfg_.duration) return false;
    if (cfg_.txn_limit && c_.attempts >= cfg_.txn_limit) return false;
    return true;
}

inline bool Cluster::work_pending() const {
    if (inflight_attempts_ > 0 || outstanding_effects_ > 0) return true;
    if (net_.now() < cfg_.duration && cfg_.duration > 0) return true;
    for (const PartitionState& part : parts_) {
        if (!part.committing.empty()) return true;
        for (const WorkerState& ws : part.workers)
            if (ws.client || ws.attempt || ws.script_pos < ws.script.size()) return true;
    }
    return false;
}

inline void Cluster::on_worker_step(const EvWorkerStep& ev) {
    WorkerState& ws = worker(ev.p, ev.worker);
    if (ev.attempt_epoch != ws.guard) return;  // stale continuation
    if (!net_.alive(ev.p)) return;
    if (!ws.attempt) {
        worker_next(ev.p, ev.worker);
        return;
    }
    if (ws.attempt->pc < ws.client->prog.cmds.size())
        exec_command(ev.p, ev.worker);
    else
        reach_commit(ev.p, ev.worker);
}

inline void Cluster::on_client_retry(const EvClientRetry& ev) {
    WorkerState& ws = worker(ev.p, ev.worker);
    if (ev.attempt_epoch != ws.guard) return;
    if (!net_.alive(ev.p)) return;
    if (!admission_open() || parts_[ev.p].paused) {
        ws.wants_retry = true;  // resumed when the barrier/recovery finishes
        return;
    }
    start_attempt(ev.p, ev.worker);
}

inline void Cluster::worker_next(PartitionId p, std::uint16_t w) {
    WorkerState& ws = worker(p, w);
    if (ws.attempt) return;
    if (!admission_open() || parts_[p].paused) {
        ws.wants_retry = true;
        return;
    }
    if (ws.client) {
        start_attempt(p, w);
        return;
    }
    if (ws.script_pos < ws.script.size()) {
        ClientTxn c;
        c.id = client_counter_++;
        c.prog = ws.script[ws.script_pos++];
        c.submit = net_.now();
        ws.client = std::move(c);
        start_attempt(p, w);
        return;
    }
    if (!ws.gen || !generation_open()) return;  // dormant; drain continues elsewhere
    ClientTxn c;
    c.id = client_counter_++;
    c.prog = ws.gen->generate(ws.rng, c.id);
    c.submit = net_.now();
    ws.client = std::move(c);
    start_attempt(p, w);
}

inline void Cluster::start_attempt(PartitionId p, std::uint16_t w) {
    WorkerState& ws = worker(p, w);
    PRIMO_ASSERT(ws.client.has_value());
    ws.wants_retry = false;
    ws.guard++;
    ws.attempt = std::make_unique<Attempt>();
    Attempt& att = *ws.attempt;
    att.tid = next_tid(p, parts_[p].tid_counter);
    att.client_id = ws.client->id;
    att.home = p;
    att.worker = w;
    att.guard = ws.guard;
    if (pure_2pl())
        att.mode = TxnMode::Distributed;  // pure 2PL: one path for local and distributed
    else
        att.mode = ws.client->retry_distributed ? TxnMode::Distributed : TxnMode::Local;
    ws.client->attempts++;
    routes_[att.tid] = {p, w};
    ++c_.attempts;
    ++inflight_attempts_;
    if (!ws.client->prog.touches_remote()) ++c_.local_attempts;
    // release machinery may have gone quiet; new work restarts it everywhere
    // (the global watermark needs every partition's W_p to keep moving)
    if (cfg_.logging() == LoggingMode::Watermark)
        for (PartitionId q = 0; q < cfg_.partitions; ++q)
            if (net_.alive(q)) arm_watermark_tick(q);
    if (cfg_.logging() == LoggingMode::Epoch) arm_epoch_tick(cfg_.epoch_len);
    schedule_step(p, w, cfg_.t_l);
}

// Interprets the next command of the current program. Distributed-capable
// protocols route through their own read/write paths.
inline void Cluster::exec_command(PartitionId p, std::uint16_t w) {
    WorkerState& ws = worker(p, w);
    Attempt& att = *ws.attempt;
    const Command& cmd = ws.client->prog.cmds[att.pc];

    Key key;
    Value value;
    bool is_read = false;
    if (const auto* r = std::get_if<OpRead>(&cmd)) {
        key = r->key;
        is_read = true;
    } else if (const auto* wr = std::get_if<OpWrite>(&cmd)) {
        key = wr->key;
        value = wr->value;
    } else {
        const auto& br = std::get<OpBranchWrite>(cmd);
        std::uint64_t parity = att.last_read.size();
        for (unsigned char ch : att.last_read) parity += ch;
        key = (parity % 2 == 0) ? br.if_even : br.if_odd;
        value = br.value;
    }

    // TicToc runs local transactions for the write-conflict-free protocols
    // and for the watermark ablation; discovering a remote access mid-flight
    // switches modes (in place for WCF, via an immediate distributed retry
    // for the ablation's 2PL path).
    bool tictoc_local = att.mode == TxnMode::Local &&
                        (is_wcf_protocol() || cfg_.protocol == Protocol::AblationWmOnly);

    if (is_read) {
        // read own buffered write: no observation, no locks
        if (att.has_write(key)) {
            att.last_read = att.write_set[att.write_index[key]].value;
            finish_command(p, w);
            return;
        }
        if (tictoc_local) {
            if (key.partition == p) {
                tictoc_read(p, w, key);
            } else if (is_wcf_protocol()) {
                begin_switch(p, w);  // re-executes this command in distributed mode
            } else {
                abort_attempt(p, w, AbortReason::ReadValidationFailed, true);
            }
            return;
        }
        if (is_wcf_protocol()) {
            dist_read(p, w, key);
            return;
        }
        twopl_read(p, w, key);
        return;
    }

    if (tictoc_local && key.partition != p) {
        if (is_wcf_protocol())
            begin_switch(p, w);  // first remote access may be a buffered write
        else
            abort_attempt(p, w, AbortReason::ReadValidationFailed, true);
        return;
    }
    buffer_write(p, w, key, std::move(value));
}

inline void Cluster::finish_command(PartitionId p, std::uint16_t w) {
    Attempt& att = *worker(p, w).attempt;
    att.await = Await::None;
    ++att.pc;
    schedule_step(p, w, cfg_.t_l);
}

inline void Cluster::reach_commit(PartitionId p, std::uint16_t w) {
    Attempt& att = *worker(p, w).attempt;
    PRIMO_ASSERT(att.status == TxnStatus::Running);
    if (is_wcf_protocol()) {
        if (att.mode == TxnMode::Local)
            local_commit_begin(p, w);
        else
            wcf_commit_begin(p, w);
        return;
    }
    if (cfg_.protocol == Protocol::AblationWmOnly && att.mode == TxnMode::Local) {
        local_commit_begin(p, w);
        return;
    }
    twopc_commit_begin(p, w);
}

// Writes the trace row for a finished attempt; returns its index.
inline std::size_t Cluster::record_attempt_trace(Attempt& att, bool committed, AbortReason reason) {
    TraceTxn t;
    t.client_id = att.client_id;
    t.tid = att.tid;
    t.coordinator = att.home;
    t.distributed = att.is_distributed();
    t.committed = committed;
    t.released = false;
    t.abort_reason = reason;
    if (att.commit_ts) t.commit_ts = *att.commit_ts;
    t.reads = att.obs_reads;
    if (committed)
        for (const PendingWrite& pw : att.write_set) t.writes.push_back(WriteObs{pw.key, pw.value});
    std::set<PartitionId> touched = att.participants;
    touched.insert(att.home);
    t.partitions.assign(touched.begin(), touched.end());
    t.read_roundtrips = att.read_roundtrips;
    t.dummy_roundtrips = att.dummy_roundtrips;
    t.prepare_roundtrips = att.prepare_roundtrips;
    t.install_oneways = att.install_oneways;
    t.decision_oneways = att.decision_oneways;
    t.submit = worker(att.home, att.worker).client->submit;
    t.finish = net_.now();
    trace_.txns.push_back(std::move(t));
    return trace_.txns.size() - 1;
}

// Tears down the current attempt after an abort decision: every local lock
// and queued wait goes away, every contacted participant hears an abort,
// and the client either retries (with exponential backoff) or retries
// immediately in distributed mode after a failed mode switch.
inline void Cluster::abort_attempt(PartitionId p, std::uint16_t w, AbortReason reason,
                                   bool immediate_distributed) {
    WorkerState& ws = worker(p, w);
    Attempt& att = *ws.attempt;
    PartitionState& part = parts_[p];

    part.locks.cancel_wait(att.tid, net_.now());
    part.locks.release_all(att.tid, net_.now());
    part.active.erase(att.tid);
    for (PartitionId q : att.participants) {
        if (is_wcf_protocol()) {
            net_.send(p, q, MsgTxnAbort{att.tid});
        } else {
            // the 2PC family releases participant locks with an abort
            // decision (never logged under Presumed-Abort)
            MsgDecision d;
            d.tid = att.tid;
            d.commit = false;
            ++att.decision_oneways;
            ++c_.decision_oneways;
            ++outstanding_effects_;
            net_.send(p, q, std::move(d));
        }
    }

    att.status = TxnStatus::Aborted;
    record_attempt_trace(att, false, reason);
    bump_abort(reason);
    if (!ws.client->prog.touches_remote()) ++c_.local_aborts;

    routes_.erase(att.tid);
    ws.attempt.reset();
    ws.guard++;
    PRIMO_ASSERT(inflight_attempts_ > 0);
    --inflight_attempts_;
    if (epoch_closing_) maybe_start_barrier();

    if (reason == AbortReason::CrashRollback || reason == AbortReason::EpochAbort) {
        // recovery decides whether the client is requeued
        return;
    }
    if (reason == AbortReason::KeyNotFound) {
        // permanent error: retrying cannot succeed
        ws.client.reset();
        schedule_step(p, w, 0);
        return;
    }

    ++c_.retries;
    if (immediate_distributed) {
        ws.client->retry_distributed = true;
        net_.schedule(p, 0, EvClientRetry{p, w, ws.guard});
        return;
    }
    SimTime backoff = cfg_.backoff_init;
    for (std::uint32_t i = 1; i < ws.client->attempts && backoff < cfg_.backoff_cap; ++i) backoff *= 2;
    backoff = std::min(backoff, cfg_.backoff_cap);
    net_.schedule(p, backoff, EvClientRetry{p, w, ws.guard});
}

// Completes the client transaction from the worker's perspective (the result
// may still be waiting for the group commit) and moves on.
inline void Cluster::retire_attempt(PartitionId p, std::uint16_t w) {
    WorkerState& ws = worker(p, w);
    routes_.erase(ws.attempt->tid);
    ws.attempt.reset();
    ws.client.reset();
    ws.guard++;
    PRIMO_ASSERT(inflight_attempts_ > 0);
    --inflight_attempts_;
    if (epoch_closing_) maybe_start_barrier();
    schedule_step(p, w, 0);
}

inline void Cluster::kick_idle_workers() {
    for (PartitionState& part : parts_) {
        if (!net_.alive(part.id) || part.paused) continue;
        for (WorkerState& ws : part.workers) {
            if (ws.attempt) continue;
            if (ws.wants_retry || ws.client || ws.script_pos < ws.script.size() || generation_open()) {
                ws.wants_retry = false;
                schedule_step(part.id, ws.index, 0);
            }
        }
    }
}

inline Attempt* Cluster::attempt_by_tid(const TransactionId& tid) {
    auto it = routes_.find(tid);
    if (it == routes_.end()) return nullptr;
    return worker(it->second.first, it->second.second).attempt.get();
}

// --- lock grant routing -------------------------------------------------------

inline void Cluster::on_lock_grant(const EvLockGrant& ev) {
    if (!net_.alive(ev.p)) return;
    auto rt = routes_.find(ev.tid);
    if (rt != routes_.end() && rt->second.first == ev.p) {
        Attempt* att = worker(rt->second.first, rt->second.second).attempt.get();
        if (att && att->await_key == ev.key) {
            resume_attempt_lock(ev.p, rt->second.second);
            return;
        }
    }
    auto st = parts_[ev.p].sessions.find(ev.tid);
    if (st != parts_[ev.p].sessions.end()) {
        st->second.locked.insert(ev.key);
        switch (st->second.stage) {
            case ParticipantSession::Stage::Prepare:
                participant_prepare_continue(ev.p, ev.tid);
                break;
            case ParticipantSession::Stage::SharedRead:
                participant_read_served(ev.p, ev.tid);
                break;
            case ParticipantSession::Stage::RemoteRead:
            case ParticipantSession::Stage::DummyBatch:
                participant_locks_continue(ev.p, ev.tid);
                break;
            default:
                break;
        }
    }
    // otherwise: the owner aborted between hand-off and delivery; the lock
    // was already released by the abort path
}

// --- metrics assembly -----------------------------------------------------------

inline RunMetrics Cluster::metrics() const {
    RunMetrics m;
    m.protocol = protocol_name(cfg_.protocol);
    m.seed = cfg_.seed;
    m.sim_duration = to_units(net_.now());
    m.attempts = c_.attempts;
    m.committed = c_.committed;
    m.retries = c_.retries;
    auto reason = [&](AbortReason r) { return c_.aborts[static_cast<std::size_t>(r)]; };
    m.aborts_lock_conflict = reason(AbortReason::LockConflict);
    m.aborts_die = reason(AbortReason::Die);
    m.aborts_read_validation = reason(AbortReason::ReadValidationFailed);
    m.aborts_key_not_found = reason(AbortReason::KeyNotFound);
    m.aborts_crash_rollback = reason(AbortReason::CrashRollback);
    m.aborts_epoch = reason(AbortReason::EpochAbort);
    std::uint64_t finished = m.committed + m.total_aborts();
    m.pending = c_.attempts > finished ? c_.attempts - finished : 0;
    // throughput over the generation window: the drain tail releases the
    // stragglers but admits no new work, so it does not count as load time
    double window = cfg_.duration > 0 ? to_units(cfg_.duration) : m.sim_duration;
    m.throughput = window > 0 ? static_cast<double>(m.committed) / window : 0.0;

    std::vector<SimTime> lat = latencies_;
    if (!lat.empty()) {
        std::sort(lat.begin(), lat.end());
        auto pct = [&](double q) {
            std::size_t idx = static_cast<std::size_t>(q * static_cast<double>(lat.size() - 1));
            return to_units(lat[idx]);
        };
        m.latency_p50 = pct(0.50);
        m.latency_p99 = pct(0.99);
        double sum = 0;
        for (SimTime t : lat) sum += to_units(t);
        m.latency_mean = sum / static_cast<double>(lat.size());
    }

    const NetCounters& nc = net_.counters();
    m.msgs_sent = nc.sent;
    m.msgs_delivered = nc.delivered;
    m.msgs_dropped_crashed = nc.dropped_crashed;
    m.msgs_dropped_stale = nc.dropped_stale_term;
    m.read_roundtrips = c_.read_roundtrips;
    m.dummy_roundtrips = c_.dummy_roundtrips;
    m.prepare_roundtrips = c_.prepare_roundtrips;
    m.install_oneways = c_.install_oneways;
    m.decision_oneways = c_.decision_oneways;
    m.watermark_broadcasts = c_.watermark_broadcasts;
    m.epoch_prepare_rounds = c_.epoch_prepare_rounds;
    m.epoch_ready_msgs = c_.epoch_ready_msgs;
    m.epoch_commit_rounds = c_.epoch_commit_rounds;
    m.epoch_abort_rounds = c_.epoch_abort_rounds;

    double hold_units = 0;
    std::uint64_t holds = 0;
    for (const PartitionState& part : parts_) {
        hold_units += part.locks.total_hold_units();
        holds += part.locks.completed_holds();
    }
    m.completed_holds = holds;
    m.mean_lock_hold = holds ? hold_units / static_cast<double>(holds) : 0.0;

    m.commit_phase_lock_waits = c_.commit_phase_lock_waits;
    m.commit_phase_aborts = c_.commit_phase_aborts;
    m.prepare_phase_conflicts = c_.prepare_phase_conflicts;
    m.local_attempts = c_.local_attempts;
    m.local_aborts = c_.local_aborts;
    m.extra_xlock_local_aborts = c_.extra_xlock_local_aborts;
    m.reads_total = c_.reads_total;
    m.rts_extensions = c_.rts_extensions;
    m.crash_aborts = c_.crash_aborts;
    m.recoveries = c_.recoveries;
    m.recovery_duration = to_units(c_.recovery_ticks);
    for (const PartitionState& part : parts_) m.wp_series.push_back(part.wp_samples);
    return m;
}

inline void Cluster::resume_attempt_lock(PartitionId p, std::uint16_t w) {
    Attempt& att = *worker(p, w).attempt;
    att.local_locked.insert(att.await_key);
    switch (att.await) {
        case Await::LockDistRead: dist_read_local_locked(p, w); break;
        case Await::LockSwitch: continue_switch(p, w); break;
        case Await::LockLocalValidate: local_commit_locks(p, w); break;
        case Await::LockBlindLocal: finish_command(p, w); break;
        case Await::LockSharedRead: twopl_read_locked(p, w); break;
        case Await::LockUpgrade: twopc_upgrade_continue(p, w); break;
        default: PRIMO_ASSERT_MSG(false, "unexpected lock grant");
    }
}

}  // namespace primo
