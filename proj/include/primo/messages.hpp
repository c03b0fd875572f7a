#pragma once

#include <string>
#include <variant>
#include <vector>

#include "primo/ids.hpp"
#include "primo/log.hpp"
#include "primo/record.hpp"
#include "primo/time.hpp"

namespace primo {

// Reply status for request/response pairs.
enum class ReplyStatus : std::uint8_t { Ok = 0, Die = 1, Conflict = 2, Missing = 3 };

struct KeyValue {
    Key key;
    Value value;
    friend bool operator==(const KeyValue&, const KeyValue&) = default;
};

// rts of a blind-write target, returned by a dummy read so the coordinator
// can apply the write constraint when computing the commit timestamp.
struct DummyAck {
    Key key;
    std::uint64_t rts = 0;
    friend bool operator==(const DummyAck&, const DummyAck&) = default;
};

// --- distributed path (execution + commit, no prepare/vote/decision) -------

struct MsgRemoteRead {
    TransactionId tid;
    Key key;
    std::vector<Key> dummies;  // batched dummy reads for pending blind writes
    friend bool operator==(const MsgRemoteRead&, const MsgRemoteRead&) = default;
};

struct MsgReadReply {
    TransactionId tid;
    Key key;
    ReplyStatus status = ReplyStatus::Ok;
    Value value;
    LogicalTimestamp wts, rts, version;
    std::vector<DummyAck> dummy_acks;
    friend bool operator==(const MsgReadReply&, const MsgReadReply&) = default;
};

struct MsgDummyRead {
    TransactionId tid;
    std::vector<Key> keys;
    friend bool operator==(const MsgDummyRead&, const MsgDummyRead&) = default;
};

struct MsgDummyReply {
    TransactionId tid;
    ReplyStatus status = ReplyStatus::Ok;
    std::vector<DummyAck> acks;
    friend bool operator==(const MsgDummyReply&, const MsgDummyReply&) = default;
};

// One-way install: sent at most once per participant; mutually exclusive
// with MsgTxnAbort for the same transaction.
struct MsgWriteInstall {
    TransactionId tid;
    LogicalTimestamp ts;
    std::vector<KeyValue> writes;  // may be empty: unlock signal for read-only participants
    friend bool operator==(const MsgWriteInstall&, const MsgWriteInstall&) = default;
};

struct MsgTxnAbort {
    TransactionId tid;
    friend bool operator==(const MsgTxnAbort&, const MsgTxnAbort&) = default;
};

// --- 2PL + 2PC baseline -----------------------------------------------------

struct MsgReadShared {
    TransactionId tid;
    Key key;
};

struct MsgReadSharedReply {
    TransactionId tid;
    Key key;
    ReplyStatus status = ReplyStatus::Ok;
    Value value;
    LogicalTimestamp wts, rts, version;
};

// Unsolicited-Vote: the prepare message carries the participant's writes.
struct MsgPrepare {
    TransactionId tid;
    std::vector<KeyValue> writes;
};

struct MsgVote {
    TransactionId tid;
    bool yes = true;
    std::uint64_t max_rts = 0;  // timestamp material for the watermark ablation
};

// Presumed-Abort: commit decisions are logged, abort decisions are not.
struct MsgDecision {
    TransactionId tid;
    bool commit = false;
    LogicalTimestamp ts;  // final timestamp under ablation-wm-only
};

// --- group commit -----------------------------------------------------------

struct MsgWatermark {
    std::uint32_t term = 0;
    PartitionId partition = 0;
    std::uint64_t wp = 0;
    TransactionId tiebreak;
    friend bool operator==(const MsgWatermark&, const MsgWatermark&) = default;
};

struct MsgGroupPrepare { std::uint64_t epoch = 0; };
struct MsgGroupReady { std::uint64_t epoch = 0; PartitionId partition = 0; };
struct MsgGroupCommit { std::uint64_t epoch = 0; };
struct MsgGroupAbort { std::uint64_t epoch = 0; };

// --- internal events (timers, continuations) --------------------------------

struct EvWorkerStep { PartitionId p = 0; std::uint16_t worker = 0; std::uint64_t attempt_epoch = 0; };
struct EvClientRetry { PartitionId p = 0; std::uint16_t worker = 0; std::uint64_t attempt_epoch = 0; };
struct EvLockGrant { PartitionId p = 0; TransactionId tid; Key key; };
struct EvFlushDone {
    PartitionId p = 0;
    std::int64_t upto = -1;
    std::uint8_t purpose = 0;  // FlushPurpose
    std::uint64_t aux = 0;     // watermark value / epoch / commit ts value
    std::uint32_t incarnation = 0;
    TransactionId tid;         // sync-logging flushes route back to a transaction
};
struct EvWatermarkTick { PartitionId p = 0; };
struct EvEpochTick { std::uint64_t epoch = 0; };
struct EvEpochTimeout { std::uint64_t epoch = 0; };
struct EvCrash { PartitionId p = 0; };
struct EvRecoveryDone { std::uint32_t term = 0; };

enum class FlushPurpose : std::uint8_t {
    WatermarkMark = 0,  // flush the mark before broadcasting it
    EpochBarrier = 1,   // epoch group-prepare flush
    SyncVote = 2,       // participant flushes its prepare record before voting yes
    SyncCommit = 3,     // coordinator flushes before releasing the result
    Background = 4,     // durability log write with nothing waiting on it
};

using Payload = std::variant<
    MsgRemoteRead, MsgReadReply, MsgDummyRead, MsgDummyReply, MsgWriteInstall, MsgTxnAbort,
    MsgReadShared, MsgReadSharedReply, MsgPrepare, MsgVote, MsgDecision,
    MsgWatermark, MsgGroupPrepare, MsgGroupReady, MsgGroupCommit, MsgGroupAbort,
    EvWorkerStep, EvClientRetry, EvLockGrant, EvFlushDone, EvWatermarkTick, EvEpochTick,
    EvEpochTimeout, EvCrash, EvRecoveryDone>;

inline bool is_watermark_msg(const Payload& p) { return std::holds_alternative<MsgWatermark>(p); }

inline bool is_epoch_ctrl_msg(const Payload& p) {
    return std::holds_alternative<MsgGroupPrepare>(p) || std::holds_alternative<MsgGroupReady>(p) ||
           std::holds_alternative<MsgGroupCommit>(p) || std::holds_alternative<MsgGroupAbort>(p);
}

inline const char* payload_name(const Payload& p) {
    static const char* names[] = {
        "remote_read", "read_reply", "dummy_read", "dummy_reply", "write_install", "txn_abort",
        "read_shared", "read_shared_reply", "prepare", "vote", "decision",
        "watermark", "group_prepare", "group_ready", "group_commit", "group_abort",
        "worker_step", "client_retry", "lock_grant", "flush_done", "watermark_tick", "epoch_tick",
        "epoch_timeout", "crash", "recovery_done"};
    return names[p.index()];
}

// ---------------------------------------------------------------------------
// Wire encoding for the messages that appear in binary message traces. Same
// conventions as log entries: u8 tag, little-endian integers, length-prefixed
// byte strings.
// ---------------------------------------------------------------------------

namespace msgwire {

enum Tag : std::uint8_t {
    kRemoteRead = 0,
    kReadReply = 1,
    kWriteInstall = 2,
    kDummyRead = 3,
    kDummyReply = 4,
    kAbort = 5,
    kWatermark = 6,
};

inline void put_dummy_acks(wire::Writer& w, const std::vector<DummyAck>& acks) {
    w.u32(static_cast<std::uint32_t>(acks.size()));
    for (const DummyAck& a : acks) {
        w.key(a.key);
        w.u64(a.rts);
    }
}

inline std::vector<DummyAck> get_dummy_acks(wire::Reader& r) {
    std::vector<DummyAck> acks(r.u32());
    for (DummyAck& a : acks) {
        a.key = r.key();
        a.rts = r.u64();
    }
    return acks;
}

}  // namespace msgwire

// Encodes the distributed-path and watermark messages; other payloads (2PC
// control, internal events) have no wire form and return an empty string.
inline std::string encode_message(const Payload& p) {
    wire::Writer w;
    if (const auto* m = std::get_if<MsgRemoteRead>(&p)) {
        w.u8(msgwire::kRemoteRead);
        w.tid(m->tid);
        w.key(m->key);
        w.u32(static_cast<std::uint32_t>(m->dummies.size()));
        for (const Key& k : m->dummies) w.key(k);
    } else if (const auto* m = std::get_if<MsgReadReply>(&p)) {
        w.u8(msgwire::kReadReply);
        w.tid(m->tid);
        w.key(m->key);
        w.u8(static_cast<std::uint8_t>(m->status));
        w.bytes(m->value);
        w.ts(m->wts);
        w.ts(m->rts);
        w.ts(m->version);
        msgwire::put_dummy_acks(w, m->dummy_acks);
    } else if (const auto* m = std::get_if<MsgWriteInstall>(&p)) {
        w.u8(msgwire::kWriteInstall);
        w.tid(m->tid);
        w.ts(m->ts);
        w.u32(static_cast<std::uint32_t>(m->writes.size()));
        for (const KeyValue& kv : m->writes) {
            w.key(kv.key);
            w.bytes(kv.value);
        }
    } else if (const auto* m = std::get_if<MsgDummyRead>(&p)) {
        w.u8(msgwire::kDummyRead);
        w.tid(m->tid);
        w.u32(static_cast<std::uint32_t>(m->keys.size()));
        for (const Key& k : m->keys) w.key(k);
    } else if (const auto* m = std::get_if<MsgDummyReply>(&p)) {
        w.u8(msgwire::kDummyReply);
        w.tid(m->tid);
        w.u8(static_cast<std::uint8_t>(m->status));
        msgwire::put_dummy_acks(w, m->acks);
    } else if (const auto* m = std::get_if<MsgTxnAbort>(&p)) {
        w.u8(msgwire::kAbort);
        w.tid(m->tid);
    } else if (const auto* m = std::get_if<MsgWatermark>(&p)) {
        w.u8(msgwire::kWatermark);
        w.u32(m->term);
        w.u16(m->partition);
        w.u64(m->wp);
        w.tid(m->tiebreak);
    }
    return w.take();
}

inline Payload decode_message(const std::string& blob) {
    wire::Reader r(blob);
    switch (r.u8()) {
        case msgwire::kRemoteRead: {
            MsgRemoteRead m;
            m.tid = r.tid();
            m.key = r.key();
            m.dummies.resize(r.u32());
            for (Key& k : m.dummies) k = r.key();
            return m;
        }
        case msgwire::kReadReply: {
            MsgReadReply m;
            m.tid = r.tid();
            m.key = r.key();
            m.status = static_cast<ReplyStatus>(r.u8());
            m.value = r.bytes();
            m.wts = r.ts();
            m.rts = r.ts();
            m.version = r.ts();
            m.dummy_acks = msgwire::get_dummy_acks(r);
            return m;
        }
        case msgwire::kWriteInstall: {
            MsgWriteInstall m;
            m.tid = r.tid();
            m.ts = r.ts();
            m.writes.resize(r.u32());
            for (KeyValue& kv : m.writes) {
                kv.key = r.key();
                kv.value = r.bytes();
            }
            return m;
        }
        case msgwire::kDummyRead: {
            MsgDummyRead m;
            m.tid = r.tid();
            m.keys.resize(r.u32());
            for (Key& k : m.keys) k = r.key();
            return m;
        }
        case msgwire::kDummyReply: {
            MsgDummyReply m;
            m.tid = r.tid();
            m.status = static_cast<ReplyStatus>(r.u8());
            m.acks = msgwire::get_dummy_acks(r);
            return m;
        }
        case msgwire::kAbort: {
            MsgTxnAbort m;
            m.tid = r.tid();
            return m;
        }
        case msgwire::kWatermark: {
            MsgWatermark m;
            m.term = r.u32();
            m.partition = static_cast<PartitionId>(r.u16());
            m.wp = r.u64();
            m.tiebreak = r.tid();
            return m;
        }
        default:
            throw ProtocolViolation("unknown message tag");
    }
}

}  // namespace primo
