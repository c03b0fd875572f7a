#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <functional>
#include <map>
#include <string>
#include <variant>
#include <vector>

#include "primo/assert.hpp"
#include "primo/ids.hpp"
#include "primo/record.hpp"

namespace primo {

// ---------------------------------------------------------------------------
// Log entries
// ---------------------------------------------------------------------------

struct RedoWrite {
    Key key;
    Value value;
    Value before;  // pre-image, needed to undo installed writes on rollback

    friend bool operator==(const RedoWrite&, const RedoWrite&) = default;
};

struct TxnRedo {
    TransactionId tid;
    LogicalTimestamp ts;
    std::vector<RedoWrite> writes;

    friend bool operator==(const TxnRedo&, const TxnRedo&) = default;
};

struct WatermarkMark {
    std::uint64_t wp = 0;

    friend bool operator==(const WatermarkMark&, const WatermarkMark&) = default;
};

struct CheckpointRef {
    std::uint64_t snapshot_id = 0;

    friend bool operator==(const CheckpointRef&, const CheckpointRef&) = default;
};

using LogEntry = std::variant<TxnRedo, WatermarkMark, CheckpointRef>;

// Append-only per-partition log. Appending does not make an entry durable;
// only entries at index <= flushed_upto() survive a crash. Flush latency is
// charged by the simulation clock, not here.
class DurableLog {
public:
    std::int64_t append(LogEntry entry) {
        entries_.push_back(std::move(entry));
        return static_cast<std::int64_t>(entries_.size()) - 1;
    }

    void flush(std::int64_t upto) {
        PRIMO_ASSERT(upto < static_cast<std::int64_t>(entries_.size()));
        if (upto > flushed_) flushed_ = upto;
    }

    std::int64_t flushed_upto() const { return flushed_; }
    std::int64_t size() const { return static_cast<std::int64_t>(entries_.size()); }
    const LogEntry& entry(std::int64_t i) const { return entries_.at(static_cast<std::size_t>(i)); }

    // Crash: the volatile tail beyond flushed_upto is gone.
    void truncate_to_flushed() { entries_.resize(static_cast<std::size_t>(flushed_ + 1)); }

    const std::vector<LogEntry>& entries() const { return entries_; }

private:
    std::vector<LogEntry> entries_;
    std::int64_t flushed_ = -1;
};

// ---------------------------------------------------------------------------
// Binary encoding
//
// Length-prefixed records: u32 payload length, u8 tag (0 = TxnRedo,
// 1 = WatermarkMark, 2 = Checkpoint), little-endian fixed-width integers,
// length-prefixed byte strings. Keys are encoded as their 12 canonical bytes
// (u32 partition, u64 id). The encoding is bit-exact so recovery tests can be
// replayed from files.
// ---------------------------------------------------------------------------

namespace wire {

class Writer {
public:
    void u8(std::uint8_t v) { buf_.push_back(static_cast<char>(v)); }
    void u16(std::uint16_t v) { raw(&v, 2); }
    void u32(std::uint32_t v) { raw(&v, 4); }
    void u64(std::uint64_t v) { raw(&v, 8); }
    void bytes(const std::string& s) {
        u32(static_cast<std::uint32_t>(s.size()));
        buf_.append(s);
    }
    void key(const Key& k) {
        u32(12);
        u32(static_cast<std::uint32_t>(k.partition));
        u64(k.id);
    }
    void tid(const TransactionId& t) {
        u32(t.server);
        u64(t.counter);
    }
    void ts(const LogicalTimestamp& t) {
        u64(t.value);
        tid(t.tiebreak);
    }
    const std::string& str() const { return buf_; }
    std::string take() { return std::move(buf_); }

private:
    void raw(const void* p, std::size_t n) {
        // Little-endian hosts only; byte-swapping is not needed on any target
        // this project runs on.
        buf_.append(static_cast<const char*>(p), n);
    }
    std::string buf_;
};

class Reader {
public:
    Reader(const char* data, std::size_t size) : data_(data), size_(size) {}
    explicit Reader(const std::string& s) : Reader(s.data(), s.size()) {}

    std::uint8_t u8() { return static_cast<std::uint8_t>(take(1)[0]); }
    std::uint16_t u16() { return load<std::uint16_t>(); }
    std::uint32_t u32() { return load<std::uint32_t>(); }
    std::uint64_t u64() { return load<std::uint64_t>(); }
    std::string bytes() {
        std::uint32_t n = u32();
        const char* p = take(n);
        return std::string(p, n);
    }
    Key key() {
        std::uint32_t n = u32();
        PRIMO_ASSERT_MSG(n == 12, "malformed key encoding");
        Key k;
        k.partition = static_cast<PartitionId>(u32());
        k.id = u64();
        return k;
    }
    TransactionId tid() {
        TransactionId t;
        t.server = u32();
        t.counter = u64();
        return t;
    }
    LogicalTimestamp ts() {
        LogicalTimestamp t;
        t.value = u64();
        t.tiebreak = tid();
        return t;
    }
    bool at_end() const { return pos_ == size_; }
    std::size_t remaining() const { return size_ - pos_; }

private:
    template <typename T>
    T load() {
        T v;
        std::memcpy(&v, take(sizeof(T)), sizeof(T));
        return v;
    }
    const char* take(std::size_t n) {
        PRIMO_ASSERT_MSG(pos_ + n <= size_, "truncated record");
        const char* p = data_ + pos_;
        pos_ += n;
        return p;
    }
    const char* data_;
    std::size_t size_;
    std::size_t pos_ = 0;
};

}  // namespace wire

inline void encode_entry_body(wire::Writer& w, const LogEntry& e) {
    if (const auto* r = std::get_if<TxnRedo>(&e)) {
        w.u8(0);
        w.tid(r->tid);
        w.ts(r->ts);
        w.u32(static_cast<std::uint32_t>(r->writes.size()));
        for (const RedoWrite& wr : r->writes) {
            w.key(wr.key);
            w.bytes(wr.value);
            w.bytes(wr.before);
        }
    } else if (const auto* m = std::get_if<WatermarkMark>(&e)) {
        w.u8(1);
        w.u64(m->wp);
    } else {
        w.u8(2);
        w.u64(std::get<CheckpointRef>(e).snapshot_id);
    }
}

inline std::string encode_entry(const LogEntry& e) {
    wire::Writer body;
    encode_entry_body(body, e);
    wire::Writer framed;
    framed.u32(static_cast<std::uint32_t>(body.str().size()));
    return framed.take() + body.take();
}

inline LogEntry decode_entry_body(wire::Reader& r) {
    switch (r.u8()) {
        case 0: {
            TxnRedo redo;
            redo.tid = r.tid();
            redo.ts = r.ts();
            std::uint32_t n = r.u32();
            redo.writes.reserve(n);
            for (std::uint32_t i = 0; i < n; ++i) {
                RedoWrite wr;
                wr.key = r.key();
                wr.value = r.bytes();
                wr.before = r.bytes();
                redo.writes.push_back(std::move(wr));
            }
            return redo;
        }
        case 1: {
            WatermarkMark m;
            m.wp = r.u64();
            return m;
        }
        case 2: {
            CheckpointRef c;
            c.snapshot_id = r.u64();
            return c;
        }
        default:
            throw ProtocolViolation("unknown log entry tag");
    }
}

inline std::string encode_log(const std::vector<LogEntry>& entries) {
    std::string out;
    for (const LogEntry& e : entries) out += encode_entry(e);
    return out;
}

inline std::vector<LogEntry> decode_log(const std::string& blob) {
    std::vector<LogEntry> out;
    std::size_t pos = 0;
    while (pos < blob.size()) {
        PRIMO_ASSERT_MSG(pos + 4 <= blob.size(), "truncated log file");
        std::uint32_t len;
        std::memcpy(&len, blob.data() + pos, 4);
        pos += 4;
        PRIMO_ASSERT_MSG(pos + len <= blob.size(), "truncated log file");
        wire::Reader r(blob.data() + pos, len);
        out.push_back(decode_entry_body(r));
        PRIMO_ASSERT_MSG(r.at_end(), "trailing bytes in log record");
        pos += len;
    }
    return out;
}

// ---------------------------------------------------------------------------
// State snapshots (checkpoints, and the initial/final state files consumed by
// the offline checker). Same wire conventions as log entries.
// ---------------------------------------------------------------------------

inline std::string encode_snapshot(const Store& store) {
    wire::Writer w;
    w.u64(store.size());
    for (const auto& [k, rec] : store.all()) {
        w.key(k);
        w.bytes(rec.value);
        w.ts(rec.wts);
        w.ts(rec.rts);
        w.ts(rec.version);
    }
    return w.take();
}

inline Store decode_snapshot(const std::string& blob) {
    wire::Reader r(blob);
    Store store;
    std::uint64_t n = r.u64();
    for (std::uint64_t i = 0; i < n; ++i) {
        Key k = r.key();
        VersionedRecord rec;
        rec.value = r.bytes();
        rec.wts = r.ts();
        rec.rts = r.ts();
        rec.version = r.ts();
        rec.check();
        store.put_initial(k, rec.value);
        // put_initial resets timestamps; restore the full image
        store.restore(k, rec);
    }
    return store;
}

inline void write_file(const std::string& path, const std::string& blob) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    PRIMO_ASSERT_MSG(f.good(), "cannot open " + path);
    f.write(blob.data(), static_cast<std::streamsize>(blob.size()));
    PRIMO_ASSERT_MSG(f.good(), "short write to " + path);
}

inline std::string read_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    PRIMO_ASSERT_MSG(f.good(), "cannot open " + path);
    return std::string(std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>());
}

// ---------------------------------------------------------------------------
// Replay
// ---------------------------------------------------------------------------

// Rebuilds durable state from the last checkpoint at or before `upto`,
// applying redo entries in order. `accept` filters redo entries by commit
// timestamp (recovery re-replays with ts < agreed watermark after the
// cluster agrees on a rollback point); a null filter accepts everything.
// Returns the recovered store and the last flushed partition-watermark.
struct RecoveredState {
    Store store;
    std::uint64_t wp = 0;
};

inline RecoveredState replay_log(const DurableLog& log,
                                 const std::function<Store(std::uint64_t)>& snapshot_of,
                                 std::int64_t upto,
                                 const std::function<bool(const LogicalTimestamp&)>& accept = {}) {
    std::int64_t start = 0;
    Store base;
    for (std::int64_t i = upto; i >= 0; --i) {
        if (const auto* c = std::get_if<CheckpointRef>(&log.entry(i))) {
            base = snapshot_of(c->snapshot_id);
            start = i + 1;
            break;
        }
    }
    RecoveredState out;
    out.store = std::move(base);
    for (std::int64_t i = start; i <= upto; ++i) {
        const LogEntry& e = log.entry(i);
        if (const auto* r = std::get_if<TxnRedo>(&e)) {
            if (accept && !accept(r->ts)) continue;
            for (const RedoWrite& wr : r->writes) out.store.install(wr.key, wr.value, r->ts);
        } else if (const auto* m = std::get_if<WatermarkMark>(&e)) {
            if (m->wp > out.wp) out.wp = m->wp;
        }
    }
    return out;
}

}  // namespace primo
