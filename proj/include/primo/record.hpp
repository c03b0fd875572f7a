#pragma once

#include <map>
#include <optional>
#include <string>

#include "primo/assert.hpp"
#include "primo/ids.hpp"

namespace primo {

using Value = std::string;

// A versioned record. [wts, rts] is the logical interval in which reading
// the current value is valid; rts >= wts always. `version` tags the value
// with the commit timestamp of the transaction that installed it, which is
// what the history checker keys on — unlike wts it is never inflated by the
// watermark adjustment, so it survives as a stable version identity.
struct VersionedRecord {
    Value value;
    LogicalTimestamp wts{};
    LogicalTimestamp rts{};
    LogicalTimestamp version{};

    void check() const { PRIMO_ASSERT_MSG(rts >= wts, "record interval must be non-empty"); }
};

// Partition-local key/value state. Mutating accessors enforce the interval
// invariant; lock state lives in the lock table, not here.
class Store {
public:
    void put_initial(const Key& k, Value v) {
        VersionedRecord rec;
        rec.value = std::move(v);
        map_[k] = std::move(rec);
    }

    bool contains(const Key& k) const { return map_.count(k) != 0; }

    const VersionedRecord* find(const Key& k) const {
        auto it = map_.find(k);
        return it == map_.end() ? nullptr : &it->second;
    }

    // Overwrites value and collapses the valid interval to [ts, ts].
    void install(const Key& k, Value v, const LogicalTimestamp& ts) {
        auto& rec = slot(k);
        rec.value = std::move(v);
        rec.wts = ts;
        rec.rts = ts;
        rec.version = ts;
        rec.check();
    }

    // Prolongs the valid interval so that a reader at `ts` fits inside it.
    void extend_rts(const Key& k, const LogicalTimestamp& ts) {
        auto& rec = slot(k);
        if (rec.rts < ts) rec.rts = ts;
        rec.check();
    }

    // Watermark adjustment: lifts a cold record's interval above the current
    // partition-watermark so any future reader lands above it. Lift-only:
    // neither timestamp ever decreases — lowering rts would let a writer
    // commit under readers that already extended it. Value and version tag
    // stay.
    void inflate(const Key& k, const LogicalTimestamp& v) {
        auto& rec = slot(k);
        PRIMO_ASSERT(v.value >= rec.wts.value);
        if (rec.wts < v) rec.wts = v;
        if (rec.rts < v) rec.rts = v;
        rec.check();
    }

    // Crash rollback: restores a full pre-install image.
    void restore(const Key& k, const VersionedRecord& image) {
        image.check();
        slot(k) = image;
    }

    const std::map<Key, VersionedRecord>& all() const { return map_; }
    std::size_t size() const { return map_.size(); }

private:
    VersionedRecord& slot(const Key& k) {
        auto it = map_.find(k);
        PRIMO_ASSERT_MSG(it != map_.end(), "unknown key " + k.str());
        return it->second;
    }

    std::map<Key, VersionedRecord> map_;
};

}  // namespace primo
