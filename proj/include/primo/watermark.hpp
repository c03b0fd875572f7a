#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <vector>

#include "primo/assert.hpp"
#include "primo/ids.hpp"

namespace primo {

// Active transactions on one partition, ordered by commit timestamp value
// (or its lower bound while the timestamp is not assigned yet). A transaction
// enters at its first local effect and leaves when its install or abort
// completes; the head bounds the next partition-watermark from above.
class ActiveTxnIndex {
public:
    void insert(const TransactionId& tid, std::uint64_t lts_value) {
        PRIMO_ASSERT_MSG(!current_.count(tid), "transaction already active: " + tid.str());
        current_[tid] = lts_value;
        ordered_.insert({lts_value, tid});
    }

    void update_ts(const TransactionId& tid, std::uint64_t ts_value) {
        auto it = current_.find(tid);
        PRIMO_ASSERT_MSG(it != current_.end(), "ts update for inactive transaction " + tid.str());
        ordered_.erase({it->second, tid});
        it->second = ts_value;
        ordered_.insert({ts_value, tid});
    }

    void erase(const TransactionId& tid) {
        auto it = current_.find(tid);
        if (it == current_.end()) return;
        ordered_.erase({it->second, tid});
        current_.erase(it);
    }

    bool contains(const TransactionId& tid) const { return current_.count(tid) != 0; }

    std::optional<std::uint64_t> min_head() const {
        if (ordered_.empty()) return std::nullopt;
        return ordered_.begin()->first;
    }

    std::size_t size() const { return current_.size(); }
    void clear() {
        current_.clear();
        ordered_.clear();
    }

private:
    std::map<TransactionId, std::uint64_t> current_;
    std::set<std::pair<std::uint64_t, TransactionId>> ordered_;
};

// Per-partition view of every partition's latest partition-watermark.
// Entries only grow (late or duplicate broadcasts are absorbed by the max),
// so the minimum — the local global-watermark — is monotone.
class WatermarkTable {
public:
    WatermarkTable() = default;
    WatermarkTable(std::uint16_t partitions, PartitionId own) : latest_(partitions, 0), own_(own) {}

    // Returns true when the entry advanced.
    bool merge(PartitionId p, std::uint64_t wp) {
        if (wp <= latest_.at(p)) return false;
        latest_[p] = wp;
        return true;
    }

    std::uint64_t global() const {
        std::uint64_t g = UINT64_MAX;
        for (std::uint64_t v : latest_) g = std::min(g, v);
        return latest_.empty() ? 0 : g;
    }

    std::uint64_t entry(PartitionId p) const { return latest_.at(p); }
    std::uint64_t own() const { return latest_.at(own_); }

    double average_others() const {
        if (latest_.size() <= 1) return static_cast<double>(own());
        double sum = 0;
        for (PartitionId p = 0; p < latest_.size(); ++p)
            if (p != own_) sum += static_cast<double>(latest_[p]);
        return sum / static_cast<double>(latest_.size() - 1);
    }

    // Recovery: every entry is lifted to at least the agreed watermark.
    void floor_all(std::uint64_t v) {
        for (auto& e : latest_) e = std::max(e, v);
    }

    std::uint16_t partitions() const { return static_cast<std::uint16_t>(latest_.size()); }

private:
    std::vector<std::uint64_t> latest_;
    PartitionId own_ = 0;
};

}  // namespace primo
