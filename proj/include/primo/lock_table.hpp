#pragma once

#include <algorithm>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <vector>

#include "primo/assert.hpp"
#include "primo/ids.hpp"
#include "primo/time.hpp"

namespace primo {

enum class LockMode : std::uint8_t { Shared, Exclusive };
enum class LockPolicy : std::uint8_t { WaitDie, NoWait };

enum class LockResult : std::uint8_t {
    Granted,   // caller proceeds
    MustWait,  // queued; resumed through the grant callback
    Die,       // WAIT_DIE: requester junior to a holder (or wait would close a cycle)
    Conflict,  // NO_WAIT: any conflict aborts immediately
};

// Partition-local lock manager.
//
// The protocol paths built on it use exclusive locks only; the 2PL baselines
// additionally use Shared mode and upgrades. Deadlock prevention is WAIT_DIE:
// a requester may wait only if it is senior to every incompatible holder,
// otherwise it dies. Hand-off on release goes to the most senior waiter,
// which keeps queued seniors alive at the cost of letting a junior keep
// waiting behind a freshly promoted senior holder; the residual wait cycles
// that this can produce are broken at request time by walking the waits-for
// chain and converting a would-be cycle into Die.
class LockTable {
public:
    using GrantCallback = std::function<void(const TransactionId&, const Key&)>;

    void set_grant_callback(GrantCallback cb) { on_grant_ = std::move(cb); }

    LockResult acquire(const TransactionId& tid, const Key& key, LockMode mode, LockPolicy policy,
                       SimTime now) {
        Entry& e = locks_[key];

        if (is_holder(e, tid)) {
            if (e.mode == LockMode::Exclusive || mode == LockMode::Shared) return LockResult::Granted;
            // Shared -> Exclusive upgrade.
            if (e.holders.size() == 1) {
                e.mode = LockMode::Exclusive;
                return LockResult::Granted;
            }
            return conflict_path(e, tid, key, mode, policy, now, /*upgrade=*/true);
        }

        if (e.holders.empty()) {
            grant(e, tid, key, mode, now);
            return LockResult::Granted;
        }
        if (e.mode == LockMode::Shared && mode == LockMode::Shared) {
            grant(e, tid, key, mode, now);
            return LockResult::Granted;
        }
        return conflict_path(e, tid, key, mode, policy, now, /*upgrade=*/false);
    }

    // Releases one key. Unlock by a non-holder is a protocol bug.
    void release(const TransactionId& tid, const Key& key, SimTime now) {
        auto it = locks_.find(key);
        PRIMO_ASSERT_MSG(it != locks_.end() && is_holder(it->second, tid),
                         "unlock by non-holder " + tid.str() + " on " + key.str());
        drop_holder(it->second, tid, key, now);
        promote(it->second, key, now);
        if (it->second.holders.empty() && it->second.waiters.empty()) locks_.erase(it);
    }

    void release_all(const TransactionId& tid, SimTime now) {
        auto ht = held_.find(tid);
        if (ht == held_.end()) return;
        std::vector<Key> keys(ht->second.begin(), ht->second.end());
        for (const Key& k : keys) release(tid, k, now);
    }

    // Removes a queued waiter (the owning transaction aborted while parked).
    void cancel_wait(const TransactionId& tid, SimTime now) {
        auto wt = waiting_on_.find(tid);
        if (wt == waiting_on_.end()) return;
        Entry& e = locks_[wt->second];
        std::erase_if(e.waiters, [&](const Waiter& w) { return w.tid == tid; });
        Key key = wt->second;
        waiting_on_.erase(wt);
        promote(e, key, now);  // an upgrade may have been unblocked
    }

    bool holds(const TransactionId& tid, const Key& key) const {
        auto it = locks_.find(key);
        return it != locks_.end() && is_holder(it->second, tid);
    }

    bool holds_exclusive(const TransactionId& tid, const Key& key) const {
        auto it = locks_.find(key);
        return it != locks_.end() && it->second.mode == LockMode::Exclusive && is_holder(it->second, tid);
    }

    // The exclusive holder of a record, if any. This is the record's
    // conceptual lock field; TicToc validation consults it.
    std::optional<TransactionId> exclusive_holder(const Key& key) const {
        auto it = locks_.find(key);
        if (it == locks_.end() || it->second.mode != LockMode::Exclusive || it->second.holders.empty())
            return std::nullopt;
        return it->second.holders.front();
    }

    bool is_waiting(const TransactionId& tid) const { return waiting_on_.count(tid) != 0; }

    const std::set<Key>* held_keys(const TransactionId& tid) const {
        auto it = held_.find(tid);
        return it == held_.end() ? nullptr : &it->second;
    }

    std::size_t waiter_count(const Key& key) const {
        auto it = locks_.find(key);
        return it == locks_.end() ? 0 : it->second.waiters.size();
    }

    // Crash wipe: every lock and queue on the partition disappears.
    void clear() {
        locks_.clear();
        held_.clear();
        waiting_on_.clear();
        grant_time_.clear();
    }

    bool empty() const { return locks_.empty() && held_.empty() && waiting_on_.empty(); }

    // Contention-footprint accounting.
    double total_hold_units() const { return to_units(hold_ticks_); }
    std::uint64_t completed_holds() const { return hold_count_; }
    double mean_hold_units() const { return hold_count_ ? total_hold_units() / static_cast<double>(hold_count_) : 0.0; }
    std::uint64_t cycle_breaks() const { return cycle_breaks_; }

private:
    struct Waiter {
        TransactionId tid;
        LockMode mode;
    };
    struct Entry {
        std::vector<TransactionId> holders;
        LockMode mode = LockMode::Exclusive;
        std::vector<Waiter> waiters;  // arrival order; hand-off scans for the most senior
    };

    static bool is_holder(const Entry& e, const TransactionId& tid) {
        return std::find(e.holders.begin(), e.holders.end(), tid) != e.holders.end();
    }

    LockResult conflict_path(Entry& e, const TransactionId& tid, const Key& key, LockMode mode,
                             LockPolicy policy, SimTime now, bool upgrade) {
        if (policy == LockPolicy::NoWait) return LockResult::Conflict;
        for (const TransactionId& h : e.holders) {
            if (h == tid) continue;
            if (!senior_to(tid, h)) return LockResult::Die;
        }
        if (wait_would_cycle(tid, key)) {
            ++cycle_breaks_;
            return LockResult::Die;
        }
        e.waiters.push_back(Waiter{tid, upgrade ? LockMode::Exclusive : mode});
        waiting_on_[tid] = key;
        return LockResult::MustWait;
    }

    // Walks holder -> (lock it waits on) -> holders ... looking for the
    // requester. Every transaction has at most one outstanding wait, so this
    // terminates; Shared entries make it a small DFS.
    bool wait_would_cycle(const TransactionId& requester, const Key& key) const {
        std::set<TransactionId> visited;
        std::vector<TransactionId> stack;
        auto push_holders = [&](const Key& k, bool skip_requester) {
            auto it = locks_.find(k);
            if (it == locks_.end()) return;
            for (const TransactionId& h : it->second.holders) {
                if (skip_requester && h == requester) continue;  // own hold on the contested key
                if (visited.insert(h).second) stack.push_back(h);
            }
        };
        push_holders(key, true);
        while (!stack.empty()) {
            TransactionId t = stack.back();
            stack.pop_back();
            if (t == requester) return true;
            auto wt = waiting_on_.find(t);
            if (wt != waiting_on_.end()) push_holders(wt->second, false);
        }
        return false;
    }

    void grant(Entry& e, const TransactionId& tid, const Key& key, LockMode mode, SimTime now) {
        PRIMO_ASSERT(e.holders.empty() || (e.mode == LockMode::Shared && mode == LockMode::Shared));
        e.holders.push_back(tid);
        e.mode = e.holders.size() == 1 ? mode : LockMode::Shared;
        held_[tid].insert(key);
        grant_time_[HeldKey{tid, key}] = now;
    }

    void drop_holder(Entry& e, const TransactionId& tid, const Key& key, SimTime now) {
        std::erase(e.holders, tid);
        auto ht = held_.find(tid);
        if (ht != held_.end()) {
            ht->second.erase(key);
            if (ht->second.empty()) held_.erase(ht);
        }
        auto gt = grant_time_.find(HeldKey{tid, key});
        if (gt != grant_time_.end()) {
            hold_ticks_ += static_cast<double>(now - gt->second);
            ++hold_count_;
            grant_time_.erase(gt);
        }
    }

    // Hand-off after a release or a cancelled wait. A pending upgrade by the
    // sole remaining holder is the only admissible progress while that holder
    // stays, so it goes first regardless of seniority; otherwise the most
    // senior non-holder waiter is granted, and a shared grant keeps pulling
    // shared waiters in seniority order until an exclusive one is reached.
    void promote(Entry& e, const Key& key, SimTime now) {
        for (;;) {
            if (e.waiters.empty()) return;

            if (e.holders.size() == 1) {
                auto up = std::find_if(e.waiters.begin(), e.waiters.end(), [&](const Waiter& w) {
                    return w.tid == e.holders.front() && w.mode == LockMode::Exclusive;
                });
                if (up != e.waiters.end()) {
                    TransactionId t = up->tid;
                    e.waiters.erase(up);
                    waiting_on_.erase(t);
                    e.mode = LockMode::Exclusive;
                    notify(t, key);
                    return;
                }
            }
            if (!e.holders.empty() && e.mode == LockMode::Exclusive) return;

            auto senior = e.waiters.end();
            for (auto it = e.waiters.begin(); it != e.waiters.end(); ++it) {
                if (is_holder(e, it->tid)) continue;  // a parked upgrade, handled above
                if (senior == e.waiters.end() || it->tid < senior->tid) senior = it;
            }
            if (senior == e.waiters.end()) return;

            if (e.holders.empty()) {
                Waiter w = *senior;
                e.waiters.erase(senior);
                waiting_on_.erase(w.tid);
                grant(e, w.tid, key, w.mode, now);
                notify(w.tid, key);
                if (w.mode == LockMode::Exclusive) return;
                continue;
            }
            if (e.mode == LockMode::Shared && senior->mode == LockMode::Shared) {
                Waiter w = *senior;
                e.waiters.erase(senior);
                waiting_on_.erase(w.tid);
                grant(e, w.tid, key, LockMode::Shared, now);
                notify(w.tid, key);
                continue;
            }
            return;  // exclusive waiter blocked behind shared holders
        }
    }

    void notify(const TransactionId& tid, const Key& key) {
        if (on_grant_) on_grant_(tid, key);
    }

    struct HeldKey {
        TransactionId tid;
        Key key;
        friend bool operator<(const HeldKey& a, const HeldKey& b) {
            if (a.tid != b.tid) return a.tid < b.tid;
            return a.key < b.key;
        }
    };

    std::map<Key, Entry> locks_;
    std::map<TransactionId, std::set<Key>> held_;
    std::map<TransactionId, Key> waiting_on_;
    std::map<HeldKey, SimTime> grant_time_;
    GrantCallback on_grant_;
    double hold_ticks_ = 0;
    std::uint64_t hold_count_ = 0;
    std::uint64_t cycle_breaks_ = 0;
};

}  // namespace primo
