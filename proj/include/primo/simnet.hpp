#pragma once

#include <functional>
#include <map>
#include <queue>
#include <string>
#include <vector>

#include "primo/assert.hpp"
#include "primo/config.hpp"
#include "primo/messages.hpp"
#include "primo/rng.hpp"
#include "primo/time.hpp"

namespace primo {

struct SimEvent {
    SimTime at = 0;
    std::uint64_t seq = 0;       // global tiebreak: equal-time events pop in schedule order
    PartitionId dst = 0;
    PartitionId src = 0;
    bool is_message = false;     // inter-partition message vs timer/continuation
    std::uint32_t term = 0;      // cluster term at send time (messages only)
    Payload payload;
};

struct NetCounters {
    std::uint64_t sent = 0;
    std::uint64_t delivered = 0;
    std::uint64_t dropped_crashed = 0;
    std::uint64_t dropped_stale_term = 0;
};

// Deterministic discrete-event substrate: virtual clock, message scheduling
// with configurable delay, per-link FIFO, crash and delay injection. All
// randomness derives from the run seed, so (seed, config, workload) fixes the
// entire event sequence.
class Net {
public:
    Net(const RunConfig& cfg, std::uint64_t delay_seed)
        : cfg_(&cfg), rng_(delay_seed), alive_(cfg.partitions, true),
          link_rules_(cfg.link_delays) {}

    SimTime now() const { return now_; }
    std::uint32_t term() const { return term_; }
    void set_term(std::uint32_t t) { term_ = t; }

    bool alive(PartitionId p) const { return alive_.at(p); }
    void set_alive(PartitionId p, bool a) { alive_.at(p) = a; }

    const NetCounters& counters() const { return counters_; }

    // Reliable FIFO send. Messages to crashed partitions are dropped and
    // counted; a per-link clamp keeps delivery order even under jitter.
    // Messages slowed by an injected delay rule bypass the clamp: a lagged
    // broadcast arrives late (and possibly out of order) without holding up
    // unrelated traffic on the link.
    void send(PartitionId from, PartitionId to, Payload payload, SimTime delay_override = -1) {
        ++counters_.sent;
        if (!alive_[to]) {
            ++counters_.dropped_crashed;
            return;
        }
        SimTime delay = delay_override >= 0 ? delay_override : sample_delay();
        SimTime extra = injected_extra(from, to, payload);
        SimTime at = now_ + delay + extra;
        if (extra == 0) {
            SimTime& last = last_delivery_[link_id(from, to)];
            if (at < last) at = last;
            last = at;
        }
        push(SimEvent{at, next_seq(), to, from, true, term_, std::move(payload)});
    }

    // Timers and continuations: local to a partition, never dropped by
    // crashes at scheduling time (handlers check liveness themselves).
    void schedule(PartitionId dst, SimTime delay, Payload payload) {
        PRIMO_ASSERT(delay >= 0);
        push(SimEvent{now_ + delay, next_seq(), dst, dst, false, term_, std::move(payload)});
    }

    void inject_crash(PartitionId p, SimTime at) {
        PRIMO_ASSERT(at >= now_);
        push(SimEvent{at, next_seq(), p, p, false, term_, EvCrash{p}});
    }

    void inject_link_delay(const LinkDelayRule& rule) { link_rules_.push_back(rule); }

    // Pops events in (deliver_at, sequence) order and dispatches them until
    // no events remain (quiescence) or the hard stop passes. Messages to dead
    // partitions and messages from a previous term are dropped here, so every
    // sent message is delivered or counted exactly once. Returns false when
    // the hard stop was hit with events still pending.
    bool run_until(SimTime hard_stop, const std::function<void(const SimEvent&)>& handler) {
        std::uint64_t churn = 0;
        SimTime last_now = -1;
        while (!queue_.empty()) {
            if (queue_.top().at > hard_stop) return false;
            SimEvent ev = queue_.top();
            queue_.pop();
            PRIMO_ASSERT_MSG(ev.at >= now_, "virtual time went backwards");
            now_ = ev.at;

            if (now_ == last_now) {
                if (++churn > cfg_->livelock_budget)
                    throw LivelockDetected("clock stalled at t=" + format_time(now_) + " after " +
                                           std::to_string(churn) + " events (last: " +
                                           payload_name(ev.payload) + " dst=" +
                                           std::to_string(ev.dst) + ")");
            } else {
                churn = 0;
                last_now = now_;
            }

            if (ev.is_message) {
                if (!alive_[ev.dst]) {
                    ++counters_.dropped_crashed;
                    continue;
                }
                if (ev.term != term_) {
                    ++counters_.dropped_stale_term;
                    continue;
                }
                ++counters_.delivered;
            }
            handler(ev);
        }
        return true;
    }

    bool idle() const { return queue_.empty(); }
    std::size_t pending() const { return queue_.size(); }

private:
    struct Later {
        bool operator()(const SimEvent& a, const SimEvent& b) const {
            if (a.at != b.at) return a.at > b.at;
            return a.seq > b.seq;
        }
    };

    static std::uint32_t link_id(PartitionId from, PartitionId to) {
        return (static_cast<std::uint32_t>(from) << 16) | to;
    }

    SimTime sample_delay() {
        SimTime d = cfg_->remote_delay;
        if (cfg_->remote_delay_jitter > 0)
            d += static_cast<SimTime>(rng_.next_below(static_cast<std::uint64_t>(cfg_->remote_delay_jitter) + 1));
        return d;
    }

    SimTime injected_extra(PartitionId from, PartitionId to, const Payload& p) const {
        SimTime extra = 0;
        for (const LinkDelayRule& r : link_rules_) {
            if (r.from >= 0 && r.from != from) continue;
            if (r.to >= 0 && r.to != to) continue;
            if (now_ < r.from_t || now_ >= r.to_t) continue;
            if (r.filter == MsgFilter::WatermarkOnly && !is_watermark_msg(p)) continue;
            if (r.filter == MsgFilter::EpochCtrlOnly && !is_epoch_ctrl_msg(p)) continue;
            extra += r.extra;
        }
        return extra;
    }

    std::uint64_t next_seq() { return seq_++; }
    void push(SimEvent ev) { queue_.push(std::move(ev)); }

    const RunConfig* cfg_;
    Rng rng_;
    std::vector<bool> alive_;
    std::vector<LinkDelayRule> link_rules_;
    std::priority_queue<SimEvent, std::vector<SimEvent>, Later> queue_;
    std::map<std::uint32_t, SimTime> last_delivery_;
    NetCounters counters_;
    SimTime now_ = 0;
    std::uint64_t seq_ = 0;
    std::uint32_t term_ = 1;
};

}  // namespace primo
