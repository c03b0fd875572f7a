#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <set>
#include <vector>

#include "primo/assert.hpp"
#include "primo/config.hpp"
#include "primo/program.hpp"
#include "primo/rng.hpp"
#include "primo/record.hpp"

namespace primo {

// ---------------------------------------------------------------------------
// Zipf sampling: P(rank r) proportional to 1/(r+1)^theta for r in [0, N).
// CDF inversion over a precomputed cumulative table; no rejection.
// ---------------------------------------------------------------------------

class ZipfSampler {
public:
    ZipfSampler(double theta, std::uint64_t n) : theta_(theta), n_(n) {
        PRIMO_ASSERT(n >= 1);
        cdf_.reserve(n);
        double acc = 0;
        for (std::uint64_t r = 0; r < n; ++r) {
            acc += std::pow(static_cast<double>(r + 1), -theta);
            cdf_.push_back(acc);
        }
        norm_ = acc;
    }

    std::uint64_t sample(Rng& rng) const {
        if (n_ == 1) return 0;
        double u = rng.next_double() * norm_;
        auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
        if (it == cdf_.end()) --it;
        return static_cast<std::uint64_t>(it - cdf_.begin());
    }

    // Analytic probability of a rank; the statistical tests compare observed
    // frequencies against this.
    double probability(std::uint64_t rank) const {
        return std::pow(static_cast<double>(rank + 1), -theta_) / norm_;
    }

    double theta() const { return theta_; }
    std::uint64_t n() const { return n_; }

private:
    double theta_;
    std::uint64_t n_;
    double norm_ = 1;
    std::vector<double> cdf_;
};

inline std::uint64_t zipf_sample(double theta, std::uint64_t n, Rng& rng) {
    return ZipfSampler(theta, n).sample(rng);
}

// ---------------------------------------------------------------------------
// YCSB-like generator: m distinct keys per transaction, ceil(m*R_r) pure
// reads and the rest read-modify-writes, some of which become blind writes;
// a transaction is distributed with probability R_d, drawing one key from
// each of 1..3 other partitions. The first access is always local, so the
// home partition coordinates.
// ---------------------------------------------------------------------------

class YcsbGenerator {
public:
    YcsbGenerator(const WorkloadSpec& spec, std::uint16_t partitions, PartitionId home)
        : spec_(spec), partitions_(partitions), home_(home),
          zipf_(spec.zipf_theta, spec.keys_per_partition) {
        PRIMO_ASSERT_MSG(spec.ops_per_txn <= spec.keys_per_partition,
                         "ops_per_txn larger than a partition's keyspace");
    }

    Program generate(Rng& rng, std::uint64_t value_tag) {
        const std::uint32_t m = spec_.ops_per_txn;
        const std::uint32_t reads = static_cast<std::uint32_t>(
            std::ceil(static_cast<double>(m) * spec_.read_ratio));

        bool distributed = partitions_ > 1 && m >= 2 && rng.next_bool(spec_.distributed_ratio);
        std::uint32_t remote_parts = 0;
        std::vector<PartitionId> others;
        if (distributed) {
            std::uint64_t cap = std::min<std::uint64_t>(3, partitions_ - 1);
            cap = std::min<std::uint64_t>(cap, m - 1);
            remote_parts = static_cast<std::uint32_t>(1 + rng.next_below(cap));
            std::set<PartitionId> chosen;
            while (chosen.size() < remote_parts) {
                auto p = static_cast<PartitionId>(rng.next_below(partitions_));
                if (p != home_) chosen.insert(p);
            }
            others.assign(chosen.begin(), chosen.end());
        }

        // keys: one per remote partition, the rest local, all distinct
        std::vector<Key> keys;
        std::set<std::uint64_t> used_local;
        auto local_key = [&] {
            for (;;) {
                std::uint64_t id = zipf_.sample(rng);
                if (used_local.insert(id).second) return Key{home_, id};
            }
        };
        std::uint32_t locals = m - remote_parts;
        for (std::uint32_t i = 0; i < locals; ++i) keys.push_back(local_key());
        for (PartitionId p : others) keys.push_back(Key{p, zipf_.sample(rng)});

        // op type per key slot: first `reads` slots read, rest RMW; shuffle
        // both, then force slot 0 onto a local key so the home coordinates
        std::vector<std::uint8_t> is_read(m, 0);
        for (std::uint32_t i = 0; i < reads && i < m; ++i) is_read[i] = 1;
        for (std::uint32_t i = m; i > 1; --i)
            std::swap(is_read[i - 1], is_read[rng.next_below(i)]);
        for (std::uint32_t i = m; i > 1; --i)
            std::swap(keys[i - 1], keys[rng.next_below(i)]);
        if (keys[0].partition != home_) {
            for (std::uint32_t i = 1; i < m; ++i)
                if (keys[i].partition == home_) {
                    std::swap(keys[0], keys[i]);
                    break;
                }
        }

        Program prog;
        prog.home = home_;
        std::uint32_t op_seq = 0;
        for (std::uint32_t i = 0; i < m; ++i) {
            if (is_read[i]) {
                prog.cmds.push_back(OpRead{keys[i]});
            } else {
                bool blind = rng.next_bool(spec_.blind_write_ratio);
                Value v = "y" + std::to_string(value_tag) + "." + std::to_string(op_seq++);
                if (!blind) prog.cmds.push_back(OpRead{keys[i]});  // RMW: read then write
                prog.cmds.push_back(OpWrite{keys[i], std::move(v)});
            }
        }
        return prog;
    }

private:
    WorkloadSpec spec_;
    std::uint16_t partitions_;
    PartitionId home_;
    ZipfSampler zipf_;
};

// ---------------------------------------------------------------------------
// TPC-C-lite: NewOrder and Payment only, fixed key population. Row ids pack
// (table, warehouse, row) into the partition keyspace.
// ---------------------------------------------------------------------------

namespace tpcc {

inline constexpr std::uint64_t kWarehouseBase = 0;
inline constexpr std::uint64_t kDistrictBase = 1u << 20;
inline constexpr std::uint64_t kStockBase = 1u << 21;
inline constexpr std::uint64_t kCustomerBase = 1u << 22;
inline constexpr std::uint64_t kOrderBase = 1u << 23;

inline Key warehouse_key(PartitionId p, std::uint32_t wh) { return Key{p, kWarehouseBase + wh}; }
inline Key district_key(const WorkloadSpec& s, PartitionId p, std::uint32_t wh, std::uint32_t d) {
    return Key{p, kDistrictBase + wh * s.districts_per_warehouse + d};
}
inline Key stock_key(const WorkloadSpec& s, PartitionId p, std::uint32_t wh, std::uint32_t item) {
    return Key{p, kStockBase + wh * s.items_per_warehouse + item};
}
inline Key customer_key(const WorkloadSpec& s, PartitionId p, std::uint32_t wh, std::uint32_t c) {
    return Key{p, kCustomerBase + wh * s.customers_per_warehouse + c};
}
inline Key order_key(const WorkloadSpec& s, PartitionId p, std::uint32_t wh, std::uint32_t slot) {
    return Key{p, kOrderBase + wh * s.order_pool_per_warehouse + slot};
}

}  // namespace tpcc

class TpccLiteGenerator {
public:
    TpccLiteGenerator(const WorkloadSpec& spec, std::uint16_t partitions, PartitionId home)
        : spec_(spec), partitions_(partitions), home_(home) {}

    Program generate(Rng& rng, std::uint64_t value_tag) {
        return rng.next_bool(0.5) ? new_order(rng, value_tag) : payment(rng, value_tag);
    }

    // NewOrder: read the district, read+update 5..15 stock rows, and insert
    // the order as a blind write to a fresh slot of a rotating pool. 10%
    // touch one remote warehouse for one of the stock items.
    Program new_order(Rng& rng, std::uint64_t value_tag) {
        Program prog;
        prog.home = home_;
        std::uint32_t wh = pick_wh(rng);
        std::uint32_t d = static_cast<std::uint32_t>(rng.next_below(spec_.districts_per_warehouse));
        prog.cmds.push_back(OpRead{tpcc::district_key(spec_, home_, wh, d)});

        std::uint32_t items = 5 + static_cast<std::uint32_t>(rng.next_below(11));  // 5..15
        bool remote = partitions_ > 1 && rng.next_bool(0.10);
        std::uint32_t remote_slot = remote ? static_cast<std::uint32_t>(rng.next_below(items)) : items;
        std::set<Key> used;
        for (std::uint32_t i = 0; i < items; ++i) {
            PartitionId p = home_;
            std::uint32_t w = wh;
            if (i == remote_slot) {
                p = other_partition(rng);
                w = pick_wh(rng);
            }
            Key k;
            do {
                k = tpcc::stock_key(spec_, p, w, static_cast<std::uint32_t>(rng.next_below(spec_.items_per_warehouse)));
            } while (!used.insert(k).second);
            prog.cmds.push_back(OpRead{k});
            prog.cmds.push_back(OpWrite{k, "s" + std::to_string(value_tag) + "." + std::to_string(i)});
        }
        std::uint32_t slot = order_slot_++ % spec_.order_pool_per_warehouse;
        prog.cmds.push_back(OpWrite{tpcc::order_key(spec_, home_, wh, slot), "o" + std::to_string(value_tag)});
        return prog;
    }

    // Payment: read+update warehouse, district and customer balances; 15%
    // pay a customer of a remote warehouse.
    Program payment(Rng& rng, std::uint64_t value_tag) {
        Program prog;
        prog.home = home_;
        std::uint32_t wh = pick_wh(rng);
        std::uint32_t d = static_cast<std::uint32_t>(rng.next_below(spec_.districts_per_warehouse));
        auto rmw = [&](const Key& k, const char* tag, std::uint32_t i) {
            prog.cmds.push_back(OpRead{k});
            prog.cmds.push_back(OpWrite{k, tag + std::to_string(value_tag) + "." + std::to_string(i)});
        };
        rmw(tpcc::warehouse_key(home_, wh), "w", 0);
        rmw(tpcc::district_key(spec_, home_, wh, d), "d", 1);

        PartitionId cp = home_;
        std::uint32_t cw = wh;
        if (partitions_ > 1 && rng.next_bool(0.15)) {
            cp = other_partition(rng);
            cw = pick_wh(rng);
        }
        std::uint32_t c = static_cast<std::uint32_t>(rng.next_below(spec_.customers_per_warehouse));
        rmw(tpcc::customer_key(spec_, cp, cw, c), "c", 2);
        return prog;
    }

private:
    std::uint32_t pick_wh(Rng& rng) {
        return static_cast<std::uint32_t>(rng.next_below(spec_.warehouses_per_partition));
    }
    PartitionId other_partition(Rng& rng) {
        for (;;) {
            auto p = static_cast<PartitionId>(rng.next_below(partitions_));
            if (p != home_) return p;
        }
    }

    WorkloadSpec spec_;
    std::uint16_t partitions_;
    PartitionId home_;
    std::uint32_t order_slot_ = 0;
};

// One generator per (partition, worker); hides the kind switch.
class WorkloadGenerator {
public:
    WorkloadGenerator(const WorkloadSpec& spec, std::uint16_t partitions, PartitionId home)
        : kind_(spec.kind), ycsb_(spec, partitions, home), tpcc_(spec, partitions, home) {}

    Program generate(Rng& rng, std::uint64_t value_tag) {
        return kind_ == WorkloadKind::Ycsb ? ycsb_.generate(rng, value_tag)
                                           : tpcc_.generate(rng, value_tag);
    }

private:
    WorkloadKind kind_;
    YcsbGenerator ycsb_;
    TpccLiteGenerator tpcc_;
};

// Initial database population for one partition. Every key the generators
// can emit exists up front (fixed key population; inserts are modeled as
// blind writes into preallocated pools).
inline Store build_initial_store(const WorkloadSpec& spec, PartitionId p) {
    Store store;
    if (spec.kind == WorkloadKind::Ycsb) {
        for (std::uint64_t i = 0; i < spec.keys_per_partition; ++i)
            store.put_initial(Key{p, i}, "0");
        return store;
    }
    for (std::uint32_t w = 0; w < spec.warehouses_per_partition; ++w) {
        store.put_initial(tpcc::warehouse_key(p, w), "w0");
        for (std::uint32_t d = 0; d < spec.districts_per_warehouse; ++d)
            store.put_initial(tpcc::district_key(spec, p, w, d), "d0");
        for (std::uint32_t i = 0; i < spec.items_per_warehouse; ++i)
            store.put_initial(tpcc::stock_key(spec, p, w, i), "s0");
        for (std::uint32_t c = 0; c < spec.customers_per_warehouse; ++c)
            store.put_initial(tpcc::customer_key(spec, p, w, c), "c0");
        for (std::uint32_t o = 0; o < spec.order_pool_per_warehouse; ++o)
            store.put_initial(tpcc::order_key(spec, p, w, o), "");
    }
    return store;
}

}  // namespace primo
