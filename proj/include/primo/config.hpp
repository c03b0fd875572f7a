#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "primo/assert.hpp"
#include "primo/ids.hpp"
#include "primo/time.hpp"

namespace primo {

enum class Protocol : std::uint8_t {
    Primo,            // TicToc locals + WCF distributed + watermark group commit
    PrimoCoco,        // WCF, but durability via synchronous epoch barriers
    TwoPlNoWait2pc,   // 2PL(NO_WAIT) + 2PC, per-transaction synchronous logging
    TwoPlWaitDie2pc,  // 2PL(WAIT_DIE) + 2PC, per-transaction synchronous logging
    AblationWcfOnly,  // WCF without group commit: per-transaction synchronous logging
    AblationWmOnly,   // TicToc locals + 2PL(WD)/2PC distributed + watermark group commit
};

inline const char* protocol_name(Protocol p) {
    switch (p) {
        case Protocol::Primo: return "primo";
        case Protocol::PrimoCoco: return "primo-coco";
        case Protocol::TwoPlNoWait2pc: return "2pl-nw-2pc";
        case Protocol::TwoPlWaitDie2pc: return "2pl-wd-2pc";
        case Protocol::AblationWcfOnly: return "ablation-wcf-only";
        case Protocol::AblationWmOnly: return "ablation-wm-only";
    }
    return "?";
}

inline std::optional<Protocol> protocol_from_name(const std::string& s) {
    for (Protocol p : {Protocol::Primo, Protocol::PrimoCoco, Protocol::TwoPlNoWait2pc,
                       Protocol::TwoPlWaitDie2pc, Protocol::AblationWcfOnly, Protocol::AblationWmOnly})
        if (s == protocol_name(p)) return p;
    return std::nullopt;
}

// How commit durability and result release are driven.
enum class LoggingMode : std::uint8_t { Watermark, Epoch, Sync };

inline LoggingMode default_logging(Protocol p) {
    switch (p) {
        case Protocol::Primo:
        case Protocol::AblationWmOnly: return LoggingMode::Watermark;
        case Protocol::PrimoCoco: return LoggingMode::Epoch;
        default: return LoggingMode::Sync;
    }
}

inline bool uses_wcf(Protocol p) {
    return p == Protocol::Primo || p == Protocol::PrimoCoco || p == Protocol::AblationWcfOnly;
}

enum class WorkloadKind : std::uint8_t { Ycsb, TpccLite };

struct WorkloadSpec {
    WorkloadKind kind = WorkloadKind::Ycsb;
    std::uint64_t keys_per_partition = 10000;
    std::uint32_t ops_per_txn = 10;       // m
    double read_ratio = 0.5;              // R_r
    double distributed_ratio = 0.2;       // R_d
    double zipf_theta = 0.6;
    double blind_write_ratio = 0.0;       // fraction of RMW ops turned into blind writes
    // TPC-C-lite sizing
    std::uint32_t warehouses_per_partition = 4;
    std::uint32_t districts_per_warehouse = 10;
    std::uint32_t items_per_warehouse = 200;
    std::uint32_t customers_per_warehouse = 120;
    std::uint32_t order_pool_per_warehouse = 4096;
};

enum class MsgFilter : std::uint8_t { All, WatermarkOnly, EpochCtrlOnly };

// Extra delay on a link, active inside a virtual-time window. from/to of -1
// match any partition. The filter restricts which message kinds are slowed,
// so an experiment can lag only watermark broadcasts or only epoch control
// traffic.
struct LinkDelayRule {
    int from = -1;
    int to = -1;
    SimTime extra = 0;
    SimTime from_t = 0;
    SimTime to_t = INT64_MAX;
    MsgFilter filter = MsgFilter::All;
};

struct CrashPlan {
    SimTime at = 0;
    PartitionId partition = 0;
};

struct RunConfig {
    std::uint64_t seed = 1;
    Protocol protocol = Protocol::Primo;

    std::uint16_t partitions = 4;       // n
    std::uint16_t workers = 4;          // h, per partition
    std::vector<std::uint16_t> workers_override;  // per-partition h (masking experiments)

    SimTime t_l = sim_units(1);         // compute cost per operation
    SimTime remote_delay = sim_units(10);
    SimTime remote_delay_jitter = 0;    // uniform extra in [0, jitter]
    SimTime flush_latency = sim_units(3);
    SimTime t_m = sim_units(5);         // watermark interval
    SimTime epoch_len = sim_units(20);  // epoch group-commit interval
    SimTime epoch_timeout = sim_units(100);
    SimTime membership_latency = 0;     // crash detection + consensus oracle latency

    SimTime duration = sim_units(2000); // workload generation horizon
    std::uint64_t txn_limit = 0;        // stop generating after this many attempts (0 = off)
    SimTime max_time = sim_units(2000000);  // hard stop for the drain phase

    SimTime backoff_init = sim_units(0.5);
    SimTime backoff_cap = sim_units(64.0);

    bool force_advance = true;

    std::vector<CrashPlan> crashes;
    std::vector<LinkDelayRule> link_delays;

    WorkloadSpec workload;

    std::uint64_t livelock_budget = 2000000;  // events at one instant before diagnosing livelock

    // The 2PL+2PC baselines run under per-transaction synchronous logging by
    // default but can be switched to epoch group commit for comparisons.
    std::optional<LoggingMode> logging_override;

    LoggingMode logging() const {
        if (logging_override) {
            PRIMO_ASSERT_MSG(protocol == Protocol::TwoPlNoWait2pc || protocol == Protocol::TwoPlWaitDie2pc,
                             "logging override applies to the 2PL baselines only");
            return *logging_override;
        }
        return default_logging(protocol);
    }
    std::uint16_t workers_at(PartitionId p) const {
        if (p < workers_override.size() && workers_override[p] != 0) return workers_override[p];
        return workers;
    }
};

// Flat key=value config files mirror the CLI flags; '#' starts a comment.
inline void apply_config_kv(RunConfig& cfg, const std::string& key, const std::string& value) {
    auto as_u64 = [&] { return std::stoull(value); };
    auto as_f = [&] { return std::stod(value); };
    auto as_time = [&] { return sim_units(std::stod(value)); };

    if (key == "seed") cfg.seed = as_u64();
    else if (key == "protocol") {
        auto p = protocol_from_name(value);
        PRIMO_ASSERT_MSG(p.has_value(), "unknown protocol '" + value + "'");
        cfg.protocol = *p;
    } else if (key == "partitions") cfg.partitions = static_cast<std::uint16_t>(as_u64());
    else if (key == "workers") cfg.workers = static_cast<std::uint16_t>(as_u64());
    else if (key == "tl") cfg.t_l = as_time();
    else if (key == "tr") cfg.remote_delay = as_time();
    else if (key == "tr_jitter") cfg.remote_delay_jitter = as_time();
    else if (key == "flush_latency") cfg.flush_latency = as_time();
    else if (key == "tm") cfg.t_m = as_time();
    else if (key == "epoch") cfg.epoch_len = as_time();
    else if (key == "epoch_timeout") cfg.epoch_timeout = as_time();
    else if (key == "membership_latency") cfg.membership_latency = as_time();
    else if (key == "duration") cfg.duration = as_time();
    else if (key == "txn_limit") cfg.txn_limit = as_u64();
    else if (key == "max_time") cfg.max_time = as_time();
    else if (key == "backoff_init") cfg.backoff_init = as_time();
    else if (key == "backoff_cap") cfg.backoff_cap = as_time();
    else if (key == "force_advance") cfg.force_advance = (value == "1" || value == "true");
    else if (key == "logging") {
        PRIMO_ASSERT_MSG(value == "sync" || value == "epoch", "logging override must be sync or epoch");
        cfg.logging_override = value == "sync" ? LoggingMode::Sync : LoggingMode::Epoch;
    }
    else if (key == "workload") cfg.workload.kind = value == "tpcc" ? WorkloadKind::TpccLite : WorkloadKind::Ycsb;
    else if (key == "keys_per_partition") cfg.workload.keys_per_partition = as_u64();
    else if (key == "ops_per_txn") cfg.workload.ops_per_txn = static_cast<std::uint32_t>(as_u64());
    else if (key == "read_ratio") cfg.workload.read_ratio = as_f();
    else if (key == "distributed_ratio") cfg.workload.distributed_ratio = as_f();
    else if (key == "zipf_theta") cfg.workload.zipf_theta = as_f();
    else if (key == "blind_write_ratio") cfg.workload.blind_write_ratio = as_f();
    else if (key == "warehouses_per_partition") cfg.workload.warehouses_per_partition = static_cast<std::uint32_t>(as_u64());
    else if (key == "crash_at") {
        if (cfg.crashes.empty()) cfg.crashes.push_back({});
        cfg.crashes.back().at = as_time();
    } else if (key == "crash_partition") {
        if (cfg.crashes.empty()) cfg.crashes.push_back({});
        cfg.crashes.back().partition = static_cast<PartitionId>(as_u64());
    } else if (key == "livelock_budget") cfg.livelock_budget = as_u64();
    else PRIMO_ASSERT_MSG(false, "unknown config key '" + key + "'");
}

inline RunConfig load_config_file(const std::string& path, RunConfig base = {}) {
    std::ifstream f(path);
    PRIMO_ASSERT_MSG(f.good(), "cannot open config " + path);
    std::string line;
    while (std::getline(f, line)) {
        auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        auto trim = [](std::string s) {
            const char* ws = " \t\r\n";
            s.erase(0, s.find_first_not_of(ws));
            auto last = s.find_last_not_of(ws);
            s.erase(last == std::string::npos ? 0 : last + 1);
            return s;
        };
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (!key.empty()) apply_config_kv(base, key, value);
    }
    return base;
}

}  // namespace primo
