#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "primo/history.hpp"
#include "primo/time.hpp"

namespace primo {

using Json = nlohmann::ordered_json;

struct WpSample {
    double time = 0;
    std::uint64_t wp = 0;
    friend bool operator==(const WpSample&, const WpSample&) = default;
};

// Everything a run reports. All times are virtual (sim-time units), never
// wall clock, so reruns of a seed reproduce these numbers bit for bit.
struct RunMetrics {
    std::string protocol;
    std::uint64_t seed = 0;
    double sim_duration = 0;  // units

    std::uint64_t attempts = 0;   // transaction attempts started
    std::uint64_t committed = 0;  // results released to clients
    std::uint64_t pending = 0;    // unfinished at the end of the run
    std::uint64_t retries = 0;    // aborted attempts that were retried

    // aborts by reason, counted per attempt
    std::uint64_t aborts_lock_conflict = 0;
    std::uint64_t aborts_die = 0;
    std::uint64_t aborts_read_validation = 0;
    std::uint64_t aborts_key_not_found = 0;
    std::uint64_t aborts_crash_rollback = 0;
    std::uint64_t aborts_epoch = 0;

    double throughput = 0;  // committed per sim-time unit
    double latency_p50 = 0;
    double latency_p99 = 0;
    double latency_mean = 0;

    // message/roundtrip counters
    std::uint64_t msgs_sent = 0;
    std::uint64_t msgs_delivered = 0;
    std::uint64_t msgs_dropped_crashed = 0;
    std::uint64_t msgs_dropped_stale = 0;
    std::uint64_t read_roundtrips = 0;
    std::uint64_t dummy_roundtrips = 0;
    std::uint64_t prepare_roundtrips = 0;
    std::uint64_t install_oneways = 0;
    std::uint64_t decision_oneways = 0;
    std::uint64_t watermark_broadcasts = 0;
    std::uint64_t epoch_prepare_rounds = 0;
    std::uint64_t epoch_ready_msgs = 0;
    std::uint64_t epoch_commit_rounds = 0;
    std::uint64_t epoch_abort_rounds = 0;

    // contention footprint
    double mean_lock_hold = 0;  // units
    std::uint64_t completed_holds = 0;

    // commit-phase conflict accounting (the write-conflict-free claim)
    std::uint64_t commit_phase_lock_waits = 0;
    std::uint64_t commit_phase_aborts = 0;
    std::uint64_t prepare_phase_conflicts = 0;  // baselines: upgrade/prepare lock failures

    // local transactions blocked by a distributed transaction's read-only
    // exclusive lock
    std::uint64_t local_attempts = 0;
    std::uint64_t local_aborts = 0;
    std::uint64_t extra_xlock_local_aborts = 0;

    // measured rts-extension ratio (reads whose rts had to be extended)
    std::uint64_t reads_total = 0;
    std::uint64_t rts_extensions = 0;

    // recovery
    std::uint64_t crash_aborts = 0;
    std::uint64_t recoveries = 0;
    double recovery_duration = 0;  // units, summed

    std::vector<std::vector<WpSample>> wp_series;  // per partition

    std::uint64_t total_aborts() const {
        return aborts_lock_conflict + aborts_die + aborts_read_validation + aborts_key_not_found +
               aborts_crash_rollback + aborts_epoch;
    }

    // attempts reconcile: every attempt released, aborted, or still pending
    bool conserved() const { return attempts == committed + total_aborts() + pending; }

    double measured_ru() const {
        return reads_total ? static_cast<double>(rts_extensions) / static_cast<double>(reads_total) : 0.0;
    }

    friend bool operator==(const RunMetrics&, const RunMetrics&) = default;
};

inline Json metrics_to_json(const RunMetrics& m) {
    Json j;
    j["protocol"] = m.protocol;
    j["seed"] = m.seed;
    j["sim_duration_units"] = m.sim_duration;
    j["attempts"] = m.attempts;
    j["committed"] = m.committed;
    j["pending"] = m.pending;
    j["retries"] = m.retries;
    j["aborts"] = Json{{"lock_conflict", m.aborts_lock_conflict},
                       {"die", m.aborts_die},
                       {"read_validation_failed", m.aborts_read_validation},
                       {"key_not_found", m.aborts_key_not_found},
                       {"crash_rollback", m.aborts_crash_rollback},
                       {"epoch_abort", m.aborts_epoch}};
    j["throughput_per_unit"] = m.throughput;
    j["latency_units"] = Json{{"p50", m.latency_p50}, {"p99", m.latency_p99}, {"mean", m.latency_mean}};
    j["messages"] = Json{{"sent", m.msgs_sent},
                         {"delivered", m.msgs_delivered},
                         {"dropped_crashed", m.msgs_dropped_crashed},
                         {"dropped_stale_term", m.msgs_dropped_stale},
                         {"read_roundtrips", m.read_roundtrips},
                         {"dummy_roundtrips", m.dummy_roundtrips},
                         {"prepare_roundtrips", m.prepare_roundtrips},
                         {"install_oneways", m.install_oneways},
                         {"decision_oneways", m.decision_oneways},
                         {"watermark_broadcasts", m.watermark_broadcasts},
                         {"epoch_prepare_rounds", m.epoch_prepare_rounds},
                         {"epoch_ready_msgs", m.epoch_ready_msgs},
                         {"epoch_commit_rounds", m.epoch_commit_rounds},
                         {"epoch_abort_rounds", m.epoch_abort_rounds}};
    j["locks"] = Json{{"mean_hold_units", m.mean_lock_hold}, {"completed_holds", m.completed_holds}};
    j["commit_phase"] = Json{{"lock_waits", m.commit_phase_lock_waits},
                             {"aborts", m.commit_phase_aborts},
                             {"prepare_conflicts", m.prepare_phase_conflicts}};
    j["local"] = Json{{"attempts", m.local_attempts},
                      {"aborts", m.local_aborts},
                      {"extra_xlock_aborts", m.extra_xlock_local_aborts}};
    j["reads"] = Json{{"total", m.reads_total}, {"rts_extensions", m.rts_extensions},
                      {"measured_ru", m.measured_ru()}};
    j["recovery"] = Json{{"crash_aborts", m.crash_aborts},
                         {"recoveries", m.recoveries},
                         {"duration_units", m.recovery_duration}};
    Json series = Json::array();
    for (const auto& partition : m.wp_series) {
        Json s = Json::array();
        for (const WpSample& w : partition) s.push_back(Json{{"t", w.time}, {"wp", w.wp}});
        series.push_back(s);
    }
    j["wp_series"] = series;
    return j;
}

inline RunMetrics metrics_from_json(const Json& j) {
    RunMetrics m;
    m.protocol = j.at("protocol").get<std::string>();
    m.seed = j.at("seed").get<std::uint64_t>();
    m.sim_duration = j.at("sim_duration_units").get<double>();
    m.attempts = j.at("attempts").get<std::uint64_t>();
    m.committed = j.at("committed").get<std::uint64_t>();
    m.pending = j.at("pending").get<std::uint64_t>();
    m.retries = j.at("retries").get<std::uint64_t>();
    const Json& a = j.at("aborts");
    m.aborts_lock_conflict = a.at("lock_conflict").get<std::uint64_t>();
    m.aborts_die = a.at("die").get<std::uint64_t>();
    m.aborts_read_validation = a.at("read_validation_failed").get<std::uint64_t>();
    m.aborts_key_not_found = a.at("key_not_found").get<std::uint64_t>();
    m.aborts_crash_rollback = a.at("crash_rollback").get<std::uint64_t>();
    m.aborts_epoch = a.at("epoch_abort").get<std::uint64_t>();
    m.throughput = j.at("throughput_per_unit").get<double>();
    m.latency_p50 = j.at("latency_units").at("p50").get<double>();
    m.latency_p99 = j.at("latency_units").at("p99").get<double>();
    m.latency_mean = j.at("latency_units").at("mean").get<double>();
    const Json& msg = j.at("messages");
    m.msgs_sent = msg.at("sent").get<std::uint64_t>();
    m.msgs_delivered = msg.at("delivered").get<std::uint64_t>();
    m.msgs_dropped_crashed = msg.at("dropped_crashed").get<std::uint64_t>();
    m.msgs_dropped_stale = msg.at("dropped_stale_term").get<std::uint64_t>();
    m.read_roundtrips = msg.at("read_roundtrips").get<std::uint64_t>();
    m.dummy_roundtrips = msg.at("dummy_roundtrips").get<std::uint64_t>();
    m.prepare_roundtrips = msg.at("prepare_roundtrips").get<std::uint64_t>();
    m.install_oneways = msg.at("install_oneways").get<std::uint64_t>();
    m.decision_oneways = msg.at("decision_oneways").get<std::uint64_t>();
    m.watermark_broadcasts = msg.at("watermark_broadcasts").get<std::uint64_t>();
    m.epoch_prepare_rounds = msg.at("epoch_prepare_rounds").get<std::uint64_t>();
    m.epoch_ready_msgs = msg.at("epoch_ready_msgs").get<std::uint64_t>();
    m.epoch_commit_rounds = msg.at("epoch_commit_rounds").get<std::uint64_t>();
    m.epoch_abort_rounds = msg.at("epoch_abort_rounds").get<std::uint64_t>();
    m.mean_lock_hold = j.at("locks").at("mean_hold_units").get<double>();
    m.completed_holds = j.at("locks").at("completed_holds").get<std::uint64_t>();
    const Json& cp = j.at("commit_phase");
    m.commit_phase_lock_waits = cp.at("lock_waits").get<std::uint64_t>();
    m.commit_phase_aborts = cp.at("aborts").get<std::uint64_t>();
    m.prepare_phase_conflicts = cp.at("prepare_conflicts").get<std::uint64_t>();
    const Json& loc = j.at("local");
    m.local_attempts = loc.at("attempts").get<std::uint64_t>();
    m.local_aborts = loc.at("aborts").get<std::uint64_t>();
    m.extra_xlock_local_aborts = loc.at("extra_xlock_aborts").get<std::uint64_t>();
    const Json& rd = j.at("reads");
    m.reads_total = rd.at("total").get<std::uint64_t>();
    m.rts_extensions = rd.at("rts_extensions").get<std::uint64_t>();
    const Json& rec = j.at("recovery");
    m.crash_aborts = rec.at("crash_aborts").get<std::uint64_t>();
    m.recoveries = rec.at("recoveries").get<std::uint64_t>();
    m.recovery_duration = rec.at("duration_units").get<double>();
    for (const Json& partition : j.at("wp_series")) {
        std::vector<WpSample> s;
        for (const Json& w : partition) s.push_back(WpSample{w.at("t").get<double>(), w.at("wp").get<std::uint64_t>()});
        m.wp_series.push_back(std::move(s));
    }
    return m;
}

// Flat CSV, one data row; the wp time series is JSON-only. The header is
// part of the tool's contract, so its order never changes.
inline const std::vector<std::pair<std::string, std::string>> metrics_csv_fields(const RunMetrics& m) {
    auto f = [](double v) {
        std::ostringstream os;
        os << v;
        return os.str();
    };
    return {
        {"protocol", m.protocol},
        {"seed", std::to_string(m.seed)},
        {"sim_duration_units", f(m.sim_duration)},
        {"attempts", std::to_string(m.attempts)},
        {"committed", std::to_string(m.committed)},
        {"pending", std::to_string(m.pending)},
        {"retries", std::to_string(m.retries)},
        {"aborts_lock_conflict", std::to_string(m.aborts_lock_conflict)},
        {"aborts_die", std::to_string(m.aborts_die)},
        {"aborts_read_validation_failed", std::to_string(m.aborts_read_validation)},
        {"aborts_key_not_found", std::to_string(m.aborts_key_not_found)},
        {"aborts_crash_rollback", std::to_string(m.aborts_crash_rollback)},
        {"aborts_epoch_abort", std::to_string(m.aborts_epoch)},
        {"throughput_per_unit", f(m.throughput)},
        {"latency_p50", f(m.latency_p50)},
        {"latency_p99", f(m.latency_p99)},
        {"latency_mean", f(m.latency_mean)},
        {"msgs_sent", std::to_string(m.msgs_sent)},
        {"read_roundtrips", std::to_string(m.read_roundtrips)},
        {"dummy_roundtrips", std::to_string(m.dummy_roundtrips)},
        {"prepare_roundtrips", std::to_string(m.prepare_roundtrips)},
        {"install_oneways", std::to_string(m.install_oneways)},
        {"decision_oneways", std::to_string(m.decision_oneways)},
        {"watermark_broadcasts", std::to_string(m.watermark_broadcasts)},
        {"mean_lock_hold", f(m.mean_lock_hold)},
        {"commit_phase_lock_waits", std::to_string(m.commit_phase_lock_waits)},
        {"commit_phase_aborts", std::to_string(m.commit_phase_aborts)},
        {"prepare_phase_conflicts", std::to_string(m.prepare_phase_conflicts)},
        {"local_attempts", std::to_string(m.local_attempts)},
        {"local_aborts", std::to_string(m.local_aborts)},
        {"extra_xlock_local_aborts", std::to_string(m.extra_xlock_local_aborts)},
        {"measured_ru", f(m.measured_ru())},
        {"crash_aborts", std::to_string(m.crash_aborts)},
        {"recoveries", std::to_string(m.recoveries)},
        {"recovery_duration_units", f(m.recovery_duration)},
    };
}

inline std::string metrics_to_csv(const RunMetrics& m) {
    auto fields = metrics_csv_fields(m);
    std::string header, row;
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) {
            header += ",";
            row += ",";
        }
        header += fields[i].first;
        row += fields[i].second;
    }
    return header + "\n" + row + "\n";
}

inline std::string metrics_to_table(const RunMetrics& m) {
    std::ostringstream os;
    os << "protocol            " << m.protocol << "\n"
       << "seed                " << m.seed << "\n"
       << "sim duration        " << m.sim_duration << " units\n"
       << "attempts            " << m.attempts << "\n"
       << "committed           " << m.committed << "\n"
       << "pending             " << m.pending << "\n"
       << "retries             " << m.retries << "\n"
       << "aborts              total " << m.total_aborts() << " = lock_conflict " << m.aborts_lock_conflict
       << " + die " << m.aborts_die << " + read_validation " << m.aborts_read_validation
       << " + key_not_found " << m.aborts_key_not_found << " + crash_rollback " << m.aborts_crash_rollback
       << " + epoch " << m.aborts_epoch << "\n"
       << "throughput          " << m.throughput << " txn/unit\n"
       << "latency p50/p99     " << m.latency_p50 << " / " << m.latency_p99 << " units\n"
       << "mean lock hold      " << m.mean_lock_hold << " units\n"
       << "commit-phase waits  " << m.commit_phase_lock_waits << ", aborts " << m.commit_phase_aborts
       << ", prepare conflicts " << m.prepare_phase_conflicts << "\n"
       << "crash aborts        " << m.crash_aborts << "\n";
    return os.str();
}

}  // namespace primo
