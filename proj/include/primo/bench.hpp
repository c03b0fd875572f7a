#pragma once

#include <string>

#include "primo/cluster.hpp"
#include "primo/metrics.hpp"

namespace primo {

struct ExperimentOptions {
    bool event_trace = false;
    bool msg_trace = false;
};

struct ExperimentResult {
    RunMetrics metrics;
    HistoryTrace trace;
    Store initial;
    Store final_state;
    std::string event_trace;  // newline-delimited deterministic event records
    std::string msg_trace;    // framed binary message encodings in delivery order
    CheckResult serializability;
};

// Builds the cluster, drives the configured workload to completion and
// collects everything the tools and tests consume.
inline ExperimentResult run_experiment(const RunConfig& cfg, const ExperimentOptions& opt = {}) {
    Cluster cl(cfg);
    ExperimentResult out;
    if (opt.event_trace) cl.set_event_trace(&out.event_trace);
    if (opt.msg_trace) cl.set_msg_trace(&out.msg_trace);
    out.initial = cl.merged_initial();
    cl.run();
    out.final_state = cl.merged_final();
    out.metrics = cl.metrics();
    out.trace = std::move(cl.trace());
    out.serializability = check_serializable(out.initial, out.final_state, out.trace);
    return out;
}

// ---------------------------------------------------------------------------
// History trace serialization: one JSON object per line, stable key order.
// ---------------------------------------------------------------------------

inline Json txn_to_json(const TraceTxn& t) {
    Json j;
    j["client"] = t.client_id;
    j["tid"] = Json::array({t.tid.server, t.tid.counter});
    j["coord"] = t.coordinator;
    j["dist"] = t.distributed;
    j["committed"] = t.committed;
    j["released"] = t.released;
    j["abort"] = abort_reason_name(t.abort_reason);
    j["ts"] = Json::array({t.commit_ts.value, t.commit_ts.tiebreak.server, t.commit_ts.tiebreak.counter});
    Json reads = Json::array();
    for (const ReadObs& r : t.reads)
        reads.push_back(Json::array({r.key.partition, r.key.id, r.version.value,
                                     r.version.tiebreak.server, r.version.tiebreak.counter}));
    j["reads"] = reads;
    Json writes = Json::array();
    for (const WriteObs& w : t.writes) writes.push_back(Json::array({w.key.partition, w.key.id, w.value}));
    j["writes"] = writes;
    j["parts"] = t.partitions;
    j["read_rt"] = t.read_roundtrips;
    j["dummy_rt"] = t.dummy_roundtrips;
    j["prepare_rt"] = t.prepare_roundtrips;
    j["installs"] = t.install_oneways;
    j["decisions"] = t.decision_oneways;
    j["submit"] = to_units(t.submit);
    j["finish"] = to_units(t.finish);
    j["release"] = to_units(t.release);
    return j;
}

inline TraceTxn txn_from_json(const Json& j) {
    TraceTxn t;
    t.client_id = j.at("client").get<std::uint64_t>();
    t.tid = {j.at("tid")[0].get<std::uint32_t>(), j.at("tid")[1].get<std::uint64_t>()};
    t.coordinator = j.at("coord").get<PartitionId>();
    t.distributed = j.at("dist").get<bool>();
    t.committed = j.at("committed").get<bool>();
    t.released = j.at("released").get<bool>();
    std::string reason = j.at("abort").get<std::string>();
    for (int r = 0; r <= static_cast<int>(AbortReason::EpochAbort); ++r)
        if (reason == abort_reason_name(static_cast<AbortReason>(r)))
            t.abort_reason = static_cast<AbortReason>(r);
    t.commit_ts = {j.at("ts")[0].get<std::uint64_t>(),
                   {j.at("ts")[1].get<std::uint32_t>(), j.at("ts")[2].get<std::uint64_t>()}};
    for (const Json& r : j.at("reads"))
        t.reads.push_back(ReadObs{Key{r[0].get<PartitionId>(), r[1].get<std::uint64_t>()},
                                  LogicalTimestamp{r[2].get<std::uint64_t>(),
                                                   {r[3].get<std::uint32_t>(), r[4].get<std::uint64_t>()}}});
    for (const Json& w : j.at("writes"))
        t.writes.push_back(WriteObs{Key{w[0].get<PartitionId>(), w[1].get<std::uint64_t>()},
                                    w[2].get<std::string>()});
    for (const Json& p : j.at("parts")) t.partitions.push_back(p.get<PartitionId>());
    t.read_roundtrips = j.at("read_rt").get<std::uint32_t>();
    t.dummy_roundtrips = j.at("dummy_rt").get<std::uint32_t>();
    t.prepare_roundtrips = j.at("prepare_rt").get<std::uint32_t>();
    t.install_oneways = j.at("installs").get<std::uint32_t>();
    t.decision_oneways = j.at("decisions").get<std::uint32_t>();
    t.submit = sim_units(j.at("submit").get<double>());
    t.finish = sim_units(j.at("finish").get<double>());
    t.release = sim_units(j.at("release").get<double>());
    return t;
}

inline std::string trace_to_jsonl(const HistoryTrace& trace) {
    std::string out;
    for (const TraceTxn& t : trace.txns) {
        out += txn_to_json(t).dump();
        out += "\n";
    }
    return out;
}

inline HistoryTrace trace_from_jsonl(const std::string& blob) {
    HistoryTrace trace;
    std::size_t pos = 0;
    while (pos < blob.size()) {
        std::size_t end = blob.find('\n', pos);
        if (end == std::string::npos) end = blob.size();
        if (end > pos) trace.txns.push_back(txn_from_json(Json::parse(blob.substr(pos, end - pos))));
        pos = end + 1;
    }
    return trace;
}

}  // namespace primo
