// Experiment runner for the simulated transaction engine.
//
//   bench run    drive a workload under a protocol, emit metrics and traces
//   bench check  offline serializability check of a recorded history
//   bench model  closed-form conflict-rate comparison
//
// All times on the command line are in sim-time units (decimals allowed).

#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "primo/bench.hpp"
#include "primo/model.hpp"

using namespace primo;

namespace {

void write_out(const std::string& path, const std::string& data) {
    if (path.empty() || path == "-") {
        std::cout << data;
        return;
    }
    write_file(path, data);
}

int cmd_run(CLI::App& app) {
    // the parse callback runs after this function returns
    static RunConfig cfg;
    static std::string protocol = "primo";
    static std::string workload = "ycsb";
    static std::string config_file, out_path, trace_path, event_trace_path, msg_trace_path;
    static std::string dump_initial, dump_final;
    static std::string format = "json";
    static double tl = 1, tr = 10, tr_jitter = 0, flush = 3, tm = 5, epoch = 20, duration = 2000;
    static double backoff_init = 0.5, backoff_cap = 64, membership = 0;
    static double crash_at = -1;
    static int crash_partition = -1;
    static std::vector<std::string> link_delays;
    static std::vector<std::string> masks;
    static std::string logging;
    static bool no_force_advance = false;
    static bool quiet = false;

    app.add_option("--config", config_file, "flat key=value config file, applied first");
    app.add_option("--protocol", protocol,
                   "primo | primo-coco | 2pl-nw-2pc | 2pl-wd-2pc | ablation-wcf-only | ablation-wm-only");
    app.add_option("--workload", workload, "ycsb | tpcc");
    app.add_option("--seed", cfg.seed, "run seed; fixes the whole event sequence");
    app.add_option("--partitions", cfg.partitions, "number of partitions (n)");
    app.add_option("--workers", cfg.workers, "workers per partition (h)");
    app.add_option("--tl", tl, "compute cost per operation");
    app.add_option("--tr", tr, "one-way remote delay");
    app.add_option("--tr-jitter", tr_jitter, "uniform extra delay in [0, jitter]");
    app.add_option("--flush-latency", flush, "log flush latency");
    app.add_option("--tm", tm, "watermark generation interval");
    app.add_option("--epoch", epoch, "epoch group-commit interval");
    app.add_option("--duration", duration, "workload generation horizon");
    app.add_option("--txn-limit", cfg.txn_limit, "stop generating after this many attempts");
    app.add_option("--backoff-init", backoff_init, "initial retry backoff");
    app.add_option("--backoff-cap", backoff_cap, "retry backoff cap");
    app.add_option("--membership-latency", membership, "crash detection/consensus latency");
    app.add_flag("--no-force-advance", no_force_advance, "disable lagging-partition force advance");
    app.add_option("--logging", logging, "override for 2PL baselines: sync | epoch");
    app.add_option("--crash-at", crash_at, "inject a crash at this sim time");
    app.add_option("--crash-partition", crash_partition, "partition to crash");
    app.add_option("--link-delay", link_delays,
                   "from:to:extra:from_t:to_t:filter (from/to may be *, filter all|wm|epoch)")
        ->take_all();
    app.add_option("--mask-workers", masks, "p:h override of one partition's worker count")->take_all();
    app.add_option("--keys", cfg.workload.keys_per_partition, "keys per partition");
    app.add_option("--ops", cfg.workload.ops_per_txn, "key accesses per transaction (m)");
    app.add_option("--read-ratio", cfg.workload.read_ratio, "fraction of pure reads (R_r)");
    app.add_option("--dist-ratio", cfg.workload.distributed_ratio, "distributed-transaction ratio (R_d)");
    app.add_option("--zipf", cfg.workload.zipf_theta, "zipf skew");
    app.add_option("--blind-ratio", cfg.workload.blind_write_ratio, "RMW ops turned into blind writes");
    app.add_option("--warehouses", cfg.workload.warehouses_per_partition, "tpcc warehouses per partition");
    app.add_option("--out", out_path, "metrics output file ('-' for stdout)");
    app.add_option("--format", format, "metrics format: json | csv | table");
    app.add_option("--trace", trace_path, "history trace (JSON lines, input to `bench check`)");
    app.add_option("--event-trace", event_trace_path, "deterministic event trace (golden-file testing)");
    app.add_option("--msg-trace", msg_trace_path, "binary message trace in delivery order");
    app.add_option("--dump-initial", dump_initial, "initial state snapshot file");
    app.add_option("--dump-final", dump_final, "final state snapshot file");
    app.add_flag("--quiet", quiet, "suppress the summary line");

    app.callback([&] {
        if (!config_file.empty()) cfg = load_config_file(config_file, cfg);
        auto proto = protocol_from_name(protocol);
        if (!proto) throw CLI::ValidationError("--protocol", "unknown protocol '" + protocol + "'");
        cfg.protocol = *proto;
        if (workload == "tpcc") cfg.workload.kind = WorkloadKind::TpccLite;
        else if (workload == "ycsb") cfg.workload.kind = WorkloadKind::Ycsb;
        else throw CLI::ValidationError("--workload", "unknown workload '" + workload + "'");
        cfg.t_l = sim_units(tl);
        cfg.remote_delay = sim_units(tr);
        cfg.remote_delay_jitter = sim_units(tr_jitter);
        cfg.flush_latency = sim_units(flush);
        cfg.t_m = sim_units(tm);
        cfg.epoch_len = sim_units(epoch);
        cfg.duration = sim_units(duration);
        cfg.backoff_init = sim_units(backoff_init);
        cfg.backoff_cap = sim_units(backoff_cap);
        cfg.membership_latency = sim_units(membership);
        cfg.force_advance = !no_force_advance;
        if (!logging.empty()) {
            if (logging == "sync") cfg.logging_override = LoggingMode::Sync;
            else if (logging == "epoch") cfg.logging_override = LoggingMode::Epoch;
            else throw CLI::ValidationError("--logging", "must be sync or epoch");
        }
        if (crash_at >= 0) {
            if (crash_partition < 0)
                throw CLI::ValidationError("--crash-at", "requires --crash-partition");
            cfg.crashes.push_back(CrashPlan{sim_units(crash_at), static_cast<PartitionId>(crash_partition)});
        }
        for (const std::string& spec : link_delays) {
            LinkDelayRule rule;
            char from[8] = "*", to[8] = "*", filter[8] = "all";
            double extra = 0, from_t = 0, to_t = 1e15;
            if (std::sscanf(spec.c_str(), "%7[^:]:%7[^:]:%lf:%lf:%lf:%7s", from, to, &extra, &from_t,
                            &to_t, filter) < 3)
                throw CLI::ValidationError("--link-delay", "expected from:to:extra[:from_t:to_t:filter]");
            rule.from = std::string(from) == "*" ? -1 : std::stoi(from);
            rule.to = std::string(to) == "*" ? -1 : std::stoi(to);
            rule.extra = sim_units(extra);
            rule.from_t = sim_units(from_t);
            rule.to_t = sim_units(to_t);
            std::string f = filter;
            rule.filter = f == "wm" ? MsgFilter::WatermarkOnly
                          : f == "epoch" ? MsgFilter::EpochCtrlOnly
                                         : MsgFilter::All;
            cfg.link_delays.push_back(rule);
        }
        for (const std::string& spec : masks) {
            unsigned p = 0, h = 0;
            if (std::sscanf(spec.c_str(), "%u:%u", &p, &h) != 2 || h == 0)
                throw CLI::ValidationError("--mask-workers", "expected p:h");
            if (cfg.workers_override.size() <= p) cfg.workers_override.resize(p + 1, 0);
            cfg.workers_override[p] = static_cast<std::uint16_t>(h);
        }

        ExperimentOptions opt;
        opt.event_trace = !event_trace_path.empty();
        opt.msg_trace = !msg_trace_path.empty();
        ExperimentResult res = run_experiment(cfg, opt);

        if (!trace_path.empty()) write_file(trace_path, trace_to_jsonl(res.trace));
        if (!event_trace_path.empty()) write_file(event_trace_path, res.event_trace);
        if (!msg_trace_path.empty()) write_file(msg_trace_path, res.msg_trace);
        if (!dump_initial.empty()) write_file(dump_initial, encode_snapshot(res.initial));
        if (!dump_final.empty()) write_file(dump_final, encode_snapshot(res.final_state));

        std::string rendered;
        if (format == "json") rendered = metrics_to_json(res.metrics).dump(2) + "\n";
        else if (format == "csv") rendered = metrics_to_csv(res.metrics);
        else if (format == "table") rendered = metrics_to_table(res.metrics);
        else throw CLI::ValidationError("--format", "must be json, csv or table");
        write_out(out_path, rendered);

        if (!quiet)
            std::cerr << protocol_name(cfg.protocol) << " seed=" << cfg.seed << ": committed "
                      << res.metrics.committed << "/" << res.metrics.attempts << " attempts, throughput "
                      << res.metrics.throughput << " txn/unit, serializable="
                      << (res.serializability.ok ? "yes" : "NO") << "\n";
        if (!res.serializability.ok) {
            std::cerr << "serializability violation: " << res.serializability.detail << "\n";
            throw CLI::RuntimeError(2);
        }
    });
    return 0;
}

int cmd_check(CLI::App& app) {
    static std::string trace_path, initial_path, final_path;
    app.add_option("--trace", trace_path, "history trace from `bench run --trace`")->required();
    app.add_option("--initial", initial_path, "initial state snapshot")->required();
    app.add_option("--final", final_path, "final state snapshot")->required();
    app.callback([&] {
        HistoryTrace trace = trace_from_jsonl(read_file(trace_path));
        Store initial = decode_snapshot(read_file(initial_path));
        Store final_state = decode_snapshot(read_file(final_path));
        CheckResult r = check_serializable(initial, final_state, trace);
        if (r.ok) {
            std::cout << "ok: " << trace.released_committed().size()
                      << " committed transactions are serializable\n";
            return;
        }
        std::cout << "counterexample: " << r.detail << "\n";
        throw CLI::RuntimeError(1);
    });
    return 0;
}

int cmd_model(CLI::App& app) {
    static AnalyticalParams p;
    static bool exact = false;
    static bool nl_set = false;
    app.set_help_flag("--help", "print help");  // frees --h for the thread count
    app.add_option("--pc", p.pc, "pairwise conflict probability P_c");
    app.add_option("--m", p.m, "keys per transaction");
    app.add_option("--rr", p.rr, "read ratio R_r");
    app.add_option("--ru", p.ru, "rts-update ratio R_u");
    app.add_option("--rd", p.rd, "distributed ratio R_d");
    app.add_option("--n", p.n, "partitions");
    app.add_option("--h", p.h, "worker threads per partition");
    app.add_option("--tr", p.tr, "remote access duration");
    app.add_option("--tl", p.tl, "local transaction duration");
    app.add_option("--nl", p.nl, "concurrent local transactions (default h-1)")
        ->each([](const std::string&) { nl_set = true; });
    app.add_flag("--exact", exact, "exact concurrency counts instead of the t_r >> t_l approximation");
    app.callback([&] {
        if (!nl_set) p.nl = p.h - 1;
        p.exact = exact;
        ConflictModel m = conflict_rate_model(p);
        Json j;
        j["c_2pc"] = m.c_2pc;
        j["c_primo_local"] = m.c_primo_local;
        j["c_primo_dist"] = m.c_primo_dist;
        j["n_2pc"] = m.n_2pc;
        j["n_primo"] = m.n_primo;
        j["cr_2pc"] = m.cr_2pc;
        j["cr_primo"] = m.cr_primo;
        j["crossover_rr"] = exponent_crossover_read_ratio(p.ru);
        std::cout << j.dump(2) << "\n";
    });
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"partitioned transactional KV engine simulator"};
    app.require_subcommand(1);
    cmd_run(*app.add_subcommand("run", "run an experiment"));
    cmd_check(*app.add_subcommand("check", "check a recorded history for serializability"));
    cmd_model(*app.add_subcommand("model", "evaluate the analytical conflict-rate model"));
    CLI11_PARSE(app, argc, argv);
    return 0;
}
