#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <map>
#include <set>

#include "primo/workload.hpp"

using namespace primo;

TEST_CASE("zipf degenerate cases") {
    Rng rng(1);
    CHECK(zipf_sample(0.6, 1, rng) == 0);
    CHECK(zipf_sample(0.0, 1, rng) == 0);

    ZipfSampler z(0.6, 100);
    for (int i = 0; i < 1000; ++i) CHECK(z.sample(rng) < 100);
}

TEST_CASE("zipf theta=0 is uniform (chi-square)") {
    const std::uint64_t n = 100, draws = 100000;
    ZipfSampler z(0.0, n);
    Rng rng(17);
    std::vector<std::uint64_t> counts(n, 0);
    for (std::uint64_t i = 0; i < draws; ++i) ++counts[z.sample(rng)];
    double expected = static_cast<double>(draws) / static_cast<double>(n);
    double chi2 = 0;
    for (std::uint64_t c : counts) {
        double d = static_cast<double>(c) - expected;
        chi2 += d * d / expected;
    }
    // df = 99: mean 99, sd ~14; +/-5 sd
    CHECK(chi2 > 99 - 5 * 14.07);
    CHECK(chi2 < 99 + 5 * 14.07);
}

TEST_CASE("zipf top-rank frequency matches the zeta normalizer") {
    const std::uint64_t n = 10000, draws = 1000000;
    ZipfSampler z(0.99, n);
    Rng rng(23);
    std::uint64_t top = 0;
    for (std::uint64_t i = 0; i < draws; ++i)
        if (z.sample(rng) == 0) ++top;
    double analytic = z.probability(0);  // 1 / zeta_n(theta)
    double observed = static_cast<double>(top) / static_cast<double>(draws);
    CHECK(std::abs(observed - analytic) / analytic < 0.05);
}

TEST_CASE("ycsb program shape") {
    WorkloadSpec spec;
    spec.keys_per_partition = 1000;
    spec.ops_per_txn = 10;
    spec.read_ratio = 0.5;
    spec.distributed_ratio = 0.0;
    Rng rng(5);
    YcsbGenerator gen(spec, 4, 2);

    for (int i = 0; i < 200; ++i) {
        Program p = gen.generate(rng, static_cast<std::uint64_t>(i));
        CHECK(p.home == 2);
        CHECK(p.partitions() == std::set<PartitionId>{2});  // R_d = 0: single partition

        std::set<Key> keys;
        std::uint32_t reads = 0, writes = 0;
        for (const Command& c : p.cmds) {
            if (const auto* r = std::get_if<OpRead>(&c)) { keys.insert(r->key); ++reads; }
            else { keys.insert(std::get<OpWrite>(c).key); ++writes; }
        }
        CHECK(keys.size() == 10);   // m distinct keys
        CHECK(writes == 5);         // 5 RMW
        CHECK(reads == 10);         // 5 pure reads + 5 RMW reads
    }
}

TEST_CASE("ycsb read-only and distributed ratios") {
    WorkloadSpec spec;
    spec.keys_per_partition = 1000;
    spec.ops_per_txn = 10;
    spec.read_ratio = 1.0;
    spec.distributed_ratio = 0.2;
    Rng rng(7);
    YcsbGenerator gen(spec, 4, 0);

    int distributed = 0;
    const int total = 20000;
    for (int i = 0; i < total; ++i) {
        Program p = gen.generate(rng, static_cast<std::uint64_t>(i));
        for (const Command& c : p.cmds) CHECK(std::holds_alternative<OpRead>(c));
        if (p.touches_remote()) {
            ++distributed;
            // first access stays local; 1..3 remote partitions, one key each
            CHECK(std::get<OpRead>(p.cmds[0]).key.partition == 0);
            std::map<PartitionId, int> remote_keys;
            for (const Command& c : p.cmds) {
                Key k = std::get<OpRead>(c).key;
                if (k.partition != 0) ++remote_keys[k.partition];
            }
            CHECK(remote_keys.size() >= 1);
            CHECK(remote_keys.size() <= 3);
            for (auto& [part, cnt] : remote_keys) CHECK(cnt == 1);
        }
    }
    // binomial: sd ~ sqrt(0.2*0.8/20000) ~ 0.0028
    double frac = static_cast<double>(distributed) / total;
    CHECK(frac > 0.2 - 0.015);
    CHECK(frac < 0.2 + 0.015);
}

TEST_CASE("ycsb blind writes replace rmw reads") {
    WorkloadSpec spec;
    spec.keys_per_partition = 100;
    spec.ops_per_txn = 10;
    spec.read_ratio = 0.5;
    spec.distributed_ratio = 0;
    spec.blind_write_ratio = 1.0;  // every RMW becomes a blind write
    Rng rng(9);
    YcsbGenerator gen(spec, 1, 0);
    Program p = gen.generate(rng, 1);
    std::uint32_t reads = 0, writes = 0;
    std::set<Key> read_keys;
    for (const Command& c : p.cmds) {
        if (const auto* r = std::get_if<OpRead>(&c)) { ++reads; read_keys.insert(r->key); }
        else ++writes;
    }
    CHECK(reads == 5);
    CHECK(writes == 5);
    for (const Command& c : p.cmds)
        if (const auto* w = std::get_if<OpWrite>(&c)) CHECK(read_keys.count(w->key) == 0);
}

TEST_CASE("same seed generates identical streams") {
    WorkloadSpec spec;
    Rng a(123), b(123), c(124);
    YcsbGenerator ga(spec, 4, 1), gb(spec, 4, 1), gc(spec, 4, 1);
    std::string sa, sb, sc;
    for (int i = 0; i < 50; ++i) {
        sa += ga.generate(a, static_cast<std::uint64_t>(i)).to_text();
        sb += gb.generate(b, static_cast<std::uint64_t>(i)).to_text();
        sc += gc.generate(c, static_cast<std::uint64_t>(i)).to_text();
    }
    CHECK(sa == sb);
    CHECK(sa != sc);
}

TEST_CASE("tpcc new_order shape and remote fraction") {
    WorkloadSpec spec;
    spec.kind = WorkloadKind::TpccLite;
    Rng rng(31);
    TpccLiteGenerator gen(spec, 4, 1);

    int remote = 0;
    const int total = 10000;
    for (int i = 0; i < total; ++i) {
        Program p = gen.new_order(rng, static_cast<std::uint64_t>(i));
        CHECK(std::holds_alternative<OpRead>(p.cmds[0]));  // district read first
        std::set<Key> keys;
        int blind_writes = 0;
        std::set<Key> reads;
        for (const Command& c : p.cmds) {
            if (const auto* r = std::get_if<OpRead>(&c)) { keys.insert(r->key); reads.insert(r->key); }
            else {
                Key k = std::get<OpWrite>(c).key;
                keys.insert(k);
                if (!reads.count(k)) ++blind_writes;
            }
        }
        CHECK(blind_writes == 1);  // the order insert
        // district + items stock + order: 5..15 items -> 7..17 keys
        CHECK(keys.size() >= 7);
        CHECK(keys.size() <= 17);
        if (p.touches_remote()) ++remote;
    }
    double frac = static_cast<double>(remote) / total;
    CHECK(frac > 0.09);
    CHECK(frac < 0.11);
}

TEST_CASE("tpcc new_order with 5 items all local touches 7 keys") {
    WorkloadSpec spec;
    spec.kind = WorkloadKind::TpccLite;
    Rng rng(2);
    TpccLiteGenerator gen(spec, 1, 0);
    for (int i = 0; i < 200; ++i) {
        Program p = gen.new_order(rng, static_cast<std::uint64_t>(i));
        std::set<Key> keys;
        for (const Command& c : p.cmds) {
            if (const auto* r = std::get_if<OpRead>(&c)) keys.insert(r->key);
            else keys.insert(std::get<OpWrite>(c).key);
        }
        std::size_t items = (p.cmds.size() - 2) / 2;
        CHECK(keys.size() == items + 2);
        if (items == 5) CHECK(keys.size() == 7);
    }
}

TEST_CASE("tpcc payment remote fraction") {
    WorkloadSpec spec;
    spec.kind = WorkloadKind::TpccLite;
    Rng rng(41);
    TpccLiteGenerator gen(spec, 4, 2);
    int remote = 0;
    const int total = 10000;
    for (int i = 0; i < total; ++i) {
        Program p = gen.payment(rng, static_cast<std::uint64_t>(i));
        CHECK(p.cmds.size() == 6);  // 3 RMWs
        if (p.touches_remote()) ++remote;
    }
    double frac = static_cast<double>(remote) / total;
    CHECK(frac > 0.135);
    CHECK(frac < 0.165);
}

TEST_CASE("initial stores cover every generated key") {
    WorkloadSpec spec;
    spec.kind = WorkloadKind::TpccLite;
    std::vector<Store> stores;
    for (PartitionId p = 0; p < 3; ++p) stores.push_back(build_initial_store(spec, p));
    Rng rng(55);
    TpccLiteGenerator gen(spec, 3, 0);
    for (int i = 0; i < 2000; ++i) {
        Program p = gen.generate(rng, static_cast<std::uint64_t>(i));
        for (const Command& c : p.cmds) {
            Key k = std::holds_alternative<OpRead>(c) ? std::get<OpRead>(c).key : std::get<OpWrite>(c).key;
            CHECK(stores[k.partition].contains(k));
        }
    }
    WorkloadSpec y;
    Store ys = build_initial_store(y, 0);
    CHECK(ys.size() == y.keys_per_partition);
}
