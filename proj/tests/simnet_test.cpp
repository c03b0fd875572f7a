#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <string>
#include <vector>

#include "primo/messages.hpp"
#include "primo/simnet.hpp"

using namespace primo;

namespace {

RunConfig base_config() {
    RunConfig cfg;
    cfg.partitions = 4;
    return cfg;
}

std::string run_and_trace(const RunConfig& cfg, std::uint64_t seed,
                          const std::function<void(Net&)>& setup) {
    Net net(cfg, seed);
    setup(net);
    std::string trace;
    net.run_until(sim_units(100000), [&](const SimEvent& ev) {
        trace += format_time(ev.at) + " " + std::to_string(ev.dst) + " " + payload_name(ev.payload) + "\n";
    });
    return trace;
}

}  // namespace

TEST_CASE("fixed delay and fifo per link") {
    RunConfig cfg = base_config();
    Net net(cfg, 1);
    std::vector<SimTime> deliveries;
    std::vector<std::uint64_t> wps;
    net.schedule(0, sim_units(5), EvWatermarkTick{0});
    bool sent = false;
    net.run_until(sim_units(1000), [&](const SimEvent& ev) {
        if (std::holds_alternative<EvWatermarkTick>(ev.payload) && !sent) {
            sent = true;
            net.send(0, 1, MsgWatermark{1, 0, 7, {}});
            net.schedule(0, sim_units(1), EvWorkerStep{0, 0, 0});
        } else if (std::holds_alternative<EvWorkerStep>(ev.payload)) {
            net.send(0, 1, MsgWatermark{1, 0, 8, {}});
        } else if (const auto* m = std::get_if<MsgWatermark>(&ev.payload)) {
            deliveries.push_back(ev.at);
            wps.push_back(m->wp);
        }
    });
    REQUIRE(deliveries.size() == 2);
    CHECK(deliveries[0] == sim_units(15));  // sent at 5, fixed delay 10
    CHECK(deliveries[1] == sim_units(16));  // sent at 6
    CHECK(wps == std::vector<std::uint64_t>{7, 8});
}

TEST_CASE("sends to crashed partitions are dropped and counted") {
    RunConfig cfg = base_config();
    Net net(cfg, 1);
    net.set_alive(2, false);
    net.schedule(0, 0, EvWorkerStep{0, 0, 0});
    int got = 0;
    net.run_until(sim_units(1000), [&](const SimEvent& ev) {
        if (std::holds_alternative<EvWorkerStep>(ev.payload)) {
            net.send(0, 2, MsgTxnAbort{{0, 1}});
            net.send(0, 1, MsgTxnAbort{{0, 1}});
        } else {
            ++got;
        }
    });
    CHECK(got == 1);
    CHECK(net.counters().sent == 2);
    CHECK(net.counters().delivered == 1);
    CHECK(net.counters().dropped_crashed == 1);
}

TEST_CASE("in-flight messages to a partition that crashes are dropped at delivery") {
    RunConfig cfg = base_config();
    Net net(cfg, 1);
    net.schedule(0, 0, EvWorkerStep{0, 0, 0});
    net.inject_crash(2, sim_units(5));
    int delivered = 0;
    net.run_until(sim_units(1000), [&](const SimEvent& ev) {
        if (std::holds_alternative<EvWorkerStep>(ev.payload)) {
            net.send(0, 2, MsgTxnAbort{{0, 1}});  // would arrive at t=10, after the crash
        } else if (std::holds_alternative<EvCrash>(ev.payload)) {
            net.set_alive(2, false);
        } else {
            ++delivered;
        }
    });
    CHECK(delivered == 0);
    CHECK(net.counters().dropped_crashed == 1);
}

TEST_CASE("stale-term messages are dropped") {
    RunConfig cfg = base_config();
    Net net(cfg, 1);
    net.schedule(0, 0, EvWorkerStep{0, 0, 0});
    int delivered = 0;
    net.run_until(sim_units(1000), [&](const SimEvent& ev) {
        if (std::holds_alternative<EvWorkerStep>(ev.payload)) {
            net.send(0, 1, MsgTxnAbort{{0, 1}});
            net.set_term(2);  // recovery bumps the term while the message is in flight
        } else if (std::holds_alternative<MsgTxnAbort>(ev.payload)) {
            ++delivered;
        }
    });
    CHECK(delivered == 0);
    CHECK(net.counters().dropped_stale_term == 1);
}

TEST_CASE("same seed gives identical traces, different seeds differ") {
    RunConfig cfg = base_config();
    cfg.remote_delay_jitter = sim_units(5);
    auto setup = [](Net& net) {
        net.schedule(0, 0, EvWorkerStep{0, 0, 0});
    };
    auto driver = [&](Net& net) {
        std::string trace;
        int hops = 0;
        net.run_until(sim_units(100000), [&](const SimEvent& ev) {
            trace += format_time(ev.at) + " " + payload_name(ev.payload) + "\n";
            if (hops < 50) {
                ++hops;
                net.send(ev.dst, static_cast<PartitionId>((ev.dst + 1) % 4), MsgTxnAbort{{0, 1}});
            }
        });
        return trace;
    };
    Net a(cfg, 42), b(cfg, 42), c(cfg, 43);
    setup(a);
    setup(b);
    setup(c);
    std::string ta = driver(a), tb = driver(b), tc = driver(c);
    CHECK(ta == tb);
    CHECK(ta != tc);
}

TEST_CASE("fifo holds under jitter") {
    RunConfig cfg = base_config();
    cfg.remote_delay_jitter = sim_units(20);
    Net net(cfg, 9);
    net.schedule(0, 0, EvWorkerStep{0, 0, 0});
    std::vector<std::uint64_t> order;
    net.run_until(sim_units(100000), [&](const SimEvent& ev) {
        if (std::holds_alternative<EvWorkerStep>(ev.payload)) {
            for (std::uint64_t i = 0; i < 20; ++i) net.send(0, 1, MsgWatermark{1, 0, i, {}});
        } else if (const auto* m = std::get_if<MsgWatermark>(&ev.payload)) {
            order.push_back(m->wp);
        }
    });
    REQUIRE(order.size() == 20);
    for (std::uint64_t i = 0; i < 20; ++i) CHECK(order[i] == i);
}

TEST_CASE("link delay rules: window and message filter") {
    RunConfig cfg = base_config();
    LinkDelayRule rule;
    rule.from = 3;
    rule.extra = sim_units(50);
    rule.from_t = sim_units(100);
    rule.to_t = sim_units(200);
    rule.filter = MsgFilter::WatermarkOnly;
    cfg.link_delays.push_back(rule);

    Net net(cfg, 1);
    net.schedule(3, sim_units(150), EvWorkerStep{3, 0, 0});
    net.schedule(3, sim_units(300), EvWorkerStep{3, 0, 1});
    std::vector<std::pair<SimTime, const char*>> got;
    net.run_until(sim_units(100000), [&](const SimEvent& ev) {
        if (const auto* step = std::get_if<EvWorkerStep>(&ev.payload)) {
            net.send(3, 0, MsgWatermark{1, 3, step->attempt_epoch, {}});
            net.send(3, 0, MsgTxnAbort{{3, 1}});
        } else {
            got.emplace_back(ev.at, payload_name(ev.payload));
        }
    });
    REQUIRE(got.size() == 4);
    // inside the window: watermark +50, abort unaffected
    CHECK(got[0] == std::make_pair(sim_units(160), "txn_abort"));
    CHECK(got[1] == std::make_pair(sim_units(210), "watermark"));
    // outside the window: both at +10
    CHECK(got[2].first == sim_units(310));
    CHECK(got[3].first == sim_units(310));
}

TEST_CASE("livelock detector fires on a zero-delay storm") {
    RunConfig cfg = base_config();
    cfg.livelock_budget = 1000;
    Net net(cfg, 1);
    net.schedule(0, 0, EvWorkerStep{0, 0, 0});
    CHECK_THROWS_AS(net.run_until(sim_units(10), [&](const SimEvent&) {
        net.schedule(0, 0, EvWorkerStep{0, 0, 0});  // never advances the clock
    }), LivelockDetected);
}

TEST_CASE("empty schedule returns immediately at t=0") {
    RunConfig cfg = base_config();
    Net net(cfg, 1);
    bool ran = false;
    CHECK(net.run_until(sim_units(10), [&](const SimEvent&) { ran = true; }));
    CHECK_FALSE(ran);
    CHECK(net.now() == 0);
}

TEST_CASE("message wire round trip") {
    Rng rng(3);
    for (int i = 0; i < 200; ++i) {
        Payload p;
        auto rand_key = [&] { return Key{static_cast<PartitionId>(rng.next_below(4)), rng.next_below(100)}; };
        auto rand_tid = [&] { return TransactionId{static_cast<std::uint32_t>(rng.next_below(4)), rng.next_below(50)}; };
        auto rand_ts = [&] { return LogicalTimestamp{rng.next_below(1000), rand_tid()}; };
        switch (rng.next_below(7)) {
            case 0: {
                MsgRemoteRead m{rand_tid(), rand_key(), {}};
                for (std::uint64_t j = rng.next_below(3); j > 0; --j) m.dummies.push_back(rand_key());
                p = m;
                break;
            }
            case 1: {
                MsgReadReply m;
                m.tid = rand_tid();
                m.key = rand_key();
                m.status = static_cast<ReplyStatus>(rng.next_below(4));
                m.value = "v" + std::to_string(rng.next_below(10));
                m.wts = rand_ts();
                m.rts = rand_ts();
                m.version = rand_ts();
                for (std::uint64_t j = rng.next_below(3); j > 0; --j)
                    m.dummy_acks.push_back(DummyAck{rand_key(), rng.next_below(99)});
                p = m;
                break;
            }
            case 2: {
                MsgWriteInstall m{rand_tid(), rand_ts(), {}};
                for (std::uint64_t j = rng.next_below(4); j > 0; --j)
                    m.writes.push_back(KeyValue{rand_key(), "w" + std::to_string(j)});
                p = m;
                break;
            }
            case 3: {
                MsgDummyRead m{rand_tid(), {}};
                for (std::uint64_t j = 1 + rng.next_below(3); j > 0; --j) m.keys.push_back(rand_key());
                p = m;
                break;
            }
            case 4: {
                MsgDummyReply m{rand_tid(), ReplyStatus::Ok, {}};
                for (std::uint64_t j = rng.next_below(3); j > 0; --j)
                    m.acks.push_back(DummyAck{rand_key(), rng.next_below(99)});
                p = m;
                break;
            }
            case 5: p = MsgTxnAbort{rand_tid()}; break;
            default: p = MsgWatermark{static_cast<std::uint32_t>(1 + rng.next_below(3)),
                                      static_cast<PartitionId>(rng.next_below(4)), rng.next_below(500), rand_tid()};
        }
        std::string blob = encode_message(p);
        REQUIRE(!blob.empty());
        Payload back = decode_message(blob);
        REQUIRE(back.index() == p.index());
        CHECK(encode_message(back) == blob);
    }
}
