#include <algorithm>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "nodetopk/invariants.hpp"
#include "nodetopk/transport.hpp"
#include "test_support.hpp"

using namespace nodetopk;

namespace {

std::vector<ProtocolMessage> msgs(SwitchId sender, Round round, std::size_t count) {
  std::vector<ProtocolMessage> out;
  for (std::size_t i = 0; i < count; ++i) {
    out.push_back({round, sender, {static_cast<FlowId>(100 + i), 5 + i}});
  }
  return out;
}

NetworkConfig net_of(std::size_t n, double drop, DeliveryOrder order,
                     std::uint64_t seed) {
  NetworkConfig net;
  net.n = n;
  net.drop_probability = drop;
  net.delivery_order = order;
  net.seed = seed;
  return net;
}

}  // namespace

TEST_SUITE("broadcast") {
  TEST_CASE("two switches, three entries") {
    Transport t(net_of(2, 0, DeliveryOrder::kFifoPerPair, 1), {0, 1});
    CHECK(t.broadcast(0, Round::kAggregation, msgs(0, Round::kAggregation, 3)) == 3);
    CHECK(t.enqueued() == 3);
  }

  TEST_CASE("a lone switch sends nothing") {
    Transport t(net_of(1, 0, DeliveryOrder::kFifoPerPair, 1), {0});
    CHECK(t.broadcast(0, Round::kAggregation, msgs(0, Round::kAggregation, 3)) == 0);
    CHECK(t.idle());
    CHECK(t.round_complete(0, Round::kAggregation));
  }

  TEST_CASE("sending the same round twice is a contract violation") {
    Transport t(net_of(3, 0, DeliveryOrder::kFifoPerPair, 1), {0, 1, 2});
    t.broadcast(1, Round::kAggregation, msgs(1, Round::kAggregation, 2));
    CHECK_THROWS_AS(t.broadcast(1, Round::kAggregation, msgs(1, Round::kAggregation, 2)),
                    ContractViolation);
  }

  TEST_CASE("malformed messages are rejected") {
    Transport t(net_of(2, 0, DeliveryOrder::kFifoPerPair, 1), {0, 1});
    CHECK_THROWS_AS(t.broadcast(0, Round::kAggregation, msgs(1, Round::kAggregation, 1)),
                    ContractViolation);
    CHECK_THROWS_AS(t.broadcast(0, Round::kConsolidation, msgs(0, Round::kAggregation, 1)),
                    ContractViolation);
    CHECK_THROWS_AS(t.broadcast(0, Round::kAggregation, {{Round::kAggregation, 0, {}}}),
                    ContractViolation);
    CHECK_THROWS_AS(t.broadcast(7, Round::kAggregation, {}), ContractViolation);
  }

  TEST_CASE("invalid network settings") {
    CHECK_THROWS_AS(net_of(0, 0, DeliveryOrder::kRandom, 1).validate(),
                    std::invalid_argument);
    CHECK_THROWS_AS(net_of(2, 1.0, DeliveryOrder::kRandom, 1).validate(),
                    std::invalid_argument);
    CHECK_THROWS_AS(net_of(2, -0.1, DeliveryOrder::kRandom, 1).validate(),
                    std::invalid_argument);
    CHECK_THROWS_AS(Transport(net_of(2, 0, DeliveryOrder::kRandom, 1), {1, 1}),
                    std::invalid_argument);
  }
}

TEST_SUITE("step") {
  TEST_CASE("nothing to deliver yields nullopt") {
    Transport t(net_of(2, 0, DeliveryOrder::kRandom, 1), {0, 1});
    CHECK_FALSE(t.step().has_value());
  }

  TEST_CASE("channels wait until their receiver opens") {
    Transport t(net_of(2, 0, DeliveryOrder::kFifoPerPair, 1), {0, 1});
    t.broadcast(0, Round::kAggregation, msgs(0, Round::kAggregation, 2));
    CHECK_FALSE(t.step().has_value());
    t.open_receiver(1, Round::kAggregation);
    const auto ev = t.step();
    REQUIRE(ev.has_value());
    CHECK(ev->receiver == 1);
    CHECK(ev->message.entry.id == 100);
  }

  TEST_CASE("FIFO order within a channel") {
    Transport t(net_of(2, 0, DeliveryOrder::kFifoPerPair, 1), {0, 1});
    t.open_receiver(1, Round::kAggregation);
    t.broadcast(0, Round::kAggregation, msgs(0, Round::kAggregation, 5));
    for (FlowId want = 100; want < 105; ++want) {
      const auto ev = t.step();
      REQUIRE(ev.has_value());
      CHECK(ev->message.entry.id == want);
    }
    CHECK(t.idle());
  }

  TEST_CASE("exactly once with and without losses") {
    for (double drop : {0.0, 0.5}) {
      for (auto order : {DeliveryOrder::kFifoPerPair, DeliveryOrder::kRandom}) {
        CAPTURE(drop);
        const std::size_t n = 5;
        Transport t(net_of(n, drop, order, 42), {0, 1, 2, 3, 4});
        for (SwitchId s = 0; s < n; ++s) {
          t.open_receiver(s, Round::kAggregation);
          t.broadcast(s, Round::kAggregation, msgs(s, Round::kAggregation, 10 + s));
        }
        std::uint64_t delivers = 0;
        while (auto ev = t.step()) delivers += ev->kind == EventKind::kDeliver;
        CHECK(delivers == t.enqueued());
        CHECK(t.delivered() == t.enqueued());
        CHECK(t.enqueued() == 4 * (10 + 11 + 12 + 13 + 14));
        CHECK((drop == 0.0) == (t.dropped() == 0));
        CHECK_FALSE(t.audit_exactly_once().has_value());
        for (SwitchId s = 0; s < n; ++s) CHECK(t.round_complete(s, Round::kAggregation));
      }
    }
  }

  TEST_CASE("message metric includes drops only on request") {
    for (bool count_drops : {false, true}) {
      auto net = net_of(3, 0.3, DeliveryOrder::kRandom, 9);
      net.count_drops = count_drops;
      Transport t(net, {0, 1, 2});
      for (SwitchId s = 0; s < 3; ++s) {
        t.open_receiver(s, Round::kConsolidation);
        t.broadcast(s, Round::kConsolidation, msgs(s, Round::kConsolidation, 20));
      }
      while (t.step()) {
      }
      REQUIRE(t.dropped() > 0);
      CHECK(t.messages() == t.delivered() + (count_drops ? t.dropped() : 0));
    }
  }

  TEST_CASE("round_complete never runs ahead of delivery") {
    Transport t(net_of(4, 0.4, DeliveryOrder::kRandom, 3), {0, 1, 2, 3});
    std::vector<std::vector<std::size_t>> got(4, std::vector<std::size_t>(4, 0));
    for (SwitchId s = 0; s < 4; ++s) {
      CHECK_FALSE(t.round_complete(s, Round::kAggregation));
      t.open_receiver(s, Round::kAggregation);
      t.broadcast(s, Round::kAggregation, msgs(s, Round::kAggregation, 6));
    }
    while (auto ev = t.step()) {
      if (ev->kind == EventKind::kDeliver) ++got[ev->receiver][ev->message.sender];
      for (SwitchId r = 0; r < 4; ++r) {
        bool all = true;
        for (SwitchId s = 0; s < 4; ++s) all &= s == r || got[r][s] == 6;
        REQUIRE(t.round_complete(r, Round::kAggregation) == all);
      }
    }
  }

  TEST_CASE("trace lines follow the event format") {
    std::ostringstream os;
    Transport t(net_of(2, 0, DeliveryOrder::kFifoPerPair, 1), {0, 1}, &os);
    t.open_receiver(1, Round::kConsolidation);
    t.broadcast(0, Round::kConsolidation, {{Round::kConsolidation, 0, {77, 9}}});
    t.step();
    CHECK(os.str() == "0,ENQ,CONS,0,1,77,9\n1,DELIVER,CONS,0,1,77,9\n");
    CHECK(format_event({4, EventKind::kDrop, 3, {Round::kAggregation, 2, {5, 6}}}) ==
          "4,DROP,AGG,2,3,5,6");
  }
}

TEST_SUITE("NODE cycle over the transport") {
  const auto c = TableConfig::make(2, 32);

  TEST_CASE("final tables do not depend on order, seed or loss") {
    std::vector<MultiVectorTable> reference;
    const auto base = testing::random_network(5, c, 400, 150, 17);
    int run = 0;
    for (auto order : {DeliveryOrder::kFifoPerPair, DeliveryOrder::kRandom}) {
      for (std::uint64_t seed : {1, 2, 3}) {
        for (double drop : {0.0, 0.3}) {
          auto sws = base;
          const auto stats = run_node_cycle(testing::pointers(sws), net_of(5, drop, order, seed));
          REQUIRE_FALSE(stats.delivery_violation.has_value());
          REQUIRE_FALSE(check_cycle(testing::const_pointers(sws)).has_value());
          if (run++ == 0) {
            for (const auto& sw : sws) reference.push_back(sw.query());
          }
          for (std::size_t i = 0; i < sws.size(); ++i) CHECK(sws[i].query() == reference[i]);
        }
      }
    }
  }

  TEST_CASE("lossless message count is the closed form") {
    auto sws = testing::random_network(4, c, 300, 120, 5);
    std::uint64_t expected = 0;
    for (auto& sw : sws) expected += 3 * table_entries(sw.l_topk().table()).size();
    const auto stats = run_node_cycle(testing::pointers(sws),
                                      net_of(4, 0, DeliveryOrder::kRandom, 8));
    // Each switch's Sum holds the same ids as its snapshot, so both rounds
    // carry the same number of entries.
    CHECK(stats.messages == 2 * expected);
    CHECK(stats.dropped == 0);
  }

  TEST_CASE("a lossy round finishes later than the lossless one") {
    auto lossless = testing::random_network(4, c, 300, 120, 6);
    auto lossy = lossless;
    const auto a = run_node_cycle(testing::pointers(lossless),
                                  net_of(4, 0.0, DeliveryOrder::kRandom, 11));
    const auto b = run_node_cycle(testing::pointers(lossy),
                                  net_of(4, 0.3, DeliveryOrder::kRandom, 11));
    for (std::size_t i = 0; i < 4; ++i) {
      CHECK(b.aggregation_done_at[i] > a.aggregation_done_at[i]);
      CHECK(b.consolidation_done_at[i] > a.consolidation_done_at[i]);
    }
    CHECK(b.end_time == a.end_time + b.dropped);
    for (std::size_t i = 0; i < 4; ++i) CHECK(lossy[i].query() == lossless[i].query());
  }

  TEST_CASE("dissemination copies the source query to every member") {
    auto sws = testing::random_network(4, c, 300, 120, 7);
    run_node_cycle(testing::pointers(sws), net_of(4, 0, DeliveryOrder::kRandom, 1));
    // Clear members' tables with a one-switch cycle so there is something to overwrite.
    for (std::size_t i = 1; i < 4; ++i) {
      Switch* one[] = {&sws[i]};
      run_node_cycle(one, net_of(1, 0, DeliveryOrder::kRandom, 1));
      REQUIRE_FALSE(sws[i].query() == sws[0].query());
    }
    const auto stats = run_dissemination(sws[0], testing::pointers(sws),
                                         net_of(4, 0.3, DeliveryOrder::kRandom, 4));
    CHECK_FALSE(stats.delivery_violation.has_value());
    CHECK(stats.delivered == 3 * table_entries(sws[0].query()).size());
    for (const auto& sw : sws) CHECK(sw.query() == sws[0].query());
  }
}
