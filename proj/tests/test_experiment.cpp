#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "nodetopk/experiment.hpp"

using namespace nodetopk;

namespace {

ExperimentConfig small() {
  ExperimentConfig c;
  c.n_switches = 4;
  c.s = 64;
  c.k = 16;
  c.num_packets = 20'000;
  c.num_flows = 2'000;
  c.seeds = {3, 4};
  return c;
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream is(text);
  for (std::string l; std::getline(is, l);) out.push_back(l);
  return out;
}

}  // namespace

TEST_SUITE("recall_at_k") {
  const std::vector<FlowEntry> truth{{1, 9}, {2, 8}, {3, 7}, {4, 6}};

  TEST_CASE("a superset recalls everything") {
    const std::vector<FlowEntry> rep{{5, 1}, {4, 1}, {3, 1}, {2, 1}, {1, 1}};
    CHECK(recall_at_k(rep, truth, 4) == 1.0);
  }

  TEST_CASE("disjoint sets recall nothing") {
    const std::vector<FlowEntry> rep{{7, 1}, {8, 1}};
    CHECK(recall_at_k(rep, truth, 4) == 0.0);
  }

  TEST_CASE("partial overlap") {
    const std::vector<FlowEntry> rep{{1, 1}, {3, 1}, {9, 1}};
    CHECK(recall_at_k(rep, truth, 4) == doctest::Approx(0.5));
    CHECK(recall_at_k(rep, truth, 2) == doctest::Approx(0.5));
  }

  TEST_CASE("fewer true flows than k") {
    const std::vector<FlowEntry> rep{{1, 1}, {2, 1}, {3, 1}, {4, 1}};
    CHECK(recall_at_k(rep, truth, 100) == 1.0);
    CHECK(recall_at_k(rep, {}, 10) == 1.0);
  }
}

TEST_CASE("per-switch memory") {
  CHECK(node_memory_bytes(2, 4096) == 294'912);
  CHECK(node_memory_bytes(2, 512) == 36'864);
  CHECK(node_memory_bytes(1, 1) == 36);
  static_assert(node_memory_bytes(2, 4096) == 288 * 1024);
}

TEST_CASE("config validation") {
  auto bad = [](auto edit) {
    ExperimentConfig c = small();
    edit(c);
    return c;
  };
  CHECK_NOTHROW(small().validate());
  CHECK_THROWS_AS(bad([](auto& c) { c.n_switches = 0; }).validate(), std::invalid_argument);
  CHECK_THROWS_AS(bad([](auto& c) { c.clusters = 5; }).validate(), std::invalid_argument);
  CHECK_THROWS_AS(bad([](auto& c) { c.k = 0; }).validate(), std::invalid_argument);
  CHECK_THROWS_AS(bad([](auto& c) { c.k = 129; }).validate(), std::invalid_argument);
  CHECK_THROWS_AS(bad([](auto& c) { c.s = 100; }).validate(), std::invalid_argument);
  CHECK_THROWS_AS(bad([](auto& c) { c.zipf_a = 0; }).validate(), std::invalid_argument);
  CHECK_THROWS_AS(bad([](auto& c) { c.affinity = 2; }).validate(), std::invalid_argument);
  CHECK_THROWS_AS(bad([](auto& c) { c.drop_probability = 1; }).validate(),
                  std::invalid_argument);
  CHECK_THROWS_AS(bad([](auto& c) { c.seeds.clear(); }).validate(), std::invalid_argument);
  CHECK_THROWS_AS(bad([](auto& c) { c.cycles = 0; }).validate(), std::invalid_argument);
}

TEST_SUITE("reports") {
  TEST_CASE("identical configs give identical CSV") {
    auto cfg = small();
    cfg.drop_probability = 0.1;
    cfg.delivery_order = DeliveryOrder::kRandom;
    std::ostringstream a, b;
    write_csv(a, run_experiment(cfg));
    cfg.threads = 2;
    write_csv(b, run_experiment(cfg));
    CHECK(a.str() == b.str());
  }

  TEST_CASE("CSV schema and AVG row") {
    auto cfg = small();
    std::ostringstream os;
    const auto report = run_experiment(cfg);
    write_csv(os, report);
    const auto ls = lines(os.str());
    REQUIRE(ls.size() == 4);
    CHECK(ls[0] ==
          "seed,n,clusters,d,s,k,zipf,packets,flows,affinity,drop,recall,"
          "messages,memory_bytes,recirculations");
    CHECK(ls[1].rfind("3,4,1,2,64,16,1,20000,2000,1,0,", 0) == 0);
    CHECK(ls[3].rfind("AVG,4,1,2,64,16,1,", 0) == 0);
    for (const auto& l : ls) CHECK(std::count(l.begin(), l.end(), ',') == 14);
    CHECK(report.runs[0].memory_bytes == node_memory_bytes(2, 64));
  }

  TEST_CASE("lossless messages match the entry count") {
    auto cfg = small();
    cfg.seeds = {9};
    const auto r = run_experiment(cfg).runs[0];
    // Each switch sends its table twice to three peers.
    CHECK(r.messages % 6 == 0);
    CHECK(r.messages > 0);
  }

  TEST_CASE("a single switch reports its local recall") {
    auto cfg = small();
    cfg.n_switches = 1;
    const auto r = run_experiment(cfg).runs[0];
    CHECK(r.messages == 0);
    CHECK(r.recall > 0.8);
  }

  TEST_CASE("several cycles and clusters run cleanly") {
    auto cfg = small();
    cfg.n_switches = 6;
    cfg.clusters = 2;
    cfg.cycles = 3;
    cfg.random_interleave = true;
    cfg.drop_probability = 0.2;
    const auto report = run_experiment(cfg);
    for (const auto& r : report.runs) {
      CHECK(r.recall > 0.5);
      CHECK(r.dropped > 0);
    }
  }

  TEST_CASE("trace file input") {
    const auto path = std::filesystem::temp_directory_path() / "nodetopk_exp.ntrc";
    write_trace(path, gen_zipf(1.0, 10'000, 500, 1));
    auto cfg = small();
    cfg.trace_path = path;
    std::ostringstream os;
    write_csv(os, run_experiment(cfg));
    CHECK(lines(os.str())[1].find(",trace,10000,0,") != std::string::npos);
    std::filesystem::remove(path);
    CHECK_THROWS_AS(run_experiment(cfg), TraceIoError);
  }
}

TEST_CASE("verify_trace passes on a generated trace") {
  std::ostringstream log;
  for (std::uint64_t seed : {1, 2, 3}) {
    const auto v = verify_trace(gen_zipf(0.9, 20'000, 800, seed), seed, log);
    CHECK_MESSAGE(!v.has_value(), v.value_or(""));
  }
  CHECK(log.str().find("matches lossless reference") != std::string::npos);
  CHECK(verify_trace(Trace{}, 1, log).has_value());
}
