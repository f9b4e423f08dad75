#include "nodetopk/experiment.hpp"

#include <algorithm>
#include <future>
#include <iomanip>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>
#include <unordered_set>

#include "nodetopk/cluster.hpp"
#include "nodetopk/invariants.hpp"
#include "nodetopk/protocol.hpp"

namespace nodetopk {

namespace {

std::uint64_t mix(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (salt + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

enum Salt : std::uint64_t {
  kSaltTrace = 1,
  kSaltSplit,
  kSaltHash,
  kSaltNet,
  kSaltCluster,
  kSaltInterleave,
  kSaltSwitch = 1000,
};

std::string diagnostic(const std::string& what,
                       std::span<const Switch* const> group) {
  std::ostringstream os;
  os << what << '\n';
  const std::size_t shown = std::min<std::size_t>(group.size(), 2);
  for (std::size_t i = 0; i < shown; ++i) {
    os << "switch " << group[i]->id() << " Sum:\n"
       << dump_table(group[i]->sum()) << "switch " << group[i]->id()
       << " G-TopK:\n"
       << dump_table(group[i]->g_topk());
  }
  return os.str();
}

// Feeds packets [from, to) of each switch's stream.
void feed(std::vector<Switch>& switches,
          const std::vector<std::vector<FlowId>>& streams,
          const std::vector<std::size_t>& from, const std::vector<std::size_t>& to,
          bool random_order, std::mt19937_64& rng) {
  std::vector<std::size_t> pos = from;
  if (!random_order) {
    for (bool any = true; any;) {
      any = false;
      for (std::size_t i = 0; i < switches.size(); ++i) {
        if (pos[i] < to[i]) {
          switches[i].ingest(streams[i][pos[i]++]);
          any = true;
        }
      }
    }
    return;
  }
  // Pick the next switch with probability proportional to its backlog.
  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < switches.size(); ++i) {
    order.insert(order.end(), to[i] - from[i], i);
  }
  std::shuffle(order.begin(), order.end(), rng);
  for (std::size_t i : order) switches[i].ingest(streams[i][pos[i]++]);
}

}  // namespace

void ExperimentConfig::validate() const {
  auto fail = [](const std::string& m) { throw std::invalid_argument(m); };
  if (n_switches == 0 || n_switches > 65535) fail("switches must be in [1, 65535]");
  if (clusters == 0 || clusters > n_switches) fail("clusters must be in [1, switches]");
  if (k == 0) fail("k must be >= 1");
  if (k > d * s) fail("k must not exceed d*s");
  if (!trace_path) {
    if (!(zipf_a > 0.0)) fail("zipf exponent must be > 0");
    if (num_flows == 0) fail("flows must be >= 1");
  }
  if (!(affinity >= 0.0 && affinity <= 1.0)) fail("affinity must be in [0, 1]");
  if (!(drop_probability >= 0.0 && drop_probability < 1.0)) {
    fail("drop must be in [0, 1)");
  }
  if (seeds.empty()) fail("at least one seed is required");
  if (cycles == 0) fail("cycles must be >= 1");
  TableConfig::make(d, s).validate();
}

double ExperimentReport::mean_recall() const {
  if (runs.empty()) return 0.0;
  double s = 0.0;
  for (const auto& r : runs) s += r.recall;
  return s / static_cast<double>(runs.size());
}

double ExperimentReport::mean_messages() const {
  if (runs.empty()) return 0.0;
  double s = 0.0;
  for (const auto& r : runs) s += static_cast<double>(r.messages);
  return s / static_cast<double>(runs.size());
}

double ExperimentReport::mean_recirculations() const {
  if (runs.empty()) return 0.0;
  double s = 0.0;
  for (const auto& r : runs) s += static_cast<double>(r.recirculations);
  return s / static_cast<double>(runs.size());
}

double recall_at_k(std::span<const FlowEntry> reported,
                   std::span<const FlowEntry> truth, std::size_t k) {
  const std::size_t denom = std::min(k, truth.size());
  if (denom == 0) return 1.0;
  std::unordered_set<FlowId> ids;
  ids.reserve(reported.size());
  for (const auto& e : reported) ids.insert(e.id);
  std::size_t hit = 0;
  for (std::size_t i = 0; i < denom; ++i) hit += ids.contains(truth[i].id) ? 1 : 0;
  return static_cast<double>(hit) / static_cast<double>(denom);
}

SeedResult run_seed(const ExperimentConfig& config, std::uint64_t seed) {
  config.validate();
  const Trace trace =
      config.trace_path ? read_trace(*config.trace_path)
                        : gen_zipf(config.zipf_a, config.num_packets,
                                   config.num_flows, mix(seed, kSaltTrace));
  SplitPlan split;
  split.k = std::min<std::size_t>(config.k, trace.num_flows);
  split.n_switches = config.n_switches;
  split.affinity = config.affinity;
  split.seed = mix(seed, kSaltSplit);
  const auto streams = split_stream(trace, split);

  const TableConfig shape =
      TableConfig::make(config.d, config.s, mix(seed, kSaltHash));
  std::vector<Switch> switches;
  switches.reserve(config.n_switches);
  for (std::size_t i = 0; i < config.n_switches; ++i) {
    switches.emplace_back(static_cast<SwitchId>(i), shape,
                          mix(seed, kSaltSwitch + i));
  }
  std::vector<Switch*> group;
  for (auto& sw : switches) group.push_back(&sw);
  const std::vector<const Switch*> view(group.begin(), group.end());

  NetworkConfig net;
  net.n = config.n_switches;
  net.drop_probability = config.drop_probability;
  net.delivery_order = config.delivery_order;
  net.seed = mix(seed, kSaltNet);
  net.count_drops = config.count_drops;
  net.audit_deliveries = true;

  const ClusterPlan plan =
      partition(config.n_switches, config.clusters, mix(seed, kSaltCluster));

  std::mt19937_64 interleave(mix(seed, kSaltInterleave));
  std::vector<std::size_t> done(config.n_switches, 0);
  SeedResult result;
  result.seed = seed;
  for (std::size_t cycle = 0; cycle < config.cycles; ++cycle) {
    std::vector<std::size_t> upto(config.n_switches);
    for (std::size_t i = 0; i < config.n_switches; ++i) {
      upto[i] = streams[i].size() * (cycle + 1) / config.cycles;
    }
    feed(switches, streams, done, upto, config.random_interleave, interleave);
    done = upto;

    net.seed = mix(seed, kSaltNet + 100 * cycle);
    if (config.clusters == 1) {
      const CycleStats cs = run_node_cycle(group, net);
      if (auto v = check_cycle(view)) {
        throw InvariantViolation(diagnostic("invariant violated: " + *v, view));
      }
      if (cs.delivery_violation) {
        throw InvariantViolation("exactly-once violated: " + *cs.delivery_violation);
      }
      result.messages = cs.messages;
      result.dropped = cs.dropped;
    } else {
      const ClusteredStats cs = run_clustered(group, plan, net, true);
      if (cs.delivery_violation) {
        throw InvariantViolation("exactly-once violated: " + *cs.delivery_violation);
      }
      result.messages = cs.messages();
      result.dropped = cs.dropped;
    }
  }

  const auto truth = exact_topk(trace.packets, config.k);
  const auto reported = table_entries(switches.front().query());
  result.recall = recall_at_k(reported, truth, config.k);
  result.memory_bytes = node_memory_bytes(config.d, config.s);
  result.packets = trace.packets.size();
  for (const auto& sw : switches) result.recirculations += sw.l_topk().recirculations();
  return result;
}

ExperimentReport run_experiment(const ExperimentConfig& config) {
  config.validate();
  ExperimentReport report;
  report.config = config;
  report.runs.resize(config.seeds.size());
  const std::size_t threads = std::max<std::size_t>(1, config.threads);
  for (std::size_t base = 0; base < config.seeds.size(); base += threads) {
    std::vector<std::future<SeedResult>> batch;
    const std::size_t end = std::min(config.seeds.size(), base + threads);
    for (std::size_t i = base; i < end; ++i) {
      batch.push_back(std::async(threads > 1 ? std::launch::async
                                             : std::launch::deferred,
                                 run_seed, std::cref(config), config.seeds[i]));
    }
    for (std::size_t i = base; i < end; ++i) report.runs[i] = batch[i - base].get();
  }
  return report;
}

void write_csv(std::ostream& out, const ExperimentReport& report) {
  const ExperimentConfig& c = report.config;
  out << "seed,n,clusters,d,s,k,zipf,packets,flows,affinity,drop,recall,"
         "messages,memory_bytes,recirculations\n";
  std::ostringstream fixed;
  fixed << c.n_switches << ',' << c.clusters << ',' << c.d << ',' << c.s << ','
        << c.k << ',';
  if (c.trace_path) {
    fixed << "trace";
  } else {
    fixed << c.zipf_a;
  }
  const std::string prefix = fixed.str();
  auto tail = [&](std::ostream& os) {
    os << ',' << c.affinity << ',' << c.drop_probability << ',';
  };
  for (const auto& r : report.runs) {
    out << r.seed << ',' << prefix << ',' << r.packets << ',';
    out << (c.trace_path ? 0 : c.num_flows);
    tail(out);
    out << std::fixed << std::setprecision(6) << r.recall
        << std::defaultfloat << ',' << r.messages << ',' << r.memory_bytes
        << ',' << r.recirculations << '\n';
  }
  double packets = 0.0;
  for (const auto& r : report.runs) packets += static_cast<double>(r.packets);
  if (!report.runs.empty()) packets /= static_cast<double>(report.runs.size());
  out << "AVG," << prefix << ',' << std::fixed << std::setprecision(1)
      << packets << std::defaultfloat << ',';
  out << (c.trace_path ? 0 : c.num_flows);
  tail(out);
  out << std::fixed << std::setprecision(6) << report.mean_recall()
      << std::setprecision(1) << ',' << report.mean_messages() << ','
      << node_memory_bytes(c.d, c.s) << ',' << report.mean_recirculations()
      << std::defaultfloat << '\n';
}

std::optional<std::string> verify_trace(const Trace& trace, std::uint64_t seed,
                                        std::ostream& log) {
  if (trace.packets.empty()) return "trace has no packets";
  std::mt19937_64 rng(seed);
  const std::size_t n = std::uniform_int_distribution<std::size_t>(2, 8)(rng);
  const TableConfig shape = TableConfig::make(2, 256, mix(seed, kSaltHash));
  log << "verify: " << n << " switches, d=2 s=256, " << trace.packets.size()
      << " packets\n";

  // Header flow counts are not trusted here; count distinct IDs instead.
  Trace counted = trace;
  counted.num_flows = static_cast<std::uint32_t>(
      exact_topk(trace.packets, trace.packets.size()).size());
  SplitPlan split;
  split.k = std::min<std::size_t>(16, counted.num_flows);
  split.n_switches = n;
  split.affinity = 0.5;
  split.seed = mix(seed, kSaltSplit);
  const auto streams = split_stream(counted, split);

  std::vector<Switch> switches;
  for (std::size_t i = 0; i < n; ++i) {
    switches.emplace_back(static_cast<SwitchId>(i), shape, mix(seed, kSaltSwitch + i));
  }
  AccessLog alog;
  for (std::size_t i = 0; i < n; ++i) {
    for (FlowId id : streams[i]) {
      alog.clear();
      switches[i].l_topk().process_packet(id, &alog);
      if (auto v = check_access_order(alog, FieldOrder::kIdFirst)) {
        return "local top-k access order: " + *v;
      }
      if (alog.passes() > 2) return "local top-k recirculated more than once";
    }
    if (auto v = check_unique_ids(switches[i].l_topk().table(), "L-TopK")) return v;
  }
  log << "verify: local top-k access order ok\n";

  // Lossless reference cycle driven by hand with access logging.
  std::vector<Switch> probe = switches;
  for (auto& sw : probe) sw.begin_cycle();
  for (auto& rx : probe) {
    for (const auto& tx : probe) {
      if (tx.id() == rx.id()) continue;
      for (const auto& m : tx.emit_aggregation_messages()) {
        alog.clear();
        rx.handle_aggregation_packet(m, &alog);
        if (auto v = check_access_order(alog, FieldOrder::kIdFirst)) {
          return "aggregation access order: " + *v;
        }
        if (alog.passes() != 1) return "aggregation recirculated";
      }
    }
  }
  for (auto& sw : probe) sw.end_aggregation();
  for (auto& rx : probe) {
    for (const auto& tx : probe) {
      if (tx.id() == rx.id()) continue;
      for (const auto& m : tx.emit_consolidation_messages()) {
        alog.clear();
        rx.handle_consolidation_packet(m, &alog);
        if (auto v = check_access_order(alog, FieldOrder::kCountFirst)) {
          return "consolidation access order: " + *v;
        }
        if (alog.passes() != 1) return "consolidation recirculated";
      }
    }
  }
  for (auto& sw : probe) sw.end_consolidation();
  log << "verify: aggregation/consolidation access order ok\n";

  std::vector<Switch*> group;
  for (auto& sw : switches) group.push_back(&sw);
  const std::vector<const Switch*> view(group.begin(), group.end());
  NetworkConfig net;
  net.n = n;
  net.drop_probability = 0.2;
  net.delivery_order = DeliveryOrder::kRandom;
  net.seed = mix(seed, kSaltNet);
  const CycleStats cs = run_node_cycle(group, net);
  if (cs.delivery_violation) return "exactly-once: " + *cs.delivery_violation;
  if (auto v = check_cycle(view)) return v;
  log << "verify: lossy random-order cycle invariants ok (" << cs.delivered
      << " delivered, " << cs.dropped << " dropped)\n";

  for (std::size_t i = 0; i < n; ++i) {
    if (!(probe[i].g_topk() == switches[i].g_topk())) {
      return "lossy random-order G-TopK differs from the lossless reference";
    }
  }
  log << "verify: matches lossless reference\n";
  return std::nullopt;
}

}  // namespace nodetopk
