#include "nodetopk/cluster.hpp"

#include <algorithm>
#include <numeric>
#include <ostream>
#include <random>

#include "nodetopk/invariants.hpp"

namespace nodetopk {

ClusterPlan partition(std::size_t n, std::size_t c, std::uint64_t seed) {
  if (c == 0 || c > n) {
    throw ContractViolation("partition: need 1 <= c <= n, got c=" +
                            std::to_string(c) + " n=" + std::to_string(n));
  }
  std::vector<SwitchId> order(n);
  std::iota(order.begin(), order.end(), SwitchId{0});
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);

  ClusterPlan plan;
  plan.c = c;
  plan.assignment.assign(n, 0);
  plan.members.resize(c);
  std::size_t next = 0;
  for (std::size_t k = 0; k < c; ++k) {
    const std::size_t size = n / c + (k < n % c ? 1 : 0);
    for (std::size_t i = 0; i < size; ++i) {
      const SwitchId sw = order[next++];
      plan.assignment[sw] = k;
      plan.members[k].push_back(sw);
    }
    std::sort(plan.members[k].begin(), plan.members[k].end());
    plan.representatives.push_back(plan.members[k].front());
  }
  return plan;
}

void write_plan_csv(std::ostream& out, const ClusterPlan& plan) {
  out << "switch_id,cluster_id,is_representative\n";
  for (std::size_t sw = 0; sw < plan.assignment.size(); ++sw) {
    const std::size_t k = plan.assignment[sw];
    out << sw << ',' << k << ','
        << (plan.representatives[k] == sw ? 1 : 0) << '\n';
  }
}

std::uint64_t clustered_messages(const ClusterPlan& plan,
                                 std::uint64_t entries) {
  std::uint64_t total = 0;
  for (const auto& m : plan.members) total += node_cycle_messages(m.size(), entries);
  if (plan.c == 1) return total;
  total += node_cycle_messages(plan.c, entries);
  for (const auto& m : plan.members) total += (m.size() - 1) * entries;
  return total;
}

namespace {

std::vector<const Switch*> as_const(std::span<Switch* const> group) {
  return {group.begin(), group.end()};
}

void verify_group(std::span<Switch* const> group, const char* phase) {
  const auto view = as_const(group);
  if (auto v = check_cycle(view)) {
    throw InvariantViolation(std::string(phase) + ": " + *v);
  }
}

NetworkConfig with_seed(NetworkConfig net, std::uint64_t salt) {
  net.seed = net.seed * 0x9e3779b97f4a7c15ULL + salt;
  return net;
}

}  // namespace

ClusteredStats run_clustered(std::span<Switch* const> switches,
                             const ClusterPlan& plan, const NetworkConfig& net,
                             bool verify) {
  if (plan.assignment.size() != switches.size()) {
    throw ContractViolation("run_clustered: plan does not cover the network");
  }
  for (std::size_t i = 0; i < switches.size(); ++i) {
    if (switches[i]->id() != i) {
      throw ContractViolation("run_clustered: switches[i] must have id i");
    }
  }
  ClusteredStats stats;
  auto absorb = [&stats](const CycleStats& cs) {
    stats.dropped += cs.dropped;
    if (!stats.delivery_violation && cs.delivery_violation) {
      stats.delivery_violation = cs.delivery_violation;
    }
  };

  // Phase 1: NODE inside each cluster.
  std::vector<std::vector<Switch*>> groups(plan.c);
  for (std::size_t k = 0; k < plan.c; ++k) {
    for (SwitchId sw : plan.members[k]) groups[k].push_back(switches[sw]);
    const auto cs = run_node_cycle(groups[k], with_seed(net, k + 1));
    stats.intra_messages += cs.messages;
    absorb(cs);
    if (verify) verify_group(groups[k], "cluster phase");
  }
  if (plan.c == 1) return stats;

  // Phase 2: representatives run NODE over their cluster tables.
  std::vector<Switch*> reps;
  std::vector<MultiVectorTable> cluster_tables;
  for (SwitchId r : plan.representatives) {
    reps.push_back(switches[r]);
    cluster_tables.push_back(switches[r]->g_topk());
  }
  std::vector<const MultiVectorTable*> locals;
  for (const auto& t : cluster_tables) locals.push_back(&t);
  const auto inter = run_node_cycle(reps, with_seed(net, 0), locals);
  stats.inter_messages = inter.messages;
  absorb(inter);
  if (verify) verify_group(reps, "representative phase");

  // Phase 3: fan the result out inside each cluster.
  for (std::size_t k = 0; k < plan.c; ++k) {
    const auto cs = run_dissemination(*switches[plan.representatives[k]],
                                      groups[k],
                                      with_seed(net, plan.c + k + 1));
    stats.dissemination_messages += cs.messages;
    absorb(cs);
  }
  if (verify) {
    const MultiVectorTable& ref = switches.front()->query();
    for (const Switch* sw : switches) {
      if (!(sw->query() == ref)) {
        throw InvariantViolation("dissemination: switch " +
                                 std::to_string(sw->id()) +
                                 " ends with a different Query table");
      }
      if (auto v = check_placement(sw->query(), "Query")) {
        throw InvariantViolation("dissemination: " + *v);
      }
    }
  }
  return stats;
}

}  // namespace nodetopk
