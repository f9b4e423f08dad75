#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "nodetopk/protocol.hpp"
#include "nodetopk/transport.hpp"

namespace nodetopk {

struct ClusterPlan {
  std::size_t c = 1;
  /// Switch id -> cluster index.
  std::vector<std::size_t> assignment;
  /// Lowest switch id in each cluster.
  std::vector<SwitchId> representatives;
  /// Member switch ids per cluster, ascending.
  std::vector<std::vector<SwitchId>> members;
};

/// Splits switches 0..n-1 into c clusters of size floor(n/c) or ceil(n/c),
/// membership shuffled by `seed`.
ClusterPlan partition(std::size_t n, std::size_t c, std::uint64_t seed);

/// `switch_id,cluster_id,is_representative` with a header row.
void write_plan_csv(std::ostream& out, const ClusterPlan& plan);

struct ClusteredStats {
  std::uint64_t intra_messages = 0;
  std::uint64_t inter_messages = 0;
  std::uint64_t dissemination_messages = 0;
  std::uint64_t dropped = 0;
  /// First exactly-once audit failure from any phase.
  std::optional<std::string> delivery_violation;

  std::uint64_t messages() const noexcept {
    return intra_messages + inter_messages + dissemination_messages;
  }
};

/// Closed-form lossless message count for one NODE cycle among `m`
/// switches that each send `entries` per round.
constexpr std::uint64_t node_cycle_messages(std::uint64_t m,
                                            std::uint64_t entries) {
  return m == 0 ? 0 : m * (m - 1) * entries * 2;
}

/// Closed-form lossless count for a clustered run in which every table that
/// is sent holds `entries` entries.
std::uint64_t clustered_messages(const ClusterPlan& plan, std::uint64_t entries);

/// Three barrier-separated phases: a NODE cycle inside each cluster, a NODE
/// cycle among representatives seeded with their cluster G-TopK, then each
/// representative disseminates the result to its members. With c == 1 this
/// is a plain NODE cycle. `switches[i]` must have id i. When `verify` is
/// set, protocol invariants are checked after each phase and an
/// InvariantViolation is thrown on failure.
ClusteredStats run_clustered(std::span<Switch* const> switches,
                             const ClusterPlan& plan, const NetworkConfig& net,
                             bool verify = true);

}  // namespace nodetopk
