#pragma once

#include <cstdint>
#include <optional>
#include <random>

#include "nodetopk/flowtable.hpp"

namespace nodetopk {

/// Local top-k engine: the Precision variant of RAP over a d-vector table.
///
/// A packet probes one slot per vector in pipeline order. A matching ID is
/// incremented and probing stops. With no match, the packet recirculates
/// with probability 1/(MinCount+1) and overwrites the earliest probed slot
/// holding MinCount with (id, MinCount+1). Recirculation is modeled as an
/// immediate second pass and counted.
class LocalTopK {
 public:
  LocalTopK(TableConfig config, std::uint64_t rng_seed);

  void process_packet(FlowId id, AccessLog* log = nullptr);

  std::optional<Count> local_estimate(FlowId id) const {
    const auto e = table_.lookup(id);
    return e ? std::optional<Count>(e->count) : std::nullopt;
  }

  const MultiVectorTable& table() const noexcept { return table_; }
  /// Replaces the table contents wholesale (test fixtures, cluster
  /// representatives).
  void load(const MultiVectorTable& t);

  std::uint64_t recirculations() const noexcept { return recirculations_; }
  std::uint64_t packets() const noexcept { return packets_; }

 private:
  MultiVectorTable table_;
  std::mt19937_64 rng_;
  std::uint64_t recirculations_ = 0;
  std::uint64_t packets_ = 0;
};

}  // namespace nodetopk
