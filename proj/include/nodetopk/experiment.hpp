#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nodetopk/flowtable.hpp"
#include "nodetopk/transport.hpp"
#include "nodetopk/workload.hpp"

namespace nodetopk {

struct ExperimentConfig {
  std::size_t n_switches = 10;
  std::size_t clusters = 1;
  std::size_t d = 2;
  std::size_t s = 4096;
  std::size_t k = 128;
  double zipf_a = 1.0;
  /// Replaces the synthetic trace when set.
  std::optional<std::filesystem::path> trace_path;
  std::uint64_t num_packets = 1'000'000;
  std::uint32_t num_flows = 100'000;
  double affinity = 1.0;
  double drop_probability = 0.0;
  std::vector<std::uint64_t> seeds{1};
  std::size_t cycles = 1;
  DeliveryOrder delivery_order = DeliveryOrder::kFifoPerPair;
  /// Interleave per-switch packets in seeded random order instead of
  /// round-robin.
  bool random_interleave = false;
  bool count_drops = false;
  /// Seeds evaluated concurrently.
  std::size_t threads = 1;

  /// Throws std::invalid_argument describing the first bad field.
  void validate() const;
};

struct SeedResult {
  std::uint64_t seed = 0;
  double recall = 0.0;
  std::uint64_t messages = 0;
  std::uint64_t memory_bytes = 0;
  std::uint64_t recirculations = 0;
  std::uint64_t dropped = 0;
  std::uint64_t packets = 0;
};

struct ExperimentReport {
  ExperimentConfig config;
  std::vector<SeedResult> runs;

  /// Arithmetic means over runs.
  double mean_recall() const;
  double mean_messages() const;
  double mean_recirculations() const;
};

/// Fraction of `truth` IDs present among `reported`, over min(k, |truth|).
double recall_at_k(std::span<const FlowEntry> reported,
                   std::span<const FlowEntry> truth, std::size_t k);

/// Four full tables (L-TopK, Snapshot, G-TopK, Query) at 4+4 bytes per cell
/// plus the counter-only Sum table.
constexpr std::size_t node_memory_bytes(std::size_t d, std::size_t s) {
  return 4 * memory_bytes(d, s, 4, 4) + memory_bytes(d, s, 0, 4);
}

/// Runs one seed end to end: trace, split, local top-k, `cycles` NODE
/// cycles (flat or clustered) with invariants checked, recall against the
/// exact oracle. Throws InvariantViolation or TraceIoError.
SeedResult run_seed(const ExperimentConfig& config, std::uint64_t seed);

ExperimentReport run_experiment(const ExperimentConfig& config);

/// One row per seed, then an AVG row.
void write_csv(std::ostream& out, const ExperimentReport& report);

/// Runs the protocol invariant suite on a small random network fed with
/// `trace`. Progress lines go to `log`.
std::optional<std::string> verify_trace(const Trace& trace, std::uint64_t seed,
                                        std::ostream& log);

}  // namespace nodetopk
