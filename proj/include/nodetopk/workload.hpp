#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "nodetopk/flowtable.hpp"

namespace nodetopk {

struct Trace {
  std::vector<FlowId> packets;
  std::uint32_t num_flows = 0;
};

/// Zipf(a) trace over `num_flows` flows. Rank r is drawn with probability
/// proportional to r^-a; flow IDs are a seeded permutation of 1..num_flows.
Trace gen_zipf(double a, std::uint64_t num_packets, std::uint32_t num_flows,
               std::uint64_t seed);

struct SplitPlan {
  std::size_t k = 128;
  std::size_t n_switches = 1;
  /// Probability that a non-top-k packet goes to its flow's home switch.
  double affinity = 1.0;
  std::uint64_t seed = 1;
};

/// Home switch of a non-top-k flow.
std::size_t home_switch(FlowId id, std::size_t n_switches);

/// Packets of the exact top-k flows go to a uniformly random switch;
/// every other packet goes home with probability `affinity`, else to a
/// uniformly random non-home switch. Packet order is kept within each
/// output.
std::vector<std::vector<FlowId>> split_stream(const Trace& trace,
                                              const SplitPlan& plan);

/// Exact counts of the k heaviest flows, heaviest first, ties broken by the
/// larger FlowId.
std::vector<FlowEntry> exact_topk(std::span<const FlowId> packets,
                                  std::size_t k);

class TraceIoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Binary trace: "NTRC", u8 version 1, u32 num_flows, u64 num_packets, then
/// num_packets u32 flow IDs, all little-endian.
void write_trace(const std::filesystem::path& path, const Trace& trace);
Trace read_trace(const std::filesystem::path& path);

std::vector<std::uint8_t> encode_trace(const Trace& trace);
Trace decode_trace(std::span<const std::uint8_t> bytes);

}  // namespace nodetopk
