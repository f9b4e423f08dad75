#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "nodetopk/flowtable.hpp"
#include "nodetopk/precision.hpp"

namespace nodetopk {

using SwitchId = std::uint16_t;

enum class RoundPhase : std::uint8_t {
  kIdle,
  kAggregation,
  kConsolidation,
  /// Cluster members receiving their representative's final table.
  kDissemination,
};

/// Wire tag of a protocol message. Aggregation and consolidation are the
/// two NODE rounds; dissemination is the cluster fan-out round.
enum class Round : std::uint8_t {
  kAggregation = 0,
  kConsolidation = 1,
  kDissemination = 2,
};

struct ProtocolMessage {
  Round round = Round::kAggregation;
  SwitchId sender = 0;
  FlowEntry entry;

  friend bool operator==(const ProtocolMessage&,
                         const ProtocolMessage&) = default;
};

/// Fixed little-endian layout: round u8, sender u16, id u32, count u64.
inline constexpr std::size_t kWireSize = 15;
std::array<std::uint8_t, kWireSize> encode(const ProtocolMessage& msg);
/// Throws std::invalid_argument on an unknown round tag or the empty id.
ProtocolMessage decode(std::span<const std::uint8_t, kWireSize> bytes);

enum class ConsolidationOutcome : std::uint8_t {
  /// The carried pair landed in an empty slot.
  kAbsorbed,
  /// Met its own (id, count) pair and stopped.
  kDuplicate,
  /// A pair was still carried after the last vector and was discarded.
  kFiltered,
};

struct ConsolidationResult {
  ConsolidationOutcome outcome = ConsolidationOutcome::kFiltered;
  /// The pair discarded off the end of the pipeline, when filtered.
  FlowEntry discarded;
  std::size_t vectors_walked = 0;
};

/// Walks one (id, count) packet through a COUNT_FIRST table, keeping the
/// (count, id)-larger pair in each slot and carrying the loser onward.
ConsolidationResult consolidate_into(MultiVectorTable& g_topk, FlowEntry packet,
                                     AccessLog* log = nullptr);

/// One switch's NODE state: the five tables plus the round phase.
///
/// L-TopK keeps ingesting traffic in every phase. Snapshot is frozen from
/// begin_cycle until the next begin_cycle; Sum shares Snapshot's IDs and is
/// frozen after end_aggregation; Query changes only at end_consolidation
/// (or end_dissemination on a cluster member).
class Switch {
 public:
  Switch(SwitchId id, const TableConfig& config, std::uint64_t rng_seed);

  SwitchId id() const noexcept { return id_; }
  RoundPhase phase() const noexcept { return phase_; }

  void ingest(FlowId flow) { l_topk_.process_packet(flow); }

  void begin_cycle();
  /// Starts a cycle whose snapshot comes from `local` instead of L-TopK.
  /// Cluster representatives use their cluster table this way.
  void begin_cycle_from(const MultiVectorTable& local);

  std::vector<ProtocolMessage> emit_aggregation_messages() const;
  void handle_aggregation_packet(const ProtocolMessage& msg,
                                 AccessLog* log = nullptr);
  /// Freezes Sum, enters consolidation and feeds this switch's own Sum
  /// entries into G-TopK ahead of any remote packet.
  void end_aggregation();

  std::vector<ProtocolMessage> emit_consolidation_messages() const;
  ConsolidationResult handle_consolidation_packet(const ProtocolMessage& msg,
                                                  AccessLog* log = nullptr);
  void end_consolidation();

  /// Cluster fan-out: G-TopK is cleared and rebuilt from the received
  /// entries; Query takes the result.
  void begin_dissemination();
  std::vector<ProtocolMessage> emit_dissemination_messages() const;
  void handle_dissemination_packet(const ProtocolMessage& msg);
  void end_dissemination();

  std::optional<Count> query_flow(FlowId id) const;

  const LocalTopK& l_topk() const noexcept { return l_topk_; }
  LocalTopK& l_topk() noexcept { return l_topk_; }
  const MultiVectorTable& snapshot() const noexcept { return snapshot_; }
  const MultiVectorTable& sum() const noexcept { return sum_; }
  const MultiVectorTable& g_topk() const noexcept { return g_topk_; }
  const MultiVectorTable& query() const noexcept { return query_; }

  /// Consolidation packets that stopped on their own duplicate pair.
  std::uint64_t duplicate_stops() const noexcept { return duplicate_stops_; }

 private:
  void require(RoundPhase expected, const char* op) const;
  std::vector<ProtocolMessage> emit_from(const MultiVectorTable& t,
                                         Round round) const;

  SwitchId id_;
  LocalTopK l_topk_;
  MultiVectorTable snapshot_;
  MultiVectorTable sum_;
  MultiVectorTable g_topk_;
  MultiVectorTable query_;
  RoundPhase phase_ = RoundPhase::kIdle;
  std::uint64_t duplicate_stops_ = 0;
};

}  // namespace nodetopk
