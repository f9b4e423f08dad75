#include "nodetopk/protocol.hpp"

#include <string>

namespace nodetopk {

namespace {

const char* phase_name(RoundPhase p) {
  switch (p) {
    case RoundPhase::kIdle: return "IDLE";
    case RoundPhase::kAggregation: return "AGGREGATION";
    case RoundPhase::kConsolidation: return "CONSOLIDATION";
    case RoundPhase::kDissemination: return "DISSEMINATION";
  }
  return "?";
}

template <typename T>
void put_le(std::uint8_t* out, T v) {
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    out[i] = static_cast<std::uint8_t>(v >> (8 * i));
  }
}

template <typename T>
T get_le(const std::uint8_t* in) {
  T v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    v |= static_cast<T>(in[i]) << (8 * i);
  }
  return v;
}

}  // namespace

std::array<std::uint8_t, kWireSize> encode(const ProtocolMessage& msg) {
  std::array<std::uint8_t, kWireSize> out{};
  out[0] = static_cast<std::uint8_t>(msg.round);
  put_le<std::uint16_t>(out.data() + 1, msg.sender);
  put_le<std::uint32_t>(out.data() + 3, msg.entry.id);
  put_le<std::uint64_t>(out.data() + 7, msg.entry.count);
  return out;
}

ProtocolMessage decode(std::span<const std::uint8_t, kWireSize> bytes) {
  if (bytes[0] > static_cast<std::uint8_t>(Round::kDissemination)) {
    throw std::invalid_argument("unknown round tag " +
                                std::to_string(bytes[0]));
  }
  ProtocolMessage msg;
  msg.round = static_cast<Round>(bytes[0]);
  msg.sender = get_le<std::uint16_t>(bytes.data() + 1);
  msg.entry.id = get_le<std::uint32_t>(bytes.data() + 3);
  msg.entry.count = get_le<std::uint64_t>(bytes.data() + 7);
  if (msg.entry.id == kEmptyId) {
    throw std::invalid_argument("message carries the empty flow id");
  }
  return msg;
}

ConsolidationResult consolidate_into(MultiVectorTable& g_topk, FlowEntry packet,
                                     AccessLog* log) {
  PipelineAccess pipe(g_topk, log);
  ConsolidationResult result;
  for (std::size_t v = 0; v < g_topk.vectors(); ++v) {
    result.vectors_walked = v + 1;
    const std::size_t j = g_topk.slot_of(v, packet.id);
    const Count stored_count = pipe.read_count(v, j);
    if (packet.count > stored_count) {
      pipe.write_count(v, j, packet.count);
      const FlowId stored_id = pipe.read_id(v, j);
      pipe.write_id(v, j, packet.id);
      if (stored_id == kEmptyId) {
        result.outcome = ConsolidationOutcome::kAbsorbed;
        return result;
      }
      packet = {stored_id, stored_count};
      continue;
    }
    if (packet.count == stored_count) {
      const FlowId stored_id = pipe.read_id(v, j);
      if (stored_id == packet.id) {
        result.outcome = ConsolidationOutcome::kDuplicate;
        return result;
      }
      if (packet.id > stored_id) {
        pipe.write_id(v, j, packet.id);
        packet.id = stored_id;
      }
    }
  }
  result.outcome = ConsolidationOutcome::kFiltered;
  result.discarded = packet;
  return result;
}

Switch::Switch(SwitchId id, const TableConfig& config, std::uint64_t rng_seed)
    : id_(id),
      l_topk_(config, rng_seed),
      snapshot_(config, FieldOrder::kIdFirst),
      sum_(config, FieldOrder::kIdFirst),
      g_topk_(config, FieldOrder::kCountFirst),
      query_(config, FieldOrder::kIdFirst) {}

void Switch::require(RoundPhase expected, const char* op) const {
  if (phase_ != expected) {
    throw ContractViolation(std::string(op) + " on switch " +
                            std::to_string(id_) + " requires phase " +
                            phase_name(expected) + ", switch is in " +
                            phase_name(phase_));
  }
}

void Switch::begin_cycle() { begin_cycle_from(l_topk_.table()); }

void Switch::begin_cycle_from(const MultiVectorTable& local) {
  require(RoundPhase::kIdle, "begin_cycle");
  if (local.config() != snapshot_.config()) {
    throw ContractViolation("begin_cycle: table shape mismatch");
  }
  snapshot_ = snapshot_copy(local).relabeled(FieldOrder::kIdFirst);
  sum_ = snapshot_;
  g_topk_.reset();
  phase_ = RoundPhase::kAggregation;
}

std::vector<ProtocolMessage> Switch::emit_from(const MultiVectorTable& t,
                                               Round round) const {
  std::vector<ProtocolMessage> out;
  for (const FlowEntry& e : table_entries(t)) out.push_back({round, id_, e});
  return out;
}

std::vector<ProtocolMessage> Switch::emit_aggregation_messages() const {
  require(RoundPhase::kAggregation, "emit_aggregation_messages");
  return emit_from(snapshot_, Round::kAggregation);
}

void Switch::handle_aggregation_packet(const ProtocolMessage& msg,
                                       AccessLog* log) {
  require(RoundPhase::kAggregation, "handle_aggregation_packet");
  if (msg.round != Round::kAggregation) {
    throw ContractViolation("handle_aggregation_packet: wrong round tag");
  }
  if (msg.sender == id_) {
    throw ContractViolation("handle_aggregation_packet: message from self");
  }
  // Snapshot holds the IDs, Sum the counters; one pipeline, ID first.
  PipelineAccess ids(snapshot_, log);
  PipelineAccess counts(sum_, log);
  for (std::size_t v = 0; v < snapshot_.vectors(); ++v) {
    const std::size_t j = snapshot_.slot_of(v, msg.entry.id);
    if (ids.read_id(v, j) == msg.entry.id) {
      counts.write_count(v, j, counts.read_count(v, j) + msg.entry.count);
      return;
    }
  }
}

void Switch::end_aggregation() {
  require(RoundPhase::kAggregation, "end_aggregation");
  phase_ = RoundPhase::kConsolidation;
  for (const FlowEntry& e : table_entries(sum_)) {
    handle_consolidation_packet({Round::kConsolidation, id_, e});
  }
}

std::vector<ProtocolMessage> Switch::emit_consolidation_messages() const {
  require(RoundPhase::kConsolidation, "emit_consolidation_messages");
  return emit_from(sum_, Round::kConsolidation);
}

ConsolidationResult Switch::handle_consolidation_packet(
    const ProtocolMessage& msg, AccessLog* log) {
  require(RoundPhase::kConsolidation, "handle_consolidation_packet");
  if (msg.round != Round::kConsolidation) {
    throw ContractViolation("handle_consolidation_packet: wrong round tag");
  }
  ConsolidationResult r = consolidate_into(g_topk_, msg.entry, log);
  if (r.outcome == ConsolidationOutcome::kDuplicate) ++duplicate_stops_;
  return r;
}

void Switch::end_consolidation() {
  require(RoundPhase::kConsolidation, "end_consolidation");
  query_ = snapshot_copy(g_topk_).relabeled(FieldOrder::kIdFirst);
  phase_ = RoundPhase::kIdle;
}

void Switch::begin_dissemination() {
  require(RoundPhase::kIdle, "begin_dissemination");
  g_topk_.reset();
  phase_ = RoundPhase::kDissemination;
}

std::vector<ProtocolMessage> Switch::emit_dissemination_messages() const {
  require(RoundPhase::kIdle, "emit_dissemination_messages");
  return emit_from(query_, Round::kDissemination);
}

void Switch::handle_dissemination_packet(const ProtocolMessage& msg) {
  require(RoundPhase::kDissemination, "handle_dissemination_packet");
  if (msg.round != Round::kDissemination) {
    throw ContractViolation("handle_dissemination_packet: wrong round tag");
  }
  consolidate_into(g_topk_, msg.entry);
}

void Switch::end_dissemination() {
  require(RoundPhase::kDissemination, "end_dissemination");
  query_ = snapshot_copy(g_topk_).relabeled(FieldOrder::kIdFirst);
  phase_ = RoundPhase::kIdle;
}

std::optional<Count> Switch::query_flow(FlowId id) const {
  const auto e = query_.lookup(id);
  return e ? std::optional<Count>(e->count) : std::nullopt;
}

}  // namespace nodetopk
