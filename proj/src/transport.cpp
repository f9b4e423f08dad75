#include "nodetopk/transport.hpp"

#include <algorithm>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace nodetopk {

namespace {

const char* event_name(EventKind k) {
  switch (k) {
    case EventKind::kEnqueue: return "ENQ";
    case EventKind::kDrop: return "DROP";
    case EventKind::kDeliver: return "DELIVER";
  }
  return "?";
}

const char* round_name(Round r) {
  switch (r) {
    case Round::kAggregation: return "AGG";
    case Round::kConsolidation: return "CONS";
    case Round::kDissemination: return "DISSEM";
  }
  return "?";
}

}  // namespace

void NetworkConfig::validate() const {
  if (n == 0) throw std::invalid_argument("network needs at least one switch");
  if (!(drop_probability >= 0.0 && drop_probability < 1.0)) {
    throw std::invalid_argument("drop probability must be in [0, 1)");
  }
}

std::string format_event(const TransportEvent& ev) {
  std::ostringstream os;
  os << ev.time << ',' << event_name(ev.kind) << ','
     << round_name(ev.message.round) << ',' << ev.message.sender << ','
     << ev.receiver << ',' << ev.message.entry.id << ','
     << ev.message.entry.count;
  return os.str();
}

Transport::Transport(NetworkConfig config, std::vector<SwitchId> members,
                     std::ostream* trace)
    : config_(config),
      members_(std::move(members)),
      rng_(config.seed),
      drop_(config.drop_probability),
      trace_(trace) {
  config_.validate();
  if (members_.empty()) throw std::invalid_argument("empty switch group");
  SwitchId max_id = *std::max_element(members_.begin(), members_.end());
  member_of_.assign(static_cast<std::size_t>(max_id) + 1, -1);
  for (std::size_t i = 0; i < members_.size(); ++i) {
    if (member_of_[members_[i]] != -1) {
      throw std::invalid_argument("duplicate switch id in group");
    }
    member_of_[members_[i]] = static_cast<std::int32_t>(i);
  }
  for (std::size_t r = 0; r < kRounds; ++r) {
    is_sender_[r].assign(members_.size(), 1);
    opened_[r].assign(members_.size(), 0);
  }
  channel_at_.assign(kRounds * members_.size() * members_.size(), -1);
}

std::size_t Transport::member_index(SwitchId id) const {
  if (id >= member_of_.size() || member_of_[id] < 0) {
    throw ContractViolation("switch " + std::to_string(id) +
                            " is not in this transport group");
  }
  return static_cast<std::size_t>(member_of_[id]);
}

void Transport::set_senders(Round round, std::vector<SwitchId> senders) {
  auto& flags = is_sender_[static_cast<std::size_t>(round)];
  std::fill(flags.begin(), flags.end(), 0);
  for (SwitchId s : senders) flags[member_index(s)] = 1;
}

void Transport::emit(const TransportEvent& ev) const {
  if (trace_ != nullptr) *trace_ << format_event(ev) << '\n';
}

std::size_t Transport::broadcast(SwitchId sender, Round round,
                                 std::vector<ProtocolMessage> messages) {
  const std::size_t s = member_index(sender);
  if (!is_sender_[static_cast<std::size_t>(round)][s]) {
    throw ContractViolation("switch " + std::to_string(sender) +
                            " is not a sender in this round");
  }
  for (const auto& m : messages) {
    if (m.round != round || m.sender != sender || m.entry.empty()) {
      throw ContractViolation("broadcast: malformed message");
    }
  }
  auto source =
      std::make_shared<const std::vector<ProtocolMessage>>(std::move(messages));
  std::size_t total = 0;
  for (std::size_t r = 0; r < members_.size(); ++r) {
    if (r == s) continue;
    const std::size_t key = slot(round, s, r);
    if (channel_at_[key] != -1) {
      throw ContractViolation("broadcast: round already sent by this switch");
    }
    Channel ch;
    ch.sender = s;
    ch.receiver = r;
    ch.round = round;
    ch.source = source;
    if (config_.audit_deliveries) ch.marks.assign(source->size(), 0);
    channel_at_[key] = static_cast<std::int32_t>(channels_.size());
    channels_.push_back(std::move(ch));
    if (trace_ != nullptr) {
      for (const auto& m : *source) {
        emit({time_, EventKind::kEnqueue, members_[r], m});
      }
    }
    total += source->size();
    if (opened_[static_cast<std::size_t>(round)][r]) {
      activate(channels_.size() - 1);
    }
  }
  enqueued_ += total;
  return total;
}

void Transport::open_receiver(SwitchId receiver, Round round) {
  const std::size_t r = member_index(receiver);
  opened_[static_cast<std::size_t>(round)][r] = 1;
  for (std::size_t s = 0; s < members_.size(); ++s) {
    const std::int32_t c = channel_at_[slot(round, s, r)];
    if (c >= 0) activate(static_cast<std::size_t>(c));
  }
}

void Transport::activate(std::size_t c) {
  Channel& ch = channels_[c];
  if (ch.active || ch.pending() == 0) return;
  ch.active = true;
  if (active_pos_.size() < channels_.size()) {
    active_pos_.resize(channels_.size(), -1);
  }
  active_pos_[c] = static_cast<std::int32_t>(active_.size());
  active_.push_back(static_cast<std::uint32_t>(c));
}

void Transport::deactivate(std::size_t c) {
  Channel& ch = channels_[c];
  ch.active = false;
  const auto pos = static_cast<std::size_t>(active_pos_[c]);
  const std::uint32_t last = active_.back();
  active_[pos] = last;
  active_pos_[last] = static_cast<std::int32_t>(pos);
  active_.pop_back();
  active_pos_[c] = -1;
}

std::optional<TransportEvent> Transport::step() {
  if (active_.empty()) return std::nullopt;
  std::size_t pick = 0;
  if (config_.delivery_order == DeliveryOrder::kRandom) {
    pick = std::uniform_int_distribution<std::size_t>(0, active_.size() - 1)(
        rng_);
  } else {
    if (cursor_ >= active_.size()) cursor_ = 0;
    pick = cursor_++;
  }
  const std::size_t c = active_[pick];
  Channel& ch = channels_[c];

  std::uint32_t index = 0;
  if (ch.next < ch.source->size()) {
    index = static_cast<std::uint32_t>(ch.next++);
  } else {
    index = ch.retransmit.front();
    ch.retransmit.pop_front();
  }
  // Re-read from the static source on every (re)transmission.
  const ProtocolMessage& msg = (*ch.source)[index];

  TransportEvent ev{++time_, EventKind::kDeliver, members_[ch.receiver], msg};
  if (config_.drop_probability > 0.0 && drop_(rng_)) {
    ev.kind = EventKind::kDrop;
    ch.retransmit.push_back(index);
    ++dropped_;
  } else {
    if (!ch.marks.empty()) {
      if (ch.marks[index] != 0) {
        throw std::logic_error("transport delivered a message twice");
      }
      ch.marks[index] = 1;
    }
    ++ch.delivered;
    ++delivered_;
  }
  if (ch.pending() == 0) deactivate(c);
  emit(ev);
  return ev;
}

bool Transport::round_complete(SwitchId receiver, Round round) const {
  const std::size_t r = member_index(receiver);
  const auto& senders = is_sender_[static_cast<std::size_t>(round)];
  for (std::size_t s = 0; s < members_.size(); ++s) {
    if (s == r || !senders[s]) continue;
    const std::int32_t c = channel_at_[slot(round, s, r)];
    if (c < 0) return false;
    const Channel& ch = channels_[static_cast<std::size_t>(c)];
    if (ch.delivered != ch.source->size()) return false;
  }
  return true;
}

std::optional<std::string> Transport::audit_exactly_once() const {
  if (!config_.audit_deliveries) return "delivery audit disabled";
  for (const Channel& ch : channels_) {
    for (std::size_t i = 0; i < ch.marks.size(); ++i) {
      if (ch.marks[i] != 1) {
        std::ostringstream os;
        os << "entry " << i << " of round " << round_name(ch.round)
           << " from switch " << members_[ch.sender] << " to switch "
           << members_[ch.receiver] << " was not delivered";
        return os.str();
      }
    }
    if (ch.delivered != ch.source->size()) {
      return "delivered count mismatch on a channel";
    }
  }
  return std::nullopt;
}

namespace {

std::vector<SwitchId> ids_of(std::span<Switch* const> group) {
  std::vector<SwitchId> ids;
  ids.reserve(group.size());
  for (const Switch* sw : group) ids.push_back(sw->id());
  return ids;
}

}  // namespace

CycleStats run_node_cycle(std::span<Switch* const> group,
                          const NetworkConfig& net,
                          std::span<const MultiVectorTable* const> locals,
                          std::ostream* trace) {
  if (!locals.empty() && locals.size() != group.size()) {
    throw ContractViolation("run_node_cycle: one local table per switch");
  }
  Transport transport(net, ids_of(group), trace);
  const std::size_t m = group.size();
  CycleStats stats;
  stats.aggregation_done_at.assign(m, 0);
  stats.consolidation_done_at.assign(m, 0);

  for (std::size_t i = 0; i < m; ++i) {
    if (locals.empty()) {
      group[i]->begin_cycle();
    } else {
      group[i]->begin_cycle_from(*locals[i]);
    }
  }
  for (Switch* sw : group) {
    transport.broadcast(sw->id(), Round::kAggregation,
                        sw->emit_aggregation_messages());
    transport.open_receiver(sw->id(), Round::kAggregation);
  }

  // Moves switch i forward if its current round has completed. Returns
  // true when it broadcast something new.
  auto advance = [&](std::size_t i) {
    Switch& sw = *group[i];
    if (sw.phase() == RoundPhase::kAggregation &&
        transport.round_complete(sw.id(), Round::kAggregation)) {
      sw.end_aggregation();
      stats.aggregation_done_at[i] = transport.now();
      transport.broadcast(sw.id(), Round::kConsolidation,
                          sw.emit_consolidation_messages());
      transport.open_receiver(sw.id(), Round::kConsolidation);
      if (transport.round_complete(sw.id(), Round::kConsolidation)) {
        sw.end_consolidation();
        stats.consolidation_done_at[i] = transport.now();
      }
      return true;
    }
    if (sw.phase() == RoundPhase::kConsolidation &&
        transport.round_complete(sw.id(), Round::kConsolidation)) {
      sw.end_consolidation();
      stats.consolidation_done_at[i] = transport.now();
    }
    return false;
  };
  auto settle = [&] {
    for (bool changed = true; changed;) {
      changed = false;
      for (std::size_t i = 0; i < m; ++i) changed |= advance(i);
    }
  };

  settle();
  std::vector<std::size_t> local_index(
      static_cast<std::size_t>(
          *std::max_element(transport.members().begin(),
                            transport.members().end())) +
          1,
      0);
  for (std::size_t i = 0; i < m; ++i) local_index[group[i]->id()] = i;

  while (auto ev = transport.step()) {
    if (ev->kind != EventKind::kDeliver) continue;
    const std::size_t i = local_index[ev->receiver];
    Switch& rx = *group[i];
    if (ev->message.round == Round::kAggregation) {
      rx.handle_aggregation_packet(ev->message);
    } else {
      rx.handle_consolidation_packet(ev->message);
    }
    if (advance(i)) settle();
  }

  for (const Switch* sw : group) {
    if (sw->phase() != RoundPhase::kIdle) {
      throw std::logic_error("NODE cycle stalled before every switch finished");
    }
  }
  stats.messages = transport.messages();
  stats.delivered = transport.delivered();
  stats.dropped = transport.dropped();
  stats.enqueued = transport.enqueued();
  stats.end_time = transport.now();
  if (net.audit_deliveries) stats.delivery_violation = transport.audit_exactly_once();
  return stats;
}

CycleStats run_dissemination(Switch& source, std::span<Switch* const> group,
                             const NetworkConfig& net, std::ostream* trace) {
  Transport transport(net, ids_of(group), trace);
  transport.set_senders(Round::kAggregation, {});
  transport.set_senders(Round::kConsolidation, {});
  transport.set_senders(Round::kDissemination, {source.id()});
  CycleStats stats;

  std::vector<Switch*> receivers;
  for (Switch* sw : group) {
    if (sw->id() == source.id()) continue;
    sw->begin_dissemination();
    transport.open_receiver(sw->id(), Round::kDissemination);
    receivers.push_back(sw);
  }
  transport.broadcast(source.id(), Round::kDissemination,
                      source.emit_dissemination_messages());
  while (auto ev = transport.step()) {
    if (ev->kind != EventKind::kDeliver) continue;
    for (Switch* sw : receivers) {
      if (sw->id() == ev->receiver) {
        sw->handle_dissemination_packet(ev->message);
        break;
      }
    }
  }
  for (Switch* sw : receivers) {
    if (!transport.round_complete(sw->id(), Round::kDissemination)) {
      throw std::logic_error("dissemination stalled");
    }
    sw->end_dissemination();
  }
  stats.messages = transport.messages();
  stats.delivered = transport.delivered();
  stats.dropped = transport.dropped();
  stats.enqueued = transport.enqueued();
  stats.end_time = transport.now();
  if (net.audit_deliveries) stats.delivery_violation = transport.audit_exactly_once();
  return stats;
}

}  // namespace nodetopk
