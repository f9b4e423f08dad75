#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <iosfwd>
#include <memory>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "nodetopk/protocol.hpp"

namespace nodetopk {

enum class DeliveryOrder : std::uint8_t {
  /// Round-robin over sender/receiver channels, FIFO inside each channel.
  kFifoPerPair,
  /// Uniformly random channel at every step.
  kRandom,
};

struct NetworkConfig {
  std::size_t n = 1;
  double drop_probability = 0.0;
  DeliveryOrder delivery_order = DeliveryOrder::kFifoPerPair;
  std::uint64_t seed = 1;
  /// Count dropped transmissions in the message metric as well.
  bool count_drops = false;
  /// Keep per-entry delivery marks so exactly-once can be audited. Costs one
  /// byte per in-flight message.
  bool audit_deliveries = true;

  void validate() const;
};

enum class EventKind : std::uint8_t { kEnqueue, kDrop, kDeliver };

struct TransportEvent {
  std::uint64_t time = 0;
  EventKind kind = EventKind::kDeliver;
  SwitchId receiver = 0;
  ProtocolMessage message;
};

/// `time,event,round,sender,receiver,id,count`
std::string format_event(const TransportEvent& ev);

/// Exactly-once broadcast among a fixed group of switches.
///
/// Each (sender, receiver, round) channel reads its messages from the
/// sender's static source list. A dropped message is re-sent later from
/// that same source. A channel only delivers once its receiver has been
/// opened for the round, so a fast sender's consolidation traffic waits
/// for slower receivers to finish aggregating.
class Transport {
 public:
  Transport(NetworkConfig config, std::vector<SwitchId> members,
            std::ostream* trace = nullptr);

  const std::vector<SwitchId>& members() const noexcept { return members_; }

  /// Restricts which members send in `round`. Defaults to every member.
  void set_senders(Round round, std::vector<SwitchId> senders);

  /// Sends `messages` from `sender` to every other member. Returns the
  /// number of messages enqueued.
  std::size_t broadcast(SwitchId sender, Round round,
                        std::vector<ProtocolMessage> messages);

  /// Lets channels into `receiver` for `round` start delivering.
  void open_receiver(SwitchId receiver, Round round);

  /// Advances one event. Returns nullopt when nothing can be delivered.
  std::optional<TransportEvent> step();

  bool idle() const noexcept { return active_.empty(); }
  bool round_complete(SwitchId receiver, Round round) const;

  /// Returns a description of the first (receiver, entry, round) that was
  /// not delivered exactly once, or nullopt. Requires audit_deliveries.
  std::optional<std::string> audit_exactly_once() const;

  std::uint64_t now() const noexcept { return time_; }
  std::uint64_t enqueued() const noexcept { return enqueued_; }
  std::uint64_t delivered() const noexcept { return delivered_; }
  std::uint64_t dropped() const noexcept { return dropped_; }
  /// Message metric: deliveries, plus drops when count_drops is set.
  std::uint64_t messages() const noexcept {
    return delivered_ + (config_.count_drops ? dropped_ : 0);
  }

 private:
  struct Channel {
    std::size_t sender = 0;  // member index
    std::size_t receiver = 0;
    Round round = Round::kAggregation;
    std::shared_ptr<const std::vector<ProtocolMessage>> source;
    std::size_t next = 0;
    std::deque<std::uint32_t> retransmit;
    std::uint64_t delivered = 0;
    std::vector<std::uint8_t> marks;
    bool active = false;

    std::size_t pending() const {
      return (source->size() - next) + retransmit.size();
    }
  };

  static constexpr std::size_t kRounds = 3;

  std::size_t member_index(SwitchId id) const;
  std::size_t slot(Round round, std::size_t sender, std::size_t receiver) const {
    return (static_cast<std::size_t>(round) * members_.size() + sender) *
               members_.size() +
           receiver;
  }
  void activate(std::size_t channel);
  void deactivate(std::size_t channel);
  void emit(const TransportEvent& ev) const;

  NetworkConfig config_;
  std::vector<SwitchId> members_;
  std::vector<std::int32_t> member_of_;  // SwitchId -> member index or -1
  std::array<std::vector<std::uint8_t>, kRounds> is_sender_;
  std::array<std::vector<std::uint8_t>, kRounds> opened_;
  std::vector<std::int32_t> channel_at_;  // slot -> channel index or -1
  std::vector<Channel> channels_;
  std::vector<std::uint32_t> active_;
  std::vector<std::int32_t> active_pos_;
  std::size_t cursor_ = 0;
  std::mt19937_64 rng_;
  std::bernoulli_distribution drop_;
  std::ostream* trace_;
  std::uint64_t time_ = 0;
  std::uint64_t enqueued_ = 0;
  std::uint64_t delivered_ = 0;
  std::uint64_t dropped_ = 0;
};

struct CycleStats {
  std::uint64_t messages = 0;
  std::uint64_t delivered = 0;
  std::uint64_t dropped = 0;
  std::uint64_t enqueued = 0;
  std::uint64_t end_time = 0;
  /// Per member, the event time at which each round completed.
  std::vector<std::uint64_t> aggregation_done_at;
  std::vector<std::uint64_t> consolidation_done_at;
  /// Set when the audit was enabled and found a violation.
  std::optional<std::string> delivery_violation;
};

/// Runs one full NODE cycle (aggregation then consolidation) among
/// `group`. Each switch moves to the next round as soon as its own
/// transport view says the current one is complete. When `locals` is given,
/// switch i snapshots locals[i] instead of its L-TopK.
CycleStats run_node_cycle(std::span<Switch* const> group,
                          const NetworkConfig& net,
                          std::span<const MultiVectorTable* const> locals = {},
                          std::ostream* trace = nullptr);

/// Sends `source`'s Query table to every other member of `group`, which
/// install it as their own Query.
CycleStats run_dissemination(Switch& source, std::span<Switch* const> group,
                             const NetworkConfig& net,
                             std::ostream* trace = nullptr);

}  // namespace nodetopk
