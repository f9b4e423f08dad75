#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace nodetopk {

using FlowId = std::uint32_t;
using Count = std::uint64_t;

/// Flow id 0 marks an empty slot; traces never contain it.
inline constexpr FlowId kEmptyId = 0;

/// Raised when a caller breaks an operation's precondition. These are
/// programming errors, not runtime conditions.
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

struct FlowEntry {
  FlowId id = kEmptyId;
  Count count = 0;

  bool empty() const noexcept { return id == kEmptyId; }
  friend bool operator==(const FlowEntry&, const FlowEntry&) = default;
};

/// (count, id) lexicographic order used by consolidation.
inline bool ranks_above(const FlowEntry& a, const FlowEntry& b) noexcept {
  return a.count != b.count ? a.count > b.count : a.id > b.id;
}

struct TableConfig {
  std::size_t d = 2;
  std::size_t s = 4096;
  std::vector<std::uint32_t> seeds;

  /// Builds d per-vector seeds from one master seed.
  static TableConfig make(std::size_t d, std::size_t s,
                          std::uint64_t master_seed = 0x5eed);

  /// Throws std::invalid_argument on d == 0, s not a power of two, or a
  /// seed list of the wrong length.
  void validate() const;

  friend bool operator==(const TableConfig&, const TableConfig&) = default;
};

/// Slot of `id` in vector `vector_i`. Identical across every table and
/// switch that shares `config`.
std::size_t hash_index(const TableConfig& config, std::size_t vector_i,
                       FlowId id);

/// Pipeline position of the ID and count fields within each vector.
enum class FieldOrder : std::uint8_t { kIdFirst, kCountFirst };

enum class Field : std::uint8_t { kId, kCount };
enum class AccessMode : std::uint8_t { kRead, kWrite };

struct Access {
  std::size_t vector = 0;
  Field field = Field::kId;
  AccessMode mode = AccessMode::kRead;
  /// Pass number; a new pass starts on each recirculation.
  std::size_t pass = 0;
};

/// Ordered record of field accesses made by one packet.
class AccessLog {
 public:
  void record(std::size_t vector, Field field, AccessMode mode) {
    accesses_.push_back({vector, field, mode, pass_});
  }
  void recirculate() { ++pass_; }

  std::size_t passes() const noexcept { return pass_ + 1; }
  const std::vector<Access>& accesses() const noexcept { return accesses_; }
  void clear() {
    accesses_.clear();
    pass_ = 0;
  }

 private:
  std::vector<Access> accesses_;
  std::size_t pass_ = 0;
};

/// Returns a description of the first access that a feed-forward pipeline
/// with the given field layout could not perform, or nullopt when the log
/// is legal. Within one pass vector indices must be non-decreasing and,
/// inside one vector, the later field may not be followed by the earlier.
std::optional<std::string> check_access_order(const AccessLog& log,
                                              FieldOrder order);

class MultiVectorTable {
 public:
  MultiVectorTable() = default;
  MultiVectorTable(TableConfig config, FieldOrder order);

  const TableConfig& config() const noexcept { return config_; }
  FieldOrder field_order() const noexcept { return order_; }
  std::size_t vectors() const noexcept { return config_.d; }
  std::size_t slots() const noexcept { return config_.s; }

  const FlowEntry& at(std::size_t vector, std::size_t index) const {
    return cells_[offset(vector, index)];
  }
  FlowEntry& at(std::size_t vector, std::size_t index) {
    return cells_[offset(vector, index)];
  }

  std::size_t slot_of(std::size_t vector, FlowId id) const {
    return hash_index(config_, vector, id);
  }

  /// Finds `id` by probing its slot in each vector.
  std::optional<FlowEntry> lookup(FlowId id) const;

  void reset();
  std::size_t occupied() const noexcept;

  /// Same entries placed identically, viewed under another field order.
  MultiVectorTable relabeled(FieldOrder order) const;

  friend bool operator==(const MultiVectorTable& a,
                         const MultiVectorTable& b) {
    return a.config_ == b.config_ && a.cells_ == b.cells_;
  }

 private:
  std::size_t offset(std::size_t vector, std::size_t index) const {
    return vector * config_.s + index;
  }

  TableConfig config_;
  FieldOrder order_ = FieldOrder::kIdFirst;
  std::vector<FlowEntry> cells_;
};

/// Copies a table at one instant. The copy shares no storage with `src`.
inline MultiVectorTable snapshot_copy(const MultiVectorTable& src) {
  return src;
}

/// Non-empty entries, vector-major then by index.
std::vector<FlowEntry> table_entries(const MultiVectorTable& t);

/// Bytes for d*s cells with the given field widths.
constexpr std::size_t memory_bytes(std::size_t d, std::size_t s,
                                   std::size_t id_bytes,
                                   std::size_t count_bytes) {
  return d * s * (id_bytes + count_bytes);
}
inline std::size_t memory_bytes(const TableConfig& config, std::size_t id_bytes,
                                std::size_t count_bytes) {
  return memory_bytes(config.d, config.s, id_bytes, count_bytes);
}

/// Full-scan check that every entry sits at its own hash slot. Returns the
/// first misplaced (vector, index) on failure.
std::optional<std::pair<std::size_t, std::size_t>> find_misplaced(
    const MultiVectorTable& t);

/// Field accessor that routes every read and write of a table through an
/// optional AccessLog, so a packet's access sequence can be audited.
class PipelineAccess {
 public:
  PipelineAccess(MultiVectorTable& table, AccessLog* log)
      : table_(table), log_(log) {}

  FlowId read_id(std::size_t v, std::size_t j) {
    note(v, Field::kId, AccessMode::kRead);
    return table_.at(v, j).id;
  }
  Count read_count(std::size_t v, std::size_t j) {
    note(v, Field::kCount, AccessMode::kRead);
    return table_.at(v, j).count;
  }
  void write_id(std::size_t v, std::size_t j, FlowId id) {
    note(v, Field::kId, AccessMode::kWrite);
    table_.at(v, j).id = id;
  }
  void write_count(std::size_t v, std::size_t j, Count c) {
    note(v, Field::kCount, AccessMode::kWrite);
    table_.at(v, j).count = c;
  }

  const MultiVectorTable& table() const noexcept { return table_; }

 private:
  void note(std::size_t v, Field f, AccessMode m) {
    if (log_ != nullptr) log_->record(v, f, m);
  }

  MultiVectorTable& table_;
  AccessLog* log_;
};

}  // namespace nodetopk
