#include "nodetopk/precision.hpp"

#include <limits>

namespace nodetopk {

LocalTopK::LocalTopK(TableConfig config, std::uint64_t rng_seed)
    : table_(std::move(config), FieldOrder::kIdFirst), rng_(rng_seed) {}

void LocalTopK::load(const MultiVectorTable& t) {
  if (t.config() != table_.config()) {
    throw ContractViolation("LocalTopK::load: table shape mismatch");
  }
  table_ = t.relabeled(FieldOrder::kIdFirst);
}

void LocalTopK::process_packet(FlowId id, AccessLog* log) {
  if (id == kEmptyId) {
    throw ContractViolation("process_packet: flow id 0 is reserved");
  }
  ++packets_;
  PipelineAccess pipe(table_, log);

  Count min_count = std::numeric_limits<Count>::max();
  std::size_t min_vector = 0;
  std::size_t min_slot = 0;
  for (std::size_t v = 0; v < table_.vectors(); ++v) {
    const std::size_t j = table_.slot_of(v, id);
    const FlowId stored = pipe.read_id(v, j);
    const Count c = pipe.read_count(v, j);
    if (stored == id) {
      pipe.write_count(v, j, c + 1);
      return;
    }
    // Strict < keeps the earliest vector on ties.
    if (c < min_count) {
      min_count = c;
      min_vector = v;
      min_slot = j;
    }
  }

  // Admit with probability 1/(min_count + 1).
  if (min_count > 0) {
    std::uniform_int_distribution<Count> draw(0, min_count);
    if (draw(rng_) != 0) return;
  }
  ++recirculations_;
  if (log != nullptr) log->recirculate();
  pipe.write_id(min_vector, min_slot, id);
  pipe.write_count(min_vector, min_slot, min_count + 1);
}

}  // namespace nodetopk
