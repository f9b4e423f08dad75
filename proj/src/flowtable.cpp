#include "nodetopk/flowtable.hpp"

#include <algorithm>
#include <bit>
#include <sstream>

namespace nodetopk {

namespace {

// Murmur3 finalizer: a bijective 32-bit mix with full avalanche.
constexpr std::uint32_t fmix32(std::uint32_t h) noexcept {
  h ^= h >> 16;
  h *= 0x85ebca6bU;
  h ^= h >> 13;
  h *= 0xc2b2ae35U;
  h ^= h >> 16;
  return h;
}

constexpr std::uint64_t splitmix64(std::uint64_t& state) noexcept {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

const char* field_name(Field f) { return f == Field::kId ? "ID" : "COUNT"; }

}  // namespace

TableConfig TableConfig::make(std::size_t d, std::size_t s,
                              std::uint64_t master_seed) {
  TableConfig c;
  c.d = d;
  c.s = s;
  std::uint64_t state = master_seed;
  c.seeds.reserve(d);
  for (std::size_t i = 0; i < d; ++i) {
    c.seeds.push_back(static_cast<std::uint32_t>(splitmix64(state)));
  }
  c.validate();
  return c;
}

void TableConfig::validate() const {
  if (d == 0) throw std::invalid_argument("table needs at least one vector");
  if (s == 0 || !std::has_single_bit(s)) {
    throw std::invalid_argument("vector size must be a power of two, got " +
                                std::to_string(s));
  }
  if (seeds.size() != d) {
    throw std::invalid_argument("expected " + std::to_string(d) +
                                " hash seeds, got " +
                                std::to_string(seeds.size()));
  }
}

std::size_t hash_index(const TableConfig& config, std::size_t vector_i,
                       FlowId id) {
  if (vector_i >= config.d) {
    throw ContractViolation("hash_index: vector " + std::to_string(vector_i) +
                            " out of range for d=" + std::to_string(config.d));
  }
  const std::uint32_t h = fmix32(id ^ fmix32(config.seeds[vector_i]));
  return static_cast<std::size_t>(h) & (config.s - 1);
}

std::optional<std::string> check_access_order(const AccessLog& log,
                                              FieldOrder order) {
  const Field first = order == FieldOrder::kIdFirst ? Field::kId : Field::kCount;
  const auto& acc = log.accesses();
  for (std::size_t k = 1; k < acc.size(); ++k) {
    const Access& prev = acc[k - 1];
    const Access& cur = acc[k];
    if (cur.pass != prev.pass) continue;
    std::ostringstream why;
    if (cur.vector < prev.vector) {
      why << "access #" << k << " goes back from vector " << prev.vector
          << " to vector " << cur.vector << " within one pass";
      return why.str();
    }
    if (cur.vector == prev.vector && prev.field != first && cur.field == first) {
      why << "access #" << k << " touches " << field_name(cur.field)
          << " of vector " << cur.vector << " after "
          << field_name(prev.field);
      return why.str();
    }
  }
  return std::nullopt;
}

MultiVectorTable::MultiVectorTable(TableConfig config, FieldOrder order)
    : config_(std::move(config)), order_(order) {
  config_.validate();
  cells_.assign(config_.d * config_.s, FlowEntry{});
}

std::optional<FlowEntry> MultiVectorTable::lookup(FlowId id) const {
  if (id == kEmptyId) return std::nullopt;
  for (std::size_t v = 0; v < config_.d; ++v) {
    const FlowEntry& e = at(v, slot_of(v, id));
    if (e.id == id) return e;
  }
  return std::nullopt;
}

void MultiVectorTable::reset() {
  std::fill(cells_.begin(), cells_.end(), FlowEntry{});
}

std::size_t MultiVectorTable::occupied() const noexcept {
  std::size_t n = 0;
  for (const auto& e : cells_) n += e.empty() ? 0 : 1;
  return n;
}

MultiVectorTable MultiVectorTable::relabeled(FieldOrder order) const {
  MultiVectorTable t = *this;
  t.order_ = order;
  return t;
}

std::vector<FlowEntry> table_entries(const MultiVectorTable& t) {
  std::vector<FlowEntry> out;
  for (std::size_t v = 0; v < t.vectors(); ++v) {
    for (std::size_t j = 0; j < t.slots(); ++j) {
      const FlowEntry& e = t.at(v, j);
      if (!e.empty()) out.push_back(e);
    }
  }
  return out;
}

std::optional<std::pair<std::size_t, std::size_t>> find_misplaced(
    const MultiVectorTable& t) {
  for (std::size_t v = 0; v < t.vectors(); ++v) {
    for (std::size_t j = 0; j < t.slots(); ++j) {
      const FlowEntry& e = t.at(v, j);
      if (e.empty()) {
        if (e.count != 0) return std::pair{v, j};
        continue;
      }
      if (t.slot_of(v, e.id) != j) return std::pair{v, j};
    }
  }
  return std::nullopt;
}

}  // namespace nodetopk
