#pragma once

// Shared fixtures for the unit and acceptance suites.

#include <algorithm>
#include <cstdint>
#include <map>
#include <random>
#include <set>
#include <vector>

#include "nodetopk/flowtable.hpp"
#include "nodetopk/protocol.hpp"

namespace nodetopk::testing {

/// Flow IDs for the two-switch walkthrough on a single-vector table: f2/f4
/// share a slot, f3/f5 share another, f1 has a slot of its own.
struct WalkthroughIds {
  FlowId f1, f2, f3, f4, f5;
};

inline WalkthroughIds walkthrough_ids(const TableConfig& c) {
  auto slot = [&](FlowId id) { return hash_index(c, 0, id); };
  WalkthroughIds ids{};
  ids.f1 = 1;
  FlowId next = 2;
  auto find = [&](auto pred) {
    while (!pred(next)) ++next;
    return next++;
  };
  ids.f2 = find([&](FlowId x) { return slot(x) != slot(ids.f1); });
  ids.f4 = find([&](FlowId x) { return slot(x) == slot(ids.f2); });
  ids.f3 = find([&](FlowId x) {
    return slot(x) != slot(ids.f1) && slot(x) != slot(ids.f2);
  });
  ids.f5 = find([&](FlowId x) { return slot(x) == slot(ids.f3); });
  return ids;
}

/// Fills every slot of a table with distinct IDs drawn upward from
/// `first_id`: vector 0 first, then vector 1, and so on. Counts are drawn
/// from `counts`.
template <typename CountFn>
MultiVectorTable full_table(const TableConfig& c, FlowId first_id,
                            CountFn&& counts) {
  MultiVectorTable t(c, FieldOrder::kIdFirst);
  std::set<FlowId> used;
  for (std::size_t v = 0; v < c.d; ++v) {
    std::size_t filled = 0;
    for (FlowId id = first_id; filled < c.s; ++id) {
      if (used.contains(id)) continue;
      // An ID may sit in vector v only if every earlier probe is taken.
      const std::size_t j = hash_index(c, v, id);
      if (!t.at(v, j).empty()) continue;
      t.at(v, j) = {id, counts(id)};
      used.insert(id);
      ++filled;
    }
  }
  return t;
}

/// A full table whose vector-v entries all outrank vector-(v+1) entries, so
/// a consolidation over copies of it (with any per-switch counts) stays
/// full. `salt` varies the counts inside each level.
inline MultiVectorTable full_layered_table(const TableConfig& c,
                                           std::uint64_t salt) {
  auto t = full_table(c, 1, [](FlowId) { return Count{1}; });
  const Count level = 1'000'000;
  for (std::size_t v = 0; v < c.d; ++v) {
    for (std::size_t j = 0; j < c.s; ++j) {
      FlowEntry& e = t.at(v, j);
      e.count = (c.d - v) * level + (e.id * 7 + salt * 13) % 1000;
    }
  }
  return t;
}

/// Places the given (distinct-ID) entries into a table at the first free
/// probed slot, dropping any that find no room. Mirrors how a local table
/// can end up holding entries in any vector.
inline MultiVectorTable scatter(const TableConfig& c,
                                const std::vector<FlowEntry>& entries) {
  MultiVectorTable t(c, FieldOrder::kIdFirst);
  for (const FlowEntry& e : entries) {
    for (std::size_t v = 0; v < c.d; ++v) {
      auto& slot = t.at(v, hash_index(c, v, e.id));
      if (slot.empty()) {
        slot = e;
        break;
      }
    }
  }
  return t;
}

/// Independent model of the consolidated table: vector 0 keeps, per slot,
/// the (count, id)-largest distinct pair hashing there; every other pair
/// moves on and vector 1 repeats the rule over what is left.
inline MultiVectorTable levelwise_max(const TableConfig& c,
                                      const std::vector<FlowEntry>& inputs) {
  std::set<std::pair<FlowId, Count>> distinct;
  for (const auto& e : inputs) distinct.emplace(e.id, e.count);
  std::vector<FlowEntry> remaining;
  for (const auto& [id, count] : distinct) remaining.push_back({id, count});

  MultiVectorTable t(c, FieldOrder::kCountFirst);
  for (std::size_t v = 0; v < c.d; ++v) {
    std::map<std::size_t, FlowEntry> best;
    for (const auto& e : remaining) {
      auto& b = best[hash_index(c, v, e.id)];
      if (ranks_above(e, b)) b = e;
    }
    std::vector<FlowEntry> next;
    for (const auto& e : remaining) {
      if (!(best[hash_index(c, v, e.id)] == e)) next.push_back(e);
    }
    for (const auto& [j, e] : best) t.at(v, j) = e;
    remaining = std::move(next);
  }
  return t;
}

/// A group of switches with independent random local tables built by
/// feeding each one a Zipf-ish stream over a shared flow universe.
inline std::vector<Switch> random_network(std::size_t n, const TableConfig& c,
                                          std::size_t packets_per_switch,
                                          std::uint32_t flows,
                                          std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<Switch> out;
  for (std::size_t i = 0; i < n; ++i) {
    out.emplace_back(static_cast<SwitchId>(i), c, rng());
  }
  // Skewed flow choice: squaring a uniform biases toward small IDs.
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (auto& sw : out) {
    for (std::size_t p = 0; p < packets_per_switch; ++p) {
      const double x = u(rng);
      sw.ingest(1 + static_cast<FlowId>(x * x * (flows - 1)));
    }
  }
  return out;
}

inline std::vector<Switch*> pointers(std::vector<Switch>& sws) {
  std::vector<Switch*> p;
  for (auto& s : sws) p.push_back(&s);
  return p;
}

inline std::vector<const Switch*> const_pointers(const std::vector<Switch>& sws) {
  std::vector<const Switch*> p;
  for (const auto& s : sws) p.push_back(&s);
  return p;
}

}  // namespace nodetopk::testing
