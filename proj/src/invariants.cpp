#include "nodetopk/invariants.hpp"

#include <map>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>
#include <utility>

namespace nodetopk {

namespace {

std::string where(const char* table, std::size_t v, std::size_t j) {
  std::ostringstream os;
  os << table << "[" << v << "][" << j << "]";
  return os.str();
}

std::string show(const FlowEntry& e) {
  std::ostringstream os;
  os << "(" << e.id << ", " << e.count << ")";
  return os.str();
}

}  // namespace

Violation check_placement(const MultiVectorTable& t, const char* name) {
  if (auto bad = find_misplaced(t)) {
    return where(name, bad->first, bad->second) + " holds " +
           show(t.at(bad->first, bad->second)) + " outside its hash slot";
  }
  return std::nullopt;
}

Violation check_unique_ids(const MultiVectorTable& t, const char* name) {
  std::unordered_set<FlowId> seen;
  for (std::size_t v = 0; v < t.vectors(); ++v) {
    for (std::size_t j = 0; j < t.slots(); ++j) {
      const FlowEntry& e = t.at(v, j);
      if (!e.empty() && !seen.insert(e.id).second) {
        return std::string(name) + " holds flow " + std::to_string(e.id) +
               " twice (again at " + where(name, v, j) + ")";
      }
    }
  }
  return std::nullopt;
}

Violation check_sum_agreement(std::span<const Switch* const> group) {
  std::unordered_map<FlowId, Count> totals;
  for (const Switch* sw : group) {
    for (const FlowEntry& e : table_entries(sw->snapshot())) {
      totals[e.id] += e.count;
    }
  }
  std::unordered_map<FlowId, std::pair<Count, SwitchId>> agreed;
  for (const Switch* sw : group) {
    const auto& snap = sw->snapshot();
    const auto& sum = sw->sum();
    for (std::size_t v = 0; v < snap.vectors(); ++v) {
      for (std::size_t j = 0; j < snap.slots(); ++j) {
        const FlowEntry& s = snap.at(v, j);
        const FlowEntry& g = sum.at(v, j);
        if (s.id != g.id) {
          return "switch " + std::to_string(sw->id()) + ": " +
                 where("Sum", v, j) + " id " + std::to_string(g.id) +
                 " differs from Snapshot id " + std::to_string(s.id);
        }
        if (s.empty()) continue;
        if (g.count != totals[s.id]) {
          return "switch " + std::to_string(sw->id()) + ": Sum count " +
                 std::to_string(g.count) + " for flow " +
                 std::to_string(s.id) + " but group-wide snapshot total is " +
                 std::to_string(totals[s.id]);
        }
        auto [it, fresh] = agreed.try_emplace(s.id, g.count, sw->id());
        if (!fresh && it->second.first != g.count) {
          return "flow " + std::to_string(s.id) + " has Sum count " +
                 std::to_string(g.count) + " on switch " +
                 std::to_string(sw->id()) + " but " +
                 std::to_string(it->second.first) + " on switch " +
                 std::to_string(it->second.second);
        }
      }
    }
  }
  return std::nullopt;
}

Violation check_vector_ordering(const MultiVectorTable& g) {
  for (std::size_t v = 1; v < g.vectors(); ++v) {
    for (std::size_t j = 0; j < g.slots(); ++j) {
      const FlowEntry& e = g.at(v, j);
      if (e.empty()) continue;
      for (std::size_t earlier = 0; earlier < v; ++earlier) {
        const std::size_t jj = g.slot_of(earlier, e.id);
        const FlowEntry& above = g.at(earlier, jj);
        if (!ranks_above(above, e)) {
          return where("G-TopK", v, j) + " " + show(e) +
                 " does not rank below " + where("G-TopK", earlier, jj) +
                 " " + show(above);
        }
      }
    }
  }
  return std::nullopt;
}

Violation check_no_duplicate_pairs(const MultiVectorTable& t) {
  std::set<std::pair<FlowId, Count>> seen;
  for (const FlowEntry& e : table_entries(t)) {
    if (!seen.emplace(e.id, e.count).second) {
      return "pair " + show(e) + " appears twice";
    }
  }
  return std::nullopt;
}

Violation check_identical_tables(std::span<const Switch* const> group) {
  if (group.empty()) return std::nullopt;
  const Switch& ref = *group.front();
  for (const Switch* sw : group) {
    if (!(sw->query() == sw->g_topk())) {
      return "switch " + std::to_string(sw->id()) +
             ": Query differs from its own G-TopK";
    }
    if (!(sw->g_topk() == ref.g_topk())) {
      const auto& a = ref.g_topk();
      const auto& b = sw->g_topk();
      for (std::size_t v = 0; v < a.vectors(); ++v) {
        for (std::size_t j = 0; j < a.slots(); ++j) {
          if (!(a.at(v, j) == b.at(v, j))) {
            return "G-TopK differs between switches " +
                   std::to_string(ref.id()) + " and " +
                   std::to_string(sw->id()) + " at " + where("G-TopK", v, j) +
                   ": " + show(a.at(v, j)) + " vs " + show(b.at(v, j));
          }
        }
      }
      return "G-TopK shapes differ between switches";
    }
  }
  return std::nullopt;
}

Violation check_cycle(std::span<const Switch* const> group) {
  for (const Switch* sw : group) {
    const std::string tag = "switch " + std::to_string(sw->id()) + ": ";
    for (auto [t, name] :
         {std::pair{&sw->snapshot(), "Snapshot"}, std::pair{&sw->sum(), "Sum"},
          std::pair{&sw->g_topk(), "G-TopK"}, std::pair{&sw->query(), "Query"}}) {
      if (auto v = check_placement(*t, name)) return tag + *v;
    }
    if (auto v = check_unique_ids(sw->snapshot(), "Snapshot")) return tag + *v;
    if (auto v = check_vector_ordering(sw->g_topk())) return tag + *v;
    if (auto v = check_no_duplicate_pairs(sw->g_topk())) return tag + *v;
  }
  if (auto v = check_sum_agreement(group)) return v;
  return check_identical_tables(group);
}

std::string dump_table(const MultiVectorTable& t) {
  std::ostringstream os;
  for (std::size_t v = 0; v < t.vectors(); ++v) {
    os << "vector " << v << ":";
    for (std::size_t j = 0; j < t.slots(); ++j) {
      const FlowEntry& e = t.at(v, j);
      if (!e.empty()) os << " [" << j << "]" << show(e);
    }
    os << '\n';
  }
  return os.str();
}

}  // namespace nodetopk
