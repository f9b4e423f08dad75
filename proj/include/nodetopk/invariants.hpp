#pragma once

#include <optional>
#include <span>
#include <stdexcept>
#include <string>

#include "nodetopk/flowtable.hpp"
#include "nodetopk/protocol.hpp"

namespace nodetopk {

/// Each check returns a human-readable description of the first violation
/// found, or nullopt when the property holds.
using Violation = std::optional<std::string>;

/// Thrown by runners that verify invariants as they go.
class InvariantViolation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Every non-empty entry sits at its own hash slot and empty slots carry
/// count 0.
Violation check_placement(const MultiVectorTable& t, const char* name);

/// No flow ID occupies two slots.
Violation check_unique_ids(const MultiVectorTable& t, const char* name);

/// Sum shares Snapshot's IDs, and after aggregation every Sum counter equals
/// the group-wide total of that ID's Snapshot counters.
Violation check_sum_agreement(std::span<const Switch* const> group);

/// Every G-TopK entry in vector i ranks strictly below, in (count, id)
/// order, the entry at its own slot of each earlier vector. Implies that no
/// (id, count) pair appears twice.
Violation check_vector_ordering(const MultiVectorTable& g_topk);

/// No (id, count) pair appears twice.
Violation check_no_duplicate_pairs(const MultiVectorTable& t);

/// G-TopK and Query match entry for entry across the group, and each
/// switch's Query equals its G-TopK.
Violation check_identical_tables(std::span<const Switch* const> group);

/// All of the above for a group that just finished a NODE cycle.
Violation check_cycle(std::span<const Switch* const> group);

/// Text dump of a table for diagnostics.
std::string dump_table(const MultiVectorTable& t);

}  // namespace nodetopk
