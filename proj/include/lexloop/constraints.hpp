#pragma once

#include <span>
#include <vector>

#include <json.hpp>

#include "lexloop/domain.hpp"
#include "lexloop/lp_tree.hpp"

namespace lexloop {

/// A cycle among the local-order constraints on one attribute, in the
/// context (condition values) where all of them apply together.
struct LocalOrderCycle {
  std::size_t attribute;
  PartialAssignment context;
  std::vector<std::size_t> values;
};

struct FeasibilityReport {
  bool feasible = true;
  /// Attributes on an importance cycle, empty when acyclic.
  std::vector<std::size_t> importance_cycle;
  std::vector<LocalOrderCycle> local_cycles;
};

nlohmann::json feasibility_to_json(const Domain& domain, const FeasibilityReport& report);

/// Feasible iff importance is acyclic and, for every attribute, the
/// local-order constraints that can apply to one pair of alternatives at the
/// same time are acyclic. Conditions on different attributes can hold
/// together, so they are checked jointly.
FeasibilityReport check_constraints(std::span<const FeedbackConstraint> constraints, const Domain& domain);

/// One flag per constraint. Checks are structural:
///   importance: wherever the less important attribute is used, the more
///     important one is used above it on the same path;
///   local-order: every node or table row that can order the attribute for
///     alternatives satisfying the condition ranks preferred above dispreferred.
std::vector<bool> verify_constraints(const LPTree& tree, std::span<const FeedbackConstraint> constraints,
                                     const Domain& domain);
std::vector<bool> verify_constraints(const Model& model, std::span<const FeedbackConstraint> constraints,
                                     const Domain& domain);
bool satisfies_all(const Model& model, std::span<const FeedbackConstraint> constraints, const Domain& domain);

}  // namespace lexloop
