#pragma once

#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "lexloop/constraints.hpp"

namespace lexloop::detail {

/// Known attribute values along a path; nullopt where the attribute is free.
using Context = std::vector<std::optional<std::size_t>>;
/// (preferred, dispreferred) value pair.
using OrderEdge = std::pair<std::size_t, std::size_t>;

/// A cycle in the digraph over `n` vertices, or nullopt when acyclic.
std::optional<std::vector<std::size_t>> find_cycle(std::size_t n, std::span<const OrderEdge> edges);

class ConstraintIndex {
 public:
  ConstraintIndex(std::span<const FeedbackConstraint> constraints, const Domain& domain);

  /// Attributes declared more important than `attribute`.
  const std::vector<std::size_t>& required_above(std::size_t attribute) const { return above_[attribute]; }
  bool importance_ready(std::size_t attribute, const std::vector<bool>& placed) const;

  bool mentioned(std::size_t attribute) const { return mentioned_[attribute]; }

  /// Local-order edges on `attribute` that bind alternatives in `context`.
  /// A condition on a free attribute binds, since some alternatives reaching
  /// the node satisfy it.
  std::vector<OrderEdge> applicable(std::size_t attribute, const Context& context) const;
  std::vector<OrderEdge> all_edges(std::size_t attribute) const;

  /// Searches every combination of condition values on the attributes
  /// flagged in `known` for a context whose binding edges form a cycle.
  std::optional<LocalOrderCycle> find_context_cycle(std::size_t attribute, const std::vector<bool>& known) const;

 private:
  const Domain& domain_;
  std::vector<std::vector<std::size_t>> above_;
  std::vector<std::vector<LocalOrderConstraint>> local_;
  std::vector<bool> mentioned_;
};

}  // namespace lexloop::detail
