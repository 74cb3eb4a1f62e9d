#pragma once

#include <cstdint>
#include <vector>

#include "lexloop/domain.hpp"
#include "lexloop/lp_tree.hpp"

namespace lexloop {

/// Between 1 and `max_attributes` attributes named A0, A1, ..., each with
/// 2..`max_values` values named a0_0, a0_1, ...
Domain random_domain(std::uint64_t seed, std::size_t max_attributes, std::size_t max_values);

struct TreeShape {
  /// Probability that a general tree stops early at a non-root node.
  double leaf_probability = 0.0;
  /// Upper bound on parents per conditional level.
  std::size_t max_parents = 2;
};

/// Random tree over every attribute: a uniform attribute permutation with
/// uniform local orders. Conditional levels draw a parent set among their
/// ancestors with one row per parent instantiation; general trees pick an
/// unused attribute independently at every node.
LPTree random_tree(const Domain& domain, TreeKind kind, std::uint64_t seed, const TreeShape& shape = {});

/// `count` random pairs the hidden model strictly orders, oriented by it and
/// then flipped with probability `noise`.
std::vector<ComparisonExample> sample_examples(const Model& hidden, const Domain& domain, std::size_t count,
                                               double noise, std::uint64_t seed);

/// Every strictly ordered pair of the hidden model, in enumeration order.
std::vector<ComparisonExample> complete_examples(const Model& hidden, const Domain& domain,
                                                 std::uint64_t limit = 4096);

}  // namespace lexloop
