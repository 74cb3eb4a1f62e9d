#pragma once

#include <cstdint>
#include <vector>

#include <json.hpp>

#include "lexloop/domain.hpp"
#include "lexloop/lp_tree.hpp"

namespace lexloop {

inline constexpr std::uint64_t kTauEnumerationLimit = 4096;

/// Alternatives best first. Equivalent alternatives are ordered by canonical key.
std::vector<Alternative> total_order_of(const LPTree& tree, const Domain& domain,
                                        std::uint64_t limit = kTauEnumerationLimit);

/// Number of unordered alternative pairs the two total orders rank oppositely,
/// by comparing every pair.
std::uint64_t tau_bruteforce(const LPTree& first, const LPTree& second, const Domain& domain,
                             std::uint64_t limit = kTauEnumerationLimit);

/// Same count as tau_bruteforce. Pairs of unconditional trees (directly or
/// after collapsing) are counted without enumerating alternatives; anything
/// else needs domain.size() <= limit and throws unsupported_scale otherwise.
std::uint64_t tau(const LPTree& first, const LPTree& second, const Domain& domain,
                  std::uint64_t limit = kTauEnumerationLimit);

struct DistanceMatrix {
  std::size_t n = 0;
  std::vector<std::vector<std::uint64_t>> entries;

  std::uint64_t at(std::size_t i, std::size_t j) const { return entries[i][j]; }
  bool operator==(const DistanceMatrix&) const = default;
};

DistanceMatrix distance_matrix(const LPForest& forest, const Domain& domain,
                               std::uint64_t limit = kTauEnumerationLimit);

nlohmann::json matrix_to_json(const DistanceMatrix& matrix);

}  // namespace lexloop
