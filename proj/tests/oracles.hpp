#pragma once

// Reference computations written directly from the definitions, sharing no
// code with the library beyond trace/compare on the tree under test.

#include <algorithm>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "lexloop/domain.hpp"
#include "lexloop/lp_tree.hpp"

namespace oracles {

using namespace lexloop;

inline std::vector<Alternative> all_alternatives(const Domain& domain) {
  std::vector<Alternative> out{Alternative{}};
  for (std::size_t a = 0; a < domain.attribute_count(); ++a) {
    std::vector<Alternative> next;
    for (const auto& partial : out)
      for (std::size_t v = 0; v < domain.value_count(a); ++v) {
        auto extended = partial;
        extended.values.push_back(v);
        next.push_back(extended);
      }
    out = std::move(next);
  }
  return out;
}

inline std::string key_of(const Domain& domain, const Alternative& alt) {
  std::string key;
  for (std::size_t a = 0; a < domain.attribute_count(); ++a) {
    if (a) key += '|';
    key += domain.attribute(a).values[alt[a]];
  }
  return key;
}

/// Leaf by leaf class sizes obtained by tracing every alternative.
inline std::vector<std::uint64_t> class_sizes(const LPTree& tree, const Domain& domain) {
  std::map<std::uint64_t, std::uint64_t> counts;
  for (const auto& alt : all_alternatives(domain)) ++counts[trace(tree, alt)];
  std::vector<std::uint64_t> sizes;
  for (const auto& [leaf, count] : counts) sizes.push_back(count);
  return sizes;
}

/// True when `x` comes before `y` in the tree's preorder totalized by key.
inline bool before(const LPTree& tree, const Domain& domain, const Alternative& x, const Alternative& y) {
  switch (compare(tree, x, y)) {
    case ComparisonOutcome::first_preferred: return true;
    case ComparisonOutcome::second_preferred: return false;
    case ComparisonOutcome::equivalent: return key_of(domain, x) < key_of(domain, y);
  }
  return false;
}

/// Pairs ordered oppositely, counted pair by pair.
inline std::uint64_t tau(const LPTree& t1, const LPTree& t2, const Domain& domain) {
  const auto all = all_alternatives(domain);
  std::uint64_t count = 0;
  for (std::size_t i = 0; i < all.size(); ++i)
    for (std::size_t j = i + 1; j < all.size(); ++j)
      if (before(t1, domain, all[i], all[j]) != before(t2, domain, all[i], all[j])) ++count;
  return count;
}

/// Every UIUP tree over all attributes of the domain.
inline std::vector<LPTree> all_full_uiup_trees(const Domain& domain) {
  std::vector<std::size_t> sequence(domain.attribute_count());
  std::iota(sequence.begin(), sequence.end(), 0);
  std::vector<LPTree> trees;
  do {
    std::vector<std::vector<ValueOrder>> choices;
    for (auto a : sequence) {
      ValueOrder o(domain.value_count(a));
      std::iota(o.begin(), o.end(), 0);
      std::vector<ValueOrder> perms;
      do perms.push_back(o);
      while (std::next_permutation(o.begin(), o.end()));
      choices.push_back(perms);
    }
    std::vector<std::size_t> pick(sequence.size(), 0);
    while (true) {
      std::vector<LocalOrder> levels;
      for (std::size_t i = 0; i < sequence.size(); ++i) levels.push_back({sequence[i], choices[i][pick[i]]});
      trees.push_back(LPTree::uiup(levels));
      std::size_t d = sequence.size();
      while (d > 0 && ++pick[d - 1] == choices[d - 1].size()) pick[--d] = 0;
      if (d == 0) break;
    }
  } while (std::next_permutation(sequence.begin(), sequence.end()));
  return trees;
}

/// Fraction of examples the model strictly agrees with.
inline double agreement(const LPTree& tree, const std::vector<ComparisonExample>& examples) {
  if (examples.empty()) return 1.0;
  std::size_t agreed = 0;
  for (const auto& e : examples)
    if (compare(tree, e.better, e.worse) == ComparisonOutcome::first_preferred) ++agreed;
  return static_cast<double>(agreed) / static_cast<double>(examples.size());
}

/// Same comparison outcome on every ordered pair.
inline bool same_preorder(const LPTree& a, const LPTree& b, const Domain& domain) {
  const auto all = all_alternatives(domain);
  for (std::size_t i = 0; i < all.size(); ++i)
    for (std::size_t j = 0; j < all.size(); ++j)
      if (compare(a, all[i], all[j]) != compare(b, all[i], all[j])) return false;
  return true;
}

}  // namespace oracles
