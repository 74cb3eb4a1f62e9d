#include "lexloop/synth.hpp"

#include <algorithm>
#include <numeric>

#include "lexloop/error.hpp"
#include "random.hpp"

namespace lexloop {

namespace {

using detail::Rng;
using detail::uniform_below;

ValueOrder random_order(Rng& rng, std::size_t n) {
  ValueOrder order(n);
  std::iota(order.begin(), order.end(), 0);
  detail::shuffle(order, rng);
  return order;
}

TreeNode random_node(const Domain& domain, Rng& rng, std::vector<bool>& used, std::size_t depth,
                     const TreeShape& shape) {
  std::vector<std::size_t> free;
  for (std::size_t a = 0; a < domain.attribute_count(); ++a)
    if (!used[a]) free.push_back(a);
  if (free.empty()) return TreeNode::leaf();
  if (depth > 0 && shape.leaf_probability > 0 && detail::uniform_unit(rng) < shape.leaf_probability)
    return TreeNode::leaf();
  TreeNode node;
  node.attribute = free[uniform_below(rng, free.size())];
  node.order = random_order(rng, domain.value_count(node.attribute));
  used[node.attribute] = true;
  for (std::size_t k = 0; k < node.order.size(); ++k) node.children.push_back(random_node(domain, rng, used, depth + 1, shape));
  used[node.attribute] = false;
  return node;
}

}  // namespace

Domain random_domain(std::uint64_t seed, std::size_t max_attributes, std::size_t max_values) {
  if (max_attributes == 0 || max_values < 2) fail(ErrorCode::validation, "random domain needs attributes with two values");
  Rng rng(seed);
  const auto p = 1 + uniform_below(rng, max_attributes);
  std::vector<AttributeSpec> specs;
  for (std::size_t a = 0; a < p; ++a) {
    AttributeSpec spec{"A" + std::to_string(a), {}};
    const auto n = 2 + uniform_below(rng, max_values - 1);
    for (std::size_t v = 0; v < n; ++v) spec.values.push_back("a" + std::to_string(a) + "_" + std::to_string(v));
    specs.push_back(std::move(spec));
  }
  return Domain(std::move(specs));
}

LPTree random_tree(const Domain& domain, TreeKind kind, std::uint64_t seed, const TreeShape& shape) {
  Rng rng(seed);
  const auto p = domain.attribute_count();
  if (kind == TreeKind::CICP) {
    std::vector<bool> used(p, false);
    return LPTree::cicp(random_node(domain, rng, used, 0, shape));
  }

  const auto sequence = random_order(rng, p);
  if (kind == TreeKind::UIUP) {
    std::vector<LocalOrder> levels;
    for (auto a : sequence) levels.push_back({a, random_order(rng, domain.value_count(a))});
    return LPTree::uiup(std::move(levels));
  }

  std::vector<CPTable> levels;
  for (std::size_t d = 0; d < p; ++d) {
    const auto a = sequence[d];
    CPTable table{a, {}, random_order(rng, domain.value_count(a))};
    std::vector<std::size_t> ancestors(sequence.begin(), sequence.begin() + static_cast<std::ptrdiff_t>(d));
    detail::shuffle(ancestors, rng);
    const auto parent_count = uniform_below(rng, std::min(shape.max_parents, ancestors.size()) + 1);
    std::vector<std::size_t> parents(ancestors.begin(), ancestors.begin() + static_cast<std::ptrdiff_t>(parent_count));
    std::sort(parents.begin(), parents.end());
    if (!parents.empty()) {
      std::vector<std::size_t> key(parents.size(), 0);
      bool more = true;
      while (more) {
        CPRow row;
        for (std::size_t i = 0; i < parents.size(); ++i) row.condition.emplace_back(parents[i], key[i]);
        row.order = random_order(rng, domain.value_count(a));
        table.rows.push_back(std::move(row));
        more = false;
        for (std::size_t i = parents.size(); i-- > 0;) {
          if (++key[i] < domain.value_count(parents[i])) {
            more = true;
            break;
          }
          key[i] = 0;
        }
      }
    }
    levels.push_back(std::move(table));
  }
  return LPTree::uicp(std::move(levels));
}

std::vector<ComparisonExample> sample_examples(const Model& hidden, const Domain& domain, std::size_t count,
                                               double noise, std::uint64_t seed) {
  if (!(noise >= 0.0 && noise <= 1.0)) fail(ErrorCode::validation, "noise must lie in [0, 1]");
  require_valid(hidden, domain);
  Rng rng(seed);
  auto draw = [&] {
    Alternative alt;
    for (std::size_t a = 0; a < domain.attribute_count(); ++a) alt.values.push_back(uniform_below(rng, domain.value_count(a)));
    return alt;
  };
  std::vector<ComparisonExample> examples;
  std::size_t misses = 0;
  while (examples.size() < count) {
    auto first = draw();
    auto second = draw();
    const auto outcome = compare_model(hidden, first, second);
    if (outcome == ComparisonOutcome::equivalent) {
      if (++misses > 1000 * (count + 1)) fail(ErrorCode::validation, "hidden model orders almost no pairs");
      continue;
    }
    if (outcome == ComparisonOutcome::second_preferred) std::swap(first, second);
    if (noise > 0 && detail::uniform_unit(rng) < noise) std::swap(first, second);
    examples.push_back({std::move(first), std::move(second), ExampleSource::file_import});
  }
  return examples;
}

std::vector<ComparisonExample> complete_examples(const Model& hidden, const Domain& domain, std::uint64_t limit) {
  require_valid(hidden, domain);
  const auto all = enumerate_alternatives(domain, limit);
  std::vector<ComparisonExample> examples;
  for (std::size_t i = 0; i < all.size(); ++i) {
    for (std::size_t j = i + 1; j < all.size(); ++j) {
      switch (compare_model(hidden, all[i], all[j])) {
        case ComparisonOutcome::first_preferred: examples.push_back({all[i], all[j], ExampleSource::file_import}); break;
        case ComparisonOutcome::second_preferred: examples.push_back({all[j], all[i], ExampleSource::file_import}); break;
        case ComparisonOutcome::equivalent: break;
      }
    }
  }
  return examples;
}

}  // namespace lexloop
