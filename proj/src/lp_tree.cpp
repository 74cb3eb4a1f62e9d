#include "lexloop/lp_tree.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "lexloop/error.hpp"

namespace lexloop {

namespace {

bool is_permutation_of(const ValueOrder& order, std::size_t n) {
  if (order.size() != n) return false;
  std::vector<bool> seen(n, false);
  for (auto v : order) {
    if (v >= n || seen[v]) return false;
    seen[v] = true;
  }
  return true;
}

std::uint64_t node_leaves(const TreeNode& node) {
  if (node.is_leaf()) return 1;
  std::uint64_t total = 0;
  for (const auto& child : node.children) total += node_leaves(child);
  return total;
}

void validate_node(const TreeNode& node, const Domain& domain, std::vector<bool>& on_path, const std::string& where,
                   std::vector<std::string>& report) {
  if (node.is_leaf()) {
    if (!node.children.empty() || !node.order.empty()) report.push_back(where + ": leaf carries children or an order");
    return;
  }
  if (node.attribute >= domain.attribute_count()) {
    report.push_back(where + ": unknown attribute index " + std::to_string(node.attribute));
    return;
  }
  const auto& spec = domain.attribute(node.attribute);
  if (on_path[node.attribute]) report.push_back(where + ": attribute '" + spec.name + "' repeats on its path");
  if (!is_permutation_of(node.order, spec.values.size()))
    report.push_back(where + ": order on '" + spec.name + "' is not a permutation of its values");
  if (node.children.size() != spec.values.size()) {
    report.push_back(where + ": node '" + spec.name + "' has " + std::to_string(node.children.size()) +
                     " children, needs " + std::to_string(spec.values.size()));
    return;
  }
  const bool was = on_path[node.attribute];
  on_path[node.attribute] = true;
  for (std::size_t k = 0; k < node.children.size(); ++k) {
    const auto label = k < node.order.size() && node.order[k] < spec.values.size() ? spec.values[node.order[k]]
                                                                                    : std::to_string(k);
    validate_node(node.children[k], domain, on_path, where + "/" + spec.name + "=" + label, report);
  }
  on_path[node.attribute] = was;
}

bool conditions_overlap(const PartialAssignment& a, const PartialAssignment& b) {
  for (const auto& [attr, value] : a)
    for (const auto& [other_attr, other_value] : b)
      if (attr == other_attr && value != other_value) return false;
  return true;
}

std::size_t attribute_span(const LPTree& tree) {
  std::size_t span = 0;
  auto see = [&](std::size_t attr) { span = std::max(span, attr + 1); };
  std::visit(
      [&](const auto& body) {
        using Body = std::decay_t<decltype(body)>;
        if constexpr (std::is_same_v<Body, UiupBody>) {
          for (const auto& level : body.levels) see(level.attribute);
        } else if constexpr (std::is_same_v<Body, UicpBody>) {
          for (const auto& table : body.levels) {
            see(table.attribute);
            for (const auto& row : table.rows)
              for (const auto& entry : row.condition) see(entry.first);
          }
        } else {
          auto walk = [&](auto&& self, const TreeNode& node) -> void {
            if (node.is_leaf()) return;
            see(node.attribute);
            for (const auto& child : node.children) self(self, child);
          };
          walk(walk, body.root);
        }
      },
      tree.body);
  return span;
}

class Expander {
 public:
  Expander(std::size_t budget, std::size_t span) : budget_(budget), partial_{std::vector<std::size_t>(span, 0)} {}

  template <typename OrderAt>
  TreeNode build(std::size_t level, std::size_t depth, const std::vector<std::size_t>& attributes, OrderAt order_at) {
    if (++nodes_ > budget_)
      fail(ErrorCode::unsupported_scale, "expansion exceeds the node budget of " + std::to_string(budget_));
    if (level == depth) return TreeNode::leaf();
    TreeNode node;
    node.attribute = attributes[level];
    node.order = order_at(level, partial_);
    for (auto value : node.order) {
      partial_.values[node.attribute] = value;
      node.children.push_back(build(level + 1, depth, attributes, order_at));
    }
    return node;
  }

 private:
  std::size_t budget_;
  std::size_t nodes_ = 0;
  Alternative partial_;
};

/// Per-level data of a CICP tree in which every path uses the same
/// attribute sequence; `orders[d]` maps each ancestor instantiation (values
/// in level order) to the order used at depth d.
struct LayeredTree {
  std::vector<std::size_t> attributes;
  std::vector<std::map<std::vector<std::size_t>, ValueOrder>> orders;
};

bool collect_layers(const TreeNode& node, std::size_t depth, std::vector<std::size_t>& path, LayeredTree& out,
                    std::optional<std::size_t>& leaf_depth) {
  if (node.is_leaf()) {
    if (leaf_depth && *leaf_depth != depth) return false;
    leaf_depth = depth;
    return true;
  }
  if (leaf_depth && depth >= *leaf_depth) return false;
  if (depth == out.attributes.size()) {
    out.attributes.push_back(node.attribute);
    out.orders.emplace_back();
  } else if (out.attributes[depth] != node.attribute) {
    return false;
  }
  out.orders[depth][path] = node.order;
  for (std::size_t k = 0; k < node.children.size(); ++k) {
    path.push_back(node.order[k]);
    const bool ok = collect_layers(node.children[k], depth + 1, path, out, leaf_depth);
    path.pop_back();
    if (!ok) return false;
  }
  return true;
}

/// Smallest set of ancestor levels the order at this level depends on.
std::vector<std::size_t> minimal_condition_levels(const std::map<std::vector<std::size_t>, ValueOrder>& orders,
                                                  std::size_t depth) {
  std::vector<std::size_t> all(depth);
  for (std::size_t i = 0; i < depth; ++i) all[i] = i;
  if (depth > 16) return all;

  auto determined_by = [&](const std::vector<std::size_t>& levels) {
    std::map<std::vector<std::size_t>, const ValueOrder*> seen;
    for (const auto& [instantiation, order] : orders) {
      std::vector<std::size_t> key;
      for (auto l : levels) key.push_back(instantiation[l]);
      auto [it, inserted] = seen.emplace(std::move(key), &order);
      if (!inserted && *it->second != order) return false;
    }
    return true;
  };

  for (std::size_t size = 0; size <= depth; ++size) {
    // Subsets of the given size in lexicographic order of level indices.
    std::vector<bool> pick(depth, false);
    std::fill(pick.begin(), pick.begin() + static_cast<std::ptrdiff_t>(size), true);
    do {
      std::vector<std::size_t> levels;
      for (std::size_t i = 0; i < depth; ++i)
        if (pick[i]) levels.push_back(i);
      if (determined_by(levels)) return levels;
    } while (std::prev_permutation(pick.begin(), pick.end()));
  }
  return all;
}

LPTree collapse_cicp(const LPTree& tree) {
  const auto& root = std::get<CicpBody>(tree.body).root;
  LayeredTree layers;
  std::vector<std::size_t> path;
  std::optional<std::size_t> leaf_depth;
  if (!collect_layers(root, 0, path, layers, leaf_depth)) return tree;

  std::vector<CPTable> tables;
  bool unconditional = true;
  for (std::size_t d = 0; d < layers.attributes.size(); ++d) {
    const auto& orders = layers.orders[d];
    const auto levels = minimal_condition_levels(orders, d);
    CPTable table{layers.attributes[d], {}, orders.begin()->second};
    if (!levels.empty()) {
      unconditional = false;
      std::map<PartialAssignment, ValueOrder> rows;
      for (const auto& [instantiation, order] : orders) {
        PartialAssignment condition;
        for (auto l : levels) condition.emplace_back(layers.attributes[l], instantiation[l]);
        std::sort(condition.begin(), condition.end());
        rows.emplace(std::move(condition), order);
      }
      for (auto& [condition, order] : rows) table.rows.push_back({condition, order});
      table.default_order = table.rows.front().order;
    }
    tables.push_back(std::move(table));
  }

  if (unconditional) {
    std::vector<LocalOrder> levels;
    for (auto& table : tables) levels.push_back({table.attribute, std::move(table.default_order)});
    return LPTree::uiup(std::move(levels));
  }
  return LPTree::uicp(std::move(tables));
}

}  // namespace

std::size_t rank_in(const ValueOrder& order, std::size_t value) {
  return static_cast<std::size_t>(std::find(order.begin(), order.end(), value) - order.begin());
}

bool matches(const PartialAssignment& condition, const Alternative& alternative) {
  return std::all_of(condition.begin(), condition.end(),
                     [&](const auto& entry) { return alternative[entry.first] == entry.second; });
}

const ValueOrder& CPTable::order_for(const Alternative& alternative) const {
  for (const auto& row : rows)
    if (matches(row.condition, alternative)) return row.order;
  return default_order;
}

std::string_view to_string(TreeKind kind) {
  switch (kind) {
    case TreeKind::UIUP: return "UIUP";
    case TreeKind::UICP: return "UICP";
    case TreeKind::CICP: return "CICP";
  }
  return "?";
}

TreeKind tree_kind_from_string(std::string_view text) {
  std::string upper(text);
  for (auto& c : upper) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  if (upper == "UIUP") return TreeKind::UIUP;
  if (upper == "UICP") return TreeKind::UICP;
  if (upper == "CICP") return TreeKind::CICP;
  fail(ErrorCode::validation, "unknown tree kind '" + std::string(text) + "'");
}

std::string_view to_string(ComparisonOutcome outcome) {
  switch (outcome) {
    case ComparisonOutcome::first_preferred: return "first-preferred";
    case ComparisonOutcome::second_preferred: return "second-preferred";
    case ComparisonOutcome::equivalent: return "equivalent";
  }
  return "?";
}

// Validation ------------------------------------------------------------------

std::vector<std::string> validate_tree(const LPTree& tree, const Domain& domain) {
  std::vector<std::string> report;
  const auto p = domain.attribute_count();

  auto check_level = [&](std::size_t index, std::size_t attribute, std::vector<bool>& used) -> bool {
    const auto where = "level " + std::to_string(index);
    if (attribute >= p) {
      report.push_back(where + ": unknown attribute index " + std::to_string(attribute));
      return false;
    }
    if (used[attribute]) report.push_back(where + ": attribute '" + domain.attribute(attribute).name + "' repeats");
    used[attribute] = true;
    return true;
  };
  auto check_order = [&](const std::string& where, std::size_t attribute, const ValueOrder& order) {
    if (!is_permutation_of(order, domain.value_count(attribute)))
      report.push_back(where + ": order on '" + domain.attribute(attribute).name +
                       "' is not a permutation of its values");
  };

  if (const auto* body = std::get_if<UiupBody>(&tree.body)) {
    std::vector<bool> used(p, false);
    for (std::size_t i = 0; i < body->levels.size(); ++i) {
      const auto& level = body->levels[i];
      if (check_level(i, level.attribute, used)) check_order("level " + std::to_string(i), level.attribute, level.order);
    }
  } else if (const auto* body = std::get_if<UicpBody>(&tree.body)) {
    std::vector<bool> used(p, false);
    for (std::size_t i = 0; i < body->levels.size(); ++i) {
      const auto& table = body->levels[i];
      const auto where = "level " + std::to_string(i);
      const std::vector<bool> ancestors = used;
      if (!check_level(i, table.attribute, used)) continue;
      check_order(where + " default", table.attribute, table.default_order);
      for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& row = table.rows[r];
        const auto row_where = where + " row " + std::to_string(r);
        check_order(row_where, table.attribute, row.order);
        std::set<std::size_t> seen;
        for (const auto& [attr, value] : row.condition) {
          if (attr >= p || !ancestors[attr]) {
            report.push_back(row_where + ": condition references a non-ancestor attribute");
            continue;
          }
          if (!seen.insert(attr).second) report.push_back(row_where + ": condition repeats an attribute");
          if (value >= domain.value_count(attr)) report.push_back(row_where + ": condition value out of range");
        }
        for (std::size_t s = 0; s < r; ++s)
          if (conditions_overlap(table.rows[s].condition, row.condition))
            report.push_back(row_where + ": condition overlaps row " + std::to_string(s));
      }
    }
  } else {
    const auto& root = std::get<CicpBody>(tree.body).root;
    std::vector<bool> on_path(p, false);
    validate_node(root, domain, on_path, "root", report);
  }
  return report;
}

void require_valid(const LPTree& tree, const Domain& domain) {
  const auto report = validate_tree(tree, domain);
  if (!report.empty()) fail(ErrorCode::validation, "invalid tree: " + report.front());
}

void require_valid(const LPForest& forest, const Domain& domain) {
  if (forest.trees.empty()) fail(ErrorCode::validation, "forest must contain at least one tree");
  for (const auto& tree : forest.trees) require_valid(tree, domain);
}

// Order semantics -------------------------------------------------------------

std::uint64_t leaf_count(const LPTree& tree) {
  if (const auto* body = std::get_if<UiupBody>(&tree.body)) {
    std::uint64_t n = 1;
    for (const auto& level : body->levels) n *= level.order.size();
    return n;
  }
  if (const auto* body = std::get_if<UicpBody>(&tree.body)) {
    std::uint64_t n = 1;
    for (const auto& table : body->levels) n *= table.default_order.size();
    return n;
  }
  return node_leaves(std::get<CicpBody>(tree.body).root);
}

std::uint64_t trace(const LPTree& tree, const Alternative& alternative) {
  // Mixed-radix position for the chain kinds: level ranks are the digits.
  if (const auto* body = std::get_if<UiupBody>(&tree.body)) {
    std::uint64_t index = 0;
    for (const auto& level : body->levels)
      index = index * level.order.size() + level.rank_of(alternative[level.attribute]);
    return index;
  }
  if (const auto* body = std::get_if<UicpBody>(&tree.body)) {
    std::uint64_t index = 0;
    for (const auto& table : body->levels) {
      const auto& order = table.order_for(alternative);
      index = index * order.size() + rank_in(order, alternative[table.attribute]);
    }
    return index;
  }
  const TreeNode* node = &std::get<CicpBody>(tree.body).root;
  std::uint64_t index = 0;
  while (!node->is_leaf()) {
    const auto k = rank_in(node->order, alternative[node->attribute]);
    for (std::size_t j = 0; j < k; ++j) index += node_leaves(node->children[j]);
    node = &node->children[k];
  }
  return index;
}

ComparisonOutcome compare(const LPTree& tree, const Alternative& first, const Alternative& second) {
  const auto a = trace(tree, first);
  const auto b = trace(tree, second);
  if (a == b) return ComparisonOutcome::equivalent;
  return a < b ? ComparisonOutcome::first_preferred : ComparisonOutcome::second_preferred;
}

std::vector<std::vector<Alternative>> induced_order(const LPTree& tree, const Domain& domain, std::uint64_t limit) {
  std::map<std::uint64_t, std::vector<Alternative>> by_leaf;
  for (auto& alternative : enumerate_alternatives(domain, limit)) {
    const auto leaf = trace(tree, alternative);
    by_leaf[leaf].push_back(std::move(alternative));
  }
  std::vector<std::vector<Alternative>> classes;
  classes.reserve(by_leaf.size());
  for (auto& [leaf, members] : by_leaf) classes.push_back(std::move(members));
  return classes;
}

bool same_preorder(const LPTree& a, const LPTree& b, const Domain& domain, std::uint64_t limit) {
  std::vector<std::pair<std::uint64_t, std::uint64_t>> traces;
  for (const auto& alternative : enumerate_alternatives(domain, limit))
    traces.emplace_back(trace(a, alternative), trace(b, alternative));
  std::sort(traces.begin(), traces.end());
  for (std::size_t i = 1; i < traces.size(); ++i) {
    const auto& [pa, pb] = traces[i - 1];
    const auto& [ca, cb] = traces[i];
    if (pa == ca ? pb != cb : pb >= cb) return false;
  }
  return true;
}

// Representation changes ------------------------------------------------------

LPTree expand(const LPTree& tree, std::size_t node_budget) {
  if (tree.kind() == TreeKind::CICP) return tree;
  Expander expander(node_budget, attribute_span(tree));
  if (const auto* body = std::get_if<UiupBody>(&tree.body)) {
    std::vector<std::size_t> attributes;
    for (const auto& level : body->levels) attributes.push_back(level.attribute);
    return LPTree::cicp(expander.build(0, attributes.size(), attributes,
                                       [&](std::size_t level, const Alternative&) { return body->levels[level].order; }));
  }
  const auto& body = std::get<UicpBody>(tree.body);
  std::vector<std::size_t> attributes;
  for (const auto& table : body.levels) attributes.push_back(table.attribute);
  return LPTree::cicp(expander.build(0, attributes.size(), attributes, [&](std::size_t level, const Alternative& partial) {
    return body.levels[level].order_for(partial);
  }));
}

LPTree collapse(const LPTree& tree) {
  switch (tree.kind()) {
    case TreeKind::UIUP:
      return tree;
    case TreeKind::UICP:
      try {
        return collapse_cicp(expand(tree));
      } catch (const Error&) {
        const auto& body = std::get<UicpBody>(tree.body);
        const bool uniform = std::all_of(body.levels.begin(), body.levels.end(), [](const CPTable& table) {
          return std::all_of(table.rows.begin(), table.rows.end(),
                             [&](const CPRow& row) { return row.order == table.default_order; });
        });
        if (!uniform) return tree;
        std::vector<LocalOrder> levels;
        for (const auto& table : body.levels) levels.push_back({table.attribute, table.default_order});
        return LPTree::uiup(std::move(levels));
      }
    case TreeKind::CICP:
      return collapse_cicp(tree);
  }
  return tree;
}

// Forests ---------------------------------------------------------------------

ComparisonOutcome forest_compare(const LPForest& forest, const Alternative& first, const Alternative& second,
                                 VotingRule) {
  std::size_t first_votes = 0;
  std::size_t second_votes = 0;
  for (const auto& tree : forest.trees) {
    switch (compare(tree, first, second)) {
      case ComparisonOutcome::first_preferred: ++first_votes; break;
      case ComparisonOutcome::second_preferred: ++second_votes; break;
      case ComparisonOutcome::equivalent: break;
    }
  }
  if (first_votes == second_votes) return ComparisonOutcome::equivalent;
  return first_votes > second_votes ? ComparisonOutcome::first_preferred : ComparisonOutcome::second_preferred;
}

std::vector<RankedCandidate> borda_rank(const LPForest& forest, std::span<const Alternative> candidates,
                                        const Domain& domain) {
  if (candidates.size() < 2) fail(ErrorCode::validation, "Borda ranking needs at least two candidates");
  {
    std::set<Alternative> distinct(candidates.begin(), candidates.end());
    if (distinct.size() != candidates.size()) fail(ErrorCode::validation, "Borda candidates must be distinct");
  }
  std::vector<RankedCandidate> ranked;
  for (const auto& c : candidates) ranked.push_back({c, 0.0});
  for (const auto& tree : forest.trees) {
    std::vector<std::uint64_t> leaves;
    for (const auto& c : candidates) leaves.push_back(trace(tree, c));
    for (std::size_t i = 0; i < candidates.size(); ++i)
      for (std::size_t j = 0; j < candidates.size(); ++j) {
        if (i == j) continue;
        if (leaves[i] < leaves[j]) ranked[i].score += 1.0;
        else if (leaves[i] == leaves[j]) ranked[i].score += 0.5;
      }
  }
  std::vector<std::string> keys;
  for (const auto& r : ranked) keys.push_back(canonical_key(r.alternative, domain));
  std::vector<std::size_t> order(ranked.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (ranked[a].score != ranked[b].score) return ranked[a].score > ranked[b].score;
    return keys[a] < keys[b];
  });
  std::vector<RankedCandidate> result;
  for (auto i : order) result.push_back(ranked[i]);
  return result;
}


ComparisonOutcome compare_model(const Model& model, const Alternative& first, const Alternative& second) {
  if (const auto* tree = std::get_if<LPTree>(&model)) return compare(*tree, first, second);
  return forest_compare(std::get<LPForest>(model), first, second);
}

void require_valid(const Model& model, const Domain& domain) {
  std::visit([&](const auto& m) { require_valid(m, domain); }, model);
}

}  // namespace lexloop
