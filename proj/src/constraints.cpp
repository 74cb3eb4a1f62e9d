#include <algorithm>
#include <functional>
#include <map>
#include <set>

#include "constraint_index.hpp"
#include "lexloop/error.hpp"

namespace lexloop {

namespace detail {

std::optional<std::vector<std::size_t>> find_cycle(std::size_t n, std::span<const OrderEdge> edges) {
  std::vector<std::vector<std::size_t>> out(n);
  for (const auto& [from, to] : edges) out[from].push_back(to);
  for (auto& targets : out) {
    std::sort(targets.begin(), targets.end());
    targets.erase(std::unique(targets.begin(), targets.end()), targets.end());
  }

  enum class Mark { fresh, open, done };
  std::vector<Mark> mark(n, Mark::fresh);
  std::vector<std::size_t> stack;
  std::optional<std::vector<std::size_t>> cycle;

  std::function<bool(std::size_t)> visit = [&](std::size_t v) {
    mark[v] = Mark::open;
    stack.push_back(v);
    for (auto w : out[v]) {
      if (mark[w] == Mark::open) {
        const auto start = std::find(stack.begin(), stack.end(), w);
        cycle = std::vector<std::size_t>(start, stack.end());
        return true;
      }
      if (mark[w] == Mark::fresh && visit(w)) return true;
    }
    stack.pop_back();
    mark[v] = Mark::done;
    return false;
  };
  for (std::size_t v = 0; v < n; ++v)
    if (mark[v] == Mark::fresh && visit(v)) return cycle;
  return std::nullopt;
}

ConstraintIndex::ConstraintIndex(std::span<const FeedbackConstraint> constraints, const Domain& domain)
    : domain_(domain),
      above_(domain.attribute_count()),
      local_(domain.attribute_count()),
      mentioned_(domain.attribute_count(), false) {
  for (const auto& constraint : constraints) {
    validate_constraint(domain, constraint);
    if (const auto* c = std::get_if<ImportanceConstraint>(&constraint)) {
      above_[c->less_important].push_back(c->more_important);
      mentioned_[c->less_important] = mentioned_[c->more_important] = true;
    } else {
      const auto& lc = std::get<LocalOrderConstraint>(constraint);
      local_[lc.attribute].push_back(lc);
      mentioned_[lc.attribute] = true;
      if (lc.condition) mentioned_[lc.condition->attribute] = true;
    }
  }
}

bool ConstraintIndex::importance_ready(std::size_t attribute, const std::vector<bool>& placed) const {
  return std::all_of(above_[attribute].begin(), above_[attribute].end(), [&](std::size_t a) { return placed[a]; });
}

std::vector<OrderEdge> ConstraintIndex::applicable(std::size_t attribute, const Context& context) const {
  std::vector<OrderEdge> edges;
  for (const auto& c : local_[attribute]) {
    if (c.condition) {
      const auto& known = context[c.condition->attribute];
      if (known && *known != c.condition->value) continue;
    }
    edges.emplace_back(c.preferred, c.dispreferred);
  }
  return edges;
}

std::vector<OrderEdge> ConstraintIndex::all_edges(std::size_t attribute) const {
  std::vector<OrderEdge> edges;
  for (const auto& c : local_[attribute]) edges.emplace_back(c.preferred, c.dispreferred);
  return edges;
}

std::optional<LocalOrderCycle> ConstraintIndex::find_context_cycle(std::size_t attribute,
                                                                   const std::vector<bool>& known) const {
  // Condition attributes that can be pinned, with the values conditions mention.
  std::map<std::size_t, std::set<std::size_t>> pinned;
  for (const auto& c : local_[attribute])
    if (c.condition && known[c.condition->attribute]) pinned[c.condition->attribute].insert(c.condition->value);

  constexpr std::size_t kOther = static_cast<std::size_t>(-1);
  std::vector<std::pair<std::size_t, std::vector<std::size_t>>> choices;
  for (const auto& [attr, values] : pinned) {
    std::vector<std::size_t> options(values.begin(), values.end());
    options.push_back(kOther);
    choices.emplace_back(attr, std::move(options));
  }

  Context context(domain_.attribute_count());
  std::optional<LocalOrderCycle> found;
  std::function<void(std::size_t)> walk = [&](std::size_t i) {
    if (found) return;
    if (i == choices.size()) {
      const auto edges = applicable(attribute, context);
      if (auto cycle = find_cycle(domain_.value_count(attribute), edges)) {
        LocalOrderCycle result{attribute, {}, std::move(*cycle)};
        for (const auto& [attr, options] : choices)
          if (*context[attr] != kOther) result.context.emplace_back(attr, *context[attr]);
        found = std::move(result);
      }
      return;
    }
    for (auto value : choices[i].second) {
      context[choices[i].first] = value;
      walk(i + 1);
    }
    context[choices[i].first].reset();
  };
  walk(0);
  return found;
}

}  // namespace detail

namespace {

bool compatible(const PartialAssignment& assignment, const std::optional<Condition>& condition) {
  if (!condition) return true;
  return std::none_of(assignment.begin(), assignment.end(), [&](const auto& entry) {
    return entry.first == condition->attribute && entry.second != condition->value;
  });
}

bool ranks_above(const ValueOrder& order, std::size_t preferred, std::size_t dispreferred) {
  return rank_in(order, preferred) < rank_in(order, dispreferred);
}

/// Whether some instantiation of the ancestor attributes that agrees with
/// `condition` falls through every row to the default order.
bool default_reachable(const CPTable& table, const std::vector<std::size_t>& ancestors, const Domain& domain,
                       const std::optional<Condition>& condition) {
  if (table.rows.empty()) return true;
  std::uint64_t combos = 1;
  for (auto a : ancestors) {
    combos *= domain.value_count(a);
    if (combos > (std::uint64_t{1} << 16)) return true;
  }
  Alternative probe{std::vector<std::size_t>(domain.attribute_count(), 0)};
  std::function<bool(std::size_t)> walk = [&](std::size_t i) -> bool {
    if (i == ancestors.size()) {
      return std::none_of(table.rows.begin(), table.rows.end(),
                          [&](const CPRow& row) { return matches(row.condition, probe); });
    }
    const auto a = ancestors[i];
    for (std::size_t v = 0; v < domain.value_count(a); ++v) {
      if (condition && condition->attribute == a && condition->value != v) continue;
      probe.values[a] = v;
      if (walk(i + 1)) return true;
    }
    return false;
  };
  return walk(0);
}

template <typename Level>
std::vector<std::size_t> level_attributes(const std::vector<Level>& levels) {
  std::vector<std::size_t> attrs;
  for (const auto& level : levels) attrs.push_back(level.attribute);
  return attrs;
}

bool chain_importance_ok(const std::vector<std::size_t>& sequence, const ImportanceConstraint& c) {
  const auto less = std::find(sequence.begin(), sequence.end(), c.less_important);
  if (less == sequence.end()) return true;
  return std::find(sequence.begin(), less, c.more_important) != less;
}

bool verify_one(const LPTree& tree, const FeedbackConstraint& constraint, const Domain& domain) {
  if (const auto* body = std::get_if<UiupBody>(&tree.body)) {
    if (const auto* c = std::get_if<ImportanceConstraint>(&constraint))
      return chain_importance_ok(level_attributes(body->levels), *c);
    const auto& c = std::get<LocalOrderConstraint>(constraint);
    for (const auto& level : body->levels)
      if (level.attribute == c.attribute) return ranks_above(level.order, c.preferred, c.dispreferred);
    return true;
  }

  if (const auto* body = std::get_if<UicpBody>(&tree.body)) {
    const auto sequence = level_attributes(body->levels);
    if (const auto* c = std::get_if<ImportanceConstraint>(&constraint)) return chain_importance_ok(sequence, *c);
    const auto& c = std::get<LocalOrderConstraint>(constraint);
    for (std::size_t d = 0; d < body->levels.size(); ++d) {
      const auto& table = body->levels[d];
      if (table.attribute != c.attribute) continue;
      for (const auto& row : table.rows)
        if (compatible(row.condition, c.condition) && !ranks_above(row.order, c.preferred, c.dispreferred))
          return false;
      const std::vector<std::size_t> ancestors(sequence.begin(), sequence.begin() + static_cast<std::ptrdiff_t>(d));
      if (default_reachable(table, ancestors, domain, c.condition) &&
          !ranks_above(table.default_order, c.preferred, c.dispreferred))
        return false;
      return true;
    }
    return true;
  }

  const auto& root = std::get<CicpBody>(tree.body).root;
  PartialAssignment path;
  std::function<bool(const TreeNode&)> walk = [&](const TreeNode& node) -> bool {
    if (node.is_leaf()) return true;
    if (const auto* c = std::get_if<ImportanceConstraint>(&constraint)) {
      if (node.attribute == c->less_important &&
          std::none_of(path.begin(), path.end(), [&](const auto& e) { return e.first == c->more_important; }))
        return false;
    } else {
      const auto& lo = std::get<LocalOrderConstraint>(constraint);
      if (node.attribute == lo.attribute && compatible(path, lo.condition) &&
          !ranks_above(node.order, lo.preferred, lo.dispreferred))
        return false;
    }
    for (std::size_t k = 0; k < node.children.size(); ++k) {
      path.emplace_back(node.attribute, node.order[k]);
      const bool ok = walk(node.children[k]);
      path.pop_back();
      if (!ok) return false;
    }
    return true;
  };
  return walk(root);
}

}  // namespace

nlohmann::json feasibility_to_json(const Domain& domain, const FeasibilityReport& report) {
  nlohmann::json doc = {{"feasible", report.feasible}};
  nlohmann::json cycle = nlohmann::json::array();
  for (auto a : report.importance_cycle) cycle.push_back(domain.attribute(a).name);
  doc["importance_cycle"] = std::move(cycle);
  nlohmann::json locals = nlohmann::json::array();
  for (const auto& local : report.local_cycles) {
    const auto& spec = domain.attribute(local.attribute);
    nlohmann::json values = nlohmann::json::array();
    for (auto v : local.values) values.push_back(spec.values.at(v));
    nlohmann::json context = nlohmann::json::object();
    for (const auto& [a, v] : local.context) context[domain.attribute(a).name] = domain.attribute(a).values.at(v);
    locals.push_back({{"attribute", spec.name}, {"context", std::move(context)}, {"cycle", std::move(values)}});
  }
  doc["local_order_cycles"] = std::move(locals);
  return doc;
}

FeasibilityReport check_constraints(std::span<const FeedbackConstraint> constraints, const Domain& domain) {
  const detail::ConstraintIndex index(constraints, domain);
  FeasibilityReport report;

  std::vector<detail::OrderEdge> importance_edges;
  for (const auto& constraint : constraints)
    if (const auto* c = std::get_if<ImportanceConstraint>(&constraint))
      importance_edges.emplace_back(c->more_important, c->less_important);
  if (auto cycle = detail::find_cycle(domain.attribute_count(), importance_edges)) {
    report.feasible = false;
    report.importance_cycle = std::move(*cycle);
  }

  const std::vector<bool> all_known(domain.attribute_count(), true);
  for (std::size_t a = 0; a < domain.attribute_count(); ++a) {
    if (auto cycle = index.find_context_cycle(a, all_known)) {
      report.feasible = false;
      report.local_cycles.push_back(std::move(*cycle));
    }
  }
  return report;
}

std::vector<bool> verify_constraints(const LPTree& tree, std::span<const FeedbackConstraint> constraints,
                                     const Domain& domain) {
  std::vector<bool> satisfied;
  for (const auto& constraint : constraints) satisfied.push_back(verify_one(tree, constraint, domain));
  return satisfied;
}

std::vector<bool> verify_constraints(const Model& model, std::span<const FeedbackConstraint> constraints,
                                     const Domain& domain) {
  if (const auto* tree = std::get_if<LPTree>(&model)) return verify_constraints(*tree, constraints, domain);
  std::vector<bool> satisfied(constraints.size(), true);
  for (const auto& tree : std::get<LPForest>(model).trees) {
    const auto member = verify_constraints(tree, constraints, domain);
    for (std::size_t i = 0; i < member.size(); ++i) satisfied[i] = satisfied[i] && member[i];
  }
  return satisfied;
}

bool satisfies_all(const Model& model, std::span<const FeedbackConstraint> constraints, const Domain& domain) {
  const auto flags = verify_constraints(model, constraints, domain);
  return std::all_of(flags.begin(), flags.end(), [](bool b) { return b; });
}

}  // namespace lexloop
