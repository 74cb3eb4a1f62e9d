#include "lexloop/learn.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <set>

#include "constraint_index.hpp"
#include "lexloop/error.hpp"
#include "random.hpp"

namespace lexloop {

namespace {

using detail::ConstraintIndex;
using detail::Context;
using detail::OrderEdge;
using ExampleRefs = std::vector<const ComparisonExample*>;

constexpr std::uint64_t kMaxEnumeratedRows = 4096;

std::string describe_infeasible(const Domain& domain, const FeasibilityReport& report) {
  std::string message = "infeasible constraints";
  if (!report.importance_cycle.empty()) {
    message += "; importance cycle:";
    for (auto a : report.importance_cycle) message += " " + domain.attribute(a).name + " >";
    message += " " + domain.attribute(report.importance_cycle.front()).name;
  }
  for (const auto& cycle : report.local_cycles) {
    const auto& spec = domain.attribute(cycle.attribute);
    message += "; order cycle on " + spec.name + ":";
    for (auto v : cycle.values) message += " " + spec.values[v] + " >";
    message += " " + spec.values[cycle.values.front()];
  }
  return message;
}

ConstraintIndex prepare(const Domain& domain, const LearnConfig& config) {
  validate_config(config);
  const auto report = check_constraints(config.constraints, domain);
  if (!report.feasible) fail(ErrorCode::infeasible, describe_infeasible(domain, report));
  return ConstraintIndex(config.constraints, domain);
}

bool differs_on(const ComparisonExample& e, std::size_t attribute) {
  return e.better[attribute] != e.worse[attribute];
}

/// Net-win ordering: a value's score is how often it sits on the better side
/// of a decided example minus how often it sits on the worse side. Constraint
/// edges override scores; `tie_rank` settles equal scores.
ValueOrder fit_order(std::size_t attribute, std::size_t value_count, const ExampleRefs& decided,
                     std::span<const OrderEdge> edges, const std::vector<std::size_t>& tie_rank) {
  std::vector<long long> net(value_count, 0);
  for (const auto* e : decided) {
    ++net[e->better[attribute]];
    --net[e->worse[attribute]];
  }
  std::vector<std::vector<std::size_t>> successors(value_count);
  std::vector<std::size_t> pending(value_count, 0);
  std::set<OrderEdge> unique(edges.begin(), edges.end());
  for (const auto& [from, to] : unique) {
    successors[from].push_back(to);
    ++pending[to];
  }

  ValueOrder order;
  std::vector<bool> done(value_count, false);
  while (order.size() < value_count) {
    std::optional<std::size_t> pick;
    for (std::size_t v = 0; v < value_count; ++v) {
      if (done[v] || pending[v] > 0) continue;
      if (!pick || net[v] > net[*pick] || (net[v] == net[*pick] && tie_rank[v] < tie_rank[*pick])) pick = v;
    }
    if (!pick) fail(ErrorCode::infeasible, "cyclic local-order constraints");
    done[*pick] = true;
    order.push_back(*pick);
    for (auto w : successors[*pick]) --pending[w];
  }
  return order;
}

std::vector<std::size_t> identity_rank(std::size_t n) {
  std::vector<std::size_t> rank(n);
  for (std::size_t i = 0; i < n; ++i) rank[i] = i;
  return rank;
}

std::vector<std::size_t> rank_vector(const ValueOrder& order) {
  std::vector<std::size_t> rank(order.size());
  for (std::size_t i = 0; i < order.size(); ++i) rank[order[i]] = i;
  return rank;
}

long long net_score(std::size_t attribute, const ValueOrder& order, const ExampleRefs& decided) {
  const auto rank = rank_vector(order);
  long long score = 0;
  for (const auto* e : decided) score += rank[e->better[attribute]] < rank[e->worse[attribute]] ? 1 : -1;
  return score;
}

template <typename Level>
struct FittedLevel {
  Level level;
  long long score;
};

/// Greedy construction shared by the two chain kinds. `fit_level` returns
/// nullopt when the attribute cannot be placed below `sequence`.
template <typename Level, typename FitLevel>
std::vector<Level> greedy_chain(std::span<const ComparisonExample> examples, const Domain& domain,
                                const LearnConfig& config, const ConstraintIndex& index, FitLevel fit_level) {
  const auto p = domain.attribute_count();
  const auto limit = std::min(p, config.max_depth.value_or(p));
  ExampleRefs undecided;
  for (const auto& e : examples) undecided.push_back(&e);

  std::vector<bool> placed(p, false);
  std::vector<std::size_t> sequence;
  std::vector<Level> levels;

  auto place = [&](std::size_t attribute, Level level) {
    placed[attribute] = true;
    sequence.push_back(attribute);
    levels.push_back(std::move(level));
  };

  while (!undecided.empty() && levels.size() < limit) {
    std::optional<std::size_t> best_attribute;
    std::optional<FittedLevel<Level>> best;
    for (std::size_t a = 0; a < p; ++a) {
      if (placed[a] || !index.importance_ready(a, placed)) continue;
      ExampleRefs decided;
      for (const auto* e : undecided)
        if (differs_on(*e, a)) decided.push_back(e);
      auto fitted = fit_level(a, decided, sequence);
      if (!fitted) continue;
      if (!best || fitted->score > best->score) {
        best = std::move(fitted);
        best_attribute = a;
      }
    }
    // Whatever is left cannot be placed without breaking a constraint.
    if (!best) break;
    const auto chosen = *best_attribute;
    place(chosen, std::move(best->level));
    std::erase_if(undecided, [&](const ComparisonExample* e) { return differs_on(*e, chosen); });
  }

  // Attributes no example speaks about, or that feedback names, still get a
  // level so the model shows them.
  std::vector<bool> examined(p, false);
  for (const auto& e : examples)
    for (std::size_t a = 0; a < p; ++a)
      if (differs_on(e, a)) examined[a] = true;
  bool progress = true;
  while (progress && levels.size() < limit) {
    progress = false;
    for (std::size_t a = 0; a < p && !progress; ++a) {
      if (placed[a] || (examined[a] && !index.mentioned(a)) || !index.importance_ready(a, placed)) continue;
      if (auto fitted = fit_level(a, ExampleRefs{}, sequence)) {
        place(a, std::move(fitted->level));
        progress = true;
      }
    }
  }
  return levels;
}

LearnResult finish(LPTree tree, std::span<const ComparisonExample> examples, const Domain& domain,
                   const LearnConfig& config) {
  require_valid(tree, domain);
  LearnResult result{Model{std::move(tree)}, 1.0, {}, {}};
  const auto stats = evaluate(result.model, examples);
  result.training_accuracy = stats.decided_accuracy();
  result.outcomes = stats.outcomes;
  result.constraint_satisfied = verify_constraints(result.model, config.constraints, domain);
  if (!std::all_of(result.constraint_satisfied.begin(), result.constraint_satisfied.end(), [](bool b) { return b; }))
    throw std::logic_error("learner produced a model that violates a constraint");
  return result;
}

LPTree build_uiup(std::span<const ComparisonExample> examples, const Domain& domain, const LearnConfig& config,
                  const ConstraintIndex& index) {
  auto levels = greedy_chain<LocalOrder>(
      examples, domain, config, index,
      [&](std::size_t a, const ExampleRefs& decided,
          const std::vector<std::size_t>&) -> std::optional<FittedLevel<LocalOrder>> {
        // One order serves every context, so conditional constraints that
        // disagree across contexts keep the attribute out of the tree.
        const auto edges = index.all_edges(a);
        if (detail::find_cycle(domain.value_count(a), edges)) return std::nullopt;
        auto order = fit_order(a, domain.value_count(a), decided, edges, identity_rank(domain.value_count(a)));
        const auto score = net_score(a, order, decided);
        return FittedLevel<LocalOrder>{{a, std::move(order)}, score};
      });
  return LPTree::uiup(std::move(levels));
}

std::optional<FittedLevel<CPTable>> fit_table(std::size_t a, const ExampleRefs& decided,
                                              const std::vector<std::size_t>& ancestors, const Domain& domain,
                                              const ConstraintIndex& index) {
  const auto n = domain.value_count(a);
  std::vector<bool> known(domain.attribute_count(), false);
  for (auto anc : ancestors) known[anc] = true;
  if (index.find_context_cycle(a, known)) return std::nullopt;

  const auto all_edges = index.all_edges(a);
  const bool union_acyclic = !detail::find_cycle(n, all_edges);

  CPTable table{a, {}, {}};
  if (ancestors.empty()) {
    table.default_order = fit_order(a, n, decided, all_edges, identity_rank(n));
    const auto score = net_score(a, table.default_order, decided);
    return FittedLevel<CPTable>{std::move(table), score};
  }

  // The default order serves instantiations no row names, so it must honor
  // every constraint that could bind there.
  table.default_order =
      fit_order(a, n, decided, union_acyclic ? std::span<const OrderEdge>(all_edges) : std::span<const OrderEdge>{},
                identity_rank(n));
  const auto tie_rank = rank_vector(table.default_order);

  std::map<std::vector<std::size_t>, ExampleRefs> groups;
  for (const auto* e : decided) {
    std::vector<std::size_t> key;
    for (auto anc : ancestors) key.push_back(e->better[anc]);
    groups[key].push_back(e);
  }

  auto make_row = [&](const std::vector<std::size_t>& key, const ExampleRefs& members) {
    Context context(domain.attribute_count());
    CPRow row;
    for (std::size_t i = 0; i < ancestors.size(); ++i) {
      context[ancestors[i]] = key[i];
      row.condition.emplace_back(ancestors[i], key[i]);
    }
    std::sort(row.condition.begin(), row.condition.end());
    row.order = fit_order(a, n, members, index.applicable(a, context), tie_rank);
    return row;
  };

  long long score = 0;
  std::map<std::vector<std::size_t>, CPRow> rows;
  for (const auto& [key, members] : groups) {
    auto row = make_row(key, members);
    score += net_score(a, row.order, members);
    rows.emplace(key, std::move(row));
  }

  if (!union_acyclic) {
    // Every instantiation needs its own row; the default becomes unreachable.
    std::uint64_t combos = 1;
    for (auto anc : ancestors) {
      combos *= domain.value_count(anc);
      if (combos > kMaxEnumeratedRows) return std::nullopt;
    }
    std::vector<std::size_t> key(ancestors.size(), 0);
    for (std::uint64_t i = 0; i < combos; ++i) {
      if (!rows.count(key)) rows.emplace(key, make_row(key, {}));
      for (std::size_t d = ancestors.size(); d-- > 0;) {
        if (++key[d] < domain.value_count(ancestors[d])) break;
        key[d] = 0;
      }
    }
  }

  for (auto& [key, row] : rows) table.rows.push_back(std::move(row));
  return FittedLevel<CPTable>{std::move(table), score};
}

LPTree build_uicp(std::span<const ComparisonExample> examples, const Domain& domain, const LearnConfig& config,
                  const ConstraintIndex& index) {
  auto levels = greedy_chain<CPTable>(examples, domain, config, index,
                                      [&](std::size_t a, const ExampleRefs& decided, const std::vector<std::size_t>& ancestors) {
                                        return fit_table(a, decided, ancestors, domain, index);
                                      });
  return LPTree::uicp(std::move(levels));
}

class CicpGrower {
 public:
  CicpGrower(const Domain& domain, const LearnConfig& config, const ConstraintIndex& index)
      : domain_(domain),
        index_(index),
        limit_(std::min(domain.attribute_count(), config.max_depth.value_or(domain.attribute_count()))),
        context_(domain.attribute_count()),
        on_path_(domain.attribute_count(), false) {}

  TreeNode grow(const ExampleRefs& examples, std::size_t depth) {
    if (depth >= limit_) return TreeNode::leaf();
    if (examples.empty() && depth > 0) return TreeNode::leaf();

    std::optional<std::size_t> best;
    ValueOrder best_order;
    long long best_score = 0;
    for (std::size_t a = 0; a < domain_.attribute_count(); ++a) {
      if (on_path_[a] || !index_.importance_ready(a, on_path_)) continue;
      const auto edges = index_.applicable(a, context_);
      const auto n = domain_.value_count(a);
      if (detail::find_cycle(n, edges)) continue;
      ExampleRefs decided;
      for (const auto* e : examples)
        if (differs_on(*e, a)) decided.push_back(e);
      auto order = fit_order(a, n, decided, edges, identity_rank(n));
      const auto score = net_score(a, order, decided);
      if (!best || score > best_score) {
        best = a;
        best_order = std::move(order);
        best_score = score;
      }
    }
    if (!best) return TreeNode::leaf();

    TreeNode node;
    node.attribute = *best;
    node.order = best_order;
    on_path_[*best] = true;
    for (auto value : node.order) {
      ExampleRefs passed;
      for (const auto* e : examples)
        if (e->better[*best] == value && e->worse[*best] == value) passed.push_back(e);
      context_[*best] = value;
      node.children.push_back(grow(passed, depth + 1));
    }
    context_[*best].reset();
    on_path_[*best] = false;
    return node;
  }

 private:
  const Domain& domain_;
  const ConstraintIndex& index_;
  std::size_t limit_;
  Context context_;
  std::vector<bool> on_path_;
};

LPTree build_tree(std::span<const ComparisonExample> examples, const Domain& domain, const LearnConfig& config,
                  const ConstraintIndex& index) {
  switch (config.kind) {
    case TreeKind::UIUP: return build_uiup(examples, domain, config, index);
    case TreeKind::UICP: return build_uicp(examples, domain, config, index);
    case TreeKind::CICP: {
      ExampleRefs refs;
      for (const auto& e : examples) refs.push_back(&e);
      return LPTree::cicp(CicpGrower(domain, config, index).grow(refs, 0));
    }
  }
  throw std::logic_error("unknown tree kind");
}

LearnResult learn_single(TreeKind kind, std::span<const ComparisonExample> examples, const Domain& domain,
                         const LearnConfig& config) {
  const auto index = prepare(domain, config);
  LearnConfig effective = config;
  effective.kind = kind;
  return finish(build_tree(examples, domain, effective, index), examples, domain, config);
}

}  // namespace

// Config ----------------------------------------------------------------------

void validate_config(const LearnConfig& config) {
  if (config.forest_size < 1) fail(ErrorCode::validation, "forest size must be at least 1");
  if (!(config.sample_fraction > 0.0 && config.sample_fraction <= 1.0))
    fail(ErrorCode::validation, "sample fraction must lie in (0, 1]");
  if (config.max_depth && *config.max_depth == 0) fail(ErrorCode::validation, "max depth must be positive");
}

nlohmann::json config_to_json(const Domain& domain, const LearnConfig& config) {
  nlohmann::json doc = {{"kind", to_string(config.kind)},
                        {"forest_size", config.forest_size},
                        {"sample_fraction", config.sample_fraction},
                        {"seed", config.seed},
                        {"constraints", constraints_to_json(domain, config.constraints).at("constraints")}};
  doc["max_depth"] = config.max_depth ? nlohmann::json(*config.max_depth) : nlohmann::json(nullptr);
  return doc;
}

LearnConfig config_from_json(const Domain& domain, const nlohmann::json& doc) {
  if (!doc.is_object()) fail(ErrorCode::validation, "learn config must be an object");
  LearnConfig config;
  try {
    if (doc.contains("kind")) config.kind = tree_kind_from_string(doc.at("kind").get<std::string>());
    if (doc.contains("forest_size")) config.forest_size = doc.at("forest_size").get<std::size_t>();
    if (doc.contains("sample_fraction")) config.sample_fraction = doc.at("sample_fraction").get<double>();
    if (doc.contains("seed")) config.seed = doc.at("seed").get<std::uint64_t>();
    if (doc.contains("max_depth") && !doc.at("max_depth").is_null())
      config.max_depth = doc.at("max_depth").get<std::size_t>();
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::validation, std::string("malformed learn config: ") + e.what());
  }
  if (doc.contains("constraints")) config.constraints = constraints_from_json(domain, doc.at("constraints"));
  validate_config(config);
  return config;
}

// Evaluation --------------------------------------------------------------------

std::string_view to_string(ExampleOutcome outcome) {
  switch (outcome) {
    case ExampleOutcome::agreed: return "agreed";
    case ExampleOutcome::disagreed: return "disagreed";
    case ExampleOutcome::undecided: return "undecided";
  }
  return "?";
}

double AccuracyStats::accuracy() const {
  return total() == 0 ? 1.0 : static_cast<double>(agreed) / static_cast<double>(total());
}

double AccuracyStats::decided_accuracy() const {
  const auto decided = agreed + disagreed;
  return decided == 0 ? 1.0 : static_cast<double>(agreed) / static_cast<double>(decided);
}

nlohmann::json stats_to_json(const AccuracyStats& stats) {
  return {{"agreed", stats.agreed},
          {"disagreed", stats.disagreed},
          {"undecided", stats.undecided},
          {"total", stats.total()},
          {"accuracy", stats.accuracy()},
          {"decided_accuracy", stats.decided_accuracy()}};
}

AccuracyStats evaluate(const Model& model, std::span<const ComparisonExample> examples) {
  AccuracyStats stats;
  for (const auto& e : examples) {
    switch (compare_model(model, e.better, e.worse)) {
      case ComparisonOutcome::first_preferred:
        ++stats.agreed;
        stats.outcomes.push_back(ExampleOutcome::agreed);
        break;
      case ComparisonOutcome::second_preferred:
        ++stats.disagreed;
        stats.outcomes.push_back(ExampleOutcome::disagreed);
        break;
      case ComparisonOutcome::equivalent:
        ++stats.undecided;
        stats.outcomes.push_back(ExampleOutcome::undecided);
        break;
    }
  }
  return stats;
}

// Learners ------------------------------------------------------------------------

LearnResult learn_uiup(std::span<const ComparisonExample> examples, const Domain& domain, const LearnConfig& config) {
  return learn_single(TreeKind::UIUP, examples, domain, config);
}

LearnResult learn_uicp(std::span<const ComparisonExample> examples, const Domain& domain, const LearnConfig& config) {
  return learn_single(TreeKind::UICP, examples, domain, config);
}

LearnResult learn_cicp(std::span<const ComparisonExample> examples, const Domain& domain, const LearnConfig& config) {
  return learn_single(TreeKind::CICP, examples, domain, config);
}

LearnResult learn_forest(std::span<const ComparisonExample> examples, const Domain& domain, const LearnConfig& config) {
  const auto index = prepare(domain, config);
  if (config.forest_size < 2) fail(ErrorCode::validation, "a forest needs at least two trees");

  const auto n = examples.size();
  const auto sample_size =
      n == 0 ? std::size_t{0}
             : std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(config.sample_fraction * static_cast<double>(n))));
  LPForest forest;
  for (std::size_t i = 0; i < config.forest_size; ++i) {
    detail::Rng rng(config.seed + i);
    std::vector<ComparisonExample> sample;
    sample.reserve(sample_size);
    for (std::size_t s = 0; s < sample_size; ++s) sample.push_back(examples[detail::uniform_below(rng, n)]);
    auto tree = build_tree(sample, domain, config, index);
    require_valid(tree, domain);
    forest.trees.push_back(std::move(tree));
  }

  LearnResult result{Model{std::move(forest)}, 1.0, {}, {}};
  const auto stats = evaluate(result.model, examples);
  result.training_accuracy = stats.decided_accuracy();
  result.outcomes = stats.outcomes;
  result.constraint_satisfied = verify_constraints(result.model, config.constraints, domain);
  if (!std::all_of(result.constraint_satisfied.begin(), result.constraint_satisfied.end(), [](bool b) { return b; }))
    throw std::logic_error("forest member violates a constraint");
  return result;
}

LearnResult learn(std::span<const ComparisonExample> examples, const Domain& domain, const LearnConfig& config) {
  validate_config(config);
  if (config.forest_size >= 2) return learn_forest(examples, domain, config);
  return learn_single(config.kind, examples, domain, config);
}

// Query selection -------------------------------------------------------------------

AlternativePair select_query(const Domain& domain, std::span<const AlternativePair> asked, const Model* current,
                             std::uint64_t seed, const QueryOptions& options) {
  auto unordered = [](const Alternative& a, const Alternative& b) {
    return a < b ? std::make_pair(a, b) : std::make_pair(b, a);
  };
  std::set<std::pair<Alternative, Alternative>> seen;
  for (const auto& pair : asked)
    if (pair.first != pair.second) seen.insert(unordered(pair.first, pair.second));

  const auto n = domain.size();
  const bool small = n <= options.enumeration_limit;
  if (small && seen.size() >= n * (n - 1) / 2) fail(ErrorCode::exhausted, "every pair of alternatives was asked");

  detail::Rng rng(seed);
  auto random_alternative = [&] {
    Alternative a;
    for (std::size_t i = 0; i < domain.attribute_count(); ++i) a.values.push_back(detail::uniform_below(rng, domain.value_count(i)));
    return a;
  };

  const auto* forest = current ? std::get_if<LPForest>(current) : nullptr;
  const std::size_t wanted = forest && forest->trees.size() >= 2 ? std::max<std::size_t>(1, options.candidates) : 1;

  std::vector<AlternativePair> candidates;
  std::set<std::pair<Alternative, Alternative>> drawn;
  for (std::size_t attempt = 0; attempt < 64 * wanted && candidates.size() < wanted; ++attempt) {
    auto a = random_alternative();
    auto b = random_alternative();
    if (a == b) continue;
    const auto key = unordered(a, b);
    if (seen.count(key) || !drawn.insert(key).second) continue;
    candidates.push_back({std::move(a), std::move(b)});
  }

  if (candidates.empty()) {
    if (!small) fail(ErrorCode::exhausted, "no unasked pair found");
    const auto all = enumerate_alternatives(domain, options.enumeration_limit);
    std::vector<AlternativePair> open;
    for (std::size_t i = 0; i < all.size(); ++i)
      for (std::size_t j = i + 1; j < all.size(); ++j)
        if (!seen.count({all[i], all[j]})) open.push_back({all[i], all[j]});
    if (open.empty()) fail(ErrorCode::exhausted, "every pair of alternatives was asked");
    candidates.push_back(open[detail::uniform_below(rng, open.size())]);
  }

  if (candidates.size() == 1 || !forest) return candidates.front();

  std::size_t best = 0;
  std::size_t best_split = 0;
  for (std::size_t c = 0; c < candidates.size(); ++c) {
    std::size_t first = 0;
    std::size_t second = 0;
    for (const auto& tree : forest->trees) {
      const auto outcome = compare(tree, candidates[c].first, candidates[c].second);
      if (outcome == ComparisonOutcome::first_preferred) ++first;
      if (outcome == ComparisonOutcome::second_preferred) ++second;
    }
    const auto split = std::min(first, second);
    if (split > best_split) {
      best = c;
      best_split = split;
    }
  }
  return candidates[best];
}

}  // namespace lexloop
