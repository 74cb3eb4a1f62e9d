#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <json.hpp>

#include "lexloop/constraints.hpp"
#include "lexloop/domain.hpp"
#include "lexloop/lp_tree.hpp"

namespace lexloop {

struct LearnConfig {
  TreeKind kind = TreeKind::UIUP;
  std::size_t forest_size = 1;
  /// Bootstrap sample size per forest member, as a fraction of the examples.
  double sample_fraction = 1.0;
  std::uint64_t seed = 0;
  std::optional<std::size_t> max_depth;
  std::vector<FeedbackConstraint> constraints;

  bool operator==(const LearnConfig&) const = default;
};

void validate_config(const LearnConfig& config);
nlohmann::json config_to_json(const Domain& domain, const LearnConfig& config);
/// Missing fields keep their defaults.
LearnConfig config_from_json(const Domain& domain, const nlohmann::json& doc);

enum class ExampleOutcome { agreed, disagreed, undecided };

std::string_view to_string(ExampleOutcome outcome);

struct AccuracyStats {
  std::size_t agreed = 0;
  std::size_t disagreed = 0;
  std::size_t undecided = 0;
  std::vector<ExampleOutcome> outcomes;

  std::size_t total() const { return agreed + disagreed + undecided; }
  /// agreed / total, 1 for an empty example list.
  double accuracy() const;
  /// agreed / (agreed + disagreed), 1 when nothing was decided.
  double decided_accuracy() const;
};

nlohmann::json stats_to_json(const AccuracyStats& stats);

struct LearnResult {
  Model model;
  double training_accuracy = 1.0;
  std::vector<ExampleOutcome> outcomes;
  /// One flag per config constraint.
  std::vector<bool> constraint_satisfied;
};

AccuracyStats evaluate(const Model& model, std::span<const ComparisonExample> examples);

// Greedy learners. Each throws ErrorCode::infeasible before learning when
// the constraints cannot be honored, and never returns a model that
// violates one.
LearnResult learn_uiup(std::span<const ComparisonExample> examples, const Domain& domain, const LearnConfig& config);
LearnResult learn_uicp(std::span<const ComparisonExample> examples, const Domain& domain, const LearnConfig& config);
LearnResult learn_cicp(std::span<const ComparisonExample> examples, const Domain& domain, const LearnConfig& config);
LearnResult learn_forest(std::span<const ComparisonExample> examples, const Domain& domain, const LearnConfig& config);

/// Single-tree learner for config.kind when forest_size is 1, forest otherwise.
LearnResult learn(std::span<const ComparisonExample> examples, const Domain& domain, const LearnConfig& config);

// Query selection ----------------------------------------------------------

struct AlternativePair {
  Alternative first;
  Alternative second;
  bool operator==(const AlternativePair&) const = default;
};

struct QueryOptions {
  /// Random candidate pairs scored for forest disagreement.
  std::size_t candidates = 32;
  /// Domains up to this size fall back to exhaustive search for unasked pairs.
  std::uint64_t enumeration_limit = 4096;
};

/// A pair not asked before, as an unordered pair. With a forest model the
/// candidate on which member trees split most evenly wins.
AlternativePair select_query(const Domain& domain, std::span<const AlternativePair> asked, const Model* current,
                             std::uint64_t seed, const QueryOptions& options = {});

}  // namespace lexloop
