#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "lexloop/domain.hpp"

namespace lexloop {

/// Value indices of one attribute, most preferred first.
using ValueOrder = std::vector<std::size_t>;

/// Position of `value` in `order`; order.size() when absent.
std::size_t rank_in(const ValueOrder& order, std::size_t value);

struct LocalOrder {
  std::size_t attribute;
  ValueOrder order;

  std::size_t rank_of(std::size_t value) const { return rank_in(order, value); }
  bool operator==(const LocalOrder&) const = default;
};

/// A partial assignment over ancestor attributes, sorted by attribute.
using PartialAssignment = std::vector<std::pair<std::size_t, std::size_t>>;

bool matches(const PartialAssignment& condition, const Alternative& alternative);

struct CPRow {
  PartialAssignment condition;
  ValueOrder order;
  bool operator==(const CPRow&) const = default;
};

/// Conditional preference table. Rows are mutually exclusive; an
/// instantiation matched by no row uses `default_order`.
struct CPTable {
  std::size_t attribute;
  std::vector<CPRow> rows;
  ValueOrder default_order;

  const ValueOrder& order_for(const Alternative& alternative) const;
  bool operator==(const CPTable&) const = default;
};

/// A node of a general (CICP) tree. Leaves carry no label and no children;
/// an internal node has one child per value, ordered as in `order`.
struct TreeNode {
  static constexpr std::size_t kLeaf = std::numeric_limits<std::size_t>::max();

  std::size_t attribute = kLeaf;
  ValueOrder order;
  std::vector<TreeNode> children;

  static TreeNode leaf() { return {}; }
  bool is_leaf() const noexcept { return attribute == kLeaf; }
  bool operator==(const TreeNode&) const = default;
};

enum class TreeKind { UIUP = 0, UICP = 1, CICP = 2 };

std::string_view to_string(TreeKind kind);
TreeKind tree_kind_from_string(std::string_view text);

struct UiupBody {
  std::vector<LocalOrder> levels;
  bool operator==(const UiupBody&) const = default;
};

struct UicpBody {
  std::vector<CPTable> levels;
  bool operator==(const UicpBody&) const = default;
};

struct CicpBody {
  TreeNode root;
  bool operator==(const CicpBody&) const = default;
};

/// Lexicographic preference tree in one of its three representations.
/// Attribute and value references are indices into the domain the tree was
/// built for; the domain itself travels alongside, not inside.
struct LPTree {
  std::variant<UiupBody, UicpBody, CicpBody> body;

  TreeKind kind() const noexcept { return static_cast<TreeKind>(body.index()); }
  bool operator==(const LPTree&) const = default;

  static LPTree uiup(std::vector<LocalOrder> levels) { return {UiupBody{std::move(levels)}}; }
  static LPTree uicp(std::vector<CPTable> levels) { return {UicpBody{std::move(levels)}}; }
  static LPTree cicp(TreeNode root) { return {CicpBody{std::move(root)}}; }
};

struct LPForest {
  std::vector<LPTree> trees;
  bool operator==(const LPForest&) const = default;
};

enum class ComparisonOutcome { first_preferred, second_preferred, equivalent };

std::string_view to_string(ComparisonOutcome outcome);

inline constexpr std::size_t kDefaultExpansionBudget = std::size_t{1} << 20;

// Semantics -----------------------------------------------------------------

/// Empty iff the tree is structurally valid over `domain`.
std::vector<std::string> validate_tree(const LPTree& tree, const Domain& domain);
/// Throws a validation error carrying the first violation.
void require_valid(const LPTree& tree, const Domain& domain);
void require_valid(const LPForest& forest, const Domain& domain);

std::uint64_t leaf_count(const LPTree& tree);

/// Left-to-right index of the leaf the alternative reaches.
std::uint64_t trace(const LPTree& tree, const Alternative& alternative);

ComparisonOutcome compare(const LPTree& tree, const Alternative& first, const Alternative& second);

/// Equivalence classes in leaf order; members in canonical enumeration order.
std::vector<std::vector<Alternative>> induced_order(const LPTree& tree, const Domain& domain,
                                                    std::uint64_t limit = kDefaultEnumerationLimit);

/// Equal traces for every alternative, up to an order-preserving relabeling.
bool same_preorder(const LPTree& a, const LPTree& b, const Domain& domain,
                   std::uint64_t limit = kDefaultEnumerationLimit);

// Representation changes ------------------------------------------------------

LPTree expand(const LPTree& tree, std::size_t node_budget = kDefaultExpansionBudget);

/// Most compact kind with the same preorder. UIUP input is returned as is.
LPTree collapse(const LPTree& tree);

// Forests ---------------------------------------------------------------------

enum class VotingRule { pairwise_majority };

ComparisonOutcome forest_compare(const LPForest& forest, const Alternative& first, const Alternative& second,
                                 VotingRule rule = VotingRule::pairwise_majority);

struct RankedCandidate {
  Alternative alternative;
  double score;
};

std::vector<RankedCandidate> borda_rank(const LPForest& forest, std::span<const Alternative> candidates,
                                        const Domain& domain);

/// What a learner produces: a single tree or a forest.
using Model = std::variant<LPTree, LPForest>;

ComparisonOutcome compare_model(const Model& model, const Alternative& first, const Alternative& second);
void require_valid(const Model& model, const Domain& domain);

}  // namespace lexloop
