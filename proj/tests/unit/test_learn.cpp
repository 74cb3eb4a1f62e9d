#include <doctest.h>

#include "../fixtures.hpp"
#include "../oracles.hpp"
#include "lexloop/error.hpp"
#include "lexloop/learn.hpp"
#include "lexloop/synth.hpp"

using namespace lexloop;
using fixtures::car;

namespace {

std::vector<std::size_t> sequence_of(const LPTree& tree) {
  std::vector<std::size_t> out;
  if (const auto* b = std::get_if<UiupBody>(&tree.body))
    for (const auto& l : b->levels) out.push_back(l.attribute);
  if (const auto* b = std::get_if<UicpBody>(&tree.body))
    for (const auto& l : b->levels) out.push_back(l.attribute);
  return out;
}

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::io;
}

}  // namespace

TEST_CASE("two-by-two examples have a unique perfect UIUP fit") {
  const auto domain = fixtures::two_by_two();
  const std::vector<ComparisonExample> examples = {{car(domain, "a1,b2"), car(domain, "a2,b1")},
                                                   {car(domain, "a1,b1"), car(domain, "a1,b2")},
                                                   {car(domain, "a2,b1"), car(domain, "a2,b2")}};
  std::vector<LPTree> perfect;
  for (const auto& t : oracles::all_full_uiup_trees(domain))
    if (oracles::agreement(t, examples) == 1.0) perfect.push_back(t);
  REQUIRE(oracles::all_full_uiup_trees(domain).size() == 8);
  REQUIRE(perfect.size() == 1);
  CHECK(perfect[0] == fixtures::tree_t1());

  const auto result = learn_uiup(examples, domain, {});
  CHECK(std::get<LPTree>(result.model) == fixtures::tree_t1());
  CHECK(result.training_accuracy == 1.0);
}

TEST_CASE("empty examples give the declaration-order defaults") {
  const auto domain = fixtures::car_domain();
  const auto uiup = learn_uiup({}, domain, {});
  CHECK(std::get<LPTree>(uiup.model) ==
        LPTree::uiup({{0, {0, 1, 2}}, {1, {0, 1}}, {2, {0, 1, 2}}, {3, {0, 1}}}));
  CHECK(uiup.training_accuracy == 1.0);

  const auto uicp = std::get<LPTree>(learn_uicp({}, domain, {}).model);
  REQUIRE(uicp.kind() == TreeKind::UICP);
  for (const auto& level : std::get<UicpBody>(uicp.body).levels) CHECK(level.rows.empty());
  CHECK(sequence_of(uicp) == std::vector<std::size_t>{0, 1, 2, 3});

  const auto cicp = std::get<LPTree>(learn_cicp({}, domain, {}).model);
  const auto& root = std::get<CicpBody>(cicp.body).root;
  CHECK(root.attribute == 0);
  for (const auto& child : root.children) CHECK(child.is_leaf());
}

TEST_CASE("feedback is honored on the car evaluation domain") {
  const auto domain = fixtures::car_evaluation_domain();
  const auto hidden = random_tree(domain, TreeKind::UIUP, 11);
  const auto examples = sample_examples(Model{hidden}, domain, 60, 0.0, 5);
  LearnConfig config;
  config.constraints = {importance(domain, "BuyingPrice", "Persons"), local_order(domain, "BuyingPrice", "med", "low"),
                        local_order(domain, "Luggage", "big", "med")};
  for (auto kind : {TreeKind::UIUP, TreeKind::UICP, TreeKind::CICP}) {
    config.kind = kind;
    const auto result = learn(examples, domain, config);
    CHECK(result.constraint_satisfied == std::vector<bool>{true, true, true});
    const auto& tree = std::get<LPTree>(result.model);
    if (kind == TreeKind::UIUP) {
      const auto seq = sequence_of(tree);
      const auto bp = std::find(seq.begin(), seq.end(), 0);
      const auto persons = std::find(seq.begin(), seq.end(), 3);
      REQUIRE(bp != seq.end());
      CHECK(bp < persons);
      const auto& level = std::get<UiupBody>(tree.body).levels[static_cast<std::size_t>(bp - seq.begin())];
      CHECK(level.rank_of(2) < level.rank_of(3));
    }
  }
}

TEST_CASE("cyclic constraints are rejected before learning") {
  const auto domain = fixtures::car_domain();
  LearnConfig config;
  config.constraints = {importance(domain, "B", "M"), importance(domain, "M", "B")};
  for (auto kind : {TreeKind::UIUP, TreeKind::UICP, TreeKind::CICP}) {
    config.kind = kind;
    CHECK(code_of([&] { learn({}, domain, config); }) == ErrorCode::infeasible);
  }
  config.forest_size = 3;
  CHECK(code_of([&] { learn({}, domain, config); }) == ErrorCode::infeasible);
}

TEST_CASE("uicp learner reproduces the conditional make tables") {
  const auto domain = fixtures::car_domain();
  const auto hidden = fixtures::conditional_example_tree();
  const auto examples = complete_examples(Model{hidden}, domain);
  const auto result = learn_uicp(examples, domain, {});
  CHECK(result.training_accuracy == 1.0);
  const auto& tree = std::get<LPTree>(result.model);
  CHECK(same_preorder(tree, hidden, domain));
  const auto& levels = std::get<UicpBody>(tree.body).levels;
  REQUIRE(levels.size() >= 2);
  CHECK(levels[1].attribute == 1);
  const auto at = [&](const std::string& row) { return levels[1].order_for(car(domain, row)); };
  CHECK(at("s,h,l,a") == ValueOrder{0, 1});
  CHECK(at("v,h,l,a") == ValueOrder{1, 0});
  CHECK(at("r,h,l,a") == ValueOrder{0, 1});
}

TEST_CASE("uicp learner on unconditional data collapses to a chain") {
  const auto domain = fixtures::car_domain();
  const auto examples = complete_examples(Model{fixtures::unconditional_example_tree()}, domain);
  const auto tree = std::get<LPTree>(learn_uicp(examples, domain, {}).model);
  CHECK(collapse(expand(tree)).kind() == TreeKind::UIUP);
  CHECK(same_preorder(tree, fixtures::unconditional_example_tree(), domain));
}

TEST_CASE("cicp learner recovers the car example tree") {
  const auto domain = fixtures::car_domain();
  const auto examples = complete_examples(Model{fixtures::worked_example_tree()}, domain);
  const auto result = learn_cicp(examples, domain, {});
  CHECK(result.training_accuracy == 1.0);
  CHECK(same_preorder(std::get<LPTree>(result.model), fixtures::worked_example_tree(), domain));

  const auto chain = complete_examples(Model{fixtures::unconditional_example_tree()}, domain);
  const auto from_chain = std::get<LPTree>(learn_cicp(chain, domain, {}).model);
  CHECK(collapse(from_chain) == fixtures::unconditional_example_tree());
}

TEST_CASE("recovery of hidden unconditional trees") {
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    const auto domain = random_domain(seed + 100, 3, 3);
    const auto hidden = random_tree(domain, TreeKind::UIUP, seed);
    const auto examples = complete_examples(Model{hidden}, domain);
    const auto result = learn_uiup(examples, domain, {});
    CHECK(result.training_accuracy == 1.0);
    CHECK(oracles::same_preorder(std::get<LPTree>(result.model), hidden, domain));
  }
}

TEST_CASE("greedy beats the declaration-order default") {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto domain = random_domain(seed, 4, 4);
    const auto hidden = random_tree(domain, static_cast<TreeKind>(seed % 3), seed);
    const auto examples = sample_examples(Model{hidden}, domain, 30, 0.2, seed);
    const auto learned = learn_uiup(examples, domain, {});
    const auto baseline = learn_uiup({}, domain, {});
    CHECK(evaluate(learned.model, examples).decided_accuracy() >=
          evaluate(baseline.model, examples).decided_accuracy());
  }
}

TEST_CASE("forests") {
  const auto domain = fixtures::car_evaluation_domain();
  const auto hidden = random_tree(domain, TreeKind::UIUP, 3);
  const auto examples = sample_examples(Model{hidden}, domain, 40, 0.1, 9);
  LearnConfig config;
  config.forest_size = 13;
  config.sample_fraction = 0.7;
  config.seed = 42;
  const auto first = learn(examples, domain, config);
  const auto second = learn(examples, domain, config);
  REQUIRE(std::holds_alternative<LPForest>(first.model));
  CHECK(std::get<LPForest>(first.model).trees.size() == 13);
  CHECK(first.model == second.model);
  for (const auto& tree : std::get<LPForest>(first.model).trees) CHECK(tree.kind() == TreeKind::UIUP);

  LearnConfig single;
  CHECK(learn(examples, domain, single).model == learn_uiup(examples, domain, single).model);
  CHECK(code_of([&] { learn_forest(examples, domain, single); }) == ErrorCode::validation);
}

TEST_CASE("evaluation outcomes") {
  const auto domain = fixtures::two_by_two();
  const auto t1 = fixtures::tree_t1();
  const auto examples = complete_examples(Model{t1}, domain);
  const auto self = evaluate(Model{t1}, examples);
  CHECK(self.accuracy() == 1.0);
  CHECK(self.disagreed == 0);

  // Reversing the root flips every example decided at the root.
  std::vector<ComparisonExample> root_decided;
  for (const auto& e : examples)
    if (e.better[0] != e.worse[0]) root_decided.push_back(e);
  const auto flipped = evaluate(Model{fixtures::tree_t3()}, root_decided);
  CHECK(flipped.accuracy() < 0.5);

  const auto empty = evaluate(Model{t1}, {});
  CHECK(empty.total() == 0);
  CHECK(empty.accuracy() == 1.0);

  const std::vector<ComparisonExample> tie = {{car(domain, "a1,b1"), car(domain, "a1,b2")}};
  const auto partial = evaluate(Model{LPTree::uiup({{0, {0, 1}}})}, tie);
  CHECK(partial.undecided == 1);
  CHECK(partial.decided_accuracy() == 1.0);
}

TEST_CASE("query selection") {
  const auto domain = fixtures::two_by_two();
  std::vector<AlternativePair> asked;
  for (int i = 0; i < 6; ++i) {
    const auto pair = select_query(domain, asked, nullptr, 7 + i);
    CHECK(pair.first != pair.second);
    for (const auto& previous : asked) {
      const bool same = (previous.first == pair.first && previous.second == pair.second) ||
                        (previous.first == pair.second && previous.second == pair.first);
      CHECK_FALSE(same);
    }
    asked.push_back(pair);
  }
  CHECK(code_of([&] { select_query(domain, asked, nullptr, 1); }) == ErrorCode::exhausted);
  CHECK(select_query(domain, {}, nullptr, 3) == select_query(domain, {}, nullptr, 3));

  // Two trees that differ only in the root order disagree exactly on pairs
  // that differ on the root attribute.
  const auto car_domain = fixtures::car_domain();
  const auto base = fixtures::unconditional_example_tree();
  auto flipped = base;
  std::get<UiupBody>(flipped.body).levels[0].order = {2, 0, 1};
  const Model forest{LPForest{{base, flipped}}};
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto pair = select_query(car_domain, {}, &forest, seed);
    CHECK(pair.first[0] != pair.second[0]);
  }
}

TEST_CASE("learn config documents") {
  const auto domain = fixtures::car_domain();
  LearnConfig config;
  config.kind = TreeKind::CICP;
  config.forest_size = 5;
  config.sample_fraction = 0.5;
  config.seed = 99;
  config.max_depth = 2;
  config.constraints = {importance(domain, "B", "T")};
  CHECK(config_from_json(domain, config_to_json(domain, config)) == config);
  CHECK(code_of([&] { config_from_json(domain, {{"sample_fraction", 0}}); }) == ErrorCode::validation);
  CHECK(code_of([&] { config_from_json(domain, {{"kind", "XYZ"}}); }) == ErrorCode::validation);
}
