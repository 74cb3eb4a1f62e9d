#include <doctest.h>

#include "../fixtures.hpp"
#include "../oracles.hpp"
#include "lexloop/error.hpp"
#include "lexloop/synth.hpp"

using namespace lexloop;
using fixtures::car;

TEST_CASE("car example tree: traces and comparisons") {
  const auto domain = fixtures::car_domain();
  const auto tree = fixtures::worked_example_tree();
  CHECK(validate_tree(tree, domain).empty());
  CHECK(leaf_count(tree) == 6);
  CHECK(trace(tree, car(domain, "s,h,l,a")) == 3);
  CHECK(trace(tree, car(domain, "s,f,l,a")) == 4);
  CHECK(trace(tree, car(domain, "r,h,g,m")) == 5);
  CHECK(trace(tree, car(domain, "v,f,d,m")) == 0);
  CHECK(compare(tree, car(domain, "s,h,l,a"), car(domain, "s,f,l,a")) == ComparisonOutcome::first_preferred);
  CHECK(compare(tree, car(domain, "v,h,d,a"), car(domain, "v,f,d,m")) == ComparisonOutcome::equivalent);
  CHECK(compare(tree, car(domain, "r,h,d,a"), car(domain, "r,h,d,a")) == ComparisonOutcome::equivalent);
}

TEST_CASE("car example induced classes match per-leaf completion counts") {
  const auto domain = fixtures::car_domain();
  const auto tree = fixtures::worked_example_tree();
  const auto classes = induced_order(tree, domain);
  std::vector<std::uint64_t> sizes;
  for (const auto& c : classes) sizes.push_back(c.size());
  CHECK(sizes == oracles::class_sizes(tree, domain));
  // Minivan and sedan leaves fix two attributes; the sports leaf fixes one.
  CHECK(sizes == std::vector<std::uint64_t>{4, 4, 4, 6, 6, 12});
}

TEST_CASE("structural violations") {
  const auto domain = fixtures::car_domain();
  using fixtures::internal;
  using fixtures::leaves;
  CHECK_FALSE(validate_tree(LPTree::cicp(internal(0, {0, 1}, leaves(2))), domain).empty());
  CHECK_FALSE(
      validate_tree(LPTree::cicp(internal(2, {0, 1, 2}, {internal(2, {0, 1, 2}, leaves(3)), TreeNode::leaf(), TreeNode::leaf()})),
                    domain)
          .empty());
  CHECK_FALSE(validate_tree(LPTree::uiup({{0, {0, 1, 2}}, {0, {0, 1, 2}}}), domain).empty());
  CHECK_FALSE(validate_tree(LPTree::uiup({{0, {0, 0, 2}}}), domain).empty());
  CHECK_FALSE(validate_tree(LPTree::uiup({{7, {0, 1}}}), domain).empty());
  // A row conditioned on a non-ancestor.
  CHECK_FALSE(validate_tree(LPTree::uicp({{0, {}, {0, 1, 2}}, {1, {{{{2, 0}}, {0, 1}}}, {0, 1}}}), domain).empty());
  // Overlapping rows.
  CHECK_FALSE(validate_tree(LPTree::uicp({{0, {}, {0, 1, 2}}, {1, {{{{0, 0}}, {0, 1}}, {{{0, 0}}, {1, 0}}}, {0, 1}}}), domain)
                  .empty());
  CHECK_THROWS_AS(require_valid(LPTree::uiup({{0, {0, 1}}}), domain), Error);
}

TEST_CASE("conditional and unconditional example trees expand with identical traces") {
  const auto domain = fixtures::car_domain();
  for (const auto& tree : {fixtures::unconditional_example_tree(), fixtures::conditional_example_tree()}) {
    REQUIRE(validate_tree(tree, domain).empty());
    const auto expanded = expand(tree);
    CHECK(expanded.kind() == TreeKind::CICP);
    for (const auto& alt : enumerate_alternatives(domain, 100)) CHECK(trace(expanded, alt) == trace(tree, alt));
  }
  const auto expanded_b = expand(fixtures::conditional_example_tree());
  const auto& root = std::get<CicpBody>(expanded_b.body).root;
  CHECK(root.children[0].order == ValueOrder{0, 1});  // sedans: h>f
  CHECK(root.children[1].order == ValueOrder{1, 0});  // minivans: f>h
}

TEST_CASE("collapse recovers the compact kinds") {
  const auto domain = fixtures::car_domain();
  CHECK(collapse(expand(fixtures::unconditional_example_tree())) == fixtures::unconditional_example_tree());
  const auto uicp = collapse(expand(fixtures::conditional_example_tree()));
  REQUIRE(uicp.kind() == TreeKind::UICP);
  CHECK(same_preorder(uicp, fixtures::conditional_example_tree(), domain));
  const auto& m_level = std::get<UicpBody>(uicp.body).levels.at(1);
  CHECK(m_level.attribute == 1);
  for (const auto& row : m_level.rows) {
    REQUIRE(row.condition.size() == 1);
    CHECK(row.condition[0].first == 0);
  }
  const auto fig1 = collapse(fixtures::worked_example_tree());
  CHECK(fig1 == fixtures::worked_example_tree());
  CHECK(fig1.kind() == TreeKind::CICP);
  CHECK(expand(fixtures::worked_example_tree()) == fixtures::worked_example_tree());
}

TEST_CASE("expansion budget") {
  std::vector<AttributeSpec> specs;
  for (int i = 0; i < 24; ++i) specs.push_back({"X" + std::to_string(i), {"0", "1"}});
  const Domain domain(specs);
  std::vector<LocalOrder> levels;
  for (std::size_t i = 0; i < 24; ++i) levels.push_back({i, {0, 1}});
  const auto tree = LPTree::uiup(levels);
  CHECK(trace(tree, Alternative{std::vector<std::size_t>(24, 1)}) == (std::uint64_t{1} << 24) - 1);
  try {
    expand(tree, 1000);
    FAIL("expected unsupported scale");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::unsupported_scale);
  }
}

TEST_CASE("random trees: compare, trace, expand and collapse agree") {
  for (std::uint64_t seed = 0; seed < 60; ++seed) {
    const auto domain = random_domain(seed, 3, 3);
    for (auto kind : {TreeKind::UIUP, TreeKind::UICP, TreeKind::CICP}) {
      const auto tree = random_tree(domain, kind, seed * 7 + 1, {0.3, 2});
      REQUIRE(validate_tree(tree, domain).empty());
      const auto all = oracles::all_alternatives(domain);
      const auto expanded = expand(tree);
      for (const auto& x : all) {
        CHECK(trace(expanded, x) == trace(tree, x));
        for (const auto& y : all) {
          const auto tx = trace(tree, x), ty = trace(tree, y);
          const auto expected = tx < ty   ? ComparisonOutcome::first_preferred
                                : ty < tx ? ComparisonOutcome::second_preferred
                                          : ComparisonOutcome::equivalent;
          CHECK(compare(tree, x, y) == expected);
        }
      }
      const auto collapsed = collapse(expanded);
      CHECK(static_cast<int>(collapsed.kind()) <= static_cast<int>(kind));
      CHECK(oracles::same_preorder(collapsed, tree, domain));
    }
  }
}

TEST_CASE("forest voting") {
  const auto domain = fixtures::two_by_two();
  const auto a1b2 = car(domain, "a1,b2");
  const auto a2b1 = car(domain, "a2,b1");
  const LPForest single{{fixtures::tree_t1()}};
  CHECK(forest_compare(single, a1b2, a2b1) == compare(fixtures::tree_t1(), a1b2, a2b1));
  // t1 and t3 prefer a1b2 over a2b1 differently; t2 prefers a2b1.
  CHECK(forest_compare({{fixtures::tree_t1(), fixtures::tree_t1(), fixtures::tree_t2()}}, a1b2, a2b1) ==
        ComparisonOutcome::first_preferred);
  CHECK(forest_compare({{fixtures::tree_t1(), fixtures::tree_t2()}}, a1b2, a2b1) == ComparisonOutcome::equivalent);
}

TEST_CASE("borda ranking over a candidate list") {
  const auto domain = fixtures::two_by_two();
  const auto all = enumerate_alternatives(domain, 10);
  const auto ranked = borda_rank({{fixtures::tree_t1()}}, all, domain);
  REQUIRE(ranked.size() == 4);
  std::vector<double> scores;
  for (const auto& r : ranked) scores.push_back(r.score);
  CHECK(scores == std::vector<double>{3, 2, 1, 0});
  CHECK(ranked[0].alternative == car(domain, "a1,b1"));
  CHECK(ranked[3].alternative == car(domain, "a2,b2"));

  const auto reversed = LPTree::uiup({{0, {1, 0}}, {1, {1, 0}}});
  const std::vector<Alternative> two = {car(domain, "a2,b2"), car(domain, "a1,b1")};
  const auto tied = borda_rank({{fixtures::tree_t1(), reversed}}, two, domain);
  CHECK(tied[0].score == tied[1].score);
  CHECK(tied[0].alternative == car(domain, "a1,b1"));
}
