#pragma once

#include <string>
#include <vector>

#include "lexloop/domain.hpp"
#include "lexloop/lp_tree.hpp"

namespace fixtures {

using namespace lexloop;

inline Domain car_domain() {
  return Domain({{"B", {"v", "s", "r"}}, {"M", {"h", "f"}}, {"P", {"l", "d", "g"}}, {"T", {"a", "m"}}});
}

inline Domain car_evaluation_domain() {
  return Domain({{"BuyingPrice", {"vhigh", "high", "med", "low"}},
                 {"Maintenance", {"vhigh", "high", "med", "low"}},
                 {"Doors", {"2", "3", "4", "5more"}},
                 {"Persons", {"2", "4", "more"}},
                 {"Luggage", {"small", "med", "big"}},
                 {"Safety", {"low", "med", "high"}}});
}

inline Alternative car(const Domain& domain, const std::string& row) { return parse_alternative_row(domain, row); }

inline ValueOrder order(const Domain& domain, std::size_t attribute, const std::vector<std::string>& names) {
  ValueOrder out;
  for (const auto& n : names) out.push_back(domain.value_index(attribute, n));
  return out;
}

// Car domain indices: B=0 {v,s,r}, M=1 {h,f}, P=2 {l,d,g}, T=3 {a,m}.
inline TreeNode internal(std::size_t attribute, ValueOrder values, std::vector<TreeNode> children) {
  TreeNode node;
  node.attribute = attribute;
  node.order = std::move(values);
  node.children = std::move(children);
  return node;
}

inline std::vector<TreeNode> leaves(std::size_t n) { return std::vector<TreeNode>(n, TreeNode::leaf()); }

/// Minivans split on price (d>l>g), sedans on make (h>f), sports cars form one leaf.
inline LPTree worked_example_tree() {
  return LPTree::cicp(internal(0, {0, 1, 2},
                               {internal(2, {1, 0, 2}, leaves(3)), internal(1, {0, 1}, leaves(2)), TreeNode::leaf()}));
}

/// B: s>v>r, M: f>h, P: d>g>l
inline LPTree unconditional_example_tree() {
  return LPTree::uiup({{0, {1, 0, 2}}, {1, {1, 0}}, {2, {1, 2, 0}}});
}

/// B: s>v>r; M given B: s h>f, v f>h, r h>f; P given M: h d>l>g, f l>d>g
inline LPTree conditional_example_tree() {
  CPTable b{0, {}, {1, 0, 2}};
  CPTable m{1, {{{{0, 1}}, {0, 1}}, {{{0, 0}}, {1, 0}}, {{{0, 2}}, {0, 1}}}, {0, 1}};
  CPTable p{2, {{{{1, 0}}, {1, 0, 2}}, {{{1, 1}}, {0, 1, 2}}}, {1, 0, 2}};
  return LPTree::uicp({b, m, p});
}

inline Domain two_by_two() { return Domain({{"A", {"a1", "a2"}}, {"B", {"b1", "b2"}}}); }

// Over two_by_two().
inline LPTree tree_t1() { return LPTree::uiup({{0, {0, 1}}, {1, {0, 1}}}); }
inline LPTree tree_t2() { return LPTree::uiup({{1, {0, 1}}, {0, {0, 1}}}); }
inline LPTree tree_t3() { return LPTree::uiup({{0, {1, 0}}, {1, {0, 1}}}); }

}  // namespace fixtures
