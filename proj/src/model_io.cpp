#include "lexloop/model_io.hpp"

#include <algorithm>
#include <map>
#include <sstream>

#include "lexloop/error.hpp"

namespace lexloop {

namespace {

using nlohmann::json;

json order_to_json(const Domain& domain, std::size_t attribute, const ValueOrder& order) {
  json values = json::array();
  for (auto v : order) values.push_back(domain.attribute(attribute).values.at(v));
  return values;
}

ValueOrder order_from_json(const Domain& domain, std::size_t attribute, const json& doc) {
  if (!doc.is_array()) fail(ErrorCode::validation, "order must be an array of value names");
  ValueOrder order;
  for (const auto& value : doc) {
    if (!value.is_string()) fail(ErrorCode::validation, "order entries must be strings");
    order.push_back(domain.value_index(attribute, value.get<std::string>()));
  }
  return order;
}

std::size_t attribute_field(const Domain& domain, const json& doc) {
  if (!doc.is_object() || !doc.contains("attribute") || !doc.at("attribute").is_string())
    fail(ErrorCode::validation, "node needs a string \"attribute\"");
  return domain.attribute_index(doc.at("attribute").get<std::string>());
}

json node_to_json(const TreeNode& node, const Domain& domain) {
  if (node.is_leaf()) return {{"leaf", true}};
  json children = json::array();
  for (const auto& child : node.children) children.push_back(node_to_json(child, domain));
  return {{"attribute", domain.attribute(node.attribute).name},
          {"order", order_to_json(domain, node.attribute, node.order)},
          {"children", std::move(children)}};
}

TreeNode node_from_json(const json& doc, const Domain& domain, std::size_t depth) {
  if (depth > domain.attribute_count()) fail(ErrorCode::validation, "tree is deeper than the attribute count");
  if (doc.is_object() && doc.value("leaf", false)) return TreeNode::leaf();
  TreeNode node;
  node.attribute = attribute_field(domain, doc);
  node.order = order_from_json(domain, node.attribute, doc.at("order"));
  if (!doc.contains("children") || !doc.at("children").is_array())
    fail(ErrorCode::validation, "internal node needs a \"children\" array");
  for (const auto& child : doc.at("children")) node.children.push_back(node_from_json(child, domain, depth + 1));
  return node;
}

std::string order_text(const Domain& domain, std::size_t attribute, const ValueOrder& order) {
  std::string text;
  for (std::size_t i = 0; i < order.size(); ++i) {
    if (i) text += " > ";
    text += domain.attribute(attribute).values.at(order[i]);
  }
  return text;
}

std::string condition_text(const Domain& domain, const PartialAssignment& condition) {
  std::string text;
  for (std::size_t i = 0; i < condition.size(); ++i) {
    if (i) text += ",";
    text += domain.attribute(condition[i].first).values.at(condition[i].second);
  }
  return text;
}

/// Table label with rows that share an order merged onto one line.
std::string table_text(const Domain& domain, const CPTable& table) {
  std::string text = domain.attribute(table.attribute).name;
  if (table.rows.empty()) return text + "\\n" + order_text(domain, table.attribute, table.default_order);
  std::vector<std::pair<ValueOrder, std::vector<std::string>>> groups;
  for (const auto& row : table.rows) {
    auto it = std::find_if(groups.begin(), groups.end(), [&](const auto& g) { return g.first == row.order; });
    if (it == groups.end()) {
      groups.push_back({row.order, {}});
      it = std::prev(groups.end());
    }
    it->second.push_back(condition_text(domain, row.condition));
  }
  for (const auto& [order, conditions] : groups) {
    text += "\\n";
    for (std::size_t i = 0; i < conditions.size(); ++i) text += (i ? " / " : "") + conditions[i];
    text += ": " + order_text(domain, table.attribute, order);
  }
  text += "\\notherwise: " + order_text(domain, table.attribute, table.default_order);
  return text;
}

std::size_t subtree_size(const TreeNode& node) {
  std::size_t n = 1;
  for (const auto& child : node.children) n += subtree_size(child);
  return n;
}

std::uint64_t subtree_leaves(const TreeNode& node) {
  if (node.is_leaf()) return 1;
  std::uint64_t n = 0;
  for (const auto& child : node.children) n += subtree_leaves(child);
  return n;
}

class DotWriter {
 public:
  DotWriter(const Domain& domain, std::size_t depth_limit) : domain_(domain), depth_limit_(depth_limit) {
    out_ << "digraph lptree {\n  node [shape=ellipse];\n";
  }

  std::string node(const std::string& label, const std::string& extra = {}) {
    const auto id = "n" + std::to_string(next_++);
    out_ << "  " << id << " [label=\"" << label << "\"" << extra << "];\n";
    return id;
  }

  void edge(const std::string& from, const std::string& to, const std::string& label = {}) {
    out_ << "  " << from << " -> " << to;
    if (!label.empty()) out_ << " [label=\"" << label << "\"]";
    out_ << ";\n";
  }

  std::string stub(const std::string& label, std::size_t hidden) {
    return node(label + "\\n(+" + std::to_string(hidden) + " hidden)",
                ", style=dashed, class=\"collapsed\", hidden=\"" + std::to_string(hidden) + "\"");
  }

  std::string leaf(std::uint64_t index) { return node(std::to_string(index), ", shape=box"); }

  std::string cicp(const TreeNode& node, std::size_t depth, std::uint64_t first_leaf) {
    if (depth >= depth_limit_)
      return node.is_leaf() ? stub("leaf " + std::to_string(first_leaf), 0)
                            : stub(domain_.attribute(node.attribute).name, subtree_size(node) - 1);
    if (node.is_leaf()) return leaf(first_leaf);
    const auto& name = domain_.attribute(node.attribute).name;
    const auto id = this->node(name + "\\n" + order_text(domain_, node.attribute, node.order));
    std::uint64_t offset = first_leaf;
    for (std::size_t k = 0; k < node.children.size(); ++k) {
      const auto child = cicp(node.children[k], depth + 1, offset);
      edge(id, child, domain_.attribute(node.attribute).values.at(node.order[k]));
      offset += subtree_leaves(node.children[k]);
    }
    return id;
  }

  template <typename Levels, typename Label>
  void chain(const Levels& levels, Label label) {
    std::string previous;
    for (std::size_t d = 0; d < levels.size(); ++d) {
      std::string id;
      if (d >= depth_limit_) {
        id = stub(domain_.attribute(levels[d].attribute).name, levels.size() - d - 1);
        if (!previous.empty()) edge(previous, id);
        break;
      }
      id = node(label(levels[d]), ", shape=box, style=rounded");
      if (!previous.empty()) edge(previous, id);
      previous = id;
    }
  }

  std::string finish() {
    out_ << "}\n";
    return out_.str();
  }

 private:
  const Domain& domain_;
  std::size_t depth_limit_;
  std::size_t next_ = 0;
  std::ostringstream out_;
};

}  // namespace

json tree_to_json(const LPTree& tree, const Domain& domain) {
  json doc = {{"format", kModelFormat}, {"kind", to_string(tree.kind())}};
  if (const auto* body = std::get_if<UiupBody>(&tree.body)) {
    json levels = json::array();
    for (const auto& level : body->levels)
      levels.push_back({{"attribute", domain.attribute(level.attribute).name},
                        {"order", order_to_json(domain, level.attribute, level.order)}});
    doc["levels"] = std::move(levels);
  } else if (const auto* body = std::get_if<UicpBody>(&tree.body)) {
    json levels = json::array();
    for (const auto& table : body->levels) {
      json rows = json::array();
      for (const auto& row : table.rows) {
        json condition = json::object();
        for (const auto& [attr, value] : row.condition)
          condition[domain.attribute(attr).name] = domain.attribute(attr).values.at(value);
        rows.push_back({{"condition", std::move(condition)}, {"order", order_to_json(domain, table.attribute, row.order)}});
      }
      levels.push_back({{"attribute", domain.attribute(table.attribute).name},
                        {"rows", std::move(rows)},
                        {"default", order_to_json(domain, table.attribute, table.default_order)}});
    }
    doc["levels"] = std::move(levels);
  } else {
    doc["root"] = node_to_json(std::get<CicpBody>(tree.body).root, domain);
  }
  return doc;
}

LPTree tree_from_json(const json& doc, const Domain& domain) {
  if (!doc.is_object()) fail(ErrorCode::validation, "model document must be an object");
  if (doc.value("format", std::string{}) != kModelFormat)
    fail(ErrorCode::validation, "model document needs format \"" + std::string(kModelFormat) + "\"");
  if (!doc.contains("kind") || !doc.at("kind").is_string()) fail(ErrorCode::validation, "model document needs a kind");
  LPTree tree;
  try {
    switch (tree_kind_from_string(doc.at("kind").get<std::string>())) {
      case TreeKind::UIUP: {
        std::vector<LocalOrder> levels;
        for (const auto& level : doc.at("levels")) {
          const auto a = attribute_field(domain, level);
          levels.push_back({a, order_from_json(domain, a, level.at("order"))});
        }
        tree = LPTree::uiup(std::move(levels));
        break;
      }
      case TreeKind::UICP: {
        std::vector<CPTable> levels;
        for (const auto& level : doc.at("levels")) {
          CPTable table;
          table.attribute = attribute_field(domain, level);
          table.default_order = order_from_json(domain, table.attribute, level.at("default"));
          for (const auto& row : level.value("rows", json::array())) {
            CPRow parsed;
            for (const auto& [name, value] : row.at("condition").items()) {
              const auto a = domain.attribute_index(name);
              if (!value.is_string()) fail(ErrorCode::validation, "condition values must be strings");
              parsed.condition.emplace_back(a, domain.value_index(a, value.get<std::string>()));
            }
            std::sort(parsed.condition.begin(), parsed.condition.end());
            parsed.order = order_from_json(domain, table.attribute, row.at("order"));
            table.rows.push_back(std::move(parsed));
          }
          levels.push_back(std::move(table));
        }
        tree = LPTree::uicp(std::move(levels));
        break;
      }
      case TreeKind::CICP:
        tree = LPTree::cicp(node_from_json(doc.at("root"), domain, 0));
        break;
    }
  } catch (const json::exception& e) {
    fail(ErrorCode::validation, std::string("malformed model document: ") + e.what());
  }
  require_valid(tree, domain);
  return tree;
}

json forest_to_json(const LPForest& forest, const Domain& domain) {
  json trees = json::array();
  for (const auto& tree : forest.trees) trees.push_back(tree_to_json(tree, domain));
  return {{"format", kForestFormat}, {"trees", std::move(trees)}};
}

LPForest forest_from_json(const json& doc, const Domain& domain) {
  if (!doc.is_object() || doc.value("format", std::string{}) != kForestFormat)
    fail(ErrorCode::validation, "forest document needs format \"" + std::string(kForestFormat) + "\"");
  if (!doc.contains("trees") || !doc.at("trees").is_array())
    fail(ErrorCode::validation, "forest document needs a \"trees\" array");
  LPForest forest;
  for (const auto& tree : doc.at("trees")) forest.trees.push_back(tree_from_json(tree, domain));
  require_valid(forest, domain);
  return forest;
}

json model_to_json(const Model& model, const Domain& domain) {
  if (const auto* tree = std::get_if<LPTree>(&model)) return tree_to_json(*tree, domain);
  return forest_to_json(std::get<LPForest>(model), domain);
}

Model model_from_json(const json& doc, const Domain& domain) {
  if (doc.is_object() && doc.value("format", std::string{}) == kForestFormat) return forest_from_json(doc, domain);
  return tree_from_json(doc, domain);
}

std::string serialize_tree(const LPTree& tree, const Domain& domain) { return tree_to_json(tree, domain).dump(2); }

namespace {
json parse_document(std::string_view document) {
  try {
    return json::parse(document);
  } catch (const json::parse_error& e) {
    fail(ErrorCode::validation, std::string("malformed model document: ") + e.what());
  }
}
}  // namespace

LPTree deserialize_tree(std::string_view document, const Domain& domain) {
  return tree_from_json(parse_document(document), domain);
}

Model deserialize_model(std::string_view document, const Domain& domain) {
  return model_from_json(parse_document(document), domain);
}

std::string to_graph_description(const LPTree& tree, const Domain& domain, std::size_t depth_limit) {
  DotWriter dot(domain, depth_limit);
  if (const auto* body = std::get_if<UiupBody>(&tree.body)) {
    dot.chain(body->levels, [&](const LocalOrder& level) {
      return domain.attribute(level.attribute).name + "\\n" + order_text(domain, level.attribute, level.order);
    });
  } else if (const auto* body = std::get_if<UicpBody>(&tree.body)) {
    dot.chain(body->levels, [&](const CPTable& table) { return table_text(domain, table); });
  } else {
    dot.cicp(std::get<CicpBody>(tree.body).root, 0, 0);
  }
  return dot.finish();
}

}  // namespace lexloop
