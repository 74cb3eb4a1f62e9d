#pragma once

#include <string>
#include <string_view>

#include <json.hpp>

#include "lexloop/lp_tree.hpp"

namespace lexloop {

inline constexpr std::string_view kModelFormat = "lexloop-model/1";
inline constexpr std::string_view kForestFormat = "lexloop-forest/1";

nlohmann::json tree_to_json(const LPTree& tree, const Domain& domain);
LPTree tree_from_json(const nlohmann::json& doc, const Domain& domain);

nlohmann::json forest_to_json(const LPForest& forest, const Domain& domain);
LPForest forest_from_json(const nlohmann::json& doc, const Domain& domain);

nlohmann::json model_to_json(const Model& model, const Domain& domain);
/// Dispatches on the document's format tag.
Model model_from_json(const nlohmann::json& doc, const Domain& domain);

std::string serialize_tree(const LPTree& tree, const Domain& domain);
LPTree deserialize_tree(std::string_view document, const Domain& domain);
Model deserialize_model(std::string_view document, const Domain& domain);

/// Graphviz DOT text. Levels at depth >= depth_limit are folded into dashed
/// stubs that report how many nodes they hide.
std::string to_graph_description(const LPTree& tree, const Domain& domain, std::size_t depth_limit);

}  // namespace lexloop
