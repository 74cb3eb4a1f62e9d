#include "lexloop/domain.hpp"

#include <algorithm>
#include <numeric>
#include <set>
#include <sstream>

#include "lexloop/error.hpp"

namespace lexloop {

namespace {

constexpr char kKeySeparator = '|';

std::string_view trim(std::string_view text) {
  const auto first = text.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = text.find_last_not_of(" \t\r");
  return text.substr(first, last - first + 1);
}

std::vector<std::string_view> split(std::string_view text, char delimiter) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  while (true) {
    const auto pos = text.find(delimiter, start);
    if (pos == std::string_view::npos) {
      parts.push_back(trim(text.substr(start)));
      return parts;
    }
    parts.push_back(trim(text.substr(start, pos - start)));
    start = pos + 1;
  }
}

std::size_t require_attribute(const Domain& domain, const nlohmann::json& doc, const char* field) {
  if (!doc.contains(field) || !doc.at(field).is_string())
    fail(ErrorCode::validation, std::string("constraint field '") + field + "' must be a string");
  return domain.attribute_index(doc.at(field).get<std::string>());
}

}  // namespace

bool is_identifier(std::string_view text) {
  if (text.empty()) return false;
  return std::all_of(text.begin(), text.end(), [](char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
           c == '_' || c == '-' || c == '.' || c == '+';
  });
}

Domain::Domain(std::vector<AttributeSpec> attributes, DomainLimits limits)
    : attributes_(std::move(attributes)) {
  if (attributes_.empty()) fail(ErrorCode::validation, "domain must declare at least one attribute");

  std::set<std::string> names;
  for (const auto& spec : attributes_) {
    if (!is_identifier(spec.name))
      fail(ErrorCode::validation, "invalid attribute name '" + spec.name + "'");
    if (!names.insert(spec.name).second)
      fail(ErrorCode::validation, "duplicate attribute name '" + spec.name + "'");
    if (spec.values.size() < 2)
      fail(ErrorCode::validation, "attribute '" + spec.name + "' needs at least 2 values");
    if (spec.values.size() > limits.max_values_per_attribute)
      fail(ErrorCode::validation, "attribute '" + spec.name + "' exceeds " +
                                      std::to_string(limits.max_values_per_attribute) + " values");
    std::set<std::string> values;
    for (const auto& value : spec.values) {
      if (!is_identifier(value))
        fail(ErrorCode::validation, "invalid value name '" + value + "' on attribute '" + spec.name + "'");
      if (!values.insert(value).second)
        fail(ErrorCode::validation, "duplicate value '" + value + "' on attribute '" + spec.name + "'");
    }
    if (__builtin_mul_overflow(size_, static_cast<std::uint64_t>(spec.values.size()), &size_))
      fail(ErrorCode::validation, "domain size overflows 64 bits");
  }

  // Keys compare as strings. For every attribute but the last, the name is
  // followed by the separator, which sorts above every identifier character.
  tiebreak_rank_.resize(attributes_.size());
  for (std::size_t a = 0; a < attributes_.size(); ++a) {
    const auto& values = attributes_[a].values;
    const bool last = a + 1 == attributes_.size();
    std::vector<std::size_t> order(values.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
      if (last) return values[x] < values[y];
      return values[x] + kKeySeparator < values[y] + kKeySeparator;
    });
    tiebreak_rank_[a].resize(values.size());
    for (std::size_t r = 0; r < order.size(); ++r) tiebreak_rank_[a][order[r]] = r;
  }
}

std::optional<std::size_t> Domain::find_attribute(std::string_view name) const {
  for (std::size_t i = 0; i < attributes_.size(); ++i)
    if (attributes_[i].name == name) return i;
  return std::nullopt;
}

std::optional<std::size_t> Domain::find_value(std::size_t attribute, std::string_view name) const {
  const auto& values = attributes_.at(attribute).values;
  for (std::size_t i = 0; i < values.size(); ++i)
    if (values[i] == name) return i;
  return std::nullopt;
}

std::size_t Domain::attribute_index(std::string_view name) const {
  if (auto index = find_attribute(name)) return *index;
  fail(ErrorCode::validation, "unknown attribute '" + std::string(name) + "'");
}

std::size_t Domain::value_index(std::size_t attribute, std::string_view name) const {
  if (auto index = find_value(attribute, name)) return *index;
  fail(ErrorCode::validation, "unknown value '" + std::string(name) + "' for attribute '" +
                                  attributes_.at(attribute).name + "'");
}

// Documents -----------------------------------------------------------------

Domain domain_from_json(const nlohmann::json& doc, DomainLimits limits) {
  if (!doc.is_object() || !doc.contains("attributes") || !doc.at("attributes").is_array())
    fail(ErrorCode::validation, "domain document needs an \"attributes\" array");
  std::vector<AttributeSpec> specs;
  for (const auto& entry : doc.at("attributes")) {
    if (!entry.is_object() || !entry.contains("name") || !entry.at("name").is_string() ||
        !entry.contains("values") || !entry.at("values").is_array())
      fail(ErrorCode::validation, "each attribute needs a string \"name\" and a \"values\" array");
    AttributeSpec spec{entry.at("name").get<std::string>(), {}};
    for (const auto& value : entry.at("values")) {
      if (!value.is_string())
        fail(ErrorCode::validation, "values of attribute '" + spec.name + "' must be strings");
      spec.values.push_back(value.get<std::string>());
    }
    specs.push_back(std::move(spec));
  }
  return Domain(std::move(specs), limits);
}

Domain parse_domain(std::string_view text, DomainLimits limits) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    fail(ErrorCode::validation, std::string("malformed domain document: ") + e.what());
  }
  return domain_from_json(doc, limits);
}

nlohmann::json domain_to_json(const Domain& domain) {
  nlohmann::json attributes = nlohmann::json::array();
  for (const auto& spec : domain.attributes())
    attributes.push_back({{"name", spec.name}, {"values", spec.values}});
  return {{"attributes", std::move(attributes)}};
}

std::string serialize_domain(const Domain& domain) { return domain_to_json(domain).dump(2); }

// Alternatives --------------------------------------------------------------

Alternative validate_alternative(const Domain& domain, const std::map<std::string, std::string>& raw) {
  for (const auto& [name, value] : raw)
    if (!domain.find_attribute(name)) fail(ErrorCode::validation, "unknown attribute '" + name + "'");
  Alternative alternative;
  alternative.values.reserve(domain.attribute_count());
  for (std::size_t a = 0; a < domain.attribute_count(); ++a) {
    const auto& name = domain.attribute(a).name;
    const auto it = raw.find(name);
    if (it == raw.end()) fail(ErrorCode::validation, "missing attribute '" + name + "'");
    alternative.values.push_back(domain.value_index(a, it->second));
  }
  return alternative;
}

Alternative alternative_from_json(const Domain& domain, const nlohmann::json& doc) {
  if (!doc.is_object()) fail(ErrorCode::validation, "alternative must be an object of attribute -> value");
  std::map<std::string, std::string> raw;
  for (const auto& [name, value] : doc.items()) {
    if (!value.is_string()) fail(ErrorCode::validation, "value of '" + name + "' must be a string");
    raw.emplace(name, value.get<std::string>());
  }
  return validate_alternative(domain, raw);
}

nlohmann::json alternative_to_json(const Domain& domain, const Alternative& alternative) {
  nlohmann::json doc = nlohmann::json::object();
  for (std::size_t a = 0; a < domain.attribute_count(); ++a)
    doc[domain.attribute(a).name] = domain.attribute(a).values.at(alternative[a]);
  return doc;
}

Alternative parse_alternative_row(const Domain& domain, std::string_view row) {
  const auto cells = split(row, ',');
  if (cells.size() != domain.attribute_count())
    fail(ErrorCode::validation, "expected " + std::to_string(domain.attribute_count()) +
                                    " values, found " + std::to_string(cells.size()));
  Alternative alternative;
  for (std::size_t a = 0; a < cells.size(); ++a)
    alternative.values.push_back(domain.value_index(a, cells[a]));
  return alternative;
}

std::string format_alternative_row(const Domain& domain, const Alternative& alternative) {
  std::string out;
  for (std::size_t a = 0; a < domain.attribute_count(); ++a) {
    if (a) out += ',';
    out += domain.attribute(a).values.at(alternative[a]);
  }
  return out;
}

std::vector<ComparisonExample> parse_examples(std::string_view text, const Domain& domain) {
  std::vector<ComparisonExample> examples;
  std::vector<std::string> problems;
  std::size_t line_number = 0;
  for (auto line : split(text, '\n')) {
    ++line_number;
    if (line.empty() || line.front() == '#') continue;
    const auto sides = split(line, '>');
    try {
      if (sides.size() != 2) fail(ErrorCode::validation, "expected exactly one '>' separator");
      ComparisonExample example{parse_alternative_row(domain, sides[0]),
                                parse_alternative_row(domain, sides[1]), ExampleSource::file_import};
      if (example.better == example.worse) fail(ErrorCode::validation, "both sides are the same alternative");
      examples.push_back(std::move(example));
    } catch (const Error& e) {
      problems.push_back("row " + std::to_string(line_number) + ": " + e.what());
    }
  }
  if (!problems.empty()) {
    std::string message = "invalid example rows:";
    for (const auto& problem : problems) message += "\n  " + problem;
    fail(ErrorCode::validation, message);
  }
  return examples;
}

std::string serialize_examples(const Domain& domain, std::span<const ComparisonExample> examples) {
  std::string out;
  for (const auto& example : examples) {
    out += format_alternative_row(domain, example.better);
    out += " > ";
    out += format_alternative_row(domain, example.worse);
    out += '\n';
  }
  return out;
}

// Constraints ---------------------------------------------------------------

void validate_constraint(const Domain& domain, const FeedbackConstraint& constraint) {
  const auto p = domain.attribute_count();
  if (const auto* c = std::get_if<ImportanceConstraint>(&constraint)) {
    if (c->more_important >= p || c->less_important >= p)
      fail(ErrorCode::validation, "importance constraint references an unknown attribute");
    if (c->more_important == c->less_important)
      fail(ErrorCode::validation, "importance constraint needs two distinct attributes");
    return;
  }
  const auto& c = std::get<LocalOrderConstraint>(constraint);
  if (c.attribute >= p) fail(ErrorCode::validation, "local-order constraint references an unknown attribute");
  const auto n = domain.value_count(c.attribute);
  if (c.preferred >= n || c.dispreferred >= n)
    fail(ErrorCode::validation, "local-order constraint references an unknown value");
  if (c.preferred == c.dispreferred)
    fail(ErrorCode::validation, "local-order constraint needs two distinct values");
  if (c.condition) {
    if (c.condition->attribute >= p || c.condition->value >= domain.value_count(c.condition->attribute))
      fail(ErrorCode::validation, "constraint condition references an unknown attribute or value");
    if (c.condition->attribute == c.attribute)
      fail(ErrorCode::validation, "constraint condition must be on a different attribute");
  }
}

FeedbackConstraint importance(const Domain& domain, std::string_view more, std::string_view less) {
  FeedbackConstraint c = ImportanceConstraint{domain.attribute_index(more), domain.attribute_index(less)};
  validate_constraint(domain, c);
  return c;
}

FeedbackConstraint local_order(const Domain& domain, std::string_view attribute, std::string_view preferred,
                               std::string_view dispreferred,
                               std::optional<std::pair<std::string, std::string>> condition) {
  const auto a = domain.attribute_index(attribute);
  LocalOrderConstraint c{a, domain.value_index(a, preferred), domain.value_index(a, dispreferred), std::nullopt};
  if (condition) {
    const auto ca = domain.attribute_index(condition->first);
    c.condition = Condition{ca, domain.value_index(ca, condition->second)};
  }
  FeedbackConstraint result = c;
  validate_constraint(domain, result);
  return result;
}

FeedbackConstraint constraint_from_json(const Domain& domain, const nlohmann::json& doc) {
  if (!doc.is_object() || !doc.contains("kind") || !doc.at("kind").is_string())
    fail(ErrorCode::validation, "constraint needs a \"kind\" field");
  const auto kind = doc.at("kind").get<std::string>();
  FeedbackConstraint result;
  if (kind == "importance") {
    result = ImportanceConstraint{require_attribute(domain, doc, "more_important"),
                                  require_attribute(domain, doc, "less_important")};
  } else if (kind == "local-order") {
    const auto a = require_attribute(domain, doc, "attribute");
    auto value = [&](const char* field) {
      if (!doc.contains(field) || !doc.at(field).is_string())
        fail(ErrorCode::validation, std::string("constraint field '") + field + "' must be a string");
      return domain.value_index(a, doc.at(field).get<std::string>());
    };
    LocalOrderConstraint c{a, value("preferred"), value("dispreferred"), std::nullopt};
    if (doc.contains("condition") && !doc.at("condition").is_null()) {
      const auto& cond = doc.at("condition");
      const auto ca = require_attribute(domain, cond, "attribute");
      if (!cond.contains("value") || !cond.at("value").is_string())
        fail(ErrorCode::validation, "constraint condition needs a string \"value\"");
      c.condition = Condition{ca, domain.value_index(ca, cond.at("value").get<std::string>())};
    }
    result = c;
  } else {
    fail(ErrorCode::validation, "unknown constraint kind '" + kind + "'");
  }
  validate_constraint(domain, result);
  return result;
}

nlohmann::json constraint_to_json(const Domain& domain, const FeedbackConstraint& constraint) {
  if (const auto* c = std::get_if<ImportanceConstraint>(&constraint))
    return {{"kind", "importance"},
            {"more_important", domain.attribute(c->more_important).name},
            {"less_important", domain.attribute(c->less_important).name}};
  const auto& c = std::get<LocalOrderConstraint>(constraint);
  const auto& spec = domain.attribute(c.attribute);
  nlohmann::json doc = {{"kind", "local-order"},
                        {"attribute", spec.name},
                        {"preferred", spec.values.at(c.preferred)},
                        {"dispreferred", spec.values.at(c.dispreferred)}};
  if (c.condition) {
    const auto& cond = domain.attribute(c.condition->attribute);
    doc["condition"] = {{"attribute", cond.name}, {"value", cond.values.at(c.condition->value)}};
  }
  return doc;
}

std::vector<FeedbackConstraint> constraints_from_json(const Domain& domain, const nlohmann::json& doc) {
  const nlohmann::json* list = &doc;
  if (doc.is_object() && doc.contains("constraints")) list = &doc.at("constraints");
  if (!list->is_array()) fail(ErrorCode::validation, "constraints document must be an array");
  std::vector<FeedbackConstraint> constraints;
  for (const auto& entry : *list) constraints.push_back(constraint_from_json(domain, entry));
  return constraints;
}

std::vector<FeedbackConstraint> parse_constraints(std::string_view text, const Domain& domain) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    fail(ErrorCode::validation, std::string("malformed constraints document: ") + e.what());
  }
  return constraints_from_json(domain, doc);
}

nlohmann::json constraints_to_json(const Domain& domain, std::span<const FeedbackConstraint> constraints) {
  nlohmann::json list = nlohmann::json::array();
  for (const auto& c : constraints) list.push_back(constraint_to_json(domain, c));
  return {{"constraints", std::move(list)}};
}

// Enumeration ---------------------------------------------------------------

std::vector<Alternative> enumerate_alternatives(const Domain& domain, std::uint64_t limit) {
  if (domain.size() > limit)
    fail(ErrorCode::unsupported_scale, "domain has " + std::to_string(domain.size()) +
                                           " alternatives, enumeration limit is " + std::to_string(limit));
  std::vector<Alternative> all;
  all.reserve(domain.size());
  Alternative current{std::vector<std::size_t>(domain.attribute_count(), 0)};
  for (std::uint64_t i = 0; i < domain.size(); ++i) {
    all.push_back(current);
    // Odometer increment, rightmost attribute fastest.
    for (std::size_t a = domain.attribute_count(); a-- > 0;) {
      if (++current.values[a] < domain.value_count(a)) break;
      current.values[a] = 0;
    }
  }
  return all;
}

std::uint64_t alternative_ordinal(const Domain& domain, const Alternative& alternative) {
  std::uint64_t ordinal = 0;
  for (std::size_t a = 0; a < domain.attribute_count(); ++a)
    ordinal = ordinal * domain.value_count(a) + alternative[a];
  return ordinal;
}

std::string canonical_key(const Alternative& alternative, const Domain& domain) {
  std::string key;
  for (std::size_t a = 0; a < domain.attribute_count(); ++a) {
    if (a) key += kKeySeparator;
    key += domain.attribute(a).values.at(alternative[a]);
  }
  return key;
}

}  // namespace lexloop
