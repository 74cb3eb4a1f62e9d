#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

namespace lexloop {

inline constexpr std::size_t kDefaultMaxValuesPerAttribute = 16;
inline constexpr std::uint64_t kDefaultEnumerationLimit = std::uint64_t{1} << 20;

struct DomainLimits {
  std::size_t max_values_per_attribute = kDefaultMaxValuesPerAttribute;
};

struct AttributeSpec {
  std::string name;
  std::vector<std::string> values;

  bool operator==(const AttributeSpec&) const = default;
};

/// An ordered set of categorical attributes. Immutable once constructed.
///
/// Values and attributes are addressed by their declaration index everywhere
/// else in the library; names only appear at the document boundary.
class Domain {
 public:
  explicit Domain(std::vector<AttributeSpec> attributes, DomainLimits limits = {});

  std::size_t attribute_count() const noexcept { return attributes_.size(); }
  const AttributeSpec& attribute(std::size_t index) const { return attributes_.at(index); }
  std::span<const AttributeSpec> attributes() const noexcept { return attributes_; }
  std::size_t value_count(std::size_t attribute) const { return attributes_.at(attribute).values.size(); }

  /// Number of alternatives, the product of all value-list lengths.
  std::uint64_t size() const noexcept { return size_; }

  std::optional<std::size_t> find_attribute(std::string_view name) const;
  std::optional<std::size_t> find_value(std::size_t attribute, std::string_view name) const;
  /// Throwing lookups; the error names the offending identifier.
  std::size_t attribute_index(std::string_view name) const;
  std::size_t value_index(std::size_t attribute, std::string_view name) const;

  /// Position of a value in the order that canonical keys induce on that
  /// attribute. Comparing two alternatives attribute by attribute (declaration
  /// order) with these ranks gives exactly the string order of their keys.
  std::size_t tiebreak_rank(std::size_t attribute, std::size_t value) const {
    return tiebreak_rank_[attribute][value];
  }

  bool operator==(const Domain& other) const { return attributes_ == other.attributes_; }

 private:
  std::vector<AttributeSpec> attributes_;
  std::uint64_t size_ = 1;
  std::vector<std::vector<std::size_t>> tiebreak_rank_;
};

/// One value index per attribute, in declaration order.
struct Alternative {
  std::vector<std::size_t> values;

  std::size_t operator[](std::size_t attribute) const { return values[attribute]; }
  auto operator<=>(const Alternative&) const = default;
};

enum class ExampleSource { query_answer, file_import };

struct ComparisonExample {
  Alternative better;
  Alternative worse;
  ExampleSource source = ExampleSource::file_import;

  bool operator==(const ComparisonExample&) const = default;
};

struct Condition {
  std::size_t attribute;
  std::size_t value;
  bool operator==(const Condition&) const = default;
};

/// "more_important" must precede "less_important" wherever both are used.
struct ImportanceConstraint {
  std::size_t more_important;
  std::size_t less_important;
  bool operator==(const ImportanceConstraint&) const = default;
};

/// On `attribute`, `preferred` ranks above `dispreferred`, optionally only
/// where `condition` holds.
struct LocalOrderConstraint {
  std::size_t attribute;
  std::size_t preferred;
  std::size_t dispreferred;
  std::optional<Condition> condition;
  bool operator==(const LocalOrderConstraint&) const = default;
};

using FeedbackConstraint = std::variant<ImportanceConstraint, LocalOrderConstraint>;

// Construction and validation ---------------------------------------------

bool is_identifier(std::string_view text);

Domain parse_domain(std::string_view text, DomainLimits limits = {});
Domain domain_from_json(const nlohmann::json& doc, DomainLimits limits = {});
nlohmann::json domain_to_json(const Domain& domain);
std::string serialize_domain(const Domain& domain);

Alternative validate_alternative(const Domain& domain,
                                 const std::map<std::string, std::string>& raw);
Alternative alternative_from_json(const Domain& domain, const nlohmann::json& doc);
nlohmann::json alternative_to_json(const Domain& domain, const Alternative& alternative);
/// Parses comma-separated value names in declaration order ("s,h,l,a").
Alternative parse_alternative_row(const Domain& domain, std::string_view row);
std::string format_alternative_row(const Domain& domain, const Alternative& alternative);

std::vector<ComparisonExample> parse_examples(std::string_view text, const Domain& domain);
std::string serialize_examples(const Domain& domain, std::span<const ComparisonExample> examples);

FeedbackConstraint importance(const Domain& domain, std::string_view more, std::string_view less);
FeedbackConstraint local_order(const Domain& domain, std::string_view attribute,
                               std::string_view preferred, std::string_view dispreferred,
                               std::optional<std::pair<std::string, std::string>> condition = {});
void validate_constraint(const Domain& domain, const FeedbackConstraint& constraint);

FeedbackConstraint constraint_from_json(const Domain& domain, const nlohmann::json& doc);
nlohmann::json constraint_to_json(const Domain& domain, const FeedbackConstraint& constraint);
/// Accepts either a bare array or {"constraints": [...]}.
std::vector<FeedbackConstraint> parse_constraints(std::string_view text, const Domain& domain);
std::vector<FeedbackConstraint> constraints_from_json(const Domain& domain, const nlohmann::json& doc);
nlohmann::json constraints_to_json(const Domain& domain, std::span<const FeedbackConstraint> constraints);

// Enumeration ---------------------------------------------------------------

/// All alternatives in canonical order: lexicographic by value index with the
/// first declared attribute most significant.
std::vector<Alternative> enumerate_alternatives(const Domain& domain, std::uint64_t limit);

/// Dense position of an alternative in canonical order.
std::uint64_t alternative_ordinal(const Domain& domain, const Alternative& alternative);

/// Value names joined by '|' in declaration order.
std::string canonical_key(const Alternative& alternative, const Domain& domain);

}  // namespace lexloop
