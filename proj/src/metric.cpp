#include "lexloop/metric.hpp"

#include <algorithm>
#include <limits>
#include <optional>

#include "lexloop/error.hpp"

namespace lexloop {

namespace {

using Wide = unsigned __int128;

/// Attribute sequence and per-attribute value ranks of a lexicographic total order.
struct LexOrder {
  std::vector<std::size_t> sequence;
  std::vector<std::vector<std::size_t>> rank;
  std::vector<std::size_t> position;
};

/// An unconditional tree totalized by canonical key: the tree's levels, then
/// every unused attribute in declaration order, ranked by key order.
LexOrder totalize(const UiupBody& body, const Domain& domain) {
  const auto p = domain.attribute_count();
  LexOrder lex;
  lex.rank.resize(p);
  lex.position.assign(p, p);
  std::vector<bool> used(p, false);
  for (const auto& level : body.levels) {
    used[level.attribute] = true;
    lex.sequence.push_back(level.attribute);
    auto& rank = lex.rank[level.attribute];
    rank.resize(level.order.size());
    for (std::size_t r = 0; r < level.order.size(); ++r) rank[level.order[r]] = r;
  }
  for (std::size_t a = 0; a < p; ++a) {
    if (used[a]) continue;
    lex.sequence.push_back(a);
    auto& rank = lex.rank[a];
    for (std::size_t v = 0; v < domain.value_count(a); ++v) rank.push_back(domain.tiebreak_rank(a, v));
  }
  for (std::size_t i = 0; i < p; ++i) lex.position[lex.sequence[i]] = i;
  return lex;
}

Wide checked_mul(Wide x, Wide y) {
  Wide out;
  if (__builtin_mul_overflow(x, y, &out)) fail(ErrorCode::unsupported_scale, "distance does not fit in 128 bits");
  return out;
}

Wide checked_add(Wide x, Wide y) {
  Wide out;
  if (__builtin_add_overflow(x, y, &out)) fail(ErrorCode::unsupported_scale, "distance does not fit in 128 bits");
  return out;
}

std::uint64_t narrow(Wide value) {
  if (value > std::numeric_limits<std::uint64_t>::max())
    fail(ErrorCode::unsupported_scale, "distance exceeds 64 bits");
  return static_cast<std::uint64_t>(value);
}

Wide discordant_value_pairs(const std::vector<std::size_t>& r1, const std::vector<std::size_t>& r2) {
  Wide count = 0;
  for (std::size_t u = 0; u < r1.size(); ++u)
    for (std::size_t v = 0; v < r1.size(); ++v)
      if (r1[u] < r1[v] && r2[v] < r2[u]) ++count;
  return count;
}

/// A pair (x, y) flips when x wins on the first attribute where the two
/// differ in one order and y wins on the first such attribute in the other.
/// Grouping pairs by those two deciding attributes gives a closed count per
/// group: every attribute ahead of either decider is shared, the rest are free.
std::uint64_t tau_lexicographic(const LexOrder& o1, const LexOrder& o2, const Domain& domain) {
  const auto p = domain.attribute_count();
  Wide total = 0;
  for (std::size_t a = 0; a < p; ++a) {
    for (std::size_t b = 0; b < p; ++b) {
      if (o2.position[a] < o2.position[b] || o1.position[b] < o1.position[a]) continue;
      Wide count = 1;
      for (std::size_t c = 0; c < p; ++c) {
        if (c == a || c == b) continue;
        const Wide size = domain.value_count(c);
        const bool shared = o1.position[c] < o1.position[a] || o2.position[c] < o2.position[b];
        count = checked_mul(count, shared ? size : size * size);
      }
      const Wide na = domain.value_count(a);
      const Wide nb = domain.value_count(b);
      if (a == b)
        count = checked_mul(count, discordant_value_pairs(o1.rank[a], o2.rank[a]));
      else
        count = checked_mul(checked_mul(count, na * (na - 1) / 2), nb * (nb - 1) / 2);
      total = checked_add(total, count);
    }
  }
  return narrow(total);
}

std::optional<UiupBody> as_unconditional(const LPTree& tree) {
  if (const auto* body = std::get_if<UiupBody>(&tree.body)) return *body;
  try {
    auto collapsed = collapse(tree);
    if (const auto* body = std::get_if<UiupBody>(&collapsed.body)) return *body;
  } catch (const Error& e) {
    if (e.code() != ErrorCode::unsupported_scale) throw;
  }
  return std::nullopt;
}

std::uint64_t merge_inversions(std::vector<std::uint64_t>& values, std::vector<std::uint64_t>& scratch,
                               std::size_t lo, std::size_t hi) {
  if (hi - lo < 2) return 0;
  const auto mid = lo + (hi - lo) / 2;
  auto count = merge_inversions(values, scratch, lo, mid) + merge_inversions(values, scratch, mid, hi);
  std::size_t i = lo, j = mid, k = lo;
  while (i < mid && j < hi) {
    if (values[j] < values[i]) {
      count += mid - i;
      scratch[k++] = values[j++];
    } else {
      scratch[k++] = values[i++];
    }
  }
  while (i < mid) scratch[k++] = values[i++];
  while (j < hi) scratch[k++] = values[j++];
  std::copy(scratch.begin() + static_cast<std::ptrdiff_t>(lo), scratch.begin() + static_cast<std::ptrdiff_t>(hi),
            values.begin() + static_cast<std::ptrdiff_t>(lo));
  return count;
}

void require_enumerable(const Domain& domain, std::uint64_t limit) {
  if (domain.size() > limit)
    fail(ErrorCode::unsupported_scale, "domain has " + std::to_string(domain.size()) +
                                           " alternatives, above the enumeration limit of " + std::to_string(limit));
}

}  // namespace

std::vector<Alternative> total_order_of(const LPTree& tree, const Domain& domain, std::uint64_t limit) {
  require_enumerable(domain, limit);
  std::vector<Alternative> order;
  order.reserve(domain.size());
  for (auto& members : induced_order(tree, domain, limit)) {
    std::vector<std::pair<std::string, Alternative>> keyed;
    for (auto& m : members) keyed.emplace_back(canonical_key(m, domain), std::move(m));
    std::sort(keyed.begin(), keyed.end(), [](const auto& x, const auto& y) { return x.first < y.first; });
    for (auto& [key, alt] : keyed) order.push_back(std::move(alt));
  }
  return order;
}

std::uint64_t tau_bruteforce(const LPTree& first, const LPTree& second, const Domain& domain, std::uint64_t limit) {
  const auto o1 = total_order_of(first, domain, limit);
  const auto o2 = total_order_of(second, domain, limit);
  std::vector<std::size_t> position(o2.size());
  for (std::size_t i = 0; i < o2.size(); ++i) position[alternative_ordinal(domain, o2[i])] = i;
  std::vector<std::size_t> mapped;
  mapped.reserve(o1.size());
  for (const auto& alt : o1) mapped.push_back(position[alternative_ordinal(domain, alt)]);
  std::uint64_t count = 0;
  for (std::size_t i = 0; i < mapped.size(); ++i)
    for (std::size_t j = i + 1; j < mapped.size(); ++j)
      if (mapped[j] < mapped[i]) ++count;
  return count;
}

std::uint64_t tau(const LPTree& first, const LPTree& second, const Domain& domain, std::uint64_t limit) {
  require_valid(first, domain);
  require_valid(second, domain);
  const auto b1 = as_unconditional(first);
  const auto b2 = b1 ? as_unconditional(second) : std::nullopt;
  if (b1 && b2) return tau_lexicographic(totalize(*b1, domain), totalize(*b2, domain), domain);

  require_enumerable(domain, limit);
  const auto o1 = total_order_of(first, domain, limit);
  const auto o2 = total_order_of(second, domain, limit);
  std::vector<std::uint64_t> position(o2.size());
  for (std::size_t i = 0; i < o2.size(); ++i) position[alternative_ordinal(domain, o2[i])] = i;
  std::vector<std::uint64_t> mapped;
  mapped.reserve(o1.size());
  for (const auto& alt : o1) mapped.push_back(position[alternative_ordinal(domain, alt)]);
  std::vector<std::uint64_t> scratch(mapped.size());
  return merge_inversions(mapped, scratch, 0, mapped.size());
}

DistanceMatrix distance_matrix(const LPForest& forest, const Domain& domain, std::uint64_t limit) {
  require_valid(forest, domain);
  DistanceMatrix matrix;
  matrix.n = forest.trees.size();
  matrix.entries.assign(matrix.n, std::vector<std::uint64_t>(matrix.n, 0));
  for (std::size_t i = 0; i < matrix.n; ++i)
    for (std::size_t j = i + 1; j < matrix.n; ++j)
      matrix.entries[i][j] = matrix.entries[j][i] = tau(forest.trees[i], forest.trees[j], domain, limit);
  return matrix;
}

nlohmann::json matrix_to_json(const DistanceMatrix& matrix) {
  return {{"n", matrix.n}, {"entries", matrix.entries}};
}

}  // namespace lexloop
