#include "lexloop/cluster.hpp"

#include <algorithm>
#include <functional>
#include <limits>
#include <map>
#include <numeric>

#include "lexloop/error.hpp"

namespace lexloop {

namespace {

using Wide = unsigned __int128;

/// Exact inter-cluster distance: `sum / count` for average linkage, `sum` with count 1 for single.
struct Distance {
  Wide sum;
  Wide count;

  bool operator<(const Distance& other) const { return sum * other.count < other.sum * count; }
  double value() const { return static_cast<double>(sum) / static_cast<double>(count); }
};

class DisjointSets {
 public:
  explicit DisjointSets(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), 0); }
  std::size_t find(std::size_t x) {
    while (parent_[x] != x) x = parent_[x] = parent_[parent_[x]];
    return x;
  }
  void join(std::size_t x, std::size_t y) {
    x = find(x);
    y = find(y);
    if (x != y) parent_[std::max(x, y)] = std::min(x, y);
  }

 private:
  std::vector<std::size_t> parent_;
};

}  // namespace

std::string_view to_string(Linkage linkage) { return linkage == Linkage::single ? "single" : "average"; }

Linkage linkage_from_string(std::string_view text) {
  if (text == "single") return Linkage::single;
  if (text == "average") return Linkage::average;
  fail(ErrorCode::validation, "unknown linkage '" + std::string(text) + "', expected single or average");
}

Dendrogram agglomerate(const DistanceMatrix& matrix, Linkage linkage) {
  const auto n = matrix.n;
  if (n == 0) fail(ErrorCode::validation, "cannot cluster an empty forest");
  Dendrogram dendrogram{n, linkage, {}};

  std::map<std::size_t, std::vector<std::size_t>> active;
  for (std::size_t i = 0; i < n; ++i) active[i] = {i};

  auto distance = [&](const std::vector<std::size_t>& x, const std::vector<std::size_t>& y) {
    if (linkage == Linkage::single) {
      std::uint64_t best = std::numeric_limits<std::uint64_t>::max();
      for (auto i : x)
        for (auto j : y) best = std::min(best, matrix.at(i, j));
      return Distance{best, 1};
    }
    Wide sum = 0;
    for (auto i : x)
      for (auto j : y) sum += matrix.at(i, j);
    return Distance{sum, static_cast<Wide>(x.size()) * y.size()};
  };

  while (active.size() > 1) {
    std::optional<Distance> best;
    std::size_t best_a = 0, best_b = 0;
    for (auto it = active.begin(); it != active.end(); ++it) {
      for (auto jt = std::next(it); jt != active.end(); ++jt) {
        const auto d = distance(it->second, jt->second);
        if (!best || d < *best) {
          best = d;
          best_a = it->first;
          best_b = jt->first;
        }
      }
    }
    auto members = std::move(active[best_a]);
    const auto& other = active[best_b];
    members.insert(members.end(), other.begin(), other.end());
    std::sort(members.begin(), members.end());
    active.erase(best_a);
    active.erase(best_b);
    const auto id = n + dendrogram.merges.size();
    dendrogram.merges.push_back({best_a, best_b, best->value(), id, members.size()});
    active[id] = std::move(members);
  }
  return dendrogram;
}

std::vector<std::vector<std::size_t>> cut_buckets(const Dendrogram& dendrogram, double threshold) {
  const auto n = dendrogram.leaves;
  DisjointSets sets(n + dendrogram.merges.size());
  for (const auto& merge : dendrogram.merges) {
    if (merge.height > threshold) continue;
    sets.join(merge.a, merge.id);
    sets.join(merge.b, merge.id);
  }
  std::map<std::size_t, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < n; ++i) groups[sets.find(i)].push_back(i);
  std::vector<std::vector<std::size_t>> buckets;
  for (auto& [root, members] : groups) buckets.push_back(std::move(members));
  std::sort(buckets.begin(), buckets.end(), [](const auto& x, const auto& y) { return x.front() < y.front(); });
  return buckets;
}

std::size_t representative_of(const std::vector<std::size_t>& bucket, const DistanceMatrix& matrix) {
  if (bucket.empty()) fail(ErrorCode::validation, "empty bucket has no representative");
  std::optional<std::size_t> best;
  Wide best_sum = 0;
  for (auto candidate : bucket) {
    Wide sum = 0;
    for (auto other : bucket) sum += matrix.at(candidate, other);
    if (!best || sum < best_sum || (sum == best_sum && candidate < *best)) {
      best = candidate;
      best_sum = sum;
    }
  }
  return *best;
}

Clustering cut(const Dendrogram& dendrogram, const DistanceMatrix& matrix, double threshold) {
  if (threshold < 0) fail(ErrorCode::validation, "threshold must be non-negative");
  Clustering clustering{threshold, cut_buckets(dendrogram, threshold), {}};
  for (const auto& bucket : clustering.buckets) clustering.representatives.push_back(representative_of(bucket, matrix));
  return clustering;
}

double median_height(const Dendrogram& dendrogram) {
  std::vector<double> heights;
  for (const auto& merge : dendrogram.merges) heights.push_back(merge.height);
  if (heights.empty()) return 0;
  std::sort(heights.begin(), heights.end());
  const auto mid = heights.size() / 2;
  return heights.size() % 2 ? heights[mid] : (heights[mid - 1] + heights[mid]) / 2;
}

nlohmann::json dendrogram_to_json(const Dendrogram& dendrogram) {
  nlohmann::json merges = nlohmann::json::array();
  for (const auto& m : dendrogram.merges)
    merges.push_back({{"a", m.a}, {"b", m.b}, {"height", m.height}, {"id", m.id}, {"size", m.size}});
  return {{"format", kDendrogramFormat},
          {"leaves", dendrogram.leaves},
          {"linkage", to_string(dendrogram.linkage)},
          {"merges", merges}};
}

Dendrogram dendrogram_from_json(const nlohmann::json& doc) {
  Dendrogram dendrogram;
  try {
    if (doc.at("format").get<std::string>() != kDendrogramFormat)
      fail(ErrorCode::validation, "not a dendrogram document");
    dendrogram.leaves = doc.at("leaves").get<std::size_t>();
    dendrogram.linkage = linkage_from_string(doc.at("linkage").get<std::string>());
    for (const auto& m : doc.at("merges"))
      dendrogram.merges.push_back({m.at("a").get<std::size_t>(), m.at("b").get<std::size_t>(),
                                   m.at("height").get<double>(), m.at("id").get<std::size_t>(),
                                   m.at("size").get<std::size_t>()});
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::validation, std::string("malformed dendrogram document: ") + e.what());
  }
  if (dendrogram.leaves == 0 || dendrogram.merges.size() + 1 != dendrogram.leaves)
    fail(ErrorCode::validation, "dendrogram needs exactly one merge fewer than leaves");
  for (std::size_t k = 0; k < dendrogram.merges.size(); ++k) {
    const auto& m = dendrogram.merges[k];
    if (m.id != dendrogram.leaves + k || m.a >= m.id || m.b >= m.id)
      fail(ErrorCode::validation, "dendrogram merge ids out of sequence");
  }
  return dendrogram;
}

nlohmann::json clustering_to_json(const Clustering& clustering) {
  return {{"threshold", clustering.threshold},
          {"buckets", clustering.buckets},
          {"representatives", clustering.representatives}};
}

nlohmann::json dendrogram_plot(const Dendrogram& dendrogram, std::optional<double> threshold) {
  const auto n = dendrogram.leaves;
  const auto total = n + dendrogram.merges.size();
  std::vector<std::size_t> left(total), right(total);
  for (const auto& m : dendrogram.merges) {
    left[m.id] = m.a;
    right[m.id] = m.b;
  }

  std::vector<std::size_t> leaf_order;
  std::function<void(std::size_t)> visit = [&](std::size_t id) {
    if (id < n) {
      leaf_order.push_back(id);
      return;
    }
    visit(left[id]);
    visit(right[id]);
  };
  if (n > 0) visit(total - 1);

  std::vector<double> x(total, 0), y(total, 0);
  for (std::size_t i = 0; i < leaf_order.size(); ++i) x[leaf_order[i]] = static_cast<double>(i);

  nlohmann::json segments = nlohmann::json::array();
  double top = 0;
  for (const auto& m : dendrogram.merges) {
    x[m.id] = (x[m.a] + x[m.b]) / 2;
    y[m.id] = m.height;
    top = std::max(top, m.height);
    segments.push_back({{"x1", x[m.a]}, {"y1", y[m.a]}, {"x2", x[m.a]}, {"y2", m.height}});
    segments.push_back({{"x1", x[m.b]}, {"y1", y[m.b]}, {"x2", x[m.b]}, {"y2", m.height}});
    segments.push_back({{"x1", x[m.a]}, {"y1", m.height}, {"x2", x[m.b]}, {"y2", m.height}});
  }

  nlohmann::json ticks = nlohmann::json::array();
  for (std::size_t i = 0; i < leaf_order.size(); ++i)
    ticks.push_back({{"position", i}, {"label", "tree " + std::to_string(leaf_order[i])}});

  nlohmann::json plot = {
      {"format", kPlotFormat},
      {"kind", "dendrogram"},
      {"x_axis", {{"label", "tree"}, {"min", -0.5}, {"max", static_cast<double>(n) - 0.5}, {"ticks", ticks}}},
      {"y_axis", {{"label", "pairwise disagreements"}, {"min", 0.0}, {"max", top}}},
      {"segments", segments},
      {"dendrogram", dendrogram_to_json(dendrogram)}};
  if (threshold) plot["threshold_line"] = {{"y", *threshold}, {"x1", -0.5}, {"x2", static_cast<double>(n) - 0.5}};
  return plot;
}

}  // namespace lexloop
