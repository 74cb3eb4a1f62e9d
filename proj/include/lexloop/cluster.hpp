#pragma once

#include <cstddef>
#include <optional>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "lexloop/metric.hpp"

namespace lexloop {

enum class Linkage { single, average };

std::string_view to_string(Linkage linkage);
Linkage linkage_from_string(std::string_view text);

/// Clusters `a` < `b` joined at `height` into cluster `id`. Leaves are
/// clusters 0..n-1; the k-th merge creates cluster n+k.
struct Merge {
  std::size_t a;
  std::size_t b;
  double height;
  std::size_t id;
  std::size_t size;
  bool operator==(const Merge&) const = default;
};

struct Dendrogram {
  std::size_t leaves = 0;
  Linkage linkage = Linkage::average;
  std::vector<Merge> merges;
  bool operator==(const Dendrogram&) const = default;
};

/// Merges the closest pair of clusters until one remains. Distances between
/// clusters are compared exactly; ties go to the smallest (a, b).
Dendrogram agglomerate(const DistanceMatrix& matrix, Linkage linkage = Linkage::average);

struct Clustering {
  double threshold = 0;
  /// Sorted ids, buckets ordered by smallest member.
  std::vector<std::vector<std::size_t>> buckets;
  std::vector<std::size_t> representatives;
};

/// Connected components of the merges at or below `threshold`.
std::vector<std::vector<std::size_t>> cut_buckets(const Dendrogram& dendrogram, double threshold);
Clustering cut(const Dendrogram& dendrogram, const DistanceMatrix& matrix, double threshold);

/// Medoid of the bucket; ties go to the smallest id.
std::size_t representative_of(const std::vector<std::size_t>& bucket, const DistanceMatrix& matrix);

/// Median merge height, the mean of the middle two for an even count; 0 without merges.
double median_height(const Dendrogram& dendrogram);

inline constexpr std::string_view kDendrogramFormat = "lexloop-dendrogram/1";
inline constexpr std::string_view kPlotFormat = "lexloop-plot/1";

nlohmann::json dendrogram_to_json(const Dendrogram& dendrogram);
Dendrogram dendrogram_from_json(const nlohmann::json& doc);
nlohmann::json clustering_to_json(const Clustering& clustering);

/// Line segments of the usual dendrogram drawing, leaves on the x axis and
/// merge heights on the y axis, plus the cut line when a threshold is given.
nlohmann::json dendrogram_plot(const Dendrogram& dendrogram, std::optional<double> threshold = std::nullopt);

}  // namespace lexloop
