#include "lmsx/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "lmsx/angular.hpp"
#include "lmsx/errors.hpp"

namespace lmsx {
namespace {

int class_count(std::span<const int> labels) {
  int k = 0;
  for (int l : labels) {
    if (l < 0) throw Error("negative label " + std::to_string(l));
    k = std::max(k, l + 1);
  }
  return k;
}

// Rows of unit norm; throws ZeroNormError naming the offending row.
Tensor normalize_rows(const Tensor& m, const char* what) {
  const std::size_t n = m.extent(0), d = m.extent(1);
  Tensor out = m;
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < d; ++j) s += m.at(i, j) * m.at(i, j);
    s = std::sqrt(s);
    if (s < 1e-12) {
      throw ZeroNormError(std::string(what) + " row " + std::to_string(i) + " has zero norm");
    }
    for (std::size_t j = 0; j < d; ++j) out.at(i, j) /= s;
  }
  return out;
}

void write_double(std::ofstream& out, double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  out << buf;
}

std::ofstream open_csv(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);  // \n line endings everywhere
  if (!out) throw IoError("cannot write " + path.string());
  return out;
}

}  // namespace

double accuracy(const Tensor& features, std::span<const int> labels, const Tensor& classifier) {
  if (labels.empty()) throw EmptyEvalSetError("accuracy over an empty evaluation set");
  const std::size_t n = features.extent(0);
  const std::size_t d = features.extent(1);
  if (labels.size() != n) {
    throw ShapeMismatchError("accuracy: " + std::to_string(labels.size()) + " labels for " +
                             std::to_string(n) + " samples");
  }
  if (classifier.extent(1) != d) {
    throw ShapeMismatchError("accuracy: classifier dim " + std::to_string(classifier.extent(1)) +
                             " != feature dim " + std::to_string(d));
  }
  const std::size_t k = classifier.extent(0);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t best = 0;
    double best_score = -1e308;
    for (std::size_t j = 0; j < k; ++j) {
      double s = 0.0;
      for (std::size_t t = 0; t < d; ++t) s += classifier.at(j, t) * features.at(i, t);
      if (s > best_score) {
        best_score = s;
        best = j;
      }
    }
    if (static_cast<int>(best) == labels[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(n);
}

Tensor cosine_confusion(const Tensor& features, std::span<const int> labels) {
  const int k = class_count(labels);
  const std::size_t d = features.extent(1);
  const Tensor unit = normalize_rows(features, "feature");

  // mean over pairs (i in a, j in b) of unit_i . unit_j equals the dot of
  // per-class sums divided by the pair count
  Tensor sums({static_cast<std::size_t>(k), d});
  std::vector<double> counts(static_cast<std::size_t>(k), 0.0);
  for (std::size_t i = 0; i < unit.extent(0); ++i) {
    const auto c = static_cast<std::size_t>(labels[i]);
    counts[c] += 1.0;
    for (std::size_t j = 0; j < d; ++j) sums.at(c, j) += unit.at(i, j);
  }
  Tensor confusion({static_cast<std::size_t>(k), static_cast<std::size_t>(k)});
  for (std::size_t a = 0; a < static_cast<std::size_t>(k); ++a) {
    for (std::size_t b = 0; b < static_cast<std::size_t>(k); ++b) {
      if (counts[a] == 0.0 || counts[b] == 0.0) continue;
      double dot = 0.0;
      for (std::size_t j = 0; j < d; ++j) dot += sums.at(a, j) * sums.at(b, j);
      confusion.at(a, b) = dot / (counts[a] * counts[b]);
    }
  }
  return confusion;
}

std::vector<double> threshold_grid(std::size_t points) {
  std::vector<double> grid(points);
  for (std::size_t i = 0; i < points; ++i) {
    grid[i] = -1.0 + 2.0 * static_cast<double>(i) / static_cast<double>(points - 1);
  }
  return grid;
}

VerificationResult verify_pairs(const Tensor& features_a, const Tensor& features_b,
                                const std::vector<bool>& same, std::span<const double> grid) {
  const std::size_t n = features_a.extent(0);
  if (features_b.extent(0) != n || same.size() != n) {
    throw ShapeMismatchError("verify_pairs: inputs disagree on pair count");
  }
  const Tensor ua = normalize_rows(features_a, "pair-a feature");
  const Tensor ub = normalize_rows(features_b, "pair-b feature");
  const std::size_t d = ua.extent(1);

  std::vector<double> cosines(n);
  std::size_t positives = 0;
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < d; ++j) s += ua.at(i, j) * ub.at(i, j);
    cosines[i] = s;
    if (same[i]) ++positives;
  }
  const std::size_t negatives = n - positives;

  VerificationResult result;
  result.best_accuracy = -1.0;
  for (double threshold : grid) {
    std::size_t tp = 0, fp = 0, correct = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const bool predicted_same = cosines[i] >= threshold;
      if (predicted_same && same[i]) ++tp;
      if (predicted_same && !same[i]) ++fp;
      if (predicted_same == static_cast<bool>(same[i])) ++correct;
    }
    VerificationPoint point;
    point.threshold = threshold;
    point.accuracy = n ? static_cast<double>(correct) / static_cast<double>(n) : 0.0;
    point.tpr = positives ? static_cast<double>(tp) / static_cast<double>(positives) : 0.0;
    point.fpr = negatives ? static_cast<double>(fp) / static_cast<double>(negatives) : 0.0;
    result.curve.push_back(point);
    if (point.accuracy > result.best_accuracy) {
      result.best_accuracy = point.accuracy;
      result.best_threshold = threshold;
    }
  }
  return result;
}

AngularStats angular_stats(const Tensor& features, std::span<const int> labels) {
  const int k = class_count(labels);
  const std::size_t d = features.extent(1);
  if (labels.size() != features.extent(0)) {
    throw ShapeMismatchError("angular_stats: label count != sample count");
  }
  const Tensor unit = normalize_rows(features, "feature");

  Tensor sums({static_cast<std::size_t>(k), d});
  std::vector<std::size_t> counts(static_cast<std::size_t>(k), 0);
  for (std::size_t i = 0; i < unit.extent(0); ++i) {
    const auto c = static_cast<std::size_t>(labels[i]);
    ++counts[c];
    for (std::size_t j = 0; j < d; ++j) sums.at(c, j) += unit.at(i, j);
  }
  for (std::size_t c = 0; c < counts.size(); ++c) {
    if (counts[c] == 0) {
      throw Error("angular_stats: class " + std::to_string(c) + " has no samples");
    }
  }

  AngularStats stats;
  stats.mean_directions = normalize_rows(sums, "class mean direction");
  stats.per_class_spread.assign(static_cast<std::size_t>(k), 0.0);
  for (std::size_t i = 0; i < unit.extent(0); ++i) {
    const auto c = static_cast<std::size_t>(labels[i]);
    double dot = 0.0;
    for (std::size_t j = 0; j < d; ++j) dot += unit.at(i, j) * stats.mean_directions.at(c, j);
    stats.per_class_spread[c] += std::acos(angular::clamp_cosine(dot));
  }
  for (std::size_t c = 0; c < counts.size(); ++c) {
    stats.per_class_spread[c] /= static_cast<double>(counts[c]);
  }

  stats.min_interclass_angle = angular::kPi;
  for (std::size_t a = 0; a < static_cast<std::size_t>(k); ++a) {
    for (std::size_t b = a + 1; b < static_cast<std::size_t>(k); ++b) {
      double dot = 0.0;
      for (std::size_t j = 0; j < d; ++j) {
        dot += stats.mean_directions.at(a, j) * stats.mean_directions.at(b, j);
      }
      stats.min_interclass_angle =
          std::min(stats.min_interclass_angle, std::acos(angular::clamp_cosine(dot)));
    }
  }
  const double max_spread =
      *std::max_element(stats.per_class_spread.begin(), stats.per_class_spread.end());
  stats.margin_proxy = stats.min_interclass_angle - 2.0 * max_spread;
  return stats;
}

double ideal_margin(int m, double theta_12) {
  if (m < 1) throw Error("ideal_margin: m must be >= 1");
  if (theta_12 < 0.0 || theta_12 > angular::kPi) {
    throw Error("ideal_margin: theta_12 must lie in [0, pi]");
  }
  return (static_cast<double>(m) - 1.0) / (static_cast<double>(m) + 1.0) * theta_12;
}

void export_features(const Tensor& features, std::span<const int> labels,
                     const std::filesystem::path& path) {
  const std::size_t n = labels.size();
  const std::size_t d = n ? features.extent(1) : (features.ndim() == 2 ? features.extent(1) : 0);
  auto out = open_csv(path);
  out << "label";
  for (std::size_t j = 0; j < d; ++j) out << ",f" << j;
  out << "\n";
  for (std::size_t i = 0; i < n; ++i) {
    out << labels[i];
    for (std::size_t j = 0; j < d; ++j) {
      out << ",";
      write_double(out, features.at(i, j));
    }
    out << "\n";
  }
  if (!out) throw IoError("write failed for " + path.string());
}

void export_confusion(const Tensor& confusion, const std::filesystem::path& path) {
  const std::size_t k = confusion.extent(0);
  auto out = open_csv(path);
  out << "class";
  for (std::size_t j = 0; j < k; ++j) out << ",c" << j;
  out << "\n";
  for (std::size_t i = 0; i < k; ++i) {
    out << i;
    for (std::size_t j = 0; j < k; ++j) {
      out << ",";
      write_double(out, confusion.at(i, j));
    }
    out << "\n";
  }
  if (!out) throw IoError("write failed for " + path.string());
}

void export_angular_stats(const AngularStats& stats, const std::filesystem::path& path) {
  const std::size_t k = stats.per_class_spread.size();
  const std::size_t d = stats.mean_directions.extent(1);
  auto out = open_csv(path);
  out << "class,angular_spread,min_interclass_angle,margin_proxy";
  for (std::size_t j = 0; j < d; ++j) out << ",dir" << j;
  out << "\n";
  for (std::size_t c = 0; c < k; ++c) {
    out << c << ",";
    write_double(out, stats.per_class_spread[c]);
    out << ",";
    write_double(out, stats.min_interclass_angle);
    out << ",";
    write_double(out, stats.margin_proxy);
    for (std::size_t j = 0; j < d; ++j) {
      out << ",";
      write_double(out, stats.mean_directions.at(c, j));
    }
    out << "\n";
  }
  if (!out) throw IoError("write failed for " + path.string());
}

void export_verification(const VerificationResult& result, const std::filesystem::path& path) {
  auto out = open_csv(path);
  out << "threshold,accuracy,tpr,fpr\n";
  for (const auto& p : result.curve) {
    write_double(out, p.threshold);
    out << ",";
    write_double(out, p.accuracy);
    out << ",";
    write_double(out, p.tpr);
    out << ",";
    write_double(out, p.fpr);
    out << "\n";
  }
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace lmsx
