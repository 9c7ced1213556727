#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include "lmsx/tensor.hpp"

namespace lmsx {

struct AngularStats {
  Tensor mean_directions;                // K x D, unit rows
  std::vector<double> per_class_spread;  // radians
  double min_interclass_angle = 0.0;
  double margin_proxy = 0.0;  // min_interclass_angle - 2 * max spread
};

// Fraction of samples whose argmax_j W_j.x matches the label.
// Test-time scoring is plain inner products; the margin plays no role here.
double accuracy(const Tensor& features, std::span<const int> labels, const Tensor& classifier);

/// Mean pairwise cosine similarity between classes, K x K, symmetric.
Tensor cosine_confusion(const Tensor& features, std::span<const int> labels);

struct VerificationPoint {
  double threshold = 0.0;
  double accuracy = 0.0;
  double tpr = 0.0;
  double fpr = 0.0;
};

struct VerificationResult {
  double best_threshold = 0.0;
  double best_accuracy = 0.0;
  std::vector<VerificationPoint> curve;
};

// Same/different verification by thresholded cosine similarity over a grid;
// "same" is predicted when cosine >= threshold.
VerificationResult verify_pairs(const Tensor& features_a, const Tensor& features_b,
                                const std::vector<bool>& same, std::span<const double> grid);

std::vector<double> threshold_grid(std::size_t points = 1001);

AngularStats angular_stats(const Tensor& features, std::span<const int> labels);

/// Asymptotic inter-class angle margin (m - 1) / (m + 1) * theta_12.
double ideal_margin(int m, double theta_12);

// CSV with header "label,f0,...,fD-1"; doubles printed with enough digits
// to round-trip.
void export_features(const Tensor& features, std::span<const int> labels,
                     const std::filesystem::path& path);

void export_confusion(const Tensor& confusion, const std::filesystem::path& path);
void export_angular_stats(const AngularStats& stats, const std::filesystem::path& path);
void export_verification(const VerificationResult& result, const std::filesystem::path& path);

}  // namespace lmsx
