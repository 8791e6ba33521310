#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include "uniclip/dense.hpp"
#include "uniclip/losses.hpp"
#include "uniclip/similarity.hpp"

namespace uniclip {

struct RetrievalResult {
  double r1_image_to_text = 0.0;
  double r5_image_to_text = 0.0;
  double r1_text_to_image = 0.0;
  double r5_text_to_image = 0.0;

  [[nodiscard]] double r1_mean() const noexcept { return 0.5 * (r1_image_to_text + r1_text_to_image); }
};

/// Recall@k in both directions from a square image×text score matrix whose diagonal holds
/// the true matches. Ties are ranked pessimistically. Throws ContractError when fewer than
/// five pairs are available.
RetrievalResult retrieval_recalls(const DenseMatrix& image_text_scores);

/// Fraction of queries whose true match ranks within the top `k`.
double recall_at_k(const DenseMatrix& scores, std::size_t k, bool by_rows);

/// Mann-Whitney estimate of P(positive > negative), ties counted one half.
/// Empty inputs give 0.5.
double separation_auc(std::span<const double> positives, std::span<const double> negatives);

struct Histogram {
  double lo = -1.0;
  double hi = 1.0;
  std::vector<std::size_t> counts;

  [[nodiscard]] std::size_t total() const;
  [[nodiscard]] double bin_center(std::size_t b) const;
};

Histogram make_histogram(std::span<const double> values, std::size_t bins, double lo = -1.0, double hi = 1.0);

/// Per-domain cosine statistics of a batch: positives exclude the trivial self-pair.
struct DensityStats {
  std::array<Histogram, kDomainCount> positive;
  std::array<Histogram, kDomainCount> negative;
  std::array<double, kDomainCount> positive_mean{};
  std::array<double, kDomainCount> negative_mean{};
  std::array<double, kDomainCount> auc{};
  double auc_all = 0.5;  // pooled over every domain combination
};

inline constexpr std::size_t kDefaultHistogramBins = 20;

DensityStats similarity_density_stats(const DenseMatrix& cosine, const PairIndexSets& sets,
                                      std::size_t bins = kDefaultHistogramBins);

/// Softmax regression on standardized features, trained by full-batch gradient descent
/// from zero weights for a fixed number of steps; returns eval accuracy.
struct ProbeConfig {
  std::size_t steps = 100;
  double lr = 0.5;
};

double linear_probe_accuracy(const DenseMatrix& train_features, std::span<const std::size_t> train_labels,
                             const DenseMatrix& eval_features, std::span<const std::size_t> eval_labels,
                             std::size_t n_classes, const ProbeConfig& cfg);

}  // namespace uniclip
