#include "uniclip/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "uniclip/errors.hpp"

namespace uniclip {

double recall_at_k(const DenseMatrix& scores, std::size_t k, bool by_rows) {
  const std::size_t n = scores.rows();
  if (scores.cols() != n) throw ShapeError("recall_at_k: score matrix must be square, got " + scores.shape_string());
  if (n < k || k == 0) throw ContractError("recall_at_k: need at least " + std::to_string(k) + " pairs, got " +
                                           std::to_string(n));
  std::size_t hits = 0;
  for (std::size_t q = 0; q < n; ++q) {
    const double truth = scores(q, q);
    std::size_t ahead = 0;
    for (std::size_t c = 0; c < n; ++c) {
      if (c == q) continue;
      const double s = by_rows ? scores(q, c) : scores(c, q);
      if (s >= truth) ++ahead;
    }
    if (ahead < k) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(n);
}

RetrievalResult retrieval_recalls(const DenseMatrix& image_text_scores) {
  RetrievalResult r;
  r.r1_image_to_text = recall_at_k(image_text_scores, 1, true);
  r.r5_image_to_text = recall_at_k(image_text_scores, 5, true);
  r.r1_text_to_image = recall_at_k(image_text_scores, 1, false);
  r.r5_text_to_image = recall_at_k(image_text_scores, 5, false);
  return r;
}

double separation_auc(std::span<const double> positives, std::span<const double> negatives) {
  if (positives.empty() || negatives.empty()) return 0.5;
  std::vector<double> neg(negatives.begin(), negatives.end());
  std::sort(neg.begin(), neg.end());
  double wins = 0.0;
  for (double p : positives) {
    const auto lo = std::lower_bound(neg.begin(), neg.end(), p);
    const auto hi = std::upper_bound(lo, neg.end(), p);
    wins += static_cast<double>(lo - neg.begin()) + 0.5 * static_cast<double>(hi - lo);
  }
  return wins / (static_cast<double>(positives.size()) * static_cast<double>(neg.size()));
}

std::size_t Histogram::total() const {
  std::size_t t = 0;
  for (auto c : counts) t += c;
  return t;
}

double Histogram::bin_center(std::size_t b) const {
  const double width = (hi - lo) / static_cast<double>(counts.size());
  return lo + (static_cast<double>(b) + 0.5) * width;
}

Histogram make_histogram(std::span<const double> values, std::size_t bins, double lo, double hi) {
  if (bins == 0 || !(hi > lo)) throw ContractError("make_histogram: need bins >= 1 and hi > lo");
  Histogram h{lo, hi, std::vector<std::size_t>(bins, 0)};
  const double scale = static_cast<double>(bins) / (hi - lo);
  for (double v : values) {
    const double pos = (v - lo) * scale;
    const auto b = static_cast<std::size_t>(std::clamp(pos, 0.0, static_cast<double>(bins - 1)));
    ++h.counts[b];
  }
  return h;
}

DensityStats similarity_density_stats(const DenseMatrix& cosine, const PairIndexSets& sets, std::size_t bins) {
  if (cosine.rows() != sets.size() || cosine.cols() != sets.size()) {
    throw ShapeError("similarity_density_stats: cosine matrix " + cosine.shape_string() + " does not match " +
                     std::to_string(sets.size()) + " pair sets");
  }
  std::array<std::vector<double>, kDomainCount> pos, neg;
  std::vector<double> pos_all, neg_all;
  for (std::size_t i = 0; i < sets.size(); ++i) {
    for (auto j : sets.positives[i]) {
      pos[static_cast<std::size_t>(domain_of(i, j, sets.layout))].push_back(cosine(i, j));
    }
    for (auto j : sets.negatives[i]) {
      neg[static_cast<std::size_t>(domain_of(i, j, sets.layout))].push_back(cosine(i, j));
    }
  }
  DensityStats out;
  auto mean = [](const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return v.empty() ? 0.0 : s / static_cast<double>(v.size());
  };
  for (std::size_t d = 0; d < kDomainCount; ++d) {
    out.positive[d] = make_histogram(pos[d], bins);
    out.negative[d] = make_histogram(neg[d], bins);
    out.positive_mean[d] = mean(pos[d]);
    out.negative_mean[d] = mean(neg[d]);
    out.auc[d] = separation_auc(pos[d], neg[d]);
    pos_all.insert(pos_all.end(), pos[d].begin(), pos[d].end());
    neg_all.insert(neg_all.end(), neg[d].begin(), neg[d].end());
  }
  out.auc_all = separation_auc(pos_all, neg_all);
  return out;
}

double linear_probe_accuracy(const DenseMatrix& train_features, std::span<const std::size_t> train_labels,
                             const DenseMatrix& eval_features, std::span<const std::size_t> eval_labels,
                             std::size_t n_classes, const ProbeConfig& cfg) {
  const std::size_t n = train_features.rows();
  const std::size_t dim = train_features.cols();
  if (n != train_labels.size() || eval_features.rows() != eval_labels.size() || eval_features.cols() != dim) {
    throw ShapeError("linear_probe_accuracy: feature/label shapes disagree");
  }
  if (n == 0 || eval_labels.empty() || n_classes == 0) throw ContractError("linear_probe_accuracy: empty inputs");

  std::vector<double> mu(dim, 0.0), sd(dim, 0.0);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < dim; ++c) mu[c] += train_features(r, c);
  }
  for (auto& m : mu) m /= static_cast<double>(n);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < dim; ++c) sd[c] += (train_features(r, c) - mu[c]) * (train_features(r, c) - mu[c]);
  }
  for (auto& s : sd) s = std::sqrt(s / static_cast<double>(n)) + 1e-8;
  auto standardize = [&](const DenseMatrix& x) {
    DenseMatrix out(x.rows(), dim + 1);
    for (std::size_t r = 0; r < x.rows(); ++r) {
      for (std::size_t c = 0; c < dim; ++c) out(r, c) = (x(r, c) - mu[c]) / sd[c];
      out(r, dim) = 1.0;
    }
    return out;
  };
  const DenseMatrix xtr = standardize(train_features);
  const DenseMatrix xev = standardize(eval_features);

  DenseMatrix w(dim + 1, n_classes);
  DenseMatrix grad_logits(n, n_classes);
  for (std::size_t step = 0; step < cfg.steps; ++step) {
    const DenseMatrix logits = matmul(xtr, w);
    for (std::size_t r = 0; r < n; ++r) {
      double mx = logits(r, 0);
      for (std::size_t k = 1; k < n_classes; ++k) mx = std::max(mx, logits(r, k));
      double z = 0.0;
      for (std::size_t k = 0; k < n_classes; ++k) z += std::exp(logits(r, k) - mx);
      for (std::size_t k = 0; k < n_classes; ++k) {
        const double p = std::exp(logits(r, k) - mx) / z;
        grad_logits(r, k) = (p - (train_labels[r] == k ? 1.0 : 0.0)) / static_cast<double>(n);
      }
    }
    DenseMatrix gw = matmul_at_b(xtr, grad_logits);
    gw *= -cfg.lr;
    w += gw;
  }

  const DenseMatrix logits = matmul(xev, w);
  std::size_t correct = 0;
  for (std::size_t r = 0; r < xev.rows(); ++r) {
    std::size_t best = 0;
    for (std::size_t k = 1; k < n_classes; ++k) {
      if (logits(r, k) > logits(r, best)) best = k;
    }
    if (best == eval_labels[r]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(eval_labels.size());
}

}  // namespace uniclip
