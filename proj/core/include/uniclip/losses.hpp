#pragma once

#include <array>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "uniclip/dense.hpp"
#include "uniclip/similarity.hpp"

namespace uniclip {

/// Positive set P_i (excluding i) and negative set N_i for every batch index.
struct PairIndexSets {
  BatchLayout layout;
  std::vector<std::vector<std::size_t>> positives;
  std::vector<std::vector<std::size_t>> negatives;

  [[nodiscard]] std::size_t size() const noexcept { return positives.size(); }
  /// Throws ContractError unless P_i, N_i and {i} partition the batch and positives are mutual.
  void validate_partition() const;
};

/// j is a positive of i iff j ≡ i (mod N) and j ≠ i; every other j ≠ i is a negative.
PairIndexSets build_pair_sets(std::size_t n, std::size_t image_views, std::size_t text_views);

/// Keeps only pairs whose domain is `d` (separated supervision).
PairIndexSets restrict_to_domain(const PairIndexSets& sets, Domain d);

/// Balancing weights indexed by Domain.
using DomainWeights = std::array<double, kDomainCount>;

/// (1/v², 1/(2vt), 1/t²): every domain combination carries a total positive weight of N
/// when ordered pairs, trivial pairs included, are counted.
DomainWeights domain_weights(std::size_t image_views, std::size_t text_views);

/// Number of ordered positive pairs (trivial pairs included) per domain: v²N, 2vtN, t²N.
std::array<std::size_t, kDomainCount> positive_pair_counts(const BatchLayout& layout);

enum class LossKind { infonce, milnce, supcon, mpnce };
std::string to_string(LossKind k);

struct MpnceOptions {
  bool include_trivial = true;
  bool apply_weights = true;
};

struct PairTerm {
  std::size_t anchor = 0;
  // kAggregate when the term covers the whole positive set (MIL-NCE).
  std::size_t positive = 0;
  double value = 0.0;
  static constexpr std::size_t kAggregate = std::numeric_limits<std::size_t>::max();
};

struct LossReport {
  double loss = 0.0;
  std::vector<PairTerm> terms;
  /// ∂L/∂log s (used for backpropagation).
  DenseMatrix grad_log_scores;
  /// ∂L/∂s.
  DenseMatrix grad_scores;
  // Mean log score of positive / negative pairs per domain (NaN when a domain has none).
  std::array<double, kDomainCount> mean_positive_log_score{};
  std::array<double, kDomainCount> mean_negative_log_score{};
};

// Row-level losses. `log_row` holds log s_{i,·} for one anchor; `grad_row` receives
// ∂L_i/∂log s_{i,·} (added, not overwritten). Return L_i.

double infonce_row(std::span<const double> log_row, std::size_t positive, std::span<const std::size_t> negatives,
                   std::span<double> grad_row);
double milnce_row(std::span<const double> log_row, std::span<const std::size_t> positives,
                  std::span<const std::size_t> negatives, std::span<double> grad_row);
double supcon_row(std::span<const double> log_row, std::span<const std::size_t> positives,
                  std::span<const std::size_t> negatives, std::span<double> grad_row);
/// Mean over `iterated` of -w_p log(s_p / (s_p + Σ_n s_n)); `iterated` already contains the
/// anchor when the trivial pair is used. `weights` is parallel to `iterated`.
double mpnce_row(std::span<const double> log_row, std::span<const std::size_t> iterated,
                 std::span<const double> weights, std::span<const std::size_t> negatives,
                 std::span<double> grad_row, std::vector<double>* term_values = nullptr);

// Batch losses: L = (1 / batch) Σ_i L_i.
LossReport infonce_loss(const ScoreMatrix& scores, const PairIndexSets& sets);
LossReport milnce_loss(const ScoreMatrix& scores, const PairIndexSets& sets);
LossReport supcon_loss(const ScoreMatrix& scores, const PairIndexSets& sets);
LossReport mpnce_loss(const ScoreMatrix& scores, const PairIndexSets& sets, const DomainWeights& weights,
                      const MpnceOptions& options);

struct LossSpec {
  LossKind kind = LossKind::mpnce;
  MpnceOptions mpnce;
};

/// Dispatches to one of the four losses; weights derive from the layout's view counts.
LossReport compute_loss(const LossSpec& spec, const ScoreMatrix& scores, const PairIndexSets& sets);

/// Separated supervision: one independent loss per domain combination, each using only
/// that domain's positives and negatives; the total is the sum of the per-domain means.
LossReport separated_loss(const LossSpec& spec, const ScoreMatrix& scores, const PairIndexSets& sets);

}  // namespace uniclip
