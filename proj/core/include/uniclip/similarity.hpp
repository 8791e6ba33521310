#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>

#include "uniclip/dense.hpp"

namespace uniclip {

/// Which modalities a pair of batch indices comes from.
enum class Domain : std::size_t { image_image = 0, image_text = 1, text_text = 2 };
inline constexpr std::size_t kDomainCount = 3;

std::string to_string(Domain d);

/// Index layout of one multi-view batch of N original pairs: image view a of
/// sample k sits at a·N + k, text view t at (v + t)·N + k. The default (v = 3,
/// t = 1) puts the weak view at k, the strong views at k+N and k+2N and the text at k+3N.
struct BatchLayout {
  std::size_t n = 0;
  std::size_t image_views = 3;
  std::size_t text_views = 1;

  [[nodiscard]] std::size_t size() const noexcept { return (image_views + text_views) * n; }
  [[nodiscard]] std::size_t image_count() const noexcept { return image_views * n; }
  [[nodiscard]] bool is_image(std::size_t i) const noexcept { return i < image_count(); }
  [[nodiscard]] std::size_t sample_of(std::size_t i) const noexcept { return i % n; }
  [[nodiscard]] std::size_t view_of(std::size_t i) const noexcept { return i / n; }
  friend bool operator==(const BatchLayout&, const BatchLayout&) = default;
};

/// Domain of a 0-based index pair under `layout`. Throws ContractError when out of range.
Domain domain_of(std::size_t i, std::size_t j, const BatchLayout& layout);
/// Domain under the default three-image-view, one-text layout with N samples.
Domain domain_of(std::size_t i, std::size_t j, std::size_t n);

enum class SimilarityMode { shared, shared_with_offset, domain_dependent };

std::string to_string(SimilarityMode m);

/// Per-domain temperature (τ = exp(log_tau)) and offset b. In the shared modes all
/// three entries stay tied; in `shared` mode the offset is fixed at zero.
struct SimilarityParams {
  SimilarityMode mode = SimilarityMode::domain_dependent;
  std::array<double, kDomainCount> log_tau{};
  std::array<double, kDomainCount> offset{};

  static SimilarityParams initial(SimilarityMode mode, double tau = 0.1);

  [[nodiscard]] double tau(Domain d) const;
  [[nodiscard]] double bias(Domain d) const { return offset[static_cast<std::size_t>(d)]; }
  /// Throws ContractError if shared entries are untied or values non-finite.
  void validate() const;
};

/// z_a·z_b / (‖z_a‖‖z_b‖). Throws DegenerateInputError on a zero-norm input.
double cosine(std::span<const double> a, std::span<const double> b);

/// (cos - b_D) / τ_D.
double log_score(double cos, const SimilarityParams& params, Domain d);
/// exp((cos(z_a, z_b) - b_D) / τ_D).
double score(std::span<const double> a, std::span<const double> b, const SimilarityParams& params, Domain d);

/// Pairwise scores of one batch, held in log space. The diagonal uses cosine = 1 exactly.
struct ScoreMatrix {
  BatchLayout layout;
  DenseMatrix cosine;
  DenseMatrix log_scores;
  // Cached for the backward pass: unit-normalized embeddings and their norms.
  DenseMatrix unit;
  std::vector<double> norms;

  [[nodiscard]] std::size_t size() const noexcept { return log_scores.rows(); }
  /// exp(log_scores); for reporting only.
  [[nodiscard]] DenseMatrix scores() const;
  [[nodiscard]] bool has_embeddings() const noexcept { return !unit.empty(); }

  /// Wraps explicit positive scores (no embeddings); used for loss-level analysis.
  static ScoreMatrix from_scores(const DenseMatrix& scores, const BatchLayout& layout);
  static ScoreMatrix from_log_scores(DenseMatrix log_scores, const BatchLayout& layout);
};

/// Scores for all ordered pairs of the (layout.size() × width) embedding matrix.
ScoreMatrix score_matrix(const DenseMatrix& embeddings, const BatchLayout& layout, const SimilarityParams& params);

struct SimilarityGradients {
  DenseMatrix embeddings;
  std::array<double, kDomainCount> log_tau{};
  std::array<double, kDomainCount> offset{};
};

/// Chain rule through the scores given upstream ∂L/∂log s.
SimilarityGradients score_backward_log(const ScoreMatrix& scores, const DenseMatrix& grad_log_scores,
                                       const SimilarityParams& params);
/// Chain rule through the scores given upstream ∂L/∂s.
SimilarityGradients score_backward(const ScoreMatrix& scores, const DenseMatrix& grad_scores,
                                   const SimilarityParams& params);

/// Sums gradients over tied entries and replicates them (shared modes); zeroes the
/// offset gradient in `shared` mode.
void tie_gradients(SimilarityMode mode, SimilarityGradients& grads);

}  // namespace uniclip
