#include "uniclip/similarity.hpp"

#include <cmath>

#include "uniclip/errors.hpp"

namespace uniclip {

namespace {

constexpr double kMinNorm = 1e-12;

double norm(std::span<const double> v) { return std::sqrt(dot(v, v)); }

}  // namespace

std::string to_string(Domain d) {
  switch (d) {
    case Domain::image_image: return "image-image";
    case Domain::image_text: return "image-text";
    case Domain::text_text: return "text-text";
  }
  return "?";
}

std::string to_string(SimilarityMode m) {
  switch (m) {
    case SimilarityMode::shared: return "shared";
    case SimilarityMode::shared_with_offset: return "shared_with_offset";
    case SimilarityMode::domain_dependent: return "domain_dependent";
  }
  return "?";
}

Domain domain_of(std::size_t i, std::size_t j, const BatchLayout& layout) {
  if (i >= layout.size() || j >= layout.size()) {
    throw ContractError("domain_of: index (" + std::to_string(i) + ", " + std::to_string(j) +
                        ") outside batch of " + std::to_string(layout.size()));
  }
  const bool ii = layout.is_image(i);
  const bool jj = layout.is_image(j);
  if (ii && jj) return Domain::image_image;
  if (!ii && !jj) return Domain::text_text;
  return Domain::image_text;
}

Domain domain_of(std::size_t i, std::size_t j, std::size_t n) {
  return domain_of(i, j, BatchLayout{n, 3, 1});
}

SimilarityParams SimilarityParams::initial(SimilarityMode mode, double tau) {
  if (!(tau > 0.0)) throw ContractError("SimilarityParams: initial temperature must be positive");
  SimilarityParams p;
  p.mode = mode;
  p.log_tau.fill(std::log(tau));
  p.offset.fill(0.0);
  return p;
}

double SimilarityParams::tau(Domain d) const { return std::exp(log_tau[static_cast<std::size_t>(d)]); }

void SimilarityParams::validate() const {
  for (std::size_t k = 0; k < kDomainCount; ++k) {
    if (!std::isfinite(log_tau[k]) || !std::isfinite(offset[k])) {
      throw ContractError("SimilarityParams: non-finite temperature or offset");
    }
  }
  if (mode != SimilarityMode::domain_dependent) {
    if (log_tau[0] != log_tau[1] || log_tau[1] != log_tau[2] || offset[0] != offset[1] ||
        offset[1] != offset[2]) {
      throw ContractError("SimilarityParams: shared mode requires tied temperature and offset");
    }
  }
  if (mode == SimilarityMode::shared && offset[0] != 0.0) {
    throw ContractError("SimilarityParams: shared mode has no offset");
  }
}

double cosine(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ShapeError("cosine: length mismatch");
  const double na = norm(a);
  const double nb = norm(b);
  if (!(na > kMinNorm) || !(nb > kMinNorm)) throw DegenerateInputError("cosine: zero-norm embedding");
  return dot(a, b) / (na * nb);
}

double log_score(double cos, const SimilarityParams& params, Domain d) {
  return (cos - params.bias(d)) / params.tau(d);
}

double score(std::span<const double> a, std::span<const double> b, const SimilarityParams& params, Domain d) {
  return std::exp(log_score(cosine(a, b), params, d));
}

DenseMatrix ScoreMatrix::scores() const {
  DenseMatrix s = log_scores;
  for (auto& v : s.values()) v = std::exp(v);
  return s;
}

ScoreMatrix ScoreMatrix::from_scores(const DenseMatrix& scores, const BatchLayout& layout) {
  DenseMatrix logs = scores;
  for (auto& v : logs.values()) {
    if (!(v > 0.0) || !std::isfinite(v)) throw ContractError("ScoreMatrix: scores must be positive and finite");
    v = std::log(v);
  }
  return from_log_scores(std::move(logs), layout);
}

ScoreMatrix ScoreMatrix::from_log_scores(DenseMatrix log_scores, const BatchLayout& layout) {
  if (log_scores.rows() != log_scores.cols() || log_scores.rows() != layout.size()) {
    throw ShapeError("ScoreMatrix: " + log_scores.shape_string() + " does not match batch of " +
                     std::to_string(layout.size()));
  }
  ScoreMatrix m;
  m.layout = layout;
  m.cosine = DenseMatrix(log_scores.rows(), log_scores.cols());
  m.log_scores = std::move(log_scores);
  return m;
}

ScoreMatrix score_matrix(const DenseMatrix& embeddings, const BatchLayout& layout, const SimilarityParams& params) {
  const std::size_t n = layout.size();
  if (embeddings.rows() != n) {
    throw ShapeError("score_matrix: " + std::to_string(embeddings.rows()) + " embeddings for a batch of " +
                     std::to_string(n));
  }
  params.validate();
  ScoreMatrix m;
  m.layout = layout;
  m.unit = embeddings;
  m.norms.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double len = norm(embeddings.row(i));
    if (!(len > kMinNorm)) throw DegenerateInputError("score_matrix: zero-norm embedding at index " + std::to_string(i));
    m.norms[i] = len;
    for (auto& v : m.unit.row(i)) v /= len;
  }
  m.cosine = DenseMatrix(n, n);
  m.log_scores = DenseMatrix(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    m.cosine(i, i) = 1.0;
    m.log_scores(i, i) = log_score(1.0, params, domain_of(i, i, layout));
    for (std::size_t j = i + 1; j < n; ++j) {
      const double c = dot(m.unit.row(i), m.unit.row(j));
      const double l = log_score(c, params, domain_of(i, j, layout));
      m.cosine(i, j) = m.cosine(j, i) = c;
      m.log_scores(i, j) = m.log_scores(j, i) = l;
    }
  }
  return m;
}

SimilarityGradients score_backward_log(const ScoreMatrix& scores, const DenseMatrix& grad_log_scores,
                                       const SimilarityParams& params) {
  require_same_shape(scores.log_scores, grad_log_scores, "score_backward");
  const std::size_t n = scores.size();
  SimilarityGradients out;
  std::array<double, kDomainCount> inv_tau{};
  for (std::size_t d = 0; d < kDomainCount; ++d) inv_tau[d] = 1.0 / params.tau(static_cast<Domain>(d));

  // ∂ℓ/∂cos = 1/τ, ∂ℓ/∂b = -1/τ, ∂ℓ/∂log τ = -ℓ.
  DenseMatrix grad_cos(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double g = grad_log_scores(i, j);
      if (g == 0.0) continue;
      const auto d = static_cast<std::size_t>(domain_of(i, j, scores.layout));
      out.offset[d] -= g * inv_tau[d];
      out.log_tau[d] -= g * scores.log_scores(i, j);
      if (i != j) grad_cos(i, j) = g * inv_tau[d];
    }
  }

  if (scores.has_embeddings()) {
    const std::size_t width = scores.unit.cols();
    DenseMatrix sym(n, n);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) sym(i, j) = grad_cos(i, j) + grad_cos(j, i);
    }
    out.embeddings = matmul(sym, scores.unit);
    for (std::size_t i = 0; i < n; ++i) {
      double radial = 0.0;
      for (std::size_t j = 0; j < n; ++j) radial += sym(i, j) * scores.cosine(i, j);
      auto row = out.embeddings.row(i);
      auto u = scores.unit.row(i);
      for (std::size_t c = 0; c < width; ++c) row[c] = (row[c] - radial * u[c]) / scores.norms[i];
    }
  }
  tie_gradients(params.mode, out);
  return out;
}

SimilarityGradients score_backward(const ScoreMatrix& scores, const DenseMatrix& grad_scores,
                                   const SimilarityParams& params) {
  require_same_shape(scores.log_scores, grad_scores, "score_backward");
  DenseMatrix grad_log = grad_scores;
  auto g = grad_log.values();
  auto l = scores.log_scores.values();
  for (std::size_t k = 0; k < g.size(); ++k) g[k] *= std::exp(l[k]);
  return score_backward_log(scores, grad_log, params);
}

void tie_gradients(SimilarityMode mode, SimilarityGradients& grads) {
  if (mode == SimilarityMode::domain_dependent) return;
  const double tau_sum = grads.log_tau[0] + grads.log_tau[1] + grads.log_tau[2];
  const double off_sum = grads.offset[0] + grads.offset[1] + grads.offset[2];
  grads.log_tau.fill(tau_sum);
  grads.offset.fill(mode == SimilarityMode::shared ? 0.0 : off_sum);
}

}  // namespace uniclip
