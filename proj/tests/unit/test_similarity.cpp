#include <cmath>
#include <random>

#include "doctest.h"
#include "uniclip/errors.hpp"
#include "uniclip/gradient_check.hpp"
#include "uniclip/losses.hpp"
#include "uniclip/rng.hpp"
#include "uniclip/similarity.hpp"

using namespace uniclip;

namespace {

DenseMatrix random_embeddings(std::size_t rows, std::size_t width, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  DenseMatrix z(rows, width);
  for (auto& v : z.values()) v = normal(rng);
  return z;
}

SimilarityParams distinct_params() {
  SimilarityParams p;
  p.mode = SimilarityMode::domain_dependent;
  p.log_tau = {std::log(0.1), std::log(0.2), std::log(0.05)};
  p.offset = {0.3, -0.1, 0.2};
  return p;
}

}  // namespace

TEST_CASE("domain routing by batch index") {
  // 0-based indices for N=2 under the v=3, t=1 layout.
  CHECK(domain_of(0, 4, 2) == Domain::image_image);
  CHECK(domain_of(0, 6, 2) == Domain::image_text);
  CHECK(domain_of(6, 0, 2) == Domain::image_text);
  CHECK(domain_of(6, 7, 2) == Domain::text_text);
  CHECK_THROWS_AS(domain_of(0, 8, 2), ContractError);
  const BatchLayout two_text{3, 2, 2};
  CHECK(domain_of(5, 9, two_text) == Domain::image_text);
  CHECK(domain_of(6, 11, two_text) == Domain::text_text);
}

TEST_CASE("cosine on hand instances") {
  const std::vector<double> z{0.3, -1.2, 2.0};
  CHECK(cosine(z, z) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(cosine(std::vector<double>{1, 0}, std::vector<double>{0, 1}) == 0.0);
  CHECK(cosine(std::vector<double>{1, 0}, std::vector<double>{1, 1}) == doctest::Approx(1.0 / std::sqrt(2.0)));
  CHECK_THROWS_AS(cosine(std::vector<double>{0, 0}, std::vector<double>{1, 1}), DegenerateInputError);
}

TEST_CASE("score values") {
  SimilarityParams p = SimilarityParams::initial(SimilarityMode::shared_with_offset, 0.1);
  p.offset.fill(0.2);
  CHECK(log_score(0.2, p, Domain::image_text) == 0.0);
  CHECK(std::exp(log_score(0.2, p, Domain::image_text)) == 1.0);
  CHECK(std::exp(log_score(0.5, p, Domain::image_image)) == doctest::Approx(std::exp(3.0)).epsilon(1e-14));
  CHECK(std::abs(std::exp(3.0) - 20.0855) < 1e-4);
  const SimilarityParams shared = SimilarityParams::initial(SimilarityMode::shared, 0.07);
  const std::vector<double> a{1, 2}, b{-0.5, 1};
  CHECK(score(a, b, shared, Domain::text_text) == doctest::Approx(std::exp(cosine(a, b) / 0.07)).epsilon(1e-14));
}

TEST_CASE("similarity parameter validation") {
  SimilarityParams p = SimilarityParams::initial(SimilarityMode::shared, 0.1);
  CHECK_NOTHROW(p.validate());
  p.offset[1] = 0.1;
  CHECK_THROWS_AS(p.validate(), ContractError);
  p = SimilarityParams::initial(SimilarityMode::shared_with_offset, 0.1);
  p.log_tau[2] = 0.0;
  CHECK_THROWS_AS(p.validate(), ContractError);
  CHECK_THROWS_AS(SimilarityParams::initial(SimilarityMode::shared, 0.0), ContractError);
}

TEST_CASE("score matrix structure") {
  Rng rng(1);
  const BatchLayout layout{2, 3, 1};
  SUBCASE("identical embeddings in shared mode give a constant matrix") {
    DenseMatrix z(8, 3);
    for (std::size_t i = 0; i < 8; ++i) z.row(i)[0] = 2.0, z.row(i)[1] = -1.0, z.row(i)[2] = 0.5;
    const ScoreMatrix sm = score_matrix(z, layout, SimilarityParams::initial(SimilarityMode::shared, 0.1));
    for (double v : sm.log_scores.values()) CHECK(v == doctest::Approx(10.0).epsilon(1e-14));
  }
  SUBCASE("symmetric with unit diagonal cosine and per-domain routing") {
    const DenseMatrix z = random_embeddings(8, 5, rng);
    const SimilarityParams p = distinct_params();
    const ScoreMatrix sm = score_matrix(z, layout, p);
    for (std::size_t i = 0; i < 8; ++i) {
      CHECK(sm.cosine(i, i) == 1.0);
      for (std::size_t j = 0; j < 8; ++j) CHECK(sm.log_scores(i, j) == sm.log_scores(j, i));
    }
    const double c = cosine(z.row(0), z.row(6));
    CHECK(sm.log_scores(0, 6) == doctest::Approx((c - p.offset[1]) / std::exp(p.log_tau[1])).epsilon(1e-13));
  }
  SUBCASE("shape and degeneracy errors") {
    CHECK_THROWS_AS(score_matrix(DenseMatrix(7, 3, 1.0), layout, distinct_params()), ShapeError);
    DenseMatrix z = random_embeddings(8, 3, rng);
    z.row(4)[0] = z.row(4)[1] = z.row(4)[2] = 0.0;
    CHECK_THROWS_AS(score_matrix(z, layout, distinct_params()), DegenerateInputError);
  }
}

TEST_CASE("score backward: zero upstream and offset sign") {
  Rng rng(2);
  const BatchLayout layout{2, 3, 1};
  const SimilarityParams p = distinct_params();
  const ScoreMatrix sm = score_matrix(random_embeddings(8, 4, rng), layout, p);
  const SimilarityGradients zero = score_backward(sm, DenseMatrix(8, 8), p);
  for (double v : zero.embeddings.values()) CHECK(v == 0.0);
  for (std::size_t d = 0; d < kDomainCount; ++d) {
    CHECK(zero.log_tau[d] == 0.0);
    CHECK(zero.offset[d] == 0.0);
  }
  // Upstream 1 on a single entry isolates ∂s/∂b_D = -s/τ_D < 0.
  DenseMatrix up(8, 8);
  up(0, 6) = 1.0;
  const SimilarityGradients g = score_backward(sm, up, p);
  CHECK(g.offset[1] < 0.0);
  CHECK(g.offset[1] == doctest::Approx(-std::exp(sm.log_scores(0, 6)) / std::exp(p.log_tau[1])).epsilon(1e-12));
}

TEST_CASE("score backward matches finite differences on a random 8-row batch") {
  Rng rng(3);
  const BatchLayout layout{2, 3, 1};
  const DenseMatrix z = random_embeddings(8, 4, rng);
  SimilarityParams p = distinct_params();
  p.log_tau = {std::log(0.5), std::log(0.3), std::log(0.8)};
  DenseMatrix weights(8, 8);
  for (auto& v : weights.values()) v = uniform(rng, -1.0, 1.0);
  const auto objective = [&](const DenseMatrix& zz, const SimilarityParams& pp) {
    return dot(score_matrix(zz, layout, pp).scores().values(), weights.values());
  };
  const ScoreMatrix sm = score_matrix(z, layout, p);
  const SimilarityGradients g = score_backward(sm, weights, p);

  std::vector<double> point(z.values().begin(), z.values().end());
  std::vector<double> analytic(g.embeddings.values().begin(), g.embeddings.values().end());
  for (std::size_t d = 0; d < kDomainCount; ++d) point.push_back(p.log_tau[d]), analytic.push_back(g.log_tau[d]);
  for (std::size_t d = 0; d < kDomainCount; ++d) point.push_back(p.offset[d]), analytic.push_back(g.offset[d]);
  const auto fd = finite_difference_gradient(
      [&](std::span<const double> x) {
        SimilarityParams pp = p;
        for (std::size_t d = 0; d < kDomainCount; ++d) {
          pp.log_tau[d] = x[32 + d];
          pp.offset[d] = x[35 + d];
        }
        return objective(DenseMatrix(8, 4, {x.begin(), x.begin() + 32}), pp);
      },
      point);
  CHECK(max_relative_error(analytic, fd) < 1e-5);
}

TEST_CASE("infonce gradient through the score on a random 4-embedding batch") {
  Rng rng(4);
  const PairIndexSets sets = build_pair_sets(2, 1, 1);
  const DenseMatrix z = random_embeddings(4, 3, rng);
  const SimilarityParams p = SimilarityParams::initial(SimilarityMode::shared, 0.5);
  const ScoreMatrix sm = score_matrix(z, sets.layout, p);
  const SimilarityGradients g = score_backward_log(sm, infonce_loss(sm, sets).grad_log_scores, p);
  const std::vector<double> point(z.values().begin(), z.values().end());
  const auto fd = finite_difference_gradient(
      [&](std::span<const double> x) {
        return infonce_loss(score_matrix(DenseMatrix(4, 3, {x.begin(), x.end()}), sets.layout, p), sets).loss;
      },
      point);
  CHECK(max_relative_error(g.embeddings.values(), fd) < 1e-5);
}

TEST_CASE("offset cancels for a single domain with shared temperature") {
  Rng rng(5);
  // Separated InfoNCE with one image and one text view is a pure image–text loss.
  const PairIndexSets sets = build_pair_sets(4, 1, 1);
  for (int trial = 0; trial < 20; ++trial) {
    SimilarityParams p = SimilarityParams::initial(SimilarityMode::shared_with_offset, uniform(rng, 0.05, 1.0));
    p.offset.fill(uniform(rng, -0.5, 0.5));
    const ScoreMatrix sm = score_matrix(random_embeddings(8, 5, rng), sets.layout, p);
    const LossReport r = separated_loss({LossKind::infonce, {}}, sm, sets);
    const SimilarityGradients g = score_backward_log(sm, r.grad_log_scores, p);
    CHECK(std::abs(g.offset[1]) <= 1e-12);
  }
}

TEST_CASE("domain-dependent offsets receive gradient with mixed-domain negatives") {
  Rng rng(6);
  const PairIndexSets sets = build_pair_sets(3, 3, 1);
  const SimilarityParams p = distinct_params();
  const ScoreMatrix sm = score_matrix(random_embeddings(12, 5, rng), sets.layout, p);
  const LossReport r = compute_loss({LossKind::mpnce, {}}, sm, sets);
  const SimilarityGradients g = score_backward_log(sm, r.grad_log_scores, p);
  CHECK(std::max({std::abs(g.offset[0]), std::abs(g.offset[1]), std::abs(g.offset[2])}) > 1e-6);
}

TEST_CASE("mpnce loss is invariant under joint offset shifts by multiples of the temperature") {
  Rng rng(7);
  const PairIndexSets sets = build_pair_sets(3, 3, 1);
  const DenseMatrix z = random_embeddings(12, 5, rng);
  const SimilarityParams p = distinct_params();
  const double base = compute_loss({LossKind::mpnce, {}}, score_matrix(z, sets.layout, p), sets).loss;
  for (double c : {-1.0, 0.3, 2.0}) {
    SimilarityParams q = p;
    for (std::size_t d = 0; d < kDomainCount; ++d) q.offset[d] += c * std::exp(q.log_tau[d]);
    const double shifted = compute_loss({LossKind::mpnce, {}}, score_matrix(z, sets.layout, q), sets).loss;
    CHECK(std::abs(shifted - base) <= 1e-12);
  }
}

TEST_CASE("tied gradients in shared modes") {
  SimilarityGradients g;
  g.log_tau = {1.0, 2.0, 3.0};
  g.offset = {0.5, 0.25, 0.25};
  tie_gradients(SimilarityMode::shared_with_offset, g);
  CHECK(g.log_tau == std::array<double, 3>{6.0, 6.0, 6.0});
  CHECK(g.offset == std::array<double, 3>{1.0, 1.0, 1.0});
  tie_gradients(SimilarityMode::shared, g);
  CHECK(g.offset == std::array<double, 3>{0.0, 0.0, 0.0});
}
