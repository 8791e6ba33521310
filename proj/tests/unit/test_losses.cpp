#include <cmath>
#include <numeric>
#include <random>

#include "doctest.h"
#include "uniclip/errors.hpp"
#include "uniclip/gradient_check.hpp"
#include "uniclip/losses.hpp"
#include "uniclip/rng.hpp"

using namespace uniclip;

namespace {

// ∂L/∂s from a row gradient in log space.
std::vector<double> to_score_grad(const std::vector<double>& grad_log, const std::vector<double>& log_row) {
  std::vector<double> out(grad_log.size());
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = grad_log[k] / std::exp(log_row[k]);
  return out;
}

// Row [s_p1, s_p2, negatives...] in log space.
std::vector<double> log_row_of(const std::vector<double>& scores) {
  std::vector<double> out;
  for (double s : scores) out.push_back(std::log(s));
  return out;
}

struct RandomRow {
  std::vector<double> log_row;
  std::vector<std::size_t> positives;
  std::vector<std::size_t> negatives;
  double pos_sum = 0.0;
  double neg_sum = 0.0;
};

RandomRow random_row(Rng& rng) {
  RandomRow r;
  const std::size_t k = 1 + rng() % 4;
  const std::size_t m = 1 + rng() % 6;
  std::normal_distribution<double> normal(0.0, 1.5);
  for (std::size_t a = 0; a < k + m; ++a) {
    r.log_row.push_back(normal(rng));
    const double s = std::exp(r.log_row.back());
    if (a < k) {
      r.positives.push_back(a);
      r.pos_sum += s;
    } else {
      r.negatives.push_back(a);
      r.neg_sum += s;
    }
  }
  return r;
}

double weighted_positive_mass(const PairIndexSets& sets, const DomainWeights& w, Domain d) {
  double mass = 0.0;
  for (std::size_t i = 0; i < sets.size(); ++i) {
    if (domain_of(i, i, sets.layout) == d) mass += w[static_cast<std::size_t>(d)];
    for (auto p : sets.positives[i]) {
      if (domain_of(i, p, sets.layout) == d) mass += w[static_cast<std::size_t>(d)];
    }
  }
  return mass;
}

}  // namespace

TEST_CASE("pair sets for N=2, v=3, t=1") {
  const PairIndexSets sets = build_pair_sets(2, 3, 1);
  CHECK(sets.size() == 8);
  CHECK(sets.positives[0] == std::vector<std::size_t>{2, 4, 6});
  CHECK(sets.negatives[0] == std::vector<std::size_t>{1, 3, 5, 7});
  CHECK_NOTHROW(sets.validate_partition());
}

TEST_CASE("pair sets for a two-sample batch") {
  const PairIndexSets sets = build_pair_sets(1, 1, 1);
  CHECK(sets.positives[0] == std::vector<std::size_t>{1});
  CHECK(sets.negatives[0].empty());
  CHECK_THROWS_AS(build_pair_sets(0, 3, 1), ContractError);
}

TEST_CASE("positives are mutual and partition the batch on random sizes") {
  Rng rng(99);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 1 + rng() % 6, v = 1 + rng() % 4, t = 1 + rng() % 3;
    const PairIndexSets sets = build_pair_sets(n, v, t);
    for (std::size_t i = 0; i < sets.size(); ++i) {
      for (std::size_t j = 0; j < sets.size(); ++j) {
        const bool ij = std::find(sets.positives[i].begin(), sets.positives[i].end(), j) != sets.positives[i].end();
        const bool ji = std::find(sets.positives[j].begin(), sets.positives[j].end(), i) != sets.positives[j].end();
        CHECK(ij == ji);
      }
    }
    CHECK_NOTHROW(sets.validate_partition());
  }
  PairIndexSets broken = build_pair_sets(2, 1, 1);
  broken.positives[0].clear();
  CHECK_THROWS_AS(broken.validate_partition(), ContractError);
}

TEST_CASE("domain weights") {
  CHECK(domain_weights(3, 1) == DomainWeights{1.0 / 9, 1.0 / 6, 1.0});
  CHECK(domain_weights(1, 1) == DomainWeights{1.0, 0.5, 1.0});
  CHECK(domain_weights(2, 1) == DomainWeights{0.25, 0.25, 1.0});
}

TEST_CASE("positive pair counts and weighted mass per domain are exact") {
  for (std::size_t n : {1u, 2u, 5u}) {
    for (std::size_t v : {1u, 2u, 3u, 4u}) {
      for (std::size_t t : {1u, 2u}) {
        const PairIndexSets sets = build_pair_sets(n, v, t);
        const auto counts = positive_pair_counts(sets.layout);
        CHECK(counts[0] == v * v * n);
        CHECK(counts[1] == 2 * v * t * n);
        CHECK(counts[2] == t * t * n);
        const auto w = domain_weights(v, t);
        for (std::size_t d = 0; d < kDomainCount; ++d) {
          CHECK(std::abs(weighted_positive_mass(sets, w, static_cast<Domain>(d)) - static_cast<double>(n)) < 1e-12);
        }
      }
    }
  }
}

TEST_CASE("infonce on uniform scores and without negatives") {
  std::vector<double> row(4, 0.7), grad(4, 0.0);
  const std::vector<std::size_t> neg{1, 2, 3};
  CHECK(infonce_row(row, 0, neg, grad) == doctest::Approx(std::log(4.0)).epsilon(1e-15));
  std::vector<double> g2(4, 0.0);
  CHECK(infonce_row(row, 0, {}, g2) == 0.0);
  CHECK(g2[0] == 0.0);
}

TEST_CASE("milnce worked instance: vanishing gradient on the hard positive") {
  const auto row = log_row_of({10.0, 0.1, 1.0});
  std::vector<double> grad(3, 0.0);
  const double loss = milnce_row(row, std::vector<std::size_t>{0, 1}, std::vector<std::size_t>{2}, grad);
  CHECK(loss == doctest::Approx(-std::log(10.1 / 11.1)).epsilon(1e-14));
  CHECK(std::abs(loss - 0.09431) < 2e-4);
  const auto gs = to_score_grad(grad, row);
  CHECK(gs[1] == doctest::Approx(-1.0 / (10.1 * 11.1)).epsilon(1e-13));
  CHECK(std::abs(gs[1] - (-0.00892)) < 5e-6);
}

TEST_CASE("milnce without negatives has zero loss and zero positive gradients") {
  const auto row = log_row_of({2.0, 0.5});
  std::vector<double> grad(2, 0.0);
  CHECK(milnce_row(row, std::vector<std::size_t>{0, 1}, {}, grad) == 0.0);
  CHECK(std::abs(grad[0]) < 1e-16);
  CHECK(std::abs(grad[1]) < 1e-16);
}

TEST_CASE("supcon worked instance: the easy positive is pushed down") {
  const auto row = log_row_of({10.0, 0.1, 1.0});
  std::vector<double> grad(3, 0.0);
  supcon_row(row, std::vector<std::size_t>{0, 1}, std::vector<std::size_t>{2}, grad);
  const auto gs = to_score_grad(grad, row);
  CHECK(gs[0] == doctest::Approx((10.0 - 11.1 / 2.0) / (10.0 * 11.1)).epsilon(1e-13));
  CHECK(std::abs(gs[0] - 0.0401) < 5e-5);
  CHECK(gs[0] > 0.0);
}

TEST_CASE("supcon balance point: equal positives without negatives") {
  for (std::size_t k : {1u, 2u, 5u}) {
    std::vector<double> row(k, std::log(3.0)), grad(k, 0.0);
    std::vector<std::size_t> pos(k);
    std::iota(pos.begin(), pos.end(), 0);
    supcon_row(row, pos, {}, grad);
    for (double g : grad) CHECK(std::abs(g) < 1e-15);
  }
}

TEST_CASE("closed-form positive gradients hold to 1e-12 on random rows") {
  Rng rng(2024);
  for (int trial = 0; trial < 500; ++trial) {
    const RandomRow r = random_row(rng);
    const double k = static_cast<double>(r.positives.size());
    const double sp = r.pos_sum, sn = r.neg_sum;

    std::vector<double> g_mil(r.log_row.size(), 0.0), g_sup(r.log_row.size(), 0.0), g_mp(r.log_row.size(), 0.0);
    milnce_row(r.log_row, r.positives, r.negatives, g_mil);
    supcon_row(r.log_row, r.positives, r.negatives, g_sup);
    const std::vector<double> unit(r.positives.size(), 1.0);
    mpnce_row(r.log_row, r.positives, unit, r.negatives, g_mp);
    const auto mil = to_score_grad(g_mil, r.log_row);
    const auto sup = to_score_grad(g_sup, r.log_row);
    const auto mp = to_score_grad(g_mp, r.log_row);

    for (auto q : r.positives) {
      const double s = std::exp(r.log_row[q]);
      const double mil_ref = -sn / (sp * (sp + sn));
      const double sup_ref = (s - (sp + sn) / k) / (s * (sp + sn));
      const double mp_ref = -sn / (k * s * (s + sn));
      CHECK(std::abs(mil[q] - mil_ref) <= 1e-12 * std::max(1.0, std::abs(mil_ref)));
      CHECK(std::abs(sup[q] - sup_ref) <= 1e-12 * std::max(1.0, std::abs(sup_ref)));
      CHECK(std::abs(mp[q] - mp_ref) <= 1e-12 * std::max(1.0, std::abs(mp_ref)));
    }
  }
}

TEST_CASE("mpnce positive gradients are always negative") {
  Rng rng(77);
  std::size_t violations = 0;
  for (int trial = 0; trial < 10000; ++trial) {
    const RandomRow r = random_row(rng);
    std::vector<double> w(r.positives.size());
    for (auto& x : w) x = uniform(rng, 0.05, 1.0);
    std::vector<double> grad(r.log_row.size(), 0.0);
    mpnce_row(r.log_row, r.positives, w, r.negatives, grad);
    for (auto q : r.positives) violations += grad[q] < 0.0 ? 0 : 1;
  }
  CHECK(violations == 0);
}

TEST_CASE("mpnce trivial term with unit temperature and zero offset") {
  // Self-pair at cosine 1 → log score 1; two negatives with score 1 each.
  const std::vector<double> row{1.0, 0.0, 0.0};
  std::vector<double> grad(3, 0.0);
  std::vector<double> terms;
  const double loss = mpnce_row(row, std::vector<std::size_t>{0}, std::vector<double>{1.0},
                                std::vector<std::size_t>{1, 2}, grad, &terms);
  const double e = std::exp(1.0);
  CHECK(loss == doctest::Approx(-std::log(e / (e + 2.0))).epsilon(1e-14));
  CHECK(std::abs(loss - 0.55132) < 2e-4);
  REQUIRE(terms.size() == 1);
  CHECK(terms[0] == loss);
}

TEST_CASE("mpnce without trivial pair or weights reduces to infonce with one positive") {
  Rng rng(8);
  const PairIndexSets sets = build_pair_sets(4, 1, 1);
  DenseMatrix logs(8, 8);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (auto& v : logs.values()) v = normal(rng);
  const ScoreMatrix sm = ScoreMatrix::from_log_scores(logs, sets.layout);
  const LossReport a = infonce_loss(sm, sets);
  const LossReport b = mpnce_loss(sm, sets, domain_weights(1, 1), {false, false});
  CHECK(a.loss == doctest::Approx(b.loss).epsilon(1e-14));
  CHECK(max_relative_error(a.grad_log_scores.values(), b.grad_log_scores.values(), 0.0) < 1e-12);
  CHECK_THROWS_AS(infonce_loss(ScoreMatrix::from_log_scores(DenseMatrix(8, 8), build_pair_sets(2, 3, 1).layout),
                               build_pair_sets(2, 3, 1)),
                  ContractError);
}

TEST_CASE("batch losses average rows and report terms") {
  const PairIndexSets sets = build_pair_sets(2, 3, 1);
  const ScoreMatrix sm = ScoreMatrix::from_log_scores(DenseMatrix(8, 8), sets.layout);
  // Uniform scores: every MP-NCE term is log(1 + |N_i|) = log 5.
  const LossReport r = mpnce_loss(sm, sets, {1.0, 1.0, 1.0}, {true, false});
  CHECK(r.loss == doctest::Approx(std::log(5.0)).epsilon(1e-14));
  CHECK(r.terms.size() == 8 * 4);
  const LossReport m = milnce_loss(sm, sets);
  CHECK(m.loss == doctest::Approx(std::log(7.0 / 3.0)).epsilon(1e-14));
  CHECK(m.terms.size() == 8);
}

TEST_CASE("separated supervision uses only same-domain negatives") {
  const PairIndexSets sets = build_pair_sets(2, 3, 1);
  const PairIndexSets ii = restrict_to_domain(sets, Domain::image_image);
  CHECK(ii.positives[0] == std::vector<std::size_t>{2, 4});
  CHECK(ii.negatives[0] == std::vector<std::size_t>{1, 3, 5});
  const PairIndexSets it = restrict_to_domain(sets, Domain::image_text);
  CHECK(it.positives[0] == std::vector<std::size_t>{6});
  CHECK(it.negatives[0] == std::vector<std::size_t>{7});
  CHECK(it.negatives[6] == std::vector<std::size_t>{1, 3, 5});

  // Each domain term sees only its own negatives.
  Rng rng(4);
  DenseMatrix logs(8, 8);
  for (auto& v : logs.values()) v = uniform(rng, -1.0, 1.0);
  const LossSpec spec{LossKind::mpnce, {}};
  const LossReport r = separated_loss(spec, ScoreMatrix::from_log_scores(logs, sets.layout), sets);
  // Row 0 meets column 7 only in its image–text term: iterate {6} against the negative {7},
  // averaged over the eight rows that have an image–text positive.
  const double expected = std::exp(logs(0, 7) - std::log(std::exp(logs(0, 6)) + std::exp(logs(0, 7)))) / 8.0;
  CHECK(r.grad_log_scores(0, 7) == doctest::Approx(expected).epsilon(1e-13));
}

TEST_CASE("loss gradients match finite differences on a random instance") {
  Rng rng(31);
  const PairIndexSets sets = build_pair_sets(2, 3, 1);
  DenseMatrix logs(8, 8);
  for (auto& v : logs.values()) v = uniform(rng, -2.0, 2.0);
  for (LossKind kind : {LossKind::milnce, LossKind::supcon, LossKind::mpnce}) {
    const LossSpec spec{kind, {}};
    const LossReport r = compute_loss(spec, ScoreMatrix::from_log_scores(logs, sets.layout), sets);
    const std::vector<double> point(logs.values().begin(), logs.values().end());
    const auto fd = finite_difference_gradient(
        [&](std::span<const double> x) {
          return compute_loss(spec, ScoreMatrix::from_log_scores(DenseMatrix(8, 8, {x.begin(), x.end()}), sets.layout),
                              sets)
              .loss;
        },
        point);
    CAPTURE(to_string(kind));
    CHECK(max_relative_error(r.grad_log_scores.values(), fd) < 1e-5);
  }
}

TEST_CASE("loss rows reject empty positive sets and mismatched shapes") {
  std::vector<double> row(3, 0.0), grad(3, 0.0), short_grad(2, 0.0);
  CHECK_THROWS_AS(milnce_row(row, {}, std::vector<std::size_t>{1}, grad), ContractError);
  CHECK_THROWS_AS(supcon_row(row, {}, std::vector<std::size_t>{1}, grad), ContractError);
  CHECK_THROWS_AS(mpnce_row(row, {}, {}, std::vector<std::size_t>{1}, grad), ContractError);
  CHECK_THROWS_AS(milnce_row(row, std::vector<std::size_t>{0}, {}, short_grad), ShapeError);
  CHECK_THROWS_AS(mpnce_row(row, std::vector<std::size_t>{0}, std::vector<double>{1.0, 1.0}, {}, grad), ShapeError);
}
