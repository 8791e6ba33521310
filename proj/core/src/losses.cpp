#include "uniclip/losses.hpp"

#include <algorithm>
#include <cmath>

#include "uniclip/errors.hpp"

namespace uniclip {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double log_add_exp(double a, double b) noexcept {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  const double m = std::max(a, b);
  return m + std::log(std::exp(a - m) + std::exp(b - m));
}

/// log Σ_{j ∈ idx} exp(row[j]) with max-shift; -inf for an empty set.
double log_sum_exp(std::span<const double> row, std::span<const std::size_t> idx) noexcept {
  if (idx.empty()) return kNegInf;
  double m = kNegInf;
  for (auto j : idx) m = std::max(m, row[j]);
  double acc = 0.0;
  for (auto j : idx) acc += std::exp(row[j] - m);
  return m + std::log(acc);
}

void require_row(std::span<const double> log_row, std::span<double> grad_row) {
  if (log_row.size() != grad_row.size()) throw ShapeError("loss row: score and gradient rows differ in length");
}

LossReport empty_report(std::size_t n) {
  LossReport r;
  r.grad_log_scores = DenseMatrix(n, n);
  r.grad_scores = DenseMatrix(n, n);
  return r;
}

void finish_report(LossReport& r, const ScoreMatrix& scores, const PairIndexSets& sets, double row_count) {
  r.loss /= row_count;
  r.grad_log_scores *= 1.0 / row_count;
  auto gl = r.grad_log_scores.values();
  auto gs = r.grad_scores.values();
  auto ls = scores.log_scores.values();
  for (std::size_t k = 0; k < gl.size(); ++k) gs[k] = gl[k] * std::exp(-ls[k]);

  std::array<double, kDomainCount> pos_sum{}, neg_sum{};
  std::array<std::size_t, kDomainCount> pos_n{}, neg_n{};
  for (std::size_t i = 0; i < sets.size(); ++i) {
    for (auto p : sets.positives[i]) {
      const auto d = static_cast<std::size_t>(domain_of(i, p, sets.layout));
      pos_sum[d] += scores.log_scores(i, p);
      ++pos_n[d];
    }
    for (auto q : sets.negatives[i]) {
      const auto d = static_cast<std::size_t>(domain_of(i, q, sets.layout));
      neg_sum[d] += scores.log_scores(i, q);
      ++neg_n[d];
    }
  }
  for (std::size_t d = 0; d < kDomainCount; ++d) {
    r.mean_positive_log_score[d] = pos_n[d] ? pos_sum[d] / static_cast<double>(pos_n[d]) : std::nan("");
    r.mean_negative_log_score[d] = neg_n[d] ? neg_sum[d] / static_cast<double>(neg_n[d]) : std::nan("");
  }
}

void require_sets_match(const ScoreMatrix& scores, const PairIndexSets& sets) {
  if (scores.size() != sets.size() || !(scores.layout == sets.layout)) {
    throw ShapeError("loss: score matrix of " + std::to_string(scores.size()) + " vs pair sets of " +
                     std::to_string(sets.size()));
  }
}

void require_positives(const PairIndexSets& sets, const char* loss) {
  for (std::size_t i = 0; i < sets.size(); ++i) {
    if (sets.positives[i].empty()) {
      throw ContractError(std::string(loss) + ": empty positive set at index " + std::to_string(i));
    }
  }
}

struct RowPlan {
  std::vector<std::size_t> iterated;
  std::vector<double> weights;
};

RowPlan mpnce_plan(std::size_t i, std::span<const std::size_t> positives, const BatchLayout& layout,
                   const DomainWeights& weights, const MpnceOptions& options) {
  RowPlan plan;
  if (options.include_trivial) plan.iterated.push_back(i);
  plan.iterated.insert(plan.iterated.end(), positives.begin(), positives.end());
  for (auto p : plan.iterated) {
    plan.weights.push_back(options.apply_weights ? weights[static_cast<std::size_t>(domain_of(i, p, layout))] : 1.0);
  }
  return plan;
}

}  // namespace

// ---------------------------------------------------------------------------

void PairIndexSets::validate_partition() const {
  const std::size_t n = size();
  if (negatives.size() != n || n != layout.size()) throw ContractError("PairIndexSets: size mismatch");
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<int> seen(n, 0);
    seen[i] += 1;
    for (auto p : positives[i]) {
      if (p >= n) throw ContractError("PairIndexSets: positive index out of range");
      seen[p] += 1;
      const auto& back = positives[p];
      if (std::find(back.begin(), back.end(), i) == back.end()) {
        throw ContractError("PairIndexSets: positives not mutual at (" + std::to_string(i) + ", " +
                            std::to_string(p) + ")");
      }
    }
    for (auto q : negatives[i]) {
      if (q >= n) throw ContractError("PairIndexSets: negative index out of range");
      seen[q] += 1;
    }
    if (std::any_of(seen.begin(), seen.end(), [](int c) { return c != 1; })) {
      throw ContractError("PairIndexSets: P_i, N_i, {i} do not partition the batch at " + std::to_string(i));
    }
  }
}

PairIndexSets build_pair_sets(std::size_t n, std::size_t image_views, std::size_t text_views) {
  if (n == 0) throw ContractError("build_pair_sets: N must be >= 1");
  if (image_views == 0 || text_views == 0) throw ContractError("build_pair_sets: view counts must be >= 1");
  PairIndexSets sets;
  sets.layout = BatchLayout{n, image_views, text_views};
  const std::size_t total = sets.layout.size();
  sets.positives.resize(total);
  sets.negatives.resize(total);
  for (std::size_t i = 0; i < total; ++i) {
    for (std::size_t j = 0; j < total; ++j) {
      if (j == i) continue;
      if (j % n == i % n) {
        sets.positives[i].push_back(j);
      } else {
        sets.negatives[i].push_back(j);
      }
    }
  }
  return sets;
}

PairIndexSets restrict_to_domain(const PairIndexSets& sets, Domain d) {
  PairIndexSets out;
  out.layout = sets.layout;
  out.positives.resize(sets.size());
  out.negatives.resize(sets.size());
  for (std::size_t i = 0; i < sets.size(); ++i) {
    for (auto p : sets.positives[i]) {
      if (domain_of(i, p, sets.layout) == d) out.positives[i].push_back(p);
    }
    for (auto q : sets.negatives[i]) {
      if (domain_of(i, q, sets.layout) == d) out.negatives[i].push_back(q);
    }
  }
  return out;
}

DomainWeights domain_weights(std::size_t image_views, std::size_t text_views) {
  if (image_views == 0 || text_views == 0) throw ContractError("domain_weights: view counts must be >= 1");
  const double v = static_cast<double>(image_views);
  const double t = static_cast<double>(text_views);
  return {1.0 / (v * v), 1.0 / (2.0 * v * t), 1.0 / (t * t)};
}

std::array<std::size_t, kDomainCount> positive_pair_counts(const BatchLayout& layout) {
  std::array<std::size_t, kDomainCount> counts{};
  const std::size_t total = layout.size();
  for (std::size_t i = 0; i < total; ++i) {
    for (std::size_t j = 0; j < total; ++j) {
      if (j % layout.n == i % layout.n) ++counts[static_cast<std::size_t>(domain_of(i, j, layout))];
    }
  }
  return counts;
}

std::string to_string(LossKind k) {
  switch (k) {
    case LossKind::infonce: return "infonce";
    case LossKind::milnce: return "milnce";
    case LossKind::supcon: return "supcon";
    case LossKind::mpnce: return "mpnce";
  }
  return "?";
}

// ---------------------------------------------------------------------------

double infonce_row(std::span<const double> log_row, std::size_t positive, std::span<const std::size_t> negatives,
                   std::span<double> grad_row) {
  require_row(log_row, grad_row);
  const double neg = log_sum_exp(log_row, negatives);
  const double denom = log_add_exp(log_row[positive], neg);
  for (auto q : negatives) grad_row[q] += std::exp(log_row[q] - denom);
  grad_row[positive] += std::exp(log_row[positive] - denom) - 1.0;
  return denom - log_row[positive];
}

double milnce_row(std::span<const double> log_row, std::span<const std::size_t> positives,
                  std::span<const std::size_t> negatives, std::span<double> grad_row) {
  require_row(log_row, grad_row);
  if (positives.empty()) throw ContractError("milnce: empty positive set");
  const double pos = log_sum_exp(log_row, positives);
  const double denom = log_add_exp(pos, log_sum_exp(log_row, negatives));
  for (auto p : positives) grad_row[p] += std::exp(log_row[p] - denom) - std::exp(log_row[p] - pos);
  for (auto q : negatives) grad_row[q] += std::exp(log_row[q] - denom);
  return denom - pos;
}

double supcon_row(std::span<const double> log_row, std::span<const std::size_t> positives,
                  std::span<const std::size_t> negatives, std::span<double> grad_row) {
  require_row(log_row, grad_row);
  if (positives.empty()) throw ContractError("supcon: empty positive set");
  const double k = static_cast<double>(positives.size());
  const double denom = log_add_exp(log_sum_exp(log_row, positives), log_sum_exp(log_row, negatives));
  double loss = 0.0;
  for (auto p : positives) {
    loss += denom - log_row[p];
    grad_row[p] += std::exp(log_row[p] - denom) - 1.0 / k;
  }
  for (auto q : negatives) grad_row[q] += std::exp(log_row[q] - denom);
  return loss / k;
}

double mpnce_row(std::span<const double> log_row, std::span<const std::size_t> iterated,
                 std::span<const double> weights, std::span<const std::size_t> negatives,
                 std::span<double> grad_row, std::vector<double>* term_values) {
  require_row(log_row, grad_row);
  if (iterated.empty()) throw ContractError("mpnce: empty positive iteration set");
  if (weights.size() != iterated.size()) throw ShapeError("mpnce: weights do not match iteration set");
  const double k = static_cast<double>(iterated.size());
  const double neg = log_sum_exp(log_row, negatives);
  double loss = 0.0;
  for (std::size_t a = 0; a < iterated.size(); ++a) {
    const auto p = iterated[a];
    const double w = weights[a] / k;
    const double denom = log_add_exp(log_row[p], neg);
    const double term = denom - log_row[p];
    if (term_values) term_values->push_back(weights[a] * term);
    loss += weights[a] * term;
    grad_row[p] += w * (std::exp(log_row[p] - denom) - 1.0);
    for (auto q : negatives) grad_row[q] += w * std::exp(log_row[q] - denom);
  }
  return loss / k;
}

// ---------------------------------------------------------------------------

LossReport infonce_loss(const ScoreMatrix& scores, const PairIndexSets& sets) {
  require_sets_match(scores, sets);
  LossReport r = empty_report(sets.size());
  for (std::size_t i = 0; i < sets.size(); ++i) {
    if (sets.positives[i].size() != 1) {
      throw ContractError("infonce: expected exactly one positive at index " + std::to_string(i) + ", got " +
                          std::to_string(sets.positives[i].size()));
    }
    const auto p = sets.positives[i].front();
    const double li = infonce_row(scores.log_scores.row(i), p, sets.negatives[i], r.grad_log_scores.row(i));
    r.terms.push_back({i, p, li});
    r.loss += li;
  }
  finish_report(r, scores, sets, static_cast<double>(sets.size()));
  return r;
}

LossReport milnce_loss(const ScoreMatrix& scores, const PairIndexSets& sets) {
  require_sets_match(scores, sets);
  require_positives(sets, "milnce");
  LossReport r = empty_report(sets.size());
  for (std::size_t i = 0; i < sets.size(); ++i) {
    const double li = milnce_row(scores.log_scores.row(i), sets.positives[i], sets.negatives[i],
                                 r.grad_log_scores.row(i));
    r.terms.push_back({i, PairTerm::kAggregate, li});
    r.loss += li;
  }
  finish_report(r, scores, sets, static_cast<double>(sets.size()));
  return r;
}

LossReport supcon_loss(const ScoreMatrix& scores, const PairIndexSets& sets) {
  require_sets_match(scores, sets);
  require_positives(sets, "supcon");
  LossReport r = empty_report(sets.size());
  for (std::size_t i = 0; i < sets.size(); ++i) {
    const auto row = scores.log_scores.row(i);
    const double li = supcon_row(row, sets.positives[i], sets.negatives[i], r.grad_log_scores.row(i));
    const double denom = log_add_exp(log_sum_exp(row, sets.positives[i]), log_sum_exp(row, sets.negatives[i]));
    for (auto p : sets.positives[i]) r.terms.push_back({i, p, denom - row[p]});
    r.loss += li;
  }
  finish_report(r, scores, sets, static_cast<double>(sets.size()));
  return r;
}

LossReport mpnce_loss(const ScoreMatrix& scores, const PairIndexSets& sets, const DomainWeights& weights,
                      const MpnceOptions& options) {
  require_sets_match(scores, sets);
  LossReport r = empty_report(sets.size());
  std::vector<double> values;
  for (std::size_t i = 0; i < sets.size(); ++i) {
    const RowPlan plan = mpnce_plan(i, sets.positives[i], sets.layout, weights, options);
    values.clear();
    r.loss += mpnce_row(scores.log_scores.row(i), plan.iterated, plan.weights, sets.negatives[i],
                        r.grad_log_scores.row(i), &values);
    for (std::size_t a = 0; a < plan.iterated.size(); ++a) r.terms.push_back({i, plan.iterated[a], values[a]});
  }
  finish_report(r, scores, sets, static_cast<double>(sets.size()));
  return r;
}

LossReport compute_loss(const LossSpec& spec, const ScoreMatrix& scores, const PairIndexSets& sets) {
  switch (spec.kind) {
    case LossKind::infonce: return infonce_loss(scores, sets);
    case LossKind::milnce: return milnce_loss(scores, sets);
    case LossKind::supcon: return supcon_loss(scores, sets);
    case LossKind::mpnce:
      return mpnce_loss(scores, sets, domain_weights(sets.layout.image_views, sets.layout.text_views), spec.mpnce);
  }
  throw ContractError("compute_loss: unknown loss kind");
}

LossReport separated_loss(const LossSpec& spec, const ScoreMatrix& scores, const PairIndexSets& sets) {
  require_sets_match(scores, sets);
  const std::size_t n = sets.size();
  LossReport total = empty_report(n);
  const DomainWeights unit{1.0, 1.0, 1.0};
  const MpnceOptions opts{spec.mpnce.include_trivial, false};
  for (std::size_t d = 0; d < kDomainCount; ++d) {
    const auto domain = static_cast<Domain>(d);
    const PairIndexSets sub = restrict_to_domain(sets, domain);
    DenseMatrix grad(n, n);
    double loss = 0.0;
    std::size_t rows = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const auto row = scores.log_scores.row(i);
      const auto& pos = sub.positives[i];
      const auto& neg = sub.negatives[i];
      const bool trivial_here = domain_of(i, i, sets.layout) == domain;
      double li = 0.0;
      switch (spec.kind) {
        case LossKind::mpnce: {
          RowPlan plan = mpnce_plan(i, pos, sets.layout, unit, MpnceOptions{opts.include_trivial && trivial_here, false});
          if (plan.iterated.empty()) continue;
          li = mpnce_row(row, plan.iterated, plan.weights, neg, grad.row(i));
          break;
        }
        case LossKind::infonce:
          if (pos.empty()) continue;
          if (pos.size() != 1) throw ContractError("infonce: separated supervision needs one positive per domain");
          li = infonce_row(row, pos.front(), neg, grad.row(i));
          break;
        case LossKind::milnce:
          if (pos.empty()) continue;
          li = milnce_row(row, pos, neg, grad.row(i));
          break;
        case LossKind::supcon:
          if (pos.empty()) continue;
          li = supcon_row(row, pos, neg, grad.row(i));
          break;
      }
      total.terms.push_back({i, PairTerm::kAggregate, li});
      loss += li;
      ++rows;
    }
    if (rows == 0) continue;
    const double inv = 1.0 / static_cast<double>(rows);
    total.loss += loss * inv;
    grad *= inv;
    total.grad_log_scores += grad;
  }
  finish_report(total, scores, sets, 1.0);
  return total;
}

}  // namespace uniclip
