#include "uniclip/oracle_suite.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "uniclip/gradient_check.hpp"
#include "uniclip/losses.hpp"
#include "uniclip/rng.hpp"
#include "uniclip/similarity.hpp"
#include "uniclip/training.hpp"

namespace uniclip {

namespace {

struct LossFamily {
  std::string name;
  LossSpec spec;
  Supervision supervision = Supervision::unified;
};

std::vector<LossFamily> loss_families() {
  std::vector<LossFamily> out;
  out.push_back({"infonce", {LossKind::infonce, {}}, Supervision::unified});
  out.push_back({"milnce", {LossKind::milnce, {}}, Supervision::unified});
  out.push_back({"supcon", {LossKind::supcon, {}}, Supervision::unified});
  for (bool trivial : {false, true}) {
    for (bool weights : {false, true}) {
      std::string name = "mpnce";
      if (!trivial) name += "_no_trivial";
      if (!weights) name += "_no_weights";
      out.push_back({name, {LossKind::mpnce, {trivial, weights}}, Supervision::unified});
    }
  }
  out.push_back({"separated_mpnce", {LossKind::mpnce, {}}, Supervision::separated});
  out.push_back({"separated_milnce", {LossKind::milnce, {}}, Supervision::separated});
  return out;
}

LossReport evaluate(const LossFamily& f, const ScoreMatrix& sm, const PairIndexSets& sets) {
  return f.supervision == Supervision::unified ? compute_loss(f.spec, sm, sets) : separated_loss(f.spec, sm, sets);
}

void record(std::vector<OracleCheck>& checks, const std::string& name, double error, double tolerance) {
  for (auto& c : checks) {
    if (c.name == name) {
      c.error = std::max(c.error, error);
      return;
    }
  }
  checks.push_back({name, error, tolerance});
}

SimilarityParams random_params(SimilarityMode mode, Rng& rng) {
  SimilarityParams p;
  p.mode = mode;
  for (std::size_t d = 0; d < kDomainCount; ++d) {
    p.log_tau[d] = uniform(rng, std::log(0.05), 0.0);
    p.offset[d] = uniform(rng, -0.3, 0.3);
  }
  if (mode != SimilarityMode::domain_dependent) {
    p.log_tau.fill(p.log_tau[0]);
    p.offset.fill(mode == SimilarityMode::shared ? 0.0 : p.offset[0]);
  }
  return p;
}

void loss_level_checks(const LossFamily& f, const PairIndexSets& sets, Rng& rng, std::vector<OracleCheck>& checks) {
  const std::size_t m = sets.size();
  std::normal_distribution<double> normal(0.0, 2.0);
  DenseMatrix logs(m, m);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = i; j < m; ++j) logs(i, j) = logs(j, i) = normal(rng);
  }
  const LossReport report = evaluate(f, ScoreMatrix::from_log_scores(logs, sets.layout), sets);
  const std::vector<double> point(logs.values().begin(), logs.values().end());
  const auto fd_log = finite_difference_gradient(
      [&](std::span<const double> x) {
        DenseMatrix l(m, m, std::vector<double>(x.begin(), x.end()));
        return evaluate(f, ScoreMatrix::from_log_scores(std::move(l), sets.layout), sets).loss;
      },
      point);
  record(checks, f.name + " d/dlog(s)", max_relative_error(report.grad_log_scores.values(), fd_log, kGradientFloor),
         kLossLevelTolerance);

  // Relative perturbation s_k(1 + u_k): ∂L/∂u_k = s_k ∂L/∂s_k, independent of the score scale.
  DenseMatrix s(m, m);
  for (std::size_t k = 0; k < s.values().size(); ++k) s.values()[k] = std::exp(logs.values()[k]);
  const auto fd_u = finite_difference_gradient(
      [&](std::span<const double> u) {
        DenseMatrix sc = s;
        for (std::size_t k = 0; k < u.size(); ++k) sc.values()[k] *= 1.0 + u[k];
        return evaluate(f, ScoreMatrix::from_scores(sc, sets.layout), sets).loss;
      },
      std::vector<double>(m * m, 0.0));
  std::vector<double> analytic(m * m);
  for (std::size_t k = 0; k < analytic.size(); ++k) analytic[k] = s.values()[k] * report.grad_scores.values()[k];
  record(checks, f.name + " d/ds", max_relative_error(analytic, fd_u, kGradientFloor), kLossLevelTolerance);
}

void score_level_check(const LossFamily& f, const PairIndexSets& sets, SimilarityMode mode, Rng& rng,
                       std::vector<OracleCheck>& checks) {
  const std::size_t m = sets.size();
  constexpr std::size_t dim = 4;
  std::normal_distribution<double> normal(0.0, 1.0);
  DenseMatrix z(m, dim);
  for (auto& v : z.values()) v = normal(rng);
  const SimilarityParams params = random_params(mode, rng);

  const ScoreMatrix sm = score_matrix(z, sets.layout, params);
  const LossReport report = evaluate(f, sm, sets);
  const SimilarityGradients g = score_backward_log(sm, report.grad_log_scores, params);

  // Free coordinates: embeddings, then temperatures and offsets (one each when tied).
  const bool tied = mode != SimilarityMode::domain_dependent;
  const std::size_t n_tau = tied ? 1 : kDomainCount;
  const std::size_t n_off = mode == SimilarityMode::shared ? 0 : n_tau;
  std::vector<double> point(z.values().begin(), z.values().end());
  std::vector<double> analytic(g.embeddings.values().begin(), g.embeddings.values().end());
  for (std::size_t d = 0; d < n_tau; ++d) {
    point.push_back(params.log_tau[d]);
    analytic.push_back(g.log_tau[d]);
  }
  for (std::size_t d = 0; d < n_off; ++d) {
    point.push_back(params.offset[d]);
    analytic.push_back(g.offset[d]);
  }
  const auto fd = finite_difference_gradient(
      [&](std::span<const double> x) {
        DenseMatrix zz(m, dim, std::vector<double>(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(m * dim)));
        SimilarityParams p = params;
        for (std::size_t d = 0; d < kDomainCount; ++d) {
          p.log_tau[d] = x[m * dim + (tied ? 0 : d)];
          if (n_off > 0) p.offset[d] = x[m * dim + n_tau + (tied ? 0 : d)];
        }
        return evaluate(f, score_matrix(zz, sets.layout, p), sets).loss;
      },
      point);
  record(checks, f.name + " d/d(z,log tau,b) [" + to_string(mode) + "]",
         max_relative_error(analytic, fd, kGradientFloor), kGradientTolerance);
}

RunConfig tiny_config(AugmentationAwareness awareness, const LossFamily& f) {
  RunConfig c;
  c.world.n_pairs = 8;
  c.world.eval_fraction = 0.0;
  c.world.n_classes = 2;
  c.world.n_hues = 2;
  c.world.latent_dim = 2;
  c.world.resolution = 4;
  c.encoder.image_hidden = 8;
  c.encoder.representation_width = 4;
  c.encoder.augmentation_width = 4;
  c.encoder.unified_width = 6;
  c.encoder.head_blocks = 1;
  c.encoder.head_expansion = 1;
  c.encoder.text_hidden = 8;
  c.encoder.text_representation_width = 8;
  c.encoder.awareness = awareness;
  c.loss = f.spec;
  c.supervision = f.supervision;
  c.encoder.pixel_count = SyntheticImage::kChannels * 4 * 4;
  c.encoder.text_dim = c.world.text_dim();
  return c;
}

void end_to_end_check(AugmentationAwareness awareness, const LossFamily& f, std::uint64_t seed,
                      std::vector<OracleCheck>& checks) {
  const RunConfig cfg = tiny_config(awareness, f);
  const Dataset data = generate_dataset(cfg.world, seed);
  Rng init = substream(seed, "oracle-init");
  UniclipModel model(cfg.encoder, SimilarityMode::domain_dependent, 0.1, init);
  Rng rng = substream(seed, "oracle-batch");
  auto& lt = model.params().value(UniclipModel::kLogTauName);
  auto& off = model.params().value(UniclipModel::kOffsetName);
  for (std::size_t d = 0; d < kDomainCount; ++d) {
    lt(0, d) = uniform(rng, std::log(0.05), 0.0);
    off(0, d) = uniform(rng, -0.3, 0.3);
  }
  const std::vector<const SyntheticPair*> samples{&data.train[0], &data.train[1]};
  const BatchInputs inputs = assemble_batch_inputs(samples, cfg.view_policies(), 1, 0.0, rng);

  const StepResult step = forward_backward(model, inputs, f.spec, f.supervision);
  const std::vector<double> analytic = step.grads.flatten(model.params());
  const std::vector<double> point = model.params().flatten();
  const auto fd = finite_difference_gradient(
      [&](std::span<const double> x) {
        model.params().unflatten(std::vector<double>(x.begin(), x.end()));
        const DenseMatrix z = model.forward(inputs.images, inputs.texts);
        const ScoreMatrix sm = score_matrix(z, inputs.layout, model.similarity());
        return evaluate(f, sm, build_pair_sets(2, cfg.image_views(), 1)).loss;
      },
      point);
  model.params().unflatten(point);
  record(checks, "end-to-end " + f.name + " [" + to_string(awareness) + "]",
         max_relative_error(analytic, fd, kGradientFloor), kGradientTolerance);
}

}  // namespace

std::vector<OracleCheck> run_oracle_suite(const OracleSuiteOptions& options) {
  std::vector<OracleCheck> checks;
  Rng rng = substream(options.seed, "oracle");
  const auto families = loss_families();
  for (std::size_t i = 0; i < options.loss_instances; ++i) {
    const std::size_t n = 2 + i % 2;
    const std::size_t v = 1 + (i / 2) % 3;
    const std::size_t t = 1 + (i / 6) % 2;
    const PairIndexSets sets = build_pair_sets(n, v, t);
    for (const auto& f : families) {
      if (f.spec.kind == LossKind::infonce && v + t != 2) continue;
      loss_level_checks(f, sets, rng, checks);
      const auto mode = static_cast<SimilarityMode>(i % 3);
      score_level_check(f, sets, mode, rng, checks);
    }
  }
  if (options.end_to_end) {
    for (auto awareness :
         {AugmentationAwareness::agnostic, AugmentationAwareness::head, AugmentationAwareness::encoder}) {
      for (const auto& f : families) {
        if (f.spec.kind == LossKind::infonce) continue;
        end_to_end_check(awareness, f, options.seed, checks);
      }
    }
  }
  return checks;
}

}  // namespace uniclip
