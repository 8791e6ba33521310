#include "uniclip/training.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <sstream>

#include "uniclip/errors.hpp"

namespace uniclip {

namespace {

std::vector<const SyntheticPair*> pointers(std::span<const SyntheticPair> pairs, std::size_t count) {
  std::vector<const SyntheticPair*> out;
  out.reserve(count);
  for (std::size_t k = 0; k < count; ++k) out.push_back(&pairs[k]);
  return out;
}

AdamWConfig adamw_config(const OptimizerConfig& o, double lr) {
  AdamWConfig a;
  a.lr = lr;
  a.beta1 = o.beta1;
  a.beta2 = o.beta2;
  a.eps = o.eps;
  a.weight_decay = o.weight_decay;
  return a;
}

std::string batch_diagnostic(const UniclipModel& model, const BatchInputs& inputs, const StepResult& step,
                             std::size_t epoch, std::size_t iteration, double lr) {
  std::ostringstream out;
  out.precision(17);
  out << "non-finite value at epoch " << epoch << " step " << iteration << " (lr " << lr << ")\n";
  out << "loss: " << step.report.loss << "\n";
  const auto sim = model.similarity();
  for (std::size_t d = 0; d < kDomainCount; ++d) {
    out << to_string(static_cast<Domain>(d)) << ": log_tau " << sim.log_tau[d] << " offset " << sim.offset[d]
        << "\n";
  }
  out << "samples:";
  for (auto s : inputs.sample_ids) out << ' ' << s;
  out << "\nembeddings finite: " << (step.scores.unit.all_finite() ? "yes" : "no")
      << ", log scores finite: " << (step.scores.log_scores.all_finite() ? "yes" : "no") << "\n";
  for (const auto& [name, g] : step.grads.items()) {
    if (!g.all_finite()) out << "non-finite gradient: " << name << "\n";
  }
  return out.str();
}

}  // namespace

BatchInputs assemble_batch_inputs(std::span<const SyntheticPair* const> samples,
                                  const std::vector<AugmentationPolicy>& view_policies, std::size_t text_views,
                                  double text_noise, Rng& rng) {
  const std::size_t n = samples.size();
  if (n < 2) throw ContractError("assemble_batch: need N >= 2 samples so every anchor has negatives");
  if (view_policies.empty() || view_policies.front().strength != AugmentationStrength::weak) {
    throw ContractError("assemble_batch: the first image view must use the weak policy");
  }
  if (text_views == 0) throw ContractError("assemble_batch: need at least one text view");
  const std::size_t v = view_policies.size();
  const std::size_t pixels = samples.front()->image.pixel_count();
  const std::size_t text_dim = samples.front()->text_features.size();

  BatchInputs out;
  out.layout = BatchLayout{n, v, text_views};
  out.images.pixels = DenseMatrix(v * n, pixels);
  out.images.instructions = DenseMatrix(v * n, kInstructionWidth);
  out.texts = DenseMatrix(text_views * n, text_dim);
  out.instructions.resize(v * n);
  out.sample_ids.resize(n);

  std::normal_distribution<double> normal(0.0, 1.0);
  for (std::size_t k = 0; k < n; ++k) {
    const SyntheticPair& pair = *samples[k];
    for (std::size_t a = 0; a < v; ++a) {
      const std::size_t row = a * n + k;
      const auto instr = sample_instruction(view_policies[a], rng);
      const auto img = apply_augmentation(pair.image, instr);
      std::copy(img.pixels().begin(), img.pixels().end(), out.images.pixels.row(row).begin());
      const auto enc = encode_instruction(instr);
      std::copy(enc.begin(), enc.end(), out.images.instructions.row(row).begin());
      out.instructions[row] = instr;
    }
    for (std::size_t t = 0; t < text_views; ++t) {
      auto dst = out.texts.row(t * n + k);
      for (std::size_t c = 0; c < text_dim; ++c) {
        dst[c] = pair.text_features[c] + (t > 0 ? text_noise * normal(rng) : 0.0);
      }
    }
  }
  return out;
}

EmbeddingBatch assemble_batch(std::span<const SyntheticPair* const> samples,
                              const std::vector<AugmentationPolicy>& view_policies, std::size_t text_views,
                              double text_noise, UniclipModel& model, Rng& rng) {
  BatchInputs inputs = assemble_batch_inputs(samples, view_policies, text_views, text_noise, rng);
  EmbeddingBatch out;
  out.layout = inputs.layout;
  out.embeddings = model.forward(inputs.images, inputs.texts);
  out.instructions = std::move(inputs.instructions);
  const std::size_t total = out.layout.size();
  out.modality.resize(total);
  out.view.resize(total);
  for (std::size_t i = 0; i < total; ++i) {
    out.modality[i] = out.layout.is_image(i) ? Modality::image : Modality::text;
    out.view[i] = out.layout.view_of(i);
  }
  return out;
}

StepResult forward_backward(UniclipModel& model, const BatchInputs& inputs, const LossSpec& loss,
                            Supervision supervision) {
  const SimilarityParams sim = model.similarity();
  const DenseMatrix z = model.forward(inputs.images, inputs.texts);
  StepResult out;
  out.scores = score_matrix(z, inputs.layout, sim);
  const PairIndexSets sets = build_pair_sets(inputs.layout.n, inputs.layout.image_views, inputs.layout.text_views);
  out.report = supervision == Supervision::unified ? compute_loss(loss, out.scores, sets)
                                                   : separated_loss(loss, out.scores, sets);
  const SimilarityGradients sg = score_backward_log(out.scores, out.report.grad_log_scores, sim);
  out.grads = Gradients::zeros_like(model.params());
  model.backward(sg.embeddings, out.grads);
  model.accumulate_similarity(sg, out.grads);
  return out;
}

double scheduled_lr(double base_lr, std::size_t step, std::size_t warmup_steps, std::size_t total_steps) {
  if (step < warmup_steps) {
    return base_lr * static_cast<double>(step + 1) / static_cast<double>(warmup_steps);
  }
  if (total_steps <= warmup_steps) return base_lr;
  const double progress =
      static_cast<double>(step - warmup_steps) / static_cast<double>(total_steps - warmup_steps);
  return base_lr * 0.5 * (1.0 + std::cos(std::numbers::pi * std::min(progress, 1.0)));
}

std::vector<std::pair<std::string, double>> metric_fields(const MetricsRecord& rec) {
  static constexpr const char* kSuffix[kDomainCount] = {"ii", "it", "tt"};
  std::vector<std::pair<std::string, double>> f{{"epoch", static_cast<double>(rec.epoch)},
                                                {"loss", rec.loss},
                                                {"lr", rec.lr},
                                                {"r1_i2t", rec.retrieval.r1_image_to_text},
                                                {"r5_i2t", rec.retrieval.r5_image_to_text},
                                                {"r1_t2i", rec.retrieval.r1_text_to_image},
                                                {"r5_t2i", rec.retrieval.r5_text_to_image},
                                                {"r1_mean", rec.retrieval.r1_mean()},
                                                {"probe_acc", rec.probe_accuracy}};
  for (std::size_t d = 0; d < kDomainCount; ++d) f.emplace_back(std::string("pos_cos_") + kSuffix[d], rec.positive_cosine[d]);
  for (std::size_t d = 0; d < kDomainCount; ++d) f.emplace_back(std::string("neg_cos_") + kSuffix[d], rec.negative_cosine[d]);
  for (std::size_t d = 0; d < kDomainCount; ++d) f.emplace_back(std::string("auc_") + kSuffix[d], rec.auc[d]);
  f.emplace_back("auc_all", rec.auc_all);
  for (std::size_t d = 0; d < kDomainCount; ++d) f.emplace_back(std::string("tau_") + kSuffix[d], rec.tau[d]);
  for (std::size_t d = 0; d < kDomainCount; ++d) f.emplace_back(std::string("b_") + kSuffix[d], rec.offset[d]);
  return f;
}

RetrievalResult eval_retrieval(UniclipModel& model, std::span<const SyntheticPair> pairs) {
  const std::size_t n = pairs.size();
  if (n < 5) throw ContractError("eval_retrieval: need at least 5 evaluation pairs for R@5");
  std::vector<SyntheticImage> images;
  images.reserve(n);
  DenseMatrix texts(n, pairs.front().text_features.size());
  for (std::size_t k = 0; k < n; ++k) {
    images.push_back(pairs[k].image);
    std::copy(pairs[k].text_features.begin(), pairs[k].text_features.end(), texts.row(k).begin());
  }
  ImageBatch batch{flatten_images(images),
                   encode_instructions(std::vector<AugmentationInstruction>(n, AugmentationInstruction::identity()))};
  const DenseMatrix zi = model.embed_images(batch);
  const DenseMatrix zt = model.embed_texts(texts);
  const SimilarityParams sim = model.similarity();
  DenseMatrix scores(n, n);
  std::vector<double> ni(n), nt(n);
  for (std::size_t k = 0; k < n; ++k) {
    ni[k] = std::sqrt(dot(zi.row(k), zi.row(k)));
    nt[k] = std::sqrt(dot(zt.row(k), zt.row(k)));
  }
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < n; ++c) {
      const double denom = std::max(ni[r] * nt[c], 1e-12);
      scores(r, c) = log_score(dot(zi.row(r), zt.row(c)) / denom, sim, Domain::image_text);
    }
  }
  return retrieval_recalls(scores);
}

double eval_probe(UniclipModel& model, const Dataset& data, std::size_t train_pairs, std::size_t n_classes,
                  const ProbeConfig& cfg) {
  const std::size_t n_train = std::min(train_pairs, data.train.size());
  auto features = [&](const std::vector<SyntheticPair>& pairs, std::size_t count, std::vector<std::size_t>& labels) {
    std::vector<SyntheticImage> images;
    images.reserve(count);
    labels.clear();
    for (std::size_t k = 0; k < count; ++k) {
      images.push_back(pairs[k].image);
      labels.push_back(pairs[k].scene.label);
    }
    return model.image_representation(flatten_images(images));
  };
  std::vector<std::size_t> ytr, yev;
  const DenseMatrix htr = features(data.train, n_train, ytr);
  const DenseMatrix hev = features(data.eval, data.eval.size(), yev);
  return linear_probe_accuracy(htr, ytr, hev, yev, n_classes, cfg);
}

DensityStats eval_density(UniclipModel& model, const RunConfig& cfg, const Dataset& data) {
  const std::size_t n = std::min(cfg.train.density_batch, data.eval.size());
  const auto samples = pointers(data.eval, n);
  Rng rng = substream(cfg.seed, "eval-augment");
  const BatchInputs inputs =
      assemble_batch_inputs(samples, cfg.view_policies(), cfg.text_views, cfg.world.noise, rng);
  const DenseMatrix z = model.forward(inputs.images, inputs.texts);
  const ScoreMatrix sm = score_matrix(z, inputs.layout, model.similarity());
  return similarity_density_stats(sm.cosine, build_pair_sets(n, inputs.layout.image_views, inputs.layout.text_views));
}

TrainResult train(const RunConfig& config, const TrainOptions& options) {
  RunConfig cfg = config;
  cfg.validate();
  TrainResult result;

  const Dataset data = generate_dataset(cfg.world, substream(cfg.seed, "data")());
  Rng init_rng = substream(cfg.seed, "init");
  Rng augment_rng = substream(cfg.seed, "augment");
  Rng shuffle_rng = substream(cfg.seed, "shuffle");
  result.model = std::make_unique<UniclipModel>(cfg.encoder, cfg.similarity, cfg.initial_tau, init_rng);
  UniclipModel& model = *result.model;

  const auto policies = cfg.view_policies();
  const std::size_t n = cfg.train.batch_size;
  const std::size_t steps_per_epoch = data.train.size() / n;
  const std::size_t total_steps = steps_per_epoch * cfg.train.epochs;
  const auto warmup_steps = static_cast<std::size_t>(
      std::llround(cfg.train.optimizer.warmup_epochs * static_cast<double>(steps_per_epoch)));
  const ProbeConfig probe{cfg.train.probe_steps, cfg.train.probe_lr};

  std::vector<std::size_t> order(data.train.size());
  std::size_t global_step = 0;
  for (std::size_t epoch = 1; epoch <= cfg.train.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    double loss_sum = 0.0;
    double lr = 0.0;
    for (std::size_t it = 0; it < steps_per_epoch; ++it, ++global_step) {
      std::vector<const SyntheticPair*> samples(n);
      for (std::size_t k = 0; k < n; ++k) samples[k] = &data.train[order[it * n + k]];
      BatchInputs inputs = assemble_batch_inputs(samples, policies, cfg.text_views, cfg.world.noise, augment_rng);
      for (std::size_t k = 0; k < n; ++k) inputs.sample_ids[k] = order[it * n + k];
      lr = scheduled_lr(cfg.train.optimizer.lr, global_step, warmup_steps, total_steps);
      StepResult step = forward_backward(model, inputs, cfg.loss, cfg.supervision);
      if (!std::isfinite(step.report.loss) || !step.grads.all_finite()) {
        throw TrainingError(batch_diagnostic(model, inputs, step, epoch, it, lr));
      }
      adamw_step(model.params(), step.grads, adamw_config(cfg.train.optimizer, lr));
      loss_sum += step.report.loss;
    }

    MetricsRecord rec;
    rec.epoch = epoch;
    rec.loss = loss_sum / static_cast<double>(steps_per_epoch);
    rec.lr = lr;
    rec.retrieval = eval_retrieval(model, data.eval);
    rec.probe_accuracy = eval_probe(model, data, cfg.train.probe_train_pairs, cfg.world.n_classes, probe);
    const DensityStats density = eval_density(model, cfg, data);
    rec.positive_cosine = density.positive_mean;
    rec.negative_cosine = density.negative_mean;
    rec.auc = density.auc;
    rec.auc_all = density.auc_all;
    const auto sim = model.similarity();
    for (std::size_t d = 0; d < kDomainCount; ++d) {
      rec.tau[d] = sim.tau(static_cast<Domain>(d));
      rec.offset[d] = sim.bias(static_cast<Domain>(d));
    }
    result.history.push_back(rec);
    if (epoch == cfg.train.epochs) result.final_density = density;
    if (options.on_epoch) options.on_epoch(rec);
  }
  result.config = cfg;
  return result;
}

}  // namespace uniclip
