#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "uniclip/config.hpp"
#include "uniclip/encoders.hpp"
#include "uniclip/losses.hpp"
#include "uniclip/metrics.hpp"
#include "uniclip/param_store.hpp"
#include "uniclip/synthetic_world.hpp"

namespace uniclip {

enum class Modality { image, text };

/// Network inputs of one batch, laid out view-major: row a*N + k is view a of sample k,
/// image views first (view 0 weak), then text views.
struct BatchInputs {
  BatchLayout layout;
  ImageBatch images;
  DenseMatrix texts;
  std::vector<AugmentationInstruction> instructions;  // one per image row
  std::vector<std::size_t> sample_ids;                // dataset position of sample k
};

struct EmbeddingBatch {
  BatchLayout layout;
  DenseMatrix embeddings;  // layout.size() × unified width
  std::vector<AugmentationInstruction> instructions;
  std::vector<Modality> modality;
  std::vector<std::size_t> view;

  [[nodiscard]] Modality modality_of(std::size_t i) const { return modality.at(i); }
};

/// Draws one instruction per (sample, image view) from `view_policies` in sample order and
/// renders the views. Extra text views (beyond the first) add Gaussian noise of `text_noise`.
/// Throws ContractError for fewer than two samples or a first view that is not weak.
BatchInputs assemble_batch_inputs(std::span<const SyntheticPair* const> samples,
                                  const std::vector<AugmentationPolicy>& view_policies, std::size_t text_views,
                                  double text_noise, Rng& rng);

/// assemble_batch_inputs followed by a forward pass through `model`.
EmbeddingBatch assemble_batch(std::span<const SyntheticPair* const> samples,
                              const std::vector<AugmentationPolicy>& view_policies, std::size_t text_views,
                              double text_noise, UniclipModel& model, Rng& rng);

struct StepResult {
  LossReport report;
  ScoreMatrix scores;
  Gradients grads;
};

/// Full forward and backward pass: embeddings → scores → loss → gradients for every
/// trainable parameter including log τ and b.
StepResult forward_backward(UniclipModel& model, const BatchInputs& inputs, const LossSpec& loss,
                            Supervision supervision);

/// Learning rate at optimizer step `step` (0-based): linear warmup then cosine decay to zero.
double scheduled_lr(double base_lr, std::size_t step, std::size_t warmup_steps, std::size_t total_steps);

struct MetricsRecord {
  std::size_t epoch = 0;
  double loss = 0.0;
  double lr = 0.0;
  RetrievalResult retrieval;
  double probe_accuracy = 0.0;
  std::array<double, kDomainCount> positive_cosine{};
  std::array<double, kDomainCount> negative_cosine{};
  std::array<double, kDomainCount> auc{};
  double auc_all = 0.5;
  std::array<double, kDomainCount> tau{};
  std::array<double, kDomainCount> offset{};
};

/// Flat (name, value) view of a record; the column order of the metrics CSV.
std::vector<std::pair<std::string, double>> metric_fields(const MetricsRecord& rec);

/// Evaluation pairs embedded without augmentation and ranked by the learned image-text score.
RetrievalResult eval_retrieval(UniclipModel& model, std::span<const SyntheticPair> pairs);

/// Linear probe on frozen representations h of the first `train_pairs` training pairs.
double eval_probe(UniclipModel& model, const Dataset& data, std::size_t train_pairs, std::size_t n_classes,
                  const ProbeConfig& cfg);

/// Density statistics on the fixed evaluation batch of a run (same instructions every call).
DensityStats eval_density(UniclipModel& model, const RunConfig& cfg, const Dataset& data);

struct TrainOptions {
  std::function<void(const MetricsRecord&)> on_epoch;
};

struct TrainResult {
  RunConfig config;
  std::unique_ptr<UniclipModel> model;
  std::vector<MetricsRecord> history;
  DensityStats final_density;
};

/// Algorithm loop on the synthetic world. Deterministic given the config (including seed).
/// A non-finite loss or gradient aborts with a TrainingError carrying a batch diagnostic.
TrainResult train(const RunConfig& cfg, const TrainOptions& options = {});

}  // namespace uniclip
