#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "uniclip/errors.hpp"
#include "uniclip/io.hpp"
#include "uniclip/training.hpp"

using namespace uniclip;

namespace {

RunConfig small_run(std::uint64_t seed = 1) {
  RunConfig c = default_config();
  c.seed = seed;
  c.world.n_pairs = 240;
  c.world.eval_fraction = 0.25;
  c.world.resolution = 6;
  c.encoder.image_hidden = 16;
  c.encoder.representation_width = 8;
  c.encoder.augmentation_width = 4;
  c.encoder.unified_width = 8;
  c.encoder.head_blocks = 1;
  c.encoder.head_expansion = 2;
  c.encoder.text_hidden = 16;
  c.encoder.text_representation_width = 8;
  c.train.epochs = 3;
  c.train.batch_size = 16;
  c.train.optimizer.warmup_epochs = 1;
  c.train.probe_train_pairs = 120;
  c.train.probe_steps = 20;
  c.train.density_batch = 16;
  c.validate();
  return c;
}

std::vector<const SyntheticPair*> first(const Dataset& d, std::size_t n) {
  std::vector<const SyntheticPair*> out;
  for (std::size_t k = 0; k < n; ++k) out.push_back(&d.train[k]);
  return out;
}

}  // namespace

TEST_CASE("batch layout: weak first view, text rows last") {
  const RunConfig cfg = small_run();
  const Dataset data = generate_dataset(cfg.world, 3);
  Rng rng(4);
  Rng init(5);
  UniclipModel model(cfg.encoder, cfg.similarity, cfg.initial_tau, init);
  const auto samples = first(data, 4);
  const EmbeddingBatch batch = assemble_batch(samples, cfg.view_policies(), 1, 0.0, model, rng);
  CHECK(batch.layout == BatchLayout{4, 3, 1});
  CHECK(batch.embeddings.rows() == 16);
  for (std::size_t k = 0; k < 4; ++k) {
    CHECK(batch.modality_of(k) == Modality::image);
    CHECK(batch.modality_of(k + 12) == Modality::text);
    CHECK(batch.view[k + 4] == 1);
    // Weak policy: never flipped or grayscaled.
    CHECK_FALSE(batch.instructions[k].flipped);
    CHECK_FALSE(batch.instructions[k].grayscaled);
  }
  CHECK(batch.instructions.size() == 12);
}

TEST_CASE("batch assembly contracts and determinism") {
  const RunConfig cfg = small_run();
  const Dataset data = generate_dataset(cfg.world, 3);
  Rng rng(1);
  CHECK_THROWS_AS(assemble_batch_inputs(first(data, 1), cfg.view_policies(), 1, 0.0, rng), ContractError);
  const std::vector<AugmentationPolicy> strong_first{AugmentationPolicy::strong(), AugmentationPolicy::weak()};
  CHECK_THROWS_AS(assemble_batch_inputs(first(data, 3), strong_first, 1, 0.0, rng), ContractError);

  Rng a(9), b(9);
  const BatchInputs x = assemble_batch_inputs(first(data, 5), cfg.view_policies(), 2, 0.1, a);
  const BatchInputs y = assemble_batch_inputs(first(data, 5), cfg.view_policies(), 2, 0.1, b);
  CHECK(x.images.pixels == y.images.pixels);
  CHECK(x.texts == y.texts);
  CHECK(x.texts.rows() == 10);
  CHECK_FALSE(x.texts.row(0)[0] == x.texts.row(5)[0]);
}

TEST_CASE("learning-rate schedule") {
  CHECK(scheduled_lr(1.0, 0, 10, 100) == doctest::Approx(0.1));
  CHECK(scheduled_lr(1.0, 9, 10, 100) == doctest::Approx(1.0));
  CHECK(scheduled_lr(1.0, 10, 10, 100) == doctest::Approx(1.0));
  CHECK(scheduled_lr(1.0, 55, 10, 100) == doctest::Approx(0.5));
  CHECK(scheduled_lr(1.0, 100, 10, 100) == doctest::Approx(0.0));
  double prev = 2.0;
  for (std::size_t s = 10; s <= 100; ++s) {
    const double lr = scheduled_lr(1.0, s, 10, 100);
    CHECK(lr <= prev);
    prev = lr;
  }
}

TEST_CASE("zero learning rate keeps parameters and metrics constant") {
  RunConfig cfg = small_run();
  cfg.train.optimizer.lr = 0.0;
  const TrainResult r = train(cfg);
  Rng init = substream(cfg.seed, "init");
  UniclipModel fresh(cfg.encoder, cfg.similarity, cfg.initial_tau, init);
  CHECK(r.model->params().flatten() == fresh.params().flatten());
  REQUIRE(r.history.size() == 3);
  for (const auto& rec : r.history) {
    CHECK(rec.retrieval.r1_image_to_text == r.history[0].retrieval.r1_image_to_text);
    CHECK(rec.probe_accuracy == r.history[0].probe_accuracy);
    CHECK(rec.auc_all == r.history[0].auc_all);
  }
}

TEST_CASE("training is deterministic and byte-identical in its metrics CSV") {
  const RunConfig cfg = small_run(7);
  const TrainResult a = train(cfg);
  const TrainResult b = train(cfg);
  CHECK(metrics_csv(a.config, a.history) == metrics_csv(b.config, b.history));
  const TrainResult c = train(small_run(8));
  CHECK(metrics_csv(a.config, a.history) != metrics_csv(c.config, c.history));
}

TEST_CASE("training reduces the loss and keeps metrics in range") {
  RunConfig cfg = small_run(2);
  cfg.train.epochs = 5;
  const TrainResult r = train(cfg);
  REQUIRE(r.history.size() == 5);
  CHECK(r.history.back().loss < r.history.front().loss);
  for (const auto& rec : r.history) {
    CHECK(rec.retrieval.r1_image_to_text <= rec.retrieval.r5_image_to_text);
    CHECK(rec.retrieval.r1_text_to_image <= rec.retrieval.r5_text_to_image);
    CHECK(rec.probe_accuracy >= 0.0);
    CHECK(rec.probe_accuracy <= 1.0);
    for (std::size_t d = 0; d < kDomainCount; ++d) {
      CHECK(rec.auc[d] >= 0.0);
      CHECK(rec.auc[d] <= 1.0);
      CHECK(rec.tau[d] > 0.0);
    }
  }
  CHECK(r.history.back().epoch == 5);
}

TEST_CASE("gradient step moves every trainable parameter") {
  const RunConfig cfg = small_run();
  const Dataset data = generate_dataset(cfg.world, 3);
  Rng rng(2), init(3);
  UniclipModel model(cfg.encoder, cfg.similarity, cfg.initial_tau, init);
  const BatchInputs inputs = assemble_batch_inputs(first(data, 4), cfg.view_policies(), 1, 0.0, rng);
  const StepResult step = forward_backward(model, inputs, cfg.loss, cfg.supervision);
  CHECK(std::isfinite(step.report.loss));
  CHECK(step.grads.all_finite());
  for (const auto& e : model.params().entries()) {
    CAPTURE(e.name);
    const auto& g = step.grads.at(e.name);
    CHECK(std::any_of(g.values().begin(), g.values().end(), [](double v) { return v != 0.0; }));
  }
}

TEST_CASE("retrieval recalls on planted and random scores") {
  Rng rng(11);
  const WorldConfig world = small_run().world;
  const Dataset d = generate_dataset(world, 4);
  const std::size_t n = d.eval.size();
  // Plant the answer: both sides embed the exact text features.
  DenseMatrix planted(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) planted(i, j) = cosine(d.eval[i].text_features, d.eval[j].text_features);
  }
  const RetrievalResult perfect = retrieval_recalls(planted);
  CHECK(perfect.r1_image_to_text == 1.0);
  CHECK(perfect.r1_text_to_image == 1.0);

  DenseMatrix noise(500, 500);
  for (auto& v : noise.values()) v = uniform(rng, -1.0, 1.0);
  const RetrievalResult chance = retrieval_recalls(noise);
  // Binomial(500, 1/500): mean one hit; eight hits lie far in the tail.
  CHECK(chance.r1_image_to_text <= 8.0 / 500.0);
  CHECK(chance.r1_text_to_image <= 8.0 / 500.0);
  CHECK(chance.r1_image_to_text <= chance.r5_image_to_text);
  CHECK_THROWS_AS(retrieval_recalls(DenseMatrix(4, 4)), ContractError);
}

TEST_CASE("recall ranks ties pessimistically") {
  const DenseMatrix constant(6, 6, 0.3);
  CHECK(recall_at_k(constant, 1, true) == 0.0);
  CHECK(recall_at_k(constant, 5, true) == 0.0);
}

TEST_CASE("untrained model retrieves near chance") {
  RunConfig cfg = small_run();
  cfg.world.n_pairs = 2000;
  cfg.world.eval_fraction = 0.2;
  const Dataset data = generate_dataset(cfg.world, 6);
  Rng init(6);
  UniclipModel model(cfg.encoder, cfg.similarity, cfg.initial_tau, init);
  const RetrievalResult r = eval_retrieval(model, data.eval);
  CHECK(r.r1_mean() <= 10.0 / 400.0);
}

TEST_CASE("separation AUC and histograms") {
  const std::vector<double> pos{0.5, 0.6, 0.9}, neg{-0.2, 0.1, 0.4};
  CHECK(separation_auc(pos, neg) == 1.0);
  CHECK(separation_auc(neg, pos) == 0.0);
  CHECK(separation_auc(pos, pos) == 0.5);
  CHECK(separation_auc({}, pos) == 0.5);
  Rng rng(3);
  std::vector<double> a(4000), b(4000);
  for (auto& v : a) v = uniform(rng, -1.0, 1.0);
  for (auto& v : b) v = uniform(rng, -1.0, 1.0);
  CHECK(std::abs(separation_auc(a, b) - 0.5) < 0.03);
  const Histogram h = make_histogram(pos, 4);
  CHECK(h.total() == 3);
  CHECK(h.counts == std::vector<std::size_t>{0, 0, 0, 3});
  CHECK(make_histogram(std::vector<double>{1.0, -1.0}, 20).total() == 2);
}

TEST_CASE("density statistics exclude the trivial pair") {
  const PairIndexSets sets = build_pair_sets(2, 1, 1);
  DenseMatrix cos(4, 4, -0.5);
  for (std::size_t i = 0; i < 4; ++i) cos(i, i) = 1.0;
  cos(0, 2) = cos(2, 0) = 0.8;
  cos(1, 3) = cos(3, 1) = 0.8;
  const DensityStats s = similarity_density_stats(cos, sets);
  const auto it = static_cast<std::size_t>(Domain::image_text);
  CHECK(s.positive[it].total() == 4);
  CHECK(s.positive_mean[it] == doctest::Approx(0.8));
  CHECK(s.auc[it] == 1.0);
  CHECK(s.auc_all == 1.0);
  CHECK(s.positive[0].total() == 0);
}

TEST_CASE("linear probe separates separable classes") {
  DenseMatrix x(40, 2);
  std::vector<std::size_t> y(40);
  Rng rng(1);
  for (std::size_t i = 0; i < 40; ++i) {
    y[i] = i % 2;
    x(i, 0) = (y[i] == 0 ? -2.0 : 2.0) + uniform(rng, -0.5, 0.5);
    x(i, 1) = uniform(rng, -1.0, 1.0);
  }
  CHECK(linear_probe_accuracy(x, y, x, y, 2, {}) == 1.0);
}
